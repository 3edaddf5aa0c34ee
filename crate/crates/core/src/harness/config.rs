//! Flat `key = value` configuration with dotted keys.

use std::collections::BTreeMap;
use std::path::Path;

use super::HarnessError;
use crate::critics::CriticAlg;
use crate::emphasis::{DirectVariant, InterestFunction};

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agent {
    Ace,
    OffPac,
    TrueAce,
    Dpg,
    TrueDpge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmphasisMode {
    Trace,
    Direct,
    Ideal,
    TrueOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticKind {
    Learned(CriticAlg),
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Tile,
    Aggregate,
    Tabular,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActorInit {
    Uniform,
    /// Preference `ln 9` for action 0 on every feature, giving probability 0.9
    /// on two-action one-hot features.
    P09,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: String,
    pub agent: Agent,
    pub total_steps: usize,
    pub seed: u64,
    pub actor_alpha: f64,
    pub actor_tau: f64,
    pub actor_init: ActorInit,
    pub eta: f64,
    pub critic: CriticKind,
    pub critic_alpha: f64,
    pub critic_lambda: f64,
    pub critic_lambda_c: Option<f64>,
    pub critic_alpha_h_ratio: f64,
    pub critic_feature: Option<FeatureKind>,
    pub emphasis_mode: EmphasisMode,
    pub emphasis_beta: f64,
    pub emphasis_variant: DirectVariant,
    pub emphasis_feature_from_actor: bool,
    pub interest: InterestFunction,
    pub feature_kind: FeatureKind,
    pub feature_tilings: usize,
    pub feature_tiles: usize,
    pub feature_bias: bool,
    pub eval_every: usize,
    pub eval_rollouts: usize,
    pub eval_cap: usize,
    pub eval_gamma: f64,
    pub eval_pool_horizon: usize,
    pub eval_pool_stride: usize,
    pub output: Option<String>,
    /// Every key as given, for provenance headers.
    pub raw: BTreeMap<String, String>,
}

pub const KNOWN_KEYS: [&str; 31] = [
    "env",
    "agent",
    "total_steps",
    "seed",
    "output",
    "actor.alpha",
    "actor.eta",
    "actor.tau",
    "actor.init",
    "critic.alg",
    "critic.alpha",
    "critic.lambda",
    "critic.lambda_c",
    "critic.alpha_h_ratio",
    "critic.feature",
    "emphasis.mode",
    "emphasis.eta",
    "emphasis.beta",
    "emphasis.variant",
    "emphasis.feature",
    "interest.kind",
    "feature.kind",
    "feature.tilings",
    "feature.tiles",
    "feature.bias",
    "eval.every",
    "eval.rollouts",
    "eval.cap",
    "eval.gamma",
    "eval.pool_horizon",
    "eval.pool_stride",
];

fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, HarnessError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| HarnessError::Config(format!("{key}: cannot parse {v:?}"))),
    }
}

fn boolean(map: &BTreeMap<String, String>, key: &str, default: bool) -> Result<bool, HarnessError> {
    match map.get(key).map(String::as_str) {
        None => Ok(default),
        Some("true" | "1" | "yes") => Ok(true),
        Some("false" | "0" | "no") => Ok(false),
        Some(v) => Err(HarnessError::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

fn parse_feature_kind(v: &str) -> Result<FeatureKind, HarnessError> {
    match v {
        "tile" | "tile-coder" => Ok(FeatureKind::Tile),
        "aggregate" | "aggregation" | "aggregation-one-hot" => Ok(FeatureKind::Aggregate),
        "tabular" => Ok(FeatureKind::Tabular),
        "identity" | "identity-bias" => Ok(FeatureKind::Identity),
        other => Err(HarnessError::Config(format!("unknown feature kind {other:?}"))),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_pairs(parse_pairs(&text)?)
    }

    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        Self::from_pairs(parse_pairs(text)?)
    }

    /// Builds a config from key/value pairs, filling environment-specific
    /// defaults for anything absent.
    pub fn from_pairs(map: BTreeMap<String, String>) -> Result<Self, HarnessError> {
        if let Some(k) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(HarnessError::Config(format!("unknown key {k:?}")));
        }
        let env = map.get("env").cloned().unwrap_or_else(|| "counterexample".into());
        if !crate::env::ENV_NAMES.contains(&env.as_str()) {
            return Err(HarnessError::Config(format!("unknown environment {env:?}")));
        }
        let agent = match map.get("agent").map(String::as_str).unwrap_or("ace") {
            "ace" => Agent::Ace,
            "offpac" => Agent::OffPac,
            "true-ace" => Agent::TrueAce,
            "dpg" => Agent::Dpg,
            "true-dpge" => Agent::TrueDpge,
            other => return Err(HarnessError::Config(format!("unknown agent {other:?}"))),
        };
        if matches!(agent, Agent::Dpg | Agent::TrueDpge) && env != "continuous-counterexample" {
            return Err(HarnessError::Config("dpg agents need continuous-counterexample".into()));
        }
        let tabular_env = matches!(env.as_str(), "counterexample" | "chain11" | "continuous-counterexample");
        let critic = match map.get("critic.alg").map(String::as_str) {
            None if tabular_env => CriticKind::Exact,
            None => CriticKind::Learned(CriticAlg::Tdrc),
            Some("exact") => CriticKind::Exact,
            Some(v) => CriticKind::Learned(v.parse().map_err(HarnessError::Config)?),
        };
        if critic == CriticKind::Exact && !matches!(env.as_str(), "counterexample" | "chain11" | "continuous-counterexample" | "virtual-office") {
            return Err(HarnessError::Config(format!("critic.alg=exact needs a tabular model; {env} has none")));
        }
        let emphasis_mode = match (agent, map.get("emphasis.mode").map(String::as_str)) {
            (Agent::TrueAce, None | Some("true-oracle")) => EmphasisMode::TrueOracle,
            (Agent::TrueAce, Some(v)) => {
                return Err(HarnessError::Config(format!("true-ace uses the exact weighting, not {v:?}")))
            }
            (_, None | Some("trace")) => EmphasisMode::Trace,
            (_, Some("direct")) => EmphasisMode::Direct,
            (_, Some("ideal")) => EmphasisMode::Ideal,
            (_, Some("true-oracle")) => EmphasisMode::TrueOracle,
            (_, Some(v)) => return Err(HarnessError::Config(format!("unknown emphasis mode {v:?}"))),
        };
        let emphasis_variant = match map.get("emphasis.variant").map(String::as_str) {
            None | Some("semi") => DirectVariant::SemiGradient,
            Some("gradient") => DirectVariant::Gradient,
            Some(v) => return Err(HarnessError::Config(format!("unknown emphasis variant {v:?}"))),
        };
        let interest = match map.get("interest.kind").map(String::as_str) {
            None | Some("uniform") => InterestFunction::Uniform,
            Some("episodic") => InterestFunction::Episodic,
            Some(v) => return Err(HarnessError::Config(format!("unknown interest kind {v:?}"))),
        };
        let (kind, tilings, tiles, bias) = match env.as_str() {
            "puddle-world" => (FeatureKind::Tile, 4, 2, true),
            "mountain-car" => (FeatureKind::Tile, 8, 4, true),
            "virtual-office" => (FeatureKind::Identity, 0, 0, true),
            _ => (FeatureKind::Aggregate, 0, 0, false),
        };
        let feature_kind = match map.get("feature.kind") {
            Some(v) => parse_feature_kind(v)?,
            None => kind,
        };
        let critic_feature = map.get("critic.feature").map(|v| parse_feature_kind(v)).transpose()?;
        let emphasis_feature_from_actor = match map.get("emphasis.feature").map(String::as_str) {
            None | Some("critic") => false,
            Some("actor") => true,
            Some(v) => return Err(HarnessError::Config(format!("emphasis.feature must be critic or actor, got {v:?}"))),
        };
        let actor_init = match map.get("actor.init").map(String::as_str) {
            None | Some("uniform") => ActorInit::Uniform,
            Some("p09") => ActorInit::P09,
            Some(v) => return Err(HarnessError::Config(format!("unknown actor init {v:?}"))),
        };
        let eta_default = if agent == Agent::OffPac { 0.0 } else { 1.0 };
        let eta = match (map.get("emphasis.eta"), map.get("actor.eta")) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::Config("set only one of emphasis.eta and actor.eta".into()))
            }
            (Some(_), None) => num(&map, "emphasis.eta", eta_default)?,
            (None, _) => num(&map, "actor.eta", eta_default)?,
        };
        if !(0.0..=1.0).contains(&eta) {
            return Err(HarnessError::Config(format!("eta {eta} outside [0, 1]")));
        }
        let critic_lambda = num(&map, "critic.lambda", 0.0)?;
        if !(0.0..=1.0).contains(&critic_lambda) {
            return Err(HarnessError::Config(format!("critic.lambda {critic_lambda} outside [0, 1]")));
        }
        let total_steps = num(&map, "total_steps", 10_000)?;
        let eval_every: usize = num(&map, "eval.every", 1000)?;
        let actor_tau = num(&map, "actor.tau", 0.0)?;
        if actor_tau < 0.0 {
            return Err(HarnessError::Config("actor.tau must be nonnegative".into()));
        }
        Ok(Self {
            agent,
            total_steps,
            seed: num(&map, "seed", 0)?,
            actor_alpha: num(&map, "actor.alpha", 0.01)?,
            actor_tau,
            actor_init,
            eta,
            critic,
            critic_alpha: num(&map, "critic.alpha", 0.1)?,
            critic_lambda,
            critic_lambda_c: map.get("critic.lambda_c").map(|_| num(&map, "critic.lambda_c", 0.0)).transpose()?,
            critic_alpha_h_ratio: num(&map, "critic.alpha_h_ratio", 1.0)?,
            critic_feature,
            emphasis_mode,
            emphasis_beta: num(&map, "emphasis.beta", 0.01)?,
            emphasis_variant,
            emphasis_feature_from_actor,
            interest,
            feature_kind,
            feature_tilings: num(&map, "feature.tilings", tilings)?,
            feature_tiles: num(&map, "feature.tiles", tiles)?,
            feature_bias: boolean(&map, "feature.bias", bias)?,
            eval_every: eval_every.max(1),
            eval_rollouts: num(&map, "eval.rollouts", 50)?,
            eval_cap: num(&map, "eval.cap", 1000)?,
            eval_gamma: num(&map, "eval.gamma", 0.95)?,
            eval_pool_horizon: num(&map, "eval.pool_horizon", 50_000)?,
            eval_pool_stride: num(&map, "eval.pool_stride", 1000)?,
            output: map.get("output").cloned(),
            env,
            raw: map,
        })
    }

    /// Applies `key=value` overrides and re-validates.
    pub fn with_overrides<'a>(&self, pairs: impl IntoIterator<Item = (&'a str, String)>) -> Result<Self, HarnessError> {
        let mut map = self.raw.clone();
        for (k, v) in pairs {
            map.insert(k.to_string(), v);
        }
        Self::from_pairs(map)
    }

    pub fn with_seed(&self, seed: u64) -> Result<Self, HarnessError> {
        self.with_overrides([("seed", seed.to_string())])
    }

    /// Canonical `key=value` lines of the given keys, sorted.
    pub fn echo(&self) -> Vec<String> {
        self.raw.iter().map(|(k, v)| format!("{k}={v}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_defaults() {
        let c = RunConfig::from_text("env = mountain-car # comment\nactor.alpha=0.25\n").unwrap();
        assert_eq!(c.actor_alpha, 0.25);
        assert_eq!(c.feature_kind, FeatureKind::Tile);
        assert_eq!((c.feature_tilings, c.feature_tiles), (8, 4));
        assert_eq!(c.critic, CriticKind::Learned(CriticAlg::Tdrc));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_text("actor.alhpa = 1").is_err());
    }
}
