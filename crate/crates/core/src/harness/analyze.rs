//! Exact report for a fixed policy on an environment with a known model.
//!
//! Policy files are JSON objects. Tabular environments accept one of
//! `theta` (flat `(bin, action)` preferences), `bin_probs` (one row per
//! aggregation bin) or `probs` (one row per state), plus optional `eta`,
//! `tau` and `interest` (`"uniform"`, `"episodic"` or a per-state array).
//! The continuous counterexample accepts `actions: [a0, a1]` for a
//! deterministic policy or `mean`/`std` pairs for a Gaussian one.

use serde::Deserialize;
use serde_json::{json, Value};

use super::run::episodic_interest;
use super::HarnessError;
use crate::env::{make_env, ActionLaw, Behaviour, ContinuousOracle};
use crate::mdp::{
    semi_gradient, softmax_policy, stationary_distribution, true_gradient, EntropyConfig, ExactAnalysis,
    TabularPolicy,
};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum InterestSpec {
    Named(String),
    Table(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    theta: Option<Vec<f64>>,
    bin_probs: Option<Vec<Vec<f64>>>,
    probs: Option<Vec<Vec<f64>>>,
    actions: Option<[f64; 2]>,
    mean: Option<[f64; 2]>,
    std: Option<[f64; 2]>,
    eta: Option<f64>,
    tau: Option<f64>,
    interest: Option<InterestSpec>,
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

/// Parses the policy file and returns the report as JSON.
pub fn analyze(env_name: &str, policy_json: &str) -> Result<Value, HarnessError> {
    let file: PolicyFile = serde_json::from_str(policy_json)?;
    if env_name == "continuous-counterexample" {
        return analyze_continuous(&file);
    }
    let env = make_env(env_name)?;
    let (mdp, agg) = env.tabular().ok_or_else(|| bad(format!("{env_name} has no exact model")))?;
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mu = match env.behaviour() {
        Behaviour::Discrete(p) => TabularPolicy::constant(ns, &p)?,
        Behaviour::Gaussian { .. } => return Err(bad("behaviour must be discrete")),
    };
    let eta = file.eta.unwrap_or(1.0);
    let entropy = EntropyConfig::new(file.tau.unwrap_or(0.0))?;
    let d_mu = stationary_distribution(mdp, &mu)?;
    let interest = match &file.interest {
        None => vec![1.0; ns],
        Some(InterestSpec::Named(n)) if n == "uniform" => vec![1.0; ns],
        Some(InterestSpec::Named(n)) if n == "episodic" => episodic_interest(mdp, &mu, &d_mu),
        Some(InterestSpec::Named(n)) => return Err(bad(format!("unknown interest {n:?}"))),
        Some(InterestSpec::Table(t)) => t.clone(),
    };

    let theta = match (&file.theta, &file.bin_probs) {
        (Some(t), None) => Some(t.clone()),
        (None, Some(rows)) => {
            if rows.len() != agg.n_bins() {
                return Err(bad(format!("bin_probs needs {} rows", agg.n_bins())));
            }
            Some(rows.iter().flatten().map(|p| p.max(1e-300).ln()).collect())
        }
        (None, None) => None,
        _ => return Err(bad("give only one of theta and bin_probs")),
    };
    let pi = match (&theta, &file.probs) {
        (Some(t), None) => softmax_policy(agg, t, na)?,
        (None, Some(rows)) => TabularPolicy::new(ns, na, rows.iter().flatten().copied().collect())?,
        (None, None) => return Err(bad("policy file needs theta, bin_probs or probs")),
        _ => return Err(bad("probs cannot be combined with theta or bin_probs")),
    };
    let an = ExactAnalysis::compute(mdp, &pi, &mu, &interest, eta, entropy)?;
    let (true_g, semi_g) = match &theta {
        Some(t) => (
            Some(true_gradient(mdp, agg, t, &mu, &interest, eta, entropy)?),
            Some(semi_gradient(mdp, agg, t, &mu, entropy)?),
        ),
        None => (None, None),
    };
    let rows = |v: &[f64]| v.chunks(na).map(|c| c.to_vec()).collect::<Vec<_>>();
    Ok(json!({
        "env": env_name,
        "eta": eta,
        "tau": entropy.tau,
        "interest": interest,
        "policy": (0..ns).map(|s| pi.row(s).to_vec()).collect::<Vec<_>>(),
        "d_mu": an.d_mu,
        "m": an.m,
        "m_eta": an.m_eta,
        "v": an.v,
        "q": rows(&an.q),
        "v_soft": an.v_tilde,
        "q_soft": rows(&an.q_tilde),
        "implicit_weighting": an.implicit,
        "objective": an.j,
        "true_gradient": true_g.as_deref().map(rows),
        "semi_gradient": semi_g.as_deref().map(rows),
    }))
}

fn analyze_continuous(file: &PolicyFile) -> Result<Value, HarnessError> {
    let oracle = ContinuousOracle::new();
    if file.tau.is_some_and(|t| t != 0.0) {
        return Err(bad("tau is not supported for continuous actions"));
    }
    match (file.actions, file.mean, file.std) {
        (Some(a), None, None) => {
            let ex = oracle.exact(ActionLaw::Point(a[0]), ActionLaw::Point(a[1]));
            Ok(json!({
                "env": "continuous-counterexample",
                "actions": a,
                "d_mu": ex.d_mu,
                "m": ex.m,
                "v": ex.v,
                "objective": ex.j,
                "dpg_gradient": oracle.deterministic_gradient(a, false),
                "emphatic_dpg_gradient": oracle.deterministic_gradient(a, true),
            }))
        }
        (None, Some(mean), Some(std)) => {
            if std.iter().any(|s| !(*s > 0.0)) {
                return Err(bad("std must be positive"));
            }
            let law = |k: usize| ActionLaw::Gaussian { mean: mean[k], std: std[k] };
            let ex = oracle.exact(law(0), law(1));
            Ok(json!({
                "env": "continuous-counterexample",
                "mean": mean,
                "std": std,
                "d_mu": ex.d_mu,
                "m": ex.m,
                "v": ex.v,
                "objective": ex.j,
            }))
        }
        _ => Err(bad("continuous policy needs actions, or mean and std")),
    }
}
