//! The online actor-critic loop with periodic rollout evaluation.

use std::collections::HashMap;

use rand::SeedableRng;

use super::config::{ActorInit, Agent, CriticKind, EmphasisMode, FeatureKind, RunConfig};
use super::log::{LogRow, RunLog, VERSION};
use super::HarnessError;
use crate::actors::{
    ace_actor_update, offpac_actor_update, tabular_policy, true_dpg_update, ActorError,
    DeterministicLinearPolicy, GaussianLinearPolicy, LinearPolicy, PolicyAction, SoftmaxLinearPolicy,
};
use crate::critics::CriticState;
use crate::emphasis::{mix_emphasis, DirectEstimator, EmphasisTrace, IdealTrace, InterestFunction};
use crate::env::{
    gaussian_density, make_env, Action, ActionLaw, ActionSpace, Behaviour, ContinuousOracle, EnvState,
    Environment, Observation, ObservationSpace,
};
use crate::evaluation::{behaviour_action, build_steady_state_pool, evaluate, EvalProtocol, EvalResult, Objective};
use crate::features::{FeatureError, FeatureMap, Features};
use crate::mdp::{EntropyConfig, ExactAnalysis, FiniteMdp, MdpError, TabularPolicy};
use crate::Prng;

pub const EVAL_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;
pub const POOL_SEED_MIX: u64 = 0xD1B5_4A32_D192_ED03;

/// A feature map, plus an observation-to-state lookup when bin features are
/// used on an environment whose observations are vectors.
#[derive(Debug, Clone)]
pub struct Featurizer {
    map: FeatureMap,
    lookup: Option<HashMap<Vec<u64>, usize>>,
}

fn obs_key(obs: &Observation) -> Vec<u64> {
    match obs {
        Observation::Discrete(s) => vec![*s as u64],
        Observation::Vector(v) => v.iter().map(|x| x.to_bits()).collect(),
    }
}

impl Featurizer {
    pub fn new(map: FeatureMap) -> Self {
        Self { map, lookup: None }
    }

    pub fn build(kind: FeatureKind, cfg: &RunConfig, env: &dyn Environment, bias: bool) -> Result<Self, HarnessError> {
        let space = env.observation_space();
        let config = |msg: &str| HarnessError::Config(format!("{msg} ({})", env.name()));
        match (kind, &space) {
            (FeatureKind::Tile, ObservationSpace::Box { low, high }) => Ok(Self::new(FeatureMap::tile_coder(
                cfg.feature_tilings,
                cfg.feature_tiles,
                low.clone(),
                high.clone(),
                bias,
            )?)),
            (FeatureKind::Identity, ObservationSpace::Box { low, .. }) => {
                Ok(Self::new(FeatureMap::IdentityBias { dim: low.len() }))
            }
            (FeatureKind::Tabular, ObservationSpace::Discrete(n)) => {
                Ok(Self::new(FeatureMap::one_hot((0..*n).collect(), bias)))
            }
            (FeatureKind::Aggregate, _) => {
                let agg = env.aggregation().ok_or_else(|| config("no state aggregation defined"))?;
                let n = agg.n_states();
                let map = FeatureMap::one_hot((0..n).map(|s| agg.bin(s)).collect(), bias);
                let lookup = match space {
                    ObservationSpace::Discrete(_) => None,
                    ObservationSpace::Box { .. } => {
                        let mut sim = env.box_clone();
                        let mut table = HashMap::with_capacity(n);
                        for s in 0..n {
                            table.insert(obs_key(&sim.set_state(&EnvState::Discrete(s))?), s);
                        }
                        Some(table)
                    }
                };
                Ok(Self { map, lookup })
            }
            (FeatureKind::Tile | FeatureKind::Identity, _) => Err(config("feature kind needs vector observations")),
            (FeatureKind::Tabular, _) => Err(config("tabular features need discrete observations")),
        }
    }

    pub fn n_features(&self) -> usize {
        self.map.n_features()
    }

    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn featurize(&self, obs: &Observation) -> Result<Features<f64>, FeatureError> {
        match &self.lookup {
            Some(table) => {
                let s = table.get(&obs_key(obs)).ok_or(FeatureError::ObservationKind)?;
                self.map.featurize(&Observation::Discrete(*s))
            }
            None => self.map.featurize(obs),
        }
    }
}

/// Expected interest per state under the behaviour's steady state when
/// interest is 1 exactly on episode starts.
pub fn episodic_interest(mdp: &FiniteMdp<f64>, mu: &TabularPolicy<f64>, d_mu: &[f64]) -> Vec<f64> {
    let n = mdp.n_states();
    let mut inflow = vec![0.0; n];
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let w = d_mu[s] * mu.prob(s, a);
            if w == 0.0 {
                continue;
            }
            for s2 in 0..n {
                if mdp.gamma(s, a, s2) == 0.0 {
                    inflow[s2] += w * mdp.p(s, a, s2);
                }
            }
        }
    }
    inflow.iter().zip(d_mu).map(|(f, d)| if *d > 0.0 { f / d } else { 0.0 }).collect()
}

/// Exact quantities used by the exact critic and the oracle emphasis.
#[derive(Debug, Clone)]
struct Snapshot {
    v: Vec<f64>,
    /// `m(s) / d_µ(s)`.
    ratio: Vec<f64>,
    j: f64,
}

enum Oracle {
    Tabular {
        mdp: FiniteMdp<f64>,
        mu: TabularPolicy<f64>,
        features: Vec<Features<f64>>,
        interest: Vec<f64>,
        entropy: EntropyConfig<f64>,
    },
    Continuous {
        oracle: ContinuousOracle,
        x0: Features<f64>,
        x1: Features<f64>,
    },
}

impl Oracle {
    fn build(cfg: &RunConfig, env: &dyn Environment, actor: &Featurizer) -> Result<Option<Self>, HarnessError> {
        if let Some((mdp, _)) = env.tabular() {
            let mu = match env.behaviour() {
                Behaviour::Discrete(p) => TabularPolicy::constant(mdp.n_states(), &p)?,
                Behaviour::Gaussian { .. } => return Ok(None),
            };
            let mut sim = env.box_clone();
            let mut features = Vec::with_capacity(mdp.n_states());
            for s in 0..mdp.n_states() {
                features.push(actor.featurize(&sim.set_state(&EnvState::Discrete(s))?)?);
            }
            let interest = match &cfg.interest {
                InterestFunction::Uniform => vec![1.0; mdp.n_states()],
                InterestFunction::Episodic => {
                    let d_mu = crate::mdp::stationary_distribution(mdp, &mu)?;
                    episodic_interest(mdp, &mu, &d_mu)
                }
                InterestFunction::Table(t) => t.clone(),
            };
            let entropy = EntropyConfig::new(cfg.actor_tau)?;
            return Ok(Some(Oracle::Tabular { mdp: mdp.clone(), mu, features, interest, entropy }));
        }
        if env.name() == "continuous-counterexample" && cfg.feature_kind == FeatureKind::Aggregate {
            let x0 = actor.featurize(&Observation::Discrete(0))?;
            let x1 = actor.featurize(&Observation::Discrete(1))?;
            return Ok(Some(Oracle::Continuous { oracle: ContinuousOracle::new(), x0, x1 }));
        }
        Ok(None)
    }

    fn snapshot(&self, policy: &LinearPolicy<f64>) -> Result<Snapshot, HarnessError> {
        match (self, policy) {
            (Oracle::Tabular { mdp, mu, features, interest, entropy }, LinearPolicy::Softmax(p)) => {
                let pi = tabular_policy(p, features)?;
                let a = ExactAnalysis::compute(mdp, &pi, mu, interest, 1.0, *entropy)?;
                let ratio = a.m.iter().zip(&a.d_mu).map(|(m, d)| if *d > 0.0 { m / d } else { 0.0 }).collect();
                Ok(Snapshot { v: a.v_tilde, ratio, j: a.j })
            }
            (Oracle::Continuous { oracle, x0, x1 }, _) => {
                let law = |x: &Features<f64>| match policy {
                    LinearPolicy::Gaussian(g) => ActionLaw::Gaussian { mean: g.mean(x), std: g.std(x) },
                    LinearPolicy::Deterministic(d) => ActionLaw::Point(d.action(x)),
                    LinearPolicy::Softmax(_) => ActionLaw::Point(f64::NAN),
                };
                let ex = oracle.exact(law(x0), law(x1));
                let ratio = ex.m.iter().zip(&ex.d_mu).map(|(m, d)| m / d).collect();
                Ok(Snapshot { v: ex.v.to_vec(), ratio, j: ex.j })
            }
            _ => Err(HarnessError::Config("exact quantities need a softmax policy on a tabular model".into())),
        }
    }
}

fn to_env_action(a: PolicyAction<f64>) -> Action {
    match a {
        PolicyAction::Discrete(a) => Action::Discrete(a),
        PolicyAction::Continuous(a) => Action::Continuous(a),
    }
}

fn to_policy_action(a: Action) -> PolicyAction<f64> {
    match a {
        Action::Discrete(a) => PolicyAction::Discrete(a),
        Action::Continuous(a) => PolicyAction::Continuous(a),
    }
}

fn behaviour_prob(b: &Behaviour, a: Action) -> f64 {
    match (b, a) {
        (Behaviour::Discrete(p), Action::Discrete(a)) => p.get(a).copied().unwrap_or(0.0),
        (Behaviour::Gaussian { mean, std }, Action::Continuous(a)) => gaussian_density(a, *mean, *std),
        _ => 0.0,
    }
}

fn state_index(state: &EnvState) -> Option<usize> {
    match state {
        EnvState::Discrete(s) => Some(*s),
        EnvState::Continuous(_) => None,
    }
}

fn build_policy(cfg: &RunConfig, env: &dyn Environment, dim: usize) -> LinearPolicy<f64> {
    match env.action_space() {
        ActionSpace::Discrete(n) => {
            let mut p = SoftmaxLinearPolicy::new(dim, n);
            if cfg.actor_init == ActorInit::P09 {
                for j in 0..dim {
                    p.set(j, 0, 9f64.ln());
                }
            }
            LinearPolicy::Softmax(p)
        }
        ActionSpace::Continuous => match cfg.agent {
            Agent::Dpg | Agent::TrueDpge => LinearPolicy::Deterministic(DeterministicLinearPolicy::new(dim)),
            _ => LinearPolicy::Gaussian(GaussianLinearPolicy::new(dim)),
        },
    }
}

/// Policy statistic tracked in the log: `π(a0)` in the aliased bin of the
/// discrete counterexamples, the action mean there for the continuous one.
fn probe(env: &str, policy: &LinearPolicy<f64>, actor: &Featurizer) -> f64 {
    let state = match env {
        "counterexample" | "continuous-counterexample" => 1,
        "chain11" => 9,
        _ => return f64::NAN,
    };
    let Ok(x) = actor.featurize(&Observation::Discrete(state)) else {
        return f64::NAN;
    };
    match policy {
        LinearPolicy::Softmax(p) => p.prob(&x, 0),
        LinearPolicy::Gaussian(p) => p.mean(&x),
        LinearPolicy::Deterministic(p) => p.action(&x),
    }
}

fn evaluate_policy(
    policy: &LinearPolicy<f64>,
    actor: &Featurizer,
    env: &dyn Environment,
    objective: Objective,
    protocol: &EvalProtocol,
    rng: &mut Prng,
) -> Result<EvalResult, HarnessError> {
    let mut failure = None;
    let mut act = |obs: &Observation, rng: &mut Prng| match actor.featurize(obs) {
        Ok(x) => to_env_action(policy.sample(&x, rng)),
        Err(e) => {
            failure.get_or_insert(e);
            to_env_action(policy.sample(&Features::binary(actor.n_features(), vec![]), rng))
        }
    };
    let result = evaluate(&mut act, env, objective, protocol, rng)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(result),
    }
}

struct Evaluator {
    env: Box<dyn Environment>,
    protocol: EvalProtocol,
    rng: Prng,
}

#[derive(Default)]
struct Window {
    max_rho: f64,
    max_f: f64,
}

struct Recorder<'a> {
    cfg: &'a RunConfig,
    eval: Evaluator,
    oracle: Option<&'a Oracle>,
    window: Window,
}

impl Recorder<'_> {
    fn row(
        &mut self,
        step: usize,
        policy: &LinearPolicy<f64>,
        actor: &Featurizer,
        critic_norm: f64,
    ) -> Result<LogRow, HarnessError> {
        let Evaluator { env, protocol, rng } = &mut self.eval;
        let ep = evaluate_policy(policy, actor, env.as_ref(), Objective::Episodic, protocol, rng)?;
        let ex = evaluate_policy(policy, actor, env.as_ref(), Objective::Excursions, protocol, rng)?;
        let exact = match self.oracle {
            Some(o) => o.snapshot(policy).map(|s| s.j).unwrap_or(f64::NAN),
            None => f64::NAN,
        };
        let row = LogRow {
            step,
            episodic: ep.mean,
            episodic_stderr: ep.stderr,
            excursions: ex.mean,
            excursions_stderr: ex.stderr,
            exact_objective: exact,
            probe: probe(&self.cfg.env, policy, actor),
            max_rho: self.window.max_rho,
            max_f: self.window.max_f,
            actor_norm: policy.norm(),
            critic_norm,
        };
        self.window = Window::default();
        Ok(row)
    }
}

fn norm(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A finished run's log together with the final actor.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub log: RunLog,
    pub policy: LinearPolicy<f64>,
}

/// Executes one run. Divergence of a learner ends the run early and is
/// recorded in [`RunLog::failure`]; configuration and environment errors are
/// returned.
pub fn run(cfg: &RunConfig) -> Result<RunLog, HarnessError> {
    run_detailed(cfg).map(|o| o.log)
}

pub fn run_detailed(cfg: &RunConfig) -> Result<RunOutcome, HarnessError> {
    let env = make_env(&cfg.env)?;
    let actor_f = Featurizer::build(cfg.feature_kind, cfg, env.as_ref(), cfg.feature_bias)?;
    let critic_kind = match (cfg.critic_feature, env.observation_space()) {
        (Some(k), _) => k,
        (None, ObservationSpace::Discrete(_)) => FeatureKind::Tabular,
        (None, _) => cfg.feature_kind,
    };
    let critic_f = if cfg.critic_feature.is_none() && critic_kind == cfg.feature_kind {
        actor_f.clone()
    } else {
        Featurizer::build(critic_kind, cfg, env.as_ref(), critic_kind != FeatureKind::Tabular && cfg.feature_bias)?
    };
    let emph_f = if cfg.emphasis_feature_from_actor { actor_f.clone() } else { critic_f.clone() };
    let oracle = Oracle::build(cfg, env.as_ref(), &actor_f)?;

    let continuous = env.action_space() == ActionSpace::Continuous;
    let per_step_exact = cfg.critic == CriticKind::Exact || cfg.emphasis_mode == EmphasisMode::TrueOracle;
    if per_step_exact {
        if oracle.is_none() {
            return Err(HarnessError::Config(format!(
                "exact critic or oracle emphasis needs exact values, unavailable for {} with these features",
                cfg.env
            )));
        }
        if continuous && cfg.actor_tau != 0.0 {
            return Err(HarnessError::Config("exact values with continuous actions support actor.tau = 0 only".into()));
        }
    }

    let mut header = cfg.echo().into_iter().filter(|l| !l.starts_with("seed=")).collect::<Vec<_>>();
    header.push(format!("seed={}", cfg.seed));
    header.push(format!("version={VERSION}"));
    let mut log = RunLog::new(header);

    let mut pool_rng = Prng::seed_from_u64(cfg.seed ^ POOL_SEED_MIX);
    let pool = build_steady_state_pool(env.as_ref(), cfg.eval_pool_horizon, cfg.eval_pool_stride, &mut pool_rng)?;
    let mut protocol = EvalProtocol::new(cfg.eval_rollouts, cfg.eval_cap, cfg.eval_gamma);
    protocol.steady_state_pool = pool;
    let mut recorder = Recorder {
        cfg,
        eval: Evaluator { env: env.clone(), protocol, rng: Prng::seed_from_u64(cfg.seed ^ EVAL_SEED_MIX) },
        oracle: oracle.as_ref(),
        window: Window::default(),
    };

    let mut policy = build_policy(cfg, env.as_ref(), actor_f.n_features());
    let outcome = match cfg.agent {
        Agent::Dpg | Agent::TrueDpge => dpg_loop(cfg, &mut policy, &actor_f, &mut recorder, &mut log),
        _ => {
            let mut learner = Learner::new(cfg, env, &actor_f, &critic_f, &emph_f, oracle.as_ref())?;
            learner.run(&mut policy, &mut recorder, &mut log)
        }
    };
    match outcome {
        Ok(()) => {}
        Err(Stop::Failed(msg)) => log.failure = Some(msg),
        Err(Stop::Error(e)) => return Err(e),
    }
    Ok(RunOutcome { log, policy })
}

enum Stop {
    Failed(String),
    Error(HarnessError),
}

impl From<HarnessError> for Stop {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Actor(e) => Stop::Failed(e.to_string()),
            HarnessError::Critic(e) => Stop::Failed(e.to_string()),
            HarnessError::Emphasis(e) => Stop::Failed(e.to_string()),
            other => Stop::Error(other),
        }
    }
}

macro_rules! stop_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Stop {
            fn from(e: $t) -> Self {
                Stop::from(HarnessError::from(e))
            }
        }
    )*};
}
stop_from!(ActorError, crate::critics::CriticError, crate::emphasis::EmphasisError, FeatureError, MdpError, crate::env::EnvError);

fn dpg_loop(
    cfg: &RunConfig,
    policy: &mut LinearPolicy<f64>,
    actor: &Featurizer,
    recorder: &mut Recorder<'_>,
    log: &mut RunLog,
) -> Result<(), Stop> {
    let oracle = ContinuousOracle::new();
    let LinearPolicy::Deterministic(det) = policy else {
        return Err(Stop::Error(HarnessError::Config("dpg agents need a deterministic policy".into())));
    };
    if det.theta.len() != 2 {
        return Err(Stop::Error(HarnessError::Config("dpg agents need aggregate features".into())));
    }
    for t in 0..cfg.total_steps {
        if t % cfg.eval_every == 0 {
            let p = LinearPolicy::Deterministic(det.clone());
            log.rows.push(recorder.row(t, &p, actor, f64::NAN)?);
        }
        true_dpg_update(det, &oracle, cfg.agent == Agent::TrueDpge, cfg.actor_alpha)?;
    }
    let p = LinearPolicy::Deterministic(det.clone());
    log.rows.push(recorder.row(cfg.total_steps, &p, actor, f64::NAN)?);
    Ok(())
}

enum Critic {
    Learned(CriticState<f64>),
    Exact,
}

struct Learner<'a> {
    cfg: &'a RunConfig,
    env: Box<dyn Environment>,
    behaviour: Behaviour,
    actor_f: &'a Featurizer,
    critic_f: &'a Featurizer,
    emph_f: &'a Featurizer,
    oracle: Option<&'a Oracle>,
    critic: Critic,
    trace: EmphasisTrace<f64>,
    direct: DirectEstimator<f64>,
    ideal: IdealTrace<f64, Features<f64>, PolicyAction<f64>>,
    rng: Prng,
}

impl<'a> Learner<'a> {
    fn new(
        cfg: &'a RunConfig,
        env: Box<dyn Environment>,
        actor_f: &'a Featurizer,
        critic_f: &'a Featurizer,
        emph_f: &'a Featurizer,
        oracle: Option<&'a Oracle>,
    ) -> Result<Self, HarnessError> {
        let critic = match cfg.critic {
            CriticKind::Exact => Critic::Exact,
            CriticKind::Learned(alg) => {
                let mut c = CriticState::new(alg, critic_f.n_features(), cfg.critic_alpha, cfg.critic_lambda);
                c.alpha_h = cfg.critic_alpha * cfg.critic_alpha_h_ratio;
                if let Some(lc) = cfg.critic_lambda_c {
                    c.lambda_c = lc;
                }
                Critic::Learned(c)
            }
        };
        Ok(Self {
            cfg,
            behaviour: env.behaviour(),
            env,
            actor_f,
            critic_f,
            emph_f,
            oracle,
            critic,
            trace: EmphasisTrace::new(cfg.eta),
            direct: DirectEstimator::new(emph_f.n_features(), cfg.emphasis_beta, cfg.emphasis_variant),
            ideal: IdealTrace::new(cfg.eta),
            rng: Prng::seed_from_u64(cfg.seed),
        })
    }

    fn critic_norm(&self) -> f64 {
        match &self.critic {
            Critic::Learned(c) => norm(&c.w),
            Critic::Exact => f64::NAN,
        }
    }

    fn interest(&self, start: bool, state: &EnvState) -> f64 {
        self.cfg.interest.value(start, state_index(state))
    }

    fn run(&mut self, policy: &mut LinearPolicy<f64>, recorder: &mut Recorder<'_>, log: &mut RunLog) -> Result<(), Stop> {
        let cfg = self.cfg;
        let tau = cfg.actor_tau;
        let mode = cfg.emphasis_mode;
        let obs = self.env.reset(&mut self.rng);
        let mut state = self.env.state();
        let mut gamma_t = 0.0;
        let mut rho_prev = 0.0;
        let mut i_t = self.interest(true, &state);
        let mut x = self.actor_f.featurize(&obs)?;
        let mut xc = self.critic_f.featurize(&obs)?;
        let mut xe = self.emph_f.featurize(&obs)?;
        if mode == EmphasisMode::Ideal {
            self.ideal.push_state(x.clone(), gamma_t, i_t);
        }

        for t in 0..cfg.total_steps {
            if t % cfg.eval_every == 0 {
                log.rows.push(recorder.row(t, policy, self.actor_f, self.critic_norm())?);
            }
            let exact = match (cfg.critic == CriticKind::Exact || mode == EmphasisMode::TrueOracle, self.oracle) {
                (true, Some(o)) => Some(o.snapshot(policy)?),
                _ => None,
            };

            let env_action = behaviour_action(&self.behaviour, &mut self.rng);
            let a = to_policy_action(env_action);
            let mu_prob = behaviour_prob(&self.behaviour, env_action);
            let step = self.env.step(env_action, &mut self.rng)?;
            let next_state = self.env.state();
            let i_next = self.interest(step.episode_start, &next_state);

            let pi_prob = policy.prob(&x, a)?;
            let r_tilde = if tau == 0.0 { step.reward } else { step.reward - tau * pi_prob.ln() };
            let rho = pi_prob / mu_prob;

            let x_next = self.actor_f.featurize(&step.next_obs)?;
            let xc_next = self.critic_f.featurize(&step.next_obs)?;
            let xe_next = self.emph_f.featurize(&step.next_obs)?;
            if let Critic::Learned(c) = &mut self.critic {
                c.update(&xc, &xc_next, r_tilde, step.gamma, rho, i_t)?;
            }

            let f_t = self.trace.update(rho_prev, gamma_t, i_t);
            let m_t = match (cfg.agent, mode) {
                (Agent::OffPac, _) | (_, EmphasisMode::Trace) => self.trace.m,
                (_, EmphasisMode::Direct) => {
                    let m = self.direct.emphasis_value(i_t, &xe, cfg.eta);
                    self.direct.update(&xe, &xe_next, rho, step.gamma, i_next)?;
                    m
                }
                (_, EmphasisMode::Ideal) => {
                    let (_, m) = self.ideal.compute(|xs, a| policy.prob(xs, *a).unwrap_or(0.0));
                    m
                }
                (_, EmphasisMode::TrueOracle) => {
                    let s = state_index(&state).unwrap_or(0);
                    let ratio = exact.as_ref().map_or(f64::NAN, |e| e.ratio[s]);
                    mix_emphasis(i_t, ratio, cfg.eta)
                }
            };

            let delta = match (&self.critic, &exact) {
                (Critic::Learned(c), _) => r_tilde + step.gamma * c.predict(&xc_next)? - c.predict(&xc)?,
                (Critic::Exact, Some(e)) => {
                    let (s, s2) = (state_index(&state).unwrap_or(0), state_index(&next_state).unwrap_or(0));
                    r_tilde + step.gamma * e.v[s2] - e.v[s]
                }
                (Critic::Exact, None) => f64::NAN,
            };

            if cfg.agent == Agent::OffPac {
                offpac_actor_update(policy, i_t, rho, delta, &x, a, cfg.actor_alpha)?;
            } else {
                ace_actor_update(policy, m_t, rho, delta, &x, a, cfg.actor_alpha)?;
            }

            recorder.window.max_rho = recorder.window.max_rho.max(rho.abs());
            recorder.window.max_f = recorder.window.max_f.max(f_t);
            if mode == EmphasisMode::Ideal {
                self.ideal.push_action(a, mu_prob);
                self.ideal.push_state(x_next.clone(), step.gamma, i_next);
            }
            state = next_state;
            x = x_next;
            xc = xc_next;
            xe = xe_next;
            gamma_t = step.gamma;
            rho_prev = rho;
            i_t = i_next;
        }
        log.rows.push(recorder.row(cfg.total_steps, policy, self.actor_f, self.critic_norm())?);
        Ok(())
    }
}
