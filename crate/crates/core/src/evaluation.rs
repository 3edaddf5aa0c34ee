//! Rollout evaluation of a fixed target policy from start states or from
//! states drawn from the behaviour policy's steady state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{sample_discrete, Action, Behaviour, EnvError, EnvState, Environment, Observation};
use crate::Prng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Episodic,
    Excursions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol {
    pub n_rollouts: usize,
    pub cap: usize,
    pub gamma_eval: f64,
    pub steady_state_pool: Vec<EnvState>,
}

impl EvalProtocol {
    pub fn new(n_rollouts: usize, cap: usize, gamma_eval: f64) -> Self {
        Self { n_rollouts, cap, gamma_eval, steady_state_pool: Vec::new() }
    }
}

pub fn behaviour_action(b: &Behaviour, rng: &mut Prng) -> Action {
    match b {
        Behaviour::Discrete(p) => Action::Discrete(sample_discrete(p, rng)),
        Behaviour::Gaussian { mean, std } => {
            Action::Continuous(crate::env::ActionLaw::Gaussian { mean: *mean, std: *std }.sample(rng))
        }
    }
}

/// Runs the behaviour policy for `horizon` steps from a start state and keeps
/// every `stride`-th state.
pub fn build_steady_state_pool(
    env: &dyn Environment,
    horizon: usize,
    stride: usize,
    rng: &mut Prng,
) -> Result<Vec<EnvState>, EnvError> {
    let mut env = env.box_clone();
    let behaviour = env.behaviour();
    env.reset(rng);
    let mut pool = Vec::with_capacity(horizon / stride.max(1));
    for t in 1..=horizon {
        env.step(behaviour_action(&behaviour, rng), rng)?;
        if stride > 0 && t % stride == 0 {
            pool.push(env.state());
        }
    }
    Ok(pool)
}

/// Discounted return of one rollout, stopping at termination or `cap` steps.
pub fn rollout(
    env: &mut dyn Environment,
    start: Observation,
    policy: &mut dyn FnMut(&Observation, &mut Prng) -> Action,
    cap: usize,
    gamma_eval: f64,
    rng: &mut Prng,
) -> Result<f64, EnvError> {
    let mut obs = start;
    let (mut ret, mut disc) = (0.0, 1.0);
    for _ in 0..cap {
        let a = policy(&obs, rng);
        let step = env.step(a, rng)?;
        ret += disc * step.reward;
        disc *= gamma_eval;
        if step.gamma == 0.0 {
            break;
        }
        obs = step.next_obs;
    }
    Ok(ret)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub mean: f64,
    pub stderr: f64,
}

/// Mean discounted return over `n_rollouts`. Episodic rollouts start from the
/// environment's start distribution; excursion rollouts cycle through the pool.
pub fn evaluate(
    policy: &mut dyn FnMut(&Observation, &mut Prng) -> Action,
    env: &dyn Environment,
    objective: Objective,
    protocol: &EvalProtocol,
    rng: &mut Prng,
) -> Result<EvalResult, EnvError> {
    let mut returns = Vec::with_capacity(protocol.n_rollouts);
    let mut sim = env.box_clone();
    for k in 0..protocol.n_rollouts {
        let start = match objective {
            Objective::Episodic => sim.reset(rng),
            Objective::Excursions => {
                let pool = &protocol.steady_state_pool;
                if pool.is_empty() {
                    return Ok(EvalResult { mean: f64::NAN, stderr: f64::NAN });
                }
                let idx = if protocol.n_rollouts == pool.len() { k } else { rng.random_range(0..pool.len()) };
                sim.set_state(&pool[idx])?
            }
        };
        returns.push(rollout(sim.as_mut(), start, policy, protocol.cap, protocol.gamma_eval, rng)?);
    }
    Ok(summarize(&returns))
}

fn summarize(x: &[f64]) -> EvalResult {
    let n = x.len();
    if n == 0 {
        return EvalResult { mean: f64::NAN, stderr: f64::NAN };
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    EvalResult { mean, stderr }
}
