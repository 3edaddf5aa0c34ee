use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::constants::continuous_counterexample::{BEHAVIOUR_MEAN, BEHAVIOUR_STD};
use super::{
    Action, ActionSpace, Behaviour, EnvError, EnvState, Environment, Observation, ObservationSpace,
    StepResult,
};
use crate::Prng;

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sigmoid_prime(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// Three states with one unbounded real action. From `s0`, action `a` moves to
/// `s2` with probability `σ(a)` and to `s1` otherwise; `s1` pays `2σ(−a)` and
/// `s2` pays `σ(a)` on termination.
#[derive(Debug, Clone)]
pub struct ContinuousCounterexample {
    state: usize,
}

impl ContinuousCounterexample {
    pub fn new() -> Self {
        Self { state: 0 }
    }

    pub fn behaviour_density(a: f64) -> f64 {
        gaussian_density(a, BEHAVIOUR_MEAN, BEHAVIOUR_STD)
    }

    pub fn behaviour_log_density(a: f64) -> f64 {
        gaussian_log_density(a, BEHAVIOUR_MEAN, BEHAVIOUR_STD)
    }
}

impl Default for ContinuousCounterexample {
    fn default() -> Self {
        Self::new()
    }
}

pub fn gaussian_log_density(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

pub fn gaussian_density(x: f64, mean: f64, std: f64) -> f64 {
    gaussian_log_density(x, mean, std).exp()
}

impl Environment for ContinuousCounterexample {
    fn name(&self) -> &'static str {
        "continuous-counterexample"
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Discrete(3)
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous
    }

    fn behaviour(&self) -> Behaviour {
        Behaviour::Gaussian { mean: BEHAVIOUR_MEAN, std: BEHAVIOUR_STD }
    }

    fn reset(&mut self, _rng: &mut Prng) -> Observation {
        self.state = 0;
        Observation::Discrete(0)
    }

    fn step(&mut self, action: Action, rng: &mut Prng) -> Result<StepResult, EnvError> {
        let a = match action {
            Action::Continuous(a) if a.is_finite() => a,
            other => return Err(EnvError::InvalidAction(other)),
        };
        let (next, reward, gamma) = match self.state {
            0 => {
                let u: f64 = rng.random();
                (if u < sigmoid(a) { 2 } else { 1 }, 0.0, 1.0)
            }
            1 => (0, 2.0 * sigmoid(-a), 0.0),
            _ => (0, sigmoid(a), 0.0),
        };
        self.state = next;
        Ok(StepResult {
            next_obs: Observation::Discrete(next),
            reward,
            gamma,
            episode_start: gamma == 0.0,
        })
    }

    fn observe(&self) -> Observation {
        Observation::Discrete(self.state)
    }

    fn state(&self) -> EnvState {
        EnvState::Discrete(self.state)
    }

    fn set_state(&mut self, state: &EnvState) -> Result<Observation, EnvError> {
        match state {
            EnvState::Discrete(s) if *s < 3 => {
                self.state = *s;
                Ok(Observation::Discrete(*s))
            }
            other => Err(EnvError::InvalidState(other.clone())),
        }
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }

    fn aggregation(&self) -> Option<crate::mdp::StateAggregation> {
        Some(crate::mdp::StateAggregation::new(vec![0, 1, 1]))
    }
}

/// Action distribution of a policy in one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionLaw {
    Point(f64),
    Gaussian { mean: f64, std: f64 },
}

impl ActionLaw {
    /// `E[f(A)]`, by composite Simpson quadrature over ±12 standard deviations
    /// for the Gaussian case.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        match *self {
            ActionLaw::Point(a) => f(a),
            ActionLaw::Gaussian { mean, std } => {
                const N: usize = 4000;
                let (lo, hi) = (mean - 12.0 * std, mean + 12.0 * std);
                let h = (hi - lo) / N as f64;
                let mut acc = 0.0;
                for k in 0..=N {
                    let x = lo + h * k as f64;
                    let w = if k == 0 || k == N { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * gaussian_density(x, mean, std) * f(x);
                }
                acc * h / 3.0
            }
        }
    }

    pub fn sample(&self, rng: &mut Prng) -> f64 {
        match *self {
            ActionLaw::Point(a) => a,
            ActionLaw::Gaussian { mean, std } => Normal::new(mean, std).expect("valid std").sample(rng),
        }
    }
}

/// Exact quantities of [`ContinuousCounterexample`] for policies whose action
/// law is fixed per feature bin: `s0` uses `law0`, the aliased pair uses `law1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousOracle {
    pub d_mu: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousExact {
    pub v: [f64; 3],
    pub m: [f64; 3],
    pub d_mu: [f64; 3],
    /// `Σ_s d_µ(s) v(s)`.
    pub j: f64,
}

impl ContinuousOracle {
    pub fn new() -> Self {
        let behaviour = ActionLaw::Gaussian { mean: BEHAVIOUR_MEAN, std: BEHAVIOUR_STD };
        let e_sig = behaviour.expect(sigmoid);
        Self { d_mu: [0.5, 0.5 * (1.0 - e_sig), 0.5 * e_sig] }
    }

    pub fn exact(&self, law0: ActionLaw, law1: ActionLaw) -> ContinuousExact {
        let v1 = law1.expect(|a| 2.0 * sigmoid(-a));
        let v2 = law1.expect(sigmoid);
        let to_s2 = law0.expect(sigmoid);
        let v0 = (1.0 - to_s2) * v1 + to_s2 * v2;
        let d = self.d_mu;
        let m = [d[0], d[1] + (1.0 - to_s2) * d[0], d[2] + to_s2 * d[0]];
        let v = [v0, v1, v2];
        let j = d.iter().zip(&v).map(|(a, b)| a * b).sum();
        ContinuousExact { v, m, d_mu: d, j }
    }

    /// `q(s, a)` given the state values of the current policy.
    pub fn q(&self, state: usize, a: f64, v: &[f64; 3]) -> f64 {
        match state {
            0 => (1.0 - sigmoid(a)) * v[1] + sigmoid(a) * v[2],
            1 => 2.0 * sigmoid(-a),
            _ => sigmoid(a),
        }
    }

    /// `∂q(s, a)/∂a`.
    pub fn dq_da(&self, state: usize, a: f64, v: &[f64; 3]) -> f64 {
        match state {
            0 => sigmoid_prime(a) * (v[2] - v[1]),
            1 => -2.0 * sigmoid_prime(a),
            _ => sigmoid_prime(a),
        }
    }

    /// Expected deterministic-policy gradient for actions `(θ0, θ1)` on the
    /// features `[1,0]` for `s0` and `[0,1]` for the aliased pair. States are
    /// weighted by `m` when `emphatic`, else by `d_µ`.
    pub fn deterministic_gradient(&self, theta: [f64; 2], emphatic: bool) -> [f64; 2] {
        let ex = self.exact(ActionLaw::Point(theta[0]), ActionLaw::Point(theta[1]));
        let w = if emphatic { ex.m } else { ex.d_mu };
        [
            w[0] * self.dq_da(0, theta[0], &ex.v),
            w[1] * self.dq_da(1, theta[1], &ex.v) + w[2] * self.dq_da(2, theta[1], &ex.v),
        ]
    }
}

impl Default for ContinuousOracle {
    fn default() -> Self {
        Self::new()
    }
}
