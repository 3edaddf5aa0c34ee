//! Step-based environments. Episodes continue as one stream: a terminating
//! transition emits `gamma = 0` and lands on a freshly sampled start state.

pub mod constants;
mod continuous_counterexample;
mod mountain_car;
mod puddle_world;
mod tabular;
mod virtual_office;

pub use continuous_counterexample::{
    gaussian_density, gaussian_log_density, ActionLaw, ContinuousCounterexample, ContinuousExact,
    ContinuousOracle,
};
pub use mountain_car::MountainCar;
pub use puddle_world::PuddleWorld;
pub use tabular::{make_chain11, make_counterexample, TabularEnv};
pub use virtual_office::VirtualOffice;

use thiserror::Error;

use crate::mdp::{FiniteMdp, StateAggregation};
use crate::Prng;

#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Discrete(usize),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_obs: Observation,
    pub reward: f64,
    pub gamma: f64,
    pub episode_start: bool,
}

/// Full simulator state, sufficient to resume from the same point.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvState {
    Discrete(usize),
    Continuous(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservationSpace {
    Discrete(usize),
    Box { low: Vec<f64>, high: Vec<f64> },
}

impl ObservationSpace {
    pub fn dim(&self) -> usize {
        match self {
            ObservationSpace::Discrete(_) => 1,
            ObservationSpace::Box { low, .. } => low.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous,
}

/// State-independent behaviour policy.
#[derive(Debug, Clone, PartialEq)]
pub enum Behaviour {
    Discrete(Vec<f64>),
    Gaussian { mean: f64, std: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid action {0:?}")]
    InvalidAction(Action),
    #[error("unknown environment {0:?}")]
    UnknownEnvironment(String),
    #[error("state {0:?} does not belong to this environment")]
    InvalidState(EnvState),
}

pub trait Environment: Send {
    fn name(&self) -> &'static str;
    fn observation_space(&self) -> ObservationSpace;
    fn action_space(&self) -> ActionSpace;
    fn behaviour(&self) -> Behaviour;
    /// Samples a start state.
    fn reset(&mut self, rng: &mut Prng) -> Observation;
    fn step(&mut self, action: Action, rng: &mut Prng) -> Result<StepResult, EnvError>;
    fn observe(&self) -> Observation;
    fn state(&self) -> EnvState;
    fn set_state(&mut self, state: &EnvState) -> Result<Observation, EnvError>;
    fn box_clone(&self) -> Box<dyn Environment>;

    /// Exact model and actor aggregation, for environments that have one.
    fn tabular(&self) -> Option<(&FiniteMdp<f64>, &StateAggregation)> {
        None
    }

    /// Actor state aggregation over discrete states, if the domain defines one.
    fn aggregation(&self) -> Option<StateAggregation> {
        self.tabular().map(|(_, agg)| agg.clone())
    }
}

impl Clone for Box<dyn Environment> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

pub const ENV_NAMES: [&str; 6] = [
    "counterexample",
    "chain11",
    "continuous-counterexample",
    "puddle-world",
    "mountain-car",
    "virtual-office",
];

pub fn make_env(name: &str) -> Result<Box<dyn Environment>, EnvError> {
    Ok(match name {
        "counterexample" => Box::new(TabularEnv::counterexample()),
        "chain11" => Box::new(TabularEnv::chain11()),
        "continuous-counterexample" => Box::new(ContinuousCounterexample::new()),
        "puddle-world" => Box::new(PuddleWorld::new()),
        "mountain-car" => Box::new(MountainCar::new()),
        "virtual-office" => Box::new(VirtualOffice::new()),
        other => return Err(EnvError::UnknownEnvironment(other.to_string())),
    })
}

pub fn sample_discrete(probs: &[f64], rng: &mut Prng) -> usize {
    use rand::Rng;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}
