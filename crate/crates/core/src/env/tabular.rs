use super::constants::counterexample::BEHAVIOUR;
use super::{
    sample_discrete, Action, ActionSpace, Behaviour, EnvError, EnvState, Environment, Observation,
    ObservationSpace, StepResult,
};
use crate::mdp::{FiniteMdp, StateAggregation};
use crate::Prng;

/// Three states: `s0` leads to `s1` (a0) or `s2` (a1); `s1` and `s2` are aliased
/// and terminate with reward 2 for a0 in `s1` and 1 for a1 in `s2`.
pub fn make_counterexample() -> (FiniteMdp<f64>, StateAggregation) {
    let mdp = FiniteMdp::builder(3, 2)
        .transition(0, 0, 1, 1.0, 0.0, 1.0)
        .transition(0, 1, 2, 1.0, 0.0, 1.0)
        .transition(1, 0, 0, 1.0, 2.0, 0.0)
        .transition(1, 1, 0, 1.0, 0.0, 0.0)
        .transition(2, 0, 0, 1.0, 0.0, 0.0)
        .transition(2, 1, 0, 1.0, 1.0, 0.0)
        .start(0, 1.0)
        .build()
        .expect("counterexample model is valid");
    (mdp, StateAggregation::new(vec![0, 1, 1]))
}

/// Eleven states: two four-state corridors before an aliased pair `s9`, `s10`
/// that behaves like `s1`, `s2` of the three-state problem.
pub fn make_chain11() -> (FiniteMdp<f64>, StateAggregation) {
    let mut b = FiniteMdp::builder(11, 2)
        .transition(0, 0, 1, 1.0, 0.0, 1.0)
        .transition(0, 1, 5, 1.0, 0.0, 1.0);
    for (from, to) in [(1, 2), (2, 3), (3, 4), (4, 9), (5, 6), (6, 7), (7, 8), (8, 10)] {
        for a in 0..2 {
            b = b.transition(from, a, to, 1.0, 0.0, 1.0);
        }
    }
    let mdp = b
        .transition(9, 0, 0, 1.0, 2.0, 0.0)
        .transition(9, 1, 0, 1.0, 0.0, 0.0)
        .transition(10, 0, 0, 1.0, 0.0, 0.0)
        .transition(10, 1, 0, 1.0, 1.0, 0.0)
        .start(0, 1.0)
        .build()
        .expect("chain model is valid");
    let rep = vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9];
    (mdp, StateAggregation::new(rep))
}

/// Samples a [`FiniteMdp`] one transition at a time.
#[derive(Debug, Clone)]
pub struct TabularEnv {
    name: &'static str,
    mdp: FiniteMdp<f64>,
    agg: StateAggregation,
    behaviour: Vec<f64>,
    state: usize,
}

impl TabularEnv {
    pub fn new(
        name: &'static str,
        mdp: FiniteMdp<f64>,
        agg: StateAggregation,
        behaviour: Vec<f64>,
    ) -> Self {
        let state = mdp.d0().iter().position(|p| *p > 0.0).unwrap_or(0);
        Self { name, mdp, agg, behaviour, state }
    }

    pub fn counterexample() -> Self {
        let (mdp, agg) = make_counterexample();
        Self::new("counterexample", mdp, agg, BEHAVIOUR.to_vec())
    }

    pub fn chain11() -> Self {
        let (mdp, agg) = make_chain11();
        Self::new("chain11", mdp, agg, BEHAVIOUR.to_vec())
    }

    pub fn mdp(&self) -> &FiniteMdp<f64> {
        &self.mdp
    }

    pub fn aggregation(&self) -> &StateAggregation {
        &self.agg
    }

    pub fn current(&self) -> usize {
        self.state
    }
}

impl Environment for TabularEnv {
    fn name(&self) -> &'static str {
        self.name
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Discrete(self.mdp.n_states())
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(self.mdp.n_actions())
    }

    fn behaviour(&self) -> Behaviour {
        Behaviour::Discrete(self.behaviour.clone())
    }

    fn reset(&mut self, rng: &mut Prng) -> Observation {
        self.state = sample_discrete(self.mdp.d0(), rng);
        Observation::Discrete(self.state)
    }

    fn step(&mut self, action: Action, rng: &mut Prng) -> Result<StepResult, EnvError> {
        let a = match action {
            Action::Discrete(a) if a < self.mdp.n_actions() => a,
            other => return Err(EnvError::InvalidAction(other)),
        };
        let s = self.state;
        let s2 = sample_discrete(self.mdp.successors(s, a), rng);
        let gamma = self.mdp.gamma(s, a, s2);
        let reward = self.mdp.r(s, a, s2);
        self.state = s2;
        Ok(StepResult {
            next_obs: Observation::Discrete(s2),
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
            EnvState::Discrete(s) if *s < self.mdp.n_states() => {
                self.state = *s;
                Ok(Observation::Discrete(*s))
            }
            other => Err(EnvError::InvalidState(other.clone())),
        }
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }

    fn tabular(&self) -> Option<(&FiniteMdp<f64>, &StateAggregation)> {
        Some((&self.mdp, &self.agg))
    }
}
