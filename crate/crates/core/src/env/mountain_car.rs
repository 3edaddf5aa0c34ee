use rand::Rng;

use super::constants::mountain_car::*;
use super::constants::CONTROL_GAMMA;
use super::{
    Action, ActionSpace, Behaviour, EnvError, EnvState, Environment, Observation, ObservationSpace,
    StepResult,
};
use crate::Prng;

/// Underpowered car in a valley; actions push left, coast, push right.
#[derive(Debug, Clone)]
pub struct MountainCar {
    position: f64,
    velocity: f64,
}

impl MountainCar {
    pub fn new() -> Self {
        Self { position: -0.5, velocity: 0.0 }
    }

    pub fn position(&self) -> f64 {
        self.position
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    /// One application of the dynamics without termination handling.
    pub fn dynamics(position: f64, velocity: f64, action: usize) -> (f64, f64) {
        let mut v = velocity + FORCE * (action as f64 - 1.0) - GRAVITY * (3.0 * position).cos();
        v = v.clamp(-MAX_SPEED, MAX_SPEED);
        let mut x = position + v;
        if x < MIN_POSITION {
            x = MIN_POSITION;
            v = 0.0;
        }
        (x.min(MAX_POSITION), v)
    }

    fn sample_start(&mut self, rng: &mut Prng) {
        self.position = rng.random_range(START_LOW..START_HIGH);
        self.velocity = 0.0;
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for MountainCar {
    fn name(&self) -> &'static str {
        "mountain-car"
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Box {
            low: vec![MIN_POSITION, -MAX_SPEED],
            high: vec![MAX_POSITION, MAX_SPEED],
        }
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(3)
    }

    fn behaviour(&self) -> Behaviour {
        Behaviour::Discrete(BEHAVIOUR.to_vec())
    }

    fn reset(&mut self, rng: &mut Prng) -> Observation {
        self.sample_start(rng);
        self.observe()
    }

    fn step(&mut self, action: Action, rng: &mut Prng) -> Result<StepResult, EnvError> {
        let a = match action {
            Action::Discrete(a) if a < 3 => a,
            other => return Err(EnvError::InvalidAction(other)),
        };
        let (x, v) = Self::dynamics(self.position, self.velocity, a);
        self.position = x;
        self.velocity = v;
        let gamma = if x >= GOAL_POSITION {
            self.sample_start(rng);
            0.0
        } else {
            CONTROL_GAMMA
        };
        Ok(StepResult { next_obs: self.observe(), reward: -1.0, gamma, episode_start: gamma == 0.0 })
    }

    fn observe(&self) -> Observation {
        Observation::Vector(vec![self.position, self.velocity])
    }

    fn state(&self) -> EnvState {
        EnvState::Continuous(vec![self.position, self.velocity])
    }

    fn set_state(&mut self, state: &EnvState) -> Result<Observation, EnvError> {
        match state {
            EnvState::Continuous(s) if s.len() == 2 => {
                self.position = s[0];
                self.velocity = s[1];
                Ok(self.observe())
            }
            other => Err(EnvError::InvalidState(other.clone())),
        }
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}
