use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::constants::puddle_world::*;
use super::constants::CONTROL_GAMMA;
use super::{
    Action, ActionSpace, Behaviour, EnvError, EnvState, Environment, Observation, ObservationSpace,
    StepResult,
};
use crate::Prng;

const MOVES: [(f64, f64); 4] = [(0.0, STEP), (STEP, 0.0), (0.0, -STEP), (-STEP, 0.0)];

/// Continuous unit square with capsule-shaped puddles that cost extra reward.
#[derive(Debug, Clone)]
pub struct PuddleWorld {
    pos: [f64; 2],
}

fn segment_distance(p: [f64; 2], (x1, y1, x2, y2): (f64, f64, f64, f64)) -> f64 {
    let (dx, dy) = (x2 - x1, y2 - y1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p[0] - x1) * dx + (p[1] - y1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (cx, cy) = (x1 + t * dx, y1 + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}

impl PuddleWorld {
    pub fn new() -> Self {
        Self { pos: [START_LOW, START_LOW] }
    }

    /// Reward for arriving at `p`.
    pub fn reward_at(p: [f64; 2]) -> f64 {
        let penalty: f64 = PUDDLES
            .iter()
            .map(|&(x1, y1, x2, y2, r)| (r - segment_distance(p, (x1, y1, x2, y2))).max(0.0))
            .sum();
        STEP_REWARD - PUDDLE_PENALTY * penalty
    }

    pub fn is_goal(p: [f64; 2]) -> bool {
        p[0] + p[1] >= GOAL_SUM
    }

    fn sample_start(&mut self, rng: &mut Prng) {
        self.pos = [rng.random_range(START_LOW..START_HIGH), rng.random_range(START_LOW..START_HIGH)];
    }
}

impl Default for PuddleWorld {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for PuddleWorld {
    fn name(&self) -> &'static str {
        "puddle-world"
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Box { low: vec![0.0, 0.0], high: vec![1.0, 1.0] }
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(4)
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
            Action::Discrete(a) if a < 4 => a,
            other => return Err(EnvError::InvalidAction(other)),
        };
        let noise = Normal::new(0.0, NOISE_STD).expect("valid noise");
        let (dx, dy) = MOVES[a];
        let next = [
            (self.pos[0] + dx + noise.sample(rng)).clamp(0.0, 1.0),
            (self.pos[1] + dy + noise.sample(rng)).clamp(0.0, 1.0),
        ];
        let reward = Self::reward_at(next);
        self.pos = next;
        let gamma = if Self::is_goal(next) {
            self.sample_start(rng);
            0.0
        } else {
            CONTROL_GAMMA
        };
        Ok(StepResult { next_obs: self.observe(), reward, gamma, episode_start: gamma == 0.0 })
    }

    fn observe(&self) -> Observation {
        Observation::Vector(self.pos.to_vec())
    }

    fn state(&self) -> EnvState {
        EnvState::Continuous(self.pos.to_vec())
    }

    fn set_state(&mut self, state: &EnvState) -> Result<Observation, EnvError> {
        match state {
            EnvState::Continuous(s) if s.len() == 2 => {
                self.pos = [s[0], s[1]];
                Ok(self.observe())
            }
            other => Err(EnvError::InvalidState(other.clone())),
        }
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}
