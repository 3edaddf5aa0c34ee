use std::collections::HashMap;
use std::sync::Arc;

use super::constants::virtual_office::*;
use super::constants::CONTROL_GAMMA;
use super::{
    Action, ActionSpace, Behaviour, EnvError, EnvState, Environment, Observation, ObservationSpace,
    StepResult,
};
use crate::mdp::{FiniteMdp, StateAggregation};
use crate::Prng;

/// Row/column offsets for North, East, South, West.
const HEADINGS: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Pose {
    row: usize,
    col: usize,
    heading: usize,
}

fn cell(row: isize, col: isize) -> u8 {
    if row < 0 || col < 0 || row >= HEIGHT as isize || col >= WIDTH as isize {
        return b'#';
    }
    LAYOUT[row as usize].as_bytes()[col as usize]
}

fn goal_reward(row: usize, col: usize) -> Option<f64> {
    GOALS.iter().find(|g| g.0 == row && g.1 == col).map(|g| g.2)
}

fn rgb(c: u8) -> [f64; 3] {
    match c {
        b'#' => WALL_RGB,
        b'r' => ROOM_RGB,
        _ => HALL_RGB,
    }
}

/// Forward `VIEW × VIEW` patch as RGB, nearest row first and left to right.
/// A wall hides everything behind it in the same column of the patch.
fn view(p: Pose) -> Vec<f64> {
    let (fr, fc) = HEADINGS[p.heading];
    let (rr, rc) = HEADINGS[(p.heading + 1) % 4];
    let half = (VIEW / 2) as isize;
    let mut blocked = [false; VIEW];
    let mut out = Vec::with_capacity(VIEW * VIEW * 3);
    for depth in 1..=VIEW as isize {
        for (j, lat) in (-half..=half).enumerate() {
            let row = p.row as isize + depth * fr + lat * rr;
            let col = p.col as isize + depth * fc + lat * rc;
            let c = if blocked[j] { b'#' } else { cell(row, col) };
            if c == b'#' {
                blocked[j] = true;
            }
            out.extend_from_slice(&rgb(c));
        }
    }
    out
}

/// Hallway with two visually identical rooms; hidden corner goals pay
/// differently in each room.
#[derive(Debug, Clone)]
pub struct VirtualOffice {
    model: Arc<Model>,
    state: usize,
}

#[derive(Debug)]
struct Model {
    poses: Vec<Pose>,
    index: HashMap<Pose, usize>,
    mdp: FiniteMdp<f64>,
    agg: StateAggregation,
    start: usize,
}

impl VirtualOffice {
    pub fn new() -> Self {
        let mut poses = Vec::new();
        for row in 0..HEIGHT {
            for col in 0..WIDTH {
                if cell(row as isize, col as isize) != b'#' && goal_reward(row, col).is_none() {
                    for heading in 0..4 {
                        poses.push(Pose { row, col, heading });
                    }
                }
            }
        }
        let index: HashMap<Pose, usize> = poses.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let start = index[&Pose { row: START.0, col: START.1, heading: START_HEADING }];
        let n = poses.len();
        let mut b = FiniteMdp::builder(n, 4).start(start, 1.0);
        for (s, p) in poses.iter().enumerate() {
            for a in 0..4 {
                let (next, reward, gamma) = Self::transition(&index, start, *p, a);
                b = b.transition(s, a, next, 1.0, reward, gamma);
            }
        }
        let mdp = b.build().expect("office model is valid");

        let mut by_obs: HashMap<Vec<u64>, usize> = HashMap::new();
        let rep: Vec<usize> = poses
            .iter()
            .map(|p| {
                let key: Vec<u64> = view(*p).iter().map(|x| x.to_bits()).collect();
                let next = by_obs.len();
                *by_obs.entry(key).or_insert(next)
            })
            .collect();
        let agg = StateAggregation::new(rep);
        Self { model: Arc::new(Model { poses, index, mdp, agg, start }), state: start }
    }

    fn transition(index: &HashMap<Pose, usize>, start: usize, p: Pose, a: usize) -> (usize, f64, f64) {
        let (dr, dc) = HEADINGS[a];
        let (row, col) = (p.row as isize + dr, p.col as isize + dc);
        if cell(row, col) == b'#' {
            return (index[&Pose { heading: a, ..p }], 0.0, CONTROL_GAMMA);
        }
        let (row, col) = (row as usize, col as usize);
        match goal_reward(row, col) {
            Some(r) => (start, r, 0.0),
            None => (index[&Pose { row, col, heading: a }], 0.0, CONTROL_GAMMA),
        }
    }

    pub fn n_states(&self) -> usize {
        self.model.poses.len()
    }

    /// Index of the state at `(row, col)` facing `heading` (N, E, S, W).
    pub fn state_index(&self, row: usize, col: usize, heading: usize) -> Option<usize> {
        self.model.index.get(&Pose { row, col, heading }).copied()
    }

    pub fn observation_of(&self, state: usize) -> Vec<f64> {
        view(self.model.poses[state])
    }
}

impl Default for VirtualOffice {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for VirtualOffice {
    fn name(&self) -> &'static str {
        "virtual-office"
    }

    fn observation_space(&self) -> ObservationSpace {
        let d = VIEW * VIEW * 3;
        ObservationSpace::Box { low: vec![0.0; d], high: vec![1.0; d] }
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(4)
    }

    fn behaviour(&self) -> Behaviour {
        Behaviour::Discrete(BEHAVIOUR.to_vec())
    }

    fn reset(&mut self, _rng: &mut Prng) -> Observation {
        self.state = self.model.start;
        self.observe()
    }

    fn step(&mut self, action: Action, _rng: &mut Prng) -> Result<StepResult, EnvError> {
        let a = match action {
            Action::Discrete(a) if a < 4 => a,
            other => return Err(EnvError::InvalidAction(other)),
        };
        let (next, reward, gamma) = Self::transition(&self.model.index, self.model.start, self.model.poses[self.state], a);
        self.state = next;
        Ok(StepResult { next_obs: self.observe(), reward, gamma, episode_start: gamma == 0.0 })
    }

    fn observe(&self) -> Observation {
        Observation::Vector(view(self.model.poses[self.state]))
    }

    fn state(&self) -> EnvState {
        EnvState::Discrete(self.state)
    }

    fn set_state(&mut self, state: &EnvState) -> Result<Observation, EnvError> {
        match state {
            EnvState::Discrete(s) if *s < self.model.poses.len() => {
                self.state = *s;
                Ok(self.observe())
            }
            other => Err(EnvError::InvalidState(other.clone())),
        }
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }

    fn tabular(&self) -> Option<(&FiniteMdp<f64>, &StateAggregation)> {
        Some((&self.model.mdp, &self.model.agg))
    }
}
