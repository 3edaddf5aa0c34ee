//! Numeric constants of the simulated domains that are not fixed by the
//! method description. Changing any value here changes experiment results.

/// Discount applied to non-terminating transitions in the control domains.
pub const CONTROL_GAMMA: f64 = 0.95;

pub mod counterexample {
    pub const BEHAVIOUR: [f64; 2] = [0.25, 0.75];
}

pub mod continuous_counterexample {
    pub const BEHAVIOUR_MEAN: f64 = 1.0;
    pub const BEHAVIOUR_STD: f64 = 1.0;
}

pub mod mountain_car {
    pub const MIN_POSITION: f64 = -1.2;
    pub const MAX_POSITION: f64 = 0.5;
    pub const MAX_SPEED: f64 = 0.07;
    pub const GOAL_POSITION: f64 = 0.5;
    pub const FORCE: f64 = 0.001;
    pub const GRAVITY: f64 = 0.0025;
    pub const START_LOW: f64 = -0.6;
    pub const START_HIGH: f64 = -0.4;
    pub const BEHAVIOUR: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
}

pub mod puddle_world {
    /// Actions in order North, East, South, West.
    pub const BEHAVIOUR: [f64; 4] = [0.45, 0.45, 0.05, 0.05];
    pub const STEP: f64 = 0.05;
    pub const NOISE_STD: f64 = 0.01;
    /// Reached when `x + y >= GOAL_SUM`.
    pub const GOAL_SUM: f64 = 1.9;
    pub const START_LOW: f64 = 0.1;
    pub const START_HIGH: f64 = 0.3;
    pub const PUDDLE_PENALTY: f64 = 400.0;
    pub const STEP_REWARD: f64 = -1.0;
    /// Capsules `(x1, y1, x2, y2, radius)`.
    pub const PUDDLES: [(f64, f64, f64, f64, f64); 3] = [
        (0.1, 0.75, 0.45, 0.75, 0.1),
        (0.45, 0.4, 0.45, 0.8, 0.1),
        (0.75, 0.85, 0.85, 0.85, 0.05),
    ];
}

pub mod virtual_office {
    pub const WIDTH: usize = 11;
    pub const HEIGHT: usize = 7;
    /// Rows of `WIDTH` characters: `#` wall, `.` hallway floor, `r` room floor.
    pub const LAYOUT: [&str; 7] = [
        "###########",
        "#..#rrrrrr#",
        "#..rrrrrrr#",
        "#..########",
        "#..#rrrrrr#",
        "#..rrrrrrr#",
        "###########",
    ];
    /// `(row, col, reward)`; entering one ends the episode.
    pub const GOALS: [(usize, usize, f64); 4] =
        [(1, 9, 1.0), (2, 9, 0.0), (4, 9, 0.0), (5, 9, 0.5)];
    pub const START: (usize, usize) = (3, 1);
    /// Facing direction at the start, index into North, East, South, West.
    pub const START_HEADING: usize = 1;
    pub const BEHAVIOUR: [f64; 4] = [0.2, 0.4, 0.3, 0.1];
    pub const WALL_RGB: [f64; 3] = [0.5, 0.5, 0.5];
    pub const HALL_RGB: [f64; 3] = [0.0, 0.0, 0.0];
    pub const ROOM_RGB: [f64; 3] = [0.0, 0.5, 0.0];
    pub const VIEW: usize = 3;
}
