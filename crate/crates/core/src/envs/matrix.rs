//! One-shot two-player coordination game.
//!
//! Joint action (0, 0) pays 1 to each agent. (1, 1) is a safe-looking
//! alternative worth 0.8, and mixing actions 0 and 1 costs 0.5. Action 2 is
//! a neutral fallback.

use serde::{Deserialize, Serialize};

pub const NUM_AGENTS: usize = 2;
pub const NUM_ACTIONS: usize = 3;
pub const OBS_WIDTH: usize = 1;

pub const PAYOFF: [[f64; NUM_ACTIONS]; NUM_ACTIONS] = [
    [1.0, -0.5, 0.0],
    [-0.5, 0.8, 0.0],
    [0.0, 0.0, 0.0],
];

pub const REWARD_BOUNDS: (f64, f64) = (-0.5, 1.0);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixState;

impl MatrixState {
    pub fn observation(&self) -> Vec<f64> {
        vec![1.0]
    }

    pub fn payoff(&self, actions: &[usize]) -> f64 {
        PAYOFF[actions[0]][actions[1]]
    }

    /// Best payoff over all joint actions.
    pub fn best_payoff() -> f64 {
        PAYOFF
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
