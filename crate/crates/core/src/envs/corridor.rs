//! Two paddles keep a ball in play.
//!
//! The field is `WIDTH` columns by `HEIGHT` rows. Paddle 0 guards column 0,
//! paddle 1 guards column `WIDTH − 1`; each covers `PADDLE` rows and moves up,
//! stays or moves down. The ball moves one cell diagonally per step and
//! bounces off the top and bottom walls. Reaching a guarded column outside the
//! paddle ends the episode. Each agent sees the ball only while it is in its
//! own half of the field.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WIDTH: i32 = 8;
pub const HEIGHT: i32 = 5;
pub const PADDLE: i32 = 2;
pub const NUM_AGENTS: usize = 2;
pub const NUM_ACTIONS: usize = 3;
pub const OBS_WIDTH: usize = 6;
pub const SURVIVAL_REWARD: f64 = 0.1;

const PADDLE_MAX: i32 = HEIGHT - PADDLE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorParams {
    pub horizon: usize,
}

impl Default for CorridorParams {
    fn default() -> Self {
        Self { horizon: 50 }
    }
}

impl CorridorParams {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("corridor_keepup horizon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorridorState {
    /// Top row covered by each paddle.
    pub paddles: [i32; 2],
    pub ball: (i32, i32),
    pub velocity: (i32, i32),
}

impl CorridorState {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let sign = |r: &mut R| if r.gen::<bool>() { 1 } else { -1 };
        Self {
            paddles: [PADDLE_MAX / 2; 2],
            ball: (rng.gen_range(WIDTH / 2 - 1..=WIDTH / 2), rng.gen_range(0..HEIGHT)),
            velocity: (sign(rng), sign(rng)),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.paddles.iter().all(|p| (0..=PADDLE_MAX).contains(p))
            && (0..WIDTH).contains(&self.ball.0)
            && (0..HEIGHT).contains(&self.ball.1)
            && self.velocity.0.abs() == 1
            && self.velocity.1.abs() == 1
    }

    /// Advances one step; returns false if the ball got past a paddle.
    pub fn apply(&mut self, actions: &[usize]) -> bool {
        for (p, &a) in self.paddles.iter_mut().zip(actions) {
            *p = (*p + a as i32 - 1).clamp(0, PADDLE_MAX);
        }
        let (mut x, mut y) = self.ball;
        let (mut vx, mut vy) = self.velocity;
        y += vy;
        if y < 0 {
            y = -y;
            vy = -vy;
        } else if y > HEIGHT - 1 {
            y = 2 * (HEIGHT - 1) - y;
            vy = -vy;
        }
        x += vx;
        let guard = if x == 0 {
            Some(0)
        } else if x == WIDTH - 1 {
            Some(1)
        } else {
            None
        };
        self.ball = (x, y);
        self.velocity = (vx, vy);
        if let Some(g) = guard {
            let top = self.paddles[g];
            if !(top..top + PADDLE).contains(&y) {
                return false;
            }
            vx = -vx;
            self.velocity = (vx, vy);
        }
        true
    }

    pub fn sees_ball(&self, agent: usize) -> bool {
        if agent == 0 {
            self.ball.0 < WIDTH / 2
        } else {
            self.ball.0 >= WIDTH / 2
        }
    }

    pub fn observation(&self, agent: usize) -> Vec<f64> {
        let mut obs = vec![self.paddles[agent] as f64 / PADDLE_MAX as f64];
        if self.sees_ball(agent) {
            obs.extend([
                1.0,
                self.ball.0 as f64 / (WIDTH - 1) as f64,
                self.ball.1 as f64 / (HEIGHT - 1) as f64,
                self.velocity.0 as f64,
                self.velocity.1 as f64,
            ]);
        } else {
            obs.extend([0.0; 5]);
        }
        obs
    }
}
