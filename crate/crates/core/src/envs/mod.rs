//! Small cooperative environments with partial observations and discrete
//! actions.
//!
//! Observation entries always lie in `[-1, 1]`. Per-step rewards stay within
//! [`Env::reward_bounds`].

pub mod corridor;
pub mod grid;
pub mod matrix;
mod trajectory;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corridor::{CorridorParams, CorridorState};
pub use grid::{GridParams, GridState};
pub use matrix::MatrixState;
pub use trajectory::{TrajectoryRecord, TrajectoryWriter};

pub const OBS_BOUNDS: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvKind {
    MatrixCoordination,
    GridSpread(GridParams),
    CorridorKeepup(CorridorParams),
}

impl EnvKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvKind::MatrixCoordination => Ok(()),
            EnvKind::GridSpread(p) => p.validate(),
            EnvKind::CorridorKeepup(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::MatrixCoordination => "matrix_coordination",
            EnvKind::GridSpread(_) => "grid_spread",
            EnvKind::CorridorKeepup(_) => "corridor_keepup",
        }
    }

    /// Kind with default parameters from its name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "matrix_coordination" => Ok(EnvKind::MatrixCoordination),
            "grid_spread" => Ok(EnvKind::GridSpread(GridParams::default())),
            "corridor_keepup" => Ok(EnvKind::CorridorKeepup(CorridorParams::default())),
            other => Err(Error::Config(format!("unknown environment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub num_agents: usize,
    pub obs_width: usize,
    pub num_actions: usize,
    pub episode_limit: usize,
    pub reward_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observations: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub info: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum EnvState {
    Matrix(MatrixState),
    Grid(GridState),
    Corridor(CorridorState),
}

/// One environment instance. The whole state serializes, so a run can be
/// checkpointed mid-episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Env {
    kind: EnvKind,
    reward_scale: f64,
    state: Option<EnvState>,
    t: usize,
    done: bool,
}

impl Env {
    pub fn new(kind: EnvKind, reward_scale: f64) -> Result<Self> {
        kind.validate()?;
        if !(reward_scale > 0.0 && reward_scale.is_finite()) {
            return Err(Error::Config(format!("reward scale must be positive, got {reward_scale}")));
        }
        Ok(Self {
            kind,
            reward_scale,
            state: None,
            t: 0,
            done: false,
        })
    }

    pub fn kind(&self) -> &EnvKind {
        &self.kind
    }

    pub fn spec(&self) -> EnvSpec {
        let (num_agents, obs_width, num_actions, episode_limit) = match &self.kind {
            EnvKind::MatrixCoordination => (matrix::NUM_AGENTS, matrix::OBS_WIDTH, matrix::NUM_ACTIONS, 1),
            EnvKind::GridSpread(p) => (p.num_agents, p.obs_width(), grid::NUM_ACTIONS, p.horizon),
            EnvKind::CorridorKeepup(p) => (corridor::NUM_AGENTS, corridor::OBS_WIDTH, corridor::NUM_ACTIONS, p.horizon),
        };
        EnvSpec {
            num_agents,
            obs_width,
            num_actions,
            episode_limit,
            reward_scale: self.reward_scale,
        }
    }

    /// Per-agent, per-step reward range after scaling.
    pub fn reward_bounds(&self) -> (f64, f64) {
        let (lo, hi) = match &self.kind {
            EnvKind::MatrixCoordination => matrix::REWARD_BOUNDS,
            EnvKind::GridSpread(p) => p.reward_bounds(),
            EnvKind::CorridorKeepup(_) => (0.0, corridor::SURVIVAL_REWARD),
        };
        (lo * self.reward_scale, hi * self.reward_scale)
    }

    pub fn reset(&mut self, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = match &self.kind {
            EnvKind::MatrixCoordination => EnvState::Matrix(MatrixState),
            EnvKind::GridSpread(p) => EnvState::Grid(GridState::random(p, &mut rng)),
            EnvKind::CorridorKeepup(_) => EnvState::Corridor(CorridorState::random(&mut rng)),
        };
        self.state = Some(state);
        self.t = 0;
        self.done = false;
        self.observations().expect("state was just set")
    }

    /// Starts an episode from an explicit grid layout.
    pub fn reset_grid(&mut self, state: GridState) -> Result<Vec<Vec<f64>>> {
        let EnvKind::GridSpread(p) = &self.kind else {
            return Err(Error::Config("reset_grid on a non-grid environment".into()));
        };
        let in_bounds = |c: &(i32, i32)| (0..grid::SIZE).contains(&c.0) && (0..grid::SIZE).contains(&c.1);
        if state.agents.len() != p.num_agents
            || state.landmarks.len() != p.num_landmarks
            || !state.agents.iter().chain(&state.landmarks).all(in_bounds)
        {
            return Err(Error::Parameter("grid layout does not match the environment".into()));
        }
        self.state = Some(EnvState::Grid(state));
        self.t = 0;
        self.done = false;
        self.observations()
    }

    /// Starts an episode from an explicit paddle and ball configuration.
    pub fn reset_corridor(&mut self, state: CorridorState) -> Result<Vec<Vec<f64>>> {
        if !matches!(self.kind, EnvKind::CorridorKeepup(_)) {
            return Err(Error::Config("reset_corridor on a non-corridor environment".into()));
        }
        if !state.is_valid() {
            return Err(Error::Parameter("corridor state out of range".into()));
        }
        self.state = Some(EnvState::Corridor(state));
        self.t = 0;
        self.done = false;
        self.observations()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn steps_taken(&self) -> usize {
        self.t
    }

    pub fn observations(&self) -> Result<Vec<Vec<f64>>> {
        let state = self.state.as_ref().ok_or(Error::Lifecycle("environment has not been reset"))?;
        Ok(match state {
            EnvState::Matrix(m) => vec![m.observation(); matrix::NUM_AGENTS],
            EnvState::Grid(g) => {
                let radius = match &self.kind {
                    EnvKind::GridSpread(p) => p.obs_radius,
                    _ => unreachable!("grid state implies grid kind"),
                };
                (0..g.agents.len()).map(|i| g.observation(i, radius)).collect()
            }
            EnvState::Corridor(c) => (0..corridor::NUM_AGENTS).map(|i| c.observation(i)).collect(),
        })
    }

    pub fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        if self.state.is_none() {
            return Err(Error::Lifecycle("environment has not been reset"));
        }
        if self.done {
            return Err(Error::Lifecycle("step called after the episode ended"));
        }
        let spec = self.spec();
        if actions.len() != spec.num_agents {
            return Err(Error::shape("joint action", spec.num_agents, actions.len()));
        }
        for (agent, &action) in actions.iter().enumerate() {
            if action >= spec.num_actions {
                return Err(Error::Action {
                    agent,
                    action,
                    num_actions: spec.num_actions,
                });
            }
        }
        let mut info = BTreeMap::new();
        let (raw, terminal) = match self.state.as_mut().expect("checked above") {
            EnvState::Matrix(m) => {
                let r = m.payoff(actions);
                info.insert("payoff".to_string(), r);
                (vec![r; matrix::NUM_AGENTS], true)
            }
            EnvState::Grid(g) => {
                let r = g.apply(actions);
                let collisions = (0..g.agents.len()).filter(|&i| g.collided(i)).count();
                info.insert("team_reward".to_string(), g.team_reward());
                info.insert("collisions".to_string(), collisions as f64);
                (r, false)
            }
            EnvState::Corridor(c) => {
                let alive = c.apply(actions);
                info.insert("miss".to_string(), if alive { 0.0 } else { 1.0 });
                let r = if alive { corridor::SURVIVAL_REWARD } else { 0.0 };
                (vec![r; corridor::NUM_AGENTS], !alive)
            }
        };
        self.t += 1;
        self.done = terminal || self.t >= spec.episode_limit;
        Ok(StepResult {
            observations: self.observations()?,
            rewards: raw.into_iter().map(|r| r * self.reward_scale).collect(),
            done: self.done,
            info,
        })
    }

    /// Exact best team return (sum over agents and steps) from the current
    /// state to the end of the episode.
    pub fn optimal_return(&self) -> Result<f64> {
        let state = self.state.as_ref().ok_or(Error::Lifecycle("environment has not been reset"))?;
        if self.done {
            return Ok(0.0);
        }
        let raw = match state {
            EnvState::Matrix(_) => MatrixState::best_payoff() * matrix::NUM_AGENTS as f64,
            EnvState::Grid(g) => grid::optimal_return(g, self.spec().episode_limit - self.t)?,
            EnvState::Corridor(_) => {
                return Err(Error::Capability(
                    "optimal return is only enumerated for matrix_coordination and grid_spread".into(),
                ))
            }
        };
        Ok(raw * self.reward_scale)
    }
}
