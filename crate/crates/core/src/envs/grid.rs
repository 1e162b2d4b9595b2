//! Landmark coverage on a 5×5 grid.
//!
//! Agents move one cell per step (or stay), clamped at the border. After the
//! move the team reward is minus the summed Manhattan distance from each
//! landmark to its nearest agent; an agent sharing its cell with another
//! agent loses an extra 1. Landmarks are always visible; other agents are
//! visible only within a Chebyshev radius.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIZE: i32 = 5;
pub const NUM_ACTIONS: usize = 5;
pub const MAX_AGENTS: usize = 4;
pub const MAX_LANDMARKS: usize = 4;
pub const MAX_ORACLE_AGENTS: usize = 3;
pub const MAX_ORACLE_HORIZON: usize = 6;
pub const COLLISION_PENALTY: f64 = 1.0;

const SCALE: f64 = (SIZE - 1) as f64;
const MOVES: [(i32, i32); NUM_ACTIONS] = [(0, 0), (0, -1), (0, 1), (-1, 0), (1, 0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub num_agents: usize,
    pub num_landmarks: usize,
    pub horizon: usize,
    pub obs_radius: i32,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            num_agents: 2,
            num_landmarks: 2,
            horizon: 6,
            obs_radius: 2,
        }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_AGENTS).contains(&self.num_agents) {
            return Err(Error::Config(format!("grid_spread supports 1..={MAX_AGENTS} agents")));
        }
        if !(1..=MAX_LANDMARKS).contains(&self.num_landmarks) {
            return Err(Error::Config(format!("grid_spread supports 1..={MAX_LANDMARKS} landmarks")));
        }
        if self.horizon == 0 {
            return Err(Error::Config("grid_spread horizon must be positive".into()));
        }
        if self.obs_radius < 0 {
            return Err(Error::Config("grid_spread observation radius must be >= 0".into()));
        }
        Ok(())
    }

    pub fn obs_width(&self) -> usize {
        2 + 2 * self.num_landmarks + 3 * (self.num_agents - 1)
    }

    /// Per-agent per-step reward range before scaling.
    pub fn reward_bounds(&self) -> (f64, f64) {
        let worst = (2 * (SIZE - 1)) as f64 * self.num_landmarks as f64;
        (-worst - COLLISION_PENALTY, 0.0)
    }
}

pub type Cell = (i32, i32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridState {
    pub agents: Vec<Cell>,
    pub landmarks: Vec<Cell>,
}

fn manhattan(a: Cell, b: Cell) -> i32 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

fn moved(c: Cell, action: usize) -> Cell {
    let (dx, dy) = MOVES[action];
    ((c.0 + dx).clamp(0, SIZE - 1), (c.1 + dy).clamp(0, SIZE - 1))
}

impl GridState {
    /// Agents and landmarks on distinct random cells.
    pub fn random<R: Rng + ?Sized>(params: &GridParams, rng: &mut R) -> Self {
        let cells = sample(rng, (SIZE * SIZE) as usize, params.num_agents + params.num_landmarks);
        let to_cell = |i: usize| ((i as i32) % SIZE, (i as i32) / SIZE);
        let all: Vec<Cell> = cells.iter().map(to_cell).collect();
        Self {
            agents: all[..params.num_agents].to_vec(),
            landmarks: all[params.num_agents..].to_vec(),
        }
    }

    pub fn team_reward(&self) -> f64 {
        -self
            .landmarks
            .iter()
            .map(|&l| self.agents.iter().map(|&a| manhattan(a, l)).min().unwrap_or(0))
            .sum::<i32>() as f64
    }

    pub fn collided(&self, i: usize) -> bool {
        self.agents
            .iter()
            .enumerate()
            .any(|(j, &c)| j != i && c == self.agents[i])
    }

    /// Moves every agent, then returns unscaled per-agent rewards.
    pub fn apply(&mut self, actions: &[usize]) -> Vec<f64> {
        for (a, &act) in self.agents.iter_mut().zip(actions) {
            *a = moved(*a, act);
        }
        let team = self.team_reward();
        (0..self.agents.len())
            .map(|i| team - if self.collided(i) { COLLISION_PENALTY } else { 0.0 })
            .collect()
    }

    pub fn observation(&self, i: usize, radius: i32) -> Vec<f64> {
        let (x, y) = self.agents[i];
        let mut obs = vec![x as f64 / SCALE, y as f64 / SCALE];
        for &(lx, ly) in &self.landmarks {
            obs.push((lx - x) as f64 / SCALE);
            obs.push((ly - y) as f64 / SCALE);
        }
        for (j, &(ox, oy)) in self.agents.iter().enumerate() {
            if j == i {
                continue;
            }
            if (ox - x).abs().max((oy - y).abs()) <= radius {
                obs.extend([(ox - x) as f64 / SCALE, (oy - y) as f64 / SCALE, 1.0]);
            } else {
                obs.extend([0.0, 0.0, 0.0]);
            }
        }
        obs
    }
}

/// Best achievable sum of per-agent rewards over `steps` remaining steps,
/// by exhaustive search over joint actions with memoization on positions.
pub fn optimal_return(state: &GridState, steps: usize) -> Result<f64> {
    if state.agents.len() > MAX_ORACLE_AGENTS || steps > MAX_ORACLE_HORIZON {
        return Err(Error::Capability(format!(
            "exact grid_spread search supports at most {MAX_ORACLE_AGENTS} agents and {MAX_ORACLE_HORIZON} steps"
        )));
    }
    let mut memo = HashMap::new();
    Ok(search(state, steps, &mut memo))
}

fn search(state: &GridState, steps: usize, memo: &mut HashMap<(Vec<Cell>, usize), f64>) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    if let Some(&v) = memo.get(&(state.agents.clone(), steps)) {
        return v;
    }
    let n = state.agents.len();
    let mut best = f64::NEG_INFINITY;
    let mut joint = vec![0usize; n];
    loop {
        let mut next = state.clone();
        let r: f64 = next.apply(&joint).iter().sum();
        best = best.max(r + search(&next, steps - 1, memo));
        // Odometer increment over the joint action space.
        let mut k = 0;
        while k < n {
            joint[k] += 1;
            if joint[k] < NUM_ACTIONS {
                break;
            }
            joint[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    memo.insert((state.agents.clone(), steps), best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_agent_shortest_path_oracle() {
        for (agent, landmark) in [((0, 0), (4, 4)), ((2, 1), (0, 3)), ((1, 1), (1, 2))] {
            let s = GridState {
                agents: vec![agent],
                landmarks: vec![landmark],
            };
            let d = manhattan(agent, landmark);
            let horizon = 6usize.max(d as usize).min(MAX_ORACLE_HORIZON);
            if (d as usize) > horizon {
                continue;
            }
            let expected = -(d * (d - 1) / 2) as f64;
            assert_eq!(optimal_return(&s, horizon).unwrap(), expected);
        }
    }

    #[test]
    fn zero_horizon_is_zero() {
        let s = GridState::random(&GridParams::default(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(0));
        assert_eq!(optimal_return(&s, 0).unwrap(), 0.0);
    }

    #[test]
    fn oracle_capability_limits() {
        let params = GridParams {
            num_agents: 4,
            ..Default::default()
        };
        let s = GridState::random(&params, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(optimal_return(&s, 2), Err(Error::Capability(_))));
        let s = GridState::random(&GridParams::default(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(optimal_return(&s, 7), Err(Error::Capability(_))));
    }

    #[test]
    fn two_agents_brute_force_agrees() {
        // Plain recursion without memoization as an independent oracle.
        fn brute(s: &GridState, steps: usize) -> f64 {
            if steps == 0 {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for a in 0..NUM_ACTIONS {
                for b in 0..NUM_ACTIONS {
                    let mut n = s.clone();
                    let r: f64 = n.apply(&[a, b]).iter().sum();
                    best = best.max(r + brute(&n, steps - 1));
                }
            }
            best
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let s = GridState::random(&GridParams::default(), &mut rng);
            assert_eq!(optimal_return(&s, 3).unwrap(), brute(&s, 3));
        }
    }

    use rand::SeedableRng;
}
