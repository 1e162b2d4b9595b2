use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_STATES: usize = 16;
pub const MAX_ACTIONS: usize = 4;

const ROW_TOLERANCE: f64 = 1e-12;

/// Finite MDP with row-stochastic transitions `T(s′|s,a)` and rewards `r(s,a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMDP {
    num_states: usize,
    num_actions: usize,
    /// `transitions[s][a][s′]`
    transitions: Vec<Vec<Vec<f64>>>,
    /// `rewards[s][a]`
    rewards: Vec<Vec<f64>>,
    gamma: f64,
}

impl TabularMDP {
    pub fn new(transitions: Vec<Vec<Vec<f64>>>, rewards: Vec<Vec<f64>>, gamma: f64) -> Result<Self> {
        let num_states = transitions.len();
        let num_actions = transitions.first().map_or(0, Vec::len);
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Parameter("MDP needs at least one state and one action".into()));
        }
        if num_states > MAX_STATES || num_actions > MAX_ACTIONS {
            return Err(Error::Capability(format!(
                "tabular oracle supports at most {MAX_STATES} states and {MAX_ACTIONS} actions, got {num_states}x{num_actions}"
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Parameter(format!("discount must be in (0, 1), got {gamma}")));
        }
        if rewards.len() != num_states {
            return Err(Error::shape("reward rows", num_states, rewards.len()));
        }
        for s in 0..num_states {
            if transitions[s].len() != num_actions {
                return Err(Error::shape("transition actions", num_actions, transitions[s].len()));
            }
            if rewards[s].len() != num_actions {
                return Err(Error::shape("reward actions", num_actions, rewards[s].len()));
            }
            for a in 0..num_actions {
                let row = &transitions[s][a];
                if row.len() != num_states {
                    return Err(Error::shape("transition row", num_states, row.len()));
                }
                if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                    return Err(Error::Parameter(format!("T(.|{s},{a}) has a negative or non-finite entry")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(Error::Parameter(format!("T(.|{s},{a}) sums to {sum}")));
                }
                if !rewards[s][a].is_finite() {
                    return Err(Error::NonFinite("reward"));
                }
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            transitions,
            rewards,
            gamma,
        })
    }

    /// Random MDP with Dirichlet-like transition rows and rewards in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(num_states: usize, num_actions: usize, gamma: f64, rng: &mut R) -> Result<Self> {
        let transitions = (0..num_states)
            .map(|_| {
                (0..num_actions)
                    .map(|_| {
                        let w: Vec<f64> = (0..num_states).map(|_| rng.gen::<f64>() + 1e-3).collect();
                        let total: f64 = w.iter().sum();
                        let mut row: Vec<f64> = w.iter().map(|x| x / total).collect();
                        // Put the rounding residue on the last entry so the row sums to 1.
                        let head: f64 = row[..num_states - 1].iter().sum();
                        row[num_states - 1] = (1.0 - head).max(0.0);
                        row
                    })
                    .collect()
            })
            .collect();
        let rewards = (0..num_states)
            .map(|_| (0..num_actions).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        Self::new(transitions, rewards, gamma)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s][a]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        &self.transitions[s][a]
    }
}

/// Dense `Q(s, a)` table.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_actions,
            values: vec![0.0; num_states * num_actions],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_actions) {
            return Err(Error::Parameter("ragged Q table".into()));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Q table"));
        }
        Ok(Self { num_actions, values })
    }

    pub fn num_states(&self) -> usize {
        if self.num_actions == 0 {
            0
        } else {
            self.values.len() / self.num_actions
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.num_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_row(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn check_shape(&self, mdp: &TabularMDP) -> Result<()> {
        if self.num_actions != mdp.num_actions() || self.num_states() != mdp.num_states() {
            return Err(Error::shape(
                "Q table",
                mdp.num_states() * mdp.num_actions(),
                self.values.len(),
            ));
        }
        Ok(())
    }
}

/// Per-state action distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    probs: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in probs.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                return Err(Error::Parameter(format!("policy row {s} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Parameter(format!("policy row {s} sums to {sum}")));
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            probs: vec![vec![1.0 / num_actions as f64; num_actions]; num_states],
        }
    }

    /// Random policy with every probability at least `min_prob / |A|`-ish.
    pub fn random_positive<R: Rng + ?Sized>(num_states: usize, num_actions: usize, rng: &mut R) -> Self {
        let probs = (0..num_states)
            .map(|_| {
                let w: Vec<f64> = (0..num_actions).map(|_| rng.gen::<f64>() + 0.05).collect();
                let total: f64 = w.iter().sum();
                w.into_iter().map(|x| x / total).collect()
            })
            .collect();
        Self { probs }
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s][a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s]
    }

    pub(crate) fn check_shape(&self, mdp: &TabularMDP) -> Result<()> {
        if self.probs.len() != mdp.num_states() {
            return Err(Error::shape("policy states", mdp.num_states(), self.probs.len()));
        }
        for row in &self.probs {
            if row.len() != mdp.num_actions() {
                return Err(Error::shape("policy actions", mdp.num_actions(), row.len()));
            }
        }
        Ok(())
    }
}
