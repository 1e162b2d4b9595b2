use std::collections::HashMap;

use crate::error::{Error, Result};

/// Default per-dimension quantization step for observation keys.
pub const DEFAULT_KEY_RESOLUTION: f64 = 1e-3;

/// Hashable identity of a state for behavior counting.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Vec<i64>);

impl StateKey {
    /// Quantizes every coordinate to a grid of step `resolution`.
    pub fn quantize(obs: &[f64], resolution: f64) -> Self {
        StateKey(obs.iter().map(|x| (x / resolution).round() as i64).collect())
    }

    /// Exact key for enumerable (tabular) states.
    pub fn from_index(index: usize) -> Self {
        StateKey(vec![index as i64])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct StateCounts {
    per_action: Vec<u64>,
    total: u64,
}

/// Empirical behavior distribution of a dataset: per-state action counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalBehavior {
    num_actions: usize,
    counts: HashMap<StateKey, StateCounts>,
}

impl EmpiricalBehavior {
    pub fn new(num_actions: usize) -> Self {
        Self {
            num_actions,
            counts: HashMap::new(),
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn record(&mut self, key: StateKey, action: usize) {
        let n = self.num_actions;
        let entry = self.counts.entry(key).or_insert_with(|| StateCounts {
            per_action: vec![0; n],
            total: 0,
        });
        entry.per_action[action] += 1;
        entry.total += 1;
    }

    /// Removes one occurrence; states whose total reaches zero are forgotten.
    pub fn forget(&mut self, key: &StateKey, action: usize) {
        let Some(entry) = self.counts.get_mut(key) else {
            debug_assert!(false, "forgetting a state that was never recorded");
            return;
        };
        debug_assert!(entry.per_action[action] > 0);
        entry.per_action[action] -= 1;
        entry.total -= 1;
        if entry.total == 0 {
            self.counts.remove(key);
        }
    }

    pub fn count(&self, key: &StateKey, action: usize) -> u64 {
        self.counts.get(key).map_or(0, |c| c.per_action[action])
    }

    pub fn state_total(&self, key: &StateKey) -> u64 {
        self.counts.get(key).map_or(0, |c| c.total)
    }

    pub fn num_states(&self) -> usize {
        self.counts.len()
    }

    /// `count(s, a) / total(s)`.
    pub fn behavior_prob(&self, key: &StateKey, action: usize) -> Result<f64> {
        if action >= self.num_actions {
            return Err(Error::Action {
                agent: 0,
                action,
                num_actions: self.num_actions,
            });
        }
        let c = self.counts.get(key).ok_or(Error::UnseenState)?;
        Ok(c.per_action[action] as f64 / c.total as f64)
    }

    pub fn distribution(&self, key: &StateKey) -> Result<Vec<f64>> {
        let c = self.counts.get(key).ok_or(Error::UnseenState)?;
        let total = c.total as f64;
        Ok(c.per_action.iter().map(|&n| n as f64 / total).collect())
    }

    /// Like [`distribution`](Self::distribution) but uniform for unseen states.
    pub fn distribution_or_uniform(&self, key: &StateKey) -> Vec<f64> {
        self.distribution(key)
            .unwrap_or_else(|_| vec![1.0 / self.num_actions as f64; self.num_actions])
    }

    /// Every stored `(state, action) -> count` with a nonzero count, sorted.
    pub fn nonzero_counts(&self) -> Vec<((StateKey, usize), u64)> {
        let mut out: Vec<_> = self
            .counts
            .iter()
            .flat_map(|(k, c)| {
                c.per_action
                    .iter()
                    .enumerate()
                    .filter(|(_, &n)| n > 0)
                    .map(move |(a, &n)| ((k.clone(), a), n))
            })
            .collect();
        out.sort();
        out
    }

    /// Checks that each state's action counts add up to its total.
    pub fn is_consistent(&self) -> bool {
        self.counts
            .values()
            .all(|c| c.total > 0 && c.per_action.iter().sum::<u64>() == c.total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_observation() {
        let mut eb = EmpiricalBehavior::new(3);
        let s = StateKey::from_index(4);
        eb.record(s.clone(), 2);
        assert_eq!(eb.behavior_prob(&s, 2).unwrap(), 1.0);
        assert_eq!(eb.behavior_prob(&s, 0).unwrap(), 0.0);
        assert_eq!(eb.behavior_prob(&s, 1).unwrap(), 0.0);
    }

    #[test]
    fn count_ratio() {
        let mut eb = EmpiricalBehavior::new(2);
        let s = StateKey::from_index(0);
        for a in [0, 0, 1] {
            eb.record(s.clone(), a);
        }
        assert_eq!(eb.behavior_prob(&s, 0).unwrap(), 2.0 / 3.0);
        assert!(eb.is_consistent());
    }

    #[test]
    fn unseen_state_errors_and_falls_back() {
        let mut eb = EmpiricalBehavior::new(4);
        let s = StateKey::from_index(1);
        assert!(matches!(eb.behavior_prob(&s, 0), Err(Error::UnseenState)));
        assert_eq!(eb.distribution_or_uniform(&s), vec![0.25; 4]);
        eb.record(s.clone(), 1);
        eb.forget(&s, 1);
        assert!(matches!(eb.behavior_prob(&s, 1), Err(Error::UnseenState)));
        assert_eq!(eb.num_states(), 0);
    }

    #[test]
    fn quantized_keys() {
        let a = StateKey::quantize(&[0.10004, -0.5], 1e-3);
        let b = StateKey::quantize(&[0.09996, -0.5], 1e-3);
        let c = StateKey::quantize(&[0.1012, -0.5], 1e-3);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
