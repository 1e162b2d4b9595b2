use rand::Rng;

use crate::error::{Error, Result};

use super::behavior::{EmpiricalBehavior, StateKey, DEFAULT_KEY_RESOLUTION};

/// One experience tuple owned by `agent_id`. The reward is already scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub agent_id: usize,
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// Bounded FIFO dataset of one agent's transitions, with its empirical
/// behavior distribution kept in sync on every insert and eviction.
#[derive(Debug, Clone)]
pub struct AgentBuffer {
    agent_id: usize,
    capacity: usize,
    obs_width: usize,
    key_resolution: f64,
    ring: Vec<Transition>,
    cursor: usize,
    behavior: EmpiricalBehavior,
}

impl AgentBuffer {
    pub fn new(agent_id: usize, capacity: usize, obs_width: usize, num_actions: usize) -> Result<Self> {
        Self::with_key_resolution(agent_id, capacity, obs_width, num_actions, DEFAULT_KEY_RESOLUTION)
    }

    pub fn with_key_resolution(
        agent_id: usize,
        capacity: usize,
        obs_width: usize,
        num_actions: usize,
        key_resolution: f64,
    ) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Parameter("buffer capacity must be positive".into()));
        }
        if num_actions == 0 {
            return Err(Error::Parameter("action count must be positive".into()));
        }
        if !(key_resolution > 0.0) {
            return Err(Error::Parameter("key resolution must be positive".into()));
        }
        Ok(Self {
            agent_id,
            capacity,
            obs_width,
            key_resolution,
            ring: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
            behavior: EmpiricalBehavior::new(num_actions),
        })
    }

    pub fn agent_id(&self) -> usize {
        self.agent_id
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn obs_width(&self) -> usize {
        self.obs_width
    }

    pub fn num_actions(&self) -> usize {
        self.behavior.num_actions()
    }

    pub fn key_resolution(&self) -> f64 {
        self.key_resolution
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn behavior(&self) -> &EmpiricalBehavior {
        &self.behavior
    }

    pub fn state_key(&self, obs: &[f64]) -> StateKey {
        StateKey::quantize(obs, self.key_resolution)
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.agent_id != self.agent_id {
            return Err(Error::Ownership {
                expected: self.agent_id,
                actual: t.agent_id,
            });
        }
        if t.action >= self.num_actions() {
            return Err(Error::Action {
                agent: t.agent_id,
                action: t.action,
                num_actions: self.num_actions(),
            });
        }
        if t.obs.len() != self.obs_width {
            return Err(Error::shape("transition obs", self.obs_width, t.obs.len()));
        }
        if t.next_obs.len() != self.obs_width {
            return Err(Error::shape("transition next_obs", self.obs_width, t.next_obs.len()));
        }
        if !t.reward.is_finite() {
            return Err(Error::NonFinite("transition reward"));
        }

        self.behavior.record(self.state_key(&t.obs), t.action);
        if self.ring.len() < self.capacity {
            self.ring.push(t);
        } else {
            let old = std::mem::replace(&mut self.ring[self.cursor], t);
            let key = self.state_key(&old.obs);
            self.behavior.forget(&key, old.action);
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// The `i`-th oldest stored transition.
    pub fn get(&self, i: usize) -> Option<&Transition> {
        if i >= self.ring.len() {
            return None;
        }
        let start = if self.ring.len() < self.capacity { 0 } else { self.cursor };
        Some(&self.ring[(start + i) % self.ring.len()])
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        (0..self.len()).map(move |i| self.get(i).unwrap())
    }

    /// `n` logical indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::EmptySource("replay buffer"));
        }
        Ok((0..n).map(|_| rng.gen_range(0..self.len())).collect())
    }

    pub fn sample_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        Ok(self
            .sample_indices(n, rng)?
            .into_iter()
            .map(|i| self.get(i).unwrap())
            .collect())
    }

    /// Recounts the behavior distribution from the current contents.
    pub fn recount_behavior(&self) -> EmpiricalBehavior {
        let mut eb = EmpiricalBehavior::new(self.num_actions());
        for t in self.iter() {
            eb.record(self.state_key(&t.obs), t.action);
        }
        eb
    }
}

/// A batch drawn from `donor`'s buffer for training `learner`.
#[derive(Debug, Clone)]
pub struct CrossBatch<'a> {
    pub learner: usize,
    pub donor: usize,
    pub transitions: Vec<&'a Transition>,
}

/// Samples from the donor's dataset on behalf of the learner.
pub fn sample_cross<'a, R: Rng + ?Sized>(
    buffers: &'a [AgentBuffer],
    learner: usize,
    donor: usize,
    n: usize,
    rng: &mut R,
) -> Result<CrossBatch<'a>> {
    if learner >= buffers.len() {
        return Err(Error::Parameter(format!("unknown learner agent {learner}")));
    }
    let source = buffers
        .get(donor)
        .ok_or_else(|| Error::Parameter(format!("unknown donor agent {donor}")))?;
    Ok(CrossBatch {
        learner,
        donor,
        transitions: source.sample_batch(n, rng)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(agent: usize, x: f64, action: usize) -> Transition {
        Transition {
            agent_id: agent,
            obs: vec![x],
            action,
            reward: x,
            next_obs: vec![x + 1.0],
            done: false,
        }
    }

    #[test]
    fn push_grows_then_evicts_fifo() {
        let mut b = AgentBuffer::new(0, 2, 1, 2).unwrap();
        b.push(tr(0, 1.0, 0)).unwrap();
        assert_eq!(b.len(), 1);
        b.push(tr(0, 2.0, 1)).unwrap();
        b.push(tr(0, 3.0, 0)).unwrap();
        let held: Vec<f64> = b.iter().map(|t| t.obs[0]).collect();
        assert_eq!(held, vec![2.0, 3.0]);
        assert_eq!(b.behavior(), &b.recount_behavior());
    }

    #[test]
    fn ownership_and_shape_errors() {
        let mut b = AgentBuffer::new(0, 4, 1, 2).unwrap();
        assert!(matches!(b.push(tr(1, 0.0, 0)), Err(Error::Ownership { .. })));
        assert!(matches!(b.push(tr(0, 0.0, 5)), Err(Error::Action { .. })));
        let mut bad = tr(0, 0.0, 0);
        bad.obs.push(1.0);
        assert!(matches!(b.push(bad), Err(Error::Shape { .. })));
        let mut nan = tr(0, 0.0, 0);
        nan.reward = f64::NAN;
        assert!(b.push(nan).is_err());
        assert!(b.is_empty());
    }

    #[test]
    fn single_item_sampling() {
        let mut b = AgentBuffer::new(0, 8, 1, 2).unwrap();
        b.push(tr(0, 7.0, 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = b.sample_batch(4, &mut rng).unwrap();
        assert_eq!(batch.len(), 4);
        assert!(batch.iter().all(|t| t.obs[0] == 7.0));
    }

    #[test]
    fn empty_buffer_sampling_fails() {
        let b = AgentBuffer::new(0, 8, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(b.sample_batch(1, &mut rng), Err(Error::EmptySource(_))));
        let bufs = vec![b];
        assert!(matches!(
            sample_cross(&bufs, 0, 0, 1, &mut rng),
            Err(Error::EmptySource(_))
        ));
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let mut b = AgentBuffer::new(0, 16, 1, 2).unwrap();
        for i in 0..10 {
            b.push(tr(0, i as f64, i % 2)).unwrap();
        }
        let a1 = b.sample_indices(32, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let a2 = b.sample_indices(32, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a1, a2);
    }
}
