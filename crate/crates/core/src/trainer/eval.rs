use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use crate::envs::{Env, EnvKind};
use crate::error::Result;

use super::state::{stream, STREAM_EVAL};

/// Action selection used for evaluation rollouts.
pub trait ActionPolicy {
    fn act(&self, agent: usize, obs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize>;
}

/// Uniformly random actions.
pub struct UniformPolicy {
    pub num_actions: usize,
}

impl ActionPolicy for UniformPolicy {
    fn act(&self, _agent: usize, _obs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize> {
        Ok(rng.gen_range(0..self.num_actions))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalStats {
    pub mean: f64,
    /// Population standard deviation over episodes.
    pub std: f64,
    /// Team return (summed over agents and steps) of each episode.
    pub returns: Vec<f64>,
}

/// Runs `episodes` episodes on a fresh environment and reports team returns.
/// Episode seeds and any policy randomness come from `seed` alone.
pub fn evaluate<P: ActionPolicy + ?Sized>(
    policy: &P,
    kind: EnvKind,
    reward_scale: f64,
    episodes: usize,
    seed: u64,
) -> Result<EvalStats> {
    let mut env = Env::new(kind, reward_scale)?;
    let mut rng = stream(seed, STREAM_EVAL);
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(rng.next_u64());
        let mut total = 0.0;
        while !env.is_done() {
            let actions = obs
                .iter()
                .enumerate()
                .map(|(i, o)| policy.act(i, o, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let step = env.step(&actions)?;
            total += step.rewards.iter().sum::<f64>();
            obs = step.observations;
        }
        returns.push(total);
    }
    if returns.windows(2).all(|w| w[0] == w[1]) {
        // Constant returns: report them exactly rather than through a rounded sum.
        let mean = returns.first().copied().unwrap_or(0.0);
        return Ok(EvalStats { mean, std: 0.0, returns });
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok(EvalStats {
        mean,
        std: var.sqrt(),
        returns,
    })
}
