//! Loss batches with every stop-gradient quantity resolved up front.
//!
//! Bellman targets, behavior distributions, importance ratios, the
//! shared-experience value target `y` and other agents' policies are computed
//! once from the current networks. The loss then differentiates only through
//! the learner's online network evaluated at `input`.

use crate::distq::{bellman_target_quantiles, QuantileQNet};
use crate::error::{Error, Result};
use crate::numkit::softmax;
use crate::replay::{EmpiricalBehavior, StateKey, Transition};

use super::config::RegularizerConfig;
use super::info::entropy;

/// Detached quantities of the shared-experience penalty for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedTarget {
    /// Clipped `π_learner(a|s) / π_donor(a|s)`.
    pub ratio: f64,
    /// `r + γ·(1 − done)·V_learner(s′)`.
    pub value_target: f64,
}

/// Detached quantities of the cross-entropy penalty for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerPolicies {
    /// Policies of every other agent at this state.
    pub peers: Vec<Vec<f64>>,
    /// How many entropy terms the pairwise sum contains (|N| or |N| − 1).
    pub entropy_copies: usize,
    /// Learner entropy when the batch was prepared; sets the adaptive scale.
    pub base_entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSample {
    /// Learner network input for `s`.
    pub input: Vec<f64>,
    pub action: usize,
    pub td_targets: Vec<f64>,
    /// Empirical behavior distribution of the source dataset at `s`.
    pub behavior: Vec<f64>,
    /// Learner policy at `s`, used as the CQL pushing-down distribution.
    pub policy: Vec<f64>,
    pub shared: Option<SharedTarget>,
    pub peers: Option<PeerPolicies>,
}

/// Appends a one-hot agent id when networks are shared between agents.
pub fn encode_input(obs: &[f64], agent: usize, num_agents: usize, one_hot_ids: bool) -> Vec<f64> {
    let mut input = Vec::with_capacity(obs.len() + if one_hot_ids { num_agents } else { 0 });
    input.extend_from_slice(obs);
    if one_hot_ids {
        input.extend((0..num_agents).map(|j| if j == agent { 1.0 } else { 0.0 }));
    }
    input
}

/// Ratio of learner to donor probability of `action`, unclipped.
pub fn raw_importance_ratio(learner: &[f64], donor: &[f64], action: usize) -> Result<f64> {
    let (pl, pd) = match (learner.get(action), donor.get(action)) {
        (Some(&pl), Some(&pd)) => (pl, pd),
        _ => {
            return Err(Error::Action {
                agent: 0,
                action,
                num_actions: learner.len().min(donor.len()),
            })
        }
    };
    if !(pd > 0.0) {
        return Err(Error::Support(format!("donor probability of action {action} is {pd}")));
    }
    if !(pl > 0.0) {
        return Err(Error::Support(format!("learner probability of action {action} is {pl}")));
    }
    Ok(pl / pd)
}

/// [`raw_importance_ratio`] clipped to `[ratio_min, ratio_max]`.
pub fn importance_ratio(
    learner: &[f64],
    donor: &[f64],
    action: usize,
    ratio_min: f64,
    ratio_max: f64,
) -> Result<f64> {
    Ok(raw_importance_ratio(learner, donor, action)?.clamp(ratio_min, ratio_max))
}

/// `V(s) = Σ_a π(a|s)·Q̄(s,a)` with `π = softmax(Q̄)`.
pub fn state_value(mean_q: &[f64]) -> Result<f64> {
    let p = softmax(mean_q)?;
    Ok(p.iter().zip(mean_q).map(|(pi, q)| pi * q).sum())
}

/// Online and target networks of every agent, indexed by agent id. Under
/// parameter sharing the same network appears for every agent and inputs get
/// a one-hot agent id.
#[derive(Debug, Clone)]
pub struct AgentModels<'a> {
    online: Vec<&'a QuantileQNet>,
    target: Vec<&'a QuantileQNet>,
    one_hot_ids: bool,
}

impl<'a> AgentModels<'a> {
    pub fn new(online: Vec<&'a QuantileQNet>, target: Vec<&'a QuantileQNet>, one_hot_ids: bool) -> Result<Self> {
        if online.is_empty() || online.len() != target.len() {
            return Err(Error::Parameter(
                "need one online and one target network per agent".into(),
            ));
        }
        Ok(Self {
            online,
            target,
            one_hot_ids,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.online.len()
    }

    pub fn online(&self, agent: usize) -> &'a QuantileQNet {
        self.online[agent]
    }

    pub fn target(&self, agent: usize) -> &'a QuantileQNet {
        self.target[agent]
    }

    pub fn input(&self, agent: usize, obs: &[f64]) -> Vec<f64> {
        encode_input(obs, agent, self.num_agents(), self.one_hot_ids)
    }

    pub fn mean_q(&self, agent: usize, obs: &[f64]) -> Result<Vec<f64>> {
        self.online[agent].mean_q(&self.input(agent, obs))
    }

    /// Softmax policy at temperature 1 over the agent's mean Q-values.
    pub fn policy(&self, agent: usize, obs: &[f64]) -> Result<Vec<f64>> {
        softmax(&self.mean_q(agent, obs)?)
    }

    pub fn state_value(&self, agent: usize, obs: &[f64]) -> Result<f64> {
        state_value(&self.mean_q(agent, obs)?)
    }
}

/// Resolves every detached quantity for a batch drawn from `donor`'s dataset
/// and used to train `learner`.
#[allow(clippy::too_many_arguments)]
pub fn prepare_batch(
    models: &AgentModels<'_>,
    learner: usize,
    donor: usize,
    transitions: &[&Transition],
    behavior: &EmpiricalBehavior,
    key_resolution: f64,
    reg: &RegularizerConfig,
    gamma: f64,
) -> Result<Vec<LossSample>> {
    let n_agents = models.num_agents();
    if learner >= n_agents || donor >= n_agents {
        return Err(Error::Parameter(format!(
            "agent index out of range (learner {learner}, donor {donor}, {n_agents} agents)"
        )));
    }
    if transitions.is_empty() {
        return Err(Error::EmptySource("loss batch"));
    }
    let online = models.online(learner);
    let target = models.target(learner);
    transitions
        .iter()
        .map(|t| {
            let input = models.input(learner, &t.obs);
            let policy = softmax(&online.mean_q(&input)?)?;
            let next_input = models.input(learner, &t.next_obs);
            let td_targets = bellman_target_quantiles(target, &next_input, t.reward, t.done, gamma)?;
            let behavior = behavior.distribution_or_uniform(&StateKey::quantize(&t.obs, key_resolution));

            let shared = if reg.shared_active() {
                let donor_policy = if donor == learner {
                    policy.clone()
                } else {
                    models.policy(donor, &t.obs)?
                };
                let ratio = importance_ratio(&policy, &donor_policy, t.action, reg.ratio_min, reg.ratio_max)?;
                let next_value = if t.done {
                    0.0
                } else {
                    state_value(&online.mean_q(&next_input)?)?
                };
                let value_target = if t.done { t.reward } else { t.reward + gamma * next_value };
                Some(SharedTarget { ratio, value_target })
            } else {
                None
            };

            let peers = if reg.xent_active() {
                let peers = (0..n_agents)
                    .filter(|&j| j != learner)
                    .map(|j| models.policy(j, &t.obs))
                    .collect::<Result<Vec<_>>>()?;
                let entropy_copies = if reg.include_self { n_agents } else { n_agents - 1 };
                Some(PeerPolicies {
                    peers,
                    entropy_copies,
                    base_entropy: entropy(&policy),
                })
            } else {
                None
            };

            Ok(LossSample {
                input,
                action: t.action,
                td_targets,
                behavior,
                policy,
                shared,
                peers,
            })
        })
        .collect()
}
