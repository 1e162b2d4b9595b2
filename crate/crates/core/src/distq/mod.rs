//! Quantile-regression Q-networks: mean values, derived policies,
//! distributional Bellman targets, the quantile Huber loss and target-network
//! averaging.

pub mod checkpoint;
mod loss;
mod policy;
mod qnet;

pub use loss::{bellman_target_quantiles, qrdqn_loss, quantile_huber_loss, td_term, TdSample, DEFAULT_KAPPA};
pub use policy::{policy_from_q, policy_from_values, PolicyDistribution, PolicyMode};
pub use qnet::{argmax, mean_over_quantiles, polyak_update, quantile_midpoints, QuantileQNet, TargetNet};

/// Default number of quantiles per action.
pub const DEFAULT_NUM_QUANTILES: usize = 32;
