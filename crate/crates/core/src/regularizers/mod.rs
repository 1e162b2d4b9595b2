//! CQL, shared-experience and pairwise cross-entropy penalties layered on the
//! quantile TD loss.

mod batch;
mod config;
mod info;
mod loss;

pub use batch::{
    encode_input, importance_ratio, prepare_batch, raw_importance_ratio, state_value, AgentModels, LossSample,
    PeerPolicies, SharedTarget,
};
pub use config::{CqlMode, RegularizerConfig, RegularizerVariant, SignMode};
pub use info::{adaptive_entropy_grad, cross_entropy, entropy, kl_divergence};
pub use loss::{cql_penalty, cross_entropy_penalty, shared_experience_penalty, total_loss, LossBreakdown};
