//! Per-agent replay datasets with FIFO eviction and exact empirical
//! behavior tracking.

mod behavior;
mod buffer;
pub mod io;

pub use behavior::{EmpiricalBehavior, StateKey, DEFAULT_KEY_RESOLUTION};
pub use buffer::{sample_cross, AgentBuffer, CrossBatch, Transition};
