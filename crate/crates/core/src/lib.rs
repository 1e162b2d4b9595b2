//! Multi-agent regularized distributional Q-learning.
//!
//! Independent quantile-regression Q-learners, one per agent, trained with a
//! conservative Q-learning penalty plus one of two multi-agent regularizers:
//! an importance-corrected penalty for learning from other agents' replay
//! data, or a pairwise adaptive cross-entropy penalty between policies.
//! Exact tabular oracles and small cooperative environments back the tests.

pub mod distq;
pub mod envs;
pub mod error;
pub mod numkit;
pub mod regularizers;
pub mod replay;
pub mod tabular;
pub mod trainer;
pub mod verify;

mod binio;

pub use error::{Error, Result};
