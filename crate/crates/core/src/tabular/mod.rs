//! Exact dynamic programming on small enumerable MDPs.

mod mdp;
mod ops;
mod text;

pub use mdp::{QTable, TabularMDP, TabularPolicy, MAX_ACTIONS, MAX_STATES};
pub use ops::{
    bellman_optimality_backup, cross_agent_iterate, fixed_point, penalized_iterate, sup_distance, value_iteration,
    FixedPoint, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
pub use text::{parse_mdp, read_mdp, write_mdp};
