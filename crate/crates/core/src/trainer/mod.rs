//! Rollouts, per-agent gradient steps, evaluation, metrics, checkpoints and
//! the λ sweep.

mod checkpoint;
mod config;
mod eval;
mod run;
mod state;

pub use checkpoint::{CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{TrainerConfig, Variant};
pub use eval::{evaluate, ActionPolicy, EvalStats, UniformPolicy};
pub use run::{
    continue_run, metrics_csv, metrics_line, parse_metrics_csv, run, run_stem, run_sweep, RunOutcome, RunSummary,
    SweepEntry, SweepReport, METRICS_HEADER,
};
pub use state::{GreedyPolicy, Learner, MetricsRow, Trainer};
