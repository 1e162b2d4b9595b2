use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::{Env, EnvKind};
use crate::error::{Error, Result};

use super::config::{TrainerConfig, Variant};
use super::state::{MetricsRow, Trainer};

pub const METRICS_HEADER: &str = "iteration,env_steps,seed,eval_mean,eval_std,wall_clock_s,td_loss,cql_loss,reg_loss";

pub fn metrics_line(row: &MetricsRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        row.iteration,
        row.env_steps,
        row.seed,
        row.eval_mean,
        row.eval_std,
        row.wall_clock_s,
        row.td_loss,
        row.cql_loss,
        row.reg_loss
    )
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", metrics_line(r));
    }
    s
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::Format("metrics file has an unexpected header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Format(format!("metrics row has {} fields", f.len())));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|e| Error::Format(e.to_string()));
            let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(e.to_string()));
            Ok(MetricsRow {
                iteration: int(f[0])?,
                env_steps: int(f[1])?,
                seed: int(f[2])?,
                eval_mean: real(f[3])?,
                eval_std: real(f[4])?,
                wall_clock_s: real(f[5])?,
                td_loss: real(f[6])?,
                cql_loss: real(f[7])?,
                reg_loss: real(f[8])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: Variant,
    pub env: String,
    pub lambda: f64,
    pub alpha: f64,
    pub seed: u64,
    pub iterations: u64,
    pub env_steps: u64,
    pub final_eval_mean: f64,
    pub final_eval_std: f64,
    /// Exact optimum where it is a single number (matrix_coordination).
    pub optimal_return: Option<f64>,
    pub wall_clock_s: f64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<MetricsRow>,
    pub summary: RunSummary,
    pub trainer: Trainer,
    pub metrics_path: Option<PathBuf>,
}

/// Output file stem shared by the metrics CSV, summary JSON and checkpoint.
pub fn run_stem(config: &TrainerConfig, seed: u64) -> String {
    format!("{}_lambda{}_seed{}", config.variant, config.lambda, seed)
}

fn optimal_return(kind: EnvKind, scale: f64) -> Option<f64> {
    match kind {
        EnvKind::MatrixCoordination => {
            let mut env = Env::new(kind, scale).ok()?;
            env.reset(0);
            env.optimal_return().ok()
        }
        _ => None,
    }
}

/// Trains for `config.iterations` iterations from a fresh state. With an
/// output directory, writes `<stem>.csv`, `<stem>.summary.json` and a final
/// `<stem>.ckpt`; on divergence the state is saved to `<stem>.diverged.ckpt`.
pub fn run(config: &TrainerConfig, seed: u64, out_dir: Option<&Path>) -> Result<RunOutcome> {
    let trainer = Trainer::new(config.clone(), seed)?;
    continue_run(trainer, config.iterations as u64, out_dir)
}

/// Trains an existing trainer until it has completed `until_iteration` iterations.
pub fn continue_run(mut trainer: Trainer, until_iteration: u64, out_dir: Option<&Path>) -> Result<RunOutcome> {
    let config = trainer.config().clone();
    let stem = run_stem(&config, trainer.seed());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let start = Instant::now();
    let mut rows = Vec::new();
    while trainer.iteration() < until_iteration {
        match trainer.train_iteration() {
            Ok(mut row) => {
                row.wall_clock_s = start.elapsed().as_secs_f64();
                rows.push(row);
            }
            Err(e) => {
                if let (Error::Divergence(_), Some(dir)) = (&e, out_dir) {
                    trainer.save_checkpoint(&dir.join(format!("{stem}.diverged.ckpt")))?;
                }
                return Err(e);
            }
        }
    }
    let last = rows.last();
    let summary = RunSummary {
        variant: config.variant,
        env: config.env.name().to_string(),
        lambda: config.lambda,
        alpha: config.regularizer().alpha,
        seed: trainer.seed(),
        iterations: trainer.iteration(),
        env_steps: trainer.env_steps(),
        final_eval_mean: last.map_or(f64::NAN, |r| r.eval_mean),
        final_eval_std: last.map_or(f64::NAN, |r| r.eval_std),
        optimal_return: optimal_return(config.env, config.reward_scale),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    let mut metrics_path = None;
    if let Some(dir) = out_dir {
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv, metrics_csv(&rows))?;
        let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.summary.json")), json)?;
        trainer.save_checkpoint(&dir.join(format!("{stem}.ckpt")))?;
        metrics_path = Some(csv);
    }
    Ok(RunOutcome {
        rows,
        summary,
        trainer,
        metrics_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub seed: u64,
    pub metrics_path: Option<PathBuf>,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.error.is_some()).count()
    }
}

/// One run per `(λ, seed)`; a failing run is recorded and the sweep goes on.
/// Runs are independent, so they may execute in parallel without affecting
/// any individual result. Writes `sweep.json` when given an output directory.
pub fn run_sweep(base: &TrainerConfig, lambdas: &[f64], seeds: &[u64], out_dir: Option<&Path>) -> Result<SweepReport> {
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::Config(format!("sweep lambda values must be >= 0, got {l}")));
    }
    let jobs: Vec<(f64, u64)> = lambdas.iter().flat_map(|&l| seeds.iter().map(move |&s| (l, s))).collect();
    let entries: Vec<SweepEntry> = jobs
        .par_iter()
        .map(|&(lambda, seed)| {
            let config = TrainerConfig { lambda, ..base.clone() };
            match run(&config, seed, out_dir) {
                Ok(out) => SweepEntry {
                    lambda,
                    seed,
                    metrics_path: out.metrics_path,
                    summary: Some(out.summary),
                    error: None,
                },
                Err(e) => SweepEntry {
                    lambda,
                    seed,
                    metrics_path: None,
                    summary: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let report = SweepReport { entries };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(dir.join("sweep.json"), json)?;
    }
    Ok(report)
}
