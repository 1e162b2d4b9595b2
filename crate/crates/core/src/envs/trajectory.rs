use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::StepResult;

/// One JSON-lines record of a trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub episode: usize,
    pub t: usize,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub observations: Vec<Vec<f64>>,
}

pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn record(&mut self, episode: usize, t: usize, actions: &[usize], step: &StepResult) -> Result<()> {
        let rec = TrajectoryRecord {
            episode,
            t,
            actions: actions.to_vec(),
            rewards: step.rewards.clone(),
            done: step.done,
            observations: step.observations.clone(),
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
