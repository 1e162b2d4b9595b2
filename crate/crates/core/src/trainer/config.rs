use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::regularizers::{CqlMode, RegularizerConfig, RegularizerVariant, SignMode};
use crate::replay::DEFAULT_KEY_RESOLUTION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Independent QR-DQN learners, no penalties.
    IqlPlain,
    /// QR-DQN with the conservative penalty.
    CqlOnly,
    /// Conservative penalty plus importance-weighted learning from other agents' data.
    MarqShared,
    /// Conservative penalty plus the pairwise adaptive cross-entropy penalty.
    MarqXent,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::IqlPlain, Variant::CqlOnly, Variant::MarqShared, Variant::MarqXent];

    pub fn name(self) -> &'static str {
        match self {
            Variant::IqlPlain => "iql_plain",
            Variant::CqlOnly => "cql_only",
            Variant::MarqShared => "marq_shared",
            Variant::MarqXent => "marq_xent",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

/// Complete specification of a training run. Field names are the TOML keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub lambda: f64,
    pub entropy_floor: f64,
    pub cql_mode: CqlMode,
    pub sign_mode: SignMode,
    pub include_self: bool,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub tau: f64,
    pub buffer_capacity: usize,
    pub pretraining_steps: usize,
    pub steps_per_iteration: usize,
    pub iterations: usize,
    pub hidden_sizes: Vec<usize>,
    pub num_quantiles: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of all training steps over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
    pub parameter_sharing: bool,
    pub key_resolution: f64,
    pub reward_scale: f64,
    pub env: EnvKind,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            variant: Variant::MarqShared,
            alpha: 0.1,
            lambda: 1.0,
            entropy_floor: 0.05,
            cql_mode: CqlMode::Expectation,
            sign_mode: SignMode::AsWritten,
            include_self: true,
            ratio_min: 1e-2,
            ratio_max: 1e2,
            gamma: 0.99,
            kappa: 1.0,
            batch_size: 256,
            learning_rate: 3e-4,
            tau: 0.005,
            buffer_capacity: 100_000,
            pretraining_steps: 1000,
            steps_per_iteration: 1000,
            iterations: 20,
            hidden_sizes: vec![64, 64, 64],
            num_quantiles: 32,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.2,
            seeds: vec![0, 1, 2, 3, 4],
            eval_episodes: 100,
            parameter_sharing: true,
            key_resolution: DEFAULT_KEY_RESOLUTION,
            reward_scale: 1.0,
            env: EnvKind::MatrixCoordination,
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl TrainerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.regularizer().validate()?;
        self.env.validate()?;
        check((0.0..1.0).contains(&self.gamma), || format!("gamma must be in [0, 1), got {}", self.gamma))?;
        check(self.kappa > 0.0, || format!("kappa must be positive, got {}", self.kappa))?;
        check(self.batch_size > 0, || "batch_size must be positive".into())?;
        check(self.learning_rate > 0.0 && self.learning_rate.is_finite(), || {
            format!("learning_rate must be positive, got {}", self.learning_rate)
        })?;
        check(self.tau > 0.0 && self.tau <= 1.0, || format!("tau must be in (0, 1], got {}", self.tau))?;
        check(self.buffer_capacity > 0, || "buffer_capacity must be positive".into())?;
        check(self.pretraining_steps > 0, || "pretraining_steps must be positive".into())?;
        check(self.steps_per_iteration > 0, || "steps_per_iteration must be positive".into())?;
        check(!self.hidden_sizes.is_empty() && self.hidden_sizes.iter().all(|&h| h > 0), || {
            "hidden_sizes must be a non-empty list of positive widths".into()
        })?;
        check(self.num_quantiles > 0, || "num_quantiles must be positive".into())?;
        let unit = 0.0..=1.0;
        check(unit.contains(&self.epsilon_start) && unit.contains(&self.epsilon_end), || {
            "epsilon_start and epsilon_end must be in [0, 1]".into()
        })?;
        check(self.epsilon_decay_fraction > 0.0 && self.epsilon_decay_fraction <= 1.0, || {
            "epsilon_decay_fraction must be in (0, 1]".into()
        })?;
        check(self.eval_episodes > 0, || "eval_episodes must be positive".into())?;
        check(self.key_resolution > 0.0, || "key_resolution must be positive".into())?;
        check(self.reward_scale > 0.0 && self.reward_scale.is_finite(), || {
            "reward_scale must be positive".into()
        })?;
        Ok(())
    }

    /// Penalty settings implied by the variant.
    pub fn regularizer(&self) -> RegularizerConfig {
        let (alpha, variant) = match self.variant {
            Variant::IqlPlain => (0.0, RegularizerVariant::None),
            Variant::CqlOnly => (self.alpha, RegularizerVariant::None),
            Variant::MarqShared => (self.alpha, RegularizerVariant::SharedExperience),
            Variant::MarqXent => (self.alpha, RegularizerVariant::CrossEntropy),
        };
        RegularizerConfig {
            alpha,
            lambda: self.lambda,
            variant,
            entropy_floor: self.entropy_floor,
            cql_mode: self.cql_mode,
            sign_mode: self.sign_mode,
            include_self: self.include_self,
            ratio_min: self.ratio_min,
            ratio_max: self.ratio_max,
        }
    }

    pub fn total_steps(&self) -> usize {
        self.iterations * self.steps_per_iteration
    }

    /// Linear decay from `epsilon_start` to `epsilon_end`, then constant.
    pub fn epsilon_at(&self, step: u64) -> f64 {
        let span = (self.epsilon_decay_fraction * self.total_steps() as f64).max(1.0);
        let frac = step as f64 / span;
        if frac >= 1.0 {
            return self.epsilon_end;
        }
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}
