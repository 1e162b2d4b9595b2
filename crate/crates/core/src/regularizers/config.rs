use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which multi-agent penalty is added on top of TD + CQL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerVariant {
    None,
    SharedExperience,
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CqlMode {
    /// `E_π[Q] − E_π̂[Q]`
    Expectation,
    /// `logsumexp Q − Q(s, a_data)`
    Logsumexp,
}

/// Orientation of the entropy part of the cross-entropy penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    /// `+λ Σ_j (H(π_i) + KL(π_i ‖ π_j))` is minimized.
    AsWritten,
    /// The entropy part is negated, so entropy is maximized.
    Prose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizerConfig {
    /// CQL trade-off. Zero disables the conservative term entirely.
    pub alpha: f64,
    /// Weight of the multi-agent penalty. Zero disables it entirely.
    pub lambda: f64,
    pub variant: RegularizerVariant,
    pub entropy_floor: f64,
    pub cql_mode: CqlMode,
    pub sign_mode: SignMode,
    /// Count the learner itself among the cross-entropy partners.
    pub include_self: bool,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl Default for RegularizerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            lambda: 1.0,
            variant: RegularizerVariant::None,
            entropy_floor: 0.05,
            cql_mode: CqlMode::Expectation,
            sign_mode: SignMode::AsWritten,
            include_self: true,
            ratio_min: 1e-2,
            ratio_max: 1e2,
        }
    }
}

impl RegularizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.entropy_floor > 0.0) {
            return Err(Error::Config(format!(
                "entropy_floor must be > 0, got {}",
                self.entropy_floor
            )));
        }
        if !(self.ratio_min > 0.0 && self.ratio_min <= 1.0 && self.ratio_max >= 1.0) {
            return Err(Error::Config(format!(
                "importance clip range [{}, {}] must contain 1 and be positive",
                self.ratio_min, self.ratio_max
            )));
        }
        Ok(())
    }

    pub fn cql_active(&self) -> bool {
        self.alpha > 0.0
    }

    pub fn shared_active(&self) -> bool {
        self.variant == RegularizerVariant::SharedExperience && self.lambda > 0.0
    }

    pub fn xent_active(&self) -> bool {
        self.variant == RegularizerVariant::CrossEntropy && self.lambda > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RegularizerConfig::default().validate().is_ok());
        let bad = RegularizerConfig {
            lambda: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RegularizerConfig {
            entropy_floor: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RegularizerConfig {
            ratio_min: 2.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
