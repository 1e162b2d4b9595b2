use crate::error::{Error, Result};
use crate::numkit::softmax_logsumexp;

use super::qnet::{argmax, QuantileQNet};

/// How a probability vector is derived from mean Q-values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyMode {
    /// `softmax(Q̄ / temperature)`
    Softmax { temperature: f64 },
    /// `1 − ε` on the argmax plus `ε / |A|` everywhere.
    EpsilonGreedy { epsilon: f64 },
}

impl PolicyMode {
    /// Builds a mode from optional settings; exactly one must be given.
    pub fn from_options(temperature: Option<f64>, epsilon: Option<f64>) -> Result<Self> {
        let mode = match (temperature, epsilon) {
            (Some(t), None) => PolicyMode::Softmax { temperature: t },
            (None, Some(e)) => PolicyMode::EpsilonGreedy { epsilon: e },
            (None, None) => {
                return Err(Error::Config(
                    "policy needs either a softmax temperature or an epsilon".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "policy temperature and epsilon are mutually exclusive".into(),
                ))
            }
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PolicyMode::Softmax { temperature } if !(temperature > 0.0) => Err(Error::Config(
                format!("softmax temperature must be positive, got {temperature}"),
            )),
            PolicyMode::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => Err(
                Error::Config(format!("epsilon must be in [0, 1], got {epsilon}")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    pub probs: Vec<f64>,
    /// Softmax temperature, `None` for epsilon-greedy.
    pub temperature: Option<f64>,
}

impl PolicyDistribution {
    pub fn num_actions(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.probs[action]
    }
}

pub fn policy_from_values(mean_q: &[f64], mode: PolicyMode) -> Result<PolicyDistribution> {
    mode.validate()?;
    match mode {
        PolicyMode::Softmax { temperature } => {
            let (probs, _) = softmax_logsumexp(mean_q, temperature)?;
            Ok(PolicyDistribution {
                probs,
                temperature: Some(temperature),
            })
        }
        PolicyMode::EpsilonGreedy { epsilon } => {
            let n = mean_q.len();
            let mut probs = vec![epsilon / n as f64; n];
            probs[argmax(mean_q)] += 1.0 - epsilon;
            Ok(PolicyDistribution {
                probs,
                temperature: None,
            })
        }
    }
}

pub fn policy_from_q(qnet: &QuantileQNet, input: &[f64], mode: PolicyMode) -> Result<PolicyDistribution> {
    policy_from_values(&qnet.mean_q(input)?, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_values_give_uniform() {
        let p = policy_from_values(&[0.4; 3], PolicyMode::Softmax { temperature: 0.7 }).unwrap();
        assert!(p.probs.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = policy_from_values(&[0.4; 3], PolicyMode::EpsilonGreedy { epsilon: 0.3 }).unwrap();
        assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_epsilon_is_uniform() {
        let p = policy_from_values(&[1.0, 5.0, 2.0, 0.0], PolicyMode::EpsilonGreedy { epsilon: 1.0 })
            .unwrap();
        assert_eq!(p.probs, vec![0.25; 4]);
    }

    #[test]
    fn softmax_two_actions() {
        let p = policy_from_values(&[1.0, 2.0], PolicyMode::Softmax { temperature: 1.0 }).unwrap();
        let z = 1f64.exp() + 2f64.exp();
        assert!((p.probs[0] - 1f64.exp() / z).abs() < 1e-12);
        assert!((p.probs[1] - 2f64.exp() / z).abs() < 1e-12);
    }

    #[test]
    fn epsilon_floor() {
        let p = policy_from_values(&[3.0, -1.0, 0.5], PolicyMode::EpsilonGreedy { epsilon: 0.1 })
            .unwrap();
        assert!(p.probs.iter().all(|&x| x >= 0.1 / 3.0));
        assert!((p.probs[0] - (0.9 + 0.1 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn mode_errors() {
        assert!(matches!(PolicyMode::from_options(None, None), Err(Error::Config(_))));
        assert!(PolicyMode::from_options(Some(1.0), Some(0.1)).is_err());
        assert!(PolicyMode::from_options(Some(0.0), None).is_err());
        assert!(PolicyMode::from_options(None, Some(1.5)).is_err());
        assert_eq!(
            PolicyMode::from_options(None, Some(0.2)).unwrap(),
            PolicyMode::EpsilonGreedy { epsilon: 0.2 }
        );
    }
}
