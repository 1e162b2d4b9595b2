//! The composed MARQ objective and its individual penalty terms.
//!
//! Every function differentiates only the learner network passed in; the
//! detached quantities come from a batch built by
//! [`prepare_batch`](super::prepare_batch).

use crate::distq::{mean_over_quantiles, td_term, QuantileQNet};
use crate::error::{check_len, Error, Result};
use crate::numkit::{softmax, softmax_logsumexp, GradBundle};

use super::batch::LossSample;
use super::config::{CqlMode, RegularizerConfig, SignMode};
use super::info::{adaptive_entropy_grad, entropy, kl_divergence, softmax_pullback};

/// Batch-averaged value of each loss component.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub td: f64,
    pub cql: f64,
    /// Shared-experience or cross-entropy penalty, whichever is active.
    pub regularizer: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Terms {
    td: bool,
    cql: bool,
    shared: bool,
    xent: bool,
}

/// CQL penalty on mean Q-values of one sample; adds `weight·∂/∂Q̄` to `dq`.
fn cql_sample(qbar: &[f64], s: &LossSample, alpha: f64, mode: CqlMode, weight: f64, dq: &mut [f64]) -> Result<f64> {
    match mode {
        CqlMode::Expectation => {
            check_len("cql policy", qbar.len(), s.policy.len())?;
            check_len("behavior distribution", qbar.len(), s.behavior.len())?;
            let mut v = 0.0;
            for (a, q) in qbar.iter().enumerate() {
                let d = s.policy[a] - s.behavior[a];
                v += d * q;
                dq[a] += weight * alpha * d;
            }
            Ok(alpha * v)
        }
        CqlMode::Logsumexp => {
            let (p, lse) = softmax_logsumexp(qbar, 1.0)?;
            for (a, pa) in p.iter().enumerate() {
                dq[a] += weight * alpha * (pa - if a == s.action { 1.0 } else { 0.0 });
            }
            Ok(alpha * (lse - qbar[s.action]))
        }
    }
}

fn shared_sample(qbar: &[f64], s: &LossSample, lambda: f64, weight: f64, dq: &mut [f64]) -> Result<f64> {
    let target = s
        .shared
        .as_ref()
        .ok_or_else(|| Error::Config("batch was prepared without shared-experience targets".into()))?;
    let p = softmax(qbar)?;
    let v: f64 = p.iter().zip(qbar).map(|(pi, q)| pi * q).sum();
    let diff = v - target.value_target;
    let dv = weight * lambda * target.ratio * sign(diff);
    if dv != 0.0 {
        for (a, (pa, q)) in p.iter().zip(qbar).enumerate() {
            dq[a] += dv * pa * (1.0 + q - v);
        }
    }
    Ok(lambda * target.ratio * diff.abs())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn xent_sample(
    qbar: &[f64],
    s: &LossSample,
    lambda: f64,
    sign_mode: SignMode,
    entropy_floor: f64,
    weight: f64,
    dq: &mut [f64],
) -> Result<f64> {
    let peers = s
        .peers
        .as_ref()
        .ok_or_else(|| Error::Config("batch was prepared without peer policies".into()))?;
    let p = softmax(qbar)?;
    if p.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Support("learner policy is not strictly positive".into()));
    }
    let orientation = match sign_mode {
        SignMode::AsWritten => 1.0,
        SignMode::Prose => -1.0,
    };
    let copies = peers.entropy_copies as f64;
    let h0 = peers.base_entropy;
    // Equal to H at the prepared parameters; its slope is the adaptive one.
    let h = h0 + (entropy(&p) - h0) / h0.max(entropy_floor);
    let mut value = orientation * copies * h;

    let mut g: Vec<f64> = adaptive_entropy_grad(&p, 1.0, entropy_floor)
        .into_iter()
        .map(|x| orientation * copies * x)
        .collect();
    for q in &peers.peers {
        value += kl_divergence(&p, q)?;
        for ((gb, pb), qb) in g.iter_mut().zip(&p).zip(q) {
            *gb += pb.ln() + 1.0 - qb.ln();
        }
    }
    for (d, z) in dq.iter_mut().zip(softmax_pullback(&p, &g)) {
        *d += weight * lambda * z;
    }
    Ok(lambda * value)
}

fn evaluate(
    qnet: &QuantileQNet,
    batch: &[LossSample],
    cfg: &RegularizerConfig,
    kappa: f64,
    terms: Terms,
) -> Result<(LossBreakdown, GradBundle)> {
    if batch.is_empty() {
        return Err(Error::EmptySource("loss batch"));
    }
    let k = qnet.num_quantiles();
    let n_actions = qnet.num_actions();
    let weight = 1.0 / batch.len() as f64;
    let mut grads = GradBundle::zeros_like(qnet.net());
    let mut out = LossBreakdown::default();
    let policy_terms = terms.cql || terms.shared || terms.xent;
    for s in batch {
        if s.action >= n_actions {
            return Err(Error::Action {
                agent: 0,
                action: s.action,
                num_actions: n_actions,
            });
        }
        let trace = qnet.trace(&s.input)?;
        let outputs = trace.output();
        let mut out_grad = vec![0.0; outputs.len()];
        if terms.td {
            out.td += td_term(outputs, s.action, &s.td_targets, k, kappa, weight, &mut out_grad)?;
        }
        if policy_terms {
            let qbar = mean_over_quantiles(outputs, k);
            let mut dq = vec![0.0; n_actions];
            if terms.cql {
                out.cql += weight * cql_sample(&qbar, s, cfg.alpha, cfg.cql_mode, weight, &mut dq)?;
            }
            if terms.shared {
                out.regularizer += weight * shared_sample(&qbar, s, cfg.lambda, weight, &mut dq)?;
            }
            if terms.xent {
                out.regularizer += weight
                    * xent_sample(&qbar, s, cfg.lambda, cfg.sign_mode, cfg.entropy_floor, weight, &mut dq)?;
            }
            let inv_k = 1.0 / k as f64;
            for (a, d) in dq.iter().enumerate() {
                for g in &mut out_grad[a * k..(a + 1) * k] {
                    *g += d * inv_k;
                }
            }
        }
        qnet.net().accumulate_backward(&trace, &out_grad, &mut grads)?;
    }
    out.total = out.td;
    if terms.cql {
        out.total += out.cql;
    }
    if terms.shared || terms.xent {
        out.total += out.regularizer;
    }
    Ok((out, grads))
}

/// Conservative penalty alone, averaged over the batch.
pub fn cql_penalty(qnet: &QuantileQNet, batch: &[LossSample], alpha: f64, mode: CqlMode) -> Result<(f64, GradBundle)> {
    let cfg = RegularizerConfig {
        alpha,
        cql_mode: mode,
        ..Default::default()
    };
    let terms = Terms {
        cql: true,
        ..Default::default()
    };
    let (b, g) = evaluate(qnet, batch, &cfg, 1.0, terms)?;
    Ok((b.cql, g))
}

/// `λ·mean(ratio·|V(s) − y|)` over a batch prepared from the donor's data.
pub fn shared_experience_penalty(qnet: &QuantileQNet, batch: &[LossSample], lambda: f64) -> Result<(f64, GradBundle)> {
    let cfg = RegularizerConfig {
        lambda,
        ..Default::default()
    };
    let terms = Terms {
        shared: true,
        ..Default::default()
    };
    let (b, g) = evaluate(qnet, batch, &cfg, 1.0, terms)?;
    Ok((b.regularizer, g))
}

/// Pairwise entropy + KL penalty against the other agents' policies.
pub fn cross_entropy_penalty(
    qnet: &QuantileQNet,
    batch: &[LossSample],
    lambda: f64,
    sign_mode: SignMode,
    entropy_floor: f64,
) -> Result<(f64, GradBundle)> {
    let cfg = RegularizerConfig {
        lambda,
        sign_mode,
        entropy_floor,
        ..Default::default()
    };
    let terms = Terms {
        xent: true,
        ..Default::default()
    };
    let (b, g) = evaluate(qnet, batch, &cfg, 1.0, terms)?;
    Ok((b.regularizer, g))
}

/// TD quantile-Huber loss plus whichever penalties `cfg` enables. A zero
/// `alpha` or `lambda` skips the corresponding term without touching the
/// arithmetic of the others.
pub fn total_loss(
    qnet: &QuantileQNet,
    batch: &[LossSample],
    cfg: &RegularizerConfig,
    kappa: f64,
) -> Result<(LossBreakdown, GradBundle)> {
    cfg.validate()?;
    let terms = Terms {
        td: true,
        cql: cfg.cql_active(),
        shared: cfg.shared_active(),
        xent: cfg.xent_active(),
    };
    evaluate(qnet, batch, cfg, kappa, terms)
}
