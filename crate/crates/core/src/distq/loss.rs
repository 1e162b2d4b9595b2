use crate::error::{check_len, Error, Result};
use crate::numkit::GradBundle;

use super::qnet::{argmax, mean_over_quantiles, quantile_midpoints, QuantileQNet};

pub const DEFAULT_KAPPA: f64 = 1.0;

/// Distributional Bellman targets `r + γ·(1 − done)·θ_k^target(s′, a*)` where
/// `a*` maximizes the target network's mean Q at `s′`.
///
/// The targets are plain numbers: nothing downstream differentiates them.
pub fn bellman_target_quantiles(
    target: &QuantileQNet,
    next_input: &[f64],
    reward: f64,
    done: bool,
    gamma: f64,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Parameter(format!("discount must be in [0, 1), got {gamma}")));
    }
    let k = target.num_quantiles();
    if done || gamma == 0.0 {
        check_len("target input", target.input_width(), next_input.len())?;
        return Ok(vec![reward; k]);
    }
    let q = target.quantiles(next_input)?;
    let best = argmax(&mean_over_quantiles(&q, k));
    Ok(q[best * k..(best + 1) * k]
        .iter()
        .map(|theta| reward + gamma * theta)
        .collect())
}

fn huber(u: f64, kappa: f64) -> f64 {
    if u.abs() <= kappa {
        0.5 * u * u
    } else {
        kappa * (u.abs() - 0.5 * kappa)
    }
}

fn huber_grad(u: f64, kappa: f64) -> f64 {
    if u.abs() <= kappa {
        u
    } else {
        kappa * u.signum()
    }
}

/// Quantile Huber loss
/// `(1/K) Σ_k Σ_k′ |τ̂_k − 1{y_k′ < θ_k}| · Huber_κ(y_k′ − θ_k) / κ`
/// and its gradient with respect to the predicted quantiles `θ`.
pub fn quantile_huber_loss(predicted: &[f64], targets: &[f64], kappa: f64) -> Result<(f64, Vec<f64>)> {
    if !(kappa > 0.0) {
        return Err(Error::Parameter(format!("kappa must be positive, got {kappa}")));
    }
    check_len("quantile targets", predicted.len(), targets.len())?;
    if predicted.is_empty() {
        return Err(Error::Parameter("quantile loss over zero quantiles".into()));
    }
    let k = predicted.len() as f64;
    let taus = quantile_midpoints(predicted.len());
    let mut loss = 0.0;
    let mut grad = vec![0.0; predicted.len()];
    for ((theta, tau), g) in predicted.iter().zip(&taus).zip(grad.iter_mut()) {
        for y in targets {
            let u = y - theta;
            let weight = (tau - if u < 0.0 { 1.0 } else { 0.0 }).abs();
            loss += weight * huber(u, kappa) / kappa;
            *g -= weight * huber_grad(u, kappa) / kappa;
        }
    }
    let inv_k = 1.0 / k;
    grad.iter_mut().for_each(|g| *g *= inv_k);
    Ok((loss * inv_k, grad))
}

/// Adds `weight ×` the quantile loss of action `action`'s quantiles to
/// `out_grad` (length `|A|·K`) and returns the weighted loss.
pub fn td_term(
    outputs: &[f64],
    action: usize,
    targets: &[f64],
    num_quantiles: usize,
    kappa: f64,
    weight: f64,
    out_grad: &mut [f64],
) -> Result<f64> {
    check_len("output gradient", outputs.len(), out_grad.len())?;
    let range = action * num_quantiles..(action + 1) * num_quantiles;
    if range.end > outputs.len() {
        return Err(Error::Action {
            agent: 0,
            action,
            num_actions: outputs.len() / num_quantiles,
        });
    }
    let (loss, grad) = quantile_huber_loss(&outputs[range.clone()], targets, kappa)?;
    for (o, g) in out_grad[range].iter_mut().zip(&grad) {
        *o += weight * g;
    }
    Ok(weight * loss)
}

/// One input for the plain QR-DQN regression.
#[derive(Debug, Clone)]
pub struct TdSample {
    pub input: Vec<f64>,
    pub action: usize,
    pub targets: Vec<f64>,
}

/// Unregularized QR-DQN loss averaged over `samples`, with parameter gradients.
pub fn qrdqn_loss(online: &QuantileQNet, samples: &[TdSample], kappa: f64) -> Result<(f64, GradBundle)> {
    if samples.is_empty() {
        return Err(Error::EmptySource("td batch"));
    }
    let weight = 1.0 / samples.len() as f64;
    let mut grads = GradBundle::zeros_like(online.net());
    let mut total = 0.0;
    for s in samples {
        let trace = online.trace(&s.input)?;
        let mut out_grad = vec![0.0; trace.output().len()];
        total += td_term(
            trace.output(),
            s.action,
            &s.targets,
            online.num_quantiles(),
            kappa,
            weight,
            &mut out_grad,
        )?;
        online.net().accumulate_backward(&trace, &out_grad, &mut grads)?;
    }
    Ok((total, grads))
}
