//! Entropy, KL divergence and the adaptive entropy gradient.

use crate::error::{check_len, Error, Result};

/// Shannon entropy in nats, with `0·log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

/// `D_KL(p ‖ q) = Σ p log(p / q)`; `q` must cover the support of `p`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_len("kl operands", p.len(), q.len())?;
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if !(qi > 0.0) {
                return Err(Error::Support(format!(
                    "q({i}) = {qi} while p({i}) = {pi}"
                )));
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl)
}

/// Cross entropy `H(p, q) = −Σ p log q`.
pub fn cross_entropy(p: &[f64], q: &[f64]) -> Result<f64> {
    check_len("cross entropy operands", p.len(), q.len())?;
    let mut h = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if !(qi > 0.0) {
                return Err(Error::Support(format!("q({i}) = {qi} while p({i}) = {pi}")));
            }
            h -= pi * qi.ln();
        }
    }
    Ok(h)
}

/// Entropy gradient rescaled by the inverse entropy:
/// `−α·(log p + 1) / max(H(p), floor)`, taken with respect to the
/// probability vector. Zero-probability entries get a zero gradient.
pub fn adaptive_entropy_grad(p: &[f64], alpha: f64, entropy_floor: f64) -> Vec<f64> {
    let scale = alpha / entropy(p).max(entropy_floor);
    p.iter()
        .map(|&x| if x > 0.0 { -scale * (x.ln() + 1.0) } else { 0.0 })
        .collect()
}

/// Pulls a gradient with respect to `p = softmax(z)` back to the logits `z`:
/// `∂/∂z_b = p_b · (g_b − Σ_a p_a g_a)`.
pub(crate) fn softmax_pullback(p: &[f64], g: &[f64]) -> Vec<f64> {
    let mean: f64 = p
        .iter()
        .zip(g)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(pi, gi)| pi * gi)
        .sum();
    p.iter()
        .zip(g)
        .map(|(&pi, &gi)| if pi > 0.0 { pi * (gi - mean) } else { 0.0 })
        .collect()
}
