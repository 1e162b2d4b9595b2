use crate::error::{Error, Result};

/// Softmax of `logits / temperature` together with the log-sum-exp of the
/// scaled logits. Uses max-subtraction, so large logits do not overflow.
pub fn softmax_logsumexp(logits: &[f64], temperature: f64) -> Result<(Vec<f64>, f64)> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Parameter(format!(
            "softmax temperature must be positive, got {temperature}"
        )));
    }
    if logits.is_empty() {
        return Err(Error::Parameter("softmax over an empty vector".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax logits"));
    }
    let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    Ok((probs, max + sum.ln()))
}

/// Softmax at temperature 1.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    softmax_logsumexp(logits, 1.0).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_logits_are_uniform() {
        let (p, lse) = softmax_logsumexp(&[0.3; 4], 1.0).unwrap();
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        assert!((lse - (0.3 + 4f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let (p, lse) = softmax_logsumexp(&[1000.0, 0.0], 1.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert!(p[1] >= 0.0 && p[1] < 1e-300);
        assert!((lse - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_normalization() {
        let (p, lse) = softmax_logsumexp(&[1.0, 2.0, 3.0], 1.0).unwrap();
        let e: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|x| x.exp()).collect();
        let z: f64 = e.iter().sum();
        for (a, b) in p.iter().zip(&e) {
            assert!((a - b / z).abs() < 1e-12);
        }
        assert!((lse - z.ln()).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn temperature_must_be_positive() {
        assert!(softmax_logsumexp(&[1.0], 0.0).is_err());
        assert!(softmax_logsumexp(&[1.0], -2.0).is_err());
        assert!(softmax_logsumexp(&[f64::NAN], 1.0).is_err());
    }
}
