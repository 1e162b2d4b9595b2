//! Central finite-difference gradient checker.

use super::net::{DenseNet, GradBundle};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Floor on the denominator of the relative error.
pub const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub worst_relative_error: f64,
    /// Flat parameter index of the worst entry.
    pub worst_index: Option<usize>,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub checked: usize,
    pub failures: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Compares `analytic` against central differences of `loss_fn` around
/// `params`. Never panics on a mismatch; the report carries the verdict.
pub fn check_flat<F>(params: &[f64], analytic: &[f64], mut loss_fn: F, tolerance: f64) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    let mut report = GradCheckReport {
        worst_relative_error: 0.0,
        worst_index: None,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        checked: 0,
        failures: 0,
        tolerance,
        passed: analytic.len() == params.len(),
    };
    if !report.passed {
        report.worst_relative_error = f64::INFINITY;
        return report;
    }
    let mut theta = params.to_vec();
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + FD_STEP;
        let plus = loss_fn(&theta);
        theta[i] = orig - FD_STEP;
        let minus = loss_fn(&theta);
        theta[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let err = relative_error(analytic[i], numeric);
        let err = if err.is_nan() { f64::INFINITY } else { err };
        report.checked += 1;
        if err > tolerance {
            report.failures += 1;
        }
        if report.worst_index.is_none() || err > report.worst_relative_error {
            report.worst_relative_error = err;
            report.worst_index = Some(i);
            report.analytic_at_worst = analytic[i];
            report.numeric_at_worst = numeric;
        }
    }
    report.passed = report.failures == 0;
    report
}

/// Checks a network gradient: `loss_fn` is evaluated on perturbed copies of `net`.
pub fn finite_diff_check<F>(
    net: &DenseNet,
    analytic: &GradBundle,
    mut loss_fn: F,
    tolerance: f64,
) -> GradCheckReport
where
    F: FnMut(&DenseNet) -> f64,
{
    let params = net.params_flat();
    let mut scratch = net.clone();
    check_flat(
        &params,
        &analytic.flat(),
        |theta| {
            scratch
                .set_params_flat(theta)
                .expect("perturbed parameters keep their length");
            loss_fn(&scratch)
        },
        tolerance,
    )
}
