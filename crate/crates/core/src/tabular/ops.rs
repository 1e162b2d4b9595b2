use crate::error::{Error, Result};

use super::mdp::{QTable, TabularMDP, TabularPolicy};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// `(B*Q)(s,a) = r(s,a) + γ·Σ_{s′} T(s′|s,a)·max_{a′} Q(s′,a′)`.
pub fn bellman_optimality_backup(mdp: &TabularMDP, q: &QTable) -> Result<QTable> {
    q.check_shape(mdp)?;
    let v: Vec<f64> = (0..mdp.num_states()).map(|s| q.max_row(s)).collect();
    let mut out = QTable::zeros(mdp.num_states(), mdp.num_actions());
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            let next: f64 = mdp.transition_row(s, a).iter().zip(&v).map(|(p, vs)| p * vs).sum();
            out.set(s, a, mdp.reward(s, a) + mdp.gamma() * next);
        }
    }
    Ok(out)
}

fn shifted_backup(
    mdp: &TabularMDP,
    q: &QTable,
    pushed: &TabularPolicy,
    data: &TabularPolicy,
    alpha: f64,
) -> Result<QTable> {
    pushed.check_shape(mdp)?;
    data.check_shape(mdp)?;
    let mut out = bellman_optimality_backup(mdp, q)?;
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            let (pi, mu) = (pushed.prob(s, a), data.prob(s, a));
            if !(mu > 0.0) {
                return Err(Error::Support(format!("data policy vanishes at ({s}, {a})")));
            }
            if !(pi > 0.0) {
                return Err(Error::Support(format!("policy vanishes at ({s}, {a})")));
            }
            out.set(s, a, out.get(s, a) - alpha * (pi / mu));
        }
    }
    Ok(out)
}

/// Stationary point of the penalized squared Bellman objective with `Q`
/// pushed down under `policy` and the squared error weighted by the data
/// distribution `data`: `B*Q − α·π/μ`. With `data == policy` this is a
/// uniform shift by `α`.
pub fn penalized_iterate(
    mdp: &TabularMDP,
    q: &QTable,
    policy: &TabularPolicy,
    data: &TabularPolicy,
    alpha: f64,
) -> Result<QTable> {
    if !(alpha >= 0.0) {
        return Err(Error::Parameter(format!("alpha must be >= 0, got {alpha}")));
    }
    if alpha == 0.0 {
        return bellman_optimality_backup(mdp, q);
    }
    shifted_backup(mdp, q, policy, data, alpha)
}

/// Learner iterate on donor data: `B*Q − α·π_learner/π_donor`.
pub fn cross_agent_iterate(
    mdp: &TabularMDP,
    q: &QTable,
    learner: &TabularPolicy,
    donor: &TabularPolicy,
    alpha: f64,
) -> Result<QTable> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be > 0, got {alpha}")));
    }
    shifted_backup(mdp, q, learner, donor, alpha)
}

pub fn sup_distance(a: &QTable, b: &QTable) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub q: QTable,
    pub iterations: usize,
    /// Sup-norm change of the final step.
    pub last_change: f64,
    pub converged: bool,
}

/// Iterates `step` from `init` until the sup-norm change drops below
/// `tolerance` or `max_iterations` is reached.
pub fn fixed_point<F>(init: QTable, tolerance: f64, max_iterations: usize, mut step: F) -> Result<FixedPoint>
where
    F: FnMut(&QTable) -> Result<QTable>,
{
    let mut q = init;
    let mut last_change = f64::INFINITY;
    for it in 1..=max_iterations {
        let next = step(&q)?;
        last_change = sup_distance(&next, &q);
        q = next;
        if last_change < tolerance {
            return Ok(FixedPoint {
                q,
                iterations: it,
                last_change,
                converged: true,
            });
        }
    }
    Ok(FixedPoint {
        q,
        iterations: max_iterations,
        last_change,
        converged: false,
    })
}

/// Repeated Bellman optimality backups from `init` to the default tolerance.
pub fn value_iteration(mdp: &TabularMDP, init: QTable) -> Result<FixedPoint> {
    init.check_shape(mdp)?;
    fixed_point(init, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS, |q| {
        bellman_optimality_backup(mdp, q)
    })
}
