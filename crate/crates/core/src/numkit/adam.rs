use crate::error::{Error, Result};

use super::net::{DenseNet, GradBundle};

pub const DEFAULT_LEARNING_RATE: f64 = 3e-4;

/// Bias-corrected Adam moments for one [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: GradBundle,
    pub second_moment: GradBundle,
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &DenseNet, learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            first_moment: GradBundle::zeros_like(net),
            second_moment: GradBundle::zeros_like(net),
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        })
    }
}

/// Applies one Adam update to `net`.
///
/// Non-finite gradients are rejected before anything is modified.
pub fn adam_step(net: &mut DenseNet, grads: &GradBundle, state: &mut AdamState) -> Result<()> {
    if !grads.matches(net)
        || !state.first_moment.matches(net)
        || !state.second_moment.matches(net)
    {
        return Err(Error::Parameter(
            "adam: gradient or moment shapes do not match the network".into(),
        ));
    }
    if !(state.learning_rate > 0.0) {
        return Err(Error::Parameter("adam: learning rate must be positive".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("adam gradient"));
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let bias1 = 1.0 - b1.powi(t);
    let bias2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    let eps = state.epsilon;

    let moments = state
        .first_moment
        .slices_mut()
        .zip(state.second_moment.slices_mut());
    for ((params, g), (m, v)) in net.param_slices_mut().zip(grads.slices()).zip(moments) {
        for i in 0..params.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
