use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::numkit::{DenseNet, ForwardTrace};

/// Quantile midpoints `(2k + 1) / 2K`.
pub fn quantile_midpoints(num_quantiles: usize) -> Vec<f64> {
    let k = num_quantiles as f64;
    (0..num_quantiles).map(|i| (2 * i + 1) as f64 / (2.0 * k)).collect()
}

/// Network mapping an observation to `num_actions × num_quantiles` return
/// quantiles, stored action-major (`a * K + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileQNet {
    net: DenseNet,
    num_actions: usize,
    num_quantiles: usize,
}

impl QuantileQNet {
    pub fn new<R: Rng + ?Sized>(
        input_width: usize,
        hidden: &[usize],
        num_actions: usize,
        num_quantiles: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if num_actions < 2 {
            return Err(Error::Parameter("need at least two actions".into()));
        }
        if num_quantiles == 0 {
            return Err(Error::Parameter("need at least one quantile".into()));
        }
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input_width);
        sizes.extend_from_slice(hidden);
        sizes.push(num_actions * num_quantiles);
        Self::from_net(DenseNet::random(&sizes, rng)?, num_actions, num_quantiles)
    }

    pub fn from_net(net: DenseNet, num_actions: usize, num_quantiles: usize) -> Result<Self> {
        check_len("quantile head", num_actions * num_quantiles, net.output_width())?;
        Ok(Self {
            net,
            num_actions,
            num_quantiles,
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DenseNet {
        &mut self.net
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_quantiles(&self) -> usize {
        self.num_quantiles
    }

    pub fn input_width(&self) -> usize {
        self.net.input_width()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        quantile_midpoints(self.num_quantiles)
    }

    pub fn quantiles(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(input)
    }

    pub fn trace(&self, input: &[f64]) -> Result<ForwardTrace> {
        self.net.forward_trace(input)
    }

    /// Mean over quantiles per action.
    pub fn mean_q(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(mean_over_quantiles(&self.quantiles(input)?, self.num_quantiles))
    }
}

pub fn mean_over_quantiles(quantiles: &[f64], num_quantiles: usize) -> Vec<f64> {
    quantiles
        .chunks_exact(num_quantiles)
        .map(|q| q.iter().sum::<f64>() / num_quantiles as f64)
        .collect()
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `target ← (1 − τ)·target + τ·online`, elementwise.
pub fn polyak_update(online: &DenseNet, target: &mut DenseNet, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Parameter(format!("polyak tau must be in (0, 1], got {tau}")));
    }
    if !online.same_shape(target) {
        return Err(Error::Parameter("polyak: network shapes differ".into()));
    }
    if tau == 1.0 {
        *target = online.clone();
        return Ok(());
    }
    for (t, o) in target.param_slices_mut().zip(online.param_slices()) {
        for (ti, oi) in t.iter_mut().zip(o) {
            *ti = (1.0 - tau) * *ti + tau * oi;
        }
    }
    Ok(())
}

/// Frozen copy of an online network, moved toward it by Polyak averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetNet {
    qnet: QuantileQNet,
    tau: f64,
}

impl TargetNet {
    pub fn new(online: &QuantileQNet, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Parameter(format!("polyak tau must be in (0, 1], got {tau}")));
        }
        Ok(Self {
            qnet: online.clone(),
            tau,
        })
    }

    pub fn qnet(&self) -> &QuantileQNet {
        &self.qnet
    }

    pub fn qnet_mut(&mut self) -> &mut QuantileQNet {
        &mut self.qnet
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn update(&mut self, online: &QuantileQNet) -> Result<()> {
        polyak_update(online.net(), self.qnet.net_mut(), self.tau)
    }
}
