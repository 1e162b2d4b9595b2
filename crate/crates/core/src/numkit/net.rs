//! Fully connected network with ReLU hidden layers and a linear output layer.
//!
//! Weights of layer `l` are stored row-major as `[out][in]`, so the forward
//! pass is one dot product per output unit.

use rand::Rng;

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Per-parameter gradients laid out exactly like a [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradBundle {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn input(&self) -> &[f64] {
        &self.inputs[0]
    }
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Parameter(
            "a network needs at least an input and an output layer".into(),
        ));
    }
    if layer_sizes.iter().any(|&n| n == 0) {
        return Err(Error::Parameter("layer sizes must be positive".into()));
    }
    Ok(())
}

impl DenseNet {
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let weights = layer_sizes
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// Uniform initialization in `±1/sqrt(fan_in)` for weights and biases.
    pub fn random<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        for l in 0..net.num_layers() {
            let bound = 1.0 / (layer_sizes[l] as f64).sqrt();
            for w in net.weights[l].iter_mut() {
                *w = rng.gen_range(-bound..bound);
            }
            for b in net.biases[l].iter_mut() {
                *b = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn from_parts(
        layer_sizes: &[usize],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        check_len("layer count", layer_sizes.len() - 1, weights.len())?;
        check_len("layer count", layer_sizes.len() - 1, biases.len())?;
        for (l, pair) in layer_sizes.windows(2).enumerate() {
            check_len("weight matrix", pair[0] * pair[1], weights[l].len())?;
            check_len("bias vector", pair[1], biases[l].len())?;
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.biases[layer]
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        check_len("flat parameters", self.num_params(), flat.len())?;
        let mut offset = 0;
        for s in self.param_slices_mut() {
            let n = s.len();
            s.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Mutable views over every parameter slice, in `params_flat` order.
    pub fn param_slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
    }

    pub fn param_slices(&self) -> impl Iterator<Item = &[f64]> {
        self.weights
            .iter()
            .zip(self.biases.iter())
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices().flatten().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &DenseNet) -> bool {
        self.layer_sizes == other.layer_sizes
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_len("network input", self.input_width(), input.len())?;
        let mut x = input.to_vec();
        let last = self.num_layers() - 1;
        for l in 0..=last {
            let mut z = self.affine(l, &x);
            if l != last {
                relu_in_place(&mut z);
            }
            x = z;
        }
        Ok(x)
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace> {
        check_len("network input", self.input_width(), input.len())?;
        let last = self.num_layers() - 1;
        let mut inputs = Vec::with_capacity(self.num_layers());
        inputs.push(input.to_vec());
        for l in 0..last {
            let mut z = self.affine(l, &inputs[l]);
            relu_in_place(&mut z);
            inputs.push(z);
        }
        let output = self.affine(last, &inputs[last]);
        Ok(ForwardTrace { inputs, output })
    }

    fn affine(&self, layer: usize, x: &[f64]) -> Vec<f64> {
        let n_in = self.layer_sizes[layer];
        self.weights[layer]
            .chunks_exact(n_in)
            .zip(&self.biases[layer])
            .map(|(row, b)| dot(row, x) + b)
            .collect()
    }

    /// Reverse-mode gradient of `output · output_grad` with respect to every
    /// parameter and to the input.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(GradBundle, Vec<f64>)> {
        let trace = self.forward_trace(input)?;
        let mut grads = GradBundle::zeros_like(self);
        let input_grad = self.backprop(&trace, output_grad, &mut grads, true)?;
        Ok((grads, input_grad.unwrap_or_default()))
    }

    /// Adds the parameter gradient of `output · output_grad` into `grads`.
    pub fn accumulate_backward(
        &self,
        trace: &ForwardTrace,
        output_grad: &[f64],
        grads: &mut GradBundle,
    ) -> Result<()> {
        self.backprop(trace, output_grad, grads, false).map(|_| ())
    }

    fn backprop(
        &self,
        trace: &ForwardTrace,
        output_grad: &[f64],
        grads: &mut GradBundle,
        want_input_grad: bool,
    ) -> Result<Option<Vec<f64>>> {
        check_len("output gradient", self.output_width(), output_grad.len())?;
        if !grads.matches(self) {
            return Err(Error::Parameter(
                "gradient bundle does not match network shape".into(),
            ));
        }
        let mut delta = output_grad.to_vec();
        for l in (0..self.num_layers()).rev() {
            let n_in = self.layer_sizes[l];
            let x = &trace.inputs[l];
            for ((g_row, d), g_b) in grads.weights[l]
                .chunks_exact_mut(n_in)
                .zip(&delta)
                .zip(grads.biases[l].iter_mut())
            {
                *g_b += d;
                if *d != 0.0 {
                    axpy(*d, x, g_row);
                }
            }
            if l == 0 && !want_input_grad {
                return Ok(None);
            }
            let mut prev = vec![0.0; n_in];
            for (row, d) in self.weights[l].chunks_exact(n_in).zip(&delta) {
                if *d != 0.0 {
                    axpy(*d, row, &mut prev);
                }
            }
            if l > 0 {
                // ReLU mask; the subgradient at 0 is 0.
                for (p, a) in prev.iter_mut().zip(x) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Ok(Some(delta))
    }
}

impl GradBundle {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn matches(&self, net: &DenseNet) -> bool {
        self.weights.len() == net.weights.len()
            && self.biases.len() == net.biases.len()
            && self
                .weights
                .iter()
                .zip(&net.weights)
                .all(|(a, b)| a.len() == b.len())
            && self
                .biases
                .iter()
                .zip(&net.biases)
                .all(|(a, b)| a.len() == b.len())
    }

    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.weights
            .iter()
            .zip(self.biases.iter())
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
    }

    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
    }

    pub fn flat(&self) -> Vec<f64> {
        self.slices().flatten().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().flatten().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.slices().flatten().all(|&v| v == 0.0)
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &GradBundle) {
        for (a, b) in self.slices_mut().zip(other.slices()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn relu_in_place(z: &mut [f64]) {
    for v in z.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}
