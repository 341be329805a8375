//! Dense multilayer perceptron with tanh hidden layers and a linear output
//! layer, with hand-written reverse-mode gradients.

use crate::error::{Error, Result};
use crate::timegrid::RngStream;

/// Layer parameters. Weights are row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
struct Layer {
    weights: Vec<f64>,
    biases: Vec<f64>,
    in_dim: usize,
    out_dim: usize,
    tanh: bool,
}

impl Layer {
    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut z = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                z += w * x;
            }
            out.push(if self.tanh { z.tanh() } else { z });
        }
    }
}

/// A fully connected network. Activation layout is fixed: tanh on every
/// hidden layer, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
}

impl Mlp {
    /// Xavier-uniform initialization from the given stream.
    pub fn new(sizes: &[usize], stream: &mut RngStream) -> Mlp {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let n_layers = sizes.len() - 1;
        let layers = (0..n_layers)
            .map(|l| {
                let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    weights: (0..fan_in * fan_out)
                        .map(|_| stream.uniform_in(-limit, limit))
                        .collect(),
                    biases: vec![0.0; fan_out],
                    in_dim: fan_in,
                    out_dim: fan_out,
                    tanh: l + 1 < n_layers,
                }
            })
            .collect();
        Mlp {
            sizes: sizes.to_vec(),
            layers,
        }
    }

    /// All-zero parameters, useful for tests and as a constant function.
    pub fn zeros(sizes: &[usize]) -> Mlp {
        let mut stream = crate::timegrid::derive_stream(0, 0);
        let mut net = Mlp::new(sizes, &mut stream);
        for layer in &mut net.layers {
            layer.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        net
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Canonical flat parameter order: layer 0 weights (row-major), layer 0
    /// biases, layer 1 weights, ... Gradients use the same order.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            flat.extend_from_slice(&layer.weights);
            flat.extend_from_slice(&layer.biases);
        }
        flat
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::RejectedInput(format!(
                "parameter vector has {} entries, network needs {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut cursor = 0;
        for layer in &mut self.layers {
            let w = layer.weights.len();
            layer.weights.copy_from_slice(&flat[cursor..cursor + w]);
            cursor += w;
            let b = layer.biases.len();
            layer.biases.copy_from_slice(&flat[cursor..cursor + b]);
            cursor += b;
        }
        Ok(())
    }

    pub fn copy_params_from(&mut self, other: &Mlp) {
        assert_eq!(self.sizes, other.sizes, "network shapes differ");
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            dst.weights.copy_from_slice(&src.weights);
            dst.biases.copy_from_slice(&src.biases);
        }
    }

    /// Forward pass, checking the input shape.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::RejectedInput(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    /// Forward pass for a scalar-output network.
    pub fn forward_scalar(&self, input: &[f64]) -> Result<f64> {
        let out = self.forward(input)?;
        debug_assert_eq!(out.len(), 1);
        Ok(out[0])
    }

    /// Forward pass that keeps every layer's post-activation output for
    /// the backward pass. `activations[0]` is the input itself.
    fn forward_cached(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        if input.len() != self.input_dim() {
            return Err(Error::RejectedInput(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for layer in &self.layers {
            let mut out = Vec::new();
            layer.forward_into(activations.last().unwrap(), &mut out);
            activations.push(out);
        }
        Ok(activations)
    }

    /// Reverse-mode gradient of `loss` with respect to every parameter,
    /// given the loss gradient at the network output. Returns a flat vector
    /// in the same order as [`Mlp::flatten_params`].
    pub fn gradient(&self, input: &[f64], out_grad: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.param_count()];
        self.accumulate_gradient(input, out_grad, &mut grad)?;
        Ok(grad)
    }

    /// Like [`Mlp::gradient`] but adds into an existing accumulator, for
    /// batched updates.
    pub fn accumulate_gradient(
        &self,
        input: &[f64],
        out_grad: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        if out_grad.len() != self.output_dim() {
            return Err(Error::RejectedInput(format!(
                "output gradient has {} entries, network emits {}",
                out_grad.len(),
                self.output_dim()
            )));
        }
        if grad.len() != self.param_count() {
            return Err(Error::RejectedInput(format!(
                "gradient buffer has {} entries, network has {} parameters",
                grad.len(),
                self.param_count()
            )));
        }
        let activations = self.forward_cached(input)?;

        // Per-layer flat offsets into the canonical order.
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut cursor = 0;
        for layer in &self.layers {
            offsets.push(cursor);
            cursor += layer.weights.len() + layer.biases.len();
        }

        // delta = dL/dz for the current layer; linear output means the
        // last layer's delta is out_grad itself.
        let mut delta = out_grad.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let a_out = &activations[l + 1];
            if layer.tanh {
                for (d, a) in delta.iter_mut().zip(a_out) {
                    *d *= 1.0 - a * a;
                }
            }
            let a_in = &activations[l];
            let base = offsets[l];
            for o in 0..layer.out_dim {
                let row = base + o * layer.in_dim;
                for (i, x) in a_in.iter().enumerate() {
                    grad[row + i] += delta[o] * x;
                }
            }
            let bias_base = base + layer.weights.len();
            for o in 0..layer.out_dim {
                grad[bias_base + o] += delta[o];
            }
            if l > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for o in 0..layer.out_dim {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += delta[o] * w;
                    }
                }
                delta = prev;
            }
        }
        Ok(())
    }
}
