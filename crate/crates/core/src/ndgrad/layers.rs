use rand::Rng;

use super::tape::{Activation, Tape, Var};
use super::tensor::{kernels, Tensor};
use crate::error::{shape, Result};

/// Glorot-uniform matrix: entries in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Tensor::from_raw(data, fan_in, fan_out)
}

/// Stack of fully connected layers with ReLU between them.
///
/// Parameters are stored as `[w0, b0, w1, b1, ...]`, weights `in×out` and
/// biases `1×out`. The last layer is linear unless `relu_output` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    relu_output: bool,
    params: Vec<Tensor>,
}

impl Mlp {
    /// `widths` lists the input width followed by every layer's output width.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], relu_output: bool, rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "an MLP needs at least one layer");
        let mut params = Vec::with_capacity(2 * (widths.len() - 1));
        for pair in widths.windows(2) {
            params.push(glorot_uniform(pair[0], pair[1], rng));
            params.push(Tensor::zeros(1, pair[1]));
        }
        Self {
            widths: widths.to_vec(),
            relu_output,
            params,
        }
    }

    /// Rebuilds a network from stored parameters, checking shapes.
    pub fn from_params(widths: &[usize], relu_output: bool, params: Vec<Tensor>) -> Result<Self> {
        if widths.len() < 2 || params.len() != 2 * (widths.len() - 1) {
            return Err(shape(
                "mlp",
                format!("{} tensors for {} widths", params.len(), widths.len()),
            ));
        }
        for (l, pair) in widths.windows(2).enumerate() {
            if params[2 * l].shape() != (pair[0], pair[1]) || params[2 * l + 1].shape() != (1, pair[1])
            {
                return Err(shape("mlp", format!("layer {l} parameter shapes")));
            }
        }
        Ok(Self {
            widths: widths.to_vec(),
            relu_output,
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(shape(
                "mlp",
                format!("input width {cols}, network expects {}", self.input_dim()),
            ));
        }
        Ok(())
    }

    fn activates(&self, layer: usize) -> bool {
        layer + 1 < self.layers() || self.relu_output
    }

    /// Gradient-free forward pass.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x.cols())?;
        let mut h = x.clone();
        for l in 0..self.layers() {
            h = kernels::add_row(&kernels::matmul(&h, &self.params[2 * l]), &self.params[2 * l + 1]);
            if self.activates(l) {
                h = kernels::relu(&h);
            }
        }
        Ok(h)
    }

    /// Forward pass recorded on `tape`; `bound` are this network's parameters
    /// as registered with [`Tape::params`].
    pub fn forward_tape(&self, tape: &mut Tape, x: Var, bound: &[Var]) -> Result<Var> {
        self.check_input(x.shape().1)?;
        debug_assert_eq!(bound.len(), self.params.len());
        let mut h = x;
        for l in 0..self.layers() {
            let z = tape.matmul(h, bound[2 * l])?;
            h = tape.add_row(z, bound[2 * l + 1])?;
            if self.activates(l) {
                h = tape.activation(h, Activation::Relu);
            }
        }
        Ok(h)
    }
}
