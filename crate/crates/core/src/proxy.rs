//! Linear proxy classifier on frozen encoder features, and entropy scoring.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::Label;
use crate::error::{shape, Error, Result};
use crate::ndgrad::{glorot_uniform, kernels, AdamConfig, AdamState, Function, Tape, Tensor, Var};
use crate::simclr::{encode, ContrastiveModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for ProxyHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 40,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl ProxyHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Validation(format!("proxy learning_rate {} must be > 0", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("proxy batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Validation("proxy betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Validation("proxy epsilon must be > 0".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Single fully connected layer with one sigmoid output.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxyParams {
    /// `feature_dim × 1`
    pub weight: Tensor,
    /// `1 × 1`
    pub bias: Tensor,
}

impl ProxyParams {
    pub fn init<R: Rng + ?Sized>(feature_dim: usize, rng: &mut R) -> Self {
        Self {
            weight: glorot_uniform(feature_dim, 1, rng),
            bias: Tensor::zeros(1, 1),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Encoder features for downstream use; the projection head is not applied.
pub fn extract_features(model: &ContrastiveModel, samples: &Tensor) -> Result<Tensor> {
    encode(model, samples)
}

/// Mean binary cross-entropy of `n×1` logits against fixed 0/1 targets,
/// computed as `softplus(x) − y·x`.
pub struct BinaryCrossEntropy {
    targets: Vec<f64>,
}

impl BinaryCrossEntropy {
    pub fn new(labels: &[Label]) -> Self {
        Self {
            targets: labels.iter().map(|l| f64::from(l.bit())).collect(),
        }
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Function for BinaryCrossEntropy {
    fn name(&self) -> &'static str {
        "binary_cross_entropy"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        let logits = inputs[0];
        if logits.cols() != 1 || logits.rows() != self.targets.len() || logits.rows() == 0 {
            return Err(shape(
                "binary_cross_entropy",
                format!("logits {:?} for {} targets", logits.shape(), self.targets.len()),
            ));
        }
        let n = self.targets.len() as f64;
        let total: f64 = logits
            .data()
            .iter()
            .zip(&self.targets)
            .map(|(&x, &y)| softplus(x) - y * x)
            .sum();
        Tensor::from_vec(vec![total / n], (1, 1))
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, grad: &Tensor) -> Vec<Tensor> {
        let logits = inputs[0];
        let scale = grad.get(0, 0) / self.targets.len() as f64;
        let g = logits
            .data()
            .iter()
            .zip(&self.targets)
            .map(|(&x, &y)| (kernels::sigmoid_scalar(x) - y) * scale)
            .collect();
        vec![Tensor::from_raw(g, logits.rows(), 1)]
    }
}

pub fn bce_with_logits(tape: &mut Tape, logits: Var, labels: &[Label]) -> Result<Var> {
    tape.apply(Box::new(BinaryCrossEntropy::new(labels)), &[logits])
}

fn check_training_set(features: &Tensor, labels: &[Label]) -> Result<()> {
    if features.rows() != labels.len() {
        return Err(shape(
            "train_proxy",
            format!("{} feature rows for {} labels", features.rows(), labels.len()),
        ));
    }
    if labels.len() < 2 {
        return Err(Error::Validation(format!(
            "proxy training needs at least 2 labeled samples, got {}",
            labels.len()
        )));
    }
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::Validation("proxy training needs both classes present".into()));
    }
    Ok(())
}

/// Trains a freshly initialized proxy with minibatch Adam on binary
/// cross-entropy.
pub fn train_proxy<R: Rng + ?Sized>(
    features: &Tensor,
    labels: &[Label],
    hyper: &ProxyHyper,
    rng: &mut R,
) -> Result<ProxyParams> {
    train_proxy_monitored(features, labels, hyper, rng, 0, |_, _| Ok(()))
}

/// Like [`train_proxy`], calling `on_eval(epoch, params)` after every
/// `eval_every`-th epoch (never when `eval_every` is 0).
pub fn train_proxy_monitored<R, F>(
    features: &Tensor,
    labels: &[Label],
    hyper: &ProxyHyper,
    rng: &mut R,
    eval_every: usize,
    mut on_eval: F,
) -> Result<ProxyParams>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &ProxyParams) -> Result<()>,
{
    check_training_set(features, labels)?;
    hyper.validate()?;
    let mut proxy = ProxyParams::init(features.cols(), rng);
    let mut params = vec![proxy.weight.clone(), proxy.bias.clone()];
    let mut opt = AdamState::new(hyper.adam(), &params);
    let mut order: Vec<usize> = (0..labels.len()).collect();

    for epoch in 1..=hyper.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(hyper.batch_size) {
            let x = features.select_rows(chunk);
            let y: Vec<Label> = chunk.iter().map(|&i| labels[i]).collect();
            let mut tape = Tape::new();
            let bound = tape.params(&params);
            let xv = tape.constant(x);
            let z = tape.matmul(xv, bound[0])?;
            let logits = tape.add_row(z, bound[1])?;
            let loss = bce_with_logits(&mut tape, logits, &y)?;
            let grads = tape.backward(loss)?;
            opt.step(&mut params, &bound, &grads)?;
        }
        if eval_every > 0 && epoch % eval_every == 0 {
            proxy.weight = params[0].clone();
            proxy.bias = params[1].clone();
            on_eval(epoch, &proxy)?;
        }
    }
    proxy.bias = params.pop().expect("bias");
    proxy.weight = params.pop().expect("weight");
    Ok(proxy)
}

/// `sigmoid(x·w + b)` per row.
pub fn predict_proba(proxy: &ProxyParams, features: &Tensor) -> Result<Vec<f64>> {
    if features.cols() != proxy.feature_dim() {
        return Err(shape(
            "predict_proba",
            format!("feature width {}, proxy expects {}", features.cols(), proxy.feature_dim()),
        ));
    }
    let logits = kernels::add_row(&kernels::matmul(features, &proxy.weight), &proxy.bias);
    Ok(kernels::sigmoid(&logits).into_vec())
}

/// Binary Shannon entropy in nats, `−p ln p − (1−p) ln(1−p)`, with `0 ln 0 = 0`.
pub fn entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!("probability {p} outside [0, 1]")));
    }
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}
