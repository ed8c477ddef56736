//! Contrastive model: MLP encoder `f`, three-layer projection head `g`,
//! normalized-temperature cross-entropy, and the minibatch trainer.

mod checkpoint;
mod loss;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::{nt_xent, nt_xent_loss, NtXent, UNIT_NORM_TOL};

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{augment_pair, AugmentationConfig};
use crate::error::{shape, Error, Result};
use crate::ndgrad::{l2_normalize, AdamConfig, AdamState, Mlp, Tape, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub feature_dim: usize,
    pub head_dims: [usize; 3],
}

impl EncoderConfig {
    pub fn for_patch_side(side: usize) -> Self {
        Self {
            input_dim: side * side,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.feature_dim == 0
            || self.hidden_dims.contains(&0)
            || self.head_dims.contains(&0)
        {
            return Err(Error::Validation(format!("all layer widths must be >= 1: {self:?}")));
        }
        Ok(())
    }

    pub fn projection_dim(&self) -> usize {
        self.head_dims[2]
    }

    fn encoder_widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(&self.hidden_dims);
        w.push(self.feature_dim);
        w
    }

    fn head_widths(&self) -> Vec<usize> {
        let mut w = vec![self.feature_dim];
        w.extend(self.head_dims);
        w
    }
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            input_dim: 64,
            hidden_dims: vec![128, 128],
            feature_dim: 64,
            head_dims: [64, 64, 32],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveHyper {
    pub temperature: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for ContrastiveHyper {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            batch_size: 64,
            epochs: 30,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl ContrastiveHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Validation(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::Validation(format!(
                "batch_size must be >= 2, got {}",
                self.batch_size
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Validation(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Encoder and projection-head weights plus their optimizer state, which
/// persists across successive training calls.
#[derive(Clone, Debug, PartialEq)]
pub struct ContrastiveModel {
    config: EncoderConfig,
    encoder: Mlp,
    head: Mlp,
    optimizer: Option<(AdamState, AdamState)>,
}

impl ContrastiveModel {
    pub fn new<R: Rng + ?Sized>(config: EncoderConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let encoder = Mlp::new(&config.encoder_widths(), false, rng);
        let head = Mlp::new(&config.head_widths(), false, rng);
        Ok(Self {
            config,
            encoder,
            head,
            optimizer: None,
        })
    }

    pub(crate) fn from_parts(config: EncoderConfig, encoder: Mlp, head: Mlp) -> Self {
        Self {
            config,
            encoder,
            head,
            optimizer: None,
        }
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn head(&self) -> &Mlp {
        &self.head
    }

    /// Number of optimizer steps taken so far.
    pub fn steps(&self) -> u64 {
        self.optimizer.as_ref().map_or(0, |(e, _)| e.step_count())
    }

    /// Hash of the weight bit patterns; changes iff some weight changes.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for t in self.encoder.params().iter().chain(self.head.params()) {
            t.shape().hash(&mut h);
            for v in t.data() {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

/// `h = f(x)`, one row per input.
pub fn encode(model: &ContrastiveModel, batch: &Tensor) -> Result<Tensor> {
    model.encoder.forward(batch)
}

/// `z = g(h)` with unit-normalized rows.
pub fn project(model: &ContrastiveModel, features: &Tensor) -> Result<Tensor> {
    if features.cols() != model.config.feature_dim {
        return Err(shape(
            "project",
            format!(
                "feature width {}, head expects {}",
                features.cols(),
                model.config.feature_dim
            ),
        ));
    }
    let z = model.head.forward(features)?;
    Ok(l2_normalize(&z)?.0)
}

/// Loss of one minibatch of `2N` views through the full encoder and head.
fn step_loss(model: &mut ContrastiveModel, views: Tensor, hyper: &ContrastiveHyper) -> Result<f64> {
    let mut tape = Tape::new();
    let enc_vars = tape.params(model.encoder.params());
    let head_vars = tape.params(model.head.params());
    let x = tape.constant(views);
    let h = model.encoder.forward_tape(&mut tape, x, &enc_vars)?;
    let z = model.head.forward_tape(&mut tape, h, &head_vars)?;
    let zn = tape.l2_normalize_rows(z)?;
    let loss = nt_xent(&mut tape, zn, hyper.temperature)?;
    let value = tape.value(loss).get(0, 0);
    let grads = tape.backward(loss)?;

    let (enc_opt, head_opt) = model.optimizer.get_or_insert_with(|| {
        (
            AdamState::new(hyper.adam(), model.encoder.params()),
            AdamState::new(hyper.adam(), model.head.params()),
        )
    });
    enc_opt.step(model.encoder.params_mut(), &enc_vars, &grads)?;
    head_opt.step(model.head.params_mut(), &head_vars, &grads)?;
    Ok(value)
}

/// Trains `model` in place on `subset` and returns the mean minibatch loss of
/// each epoch.
///
/// Every epoch reshuffles the subset with `shuffle_rng` and draws fresh views
/// with `augment_rng`. A trailing minibatch is kept when it has at least two
/// samples.
pub fn train_contrastive<S, R1, R2>(
    model: &mut ContrastiveModel,
    subset: &[S],
    side: usize,
    hyper: &ContrastiveHyper,
    augmentation: &AugmentationConfig,
    shuffle_rng: &mut R1,
    augment_rng: &mut R2,
) -> Result<Vec<f64>>
where
    S: AsRef<[f64]>,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    hyper.validate()?;
    augmentation.validate(side)?;
    if subset.len() < 2 {
        return Err(Error::Validation(format!(
            "contrastive training needs at least 2 samples, got {}",
            subset.len()
        )));
    }
    let dim = side * side;
    if dim != model.config.input_dim {
        return Err(shape(
            "train_contrastive",
            format!("patch side {side} gives {dim} inputs, encoder expects {}", model.config.input_dim),
        ));
    }
    if let Some(i) = subset.iter().position(|s| s.as_ref().len() != dim) {
        return Err(shape("train_contrastive", format!("sample {i} has the wrong pixel count")));
    }

    let mut order: Vec<usize> = (0..subset.len()).collect();
    let mut trace = Vec::with_capacity(hyper.epochs);
    for _ in 0..hyper.epochs {
        order.shuffle(shuffle_rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(hyper.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let n = chunk.len();
            let mut data = vec![0.0; 2 * n * dim];
            for (r, &idx) in chunk.iter().enumerate() {
                let (vi, vj) = augment_pair(subset[idx].as_ref(), side, augmentation, augment_rng);
                data[r * dim..(r + 1) * dim].copy_from_slice(&vi);
                data[(r + n) * dim..(r + n + 1) * dim].copy_from_slice(&vj);
            }
            let views = Tensor::from_raw(data, 2 * n, dim);
            sum += step_loss(model, views, hyper)?;
            batches += 1;
        }
        trace.push(sum / batches as f64);
    }
    Ok(trace)
}
