//! Model checkpoint format, version 1 (little-endian).
//!
//! ```text
//! magic        8 bytes  "ACLCKPT\0"
//! version      u32      = 1
//! echo length  u32      byte length of the config echo
//! config echo  UTF-8    "key=value" lines: input_dim, hidden_dims, feature_dim, head_dims
//! tensor count u32
//! tensors      rows u32, cols u32, rows×cols f64, row-major
//! ```
//!
//! Tensors appear in declaration order: encoder `w0, b0, w1, b1, ...` followed
//! by the head's. Optimizer state is not stored.

use std::io::{Read, Write};

use super::{ContrastiveModel, EncoderConfig};
use crate::error::{Error, Result};
use crate::ndgrad::{Mlp, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ACLCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn echo(config: &EncoderConfig) -> String {
    format!(
        "input_dim={}\nhidden_dims={}\nfeature_dim={}\nhead_dims={}\n",
        config.input_dim,
        join(&config.hidden_dims),
        config.feature_dim,
        join(&config.head_dims)
    )
}

fn parse_echo(text: &str) -> Result<EncoderConfig> {
    let bad = |m: &str| Error::Format(format!("checkpoint config echo: {m}"));
    let list = |v: &str| -> Result<Vec<usize>> {
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|x| x.parse().map_err(|_| bad("bad integer")))
            .collect()
    };
    let (mut input, mut hidden, mut feature, mut head) = (None, None, None, None);
    for line in text.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| bad("missing '='"))?;
        match k {
            "input_dim" => input = Some(v.parse().map_err(|_| bad("input_dim"))?),
            "hidden_dims" => hidden = Some(list(v)?),
            "feature_dim" => feature = Some(v.parse().map_err(|_| bad("feature_dim"))?),
            "head_dims" => {
                let h = list(v)?;
                head = Some(<[usize; 3]>::try_from(h).map_err(|_| bad("head_dims needs 3 widths"))?)
            }
            other => return Err(bad(&format!("unknown key {other}"))),
        }
    }
    Ok(EncoderConfig {
        input_dim: input.ok_or_else(|| bad("input_dim missing"))?,
        hidden_dims: hidden.ok_or_else(|| bad("hidden_dims missing"))?,
        feature_dim: feature.ok_or_else(|| bad("feature_dim missing"))?,
        head_dims: head.ok_or_else(|| bad("head_dims missing"))?,
    })
}

pub fn save_checkpoint<W: Write>(model: &ContrastiveModel, mut out: W) -> Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    let text = echo(model.config());
    out.write_all(&(text.len() as u32).to_le_bytes())?;
    out.write_all(text.as_bytes())?;
    let tensors: Vec<&Tensor> = model.encoder().params().iter().chain(model.head().params()).collect();
    out.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        out.write_all(&(t.rows() as u32).to_le_bytes())?;
        out.write_all(&(t.cols() as u32).to_le_bytes())?;
        for v in t.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn u32_from<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn load_checkpoint<R: Read>(mut input: R) -> Result<ContrastiveModel> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a checkpoint file (bad magic)".into()));
    }
    let version = u32_from(&mut input)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let len = u32_from(&mut input)? as usize;
    let mut text = vec![0u8; len];
    input.read_exact(&mut text)?;
    let text = String::from_utf8(text).map_err(|_| Error::Format("config echo is not UTF-8".into()))?;
    let config = parse_echo(&text)?;
    config.validate()?;

    let count = u32_from(&mut input)? as usize;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let rows = u32_from(&mut input)? as usize;
        let cols = u32_from(&mut input)? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut b = [0u8; 8];
        for _ in 0..rows * cols {
            input.read_exact(&mut b)?;
            data.push(f64::from_le_bytes(b));
        }
        tensors.push(Tensor::from_vec(data, (rows, cols))?);
    }
    let enc_widths = config.encoder_widths();
    let head_widths = config.head_widths();
    let n_enc = 2 * (enc_widths.len() - 1);
    if tensors.len() != n_enc + 2 * (head_widths.len() - 1) {
        return Err(Error::Format(format!(
            "{} tensors do not match the echoed architecture",
            tensors.len()
        )));
    }
    let head_params = tensors.split_off(n_enc);
    let encoder = Mlp::from_params(&enc_widths, false, tensors)?;
    let head = Mlp::from_params(&head_widths, false, head_params)?;
    Ok(ContrastiveModel::from_parts(config, encoder, head))
}
