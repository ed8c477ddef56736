use crate::error::{Error, Result};
use crate::ndgrad::{kernels, Function, Tape, Tensor, Var};

/// Rows handed to the loss must have unit norm within this tolerance.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Normalized temperature-scaled cross-entropy over `2N` unit rows.
///
/// Row `r < N` and row `r + N` are the two views of one sample. For anchor
/// `a` with partner `p(a)` the per-anchor term is
/// `logsumexp_{k≠a}(z_a·z_k / τ) − z_a·z_p(a) / τ`; the partner stays in the
/// denominator and only `k = a` is excluded. The loss is the mean over all
/// `2N` anchors.
#[derive(Clone, Copy, Debug)]
pub struct NtXent {
    pub temperature: f64,
}

struct Softmax {
    /// `2N × 2N` row-softmax of similarities with the diagonal removed.
    probs: Tensor,
    loss: f64,
}

impl NtXent {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::Validation(format!(
                "temperature must be > 0, got {temperature}"
            )));
        }
        Ok(Self { temperature })
    }

    fn check(z: &Tensor) -> Result<()> {
        let n2 = z.rows();
        if n2 == 0 || n2 % 2 != 0 {
            return Err(Error::Contract(format!(
                "contrastive loss needs an even, non-zero number of rows, got {n2}"
            )));
        }
        for (r, row) in z.row_iter().enumerate() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Contract(format!(
                    "row {r} has norm {norm}, rows must be unit-normalized"
                )));
            }
        }
        Ok(())
    }

    fn softmax(&self, z: &Tensor) -> Softmax {
        let n2 = z.rows();
        let half = n2 / 2;
        let sims = kernels::matmul_nt(z, z);
        let inv_t = 1.0 / self.temperature;
        let mut probs = vec![0.0; n2 * n2];
        let mut total = 0.0;
        for a in 0..n2 {
            let partner = (a + half) % n2;
            let row = sims.row(a);
            let max = row
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != a)
                .map(|(_, s)| s * inv_t)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for (k, s) in row.iter().enumerate() {
                if k != a {
                    let e = (s * inv_t - max).exp();
                    probs[a * n2 + k] = e;
                    denom += e;
                }
            }
            for p in &mut probs[a * n2..(a + 1) * n2] {
                *p /= denom;
            }
            let lse = max + denom.ln();
            total += lse - row[partner] * inv_t;
        }
        Softmax {
            probs: Tensor::from_raw(probs, n2, n2),
            loss: total / n2 as f64,
        }
    }

    /// Loss value without gradient tracking.
    pub fn value(&self, z: &Tensor) -> Result<f64> {
        Self::check(z)?;
        Ok(self.softmax(z).loss)
    }
}

impl Function for NtXent {
    fn name(&self) -> &'static str {
        "nt_xent"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        let z = inputs[0];
        Self::check(z)?;
        Tensor::from_vec(vec![self.softmax(z).loss], (1, 1))
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, grad: &Tensor) -> Vec<Tensor> {
        let z = inputs[0];
        let n2 = z.rows();
        let half = n2 / 2;
        let Softmax { mut probs, .. } = self.softmax(z);
        // dL/dS[a,k] = (P[a,k] - [k = p(a)]) / 2N, scaled by the incoming gradient
        let scale = grad.get(0, 0) / n2 as f64;
        {
            let p = probs.data_mut();
            for a in 0..n2 {
                p[a * n2 + (a + half) % n2] -= 1.0;
            }
            for v in p.iter_mut() {
                *v *= scale;
            }
        }
        // S = Z Zᵀ / τ, so dZ = (G + Gᵀ) Z / τ
        let sym = probs.zip_map(&probs.transpose(), |a, b| a + b);
        let mut dz = kernels::matmul(&sym, z);
        let inv_t = 1.0 / self.temperature;
        for v in dz.data_mut() {
            *v *= inv_t;
        }
        vec![dz]
    }
}

/// Scalar contrastive loss of unit rows `z` (views ordered `[i-block; j-block]`).
pub fn nt_xent_loss(z: &Tensor, temperature: f64) -> Result<f64> {
    NtXent::new(temperature)?.value(z)
}

/// Records the contrastive loss on `tape`.
pub fn nt_xent(tape: &mut Tape, z: Var, temperature: f64) -> Result<Var> {
    tape.apply(Box::new(NtXent::new(temperature)?), &[z])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(values: &[f64], shape: (usize, usize)) -> Tensor {
        Tensor::from_vec(values.to_vec(), shape).unwrap()
    }

    /// Direct evaluation of the per-anchor formula, one anchor at a time.
    fn oracle(rows: &[Vec<f64>], tau: f64) -> f64 {
        let n2 = rows.len();
        let sim = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut total = 0.0;
        for i in 0..n2 {
            let j = (i + n2 / 2) % n2;
            let num = (sim(&rows[i], &rows[j]) / tau).exp();
            let den: f64 = (0..n2)
                .filter(|&k| k != i)
                .map(|k| (sim(&rows[i], &rows[k]) / tau).exp())
                .sum();
            total += -(num / den).ln();
        }
        total / n2 as f64
    }

    #[test]
    fn single_identical_pair_is_zero() {
        for tau in [0.1, 1.0, 7.0] {
            let z = t(&[0.6, 0.8, 0.6, 0.8], (2, 2));
            assert_eq!(nt_xent_loss(&z, tau).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_distinct_pair_is_zero_too() {
        // With one pair the partner is the only denominator term.
        let z = t(&[1.0, 0.0, 0.0, 1.0], (2, 2));
        assert_eq!(nt_xent_loss(&z, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn two_pairs_orthogonal_blocks() {
        // views: samples A=(1,0), B=(0,1); row r pairs with r+2
        let z = t(&[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0], (4, 2));
        let loss = nt_xent_loss(&z, 1.0).unwrap();
        let expected = (1.0 + 2.0 / std::f64::consts::E).ln();
        assert!((loss - expected).abs() < 1e-12, "{loss} vs {expected}");
        let rows: Vec<Vec<f64>> = z.row_iter().map(|r| r.to_vec()).collect();
        assert!((loss - oracle(&rows, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn mutually_orthogonal_rows_give_log_2n_minus_1() {
        let z = Tensor::identity(4);
        let loss = nt_xent_loss(&z, 0.1).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn contract_errors() {
        let odd = t(&[1.0, 0.0, 0.0, 1.0, 1.0, 0.0], (3, 2));
        assert!(matches!(nt_xent_loss(&odd, 1.0), Err(Error::Contract(_))));
        let loose = t(&[1.0, 1e-4, 0.0, 1.0], (2, 2));
        assert!(matches!(nt_xent_loss(&loose, 1.0), Err(Error::Contract(_))));
        assert!(matches!(nt_xent_loss(&Tensor::identity(2), 0.0), Err(Error::Validation(_))));
    }

    #[test]
    fn large_similarities_do_not_overflow() {
        let z = t(&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0], (4, 2));
        let loss = nt_xent_loss(&z, 1e-3).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-9);
    }
}
