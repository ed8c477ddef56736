use crate::error::{shape, Error, Result};

/// Dense row-major matrix of `f64`.
///
/// Every value in the engine is rank ≤ 2; vectors are `1×n` or `n×1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from row-major values, rejecting length mismatches and
    /// non-finite entries.
    pub fn from_vec(values: Vec<f64>, (rows, cols): (usize, usize)) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(shape(
                "tensor_from",
                format!("{} values for shape {rows}x{cols}", values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value {} at flat index {i}",
                values[i]
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: values,
        })
    }

    /// Stacks equal-length rows into a matrix. `width` fixes the column count so
    /// that an empty row list still has a well-defined shape.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], width: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * width);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != width {
                return Err(shape(
                    "from_rows",
                    format!("row {i} has {} values, expected {width}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(data, (rows.len(), width))
    }

    pub(crate) fn from_raw(data: Vec<f64>, rows: usize, cols: usize) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        let width = self.cols.max(1);
        self.data.chunks_exact(width).take(self.rows)
    }

    /// Copies the selected rows into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Tensor::from_raw(data, indices.len(), self.cols)
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = vec![0.0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        Tensor::from_raw(out, self.cols, self.rows)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Plain matrix product, no gradient tracking.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.cols != other.rows {
            return Err(shape(
                "matmul",
                format!(
                    "({}x{}) . ({}x{})",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        Ok(kernels::matmul(self, other))
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor::from_raw(self.data.iter().map(|&v| f(v)).collect(), self.rows, self.cols)
    }

    pub(crate) fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        debug_assert_eq!(self.shape(), other.shape());
        Tensor::from_raw(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            self.rows,
            self.cols,
        )
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Single-threaded kernels shared by the tape and the plain forward paths, so
/// both produce bit-identical values.
pub(crate) mod kernels {
    use super::Tensor;

    /// `a · b`
    pub fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
        let (n, k, m) = (a.rows, a.cols, b.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            let arow = &a.data[i * k..(i + 1) * k];
            for (p, &av) in arow.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let brow = &b.data[p * m..(p + 1) * m];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
        Tensor::from_raw(out, n, m)
    }

    /// `a · bᵀ`
    pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Tensor {
        let (n, k, m) = (a.rows, a.cols, b.rows);
        debug_assert_eq!(k, b.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let arow = &a.data[i * k..(i + 1) * k];
            for j in 0..m {
                let brow = &b.data[j * k..(j + 1) * k];
                out[i * m + j] = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
            }
        }
        Tensor::from_raw(out, n, m)
    }

    /// `aᵀ · b`
    pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Tensor {
        let (k, n, m) = (a.rows, a.cols, b.cols);
        debug_assert_eq!(k, b.rows);
        let mut out = vec![0.0; n * m];
        for p in 0..k {
            let arow = &a.data[p * n..(p + 1) * n];
            let brow = &b.data[p * m..(p + 1) * m];
            for (i, &av) in arow.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let orow = &mut out[i * m..(i + 1) * m];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
        Tensor::from_raw(out, n, m)
    }

    /// Adds a `1×cols` row to every row of `a`.
    pub fn add_row(a: &Tensor, row: &Tensor) -> Tensor {
        let mut out = a.data.clone();
        let width = a.cols.max(1);
        for chunk in out.chunks_exact_mut(width) {
            for (o, &b) in chunk.iter_mut().zip(&row.data) {
                *o += b;
            }
        }
        Tensor::from_raw(out, a.rows, a.cols)
    }

    pub fn relu(a: &Tensor) -> Tensor {
        a.map(|v| if v > 0.0 { v } else { 0.0 })
    }

    pub fn sigmoid(a: &Tensor) -> Tensor {
        a.map(sigmoid_scalar)
    }

    pub fn sigmoid_scalar(x: f64) -> f64 {
        if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        }
    }

    /// Column sums as a `1×cols` row.
    pub fn sum_rows(a: &Tensor) -> Tensor {
        let mut out = vec![0.0; a.cols];
        for r in a.row_iter() {
            for (o, &v) in out.iter_mut().zip(r) {
                *o += v;
            }
        }
        Tensor::from_raw(out, 1, a.cols)
    }
}
