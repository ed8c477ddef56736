use std::collections::HashMap;
use std::fmt;

use super::tensor::{kernels, Tensor};
use crate::error::{shape, Error, Result};

/// Rows with a Euclidean norm at or below this value are rejected by
/// [`Tape::l2_normalize_rows`].
pub const NORM_EPS: f64 = 1e-12;

/// Index of a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

/// Handle to a value recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct Var {
    id: NodeId,
    rows: usize,
    cols: usize,
}

impl Var {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

/// A differentiable operation defined outside the engine (losses, mostly).
///
/// `backward` receives the forward inputs, the forward output and the gradient
/// flowing into the output, and returns one gradient per input, each with the
/// input's shape.
pub trait Function {
    fn name(&self) -> &'static str;
    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor>;
    fn backward(&self, inputs: &[&Tensor], output: &Tensor, grad: &Tensor) -> Vec<Tensor>;
}

enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Act(NodeId, Activation),
    L2Rows(NodeId, Vec<f64>),
    Sum(NodeId),
    Custom(Vec<NodeId>, Box<dyn Function>),
}

struct Node {
    value: Tensor,
    op: Op,
    trainable: bool,
    needs_grad: bool,
}

/// Gradients of a scalar loss with respect to every trainable node.
#[derive(Debug, Default)]
pub struct GradMap {
    grads: HashMap<NodeId, Tensor>,
}

impl GradMap {
    pub fn get(&self, var: &Var) -> Option<&Tensor> {
        self.grads.get(&var.id)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}

/// Records one forward pass; rebuilt for every training step.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape").field("nodes", &self.nodes.len()).finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, trainable: bool, needs_grad: bool) -> Var {
        let (rows, cols) = value.shape();
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            value,
            op,
            trainable,
            needs_grad,
        });
        Var { id, rows, cols }
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.id.0].needs_grad
    }

    /// Records a value that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false, false)
    }

    /// Records a trainable leaf; [`Tape::backward`] reports its gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true, true)
    }

    /// Registers each tensor as a trainable leaf, preserving order.
    pub fn params(&mut self, values: &[Tensor]) -> Vec<Var> {
        values.iter().map(|t| self.param(t.clone())).collect()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.id.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        if a.cols != b.rows {
            return Err(shape(
                "matmul",
                format!("({}x{}) . ({}x{})", a.rows, a.cols, b.rows, b.cols),
            ));
        }
        let value = kernels::matmul(self.value(a), self.value(b));
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::MatMul(a.id, b.id), false, ng))
    }

    /// Adds a `1×cols` row vector (a bias) to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        if row.rows != 1 || row.cols != a.cols {
            return Err(shape(
                "add_row",
                format!("({}x{}) + row ({}x{})", a.rows, a.cols, row.rows, row.cols),
            ));
        }
        let value = kernels::add_row(self.value(a), self.value(row));
        let ng = self.needs(a) || self.needs(row);
        Ok(self.push(value, Op::AddRow(a.id, row.id), false, ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Add(a.id, b.id), false, ng))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Mul(a.id, b.id), false, ng))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.value(a).map(|x| x * factor);
        let ng = self.needs(a);
        self.push(value, Op::Scale(a.id, factor), false, ng)
    }

    pub fn activation(&mut self, a: Var, kind: Activation) -> Var {
        let value = match kind {
            Activation::Relu => kernels::relu(self.value(a)),
            Activation::Sigmoid => kernels::sigmoid(self.value(a)),
        };
        let ng = self.needs(a);
        self.push(value, Op::Act(a.id, kind), false, ng)
    }

    /// Scales every row to unit Euclidean norm.
    pub fn l2_normalize_rows(&mut self, a: Var) -> Result<Var> {
        let (value, norms) = l2_normalize(self.value(a))?;
        let ng = self.needs(a);
        Ok(self.push(value, Op::L2Rows(a.id, norms), false, ng))
    }

    /// Sum of all entries as a `1×1` value.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        let ng = self.needs(a);
        self.push(Tensor::from_raw(vec![s], 1, 1), Op::Sum(a.id), false, ng)
    }

    /// Records a user-defined differentiable function.
    pub fn apply(&mut self, f: Box<dyn Function>, inputs: &[Var]) -> Result<Var> {
        let values: Vec<&Tensor> = inputs.iter().map(|v| self.value(*v)).collect();
        let value = f.forward(&values)?;
        let ng = inputs.iter().any(|v| self.needs(*v));
        let ids = inputs.iter().map(|v| v.id).collect();
        Ok(self.push(value, Op::Custom(ids, f), false, ng))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if a.shape() != b.shape() {
            return Err(shape(
                op,
                format!("({}x{}) vs ({}x{})", a.rows, a.cols, b.rows, b.cols),
            ));
        }
        Ok(())
    }

    /// Reverse sweep from a `1×1` loss.
    pub fn backward(&self, loss: Var) -> Result<GradMap> {
        if loss.shape() != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a 1x1 loss, got {}x{}",
                loss.rows, loss.cols
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss.id.0).map(|_| None).collect();
        grads[loss.id.0] = Some(Tensor::filled(1, 1, 1.0));

        for idx in (0..=loss.id.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let val = |id: NodeId| &self.nodes[id.0].value;
            let send = |id: NodeId, contrib: Tensor, grads: &mut Vec<Option<Tensor>>| {
                if !self.nodes[id.0].needs_grad {
                    return;
                }
                match &mut grads[id.0] {
                    Some(acc) => acc.add_assign(&contrib),
                    slot @ None => *slot = Some(contrib),
                }
            };
            match &node.op {
                Op::Leaf => {
                    // Leaves keep their gradient for collection below.
                    grads[idx] = Some(g);
                }
                Op::MatMul(a, b) => {
                    if self.nodes[a.0].needs_grad {
                        send(*a, kernels::matmul_nt(&g, val(*b)), &mut grads);
                    }
                    if self.nodes[b.0].needs_grad {
                        send(*b, kernels::matmul_tn(val(*a), &g), &mut grads);
                    }
                }
                Op::AddRow(a, row) => {
                    if self.nodes[row.0].needs_grad {
                        send(*row, kernels::sum_rows(&g), &mut grads);
                    }
                    send(*a, g, &mut grads);
                }
                Op::Add(a, b) => {
                    send(*b, g.clone(), &mut grads);
                    send(*a, g, &mut grads);
                }
                Op::Mul(a, b) => {
                    send(*a, g.zip_map(val(*b), |x, y| x * y), &mut grads);
                    send(*b, g.zip_map(val(*a), |x, y| x * y), &mut grads);
                }
                Op::Scale(a, factor) => {
                    let f = *factor;
                    send(*a, g.map(|x| x * f), &mut grads);
                }
                Op::Act(a, Activation::Relu) => {
                    let contrib = g.zip_map(val(*a), |gv, x| if x > 0.0 { gv } else { 0.0 });
                    send(*a, contrib, &mut grads);
                }
                Op::Act(a, Activation::Sigmoid) => {
                    let contrib = g.zip_map(&node.value, |gv, s| gv * s * (1.0 - s));
                    send(*a, contrib, &mut grads);
                }
                Op::L2Rows(a, norms) => {
                    // d(x/|x|) = (g - y (y . g)) / |x|
                    let y = &node.value;
                    let cols = y.cols();
                    let mut out = vec![0.0; y.len()];
                    for (r, &n) in norms.iter().enumerate() {
                        let yr = y.row(r);
                        let gr = g.row(r);
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for c in 0..cols {
                            out[r * cols + c] = (gr[c] - yr[c] * dot) / n;
                        }
                    }
                    send(*a, Tensor::from_raw(out, y.rows(), cols), &mut grads);
                }
                Op::Sum(a) => {
                    let (r, c) = val(*a).shape();
                    send(*a, Tensor::filled(r, c, g.get(0, 0)), &mut grads);
                }
                Op::Custom(inputs, f) => {
                    let values: Vec<&Tensor> = inputs.iter().map(|id| val(*id)).collect();
                    let contribs = f.backward(&values, &node.value, &g);
                    debug_assert_eq!(contribs.len(), inputs.len(), "{}", f.name());
                    for (id, contrib) in inputs.iter().zip(contribs) {
                        debug_assert_eq!(contrib.shape(), val(*id).shape(), "{}", f.name());
                        send(*id, contrib, &mut grads);
                    }
                }
            }
        }

        let mut out = GradMap::default();
        for (idx, node) in self.nodes.iter().enumerate().take(loss.id.0 + 1) {
            if node.trainable {
                let (r, c) = node.value.shape();
                let g = grads[idx].take().unwrap_or_else(|| Tensor::zeros(r, c));
                out.grads.insert(NodeId(idx), g);
            }
        }
        // Parameters recorded after the loss cannot influence it.
        for (idx, node) in self.nodes.iter().enumerate().skip(loss.id.0 + 1) {
            if node.trainable {
                let (r, c) = node.value.shape();
                out.grads.insert(NodeId(idx), Tensor::zeros(r, c));
            }
        }
        Ok(out)
    }
}

/// Row-normalizes `a`, returning the normalized matrix and the original norms.
pub fn l2_normalize(a: &Tensor) -> Result<(Tensor, Vec<f64>)> {
    let mut out = a.clone();
    let cols = a.cols();
    let mut norms = Vec::with_capacity(a.rows());
    for r in 0..a.rows() {
        let row = &mut out.data_mut()[r * cols..(r + 1) * cols];
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= NORM_EPS {
            return Err(Error::DegenerateRow { row: r, norm });
        }
        for v in row.iter_mut() {
            *v /= norm;
        }
        norms.push(norm);
    }
    Ok((out, norms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(values: &[f64], shape: (usize, usize)) -> Tensor {
        Tensor::from_vec(values.to_vec(), shape).unwrap()
    }

    #[test]
    fn activation_values() {
        let mut tape = Tape::new();
        let x = tape.constant(t(&[-1.0, 0.0, 2.0], (1, 3)));
        let r = tape.activation(x, Activation::Relu);
        assert_eq!(tape.value(r).data(), &[0.0, 0.0, 2.0]);

        let x = tape.constant(t(&[0.0, 3f64.ln()], (1, 2)));
        let s = tape.activation(x, Activation::Sigmoid);
        assert_eq!(tape.value(s).get(0, 0), 0.5);
        assert!((tape.value(s).get(0, 1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn normalize_rows() {
        let mut tape = Tape::new();
        let x = tape.constant(t(&[3.0, 4.0], (1, 2)));
        let y = tape.l2_normalize_rows(x).unwrap();
        let v = tape.value(y);
        assert!((v.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((v.get(0, 1) - 0.8).abs() < 1e-15);

        let unit = tape.constant(t(&[0.0, 1.0], (1, 2)));
        let y = tape.l2_normalize_rows(unit).unwrap();
        assert_eq!(tape.value(y).data(), &[0.0, 1.0]);

        let zero = tape.constant(t(&[0.0, 0.0], (1, 2)));
        assert!(matches!(
            tape.l2_normalize_rows(zero),
            Err(Error::DegenerateRow { row: 0, .. })
        ));
    }

    #[test]
    fn sum_gradient_is_ones() {
        let mut tape = Tape::new();
        let w = tape.param(t(&[1.0, -2.0, 3.0, 0.5, 0.0, 9.0], (2, 3)));
        let loss = tape.sum(w);
        let grads = tape.backward(loss).unwrap();
        let g = grads.get(&w).unwrap();
        assert_eq!(g.shape(), (2, 3));
        assert!(g.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn half_square_gradient_is_identity() {
        let values = [0.3, -1.2, 2.5, 0.0];
        let mut tape = Tape::new();
        let w = tape.param(t(&values, (2, 2)));
        let sq = tape.mul(w, w).unwrap();
        let s = tape.sum(sq);
        let loss = tape.scale(s, 0.5);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(&w).unwrap().data(), &values);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut tape = Tape::new();
        let w = tape.param(Tensor::zeros(2, 2));
        assert!(matches!(tape.backward(w), Err(Error::Contract(_))));
    }

    #[test]
    fn unused_params_get_zero_gradients() {
        let mut tape = Tape::new();
        let used = tape.param(t(&[1.0, 2.0], (1, 2)));
        let unused = tape.param(t(&[5.0], (1, 1)));
        let loss = tape.sum(used);
        let late = tape.param(Tensor::zeros(3, 1));
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.len(), 3);
        assert_eq!(grads.get(&unused).unwrap().data(), &[0.0]);
        assert_eq!(grads.get(&late).unwrap().shape(), (3, 1));
    }

    #[test]
    fn shared_subexpression_accumulates() {
        // loss = sum(w) + sum(w) -> gradient 2
        let mut tape = Tape::new();
        let w = tape.param(t(&[1.0, 2.0], (1, 2)));
        let d = tape.add(w, w).unwrap();
        let loss = tape.sum(d);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(&w).unwrap().data(), &[2.0, 2.0]);
    }
}
