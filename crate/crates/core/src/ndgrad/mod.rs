//! Dense rank-2 arrays with tape-based reverse-mode differentiation and Adam.
//!
//! A [`Tape`] is built fresh for each forward pass. Parameters live outside the
//! tape as plain [`Tensor`]s; each step registers them with [`Tape::params`],
//! records the computation, calls [`Tape::backward`] on a `1×1` loss and hands
//! the resulting [`GradMap`] to [`AdamState::step`].
//!
//! All arithmetic is `f64` and single-threaded, so identical inputs give
//! bit-identical outputs.

mod adam;
mod gradcheck;
mod layers;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{check_gradients, GradCheck, GradCheckReport};
pub use layers::{glorot_uniform, Mlp};
pub use tape::{l2_normalize, Activation, Function, GradMap, NodeId, Tape, Var, NORM_EPS};
pub use tensor::Tensor;

pub(crate) use tensor::kernels;
