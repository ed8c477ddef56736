//! Contrastive representation learning with active subset selection on
//! synthetic, imbalanced patch data.
//!
//! The crate is layered bottom-up: [`ndgrad`] (tensors, reverse-mode
//! gradients, Adam), [`datagen`] (synthetic patches, augmentation, pool
//! splits), [`simclr`] (encoder, projection head, contrastive loss),
//! [`proxy`] (linear probe), [`sampler`] (selection strategies), [`active`]
//! (the loop and the benchmark) and [`eval`] (metrics and reductions).

pub mod active;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod ndgrad;
pub mod proxy;
pub mod record;
pub mod sampler;
pub mod seed;
pub mod simclr;

pub use error::{Error, Result};
