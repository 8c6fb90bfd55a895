//! Minimal trainable neural machinery: dense layers, dropout, softmax
//! cross-entropy, Adam and a mini-batch training loop.
//!
//! Everything is generic over [`Real`] so that gradient checks run in
//! `f64` while production training uses `f32`.

pub mod adam;
pub mod checkpoint;
pub mod loss;
pub mod mlp;
pub mod train;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{Array2, ArrayView2, Ix2, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamState};
pub use loss::{batch_softmax_ce, softmax, softmax_ce_loss};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use loss::argmax;
pub use mlp::{Activation, Dense, Mlp, MlpCache, MlpGrads};
pub use train::{train_epochs, Dataset, EpochStats, TrainingConfig};

/// Floating-point element type of a network.
pub trait Real:
    Float + FromPrimitive + LinalgScalar + ScalarOperand + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + LinalgScalar + ScalarOperand + Sum + Debug + Display + Send + Sync + 'static
{
}

/// How dropout behaves during a forward pass.
pub enum Mode<'a, T> {
    /// No dropout and no randomness.
    Eval,
    /// Fresh masks drawn from the generator.
    Train(&'a mut ChaCha8Rng),
    /// Masks taken in order from a previous pass, for exact replays.
    Replay { masks: &'a [Array2<T>], next: usize },
}

impl<'a, T: Real> Mode<'a, T> {
    pub fn replay(masks: &'a [Array2<T>]) -> Self {
        Mode::Replay { masks, next: 0 }
    }

    pub fn is_training(&self) -> bool {
        !matches!(self, Mode::Eval)
    }

    pub(crate) fn dropout_mask(&mut self, shape: Ix2, rate: f64) -> Result<Option<Array2<T>>> {
        let (rows, cols) = (shape[0], shape[1]);
        match self {
            Mode::Eval => Ok(None),
            Mode::Train(rng) => Ok(Some(mlp::sample_mask((rows, cols), rate, rng))),
            Mode::Replay { masks, next } => {
                let mask = masks
                    .get(*next)
                    .ok_or_else(|| Error::ShapeMismatch("replay ran out of dropout masks".to_owned()))?;
                if mask.dim() != (rows, cols) {
                    return Err(Error::ShapeMismatch("replayed dropout mask has the wrong shape".to_owned()));
                }
                *next += 1;
                Ok(Some(mask.clone()))
            }
        }
    }
}

/// Flat views over a gradient set, in the same order as
/// [`Network::params_mut`].
pub trait GradientSet<T> {
    fn slices(&self) -> Vec<&[T]>;
}

/// A trainable classifier over one or more input matrices (one row per
/// sample) producing one row of logits per sample.
pub trait Network<T: Real> {
    type Cache;
    type Grads: GradientSet<T>;

    /// Number of input matrices the network consumes.
    fn arity(&self) -> usize;

    fn forward(&self, inputs: &[ArrayView2<'_, T>], mode: &mut Mode<'_, T>) -> Result<(Array2<T>, Self::Cache)>;

    /// Gradients of `sum(grad_logits * logits)` with respect to every
    /// parameter.
    fn backward(&self, cache: &Self::Cache, grad_logits: ArrayView2<'_, T>) -> Result<Self::Grads>;

    fn params(&self) -> Vec<&[T]>;

    /// Mutable parameter views. Outstanding caches become stale.
    fn params_mut(&mut self) -> Vec<&mut [T]>;
}
