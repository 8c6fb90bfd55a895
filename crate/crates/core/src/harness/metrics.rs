use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{FusionHead, CLASS_COUNT};
use crate::nn::{self, Mode, Real};

/// `counts[true][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[usize; CLASS_COUNT]; CLASS_COUNT],
}

impl Confusion {
    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..CLASS_COUNT).map(|k| self.counts[k][k]).sum()
    }

    pub fn merge(&mut self, other: &Confusion) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Percentage of correctly classified clips.
    pub accuracy: f64,
    /// Mean categorical cross-entropy.
    pub loss: f64,
    pub confusion: Confusion,
}

pub fn accuracy_percent(correct: usize, total: usize) -> f64 {
    100.0 * correct as f64 / total as f64
}

/// Score class probabilities against labels. Ties in a probability row
/// count as a non-violent prediction.
pub fn evaluate_probabilities(probs: &[[f64; CLASS_COUNT]], labels: &[usize]) -> Result<Evaluation> {
    if probs.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    if probs.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!("{} predictions for {} labels", probs.len(), labels.len())));
    }
    let mut confusion = Confusion::default();
    let mut loss = 0.0;
    for (p, &y) in probs.iter().zip(labels) {
        if y >= CLASS_COUNT {
            return Err(Error::InvalidOneHot);
        }
        confusion.record(y, nn::argmax(p));
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
    }
    Ok(Evaluation {
        accuracy: accuracy_percent(confusion.correct(), confusion.total()),
        loss: loss / probs.len() as f64,
        confusion,
    })
}

/// Evaluation-mode accuracy, loss and confusion of a head on a labelled set.
pub fn evaluate<T: Real>(head: &FusionHead<T>, a: ArrayView2<'_, T>, v: ArrayView2<'_, T>, labels: &[usize]) -> Result<Evaluation> {
    if labels.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let (logits, _) = head.logits(a, v, &mut Mode::Eval)?;
    let (loss, _, _) = nn::batch_softmax_ce(logits.view(), labels)?;
    let mut confusion = Confusion::default();
    for (row, &y) in logits.rows().into_iter().zip(labels) {
        confusion.record(y, nn::argmax(&row.to_vec()));
    }
    Ok(Evaluation {
        accuracy: accuracy_percent(confusion.correct(), confusion.total()),
        loss,
        confusion,
    })
}
