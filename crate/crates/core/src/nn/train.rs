use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{adam_step, batch_softmax_ce, AdamState, GradientSet, Mode, Network, Real};
use crate::error::{Error, Result};
use crate::seed;

/// Optimizer and loop settings. Defaults: Adam with learning rate 1e-4,
/// batches of 7, the canonical moment decay rates and epsilon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 1e-4,
            batch_size: 7,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 30,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".to_owned());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam decay rates must lie in [0, 1)".to_owned());
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive".to_owned());
        }
        Ok(())
    }
}

/// Samples as one matrix per network input plus a class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub inputs: Vec<Array2<T>>,
    pub labels: Vec<usize>,
}

impl<T: Real> Dataset<T> {
    pub fn new(inputs: Vec<Array2<T>>, labels: Vec<usize>) -> Result<Self> {
        if inputs.iter().any(|x| x.nrows() != labels.len()) {
            return Err(Error::ShapeMismatch("input rows differ from label count".to_owned()));
        }
        Ok(Dataset { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn views(&self) -> Vec<ArrayView2<'_, T>> {
        self.inputs.iter().map(|x| x.view()).collect()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset<T> {
        Dataset {
            inputs: self.inputs.iter().map(|x| x.select(Axis(0), rows)).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// Mean training-mode cross-entropy over the epoch.
    pub loss: f64,
    /// Percentage of training samples classified correctly in training mode.
    pub accuracy: f64,
}

/// Mini-batch training with Adam. Shuffling and dropout draw from one
/// generator seeded by `cfg.seed`, so a run is reproducible bit for bit.
pub fn train_epochs<T: Real, N: Network<T>>(net: &mut N, data: &Dataset<T>, cfg: &TrainingConfig) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    if cfg.epochs == 0 {
        return Ok(Vec::new());
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.inputs.len() != net.arity() {
        return Err(Error::ShapeMismatch(format!(
            "network takes {} inputs, dataset has {}",
            net.arity(),
            data.inputs.len()
        )));
    }
    let mut rng = seed::rng(seed::derive(cfg.seed, "train", 0));
    let mut state = AdamState::new();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for rows in order.chunks(cfg.batch_size) {
            let batch = data.select(rows);
            let (logits, cache) = net.forward(&batch.views(), &mut Mode::Train(&mut rng))?;
            let (loss, grad, hits) = batch_softmax_ce(logits.view(), &batch.labels)?;
            loss_sum += loss * rows.len() as f64;
            correct += hits;
            let grads = net.backward(&cache, grad.view())?;
            let g = grads.slices();
            adam_step(&mut net.params_mut(), &g, &mut state, cfg)?;
        }
        history.push(EpochStats {
            loss: loss_sum / data.len() as f64,
            accuracy: 100.0 * correct as f64 / data.len() as f64,
        });
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Mlp;
    use rand::Rng;

    /// Two Gaussian blobs separated along the first axis by a wide margin.
    fn separable(n: usize, seed: u64) -> Dataset<f32> {
        let mut rng = seed::rng(seed);
        let mut x = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let sign = if label == 1 { 1.0 } else { -1.0 };
            x[[i, 0]] = sign * rng.gen_range(1.0f32..3.0);
            x[[i, 1]] = rng.gen_range(-2.0f32..2.0);
            labels.push(label);
        }
        Dataset::new(vec![x], labels).unwrap()
    }

    /// Brute-force separability certificate: some direction on a fine
    /// angular grid puts every sample on the right side of a threshold.
    fn linearly_separable(data: &Dataset<f32>) -> bool {
        let x = &data.inputs[0];
        (0..3600).any(|k| {
            let a = (k as f32 / 10.0).to_radians();
            let proj: Vec<f32> = x.rows().into_iter().map(|r| a.cos() * r[0] + a.sin() * r[1]).collect();
            let max0 = proj.iter().zip(&data.labels).filter(|(_, &l)| l == 0).map(|(p, _)| *p).fold(f32::MIN, f32::max);
            let min1 = proj.iter().zip(&data.labels).filter(|(_, &l)| l == 1).map(|(p, _)| *p).fold(f32::MAX, f32::min);
            max0 < min1
        })
    }

    fn cfg(epochs: usize) -> TrainingConfig {
        TrainingConfig {
            learning_rate: 0.01,
            epochs,
            seed: 5,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn zero_epochs_changes_nothing() {
        let mut net = Mlp::<f32>::new(&[2, 4, 2], 0.5, &mut seed::rng(1)).unwrap();
        let before = net.clone();
        let history = train_epochs(&mut net, &separable(20, 1), &cfg(0)).unwrap();
        assert!(history.is_empty());
        assert_eq!(net.layers(), before.layers());
    }

    #[test]
    fn empty_dataset_rejected() {
        let mut net = Mlp::<f32>::new(&[2, 2], 0.0, &mut seed::rng(1)).unwrap();
        let empty = Dataset::new(vec![Array2::zeros((0, 2))], vec![]).unwrap();
        assert!(matches!(train_epochs(&mut net, &empty, &cfg(1)), Err(Error::EmptyDataset)));
    }

    #[test]
    fn learns_separable_toy_problem() {
        let data = separable(100, 2);
        assert!(linearly_separable(&data));
        let mut net = Mlp::<f32>::new(&[2, 8, 2], 0.0, &mut seed::rng(3)).unwrap();
        let history = train_epochs(&mut net, &data, &cfg(50)).unwrap();
        assert_eq!(history.len(), 50);
        assert_eq!(history.last().unwrap().accuracy, 100.0);
        assert!(history[19].loss < history[0].loss);
    }

    #[test]
    fn same_seed_same_parameters() {
        let data = separable(40, 4);
        let run = || {
            let mut net = Mlp::<f32>::new(&[2, 8, 8, 2], 0.5, &mut seed::rng(9)).unwrap();
            train_epochs(&mut net, &data, &cfg(5)).unwrap();
            net
        };
        let (a, b) = (run(), run());
        let bits = |n: &Mlp<f32>| -> Vec<u32> { n.param_slices().concat().iter().map(|v| v.to_bits()).collect() };
        assert_eq!(bits(&a), bits(&b));
    }
}
