//! Dense multilayer perceptron with ReLU hidden layers and inverted dropout.

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{GradientSet, Mode, Network, Real};
use crate::error::{Error, Result};

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

fn fresh_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// `y = act(x W^T + b)` with `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

impl<T: Real> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Dense {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    /// He-normal weights for ReLU layers, Glorot-uniform for linear ones;
    /// zero bias either way.
    pub fn init(inputs: usize, outputs: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let weights = match activation {
            Activation::Relu => {
                let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("positive std");
                Array2::from_shape_simple_fn((outputs, inputs), || T::from_f64(normal.sample(rng)).unwrap())
            }
            Activation::Identity => {
                let limit = (6.0 / (inputs + outputs) as f64).sqrt();
                let uniform = Uniform::new_inclusive(-limit, limit);
                Array2::from_shape_simple_fn((outputs, inputs), || T::from_f64(uniform.sample(rng)).unwrap())
            }
        };
        Dense {
            weights,
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Dense<T>>,
    /// Dropout rate applied after each layer's activation.
    dropout: Vec<f64>,
    stamp: u64,
}

/// Activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    inputs: Vec<Array2<T>>,
    pre_activations: Vec<Array2<T>>,
    masks: Vec<Option<Array2<T>>>,
    stamp: u64,
}

impl<T: Clone> MlpCache<T> {
    /// Dropout masks in layer order.
    pub fn masks(&self) -> impl Iterator<Item = &Array2<T>> {
        self.masks.iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<T> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

impl<T: Real> GradientSet<T> for MlpGrads<T> {
    fn slices(&self) -> Vec<&[T]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| {
                [
                    w.as_slice().expect("standard layout"),
                    b.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }
}

impl<T: Real> Mlp<T> {
    /// `sizes = [input, hidden.., output]`; hidden layers use ReLU followed
    /// by dropout at `dropout_rate`, the output layer is linear.
    pub fn new(sizes: &[usize], dropout_rate: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer sizes {sizes:?}")));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidConfig(format!("dropout rate {dropout_rate} not in [0, 1)")));
        }
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 < n { Activation::Relu } else { Activation::Identity };
                Dense::init(sizes[i], sizes[i + 1], act, rng)
            })
            .collect();
        let dropout = (0..n).map(|i| if i + 1 < n { dropout_rate } else { 0.0 }).collect();
        Ok(Mlp {
            layers,
            dropout,
            stamp: fresh_stamp(),
        })
    }

    pub fn from_layers(layers: Vec<Dense<T>>, dropout: Vec<f64>) -> Result<Self> {
        if layers.is_empty() || layers.len() != dropout.len() {
            return Err(Error::InvalidConfig("layer and dropout lists must match".to_owned()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::ShapeMismatch(format!(
                    "layer emits {} values but next layer takes {}",
                    pair[0].outputs(),
                    pair[1].inputs()
                )));
            }
        }
        for l in &layers {
            if l.bias.len() != l.outputs() {
                return Err(Error::ShapeMismatch("bias length differs from layer width".to_owned()));
            }
        }
        if dropout.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::InvalidConfig("dropout rate not in [0, 1)".to_owned()));
        }
        Ok(Mlp {
            layers,
            dropout,
            stamp: fresh_stamp(),
        })
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    /// Mutable layer access; invalidates outstanding caches.
    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        self.stamp = fresh_stamp();
        &mut self.layers
    }

    pub fn dropout_rates(&self) -> &[f64] {
        &self.dropout
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn zero_grads(&self) -> MlpGrads<T> {
        MlpGrads {
            weights: self.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: self.layers.iter().map(|l| Array1::zeros(l.bias.len())).collect(),
        }
    }

    pub fn forward(&self, x: ArrayView2<'_, T>, mode: &mut Mode<'_, T>) -> Result<(Array2<T>, MlpCache<T>)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "network takes {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let n = self.layers.len();
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(n),
            pre_activations: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
            stamp: self.stamp,
        };
        let mut a = x.to_owned();
        for (layer, &rate) in self.layers.iter().zip(&self.dropout) {
            let z = a.dot(&layer.weights.t()) + &layer.bias;
            let mut out = match layer.activation {
                Activation::Identity => z.clone(),
                Activation::Relu => z.mapv(|v| if v > T::zero() { v } else { T::zero() }),
            };
            let mask = if rate > 0.0 {
                mode.dropout_mask(out.raw_dim(), rate)?
            } else {
                None
            };
            if let Some(m) = &mask {
                out = out * m;
            }
            cache.inputs.push(std::mem::replace(&mut a, out));
            cache.pre_activations.push(z);
            cache.masks.push(mask);
        }
        Ok((a, cache))
    }

    /// Gradients of the summed loss. Also returns the gradient with respect
    /// to the input when `input_grad` is set.
    pub fn backward(
        &self,
        cache: &MlpCache<T>,
        grad_out: ArrayView2<'_, T>,
        input_grad: bool,
    ) -> Result<(MlpGrads<T>, Option<Array2<T>>)> {
        if cache.stamp != self.stamp {
            return Err(Error::StaleCache);
        }
        if grad_out.ncols() != self.output_dim() || grad_out.nrows() != cache.inputs[0].nrows() {
            return Err(Error::ShapeMismatch("gradient does not match forward output".to_owned()));
        }
        let n = self.layers.len();
        let mut grads = self.zero_grads();
        let mut g = grad_out.to_owned();
        for l in (0..n).rev() {
            if let Some(mask) = &cache.masks[l] {
                g = g * mask;
            }
            if self.layers[l].activation == Activation::Relu {
                g.zip_mut_with(&cache.pre_activations[l], |gv, &z| {
                    if z <= T::zero() {
                        *gv = T::zero();
                    }
                });
            }
            grads.weights[l] = g.t().dot(&cache.inputs[l]).as_standard_layout().into_owned();
            grads.biases[l] = g.sum_axis(Axis(0));
            if l > 0 || input_grad {
                g = g.dot(&self.layers[l].weights);
            }
        }
        Ok((grads, input_grad.then_some(g)))
    }

    pub fn param_slices(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weights.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.stamp = fresh_stamp();
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weights.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    /// Convert parameters to another precision.
    pub fn cast<U: Real>(&self) -> Mlp<U> {
        let conv = |v: &T| U::from_f64(v.to_f64().unwrap()).unwrap();
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weights: l.weights.map(conv),
                    bias: l.bias.map(conv),
                    activation: l.activation,
                })
                .collect(),
            dropout: self.dropout.clone(),
            stamp: fresh_stamp(),
        }
    }
}

impl<T: Real> Network<T> for Mlp<T> {
    type Cache = MlpCache<T>;
    type Grads = MlpGrads<T>;

    fn arity(&self) -> usize {
        1
    }

    fn forward(&self, inputs: &[ArrayView2<'_, T>], mode: &mut Mode<'_, T>) -> Result<(Array2<T>, Self::Cache)> {
        match inputs {
            [x] => Mlp::forward(self, x.view(), mode),
            _ => Err(Error::ShapeMismatch(format!("expected 1 input, got {}", inputs.len()))),
        }
    }

    fn backward(&self, cache: &Self::Cache, grad_logits: ArrayView2<'_, T>) -> Result<Self::Grads> {
        Mlp::backward(self, cache, grad_logits, false).map(|(g, _)| g)
    }

    fn params(&self) -> Vec<&[T]> {
        self.param_slices()
    }

    fn params_mut(&mut self) -> Vec<&mut [T]> {
        self.param_slices_mut()
    }
}

/// Inverted-dropout keep mask: kept units are scaled by `1 / (1 - rate)`.
pub(crate) fn sample_mask<T: Real>(shape: (usize, usize), rate: f64, rng: &mut ChaCha8Rng) -> Array2<T> {
    let keep = 1.0 - rate;
    let scale = T::from_f64(1.0 / keep).unwrap();
    Array2::from_shape_simple_fn(shape, || if rng.gen::<f64>() < keep { scale } else { T::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use ndarray::array;

    #[test]
    fn identity_layer_passes_input_through() {
        let mut layer = Dense::<f64>::zeros(3, 3, Activation::Identity);
        layer.weights = Array2::eye(3);
        let net = Mlp::from_layers(vec![layer], vec![0.0]).unwrap();
        let x = array![[1.0, -2.0, 3.5]];
        let (y, _) = net.forward(x.view(), &mut Mode::Eval).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn relu_of_negative_is_zero() {
        let mut layer = Dense::<f64>::zeros(2, 2, Activation::Relu);
        layer.weights = Array2::eye(2);
        let net = Mlp::from_layers(vec![layer], vec![0.0]).unwrap();
        let (y, _) = net.forward(array![[-1.0, -0.5]].view(), &mut Mode::Eval).unwrap();
        assert_eq!(y, array![[0.0, 0.0]]);
    }

    #[test]
    fn eval_mode_ignores_dropout() {
        let mut rng = seed::rng(1);
        let with = Mlp::<f64>::new(&[4, 8, 2], 0.5, &mut rng).unwrap();
        let mut without = with.clone();
        without.dropout = vec![0.0; 2];
        let x = array![[0.1, 0.2, -0.3, 0.4]];
        let a = with.forward(x.view(), &mut Mode::Eval).unwrap().0;
        let b = without.forward(x.view(), &mut Mode::Eval).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn zero_grad_gives_zero_gradients() {
        let mut rng = seed::rng(2);
        let net = Mlp::<f64>::new(&[3, 5, 2], 0.5, &mut rng).unwrap();
        let x = array![[0.3, -0.1, 0.7], [0.0, 1.0, -1.0]];
        let (_, cache) = net.forward(x.view(), &mut Mode::Train(&mut rng)).unwrap();
        let (g, gi) = net.backward(&cache, Array2::zeros((2, 2)).view(), true).unwrap();
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert!(gi.unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        let mut rng = seed::rng(3);
        let layer = Dense::<f64>::init(3, 2, Activation::Identity, &mut rng);
        let net = Mlp::from_layers(vec![layer], vec![0.0]).unwrap();
        let x = array![[0.5, -1.5, 2.0]];
        let g = array![[0.25, -0.75]];
        let (_, cache) = net.forward(x.view(), &mut Mode::Eval).unwrap();
        let (grads, _) = net.backward(&cache, g.view(), false).unwrap();
        let outer = Array2::from_shape_fn((2, 3), |(i, j)| g[[0, i]] * x[[0, j]]);
        assert_eq!(grads.weights[0], outer);
        assert_eq!(grads.biases[0], array![0.25, -0.75]);
    }

    #[test]
    fn stale_cache_rejected() {
        let mut rng = seed::rng(4);
        let mut net = Mlp::<f64>::new(&[2, 2], 0.0, &mut rng).unwrap();
        let (_, cache) = net.forward(array![[1.0, 2.0]].view(), &mut Mode::Eval).unwrap();
        net.param_slices_mut()[0][0] += 1.0;
        assert!(matches!(
            net.backward(&cache, array![[1.0, 0.0]].view(), false),
            Err(Error::StaleCache)
        ));
        let other = Mlp::<f64>::new(&[2, 2], 0.0, &mut rng).unwrap();
        let (_, cache) = other.forward(array![[1.0, 2.0]].view(), &mut Mode::Eval).unwrap();
        assert!(matches!(
            net.backward(&cache, array![[1.0, 0.0]].view(), false),
            Err(Error::StaleCache)
        ));
    }

    #[test]
    fn shape_mismatch_on_wrong_input() {
        let mut rng = seed::rng(5);
        let net = Mlp::<f32>::new(&[3, 2], 0.0, &mut rng).unwrap();
        assert!(matches!(
            net.forward(Array2::zeros((1, 4)).view(), &mut Mode::Eval),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn dropout_mask_scales_kept_units() {
        let mut rng = seed::rng(6);
        let m: Array2<f64> = sample_mask((100, 100), 0.5, &mut rng);
        assert!(m.iter().all(|&v| v == 0.0 || v == 2.0));
        let kept = m.iter().filter(|&&v| v > 0.0).count();
        assert!((4500..5500).contains(&kept));
    }
}
