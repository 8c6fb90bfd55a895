use super::{Real, TrainingConfig};
use crate::error::{Error, Result};

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new() -> Self {
        AdamState {
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    fn ensure_shapes(&mut self, lens: &[usize]) -> Result<()> {
        if self.t == 0 && self.m.is_empty() {
            self.m = lens.iter().map(|&n| vec![T::zero(); n]).collect();
            self.v = lens.iter().map(|&n| vec![T::zero(); n]).collect();
        }
        let matches = self.m.len() == lens.len()
            && self.m.iter().zip(lens).all(|(b, &n)| b.len() == n)
            && self.v.iter().zip(lens).all(|(b, &n)| b.len() == n);
        if matches {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("optimizer state does not match parameters".to_owned()))
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step<T: Real>(
    params: &mut [&mut [T]],
    grads: &[&[T]],
    state: &mut AdamState<T>,
    cfg: &TrainingConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
        return Err(Error::ShapeMismatch("gradients do not match parameters".to_owned()));
    }
    let lens: Vec<usize> = params.iter().map(|p| p.len()).collect();
    state.ensure_shapes(&lens)?;
    state.t += 1;

    let c = |x: f64| T::from_f64(x).unwrap();
    let (b1, b2) = (c(cfg.beta1), c(cfg.beta2));
    let one = T::one();
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let correction1 = one - b1.powi(t);
    let correction2 = one - b2.powi(t);
    let lr = c(cfg.learning_rate);
    let eps = c(cfg.epsilon);

    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for j in 0..p.len() {
            let gj = g[j];
            m[j] = b1 * m[j] + (one - b1) * gj;
            v[j] = b2 * v[j] + (one - b2) * gj * gj;
            let m_hat = m[j] / correction1;
            let v_hat = v[j] / correction2;
            p[j] = p[j] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
