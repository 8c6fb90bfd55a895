use ndarray::{Array2, ArrayView2};

use super::Real;
use crate::error::{Error, Result};

/// Numerically stable softmax.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Categorical cross-entropy of softmax(logits) against a one-hot target,
/// with its gradient `softmax(logits) - one_hot`.
pub fn softmax_ce_loss<T: Real>(logits: &[T], one_hot: &[T]) -> Result<(T, Vec<T>)> {
    if logits.len() != one_hot.len() || logits.is_empty() {
        return Err(Error::InvalidOneHot);
    }
    let ones = one_hot.iter().filter(|&&v| v == T::one()).count();
    if ones != 1 || one_hot.iter().any(|&v| v != T::one() && v != T::zero()) {
        return Err(Error::InvalidOneHot);
    }
    let target = one_hot.iter().position(|&v| v == T::one()).expect("checked above");
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let log_sum = max + logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
    let loss = log_sum - logits[target];
    let probs = softmax(logits);
    let grad = probs.iter().zip(one_hot).map(|(&p, &y)| p - y).collect();
    Ok((loss, grad))
}

/// Mean cross-entropy over a batch of logits with class-index labels.
/// Returns the mean loss, the gradient of the mean and the number of rows
/// whose argmax equals the label.
pub fn batch_softmax_ce<T: Real>(logits: ArrayView2<'_, T>, labels: &[usize]) -> Result<(f64, Array2<T>, usize)> {
    let (rows, k) = logits.dim();
    if rows != labels.len() || rows == 0 {
        return Err(Error::ShapeMismatch(format!("{rows} logit rows for {} labels", labels.len())));
    }
    let scale = T::from_usize(rows).unwrap().recip();
    let mut grad = Array2::zeros((rows, k));
    let mut total = 0.0;
    let mut correct = 0;
    let mut one_hot = vec![T::zero(); k];
    for (i, row) in logits.rows().into_iter().enumerate() {
        let label = labels[i];
        if label >= k {
            return Err(Error::InvalidOneHot);
        }
        one_hot.fill(T::zero());
        one_hot[label] = T::one();
        let z = row.to_vec();
        let (loss, g) = softmax_ce_loss(&z, &one_hot)?;
        total += loss.to_f64().unwrap();
        for (dst, v) in grad.row_mut(i).iter_mut().zip(g) {
            *dst = v * scale;
        }
        if argmax(&z) == label {
            correct += 1;
        }
    }
    Ok((total / rows as f64, grad, correct))
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let (loss, grad) = softmax_ce_loss(&[0.0f64, 0.0], &[1.0, 0.0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.5, 0.5]);
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let (loss, grad) = softmax_ce_loss(&[1000.0f64, -1000.0], &[1.0, 0.0]).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
        let (loss, _) = softmax_ce_loss(&[1000.0f64, -1000.0], &[0.0, 1.0]).unwrap();
        assert!((loss - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_targets() {
        assert!(matches!(softmax_ce_loss(&[0.0f64, 0.0], &[1.0, 1.0]), Err(Error::InvalidOneHot)));
        assert!(matches!(softmax_ce_loss(&[0.0f64, 0.0], &[0.5, 0.5]), Err(Error::InvalidOneHot)));
        assert!(matches!(softmax_ce_loss(&[0.0f64, 0.0], &[1.0]), Err(Error::InvalidOneHot)));
    }

    #[test]
    fn gradient_matches_central_differences() {
        use rand::Rng;
        let mut rng = crate::seed::rng(17);
        for _ in 0..50 {
            let logits: Vec<f64> = (0..2).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let target = rng.gen_range(0..2);
            let mut one_hot = vec![0.0; 2];
            one_hot[target] = 1.0;
            let (_, grad) = softmax_ce_loss(&logits, &one_hot).unwrap();
            let h = 1e-5;
            for k in 0..2 {
                let mut up = logits.clone();
                up[k] += h;
                let mut down = logits.clone();
                down[k] -= h;
                let fd = (softmax_ce_loss(&up, &one_hot).unwrap().0 - softmax_ce_loss(&down, &one_hot).unwrap().0)
                    / (2.0 * h);
                let rel = (fd - grad[k]).abs() / (fd.abs() + grad[k].abs()).max(1e-12);
                assert!(rel < 1e-6, "rel error {rel}");
            }
        }
    }

    #[test]
    fn softmax_normalizes() {
        let p = softmax(&[3.0f64, -2.0, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.5f64, 0.5]), 0);
        assert_eq!(argmax(&[0.2f64, 0.8]), 1);
    }
}
