use avfusion::fusion::{FusionHead, HeadConfig, Strategy};
use avfusion::nn::{batch_softmax_ce, GradientSet, Mode, Network};
use avfusion::seed;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn widths(rng: &mut ChaCha8Rng, max_layers: usize) -> Vec<usize> {
    (0..rng.gen_range(0..=max_layers)).map(|_| rng.gen_range(2..=6)).collect()
}

fn check_head(strategy: Strategy, case: u64) {
    let mut rng = seed::rng(seed::derive(9, strategy.as_str(), case));
    let (da, dv, n) = (rng.gen_range(1..=4), rng.gen_range(1..=5), rng.gen_range(1..=4));
    let cfg = HeadConfig {
        joint_hidden: widths(&mut rng, 2),
        branch_hidden: widths(&mut rng, 2),
        combiner_hidden: widths(&mut rng, 2),
        dropout: 0.4,
    };
    let mut head = FusionHead::<f64>::new(strategy, da, dv, &cfg, &mut rng).unwrap();
    for slice in head.params_mut() {
        slice.iter_mut().for_each(|p| *p += rng.gen_range(-0.1..0.1));
    }
    let a = Array2::from_shape_simple_fn((n, da), || rng.gen_range(-1.5..1.5));
    let v = Array2::from_shape_simple_fn((n, dv), || rng.gen_range(-1.5..1.5));
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();

    let (logits, cache) = head.forward(&[a.view(), v.view()], &mut Mode::Train(&mut rng)).unwrap();
    let masks = cache.masks();
    let (_, g, _) = batch_softmax_ce(logits.view(), &labels).unwrap();
    let grads = head.backward(&cache, g.view()).unwrap();
    let loss = |h: &FusionHead<f64>| {
        let (z, _) = h.forward(&[a.view(), v.view()], &mut Mode::replay(&masks)).unwrap();
        batch_softmax_ce(z.view(), &labels).unwrap().0
    };
    for (s, analytic) in grads.slices().iter().enumerate() {
        for (i, &an) in analytic.iter().enumerate() {
            let mut plus = head.clone();
            plus.params_mut()[s][i] += 1e-6;
            let mut minus = head.clone();
            minus.params_mut()[s][i] -= 1e-6;
            let num = (loss(&plus) - loss(&minus)) / 2e-6;
            assert!(
                (an - num).abs() <= 1e-7 + 1e-5 * an.abs().max(num.abs()),
                "{strategy} case {case}: slice {s}[{i}] analytic {an} numeric {num}"
            );
        }
    }
}

#[test]
fn every_strategy_matches_finite_differences() {
    for strategy in Strategy::ALL {
        for case in 0..12 {
            check_head(strategy, case);
        }
    }
}

#[test]
fn replay_reproduces_training_pass() {
    let mut rng = seed::rng(5);
    let head = FusionHead::<f64>::new(Strategy::Hybrid, 3, 4, &HeadConfig::default(), &mut rng).unwrap();
    let a = Array2::from_shape_simple_fn((6, 3), || rng.gen_range(-1.0..1.0));
    let v = Array2::from_shape_simple_fn((6, 4), || rng.gen_range(-1.0..1.0));
    let (z, cache) = head.forward(&[a.view(), v.view()], &mut Mode::Train(&mut rng)).unwrap();
    let masks = cache.masks();
    let (again, _) = head.forward(&[a.view(), v.view()], &mut Mode::replay(&masks)).unwrap();
    assert_eq!(z, again);
    let (eval, _) = head.forward(&[a.view(), v.view()], &mut Mode::Eval).unwrap();
    assert_ne!(z, eval);
}
