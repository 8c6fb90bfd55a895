use ndarray::{Array3, ArrayView3, ArrayViewMut3, Axis};
use rand_distr::{Distribution, Normal};

use super::{AugmentationRanges, AugmentationSpec, FlipAxis, OpList, VideoOp};
use crate::error::{Error, Result};
use crate::seed;
use crate::video::FrameStack;

/// Apply `spec` to every frame of `stack` with the default ranges.
pub fn augment_video(stack: &FrameStack, spec: &AugmentationSpec) -> Result<FrameStack> {
    augment_video_with(stack, spec, &AugmentationRanges::default())
}

pub fn augment_video_with(
    stack: &FrameStack,
    spec: &AugmentationSpec,
    ranges: &AugmentationRanges,
) -> Result<FrameStack> {
    let OpList::Video(ops) = &spec.ops else {
        return Err(Error::InvalidConfig("audio spec applied to video".to_owned()));
    };
    spec.validate(ranges)?;
    let mut out = stack.clone();
    for op in ops {
        // Noise draws one continuous stream across the stack; everything
        // else is the same per-frame function.
        let mut noise_rng = match *op {
            VideoOp::AdditiveNoise { seed: s, .. } => Some(seed::rng(seed::derive(spec.seed, "video-noise", s))),
            _ => None,
        };
        for mut frame in out.tensor.axis_iter_mut(Axis(0)) {
            let next = apply_op(frame.view(), op, noise_rng.as_mut());
            frame.assign(&next);
            clamp01(frame);
        }
    }
    Ok(out)
}

fn clamp01(mut frame: ArrayViewMut3<'_, f32>) {
    frame.mapv_inplace(|v| v.clamp(0.0, 1.0));
}

fn apply_op(frame: ArrayView3<'_, f32>, op: &VideoOp, rng: Option<&mut rand_chacha::ChaCha8Rng>) -> Array3<f32> {
    match *op {
        VideoOp::ColorJitter { gains } => {
            let mut out = frame.to_owned();
            for (c, g) in gains.iter().enumerate() {
                out.index_axis_mut(Axis(2), c).mapv_inplace(|v| v * g);
            }
            out
        }
        VideoOp::Rotation { degrees } => rotate(frame, degrees),
        VideoOp::AdditiveNoise { sigma, .. } => {
            let rng = rng.expect("noise rng");
            let normal = Normal::new(0.0f32, sigma).expect("sigma validated");
            frame.mapv(|v| v + normal.sample(rng))
        }
        VideoOp::Flip { axis } => {
            let mut out = frame.to_owned();
            match axis {
                FlipAxis::Horizontal => out.invert_axis(Axis(1)),
                FlipAxis::Vertical => out.invert_axis(Axis(0)),
            }
            out.as_standard_layout().to_owned()
        }
        VideoOp::GaussianBlur { kernel, sigma } => gaussian_blur(frame, kernel, sigma),
        VideoOp::MedianBlur { kernel } => median_blur(frame, kernel),
        VideoOp::BrightnessContrast { alpha, beta } => frame.mapv(|v| alpha * v + beta),
    }
}

/// Rotate counter-clockwise about the frame center with bilinear sampling;
/// samples falling outside the frame are black.
pub fn rotate(frame: ArrayView3<'_, f32>, degrees: f32) -> Array3<f32> {
    let (h, w, ch) = frame.dim();
    let theta = f64::from(degrees).to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let mut out = Array3::zeros((h, w, ch));
    for y in 0..h {
        for x in 0..w {
            // Inverse map, with y pointing down.
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let sx = cos * dx - sin * dy + cx;
            let sy = sin * dx + cos * dy + cy;
            if sx < 0.0 || sy < 0.0 || sx > (w - 1) as f64 || sy > (h - 1) as f64 {
                continue;
            }
            let x0 = sx.floor() as usize;
            let y0 = sy.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            let fx = (sx - x0 as f64) as f32;
            let fy = (sy - y0 as f64) as f32;
            for c in 0..ch {
                let top = (1.0 - fx) * frame[[y0, x0, c]] + fx * frame[[y0, x1, c]];
                let bottom = (1.0 - fx) * frame[[y1, x0, c]] + fx * frame[[y1, x1, c]];
                out[[y, x, c]] = (1.0 - fy) * top + fy * bottom;
            }
        }
    }
    out
}

fn gaussian_kernel(size: usize, sigma: f32) -> Vec<f32> {
    let half = (size / 2) as f32;
    let raw: Vec<f32> = (0..size)
        .map(|i| {
            let d = i as f32 - half;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f32 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(frame: ArrayView3<'_, f32>, size: usize, sigma: f32) -> Array3<f32> {
    let k = gaussian_kernel(size, sigma);
    let r = (size / 2) as isize;
    let (h, w, ch) = frame.dim();
    let clampi = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = Array3::<f32>::zeros((h, w, ch));
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                tmp[[y, x, c]] = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * frame[[y, clampi(x as isize + i as isize - r, w), c]])
                    .sum();
            }
        }
    }
    let mut out = Array3::zeros((h, w, ch));
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                out[[y, x, c]] = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * tmp[[clampi(y as isize + i as isize - r, h), x, c]])
                    .sum();
            }
        }
    }
    out
}

/// Per-channel median over a `size x size` window with replicated borders.
pub fn median_blur(frame: ArrayView3<'_, f32>, size: usize) -> Array3<f32> {
    let r = (size / 2) as isize;
    let (h, w, ch) = frame.dim();
    let clampi = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut window = Vec::with_capacity(size * size);
    let mut out = Array3::zeros((h, w, ch));
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                window.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        window.push(frame[[clampi(y as isize + dy, h), clampi(x as isize + dx, w), c]]);
                    }
                }
                window.sort_by(f32::total_cmp);
                out[[y, x, c]] = window[window.len() / 2];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array4;

    fn stack(f: impl Fn(usize, usize, usize) -> f32) -> FrameStack {
        FrameStack {
            tensor: Array4::from_shape_fn((2, 24, 24, 3), |(_, y, x, c)| f(y, x, c)),
            clip_id: "s".to_owned(),
        }
    }

    fn smooth(y: usize, x: usize, c: usize) -> f32 {
        0.5 + 0.3 * ((x as f32 * 0.2).sin() * (y as f32 * 0.15).cos()) + 0.05 * c as f32
    }

    #[test]
    fn empty_spec_is_identity() {
        let s = stack(smooth);
        assert_eq!(augment_video(&s, &AugmentationSpec::video(0, vec![])).unwrap(), s);
    }

    #[test]
    fn double_flip_is_identity() {
        let s = stack(smooth);
        for axis in [FlipAxis::Horizontal, FlipAxis::Vertical] {
            let flip = VideoOp::Flip { axis };
            let spec = AugmentationSpec::video(0, vec![flip.clone(), flip]);
            assert_eq!(augment_video(&s, &spec).unwrap(), s);
        }
    }

    #[test]
    fn brightness_clamps() {
        let s = stack(|_, _, _| 0.9);
        let spec = AugmentationSpec::video(0, vec![VideoOp::BrightnessContrast { alpha: 1.0, beta: 0.2 }]);
        let wide = AugmentationRanges {
            brightness_beta: (-0.2, 0.2),
            ..AugmentationRanges::default()
        };
        let out = augment_video_with(&s, &spec, &wide).unwrap();
        assert!(out.tensor.iter().all(|&v| v == 1.0));
        // The default range keeps brightness shifts within +-0.1.
        assert!(matches!(augment_video(&s, &spec), Err(Error::ParamOutOfRange { .. })));
    }

    #[test]
    fn rotation_inverse_is_near_identity() {
        let s = stack(smooth);
        let spec = AugmentationSpec::video(
            0,
            vec![VideoOp::Rotation { degrees: 10.0 }, VideoOp::Rotation { degrees: -10.0 }],
        );
        let out = augment_video(&s, &spec).unwrap();
        // Compare inside the inscribed circle, away from padded corners.
        let mut max_err = 0.0f32;
        for y in 0..24 {
            for x in 0..24 {
                let (dx, dy) = (x as f32 - 11.5, y as f32 - 11.5);
                if dx.hypot(dy) > 9.0 {
                    continue;
                }
                for c in 0..3 {
                    max_err = max_err.max((out.tensor[[0, y, x, c]] - s.tensor[[0, y, x, c]]).abs());
                }
            }
        }
        assert!(max_err < 0.02, "{max_err}");
    }

    #[test]
    fn ops_are_temporally_consistent() {
        let s = stack(smooth);
        let spec = AugmentationSpec::video(
            3,
            vec![
                VideoOp::ColorJitter { gains: [0.9, 1.1, 1.0] },
                VideoOp::GaussianBlur { kernel: 5, sigma: 1.0 },
                VideoOp::MedianBlur { kernel: 3 },
                VideoOp::Rotation { degrees: 7.0 },
            ],
        );
        let out = augment_video(&s, &spec).unwrap();
        assert_eq!(out.tensor.index_axis(Axis(0), 0), out.tensor.index_axis(Axis(0), 1));
        assert_eq!(out.tensor.dim(), s.tensor.dim());
    }

    #[test]
    fn noise_is_replayable_and_in_range() {
        let s = stack(smooth);
        let spec = AugmentationSpec::video(5, vec![VideoOp::AdditiveNoise { sigma: 0.05, seed: 11 }]);
        let a = augment_video(&s, &spec).unwrap();
        let b = augment_video(&s, &spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, s);
        assert!(a.tensor.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn blur_preserves_constants() {
        let f = Array3::from_elem((8, 8, 3), 0.25f32);
        let g = gaussian_blur(f.view(), 5, 1.5);
        assert!(g.iter().all(|v| (v - 0.25).abs() < 1e-6));
        assert_eq!(median_blur(f.view(), 3), f);
    }

    #[test]
    fn median_removes_salt() {
        let mut f = Array3::zeros((5, 5, 1));
        f[[2, 2, 0]] = 1.0f32;
        assert!(median_blur(f.view(), 3).iter().all(|&v| v == 0.0));
    }
}
