//! Video frontend: decoded RGB frames to `T x 224 x 224 x 3` stacks in
//! `[0, 1]`.
//!
//! Each frame is center-cropped to a square, resized bilinearly to
//! 224 x 224 and divided by 255. Bilinear sampling uses half-pixel centers
//! (`src = (dst + 0.5) * in / out - 0.5`, clamped to the image), computed
//! in exact integer arithmetic so the result is mirror-symmetric.

pub mod source;

use image::RgbImage;
use ndarray::{Array3, Array4, ArrayView3};

use crate::error::{Error, Result};

pub const FRAME_SIZE: usize = 224;
pub const DEFAULT_FRAME_COUNT: usize = 32;

#[derive(Debug, Clone)]
pub struct RawFrameSequence {
    pub frames: Vec<RgbImage>,
    pub fps: f64,
    pub clip_id: String,
}

impl RawFrameSequence {
    pub fn new(frames: Vec<RgbImage>, fps: f64, clip_id: impl Into<String>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySequence)?;
        let dims = first.dimensions();
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::ShapeMismatch("zero-sized frame".to_owned()));
        }
        if let Some(bad) = frames.iter().find(|f| f.dimensions() != dims) {
            return Err(Error::ShapeMismatch(format!(
                "frame size {:?} differs from first frame {:?}",
                bad.dimensions(),
                dims
            )));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::ShapeMismatch(format!("invalid frame rate {fps}")));
        }
        Ok(RawFrameSequence {
            frames,
            fps,
            clip_id: clip_id.into(),
        })
    }
}

/// Normalized frames, `T x 224 x 224 x 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    pub tensor: Array4<f32>,
    pub clip_id: String,
}

impl FrameStack {
    pub fn num_frames(&self) -> usize {
        self.tensor.dim().0
    }
}

pub fn center_square_crop(frame: &RgbImage) -> RgbImage {
    let (w, h) = frame.dimensions();
    let side = w.min(h);
    let x0 = (w - side) / 2;
    let y0 = (h - side) / 2;
    RgbImage::from_fn(side, side, |x, y| *frame.get_pixel(x0 + x, y0 + y))
}

/// Source index pair and weights along one axis. Positions are held as
/// numerators over `2 * out` so that mirrored outputs get mirrored weights.
#[derive(Debug, Clone, Copy)]
struct Tap {
    i0: usize,
    i1: usize,
    w0: f64,
    w1: f64,
}

fn axis_taps(input: usize, output: usize) -> Vec<Tap> {
    let denom = 2 * output as i64;
    let last = input as i64 - 1;
    (0..output as i64)
        .map(|j| {
            let num = ((2 * j + 1) * input as i64 - output as i64).max(0);
            let (mut i0, mut rem) = (num / denom, num % denom);
            if i0 >= last {
                i0 = last;
                rem = 0;
            }
            Tap {
                i0: i0 as usize,
                i1: (i0 + 1).min(last) as usize,
                w0: (denom - rem) as f64 / denom as f64,
                w1: rem as f64 / denom as f64,
            }
        })
        .collect()
}

/// Bilinear resize of an arbitrary image to `out_w x out_h`, rounding back
/// to 8 bits.
pub fn resize_bilinear(frame: &RgbImage, out_w: u32, out_h: u32) -> RgbImage {
    let (w, h) = frame.dimensions();
    let xs = axis_taps(w as usize, out_w as usize);
    let ys = axis_taps(h as usize, out_h as usize);
    let px = |x: usize, y: usize, c: usize| f64::from(frame.get_pixel(x as u32, y as u32)[c]);
    RgbImage::from_fn(out_w, out_h, |x, y| {
        let tx = xs[x as usize];
        let ty = ys[y as usize];
        let mut out = [0u8; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let top = tx.w0 * px(tx.i0, ty.i0, c) + tx.w1 * px(tx.i1, ty.i0, c);
            let bottom = tx.w0 * px(tx.i0, ty.i1, c) + tx.w1 * px(tx.i1, ty.i1, c);
            let v = ty.w0 * top + ty.w1 * bottom;
            *o = v.round().clamp(0.0, 255.0) as u8;
        }
        image::Rgb(out)
    })
}

pub fn resize_224(frame: &RgbImage) -> Result<RgbImage> {
    let (w, h) = frame.dimensions();
    if w != h {
        return Err(Error::ShapeMismatch(format!("resize_224 expects a square frame, got {w}x{h}")));
    }
    Ok(resize_bilinear(frame, FRAME_SIZE as u32, FRAME_SIZE as u32))
}

/// `H x W x 3` floats, each channel divided by 255.
pub fn normalize_01(frame: &RgbImage) -> Array3<f32> {
    let (w, h) = frame.dimensions();
    Array3::from_shape_fn((h as usize, w as usize, 3), |(y, x, c)| {
        f32::from(frame.get_pixel(x as u32, y as u32)[c]) / 255.0
    })
}

/// Crop, resize and normalize one frame.
pub fn prepare_frame(frame: &RgbImage) -> Array3<f32> {
    let square = center_square_crop(frame);
    let resized = resize_bilinear(&square, FRAME_SIZE as u32, FRAME_SIZE as u32);
    normalize_01(&resized)
}

/// Frame indices chosen for a clip of `len` frames. Uniform spacing over
/// the clip when it is long enough, otherwise every frame followed by
/// repeats of the last one.
pub fn sample_indices(len: usize, count: usize) -> Vec<usize> {
    assert!(len >= 1 && count >= 1);
    if len < count {
        return (0..count).map(|i| i.min(len - 1)).collect();
    }
    if count == 1 {
        return vec![0];
    }
    (0..count)
        .map(|i| ((i * (len - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

pub fn sample_frames(seq: &RawFrameSequence, count: usize) -> Result<FrameStack> {
    if seq.frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    if count == 0 {
        return Err(Error::ShapeMismatch("frame count must be at least 1".to_owned()));
    }
    let indices = sample_indices(seq.frames.len(), count);
    let mut tensor = Array4::zeros((count, FRAME_SIZE, FRAME_SIZE, 3));
    let mut prepared: Vec<Option<Array3<f32>>> = vec![None; seq.frames.len()];
    for (t, &idx) in indices.iter().enumerate() {
        let frame = prepared[idx].get_or_insert_with(|| prepare_frame(&seq.frames[idx]));
        tensor.index_axis_mut(ndarray::Axis(0), t).assign(frame);
    }
    Ok(FrameStack {
        tensor,
        clip_id: seq.clip_id.clone(),
    })
}

/// Convert a normalized frame back to 8 bits (rounding).
pub fn to_rgb8(frame: ArrayView3<'_, f32>) -> RgbImage {
    let (h, w, _) = frame.dim();
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let p = |c| (frame[[y as usize, x as usize, c]] * 255.0).round().clamp(0.0, 255.0) as u8;
        image::Rgb([p(0), p(1), p(2)])
    })
}
