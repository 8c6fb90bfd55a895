use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::resample::TARGET_RATE_HZ;
use super::waveform::Waveform;
use crate::error::{Error, Result};

/// 25 ms at 16 kHz.
pub const WINDOW_LEN: usize = 400;
/// 10 ms at 16 kHz.
pub const HOP_LEN: usize = 160;
pub const FFT_SIZE: usize = 512;
pub const NUM_BINS: usize = FFT_SIZE / 2 + 1;

/// Magnitude STFT, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Array2<f64>,
    pub window_len: usize,
    pub hop_len: usize,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.frames.ncols()
    }
}

/// Frames produced for `n` samples; zero when `n` is shorter than a window.
pub fn frame_count(n: usize) -> usize {
    if n < WINDOW_LEN {
        0
    } else {
        (n - WINDOW_LEN) / HOP_LEN + 1
    }
}

/// Periodic Hann window of `len` points.
pub fn periodic_hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Reusable STFT plan.
pub struct Stft {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
}

impl Default for Stft {
    fn default() -> Self {
        Self::new()
    }
}

impl Stft {
    pub fn new() -> Self {
        Stft {
            fft: FftPlanner::new().plan_fft_forward(FFT_SIZE),
            window: periodic_hann(WINDOW_LEN),
        }
    }

    pub fn magnitude(&self, w: &Waveform) -> Result<Spectrogram> {
        if w.sample_rate_hz() != TARGET_RATE_HZ || w.channels() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "STFT expects 16 kHz mono, got {} Hz x {} channels",
                w.sample_rate_hz(),
                w.channels()
            )));
        }
        let x = w.samples();
        if x.len() < WINDOW_LEN {
            return Err(Error::TooShort {
                needed: WINDOW_LEN,
                got: x.len(),
            });
        }
        let n_frames = frame_count(x.len());
        let mut frames = Array2::zeros((n_frames, NUM_BINS));
        let mut buf = vec![Complex::new(0.0, 0.0); FFT_SIZE];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for (f, mut row) in frames.rows_mut().into_iter().enumerate() {
            let chunk = &x[f * HOP_LEN..f * HOP_LEN + WINDOW_LEN];
            for (slot, (&s, &h)) in buf.iter_mut().zip(chunk.iter().zip(&self.window)) {
                *slot = Complex::new(s * h, 0.0);
            }
            buf[WINDOW_LEN..].fill(Complex::new(0.0, 0.0));
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (out, c) in row.iter_mut().zip(&buf[..NUM_BINS]) {
                *out = c.norm();
            }
        }
        Ok(Spectrogram {
            frames,
            window_len: WINDOW_LEN,
            hop_len: HOP_LEN,
        })
    }
}

/// 400-sample periodic Hann window, 160-sample hop, 512-point FFT magnitude.
pub fn stft_magnitude(w: &Waveform) -> Result<Spectrogram> {
    Stft::new().magnitude(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_second_has_98_frames() {
        let w = Waveform::mono(vec![0.0; 16000], 16000).unwrap();
        let s = stft_magnitude(&w).unwrap();
        assert_eq!(s.num_frames(), 98);
        assert_eq!(s.num_bins(), 257);
        assert!(s.frames.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn too_short_and_wrong_rate() {
        let w = Waveform::mono(vec![0.0; 399], 16000).unwrap();
        assert!(matches!(stft_magnitude(&w), Err(Error::TooShort { needed: 400, got: 399 })));
        let w = Waveform::mono(vec![0.0; 1000], 8000).unwrap();
        assert!(matches!(stft_magnitude(&w), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn window_is_periodic() {
        let w = periodic_hann(400);
        assert_eq!(w[0], 0.0);
        assert!((w[200] - 1.0).abs() < 1e-15);
        // Periodic: w[n] == w[400 - n].
        for n in 1..400 {
            assert!((w[n] - w[400 - n]).abs() < 1e-12);
        }
    }
}
