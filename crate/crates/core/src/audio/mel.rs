//! Mel filterbank, log compression and 0.96 s example framing.

use std::sync::OnceLock;

use ndarray::{s, Array2, ArrayView2};

use super::resample::TARGET_RATE_HZ;
use super::stft::{Spectrogram, NUM_BINS};
use crate::error::{Error, Result};

pub const NUM_MEL_BANDS: usize = 64;
pub const MEL_LOW_HZ: f64 = 125.0;
pub const MEL_HIGH_HZ: f64 = 7500.0;
pub const LOG_OFFSET: f64 = 0.01;
/// Frames per example: 96 hops of 10 ms.
pub const EXAMPLE_FRAMES: usize = 96;
pub const FRAME_SECONDS: f64 = 0.01;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with slopes in the mel domain, edges equally spaced
/// in mel between [`MEL_LOW_HZ`] and [`MEL_HIGH_HZ`]. The DC bin carries no
/// weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// `NUM_MEL_BANDS x NUM_BINS`.
    weights: Array2<f64>,
    /// `NUM_MEL_BANDS + 2` band edges in mel.
    edges_mel: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(sample_rate_hz: u32, num_bins: usize, num_bands: usize, low_hz: f64, high_hz: f64) -> Self {
        let nyquist = f64::from(sample_rate_hz) / 2.0;
        let low_mel = hz_to_mel(low_hz);
        let high_mel = hz_to_mel(high_hz);
        let edges_mel: Vec<f64> = (0..num_bands + 2)
            .map(|i| low_mel + (high_mel - low_mel) * i as f64 / (num_bands + 1) as f64)
            .collect();
        let bin_mel: Vec<f64> = (0..num_bins)
            .map(|b| hz_to_mel(nyquist * b as f64 / (num_bins - 1) as f64))
            .collect();
        let mut weights = Array2::zeros((num_bands, num_bins));
        for (m, mut row) in weights.rows_mut().into_iter().enumerate() {
            let (lo, center, hi) = (edges_mel[m], edges_mel[m + 1], edges_mel[m + 2]);
            for (b, w) in row.iter_mut().enumerate().skip(1) {
                let rising = (bin_mel[b] - lo) / (center - lo);
                let falling = (hi - bin_mel[b]) / (hi - center);
                *w = rising.min(falling).max(0.0);
            }
        }
        MelFilterbank { weights, edges_mel }
    }

    /// The 64-band, 125 to 7500 Hz bank for 16 kHz audio.
    pub fn standard() -> &'static MelFilterbank {
        static BANK: OnceLock<MelFilterbank> = OnceLock::new();
        BANK.get_or_init(|| {
            MelFilterbank::new(TARGET_RATE_HZ, NUM_BINS, NUM_MEL_BANDS, MEL_LOW_HZ, MEL_HIGH_HZ)
        })
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn center_hz(&self, band: usize) -> f64 {
        mel_to_hz(self.edges_mel[band + 1])
    }

    pub fn num_bands(&self) -> usize {
        self.weights.nrows()
    }

    /// `F x bins` magnitudes to `F x bands` mel energies.
    pub fn apply(&self, spectrum: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if spectrum.ncols() != self.weights.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "spectrogram has {} bins, filterbank expects {}",
                spectrum.ncols(),
                self.weights.ncols()
            )));
        }
        Ok(spectrum.dot(&self.weights.t()))
    }
}

pub fn mel_filterbank(spec: &Spectrogram) -> Result<Array2<f64>> {
    MelFilterbank::standard().apply(spec.frames.view())
}

/// `ln(mel + 0.01)`.
pub fn log_compress(mel: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if let Some(&neg) = mel.iter().find(|&&v| v < 0.0 || v.is_nan()) {
        return Err(Error::NegativeInput(neg));
    }
    Ok(mel.mapv(|v| (v + LOG_OFFSET).ln()))
}

/// One 0.96 s log-mel patch.
#[derive(Debug, Clone, PartialEq)]
pub struct MelExample {
    /// `EXAMPLE_FRAMES x NUM_MEL_BANDS`.
    pub patch: Array2<f64>,
    pub source_clip_id: String,
    pub start_time_s: f64,
}

/// Cut a log-mel matrix into non-overlapping 96-frame examples, dropping
/// the trailing partial example.
pub fn frame_examples(logmel: ArrayView2<'_, f64>, clip_id: &str) -> Result<Vec<MelExample>> {
    if logmel.ncols() != NUM_MEL_BANDS {
        return Err(Error::ShapeMismatch(format!(
            "log-mel matrix has {} bands, expected {NUM_MEL_BANDS}",
            logmel.ncols()
        )));
    }
    if logmel.nrows() < EXAMPLE_FRAMES {
        return Err(Error::TooShort {
            needed: EXAMPLE_FRAMES,
            got: logmel.nrows(),
        });
    }
    if logmel.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log-mel matrix".to_owned()));
    }
    Ok((0..logmel.nrows() / EXAMPLE_FRAMES)
        .map(|k| {
            let start = k * EXAMPLE_FRAMES;
            MelExample {
                patch: logmel.slice(s![start..start + EXAMPLE_FRAMES, ..]).to_owned(),
                source_clip_id: clip_id.to_owned(),
                start_time_s: start as f64 * FRAME_SECONDS,
            }
        })
        .collect())
}
