//! Audio frontend: raw PCM to 96 x 64 log-mel examples.
//!
//! The chain is mono mix, resampling to 16 kHz, a 25 ms / 10 ms magnitude
//! STFT with a periodic Hann window, a 64-band mel filterbank over
//! 125 to 7500 Hz, `ln(x + 0.01)` and framing into 0.96 s examples.

pub mod mel;
pub mod resample;
pub mod stft;
pub mod waveform;

use ndarray::Array2;

pub use mel::{
    frame_examples, log_compress, mel_filterbank, MelExample, MelFilterbank, EXAMPLE_FRAMES,
    NUM_MEL_BANDS,
};
pub use resample::{resample_to_16k_mono, Resampler};
pub use stft::{stft_magnitude, Spectrogram, Stft};
pub use waveform::{read_wav, write_wav, Waveform};

use crate::error::Result;

/// Log-mel frontend with its FFT plan cached.
#[derive(Default)]
pub struct LogMelFrontend {
    stft: Stft,
}

impl LogMelFrontend {
    pub fn new() -> Self {
        Self::default()
    }

    /// `F x 64` log-mel matrix of a 16 kHz mono waveform.
    pub fn log_mel(&self, w: &Waveform) -> Result<Array2<f64>> {
        let spec = self.stft.magnitude(w)?;
        let mel = mel_filterbank(&spec)?;
        log_compress(mel.view())
    }

    /// Full chain from any supported input rate.
    pub fn examples(&self, w: &Waveform, clip_id: &str) -> Result<Vec<MelExample>> {
        let w16 = resample_to_16k_mono(w)?;
        let logmel = self.log_mel(&w16)?;
        frame_examples(logmel.view(), clip_id)
    }
}

/// Examples produced for `n` samples of 16 kHz audio.
pub fn example_count(n: usize) -> usize {
    stft::frame_count(n) / EXAMPLE_FRAMES
}
