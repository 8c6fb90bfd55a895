use std::path::Path;

use hound::{SampleFormat, WavReader};

use crate::error::{Error, Result};

/// PCM audio with interleaved channels and samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: u32,
    channels: u16,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32, channels: u16) -> Result<Self> {
        if channels == 0 || channels > 2 {
            return Err(Error::UnsupportedChannels(channels));
        }
        if !samples.len().is_multiple_of(usize::from(channels)) {
            return Err(Error::ShapeMismatch(format!(
                "{} interleaved samples do not divide into {channels} channels",
                samples.len()
            )));
        }
        if sample_rate_hz == 0 {
            return Err(Error::UnsupportedRate(0));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("waveform".to_owned()));
        }
        Ok(Waveform {
            samples,
            sample_rate_hz,
            channels,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        Self::new(samples, sample_rate_hz, 1)
    }

    /// Mono waveform from trusted samples (already validated by the caller).
    pub(crate) fn mono_unchecked(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Waveform {
            samples,
            sample_rate_hz,
            channels: 1,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.samples.len() / usize::from(self.channels)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Channel mean.
    pub fn to_mono(&self) -> Waveform {
        if self.channels == 1 {
            return self.clone();
        }
        let ch = usize::from(self.channels);
        let samples = self
            .samples
            .chunks_exact(ch)
            .map(|frame| frame.iter().sum::<f64>() / ch as f64)
            .collect();
        Waveform::mono_unchecked(samples, self.sample_rate_hz)
    }
}

/// Decode a 16-bit integer or 32-bit float PCM WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let reader = WavReader::new(std::io::BufReader::new(file))?;
    let spec = reader.spec();
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        _ => return Err(Error::Wav(hound::Error::Unsupported)),
    };
    Waveform::new(samples, spec.sample_rate, spec.channels)
}

/// Write a mono waveform as 32-bit float WAV.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: w.channels,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec)?;
    for &s in &w.samples {
        writer.write_sample(s as f32)?;
    }
    writer.finalize()?;
    Ok(())
}
