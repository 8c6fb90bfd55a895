//! Label-preserving augmentation.
//!
//! Video operators act on normalized frame stacks and audio operators on
//! 16 kHz waveforms, so every operator is codec independent and replayable
//! from its serialized [`AugmentationSpec`]. [`expand_dataset`] adds
//! randomly composed augmented copies of every original clip.

pub mod audio;
pub mod expand;
pub mod video;

use serde::{Deserialize, Serialize};

use crate::data::Modality;
use crate::error::{Error, Result};

pub use audio::augment_audio;
pub use expand::{expand_dataset, AugmentationPolicy};
pub use video::{augment_video, augment_video_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipAxis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    LowPass,
    HighPass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum VideoOp {
    ColorJitter { gains: [f32; 3] },
    Rotation { degrees: f32 },
    AdditiveNoise { sigma: f32, seed: u64 },
    Flip { axis: FlipAxis },
    GaussianBlur { kernel: usize, sigma: f32 },
    MedianBlur { kernel: usize },
    BrightnessContrast { alpha: f32, beta: f32 },
}

impl VideoOp {
    pub const NAMES: [&'static str; 7] = [
        "color_jitter",
        "rotation",
        "additive_noise",
        "flip",
        "gaussian_blur",
        "median_blur",
        "brightness_contrast",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            VideoOp::ColorJitter { .. } => "color_jitter",
            VideoOp::Rotation { .. } => "rotation",
            VideoOp::AdditiveNoise { .. } => "additive_noise",
            VideoOp::Flip { .. } => "flip",
            VideoOp::GaussianBlur { .. } => "gaussian_blur",
            VideoOp::MedianBlur { .. } => "median_blur",
            VideoOp::BrightnessContrast { .. } => "brightness_contrast",
        }
    }

    pub fn validate(&self, r: &AugmentationRanges) -> Result<()> {
        let name = self.name();
        match *self {
            VideoOp::ColorJitter { gains } => {
                for g in gains {
                    check(name, "gains", f64::from(g), r.jitter_gain)?;
                }
            }
            VideoOp::Rotation { degrees } => check(name, "degrees", f64::from(degrees), r.rotation_degrees)?,
            VideoOp::AdditiveNoise { sigma, .. } => check(name, "sigma", f64::from(sigma), r.video_noise_sigma)?,
            VideoOp::Flip { .. } => {}
            VideoOp::GaussianBlur { kernel, sigma } => {
                check_choice(name, "kernel", kernel, &r.blur_kernels)?;
                check(name, "sigma", f64::from(sigma), r.blur_sigma)?;
            }
            VideoOp::MedianBlur { kernel } => check_choice(name, "kernel", kernel, &r.median_kernels)?,
            VideoOp::BrightnessContrast { alpha, beta } => {
                check(name, "alpha", f64::from(alpha), r.contrast_alpha)?;
                check(name, "beta", f64::from(beta), r.brightness_beta)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AudioOp {
    PitchShift { semitones: f64 },
    AdditiveNoise { snr_db: f64, seed: u64 },
    Volume { gain: f64 },
    FrequencyFilter { kind: FilterKind, cutoff_hz: f64 },
}

impl AudioOp {
    pub const NAMES: [&'static str; 4] = ["pitch_shift", "additive_noise", "volume", "frequency_filter"];

    pub fn name(&self) -> &'static str {
        match self {
            AudioOp::PitchShift { .. } => "pitch_shift",
            AudioOp::AdditiveNoise { .. } => "additive_noise",
            AudioOp::Volume { .. } => "volume",
            AudioOp::FrequencyFilter { .. } => "frequency_filter",
        }
    }

    pub fn validate(&self, r: &AugmentationRanges) -> Result<()> {
        let name = self.name();
        match *self {
            AudioOp::PitchShift { semitones } => check(name, "semitones", semitones, r.pitch_semitones),
            AudioOp::AdditiveNoise { snr_db, .. } => check(name, "snr_db", snr_db, r.snr_db),
            AudioOp::Volume { gain } => check(name, "gain", gain, r.volume_gain),
            AudioOp::FrequencyFilter { cutoff_hz, .. } => check(name, "cutoff_hz", cutoff_hz, r.cutoff_hz),
        }
    }
}

fn check(op: &str, param: &str, value: f64, (lo, hi): (f64, f64)) -> Result<()> {
    // Ranges are stored in f64 while some parameters are f32; allow the
    // rounding slack of the narrower type at the bounds.
    let slack = 1e-6 * lo.abs().max(hi.abs()).max(1.0);
    if value.is_finite() && value >= lo - slack && value <= hi + slack {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange {
            op: op.to_owned(),
            param: param.to_owned(),
            value,
        })
    }
}

fn check_choice(op: &str, param: &str, value: usize, allowed: &[usize]) -> Result<()> {
    if allowed.contains(&value) {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange {
            op: op.to_owned(),
            param: param.to_owned(),
            value: value as f64,
        })
    }
}

/// Permitted parameter ranges, inclusive. Sampling draws uniformly from
/// these and replay rejects anything outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationRanges {
    pub jitter_gain: (f64, f64),
    pub rotation_degrees: (f64, f64),
    pub video_noise_sigma: (f64, f64),
    pub blur_kernels: Vec<usize>,
    pub blur_sigma: (f64, f64),
    pub median_kernels: Vec<usize>,
    pub contrast_alpha: (f64, f64),
    pub brightness_beta: (f64, f64),
    pub pitch_semitones: (f64, f64),
    pub snr_db: (f64, f64),
    pub volume_gain: (f64, f64),
    pub cutoff_hz: (f64, f64),
}

impl Default for AugmentationRanges {
    fn default() -> Self {
        AugmentationRanges {
            jitter_gain: (0.8, 1.2),
            rotation_degrees: (-15.0, 15.0),
            video_noise_sigma: (0.0, 0.05),
            blur_kernels: vec![3, 5],
            blur_sigma: (0.5, 1.5),
            median_kernels: vec![3],
            contrast_alpha: (0.8, 1.2),
            brightness_beta: (-0.1, 0.1),
            pitch_semitones: (-2.0, 2.0),
            snr_db: (20.0, 40.0),
            volume_gain: (0.5, 1.5),
            cutoff_hz: (200.0, 6000.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "modality", content = "ops", rename_all = "lowercase")]
pub enum OpList {
    Audio(Vec<AudioOp>),
    Video(Vec<VideoOp>),
}

/// Ordered operators for one modality of one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub seed: u64,
    #[serde(flatten)]
    pub ops: OpList,
}

impl AugmentationSpec {
    pub fn video(seed: u64, ops: Vec<VideoOp>) -> Self {
        AugmentationSpec {
            seed,
            ops: OpList::Video(ops),
        }
    }

    pub fn audio(seed: u64, ops: Vec<AudioOp>) -> Self {
        AugmentationSpec {
            seed,
            ops: OpList::Audio(ops),
        }
    }

    pub fn modality(&self) -> Modality {
        match self.ops {
            OpList::Audio(_) => Modality::Audio,
            OpList::Video(_) => Modality::Video,
        }
    }

    pub fn op_names(&self) -> Vec<&'static str> {
        match &self.ops {
            OpList::Audio(ops) => ops.iter().map(AudioOp::name).collect(),
            OpList::Video(ops) => ops.iter().map(VideoOp::name).collect(),
        }
    }

    pub fn validate(&self, ranges: &AugmentationRanges) -> Result<()> {
        match &self.ops {
            OpList::Audio(ops) => ops.iter().try_for_each(|op| op.validate(ranges)),
            OpList::Video(ops) => ops.iter().try_for_each(|op| op.validate(ranges)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// Parse a serialized spec, reporting unknown operator names as
    /// [`Error::UnknownOp`].
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let known: &[&str] = match value.get("modality").and_then(|m| m.as_str()) {
            Some("audio") => &AudioOp::NAMES,
            Some("video") => &VideoOp::NAMES,
            other => return Err(Error::InvalidConfig(format!("bad modality {other:?}"))),
        };
        if let Some(ops) = value.get("ops").and_then(|o| o.as_array()) {
            for op in ops {
                let name = op.get("op").and_then(|n| n.as_str()).unwrap_or("");
                if !known.contains(&name) {
                    return Err(Error::UnknownOp(name.to_owned()));
                }
            }
        }
        serde_json::from_value(value).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// Both modality specs of one augmented clip, drawn independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipAugmentation {
    pub seed: u64,
    pub audio: AugmentationSpec,
    pub video: AugmentationSpec,
}
