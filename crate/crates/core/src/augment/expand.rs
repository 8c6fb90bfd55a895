use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AudioOp, AugmentationRanges, AugmentationSpec, ClipAugmentation, FilterKind, FlipAxis, VideoOp};
use crate::data::{ClipEntry, ClipManifest, Provenance};
use crate::error::{Error, Result};
use crate::seed;

/// How many augmented copies to draw per clip and how to compose them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationPolicy {
    /// 2 triples the dataset.
    pub copies_per_clip: usize,
    pub min_ops: usize,
    pub max_video_ops: usize,
    pub max_audio_ops: usize,
    pub ranges: AugmentationRanges,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        AugmentationPolicy {
            copies_per_clip: 2,
            min_ops: 1,
            max_video_ops: 3,
            max_audio_ops: 2,
            ranges: AugmentationRanges::default(),
        }
    }
}

impl AugmentationPolicy {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("augmentation policy: {m}")));
        if self.min_ops == 0 {
            return bad("min_ops must be at least 1");
        }
        if self.max_video_ops < self.min_ops || self.max_video_ops > VideoOp::NAMES.len() {
            return bad("max_video_ops out of range");
        }
        if self.max_audio_ops < self.min_ops || self.max_audio_ops > AudioOp::NAMES.len() {
            return bad("max_audio_ops out of range");
        }
        if self.ranges.blur_kernels.is_empty() || self.ranges.median_kernels.is_empty() {
            return bad("kernel choice lists must be non-empty");
        }
        Ok(())
    }

    fn op_count(&self, rng: &mut ChaCha8Rng, max: usize) -> usize {
        rng.gen_range(self.min_ops..=max)
    }

    pub fn sample_video(&self, rng: &mut ChaCha8Rng) -> AugmentationSpec {
        let r = &self.ranges;
        let count = self.op_count(rng, self.max_video_ops);
        let kinds = index::sample(rng, VideoOp::NAMES.len(), count).into_vec();
        let spec_seed = rng.gen();
        let ops = kinds
            .into_iter()
            .map(|kind| match kind {
                0 => VideoOp::ColorJitter {
                    gains: [0, 1, 2].map(|_| uniform(rng, r.jitter_gain) as f32),
                },
                1 => VideoOp::Rotation {
                    degrees: uniform(rng, r.rotation_degrees) as f32,
                },
                2 => VideoOp::AdditiveNoise {
                    sigma: uniform(rng, r.video_noise_sigma) as f32,
                    seed: rng.gen(),
                },
                3 => VideoOp::Flip {
                    axis: if rng.gen_bool(0.5) { FlipAxis::Horizontal } else { FlipAxis::Vertical },
                },
                4 => VideoOp::GaussianBlur {
                    kernel: choose(rng, &r.blur_kernels),
                    sigma: uniform(rng, r.blur_sigma) as f32,
                },
                5 => VideoOp::MedianBlur {
                    kernel: choose(rng, &r.median_kernels),
                },
                _ => VideoOp::BrightnessContrast {
                    alpha: uniform(rng, r.contrast_alpha) as f32,
                    beta: uniform(rng, r.brightness_beta) as f32,
                },
            })
            .collect();
        AugmentationSpec::video(spec_seed, ops)
    }

    pub fn sample_audio(&self, rng: &mut ChaCha8Rng) -> AugmentationSpec {
        let r = &self.ranges;
        let count = self.op_count(rng, self.max_audio_ops);
        let kinds = index::sample(rng, AudioOp::NAMES.len(), count).into_vec();
        let spec_seed = rng.gen();
        let ops = kinds
            .into_iter()
            .map(|kind| match kind {
                0 => AudioOp::PitchShift {
                    semitones: uniform(rng, r.pitch_semitones),
                },
                1 => AudioOp::AdditiveNoise {
                    snr_db: uniform(rng, r.snr_db),
                    seed: rng.gen(),
                },
                2 => AudioOp::Volume {
                    gain: uniform(rng, r.volume_gain),
                },
                _ => AudioOp::FrequencyFilter {
                    kind: if rng.gen_bool(0.5) { FilterKind::LowPass } else { FilterKind::HighPass },
                    cutoff_hz: uniform(rng, r.cutoff_hz),
                },
            })
            .collect();
        AugmentationSpec::audio(spec_seed, ops)
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn choose(rng: &mut ChaCha8Rng, options: &[usize]) -> usize {
    options[rng.gen_range(0..options.len())]
}

/// Id given to the `copy`-th (1-based) augmented copy of `parent`.
pub fn augmented_id(parent: &str, copy: usize) -> String {
    format!("{parent}_aug{copy}")
}

/// Append `copies_per_clip` augmented entries per original clip. Each copy
/// has its own generator seeded from `(seed, parent id, copy)`, so the
/// result does not depend on processing order.
pub fn expand_dataset(manifest: &ClipManifest, policy: &AugmentationPolicy, seed: u64) -> Result<ClipManifest> {
    policy.validate()?;
    if let Some(e) = manifest.entries().iter().find(|e| !e.provenance.is_original()) {
        return Err(Error::AlreadyAugmented(e.id.clone()));
    }
    let mut entries = manifest.entries().to_vec();
    entries.reserve(manifest.len() * policy.copies_per_clip);
    for parent in manifest.entries() {
        for copy in 1..=policy.copies_per_clip {
            let clip_seed = seed::derive(seed, &parent.id, copy as u64);
            let mut rng = seed::rng(clip_seed);
            let video = policy.sample_video(&mut rng);
            let audio = policy.sample_audio(&mut rng);
            entries.push(ClipEntry {
                id: augmented_id(&parent.id, copy),
                provenance: Provenance::Augmented {
                    parent_id: parent.id.clone(),
                    spec: Some(Box::new(ClipAugmentation {
                        seed: clip_seed,
                        audio,
                        video,
                    })),
                },
                ..parent.clone()
            });
        }
    }
    ClipManifest::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, Split};

    fn originals(n: usize) -> ClipManifest {
        ClipManifest::new(
            (0..n)
                .map(|i| {
                    let label = if i < n / 2 { Label::Violent } else { Label::NonViolent };
                    let mut e = ClipEntry::original(format!("v{i:03}"), format!("v{i:03}.wav"), label, 5.0);
                    e.split = if i % 5 == 0 { Split::Validation } else { Split::Train };
                    e
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn tripling() {
        let m = originals(20);
        let out = expand_dataset(&m, &AugmentationPolicy::default(), 1).unwrap();
        assert_eq!(out.len(), 60);
        for e in out.entries() {
            let parent = out.get(e.source_id()).unwrap();
            assert_eq!(e.label, parent.label);
            assert_eq!(e.split, parent.split);
        }
    }

    #[test]
    fn zero_copies_is_noop() {
        let m = originals(6);
        let policy = AugmentationPolicy {
            copies_per_clip: 0,
            ..AugmentationPolicy::default()
        };
        assert_eq!(expand_dataset(&m, &policy, 1).unwrap(), m);
    }

    #[test]
    fn deterministic_and_reparsable() {
        let m = originals(8);
        let a = expand_dataset(&m, &AugmentationPolicy::default(), 42).unwrap();
        let b = expand_dataset(&m, &AugmentationPolicy::default(), 42).unwrap();
        assert_eq!(a, b);
        let c = expand_dataset(&m, &AugmentationPolicy::default(), 43).unwrap();
        assert_ne!(a, c);
        assert_eq!(ClipManifest::parse(&a.to_text()).unwrap(), a);
    }

    #[test]
    fn refuses_augmented_input() {
        let m = expand_dataset(&originals(2), &AugmentationPolicy::default(), 1).unwrap();
        assert!(matches!(
            expand_dataset(&m, &AugmentationPolicy::default(), 1),
            Err(Error::AlreadyAugmented(_))
        ));
    }

    #[test]
    fn sampled_specs_respect_policy() {
        let policy = AugmentationPolicy::default();
        let m = expand_dataset(&originals(50), &policy, 9).unwrap();
        let mut seen_counts = std::collections::BTreeSet::new();
        for e in m.entries() {
            if let Provenance::Augmented { spec: Some(spec), .. } = &e.provenance {
                spec.video.validate(&policy.ranges).unwrap();
                spec.audio.validate(&policy.ranges).unwrap();
                let v = spec.video.op_names();
                let a = spec.audio.op_names();
                assert!((1..=3).contains(&v.len()));
                assert!((1..=2).contains(&a.len()));
                let unique: std::collections::HashSet<_> = v.iter().collect();
                assert_eq!(unique.len(), v.len(), "ops drawn without replacement");
                seen_counts.insert(v.len());
            }
        }
        assert_eq!(seen_counts.len(), 3, "every op count appears");
    }
}
