//! Gaussian benchmark in embedding space with known Bayes accuracies.
//!
//! Each class is `±mu` along a random unit direction per modality, with
//! unit isotropic noise. The two signal-direction noises are correlated
//! with coefficient `rho`, chosen so that the optimal joint classifier
//! reaches the requested accuracy. For equal covariances the Bayes
//! accuracy is `Phi(d)` with `d^2 = (a^2 - 2 rho a v + v^2) / (1 - rho^2)`.

use ndarray::Array1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{ClipEntry, ClipManifest, EmbeddingRecord, EmbeddingStore, Label, Modality, Split};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub audio_dim: usize,
    pub video_dim: usize,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub audio_bayes: f64,
    pub video_bayes: f64,
    pub joint_bayes: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            audio_dim: 16,
            video_dim: 32,
            train_per_class: 1000,
            val_per_class: 250,
            audio_bayes: 0.80,
            video_bayes: 0.91,
            joint_bayes: 0.97,
            seed: 2024,
        }
    }
}

/// Class-mean offsets and noise correlation along the signal directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub mu_audio: f64,
    pub mu_video: f64,
    pub rho: f64,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

impl SyntheticParams {
    pub fn solve(audio_bayes: f64, video_bayes: f64, joint_bayes: f64) -> Result<Self> {
        for p in [audio_bayes, video_bayes, joint_bayes] {
            if !(p > 0.5 && p < 1.0) {
                return Err(Error::InvalidConfig(format!("Bayes accuracy {p} must lie in (0.5, 1)")));
            }
        }
        let n = std_normal();
        let (a, v, j) = (n.inverse_cdf(audio_bayes), n.inverse_cdf(video_bayes), n.inverse_cdf(joint_bayes));
        // j^2 rho^2 - 2 a v rho + (a^2 + v^2 - j^2) = 0
        let (qa, qb, qc) = (j * j, -2.0 * a * v, a * a + v * v - j * j);
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "joint accuracy {joint_bayes} is unreachable from {audio_bayes} and {video_bayes}"
            )));
        }
        let roots = [(-qb - disc.sqrt()) / (2.0 * qa), (-qb + disc.sqrt()) / (2.0 * qa)];
        let rho = roots
            .into_iter()
            .filter(|r| r.abs() < 1.0)
            .min_by(|x, y| x.abs().total_cmp(&y.abs()))
            .ok_or_else(|| Error::InvalidConfig("no valid noise correlation".to_owned()))?;
        Ok(SyntheticParams {
            mu_audio: a,
            mu_video: v,
            rho,
        })
    }

    /// Bayes accuracies (audio, video, joint) implied by the parameters.
    pub fn bayes_accuracies(&self) -> (f64, f64, f64) {
        let n = std_normal();
        let (a, v, r) = (self.mu_audio, self.mu_video, self.rho);
        let d2 = (a * a - 2.0 * r * a * v + v * v) / (1.0 - r * r);
        (n.cdf(a), n.cdf(v), n.cdf(d2.sqrt()))
    }

    /// Signal-direction coordinates `(z_a, z_v)` for one sample of class sign `s`.
    pub fn sample_signal(&self, s: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let na: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        let nv = self.rho * na + (1.0 - self.rho * self.rho).sqrt() * e;
        (s * self.mu_audio + na, s * self.mu_video + nv)
    }
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    loop {
        let v: Array1<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.dot(&v).sqrt();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Isotropic noise whose component along `u` is replaced by `z`.
fn embed(z: f64, u: &Array1<f64>, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let g: Array1<f64> = (0..u.len()).map(|_| rng.sample(StandardNormal)).collect();
    let along = g.dot(u);
    (&g + &(u * (z - along))).iter().map(|&x| x as f32).collect()
}

/// A labelled benchmark: a manifest with splits assigned and both
/// modalities' embeddings.
#[derive(Debug, Clone)]
pub struct SyntheticBenchmark {
    pub params: SyntheticParams,
    pub manifest: ClipManifest,
    pub store: EmbeddingStore,
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticBenchmark> {
    if cfg.audio_dim == 0 || cfg.video_dim == 0 || cfg.train_per_class == 0 || cfg.val_per_class == 0 {
        return Err(Error::InvalidConfig("synthetic dims and counts must be positive".to_owned()));
    }
    let params = SyntheticParams::solve(cfg.audio_bayes, cfg.video_bayes, cfg.joint_bayes)?;
    let mut rng = seed::rng(seed::derive(cfg.seed, "synthetic", 0));
    let ua = unit_vector(cfg.audio_dim, &mut rng);
    let uv = unit_vector(cfg.video_dim, &mut rng);
    let mut entries = Vec::new();
    let mut records = Vec::new();
    for (split, per_class, tag) in [(Split::Train, cfg.train_per_class, "tr"), (Split::Validation, cfg.val_per_class, "va")] {
        for i in 0..2 * per_class {
            let label = if i % 2 == 0 { Label::Violent } else { Label::NonViolent };
            let s = if label == Label::Violent { 1.0 } else { -1.0 };
            let id = format!("syn_{tag}_{i:05}");
            let (za, zv) = params.sample_signal(s, &mut rng);
            records.push(EmbeddingRecord::new(id.clone(), Modality::Audio, embed(za, &ua, &mut rng)));
            records.push(EmbeddingRecord::new(id.clone(), Modality::Video, embed(zv, &uv, &mut rng)));
            let mut entry = ClipEntry::original(id.clone(), format!("synthetic/{id}"), label, 1.0);
            entry.split = split;
            entries.push(entry);
        }
    }
    Ok(SyntheticBenchmark {
        params,
        manifest: ClipManifest::new(entries)?,
        store: EmbeddingStore::from_records(records)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solved_parameters_hit_targets() {
        let p = SyntheticParams::solve(0.80, 0.91, 0.97).unwrap();
        let (a, v, j) = p.bayes_accuracies();
        assert!((a - 0.80).abs() < 1e-9);
        assert!((v - 0.91).abs() < 1e-9);
        assert!((j - 0.97).abs() < 1e-9);
        assert!((p.rho + 0.308).abs() < 0.01, "rho = {}", p.rho);
    }

    /// Monte Carlo oracle: apply the likelihood-ratio rule for two
    /// correlated Gaussians and count hits.
    #[test]
    fn monte_carlo_matches_bayes_rates() {
        let p = SyntheticParams::solve(0.80, 0.91, 0.97).unwrap();
        let mut rng = seed::rng(99);
        let n = 200_000;
        let (mut hit_a, mut hit_v, mut hit_j) = (0usize, 0usize, 0usize);
        let (a, v, r) = (p.mu_audio, p.mu_video, p.rho);
        // Sigma^{-1} mu up to a positive factor.
        let (wa, wv) = (a - r * v, v - r * a);
        for i in 0..n {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            let (za, zv) = p.sample_signal(s, &mut rng);
            hit_a += usize::from(za * s > 0.0);
            hit_v += usize::from(zv * s > 0.0);
            hit_j += usize::from((wa * za + wv * zv) * s > 0.0);
        }
        let f = |h: usize| h as f64 / n as f64;
        assert!((f(hit_a) - 0.80).abs() < 0.005);
        assert!((f(hit_v) - 0.91).abs() < 0.005);
        assert!((f(hit_j) - 0.97).abs() < 0.005);
    }

    #[test]
    fn unreachable_targets_rejected() {
        assert!(SyntheticParams::solve(0.8, 0.91, 0.6).is_err());
        assert!(SyntheticParams::solve(0.4, 0.91, 0.97).is_err());
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = SyntheticConfig {
            train_per_class: 5,
            val_per_class: 3,
            ..SyntheticConfig::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.manifest, b.manifest);
        assert_eq!(a.manifest.len(), 16);
        assert_eq!(a.store.len(), 32);
        assert_eq!(a.store.dim(Modality::Video), Some(32));
        let id = &a.manifest.entries()[0].id;
        assert_eq!(a.store.get(Modality::Audio, id), b.store.get(Modality::Audio, id));
    }
}
