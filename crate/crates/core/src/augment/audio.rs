use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioOp, AugmentationRanges, AugmentationSpec, FilterKind, OpList};
use crate::audio::resample::resample_to_len;
use crate::audio::stft::periodic_hann;
use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::seed;

const PV_FFT: usize = 1024;
const PV_HOP: usize = 256;

pub fn augment_audio(w: &Waveform, spec: &AugmentationSpec) -> Result<Waveform> {
    augment_audio_with(w, spec, &AugmentationRanges::default())
}

/// Apply `spec` to a mono waveform. Sample count and rate are preserved and
/// the result is clamped to `[-1, 1]` after every operator.
pub fn augment_audio_with(w: &Waveform, spec: &AugmentationSpec, ranges: &AugmentationRanges) -> Result<Waveform> {
    let OpList::Audio(ops) = &spec.ops else {
        return Err(Error::InvalidConfig("video spec applied to audio".to_owned()));
    };
    if w.channels() != 1 {
        return Err(Error::UnsupportedChannels(w.channels()));
    }
    spec.validate(ranges)?;
    let rate = f64::from(w.sample_rate_hz());
    let mut x = w.samples().to_vec();
    for op in ops {
        x = match *op {
            AudioOp::PitchShift { semitones } => pitch_shift(&x, semitones),
            AudioOp::AdditiveNoise { snr_db, seed: s } => {
                let mut rng = seed::rng(seed::derive(spec.seed, "audio-noise", s));
                add_noise(&x, snr_db, &mut rng)
            }
            AudioOp::Volume { gain } => x.iter().map(|v| v * gain).collect(),
            AudioOp::FrequencyFilter { kind, cutoff_hz } => first_order_filter(&x, kind, cutoff_hz, rate),
        };
        x.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    }
    Ok(Waveform::mono_unchecked(x, w.sample_rate_hz()))
}

fn add_noise(x: &[f64], snr_db: f64, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    let power = x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    if sigma == 0.0 {
        return x.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    x.iter().map(|v| v + normal.sample(rng)).collect()
}

/// One-pole RC low-pass or high-pass.
pub fn first_order_filter(x: &[f64], kind: FilterKind, cutoff_hz: f64, rate: f64) -> Vec<f64> {
    let dt = 1.0 / rate;
    let rc = 1.0 / (2.0 * PI * cutoff_hz);
    let mut out = Vec::with_capacity(x.len());
    match kind {
        FilterKind::LowPass => {
            let a = dt / (rc + dt);
            let mut y = 0.0;
            for &v in x {
                y += a * (v - y);
                out.push(y);
            }
        }
        FilterKind::HighPass => {
            let a = rc / (rc + dt);
            let (mut y, mut prev) = (0.0, 0.0);
            for &v in x {
                y = a * (y + v - prev);
                prev = v;
                out.push(y);
            }
        }
    }
    out
}

fn wrap_phase(p: f64) -> f64 {
    p - 2.0 * PI * (p / (2.0 * PI)).round()
}

/// Phase-vocoder time stretch: the output is about `factor` times longer
/// with the same pitch.
pub fn time_stretch(x: &[f64], factor: f64) -> Vec<f64> {
    let n = x.len();
    let pad = PV_FFT / 2;
    let mut padded = vec![0.0; n + 2 * pad + PV_FFT];
    padded[pad..pad + n].copy_from_slice(x);
    let n_frames = (n + 2 * pad).saturating_sub(PV_FFT) / PV_HOP + 1;

    let window = periodic_hann(PV_FFT);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(PV_FFT);
    let inv = planner.plan_fft_inverse(PV_FFT);
    let bins = PV_FFT / 2 + 1;

    let spectra: Vec<Vec<Complex<f64>>> = (0..n_frames)
        .map(|f| {
            let mut buf: Vec<Complex<f64>> = padded[f * PV_HOP..f * PV_HOP + PV_FFT]
                .iter()
                .zip(&window)
                .map(|(s, w)| Complex::new(s * w, 0.0))
                .collect();
            fwd.process(&mut buf);
            buf.truncate(bins);
            buf
        })
        .collect();

    let advance: Vec<f64> = (0..bins)
        .map(|k| 2.0 * PI * k as f64 * PV_HOP as f64 / PV_FFT as f64)
        .collect();
    let mut phase: Vec<f64> = spectra[0].iter().map(|c| c.arg()).collect();
    let out_frames = ((n_frames as f64 - 1.0) * factor).floor() as usize + 1;
    let out_len = (out_frames - 1) * PV_HOP + PV_FFT;
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut buf = vec![Complex::new(0.0, 0.0); PV_FFT];

    for t in 0..out_frames {
        let pos = t as f64 / factor;
        let i = (pos.floor() as usize).min(n_frames - 1);
        let j = (i + 1).min(n_frames - 1);
        let frac = pos - i as f64;
        for k in 0..bins {
            let mag = (1.0 - frac) * spectra[i][k].norm() + frac * spectra[j][k].norm();
            buf[k] = Complex::from_polar(mag, phase[k]);
            let delta = spectra[j][k].arg() - spectra[i][k].arg() - advance[k];
            phase[k] += advance[k] + wrap_phase(delta);
        }
        for k in 1..PV_FFT / 2 {
            buf[PV_FFT - k] = buf[k].conj();
        }
        inv.process(&mut buf);
        let start = t * PV_HOP;
        for s in 0..PV_FFT {
            let w = window[s];
            out[start + s] += buf[s].re / PV_FFT as f64 * w;
            norm[start + s] += w * w;
        }
    }
    let target = (n as f64 * factor).round() as usize;
    out.iter()
        .zip(&norm)
        .skip(pad)
        .take(target)
        .map(|(v, w)| if *w > 1e-8 { v / w } else { 0.0 })
        .collect()
}

/// Shift pitch by `semitones` keeping the sample count: stretch by the
/// pitch ratio, then resample back to the original length.
pub fn pitch_shift(x: &[f64], semitones: f64) -> Vec<f64> {
    if semitones == 0.0 || x.is_empty() {
        return x.to_vec();
    }
    let ratio = 2f64.powf(semitones / 12.0);
    let stretched = time_stretch(x, ratio);
    resample_to_len(&stretched, x.len())
}
