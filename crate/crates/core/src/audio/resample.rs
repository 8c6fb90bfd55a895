//! Band-limited sample-rate conversion.
//!
//! Rational-ratio conversion uses a polyphase Kaiser-windowed sinc filter:
//! for a conversion from `in_rate` to `out_rate` with `g = gcd`, the filter
//! is tabulated at `out_rate / g` fractional phases, each phase holding
//! `2 * ZERO_CROSSINGS / (2 * cutoff)` taps normalized to unit DC gain.

use std::f64::consts::PI;

use super::waveform::Waveform;
use crate::error::{Error, Result};

pub const TARGET_RATE_HZ: u32 = 16_000;
pub const MIN_INPUT_RATE_HZ: u32 = 8_000;

/// Sinc zero crossings on each side of the kernel center.
pub const ZERO_CROSSINGS: usize = 16;
/// Cutoff as a fraction of the lower Nyquist frequency.
pub const ROLLOFF: f64 = 0.945;
pub const KAISER_BETA: f64 = 8.6;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Low-pass kernel with cutoff `cutoff` (cycles per input sample), evaluated
/// at offset `t` input samples from its center.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    cutoff: f64,
    half_width: f64,
    i0_beta: f64,
}

impl Kernel {
    fn new(cutoff: f64) -> Self {
        Kernel {
            cutoff,
            half_width: ZERO_CROSSINGS as f64 / (2.0 * cutoff),
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let r = t / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        2.0 * self.cutoff * sinc(2.0 * self.cutoff * t) * window
    }

    fn taps_each_side(&self) -> usize {
        self.half_width.ceil() as usize
    }
}

/// Rational resampler, reusable across signals with the same rate pair.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: u64,
    down: u64,
    /// Taps per phase, left-most input sample first.
    phases: Vec<Vec<f64>>,
    taps_each_side: usize,
    in_rate: u32,
    out_rate: u32,
}

impl Resampler {
    pub fn new(in_rate: u32, out_rate: u32) -> Result<Self> {
        if in_rate == 0 {
            return Err(Error::UnsupportedRate(in_rate));
        }
        if out_rate == 0 {
            return Err(Error::UnsupportedRate(out_rate));
        }
        let g = gcd(u64::from(in_rate), u64::from(out_rate));
        let up = u64::from(out_rate) / g;
        let down = u64::from(in_rate) / g;
        let cutoff = 0.5 * ROLLOFF * (up as f64 / down as f64).min(1.0);
        let kernel = Kernel::new(cutoff);
        let k = kernel.taps_each_side();
        let phases = (0..up)
            .map(|p| {
                let frac = p as f64 / up as f64;
                // Output time i + frac sees input samples i - k + 1 ..= i + k.
                let mut taps: Vec<f64> = (0..2 * k)
                    .map(|j| kernel.eval(frac + (k as f64 - 1.0) - j as f64))
                    .collect();
                let sum: f64 = taps.iter().sum();
                taps.iter_mut().for_each(|t| *t /= sum);
                taps
            })
            .collect();
        Ok(Resampler {
            up,
            down,
            phases,
            taps_each_side: k,
            in_rate,
            out_rate,
        })
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        ((input_len as f64) * f64::from(self.out_rate) / f64::from(self.in_rate)).round() as usize
    }

    /// Resample a single channel.
    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        if self.up == self.down {
            return input.to_vec();
        }
        let n_out = self.output_len(input.len());
        let k = self.taps_each_side as i64;
        let n_in = input.len() as i64;
        (0..n_out as u64)
            .map(|n| {
                let pos = n * self.down;
                let base = (pos / self.up) as i64;
                let taps = &self.phases[(pos % self.up) as usize];
                let start = base - k + 1;
                let mut acc = 0.0;
                for (j, &h) in taps.iter().enumerate() {
                    let idx = start + j as i64;
                    if (0..n_in).contains(&idx) {
                        acc += h * input[idx as usize];
                    }
                }
                acc
            })
            .collect()
    }

    /// Samples at either end of the output affected by zero padding.
    pub fn edge_len(&self) -> usize {
        let in_to_out = f64::from(self.out_rate) / f64::from(self.in_rate);
        (self.taps_each_side as f64 * in_to_out).ceil() as usize + 1
    }
}

/// Mix to mono and convert to 16 kHz. A 16 kHz mono input is returned as is.
pub fn resample_to_16k_mono(w: &Waveform) -> Result<Waveform> {
    if w.is_empty() {
        return Err(Error::EmptyInput);
    }
    if w.sample_rate_hz() < MIN_INPUT_RATE_HZ {
        return Err(Error::UnsupportedRate(w.sample_rate_hz()));
    }
    let mono = w.to_mono();
    if mono.sample_rate_hz() == TARGET_RATE_HZ {
        return Ok(mono);
    }
    let resampler = Resampler::new(mono.sample_rate_hz(), TARGET_RATE_HZ)?;
    Ok(Waveform::mono_unchecked(
        resampler.process(mono.samples()),
        TARGET_RATE_HZ,
    ))
}

/// Stretch or squeeze `input` to exactly `out_len` samples with a
/// windowed-sinc interpolator. The content is band-limited to the lower of
/// the two implied rates.
pub fn resample_to_len(input: &[f64], out_len: usize) -> Vec<f64> {
    if input.is_empty() || out_len == 0 {
        return vec![0.0; out_len];
    }
    if out_len == input.len() {
        return input.to_vec();
    }
    let step = input.len() as f64 / out_len as f64;
    let cutoff = 0.5 * ROLLOFF * (1.0 / step).min(1.0);
    let kernel = Kernel::new(cutoff);
    let k = kernel.taps_each_side() as i64;
    let n_in = input.len() as i64;
    (0..out_len)
        .map(|n| {
            let t = n as f64 * step;
            let base = t.floor() as i64;
            let mut acc = 0.0;
            let mut norm = 0.0;
            for idx in (base - k + 1)..=(base + k) {
                let h = kernel.eval(t - idx as f64);
                norm += h;
                if (0..n_in).contains(&idx) {
                    acc += h * input[idx as usize];
                }
            }
            acc / norm
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| (2.0 * PI * freq * n as f64 / f64::from(rate)).sin())
            .collect()
    }

    #[test]
    fn bessel_reference_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(8.6) - 750.461_159_563_165_9).abs() / 750.5 < 1e-12);
    }

    #[test]
    fn identity_at_16k() {
        let w = Waveform::mono(sine(440.0, 16000, 1000), 16000).unwrap();
        assert_eq!(resample_to_16k_mono(&w).unwrap(), w);
    }

    #[test]
    fn sine_48k_matches_analytic_sine() {
        let w = Waveform::mono(sine(440.0, 48000, 48000), 48000).unwrap();
        let out = resample_to_16k_mono(&w).unwrap();
        assert_eq!(out.len(), 16000);
        let expected = sine(440.0, 16000, 16000);
        let edge = Resampler::new(48000, 16000).unwrap().edge_len();
        let max_err = out.samples()[edge..16000 - edge]
            .iter()
            .zip(&expected[edge..16000 - edge])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-3, "max error {max_err}");
    }

    #[test]
    fn sine_44k1_matches_analytic_sine() {
        let w = Waveform::mono(sine(1000.0, 44100, 44100), 44100).unwrap();
        let out = resample_to_16k_mono(&w).unwrap();
        assert_eq!(out.len(), 16000);
        let expected = sine(1000.0, 16000, 16000);
        let edge = Resampler::new(44100, 16000).unwrap().edge_len();
        let max_err = out.samples()[edge..16000 - edge]
            .iter()
            .zip(&expected[edge..16000 - edge])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-3, "max error {max_err}");
    }

    #[test]
    fn anti_cancelling_stereo_is_silent() {
        let left = sine(300.0, 48000, 24000);
        let interleaved: Vec<f64> = left.iter().flat_map(|&l| [l, -l]).collect();
        let w = Waveform::new(interleaved, 48000, 2).unwrap();
        let out = resample_to_16k_mono(&w).unwrap();
        assert_eq!(out.len(), 8000);
        assert!(out.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn output_length_rounds() {
        let r = Resampler::new(22050, 16000).unwrap();
        assert_eq!(r.output_len(22050), 16000);
        assert_eq!(r.output_len(1001), (1001.0f64 * 16000.0 / 22050.0).round() as usize);
        assert_eq!(r.process(&vec![0.1; 1001]).len(), r.output_len(1001));
    }

    #[test]
    fn rejects_low_rates_and_empty_input() {
        let w = Waveform::mono(vec![0.0; 10], 4000).unwrap();
        assert!(matches!(resample_to_16k_mono(&w), Err(Error::UnsupportedRate(4000))));
        let empty = Waveform::mono(vec![], 16000).unwrap();
        assert!(matches!(resample_to_16k_mono(&empty), Err(Error::EmptyInput)));
    }

    #[test]
    fn stretch_to_len_preserves_low_frequencies() {
        let input = sine(200.0, 16000, 4000);
        let out = resample_to_len(&input, 5000);
        // 200 Hz at 16 kHz stretched by 1.25 becomes 160 Hz.
        let expected = sine(160.0, 16000, 5000);
        let err = out[200..4800]
            .iter()
            .zip(&expected[200..4800])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }
}
