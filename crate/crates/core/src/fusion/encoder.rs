//! Clip encoders: stored embeddings or deterministic toy projections.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand_distr::{Distribution, Normal};

use crate::audio::{MelExample, EXAMPLE_FRAMES, NUM_MEL_BANDS};
use crate::data::{EmbeddingStore, Modality};
use crate::error::{Error, Result};
use crate::seed;
use crate::video::FrameStack;

/// Audio embedding width of the toy encoder.
pub const TOY_AUDIO_DIM: usize = 128;
/// Video embedding width of the toy encoder.
pub const TOY_VIDEO_DIM: usize = 1024;
/// Side of the spatial pooling grid used before the video projection.
pub const VIDEO_POOL_GRID: usize = 8;

/// Fixed Gaussian projection `y = P x` with entries `N(0, 1 / in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyProjection {
    pub matrix: Array2<f64>,
}

impl ToyProjection {
    pub fn new(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let normal = Normal::new(0.0, 1.0 / (input_dim as f64).sqrt()).expect("positive std");
        ToyProjection {
            matrix: Array2::from_shape_simple_fn((output_dim, input_dim), || normal.sample(&mut rng)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "projection takes {} values, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self.matrix.dot(&x))
    }
}

#[derive(Debug, Clone)]
pub enum EncoderKind {
    FileBacked(EmbeddingStore),
    ToyDeterministic(ToyProjection),
}

#[derive(Debug, Clone)]
pub struct Encoder {
    pub modality: Modality,
    pub kind: EncoderKind,
}

/// What an encoder is asked to embed.
#[derive(Debug, Clone, Copy)]
pub enum ClipInput<'a> {
    /// Look up a stored vector by clip id.
    Stored(&'a str),
    Audio(&'a [MelExample]),
    Video(&'a FrameStack),
}

impl Encoder {
    pub fn file_backed(modality: Modality, store: EmbeddingStore) -> Self {
        Encoder {
            modality,
            kind: EncoderKind::FileBacked(store),
        }
    }

    /// Seeded toy audio encoder: flattened 96 x 64 patch to `dim` values.
    pub fn toy_audio(dim: usize, seed: u64) -> Self {
        Encoder {
            modality: Modality::Audio,
            kind: EncoderKind::ToyDeterministic(ToyProjection::new(
                EXAMPLE_FRAMES * NUM_MEL_BANDS,
                dim,
                seed::derive(seed, "toy-audio-encoder", 0),
            )),
        }
    }

    /// Seeded toy video encoder: time average, 8 x 8 spatial average pool
    /// per channel, then a projection to `dim` values.
    pub fn toy_video(dim: usize, seed: u64) -> Self {
        Encoder {
            modality: Modality::Video,
            kind: EncoderKind::ToyDeterministic(ToyProjection::new(
                VIDEO_POOL_GRID * VIDEO_POOL_GRID * 3,
                dim,
                seed::derive(seed, "toy-video-encoder", 0),
            )),
        }
    }

    pub fn output_dim(&self) -> Option<usize> {
        match &self.kind {
            EncoderKind::FileBacked(store) => store.dim(self.modality),
            EncoderKind::ToyDeterministic(p) => Some(p.output_dim()),
        }
    }
}

/// Mean over time and over an 8 x 8 grid of spatial cells, per channel.
pub fn pool_frames(stack: &FrameStack) -> Result<Array1<f64>> {
    let (t, h, w, c) = stack.tensor.dim();
    if t == 0 {
        return Err(Error::EmptySequence);
    }
    if h < VIDEO_POOL_GRID || w < VIDEO_POOL_GRID || c != 3 {
        return Err(Error::ShapeMismatch(format!("cannot pool frames of shape {h}x{w}x{c}")));
    }
    let mean = stack.tensor.mapv(f64::from).mean_axis(Axis(0)).expect("t > 0");
    let g = VIDEO_POOL_GRID;
    let mut out = Array1::zeros(g * g * c);
    for gy in 0..g {
        let (y0, y1) = (gy * h / g, (gy + 1) * h / g);
        for gx in 0..g {
            let (x0, x1) = (gx * w / g, (gx + 1) * w / g);
            let cells = ((y1 - y0) * (x1 - x0)) as f64;
            for ch in 0..c {
                let sum: f64 = mean.slice(ndarray::s![y0..y1, x0..x1, ch]).sum();
                out[(gy * g + gx) * c + ch] = sum / cells;
            }
        }
    }
    Ok(out)
}

/// Embed one clip. Audio clips are the mean of their example embeddings.
pub fn embed_clip(encoder: &Encoder, input: ClipInput<'_>) -> Result<Vec<f32>> {
    let values = match (&encoder.kind, input) {
        (EncoderKind::FileBacked(store), ClipInput::Stored(id)) => return Ok(store.require(encoder.modality, id)?.to_vec()),
        (EncoderKind::FileBacked(_), _) => {
            return Err(Error::InvalidConfig("a file-backed encoder looks clips up by id".to_owned()))
        }
        (EncoderKind::ToyDeterministic(_), ClipInput::Stored(id)) => {
            return Err(Error::MissingEmbedding {
                clip_id: id.to_owned(),
                modality: encoder.modality.as_str().to_owned(),
            })
        }
        (EncoderKind::ToyDeterministic(p), ClipInput::Audio(examples)) if encoder.modality == Modality::Audio => {
            if examples.is_empty() {
                return Err(Error::EmptyInput);
            }
            let mut acc = Array1::<f64>::zeros(p.output_dim());
            for ex in examples {
                let flat = ex.patch.as_standard_layout();
                let flat = ArrayView1::from(flat.as_slice().expect("standard layout"));
                acc += &p.apply(flat)?;
            }
            acc / examples.len() as f64
        }
        (EncoderKind::ToyDeterministic(p), ClipInput::Video(stack)) if encoder.modality == Modality::Video => {
            p.apply(pool_frames(stack)?.view())?
        }
        _ => return Err(Error::ShapeMismatch(format!("input does not match the {} encoder", encoder.modality.as_str()))),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("embedding".to_owned()));
    }
    Ok(values.iter().map(|&v| v as f32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::mel::LOG_OFFSET;
    use crate::data::EmbeddingRecord;
    use ndarray::Array4;

    fn example(value: f64) -> MelExample {
        MelExample {
            patch: Array2::from_elem((EXAMPLE_FRAMES, NUM_MEL_BANDS), value),
            source_clip_id: "c".to_owned(),
            start_time_s: 0.0,
        }
    }

    #[test]
    fn file_backed_returns_stored_vector() {
        let values = vec![0.1f32, -2.5, 1e-30, 7.0];
        let store =
            EmbeddingStore::from_records(vec![EmbeddingRecord::new("clip", Modality::Video, values.clone())]).unwrap();
        let enc = Encoder::file_backed(Modality::Video, store);
        assert_eq!(embed_clip(&enc, ClipInput::Stored("clip")).unwrap(), values);
        assert!(matches!(
            embed_clip(&enc, ClipInput::Stored("other")),
            Err(Error::MissingEmbedding { .. })
        ));
    }

    #[test]
    fn silent_patch_matches_direct_multiply() {
        let enc = Encoder::toy_audio(TOY_AUDIO_DIM, 1);
        let silent = example(LOG_OFFSET.ln());
        let got = embed_clip(&enc, ClipInput::Audio(std::slice::from_ref(&silent))).unwrap();
        let EncoderKind::ToyDeterministic(p) = &enc.kind else { unreachable!() };
        for (i, g) in got.iter().enumerate() {
            let direct: f64 = (0..p.input_dim()).map(|j| p.matrix[[i, j]] * LOG_OFFSET.ln()).sum();
            assert!((f64::from(*g) - direct).abs() <= 1e-5 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn audio_clip_is_mean_of_examples() {
        let enc = Encoder::toy_audio(16, 2);
        let exs = [example(-1.0), example(0.5), example(2.0)];
        let each: Vec<Vec<f32>> = exs
            .iter()
            .map(|e| embed_clip(&enc, ClipInput::Audio(std::slice::from_ref(e))).unwrap())
            .collect();
        let mean = embed_clip(&enc, ClipInput::Audio(&exs)).unwrap();
        for k in 0..16 {
            let m = (each[0][k] + each[1][k] + each[2][k]) / 3.0;
            assert!((mean[k] - m).abs() < 1e-5);
        }
    }

    #[test]
    fn toy_video_is_pure() {
        let enc = Encoder::toy_video(32, 3);
        let stack = FrameStack {
            tensor: Array4::from_shape_fn((4, 16, 16, 3), |(t, y, x, c)| ((t + y * 3 + x * 7 + c) % 11) as f32 / 10.0),
            clip_id: "v".to_owned(),
        };
        let a = embed_clip(&enc, ClipInput::Video(&stack)).unwrap();
        let b = embed_clip(&enc, ClipInput::Video(&stack)).unwrap();
        assert_eq!(a.len(), 32);
        assert_eq!(a, b);
        assert!(embed_clip(&enc, ClipInput::Audio(&[example(0.0)])).is_err());
    }

    #[test]
    fn pooling_constant_frames() {
        let stack = FrameStack {
            tensor: Array4::from_elem((2, 24, 24, 3), 0.25f32),
            clip_id: "v".to_owned(),
        };
        assert!(pool_frames(&stack).unwrap().iter().all(|&v| (v - 0.25).abs() < 1e-12));
    }
}
