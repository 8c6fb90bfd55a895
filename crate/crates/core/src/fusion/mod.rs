//! Fusion heads over audio and video clip embeddings.
//!
//! Every head consumes the same pair of inputs `(a, v)` and emits two
//! logits (non-violent, violent):
//!
//! * intermediate: `joint(concat(a, v))`
//! * late: `combiner(concat(softmax(audio(a)), softmax(video(v))))`
//! * hybrid: late plus a third branch `softmax(joint(concat(a, v)))`
//! * video-only / audio-only: a single branch classifier.

pub mod encoder;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::nn::{self, GradientSet, Mlp, MlpCache, MlpGrads, Mode, Network, Real};

pub use encoder::{embed_clip, ClipInput, Encoder, EncoderKind, ToyProjection};

pub const CLASS_COUNT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Hybrid,
    Intermediate,
    Late,
    VideoOnly,
    AudioOnly,
}

impl Strategy {
    /// Report row order.
    pub const ALL: [Strategy; 5] = [
        Strategy::Hybrid,
        Strategy::Intermediate,
        Strategy::Late,
        Strategy::VideoOnly,
        Strategy::AudioOnly,
    ];

    pub fn code(self) -> u8 {
        match self {
            Strategy::Hybrid => 0,
            Strategy::Intermediate => 1,
            Strategy::Late => 2,
            Strategy::VideoOnly => 3,
            Strategy::AudioOnly => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Strategy::ALL.into_iter().find(|s| s.code() == code)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Hybrid => "hybrid",
            Strategy::Intermediate => "intermediate",
            Strategy::Late => "late",
            Strategy::VideoOnly => "video_only",
            Strategy::AudioOnly => "audio_only",
        }
    }

    /// Human-readable report label.
    pub fn title(self) -> &'static str {
        match self {
            Strategy::Hybrid => "Hybrid fusion",
            Strategy::Intermediate => "Intermediate fusion",
            Strategy::Late => "Late fusion",
            Strategy::VideoOnly => "Video only",
            Strategy::AudioOnly => "Audio only",
        }
    }

    fn has_audio(self) -> bool {
        matches!(self, Strategy::Hybrid | Strategy::Late | Strategy::AudioOnly)
    }

    fn has_video(self) -> bool {
        matches!(self, Strategy::Hybrid | Strategy::Late | Strategy::VideoOnly)
    }

    fn has_joint(self) -> bool {
        matches!(self, Strategy::Hybrid | Strategy::Intermediate)
    }

    fn combiner_inputs(self) -> Option<usize> {
        match self {
            Strategy::Hybrid => Some(3 * CLASS_COUNT),
            Strategy::Late => Some(2 * CLASS_COUNT),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s || k.as_str().replace('_', "-") == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

/// Hidden-layer widths of each sub-network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadConfig {
    pub joint_hidden: Vec<usize>,
    pub branch_hidden: Vec<usize>,
    pub combiner_hidden: Vec<usize>,
    pub dropout: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            joint_hidden: vec![256, 64],
            branch_hidden: vec![64],
            combiner_hidden: vec![16],
            dropout: 0.5,
        }
    }
}

impl HeadConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, widths) in [
            ("joint_hidden", &self.joint_hidden),
            ("branch_hidden", &self.branch_hidden),
            ("combiner_hidden", &self.combiner_hidden),
        ] {
            if widths.contains(&0) {
                return Err(Error::InvalidConfig(format!("{name} contains a zero width")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

fn sizes(input: usize, hidden: &[usize]) -> Vec<usize> {
    let mut v = Vec::with_capacity(hidden.len() + 2);
    v.push(input);
    v.extend_from_slice(hidden);
    v.push(CLASS_COUNT);
    v
}

/// A fusion classifier. Sub-networks share no parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionHead<T> {
    strategy: Strategy,
    audio_dim: usize,
    video_dim: usize,
    audio: Option<Mlp<T>>,
    video: Option<Mlp<T>>,
    joint: Option<Mlp<T>>,
    combiner: Option<Mlp<T>>,
}

#[derive(Debug, Clone)]
pub struct FusionCache<T> {
    audio: Option<MlpCache<T>>,
    video: Option<MlpCache<T>>,
    joint: Option<MlpCache<T>>,
    combiner: Option<MlpCache<T>>,
    /// Branch probabilities fed to the combiner, in input order.
    branch_probs: Vec<Array2<T>>,
}

impl<T: Real> FusionCache<T> {
    /// Dropout masks in the order a replay consumes them.
    pub fn masks(&self) -> Vec<Array2<T>> {
        [&self.audio, &self.video, &self.joint, &self.combiner]
            .into_iter()
            .flatten()
            .flat_map(|c| c.masks().cloned())
            .collect()
    }

    pub fn branch_probs(&self) -> &[Array2<T>] {
        &self.branch_probs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionGrads<T> {
    pub parts: Vec<MlpGrads<T>>,
}

impl<T: Real> GradientSet<T> for FusionGrads<T> {
    fn slices(&self) -> Vec<&[T]> {
        self.parts.iter().flat_map(|g| g.slices()).collect()
    }
}

/// Row-wise softmax.
pub fn softmax_rows<T: Real>(z: &Array2<T>) -> Array2<T> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let p = nn::softmax(&row.to_vec());
        row.iter_mut().zip(p).for_each(|(d, v)| *d = v);
    }
    out
}

/// Pulls a gradient with respect to softmax outputs back to the logits:
/// `p * (g - <g, p>)` per row.
fn softmax_backward<T: Real>(p: &Array2<T>, g: ArrayView2<'_, T>) -> Array2<T> {
    let mut out = Array2::zeros(p.raw_dim());
    for ((mut o, pr), gr) in out.rows_mut().into_iter().zip(p.rows()).zip(g.rows()) {
        let dot: T = pr.iter().zip(gr.iter()).map(|(&a, &b)| a * b).sum();
        for ((d, &pv), &gv) in o.iter_mut().zip(pr.iter()).zip(gr.iter()) {
            *d = pv * (gv - dot);
        }
    }
    out
}

impl<T: Real> FusionHead<T> {
    pub fn new(strategy: Strategy, audio_dim: usize, video_dim: usize, cfg: &HeadConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        if audio_dim == 0 || video_dim == 0 {
            return Err(Error::InvalidConfig("embedding dims must be positive".to_owned()));
        }
        let mut build = |on: bool, input: usize, hidden: &[usize]| -> Result<Option<Mlp<T>>> {
            on.then(|| Mlp::new(&sizes(input, hidden), cfg.dropout, rng)).transpose()
        };
        let audio = build(strategy.has_audio(), audio_dim, &cfg.branch_hidden)?;
        let video = build(strategy.has_video(), video_dim, &cfg.branch_hidden)?;
        let joint = build(strategy.has_joint(), audio_dim + video_dim, &cfg.joint_hidden)?;
        let combiner = match strategy.combiner_inputs() {
            Some(n) => build(true, n, &cfg.combiner_hidden)?,
            None => None,
        };
        Ok(FusionHead {
            strategy,
            audio_dim,
            video_dim,
            audio,
            video,
            joint,
            combiner,
        })
    }

    /// Assemble a head from sub-networks given in the order audio, video,
    /// joint, combiner (absent ones skipped).
    pub fn from_parts(strategy: Strategy, audio_dim: usize, video_dim: usize, nets: Vec<Mlp<T>>) -> Result<Self> {
        let mut it = nets.into_iter();
        let mut take = |on: bool, input: usize, what: &str| -> Result<Option<Mlp<T>>> {
            if !on {
                return Ok(None);
            }
            let net = it
                .next()
                .ok_or_else(|| Error::ShapeMismatch(format!("{strategy} head is missing its {what} network")))?;
            if net.input_dim() != input || net.output_dim() != CLASS_COUNT {
                return Err(Error::ShapeMismatch(format!(
                    "{what} network maps {} -> {}, expected {input} -> {CLASS_COUNT}",
                    net.input_dim(),
                    net.output_dim()
                )));
            }
            Ok(Some(net))
        };
        let audio = take(strategy.has_audio(), audio_dim, "audio")?;
        let video = take(strategy.has_video(), video_dim, "video")?;
        let joint = take(strategy.has_joint(), audio_dim + video_dim, "joint")?;
        let combiner = take(strategy.combiner_inputs().is_some(), strategy.combiner_inputs().unwrap_or(0), "combiner")?;
        if it.next().is_some() {
            return Err(Error::ShapeMismatch(format!("too many networks for a {strategy} head")));
        }
        Ok(FusionHead {
            strategy,
            audio_dim,
            video_dim,
            audio,
            video,
            joint,
            combiner,
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn audio_dim(&self) -> usize {
        self.audio_dim
    }

    pub fn video_dim(&self) -> usize {
        self.video_dim
    }

    /// Sub-networks in parameter order.
    pub fn nets(&self) -> Vec<&Mlp<T>> {
        [&self.audio, &self.video, &self.joint, &self.combiner]
            .into_iter()
            .flatten()
            .collect()
    }

    pub fn nets_mut(&mut self) -> Vec<&mut Mlp<T>> {
        [&mut self.audio, &mut self.video, &mut self.joint, &mut self.combiner]
            .into_iter()
            .flatten()
            .collect()
    }

    pub fn audio_net(&self) -> Option<&Mlp<T>> {
        self.audio.as_ref()
    }

    pub fn video_net(&self) -> Option<&Mlp<T>> {
        self.video.as_ref()
    }

    pub fn joint_net(&self) -> Option<&Mlp<T>> {
        self.joint.as_ref()
    }

    pub fn combiner_net(&self) -> Option<&Mlp<T>> {
        self.combiner.as_ref()
    }

    pub fn combiner_net_mut(&mut self) -> Option<&mut Mlp<T>> {
        self.combiner.as_mut()
    }

    pub fn param_count(&self) -> usize {
        self.nets().iter().map(|n| n.param_count()).sum()
    }

    pub fn cast<U: Real>(&self) -> FusionHead<U> {
        FusionHead {
            strategy: self.strategy,
            audio_dim: self.audio_dim,
            video_dim: self.video_dim,
            audio: self.audio.as_ref().map(Mlp::cast),
            video: self.video.as_ref().map(Mlp::cast),
            joint: self.joint.as_ref().map(Mlp::cast),
            combiner: self.combiner.as_ref().map(Mlp::cast),
        }
    }

    /// Logits for a batch of embedding pairs.
    pub fn logits(&self, a: ArrayView2<'_, T>, v: ArrayView2<'_, T>, mode: &mut Mode<'_, T>) -> Result<(Array2<T>, FusionCache<T>)> {
        if a.ncols() != self.audio_dim || v.ncols() != self.video_dim {
            return Err(Error::ShapeMismatch(format!(
                "head takes ({}, {}) dims, got ({}, {})",
                self.audio_dim,
                self.video_dim,
                a.ncols(),
                v.ncols()
            )));
        }
        if a.nrows() != v.nrows() {
            return Err(Error::ShapeMismatch("audio and video batches differ in size".to_owned()));
        }
        let mut cache = FusionCache {
            audio: None,
            video: None,
            joint: None,
            combiner: None,
            branch_probs: Vec::new(),
        };
        let mut outputs = Vec::new();
        if let Some(net) = &self.audio {
            let (z, c) = net.forward(a, mode)?;
            cache.audio = Some(c);
            outputs.push(z);
        }
        if let Some(net) = &self.video {
            let (z, c) = net.forward(v, mode)?;
            cache.video = Some(c);
            outputs.push(z);
        }
        if let Some(net) = &self.joint {
            let x = concatenate(Axis(1), &[a.view(), v.view()]).expect("row counts checked");
            let (z, c) = net.forward(x.view(), mode)?;
            cache.joint = Some(c);
            outputs.push(z);
        }
        match &self.combiner {
            None => {
                let z = outputs.pop().expect("every strategy has a branch");
                Ok((z, cache))
            }
            Some(net) => {
                cache.branch_probs = outputs.iter().map(softmax_rows).collect();
                let views: Vec<_> = cache.branch_probs.iter().map(|p| p.view()).collect();
                let x = concatenate(Axis(1), &views).expect("same row count");
                let (z, c) = net.forward(x.view(), mode)?;
                cache.combiner = Some(c);
                Ok((z, cache))
            }
        }
    }

    /// Class probabilities in evaluation mode.
    pub fn probabilities(&self, a: ArrayView2<'_, T>, v: ArrayView2<'_, T>) -> Result<Array2<T>> {
        let (z, _) = self.logits(a, v, &mut Mode::Eval)?;
        Ok(softmax_rows(&z))
    }
}

impl<T: Real> Network<T> for FusionHead<T> {
    type Cache = FusionCache<T>;
    type Grads = FusionGrads<T>;

    fn arity(&self) -> usize {
        2
    }

    fn forward(&self, inputs: &[ArrayView2<'_, T>], mode: &mut Mode<'_, T>) -> Result<(Array2<T>, Self::Cache)> {
        match inputs {
            [a, v] => self.logits(a.view(), v.view(), mode),
            _ => Err(Error::ShapeMismatch(format!("fusion head takes 2 inputs, got {}", inputs.len()))),
        }
    }

    fn backward(&self, cache: &Self::Cache, grad_logits: ArrayView2<'_, T>) -> Result<Self::Grads> {
        let branch = |net: &Option<Mlp<T>>, c: &Option<MlpCache<T>>, g: ArrayView2<'_, T>| -> Result<Option<MlpGrads<T>>> {
            match (net, c) {
                (Some(n), Some(c)) => Ok(Some(n.backward(c, g, false)?.0)),
                (None, None) => Ok(None),
                _ => Err(Error::StaleCache),
            }
        };
        let mut parts = Vec::new();
        match (&self.combiner, &cache.combiner) {
            (None, None) => {
                for (net, c) in [(&self.audio, &cache.audio), (&self.video, &cache.video), (&self.joint, &cache.joint)] {
                    parts.extend(branch(net, c, grad_logits)?);
                }
            }
            (Some(comb), Some(cc)) => {
                let (comb_grads, gin) = comb.backward(cc, grad_logits, true)?;
                let gin = gin.expect("input gradient requested");
                let mut k = 0;
                for (net, c) in [(&self.audio, &cache.audio), (&self.video, &cache.video), (&self.joint, &cache.joint)] {
                    if net.is_none() {
                        continue;
                    }
                    let p = cache.branch_probs.get(k).ok_or(Error::StaleCache)?;
                    let gp = gin.slice(s![.., k * CLASS_COUNT..(k + 1) * CLASS_COUNT]);
                    let gz = softmax_backward(p, gp);
                    parts.extend(branch(net, c, gz.view())?);
                    k += 1;
                }
                parts.push(comb_grads);
            }
            _ => return Err(Error::StaleCache),
        }
        Ok(FusionGrads { parts })
    }

    fn params(&self) -> Vec<&[T]> {
        self.nets().into_iter().flat_map(|n| n.param_slices()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut [T]> {
        self.nets_mut().into_iter().flat_map(|n| n.param_slices_mut()).collect()
    }
}

impl FusionHead<f32> {
    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = [self.audio_dim as u32, self.video_dim as u32];
        nn::write_checkpoint(path, self.strategy.code(), &meta, &self.nets())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = nn::read_checkpoint(path)?;
        let strategy = Strategy::from_code(ck.tag)
            .ok_or_else(|| Error::CorruptHeader(format!("unknown strategy tag {}", ck.tag)))?;
        let [audio_dim, video_dim] = ck.meta[..] else {
            return Err(Error::CorruptHeader("fusion checkpoint needs two dims".to_owned()));
        };
        FusionHead::from_parts(strategy, audio_dim as usize, video_dim as usize, ck.nets)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub clip_id: String,
    pub probabilities: [f64; CLASS_COUNT],
    pub predicted_label: Label,
}

impl Prediction {
    /// Argmax over class probabilities; an exact tie goes to non-violent.
    pub fn from_probabilities(clip_id: impl Into<String>, probabilities: [f64; CLASS_COUNT]) -> Self {
        let idx = nn::argmax(&probabilities);
        Prediction {
            clip_id: clip_id.into(),
            probabilities,
            predicted_label: Label::from_index(idx).expect("two classes"),
        }
    }
}

/// Evaluation-mode prediction for one clip from its two embeddings.
pub fn predict_clip<T: Real>(head: &FusionHead<T>, clip_id: &str, audio: &[T], video: &[T]) -> Result<Prediction> {
    let a = ArrayView2::from_shape((1, audio.len()), audio).expect("contiguous");
    let v = ArrayView2::from_shape((1, video.len()), video).expect("contiguous");
    let p = head.probabilities(a, v)?;
    let probs = [p[[0, 0]].to_f64().unwrap(), p[[0, 1]].to_f64().unwrap()];
    Ok(Prediction::from_probabilities(clip_id, probs))
}
