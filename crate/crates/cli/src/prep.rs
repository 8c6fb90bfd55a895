//! Preprocessing, augmentation and embedding commands.

use std::path::{Path, PathBuf};
use std::process::Command;

use avfusion::audio::{frame_examples, read_wav, resample_to_16k_mono, LogMelFrontend};
use avfusion::augment::{augment_audio, augment_video, expand_dataset};
use avfusion::data::{load_manifest, write_embeddings, ClipEntry, ClipManifest, EmbeddingRecord, EmbeddingStore, Provenance};
use avfusion::fusion::{embed_clip, ClipInput, Encoder};
use avfusion::tensor_io::{read_frame_stack, read_logmel, write_frame_stack, write_logmel, FRAMES_EXTENSION, LOGMEL_EXTENSION};
use avfusion::video::sample_frames;
use avfusion::video::source::{load_clip_frames, DEFAULT_FPS};
use avfusion::{Error, ExperimentConfig, Modality, Result};
use rayon::prelude::*;

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))
}

/// Media path of the clip `entry` derives from.
fn source_media(manifest: &ClipManifest, base: &Path, entry: &ClipEntry) -> Result<PathBuf> {
    let source = manifest.get(entry.source_id()).ok_or_else(|| Error::DanglingParent {
        id: entry.id.clone(),
        parent: entry.source_id().to_owned(),
    })?;
    Ok(base.join(&source.media_path))
}

fn augmentation(entry: &ClipEntry) -> Option<&avfusion::augment::ClipAugmentation> {
    match &entry.provenance {
        Provenance::Augmented { spec: Some(spec), .. } => Some(spec),
        _ => None,
    }
}

pub fn prep_audio(manifest_path: &Path, out: &Path) -> Result<()> {
    let manifest = load_manifest(manifest_path)?;
    let base = manifest_dir(manifest_path);
    ensure_dir(out)?;
    let frontend = LogMelFrontend::new();
    let frames: Vec<usize> = manifest
        .entries()
        .par_iter()
        .map(|entry| {
            let media = source_media(&manifest, &base, entry)?;
            let mut wave = resample_to_16k_mono(&read_wav(&media)?)?;
            if let Some(aug) = augmentation(entry) {
                wave = augment_audio(&wave, &aug.audio)?;
            }
            let logmel = frontend.log_mel(&wave)?;
            let path = out.join(format!("{}.{LOGMEL_EXTENSION}", entry.id));
            write_logmel(&path, &entry.id, &logmel)?;
            Ok(logmel.nrows())
        })
        .collect::<Result<_>>()?;
    println!("wrote {} log-mel files ({} frames)", frames.len(), frames.iter().sum::<usize>());
    Ok(())
}

fn decode_with_ffmpeg(ffmpeg: &Path, media: &Path, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let status = Command::new(ffmpeg)
        .args(["-v", "error", "-nostdin", "-i"])
        .arg(media)
        .args(["-vf", &format!("fps={DEFAULT_FPS}")])
        .arg(dir.join("%06d.png"))
        .status()
        .map_err(|e| Error::file(ffmpeg, e))?;
    if status.success() {
        Ok(())
    } else {
        Err(Error::MissingArtifacts(format!("{} could not decode {}", ffmpeg.display(), media.display())))
    }
}

pub fn prep_video(manifest_path: &Path, frames_dir: &Path, out: &Path, count: usize, ffmpeg: Option<&Path>) -> Result<()> {
    let manifest = load_manifest(manifest_path)?;
    let base = manifest_dir(manifest_path);
    ensure_dir(out)?;
    if let Some(ffmpeg) = ffmpeg {
        for entry in manifest.originals() {
            let dir = frames_dir.join(&entry.id);
            let raw = frames_dir.join(format!("{}.rgb", entry.id));
            if !dir.is_dir() && !raw.is_file() {
                decode_with_ffmpeg(ffmpeg, &base.join(&entry.media_path), &dir)?;
            }
        }
    }
    manifest
        .entries()
        .par_iter()
        .map(|entry| {
            let seq = load_clip_frames(frames_dir, entry.source_id(), &entry.id)?;
            let mut stack = sample_frames(&seq, count)?;
            if let Some(aug) = augmentation(entry) {
                stack = augment_video(&stack, &aug.video)?;
            }
            write_frame_stack(&out.join(format!("{}.{FRAMES_EXTENSION}", entry.id)), &stack)
        })
        .collect::<Result<()>>()?;
    println!("wrote {} frame stacks of {count} frames", manifest.len());
    Ok(())
}

pub fn augment(manifest_path: &Path, out: &Path, copies: Option<usize>, cfg: &ExperimentConfig) -> Result<()> {
    let manifest = load_manifest(manifest_path)?;
    let mut policy = cfg.augmentation.clone();
    if let Some(c) = copies {
        policy.copies_per_clip = c;
    }
    let expanded = expand_dataset(&manifest, &policy, cfg.seed)?;
    expanded.save(out)?;
    println!("{} clips -> {} entries", manifest.len(), expanded.len());
    Ok(())
}

pub enum EmbedSource<'a> {
    Toy(&'a Path),
    File(&'a Path),
}

pub fn embed(
    manifest_path: &Path,
    modality: Modality,
    source: EmbedSource<'_>,
    dim: Option<usize>,
    out: &Path,
    cfg: &ExperimentConfig,
) -> Result<()> {
    let manifest = load_manifest(manifest_path)?;
    let (encoder, tensors) = match source {
        EmbedSource::Toy(dir) => {
            let encoder = match modality {
                Modality::Audio => Encoder::toy_audio(dim.unwrap_or(cfg.encoder.audio_dim), cfg.seed),
                Modality::Video => Encoder::toy_video(dim.unwrap_or(cfg.encoder.video_dim), cfg.seed),
            };
            (encoder, Some(dir))
        }
        EmbedSource::File(file) => (Encoder::file_backed(modality, EmbeddingStore::load(file)?), None),
    };
    let records = manifest
        .entries()
        .par_iter()
        .map(|entry| {
            let values = match (tensors, modality) {
                (None, _) => embed_clip(&encoder, ClipInput::Stored(&entry.id))?,
                (Some(dir), Modality::Audio) => {
                    let (_, logmel) = read_logmel(&dir.join(format!("{}.{LOGMEL_EXTENSION}", entry.id)))?;
                    let examples = frame_examples(logmel.view(), &entry.id)?;
                    embed_clip(&encoder, ClipInput::Audio(&examples))?
                }
                (Some(dir), Modality::Video) => {
                    let stack = read_frame_stack(&dir.join(format!("{}.{FRAMES_EXTENSION}", entry.id)))?;
                    embed_clip(&encoder, ClipInput::Video(&stack))?
                }
            };
            Ok(EmbeddingRecord::new(entry.id.clone(), modality, values))
        })
        .collect::<Result<Vec<_>>>()?;
    write_embeddings(&records, out)?;
    println!("wrote {} {} embeddings", records.len(), modality.as_str());
    Ok(())
}
