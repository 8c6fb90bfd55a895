//! Frame sources: directories of still images and raw RGB dumps.
//!
//! A raw dump is `"AVRF" | u32 width | u32 height | u32 count | f32 fps`
//! followed by `count` frames of `height x width x 3` bytes, all integers
//! little-endian.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use image::RgbImage;

use super::RawFrameSequence;
use crate::error::{Error, Result};

pub const RAW_MAGIC: &[u8; 4] = b"AVRF";
pub const DEFAULT_FPS: f64 = 25.0;

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "ppm"];

/// Image files in `dir`, sorted by file name.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::file(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_frame_dir(dir: &Path, fps: f64, clip_id: &str) -> Result<RawFrameSequence> {
    let frames = list_frame_files(dir)?
        .iter()
        .map(|p| Ok(image::open(p)?.to_rgb8()))
        .collect::<Result<Vec<_>>>()?;
    RawFrameSequence::new(frames, fps, clip_id)
}

pub fn read_raw_frames(path: &Path, clip_id: &str) -> Result<RawFrameSequence> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::TruncatedFile)?;
    if &magic != RAW_MAGIC {
        return Err(Error::CorruptHeader(format!("bad raw frame magic {magic:?}")));
    }
    let width = r.read_u32::<LittleEndian>().map_err(|_| Error::TruncatedFile)?;
    let height = r.read_u32::<LittleEndian>().map_err(|_| Error::TruncatedFile)?;
    let count = r.read_u32::<LittleEndian>().map_err(|_| Error::TruncatedFile)?;
    let fps = r.read_f32::<LittleEndian>().map_err(|_| Error::TruncatedFile)?;
    let frame_bytes = width as usize * height as usize * 3;
    let mut frames = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut buf = vec![0u8; frame_bytes];
        r.read_exact(&mut buf).map_err(|_| Error::TruncatedFile)?;
        frames.push(RgbImage::from_raw(width, height, buf).expect("buffer sized from header"));
    }
    RawFrameSequence::new(frames, f64::from(fps), clip_id)
}

pub fn write_raw_frames(path: &Path, seq: &RawFrameSequence) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    let mut w = BufWriter::new(file);
    let (width, height) = seq.frames[0].dimensions();
    w.write_all(RAW_MAGIC)?;
    w.write_u32::<LittleEndian>(width)?;
    w.write_u32::<LittleEndian>(height)?;
    w.write_u32::<LittleEndian>(seq.frames.len() as u32)?;
    w.write_f32::<LittleEndian>(seq.fps as f32)?;
    for f in &seq.frames {
        w.write_all(f.as_raw())?;
    }
    w.flush()?;
    Ok(())
}

/// Locate frames for `source_id` under `frames_dir`: either a raw dump
/// `<source_id>.rgb` or a directory `<source_id>/` of images.
pub fn load_clip_frames(frames_dir: &Path, source_id: &str, clip_id: &str) -> Result<RawFrameSequence> {
    let raw = frames_dir.join(format!("{source_id}.rgb"));
    if raw.is_file() {
        return read_raw_frames(&raw, clip_id);
    }
    let dir = frames_dir.join(source_id);
    if dir.is_dir() {
        return load_frame_dir(&dir, DEFAULT_FPS, clip_id);
    }
    Err(Error::MissingArtifacts(format!(
        "no frames for `{source_id}` in {}",
        frames_dir.display()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames = (0..3)
            .map(|i| RgbImage::from_fn(5, 4, |x, y| image::Rgb([i, x as u8, y as u8])))
            .collect();
        let seq = RawFrameSequence::new(frames, 30.0, "c1").unwrap();
        let path = dir.path().join("c1.rgb");
        write_raw_frames(&path, &seq).unwrap();
        let back = load_clip_frames(dir.path(), "c1", "c1").unwrap();
        assert_eq!(back.frames, seq.frames);
        assert_eq!(back.fps, 30.0);
    }

    #[test]
    fn image_directory_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let clip = dir.path().join("c2");
        fs::create_dir(&clip).unwrap();
        for (name, v) in [("002.png", 2u8), ("001.png", 1), ("010.png", 10)] {
            RgbImage::from_pixel(3, 3, image::Rgb([v, v, v]))
                .save(clip.join(name))
                .unwrap();
        }
        fs::write(clip.join("notes.txt"), "ignored").unwrap();
        let seq = load_clip_frames(dir.path(), "c2", "c2_aug1").unwrap();
        let firsts: Vec<u8> = seq.frames.iter().map(|f| f.get_pixel(0, 0)[0]).collect();
        assert_eq!(firsts, vec![1, 2, 10]);
        assert_eq!(seq.clip_id, "c2_aug1");
        assert!(load_clip_frames(dir.path(), "nope", "nope").is_err());
    }
}
