//! Preprocessed tensor files written by the frontends and read by encoders.
//!
//! Both formats are little-endian:
//!
//! ```text
//! log-mel:     "AVLM" | u32 version=1 | u16 id_len | id | u32 frames | u32 bands | f32 cells
//! frame stack: "AVFS" | u32 version=1 | u16 id_len | id | u32 T | u32 H | u32 W | u32 C | f32 cells
//! ```
//!
//! Cells are stored row-major (the last axis varies fastest).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array2, Array4};

use crate::error::{Error, Result};
use crate::video::FrameStack;

pub const LOGMEL_MAGIC: &[u8; 4] = b"AVLM";
pub const FRAMES_MAGIC: &[u8; 4] = b"AVFS";
pub const VERSION: u32 = 1;

pub const LOGMEL_EXTENSION: &str = "logmel";
pub const FRAMES_EXTENSION: &str = "frames";

fn eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::TruncatedFile
    } else {
        Error::Io(e)
    }
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], clip_id: &str, dims: &[usize]) -> Result<()> {
    w.write_all(magic)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    let id_len = u16::try_from(clip_id.len())
        .map_err(|_| Error::CorruptHeader("clip id too long".to_owned()))?;
    w.write_u16::<LittleEndian>(id_len)?;
    w.write_all(clip_id.as_bytes())?;
    for &d in dims {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4], ndims: usize) -> Result<(String, Vec<usize>)> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(eof)?;
    if &m != magic {
        return Err(Error::CorruptHeader(format!("bad magic {m:?}")));
    }
    let version = r.read_u32::<LittleEndian>().map_err(eof)?;
    if version != VERSION {
        return Err(Error::CorruptHeader(format!("unsupported version {version}")));
    }
    let id_len = r.read_u16::<LittleEndian>().map_err(eof)? as usize;
    let mut id = vec![0u8; id_len];
    r.read_exact(&mut id).map_err(eof)?;
    let clip_id =
        String::from_utf8(id).map_err(|_| Error::CorruptHeader("clip id is not UTF-8".to_owned()))?;
    let dims = (0..ndims)
        .map(|_| r.read_u32::<LittleEndian>().map(|d| d as usize).map_err(eof))
        .collect::<Result<Vec<_>>>()?;
    Ok((clip_id, dims))
}

pub fn encode_logmel<W: Write>(mut w: W, clip_id: &str, logmel: &Array2<f64>) -> Result<()> {
    let (frames, bands) = logmel.dim();
    write_header(&mut w, LOGMEL_MAGIC, clip_id, &[frames, bands])?;
    for &v in logmel.iter() {
        w.write_f32::<LittleEndian>(v as f32)?;
    }
    w.flush()?;
    Ok(())
}

pub fn decode_logmel<R: Read>(mut r: R) -> Result<(String, Array2<f64>)> {
    let (clip_id, dims) = read_header(&mut r, LOGMEL_MAGIC, 2)?;
    let mut cells = vec![0f32; dims[0] * dims[1]];
    r.read_f32_into::<LittleEndian>(&mut cells).map_err(eof)?;
    let values = cells.into_iter().map(f64::from).collect();
    let logmel = Array2::from_shape_vec((dims[0], dims[1]), values).expect("cell count matches header");
    Ok((clip_id, logmel))
}

pub fn write_logmel(path: &Path, clip_id: &str, logmel: &Array2<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    encode_logmel(BufWriter::new(file), clip_id, logmel)
}

pub fn read_logmel(path: &Path) -> Result<(String, Array2<f64>)> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    decode_logmel(BufReader::new(file))
}

pub fn encode_frame_stack<W: Write>(mut w: W, stack: &FrameStack) -> Result<()> {
    let (t, h, wd, c) = stack.tensor.dim();
    write_header(&mut w, FRAMES_MAGIC, &stack.clip_id, &[t, h, wd, c])?;
    for &v in stack.tensor.iter() {
        w.write_f32::<LittleEndian>(v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn decode_frame_stack<R: Read>(mut r: R) -> Result<FrameStack> {
    let (clip_id, d) = read_header(&mut r, FRAMES_MAGIC, 4)?;
    let mut cells = vec![0f32; d.iter().product()];
    r.read_f32_into::<LittleEndian>(&mut cells).map_err(eof)?;
    let tensor = Array4::from_shape_vec((d[0], d[1], d[2], d[3]), cells).expect("cell count matches header");
    Ok(FrameStack { tensor, clip_id })
}

pub fn write_frame_stack(path: &Path, stack: &FrameStack) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    encode_frame_stack(BufWriter::new(file), stack)
}

pub fn read_frame_stack(path: &Path) -> Result<FrameStack> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    decode_frame_stack(BufReader::new(file))
}
