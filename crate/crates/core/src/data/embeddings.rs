//! Binary embedding store.
//!
//! A store file is a sequence of one or more sections. Each section is
//!
//! ```text
//! "AVFE" | u32 version (=1) | u8 modality (0 audio, 1 video) | u32 dim | u64 count
//! count x ( u16 id_len | id bytes (UTF-8) | dim x f32 )
//! ```
//!
//! with every integer and float little-endian. Files written by a single
//! encoder contain exactly one section. Writing a mixed list emits one
//! section per maximal run of equal modality so record order survives a
//! round trip.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AVFE";
pub const VERSION: u32 = 1;
/// Bytes in one section header.
pub const SECTION_HEADER_LEN: u64 = 4 + 4 + 1 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Audio,
    Video,
}

impl Modality {
    pub fn code(self) -> u8 {
        match self {
            Modality::Audio => 0,
            Modality::Video => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Modality::Audio),
            1 => Some(Modality::Video),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Audio => "audio",
            Modality::Video => "video",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One clip's feature vector for one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub clip_id: String,
    pub modality: Modality,
    pub values: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn new(clip_id: impl Into<String>, modality: Modality, values: Vec<f32>) -> Self {
        EmbeddingRecord {
            clip_id: clip_id.into(),
            modality,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    fn encoded_len(&self) -> u64 {
        2 + self.clip_id.len() as u64 + 4 * self.values.len() as u64
    }
}

/// Check the store invariants: positive dims, finite values, one dim per
/// modality. Returns the per-modality dims.
fn validate(records: &[EmbeddingRecord]) -> Result<HashMap<Modality, usize>> {
    let mut dims: HashMap<Modality, usize> = HashMap::new();
    for r in records {
        if r.values.is_empty() {
            return Err(Error::DimMismatch {
                expected: 1,
                found: 0,
            });
        }
        if r.clip_id.is_empty() || r.clip_id.len() > usize::from(u16::MAX) {
            return Err(Error::CorruptHeader(format!(
                "clip id length {} out of range",
                r.clip_id.len()
            )));
        }
        if r.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} embedding of `{}`", r.modality, r.clip_id)));
        }
        let dim = *dims.entry(r.modality).or_insert(r.dim());
        if dim != r.dim() {
            return Err(Error::DimMismatch {
                expected: dim,
                found: r.dim(),
            });
        }
    }
    Ok(dims)
}

/// Size in bytes of the file [`write_embeddings`] produces for `records`.
pub fn encoded_size(records: &[EmbeddingRecord]) -> u64 {
    let sections = records
        .chunk_by(|a, b| a.modality == b.modality)
        .count() as u64;
    sections * SECTION_HEADER_LEN + records.iter().map(EmbeddingRecord::encoded_len).sum::<u64>()
}

pub fn encode_embeddings<W: Write>(records: &[EmbeddingRecord], mut out: W) -> Result<()> {
    validate(records)?;
    for run in records.chunk_by(|a, b| a.modality == b.modality) {
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(VERSION)?;
        out.write_u8(run[0].modality.code())?;
        out.write_u32::<LittleEndian>(run[0].dim() as u32)?;
        out.write_u64::<LittleEndian>(run.len() as u64)?;
        for r in run {
            out.write_u16::<LittleEndian>(r.clip_id.len() as u16)?;
            out.write_all(r.clip_id.as_bytes())?;
            for &v in &r.values {
                out.write_f32::<LittleEndian>(v)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn truncated(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::TruncatedFile
    } else {
        Error::Io(e)
    }
}

/// Reads up to 4 bytes; `Ok(None)` on a clean end of input.
fn read_magic<R: Read>(input: &mut R) -> Result<Option<[u8; 4]>> {
    let mut magic = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match input.read(&mut magic[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
    }
    match filled {
        0 => Ok(None),
        4 => Ok(Some(magic)),
        _ => Err(Error::TruncatedFile),
    }
}

pub fn decode_embeddings<R: Read>(mut input: R) -> Result<Vec<EmbeddingRecord>> {
    let mut records = Vec::new();
    while let Some(magic) = read_magic(&mut input)? {
        if &magic != MAGIC {
            return Err(Error::CorruptHeader(format!("bad magic {magic:?}")));
        }
        let version = input.read_u32::<LittleEndian>().map_err(truncated)?;
        if version != VERSION {
            return Err(Error::CorruptHeader(format!("unsupported version {version}")));
        }
        let code = input.read_u8().map_err(truncated)?;
        let modality = Modality::from_code(code)
            .ok_or_else(|| Error::CorruptHeader(format!("unknown modality code {code}")))?;
        let dim = input.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        if dim == 0 {
            return Err(Error::CorruptHeader("zero dimension".to_owned()));
        }
        let count = input.read_u64::<LittleEndian>().map_err(truncated)?;
        for _ in 0..count {
            let id_len = input.read_u16::<LittleEndian>().map_err(truncated)? as usize;
            let mut id = vec![0u8; id_len];
            input.read_exact(&mut id).map_err(truncated)?;
            let clip_id = String::from_utf8(id)
                .map_err(|_| Error::CorruptHeader("clip id is not UTF-8".to_owned()))?;
            let mut values = vec![0f32; dim];
            input
                .read_f32_into::<LittleEndian>(&mut values)
                .map_err(truncated)?;
            records.push(EmbeddingRecord {
                clip_id,
                modality,
                values,
            });
        }
    }
    validate(&records)?;
    Ok(records)
}

pub fn write_embeddings(records: &[EmbeddingRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    // Validate before touching the file so a rejected write leaves no debris.
    validate(records)?;
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    encode_embeddings(records, BufWriter::new(file))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<Vec<EmbeddingRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    decode_embeddings(BufReader::new(file))
}

/// In-memory index over embedding records, keyed by modality and clip id.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    dims: HashMap<Modality, usize>,
    vectors: HashMap<(Modality, String), Vec<f32>>,
}

impl EmbeddingStore {
    pub fn from_records(records: Vec<EmbeddingRecord>) -> Result<Self> {
        let dims = validate(&records)?;
        let mut vectors = HashMap::with_capacity(records.len());
        for r in records {
            if vectors.insert((r.modality, r.clip_id.clone()), r.values).is_some() {
                return Err(Error::DuplicateId(r.clip_id));
            }
        }
        Ok(EmbeddingStore { dims, vectors })
    }

    /// Merge another store into this one. Dims must agree per modality.
    pub fn extend(&mut self, other: EmbeddingStore) -> Result<()> {
        for (m, d) in other.dims {
            let dim = *self.dims.entry(m).or_insert(d);
            if dim != d {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: d,
                });
            }
        }
        for (k, v) in other.vectors {
            if self.vectors.contains_key(&k) {
                return Err(Error::DuplicateId(k.1));
            }
            self.vectors.insert(k, v);
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_records(read_embeddings(path)?)
    }

    pub fn dim(&self, modality: Modality) -> Option<usize> {
        self.dims.get(&modality).copied()
    }

    pub fn get(&self, modality: Modality, clip_id: &str) -> Option<&[f32]> {
        self.vectors
            .get(&(modality, clip_id.to_owned()))
            .map(Vec::as_slice)
    }

    pub fn require(&self, modality: Modality, clip_id: &str) -> Result<&[f32]> {
        self.get(modality, clip_id).ok_or_else(|| Error::MissingEmbedding {
            clip_id: clip_id.to_owned(),
            modality: modality.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(records: &[EmbeddingRecord]) -> Vec<EmbeddingRecord> {
        let mut buf = Vec::new();
        encode_embeddings(records, &mut buf).unwrap();
        assert_eq!(buf.len() as u64, encoded_size(records));
        decode_embeddings(buf.as_slice()).unwrap()
    }

    #[test]
    fn zero_vector_round_trips() {
        let r = vec![EmbeddingRecord::new("c1", Modality::Audio, vec![0.0; 128])];
        assert_eq!(roundtrip(&r), r);
    }

    #[test]
    fn nan_rejected_at_write() {
        let mut values = vec![0.0; 4];
        values[2] = f32::NAN;
        let r = vec![EmbeddingRecord::new("c1", Modality::Video, values)];
        let mut buf = Vec::new();
        assert!(matches!(encode_embeddings(&r, &mut buf), Err(Error::NonFinite(_))));
        assert!(buf.is_empty());
    }

    #[test]
    fn dim_mismatch_within_modality() {
        let r = vec![
            EmbeddingRecord::new("a", Modality::Audio, vec![1.0; 3]),
            EmbeddingRecord::new("b", Modality::Audio, vec![1.0; 4]),
        ];
        assert!(matches!(
            encode_embeddings(&r, Vec::new()),
            Err(Error::DimMismatch { expected: 3, found: 4 })
        ));
    }

    #[test]
    fn interleaved_modalities_keep_order() {
        let r = vec![
            EmbeddingRecord::new("a", Modality::Audio, vec![1.0, 2.0]),
            EmbeddingRecord::new("a", Modality::Video, vec![3.0; 5]),
            EmbeddingRecord::new("b", Modality::Audio, vec![-1.0, 0.5]),
        ];
        assert_eq!(roundtrip(&r), r);
    }

    #[test]
    fn empty_list_is_empty_file() {
        assert!(roundtrip(&[]).is_empty());
    }

    #[test]
    fn header_errors() {
        let r = vec![EmbeddingRecord::new("a", Modality::Audio, vec![1.0; 2])];
        let mut good = Vec::new();
        encode_embeddings(&r, &mut good).unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode_embeddings(bad_magic.as_slice()), Err(Error::CorruptHeader(_))));

        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert!(matches!(decode_embeddings(bad_version.as_slice()), Err(Error::CorruptHeader(_))));

        let mut bad_modality = good.clone();
        bad_modality[8] = 7;
        assert!(matches!(decode_embeddings(bad_modality.as_slice()), Err(Error::CorruptHeader(_))));

        for cut in [2, 10, good.len() - 1] {
            assert!(matches!(decode_embeddings(&good[..cut]), Err(Error::TruncatedFile)), "cut {cut}");
        }
    }

    #[test]
    fn store_lookup() {
        let store = EmbeddingStore::from_records(vec![
            EmbeddingRecord::new("a", Modality::Audio, vec![1.0, 2.0]),
            EmbeddingRecord::new("a", Modality::Video, vec![3.0; 5]),
        ])
        .unwrap();
        assert_eq!(store.dim(Modality::Video), Some(5));
        assert_eq!(store.get(Modality::Audio, "a"), Some(&[1.0f32, 2.0][..]));
        assert!(matches!(
            store.require(Modality::Audio, "zz"),
            Err(Error::MissingEmbedding { .. })
        ));
    }
}
