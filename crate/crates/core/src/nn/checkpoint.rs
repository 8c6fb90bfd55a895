//! Binary model checkpoints.
//!
//! Layout (little-endian): magic `AVCK`, `u32` version, `u8` tag, `u32`
//! metadata length and that many `u32` values, `u32` network count; per network a `u32` layer count then per layer `u32`
//! inputs, `u32` outputs, `u8` activation, `f32` dropout rate; finally all
//! parameters as `f32` in [`Mlp::param_slices`] order.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Activation, Dense, Mlp};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AVCK";
pub const VERSION: u32 = 1;

/// Decoded checkpoint contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub tag: u8,
    pub meta: Vec<u32>,
    pub nets: Vec<Mlp<f32>>,
}

pub fn encode_checkpoint(tag: u8, meta: &[u32], nets: &[&Mlp<f32>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(VERSION).unwrap();
    out.write_u8(tag).unwrap();
    out.write_u32::<LittleEndian>(meta.len() as u32).unwrap();
    for &m in meta {
        out.write_u32::<LittleEndian>(m).unwrap();
    }
    out.write_u32::<LittleEndian>(nets.len() as u32).unwrap();
    for net in nets {
        out.write_u32::<LittleEndian>(net.layers().len() as u32).unwrap();
        for (layer, &rate) in net.layers().iter().zip(net.dropout_rates()) {
            out.write_u32::<LittleEndian>(layer.inputs() as u32).unwrap();
            out.write_u32::<LittleEndian>(layer.outputs() as u32).unwrap();
            out.write_u8(layer.activation.code()).unwrap();
            out.write_f32::<LittleEndian>(rate as f32).unwrap();
        }
    }
    for net in nets {
        for slice in net.param_slices() {
            for &v in slice {
                out.write_f32::<LittleEndian>(v).unwrap();
            }
        }
    }
    out
}

fn truncated(_: std::io::Error) -> Error {
    Error::TruncatedFile
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::CorruptHeader("not a checkpoint file".to_owned()));
    }
    let version = r.read_u32::<LittleEndian>().map_err(truncated)?;
    if version != VERSION {
        return Err(Error::CorruptHeader(format!("unsupported checkpoint version {version}")));
    }
    let tag = r.read_u8().map_err(truncated)?;
    let meta_len = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    if meta_len > bytes.len() / 4 {
        return Err(Error::TruncatedFile);
    }
    let meta = (0..meta_len)
        .map(|_| r.read_u32::<LittleEndian>().map_err(truncated))
        .collect::<Result<Vec<_>>>()?;
    let count = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let mut shapes = Vec::new();
    for _ in 0..count {
        let layers = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let mut net = Vec::new();
        for _ in 0..layers {
            let inputs = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
            let outputs = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
            let code = r.read_u8().map_err(truncated)?;
            let act = Activation::from_code(code)
                .ok_or_else(|| Error::CorruptHeader(format!("unknown activation code {code}")))?;
            let rate = r.read_f32::<LittleEndian>().map_err(truncated)?;
            if inputs == 0 || outputs == 0 || inputs > 1 << 24 || outputs > 1 << 24 {
                return Err(Error::CorruptHeader(format!("implausible layer shape {inputs}x{outputs}")));
            }
            net.push((inputs, outputs, act, rate as f64));
        }
        shapes.push(net);
    }
    let mut nets = Vec::with_capacity(count);
    for shape in shapes {
        let mut layers = Vec::with_capacity(shape.len());
        let mut rates = Vec::with_capacity(shape.len());
        for &(inputs, outputs, act, rate) in &shape {
            let mut layer = Dense::zeros(inputs, outputs, act);
            for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *v = r.read_f32::<LittleEndian>().map_err(truncated)?;
            }
            layers.push(layer);
            rates.push(rate);
        }
        let net = Mlp::from_layers(layers, rates).map_err(|e| Error::CorruptHeader(e.to_string()))?;
        nets.push(net);
    }
    if (r.position() as usize) != bytes.len() {
        return Err(Error::CorruptHeader("trailing bytes after parameters".to_owned()));
    }
    Ok(Checkpoint { tag, meta, nets })
}

pub fn write_checkpoint(path: &Path, tag: u8, meta: &[u32], nets: &[&Mlp<f32>]) -> Result<()> {
    fs::write(path, encode_checkpoint(tag, meta, nets)).map_err(|e| Error::file(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn nets() -> Vec<Mlp<f32>> {
        let mut rng = seed::rng(11);
        vec![
            Mlp::new(&[5, 7, 3, 2], 0.5, &mut rng).unwrap(),
            Mlp::new(&[4, 2], 0.0, &mut rng).unwrap(),
        ]
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let nets = nets();
        let refs: Vec<&Mlp<f32>> = nets.iter().collect();
        let bytes = encode_checkpoint(3, &[128, 1024], &refs);
        let ck = decode_checkpoint(&bytes).unwrap();
        assert_eq!(ck.tag, 3);
        assert_eq!(ck.meta, vec![128, 1024]);
        assert_eq!(ck.nets.len(), 2);
        for (a, b) in nets.iter().zip(&ck.nets) {
            assert_eq!(a.layers(), b.layers());
            assert_eq!(a.dropout_rates(), b.dropout_rates());
        }
    }

    #[test]
    fn size_matches_layout() {
        let nets = nets();
        let refs: Vec<&Mlp<f32>> = nets.iter().collect();
        let params: usize = nets.iter().map(|n| n.param_count()).sum();
        let layers: usize = nets.iter().map(|n| n.layers().len()).sum();
        assert_eq!(encode_checkpoint(0, &[7], &refs).len(), 21 + 4 * nets.len() + 13 * layers + 4 * params);
    }

    #[test]
    fn damaged_files_rejected() {
        let nets = nets();
        let refs: Vec<&Mlp<f32>> = nets.iter().collect();
        let bytes = encode_checkpoint(0, &[], &refs);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_checkpoint(&bad), Err(Error::CorruptHeader(_))));
        assert!(matches!(decode_checkpoint(&bytes[..bytes.len() - 1]), Err(Error::TruncatedFile)));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(decode_checkpoint(&long), Err(Error::CorruptHeader(_))));
    }
}
