//! LSF1 feature container.
//!
//! Little-endian layout:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `b"LSF1"`                |
//! | 4      | 4    | `u32` version (= 1)            |
//! | 8      | 4    | `u32` n_layers                 |
//! | 12     | 4    | `u32` frames (T)               |
//! | 16     | 4    | `u32` dim (d)                  |
//! | 20     | 4·n  | `f32` payload, `[layer][frame][dim]` |

use std::fs;
use std::path::Path;

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::pooling::LayerStack;

pub const MAGIC: [u8; 4] = *b"LSF1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

/// Header fields of an LSF1 file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureHeader {
    pub n_layers: u32,
    pub frames: u32,
    pub dim: u32,
}

impl FeatureHeader {
    pub fn value_count(&self) -> u64 {
        u64::from(self.n_layers) * u64::from(self.frames) * u64::from(self.dim)
    }

    pub fn payload_bytes(&self) -> u64 {
        self.value_count() * 4
    }
}

/// Header plus raw `f32` payload, exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub header: FeatureHeader,
    pub values: Vec<f32>,
}

impl FeatureFile {
    pub fn from_stack(stack: &LayerStack) -> Result<Self> {
        let dim32 = |n: usize, what: &str| {
            u32::try_from(n).map_err(|_| Error::input(format!("{what} {n} does not fit in u32")))
        };
        Ok(FeatureFile {
            header: FeatureHeader {
                n_layers: dim32(stack.n_layers(), "layer count")?,
                frames: dim32(stack.frames(), "frame count")?,
                dim: dim32(stack.dim(), "dimension")?,
            },
            values: stack.view().iter().map(|&v| v as f32).collect(),
        })
    }

    pub fn to_stack(&self) -> Result<LayerStack> {
        let shape = (
            self.header.n_layers as usize,
            self.header.frames as usize,
            self.header.dim as usize,
        );
        let values = self.values.iter().map(|&v| f64::from(v)).collect();
        let array = Array3::from_shape_vec(shape, values)
            .map_err(|e| Error::input(format!("payload does not match header: {e}")))?;
        LayerStack::new(array)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.header.n_layers.to_le_bytes());
        out.extend_from_slice(&self.header.frames.to_le_bytes());
        out.extend_from_slice(&self.header.dim.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let header = decode_header(bytes)?;
        let expected = header.payload_bytes();
        let available = (bytes.len() - HEADER_LEN) as u64;
        if available < expected {
            return Err(Error::format(
                bytes.len() as u64,
                format!("truncated payload: header needs {expected} bytes, found {available}"),
            ));
        }
        if available > expected {
            return Err(Error::format(
                HEADER_LEN as u64 + expected,
                format!("{} trailing bytes after payload", available - expected),
            ));
        }
        let mut values = Vec::with_capacity(header.value_count() as usize);
        for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !v.is_finite() {
                return Err(Error::format(
                    (HEADER_LEN + 4 * i) as u64,
                    "non-finite value in payload",
                ));
            }
            values.push(v);
        }
        Ok(FeatureFile { header, values })
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ])
}

/// Parses and validates the 20-byte header.
pub fn decode_header(bytes: &[u8]) -> Result<FeatureHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            bytes.len() as u64,
            format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len()),
        ));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::format(0, format!("bad magic {:?}", &bytes[..4])));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let header = FeatureHeader {
        n_layers: read_u32(bytes, 8),
        frames: read_u32(bytes, 12),
        dim: read_u32(bytes, 16),
    };
    for (offset, value, name) in [
        (8, header.n_layers, "n_layers"),
        (12, header.frames, "frames"),
        (16, header.dim, "dim"),
    ] {
        if value == 0 {
            return Err(Error::format(offset, format!("{name} must be positive")));
        }
    }
    Ok(header)
}

pub fn read_header(path: impl AsRef<Path>) -> Result<FeatureHeader> {
    use std::io::Read;
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(HEADER_LEN);
    fs::File::open(path)
        .and_then(|f| f.take(HEADER_LEN as u64).read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode_header(&buf)
}

pub fn load_feature_file(path: impl AsRef<Path>) -> Result<LayerStack> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureFile::decode(&bytes)?.to_stack()
}

/// Writes `stack` as LSF1; values are stored as `f32`.
pub fn write_feature_file(path: impl AsRef<Path>, stack: &LayerStack) -> Result<()> {
    let path = path.as_ref();
    let bytes = FeatureFile::from_stack(stack)?.encode();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> FeatureFile {
        FeatureFile {
            header: FeatureHeader {
                n_layers: 3,
                frames: 5,
                dim: 4,
            },
            values: (0..60).map(|i| (i as f32 * 0.37).sin()).collect(),
        }
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = sample().encode();
        assert_eq!(&bytes[..4], b"LSF1");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[3, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[5, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &[4, 0, 0, 0]);
        assert_eq!(bytes.len(), 20 + 60 * 4);
    }

    #[test]
    fn large_header_arithmetic() {
        let h = FeatureHeader {
            n_layers: 25,
            frames: 400,
            dim: 1024,
        };
        assert_eq!(h.value_count(), 25 * 400 * 1024);
        assert_eq!(h.payload_bytes(), 40_960_000);
    }

    #[test]
    fn truncation_and_corruption_are_located() {
        let bytes = sample().encode();
        match FeatureFile::decode(&bytes[..bytes.len() - 3]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, bytes.len() as u64 - 3),
            other => panic!("{other:?}"),
        }
        match FeatureFile::decode(&bytes[..10]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 10),
            other => panic!("{other:?}"),
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(FeatureFile::decode(&bad), Err(Error::Format { offset: 0, .. })));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(FeatureFile::decode(&bad), Err(Error::Format { offset: 4, .. })));
        let mut bad = bytes.clone();
        bad[12..16].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(FeatureFile::decode(&bad), Err(Error::Format { offset: 12, .. })));
        let mut bad = bytes.clone();
        bad[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(FeatureFile::decode(&bad), Err(Error::Format { offset: 24, .. })));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            FeatureFile::decode(&long),
            Err(Error::Format { offset, .. }) if offset == bytes.len() as u64
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.lsf");
        let stack = sample().to_stack().unwrap();
        write_feature_file(&path, &stack).unwrap();
        assert_eq!(load_feature_file(&path).unwrap(), stack);
        assert_eq!(read_header(&path).unwrap(), sample().header);
    }

    proptest! {
        #[test]
        fn encode_decode_is_bitwise_identity(
            layers in 1u32..4, frames in 1u32..6, dim in 1u32..5,
            seed in proptest::collection::vec(-1e6f32..1e6, 96),
        ) {
            let n = (layers * frames * dim) as usize;
            let file = FeatureFile {
                header: FeatureHeader { n_layers: layers, frames, dim },
                values: seed[..n].to_vec(),
            };
            let back = FeatureFile::decode(&file.encode()).unwrap();
            prop_assert_eq!(
                back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                file.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            prop_assert_eq!(back.header, file.header);
        }
    }
}
