//! Portable checkpoint container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SNLA"
//! 4       4     format version, u32 LE (currently 1)
//! 8       4     algorithm tag, u32 LE (see AlgorithmTag)
//! 12      4     section count S, u32 LE
//! then S section headers:
//!         4     section kind, u32 LE (0 = dense network, 1 = table)
//!         4     dimension count D, u32 LE
//!         4·D   dimensions, u32 LE each
//! then the payload: every section's values as f64 LE, in section order.
//! ```
//!
//! A dense network with widths `[d0, d1, …]` stores, layer by layer, its
//! `d_l × d_{l+1}` row-major weights followed by its `d_{l+1}` biases. A
//! table stores `Π dims` values row-major. Trailing or missing bytes are a
//! format error.

use std::fs;
use std::path::Path;

use super::dense::{param_count, DenseNet};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SNLA";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum AlgorithmTag {
    Sac = 1,
    Ddpg = 2,
    Td3 = 3,
    Ql = 4,
    Ra = 5,
    Mr = 6,
}

impl AlgorithmTag {
    pub fn from_u32(v: u32) -> Option<Self> {
        Some(match v {
            1 => Self::Sac,
            2 => Self::Ddpg,
            3 => Self::Td3,
            4 => Self::Ql,
            5 => Self::Ra,
            6 => Self::Mr,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sac => "sac",
            Self::Ddpg => "ddpg",
            Self::Td3 => "td3",
            Self::Ql => "ql",
            Self::Ra => "ra",
            Self::Mr => "mr",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "sac" => Self::Sac,
            "ddpg" => Self::Ddpg,
            "td3" => Self::Td3,
            "ql" => Self::Ql,
            "ra" => Self::Ra,
            "mr" => Self::Mr,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum SectionKind {
    Dense = 0,
    Table = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub kind: SectionKind,
    pub dims: Vec<u32>,
    pub values: Vec<f64>,
}

impl Section {
    pub fn dense(net: &DenseNet) -> Self {
        Self {
            kind: SectionKind::Dense,
            dims: net.dims().iter().map(|&d| d as u32).collect(),
            values: net.params().to_vec(),
        }
    }

    pub fn table(dims: Vec<u32>, values: Vec<f64>) -> Self {
        Self {
            kind: SectionKind::Table,
            dims,
            values,
        }
    }

    fn expected_len(kind: SectionKind, dims: &[u32]) -> Result<usize> {
        let dims: Vec<usize> = dims.iter().map(|&d| d as usize).collect();
        match kind {
            SectionKind::Dense => {
                if dims.len() < 2 || dims.contains(&0) {
                    return Err(Error::Format(format!("invalid network widths {dims:?}")));
                }
                Ok(param_count(&dims))
            }
            SectionKind::Table => dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::Format("table dimensions overflow".into())),
        }
    }

    pub fn to_dense(&self) -> Result<DenseNet> {
        if self.kind != SectionKind::Dense {
            return Err(Error::Format("section is not a dense network".into()));
        }
        let dims: Vec<usize> = self.dims.iter().map(|&d| d as usize).collect();
        DenseNet::from_params(&dims, self.values.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub algorithm: AlgorithmTag,
    pub sections: Vec<Section>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let n_values: usize = self.sections.iter().map(|s| s.values.len()).sum();
        let mut out = Vec::with_capacity(16 + 8 * n_values + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.algorithm as u32).to_le_bytes());
        out.extend_from_slice(&(self.sections.len() as u32).to_le_bytes());
        for s in &self.sections {
            out.extend_from_slice(&(s.kind as u32).to_le_bytes());
            out.extend_from_slice(&(s.dims.len() as u32).to_le_bytes());
            for d in &s.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
        for s in &self.sections {
            for v in &s.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses and validates a complete checkpoint; nothing is returned on
    /// any inconsistency.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let tag = r.u32()?;
        let algorithm = AlgorithmTag::from_u32(tag)
            .ok_or_else(|| Error::Format(format!("unknown algorithm tag {tag}")))?;
        let n_sections = r.u32()? as usize;
        let mut headers = Vec::with_capacity(n_sections.min(64));
        for _ in 0..n_sections {
            let kind = match r.u32()? {
                0 => SectionKind::Dense,
                1 => SectionKind::Table,
                k => return Err(Error::Format(format!("unknown section kind {k}"))),
            };
            let n_dims = r.u32()? as usize;
            if n_dims > 64 {
                return Err(Error::Format(format!("implausible dimension count {n_dims}")));
            }
            let dims = (0..n_dims).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let len = Section::expected_len(kind, &dims)?;
            headers.push((kind, dims, len));
        }
        let payload: usize = headers.iter().map(|h| h.2).sum();
        if bytes.len() - r.pos != payload.saturating_mul(8) {
            return Err(Error::Format(format!(
                "payload is {} bytes, header announces {}",
                bytes.len() - r.pos,
                payload.saturating_mul(8)
            )));
        }
        let mut sections = Vec::with_capacity(headers.len());
        for (kind, dims, len) in headers {
            let values = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            sections.push(Section { kind, dims, values });
        }
        Ok(Self {
            algorithm,
            sections,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Checkpoint {
        let net = DenseNet::from_params(&[1, 2], vec![0.5, -1.0, 0.25, 2.0]).unwrap();
        Checkpoint {
            algorithm: AlgorithmTag::Sac,
            sections: vec![
                Section::dense(&net),
                Section::table(vec![2, 1], vec![3.0, 4.0]),
            ],
        }
    }

    #[test]
    fn layout_is_stable() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..4], b"SNLA");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        // dense header: kind 0, 2 dims, 1, 2
        assert_eq!(&bytes[16..32], &[0, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        // 16 + 16 + (8 + 8) header bytes, 6 values
        assert_eq!(bytes.len(), 48 + 6 * 8);
        assert_eq!(&bytes[48..56], &0.5f64.to_le_bytes());
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn version_tag_and_length_are_checked() {
        let good = sample().to_bytes();
        let mut v = good.clone();
        v[4] = 9;
        assert!(matches!(Checkpoint::from_bytes(&v), Err(Error::Format(_))));
        let mut t = good.clone();
        t[8] = 77;
        assert!(matches!(Checkpoint::from_bytes(&t), Err(Error::Format(_))));
        assert!(Checkpoint::from_bytes(&good[..good.len() - 1]).is_err());
        let mut long = good.clone();
        long.push(0);
        assert!(Checkpoint::from_bytes(&long).is_err());
        assert!(Checkpoint::from_bytes(&good[..10]).is_err());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 7), rows in 1u32..4) {
            let net = DenseNet::from_params(&[2, 1, 1], values[..5].to_vec()).unwrap();
            let table: Vec<f64> = (0..rows * 2).map(f64::from).collect();
            let ck = Checkpoint {
                algorithm: AlgorithmTag::Td3,
                sections: vec![Section::dense(&net), Section::table(vec![rows, 2], table)],
            };
            let bytes = ck.to_bytes();
            let back = Checkpoint::from_bytes(&bytes).unwrap();
            prop_assert_eq!(&back, &ck);
            prop_assert_eq!(back.sections[0].to_dense().unwrap(), net);
            prop_assert_eq!(back.to_bytes(), bytes);
        }
    }
}
