//! Little-endian binary sidecars: GEMB embeddings and GBNP renormalization parameters.
//!
//! GEMB: `"GEMB"`, version u32 = 1, dim u32, count u64, then `count` records
//! of `frame u32, source_index u32, dim x f32`.
//!
//! GBNP: `"GBNP"`, version u32 = 1, dim u32, then `dim` f32 gammas followed
//! by `dim` f32 betas.

use std::collections::BTreeMap;
use std::path::Path;

use crate::appearance::RenormParams;
use crate::error::IoError;
use crate::types::{Detection, FeatureVector};

pub const GEMB_MAGIC: &[u8; 4] = b"GEMB";
pub const GBNP_MAGIC: &[u8; 4] = b"GBNP";
pub const FORMAT_VERSION: u32 = 1;

/// Embeddings keyed by `(frame, source_index)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingFile {
    pub dim: u32,
    pub records: BTreeMap<(u32, u32), Vec<f32>>,
}

impl EmbeddingFile {
    pub fn new(dim: u32) -> Self {
        Self {
            dim,
            records: BTreeMap::new(),
        }
    }

    /// Inserts a record, rejecting wrong dimensions and duplicate keys.
    pub fn insert(&mut self, frame: u32, source_index: u32, values: Vec<f32>) -> Result<(), IoError> {
        if values.len() != self.dim as usize {
            return Err(IoError::DimensionMismatch {
                frame,
                source_index,
                expected: self.dim as usize,
                found: values.len(),
            });
        }
        if self.records.insert((frame, source_index), values).is_some() {
            return Err(IoError::DuplicateRecord { frame, source_index });
        }
        Ok(())
    }

    pub fn get(&self, frame: u32, source_index: u32) -> Option<&[f32]> {
        self.records.get(&(frame, source_index)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Attaches embeddings to detections by `(frame, source_index)`.
    /// Returns how many detections found no record.
    pub fn attach(&self, detections: &mut [Detection]) -> usize {
        let mut missing = 0;
        for d in detections {
            match self.get(d.frame, d.source_index) {
                Some(v) => d.embedding = Some(FeatureVector::from(v)),
                None => missing += 1,
            }
        }
        missing
    }
}

pub fn encode_embeddings(file: &EmbeddingFile) -> Vec<u8> {
    let dim = file.dim as usize;
    let mut out = Vec::with_capacity(20 + file.records.len() * (8 + 4 * dim));
    out.extend_from_slice(GEMB_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&file.dim.to_le_bytes());
    out.extend_from_slice(&(file.records.len() as u64).to_le_bytes());
    for (&(frame, idx), values) in &file.records {
        out.extend_from_slice(&frame.to_le_bytes());
        out.extend_from_slice(&idx.to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        let end = self.pos.checked_add(n).ok_or(IoError::TruncatedFile)?;
        let s = self.buf.get(self.pos..end).ok_or(IoError::TruncatedFile)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, IoError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn header(&mut self, magic: &'static [u8; 4], name: &'static str) -> Result<(), IoError> {
        if self.buf.len() < 4 {
            return Err(IoError::TruncatedFile);
        }
        if self.take(4)? != magic {
            return Err(IoError::BadMagic { expected: name });
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(IoError::VersionUnsupported(version));
        }
        Ok(())
    }
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingFile, IoError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.header(GEMB_MAGIC, "GEMB")?;
    let dim = r.u32()?;
    let count = r.u64()?;
    let record_size = 8u64 + 4 * u64::from(dim);
    let remaining = (bytes.len() - r.pos) as u64;
    if count.checked_mul(record_size).is_none_or(|need| need > remaining) {
        return Err(IoError::TruncatedFile);
    }
    let mut file = EmbeddingFile::new(dim);
    for _ in 0..count {
        let frame = r.u32()?;
        let idx = r.u32()?;
        let values = (0..dim).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
        file.insert(frame, idx, values)?;
    }
    Ok(file)
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingFile, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_embeddings(&bytes)
}

pub fn write_embeddings(path: &Path, file: &EmbeddingFile) -> Result<(), IoError> {
    std::fs::write(path, encode_embeddings(file)).map_err(|e| IoError::io(path, e))
}

pub fn encode_renorm_params(params: &RenormParams) -> Vec<u8> {
    let dim = params.dim() as u32;
    let mut out = Vec::with_capacity(12 + 8 * params.dim());
    out.extend_from_slice(GBNP_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for v in params.gamma.iter().chain(&params.beta) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

/// Decodes a GBNP file; `eps` is not part of the format.
pub fn decode_renorm_params(bytes: &[u8], eps: f64) -> Result<RenormParams, IoError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.header(GBNP_MAGIC, "GBNP")?;
    let dim = r.u32()? as usize;
    if (bytes.len() - r.pos) / 8 < dim {
        return Err(IoError::TruncatedFile);
    }
    let gamma = (0..dim).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>, _>>()?;
    let beta = (0..dim).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>, _>>()?;
    Ok(RenormParams { gamma, beta, eps })
}

pub fn read_renorm_params(path: &Path, eps: f64) -> Result<RenormParams, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_renorm_params(&bytes, eps)
}

pub fn write_renorm_params(path: &Path, params: &RenormParams) -> Result<(), IoError> {
    std::fs::write(path, encode_renorm_params(params)).map_err(|e| IoError::io(path, e))
}
