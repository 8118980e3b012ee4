//! Binary vector cache.
//!
//! Layout (little-endian): magic `SIMPVEC\0`, u16 version, u32 dim,
//! u64 count, then `count` records of u32 key length, key bytes and
//! `dim` f32 values. Records are sorted by key.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use super::EmbeddingVector;

const MAGIC: &[u8; 8] = b"SIMPVEC\0";
const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("vector cache I/O: {0}")]
    Io(#[from] io::Error),
    #[error("not a vector cache (bad magic)")]
    BadMagic,
    #[error("unsupported vector cache version {0}")]
    Version(u16),
    #[error("cache key is not UTF-8")]
    Key,
    #[error("vector for {key} has dim {got}, cache dim is {expected}")]
    Dim { key: String, expected: usize, got: usize },
    #[error("stored vector for {0} is not a valid embedding")]
    BadVector(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorCache {
    pub dim: usize,
    pub vectors: BTreeMap<String, EmbeddingVector>,
}

impl VectorCache {
    pub fn new(dim: usize) -> Self {
        Self { dim, vectors: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: String, v: EmbeddingVector) -> Result<(), CacheError> {
        if v.dim() != self.dim {
            return Err(CacheError::Dim { key, expected: self.dim, got: v.dim() });
        }
        self.vectors.insert(key, v);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&EmbeddingVector> {
        self.vectors.get(key)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), CacheError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.vectors.len() as u64).to_le_bytes())?;
        for (key, v) in &self.vectors {
            w.write_all(&(key.len() as u32).to_le_bytes())?;
            w.write_all(key.as_bytes())?;
            for x in v.iter() {
                w.write_all(&(*x as f32).to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a cache; vectors are re-normalized after the f32 round trip.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self, CacheError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CacheError::BadMagic);
        }
        let version = u16::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(CacheError::Version(version));
        }
        let dim = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let count = u64::from_le_bytes(read_array(&mut r)?);
        let mut cache = Self::new(dim);
        let mut buf = vec![0u8; dim * 4];
        for _ in 0..count {
            let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
            let mut key = vec![0u8; len];
            r.read_exact(&mut key)?;
            let key = String::from_utf8(key).map_err(|_| CacheError::Key)?;
            r.read_exact(&mut buf)?;
            let values: Vec<f64> =
                buf.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
            let v = EmbeddingVector::normalized(values).map_err(|_| CacheError::BadVector(key.clone()))?;
            cache.vectors.insert(key, v);
        }
        Ok(cache)
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}
