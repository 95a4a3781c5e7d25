//! In-memory vector store and its little-endian binary file format.
//!
//! Layout:
//!
//! ```text
//! "SMTX"  u32 version=1  u32 dim  u32 label_count
//! label_count × (u16 len, UTF-8 bytes)
//! u64 entry_count
//! entry_count × (u16 len, UTF-8 id, u32 label_id, dim × f32)
//! u32 CRC32 (IEEE) of every preceding byte
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::EmbeddingVector;
use crate::error::{Error, Result};

pub const STORE_MAGIC: [u8; 4] = *b"SMTX";
pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StoreEntry {
    pub id: String,
    pub label_id: u32,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone)]
pub struct VectorStore {
    dim: usize,
    labels: Vec<String>,
    entries: Vec<StoreEntry>,
    index: HashMap<String, usize>,
}

impl PartialEq for VectorStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.labels == other.labels && self.entries == other.entries
    }
}

impl VectorStore {
    pub fn new(dim: usize, labels: Vec<String>) -> Result<Self> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(Error::invalid(format!("store dim {dim} out of range")));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::invalid(format!("duplicate label {l:?}")));
            }
            if l.len() > u16::MAX as usize {
                return Err(Error::invalid("label longer than 65535 bytes"));
            }
        }
        Ok(Self {
            dim,
            labels,
            entries: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn label_id(&self, label: &str) -> Option<u32> {
        self.labels.iter().position(|l| l == label).map(|i| i as u32)
    }

    pub fn label(&self, label_id: u32) -> &str {
        &self.labels[label_id as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&StoreEntry> {
        self.index_of(id).map(|i| &self.entries[i])
    }

    pub fn push(&mut self, id: impl Into<String>, label_id: u32, vector: EmbeddingVector) -> Result<()> {
        let id = id.into();
        if label_id as usize >= self.labels.len() {
            return Err(Error::invalid(format!(
                "label id {label_id} outside 0..{}",
                self.labels.len()
            )));
        }
        vector.check_dim(self.dim)?;
        if id.len() > u16::MAX as usize {
            return Err(Error::invalid("id longer than 65535 bytes"));
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.entries.len());
        self.entries.push(StoreEntry {
            id,
            label_id,
            vector,
        });
        Ok(())
    }

    pub fn push_labeled(&mut self, id: impl Into<String>, label: &str, vector: EmbeddingVector) -> Result<()> {
        let label_id = self
            .label_id(label)
            .ok_or_else(|| Error::invalid(format!("unknown label {label:?}")))?;
        self.push(id, label_id, vector)
    }

    /// Entry indices per label id.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.labels.len()];
        for (i, e) in self.entries.iter().enumerate() {
            members[e.label_id as usize].push(i);
        }
        members
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.entries.len() * (self.dim * 4 + 16));
        out.extend_from_slice(&STORE_MAGIC);
        out.extend_from_slice(&STORE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.labels.len() as u32).to_le_bytes());
        for label in &self.labels {
            put_str(&mut out, label);
        }
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for e in &self.entries {
            put_str(&mut out, &e.id);
            out.extend_from_slice(&e.label_id.to_le_bytes());
            for v in e.vector.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Truncated("missing magic".into()));
        }
        let found: [u8; 4] = bytes[..4].try_into().unwrap();
        if found != STORE_MAGIC {
            return Err(Error::BadMagic {
                expected: STORE_MAGIC,
                found,
            });
        }
        let mut r = Reader::new(&bytes[4..]);
        let version = r.u32()?;
        if version != STORE_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        if bytes.len() < 8 + 4 {
            return Err(Error::Truncated("missing checksum".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::ChecksumMismatch { stored, computed });
        }

        let mut r = Reader::new(&body[8..]);
        let dim = r.u32()? as usize;
        let label_count = r.u32()? as usize;
        let mut labels = Vec::with_capacity(label_count.min(1 << 16));
        for _ in 0..label_count {
            labels.push(r.string()?);
        }
        let mut store = VectorStore::new(dim, labels).map_err(|e| Error::Format(e.to_string()))?;
        let count = r.u64()?;
        for _ in 0..count {
            let id = r.string()?;
            let label_id = r.u32()?;
            let raw = r.take(dim * 4)?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let vector = EmbeddingVector::new(values).map_err(|e| Error::Format(e.to_string()))?;
            store
                .push(id, label_id, vector)
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        if !r.is_empty() {
            return Err(Error::Format(format!(
                "{} trailing bytes after the last entry",
                r.remaining()
            )));
        }
        Ok(store)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Truncated(format!(
                "needed {n} bytes, {} left",
                self.buf.len()
            )));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::Format(e.to_string()))
    }

    fn remaining(&self) -> usize {
        self.buf.len()
    }

    fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

pub fn write_store(store: &VectorStore, path: &Path) -> Result<()> {
    fs::write(path, store.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_store(path: &Path) -> Result<VectorStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    VectorStore::from_bytes(&bytes)
}
