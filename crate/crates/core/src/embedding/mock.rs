use std::hash::Hasher;

use fnv::FnvHasher;

use super::EmbeddingVector;
use crate::error::{Error, Result};

pub const DEFAULT_MOCK_DIM: usize = 256;
pub const MIN_MOCK_DIM: usize = 8;

/// 64-bit FNV-1a.
fn trigram_hash(trigram: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(trigram.as_bytes());
    h.finish()
}

/// Deterministic signed feature hashing of character trigrams.
///
/// The text is lowercased, every character trigram (whitespace included) is
/// hashed with 64-bit FNV-1a over its UTF-8 bytes, `hash % dim` picks the
/// bucket and the lowest bit of `hash / dim` picks the sign (`0` is `+1`).
/// The accumulated counts are L2-normalized.
pub fn mock_encode(text: &str, dim: usize) -> Result<EmbeddingVector> {
    if dim < MIN_MOCK_DIM {
        return Err(Error::invalid(format!(
            "mock encoder needs dim >= {MIN_MOCK_DIM}, got {dim}"
        )));
    }
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    if chars.len() < 3 {
        return Err(Error::invalid(format!(
            "text {text:?} has no character trigram"
        )));
    }
    let mut acc = vec![0f64; dim];
    let mut buf = String::with_capacity(12);
    for window in chars.windows(3) {
        buf.clear();
        buf.extend(window);
        let h = trigram_hash(&buf);
        let bucket = (h % dim as u64) as usize;
        let sign = if (h / dim as u64) & 1 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid(format!(
            "trigram features of {text:?} cancel to a zero vector"
        )));
    }
    EmbeddingVector::new(acc.into_iter().map(|x| (x / norm) as f32).collect())
}
