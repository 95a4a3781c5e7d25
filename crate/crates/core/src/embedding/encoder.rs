use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::{mock_encode, EmbeddingVector, RemoteEncoder};
use crate::corpus::TextExample;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum EncoderBackend {
    Mock { dim: usize },
    Remote(RemoteEncoder),
}

#[derive(Debug, Clone, Copy)]
pub struct EncoderOptions {
    /// Texts per remote request.
    pub batch_size: usize,
    /// Upper bound on concurrent requests (or worker threads for the mock).
    pub max_in_flight: usize,
    /// Dimension the session must produce; learned from the first response
    /// when unset.
    pub expected_dim: Option<usize>,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_in_flight: 4,
            expected_dim: None,
        }
    }
}

/// An encoder backend bound to a session with a fixed output dimension.
pub struct Encoder {
    backend: EncoderBackend,
    options: EncoderOptions,
    session_dim: OnceLock<usize>,
    pool: rayon::ThreadPool,
}

impl Encoder {
    pub fn new(backend: EncoderBackend, options: EncoderOptions) -> Result<Self> {
        if options.batch_size == 0 || options.max_in_flight == 0 {
            return Err(Error::invalid("batch_size and max_in_flight must be >= 1"));
        }
        let session_dim = OnceLock::new();
        if let EncoderBackend::Mock { dim } = backend {
            if let Some(expected) = options.expected_dim {
                if expected != dim {
                    return Err(Error::DimensionMismatch {
                        expected,
                        actual: dim,
                    });
                }
            }
            let _ = session_dim.set(dim);
        } else if let Some(expected) = options.expected_dim {
            let _ = session_dim.set(expected);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.max_in_flight)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build encoder pool: {e}")))?;
        Ok(Self {
            backend,
            options,
            session_dim,
            pool,
        })
    }

    pub fn mock(dim: usize) -> Result<Self> {
        Self::new(EncoderBackend::Mock { dim }, EncoderOptions::default())
    }

    pub fn backend(&self) -> &EncoderBackend {
        &self.backend
    }

    /// The session dimension, once known.
    pub fn dim(&self) -> Option<usize> {
        self.session_dim.get().copied()
    }

    fn check_session_dim(&self, v: &EmbeddingVector) -> Result<()> {
        let expected = *self.session_dim.get_or_init(|| v.dim());
        v.check_dim(expected)
    }

    pub fn encode(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        if let Some(i) = texts.iter().position(|t| t.is_empty()) {
            return Err(Error::invalid(format!("text {i} is empty")));
        }
        let vectors: Vec<EmbeddingVector> = match &self.backend {
            EncoderBackend::Mock { dim } => self.pool.install(|| {
                texts
                    .par_iter()
                    .map(|t| mock_encode(t, *dim))
                    .collect::<Result<Vec<_>>>()
            })?,
            EncoderBackend::Remote(remote) => {
                let chunks: Vec<Vec<EmbeddingVector>> = self.pool.install(|| {
                    texts
                        .par_chunks(self.options.batch_size)
                        .map(|chunk| remote.embed(chunk))
                        .collect::<Result<Vec<_>>>()
                })?;
                chunks.into_iter().flatten().collect()
            }
        };
        for v in &vectors {
            self.check_session_dim(v)?;
        }
        Ok(vectors)
    }
}

/// Encodes `texts` in order; `output[i]` is the embedding of `texts[i]`.
pub fn encode_batch(encoder: &Encoder, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
    encoder.encode(texts)
}

/// Encodings keyed by example id, so each example is embedded once even when
/// the backend is not deterministic across calls.
#[derive(Debug, Default, Clone)]
pub struct EmbeddingCache {
    by_id: HashMap<String, EmbeddingVector>,
}

impl EmbeddingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingVector> {
        self.by_id.get(id)
    }

    /// Returns embeddings for `examples` in order, encoding only ids that are
    /// not cached yet.
    pub fn encode_examples(
        &mut self,
        encoder: &Encoder,
        examples: &[TextExample],
    ) -> Result<Vec<EmbeddingVector>> {
        let mut pending: Vec<&TextExample> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for ex in examples {
            if !self.by_id.contains_key(&ex.id) && queued.insert(ex.id.as_str()) {
                pending.push(ex);
            }
        }
        if !pending.is_empty() {
            let texts: Vec<&str> = pending.iter().map(|ex| ex.text.as_str()).collect();
            let vectors = encoder.encode(&texts)?;
            for (ex, v) in pending.into_iter().zip(vectors) {
                self.by_id.insert(ex.id.clone(), v);
            }
        }
        Ok(examples.iter().map(|ex| self.by_id[&ex.id].clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_identical_texts() {
        let enc = Encoder::mock(64).unwrap();
        let out = encode_batch(&enc, &["abc", "abc"]).unwrap();
        assert_eq!(out[0], out[1]);
        assert_eq!(enc.dim(), Some(64));
    }

    #[test]
    fn order_preserved_across_threads() {
        let texts: Vec<String> = (0..50).map(|i| format!("text number {i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let enc = Encoder::new(
            EncoderBackend::Mock { dim: 32 },
            EncoderOptions {
                max_in_flight: 7,
                ..Default::default()
            },
        )
        .unwrap();
        let out = enc.encode(&refs).unwrap();
        for (t, v) in refs.iter().zip(&out) {
            assert_eq!(*v, mock_encode(t, 32).unwrap());
        }
    }

    #[test]
    fn empty_text_rejected() {
        let enc = Encoder::mock(16).unwrap();
        assert!(enc.encode(&["fine", ""]).is_err());
    }

    #[test]
    fn mock_dim_conflict() {
        let opts = EncoderOptions {
            expected_dim: Some(8),
            ..Default::default()
        };
        assert!(Encoder::new(EncoderBackend::Mock { dim: 16 }, opts).is_err());
    }

    #[test]
    fn cache_encodes_each_id_once() {
        let enc = Encoder::mock(16).unwrap();
        let mut cache = EmbeddingCache::new();
        let a = TextExample::new("a", "first text", "x");
        let b = TextExample::new("b", "second text", "x");
        let out = cache.encode_examples(&enc, &[a.clone(), b.clone(), a.clone()]).unwrap();
        assert_eq!(cache.len(), 2);
        assert_eq!(out[0], out[2]);
        // same id, different text: cached vector wins
        let a2 = TextExample::new("a", "changed", "x");
        assert_eq!(cache.encode_examples(&enc, &[a2]).unwrap()[0], out[0]);
    }
}
