//! Text generation from projected latent vectors.

mod remote;

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bridge::Projector;
use crate::embedding::{cosine_similarity, EmbeddingVector, VectorStore};
use crate::error::{Error, Result};
use crate::latent::SyntheticRecord;

pub use remote::{RemoteDecoder, DEFAULT_MAX_TOKENS, DEFAULT_PROMPT_TEMPLATE, PLACEHOLDER};

/// Local stand-in decoder that blends the texts of the two reference entries
/// closest to the query vector.
#[derive(Debug, Clone)]
pub struct MockDecoder {
    reference: Arc<VectorStore>,
    texts: Arc<HashMap<String, String>>,
}

impl MockDecoder {
    pub fn new(reference: Arc<VectorStore>, texts: Arc<HashMap<String, String>>) -> Result<Self> {
        if reference.len() < 2 {
            return Err(Error::invalid("mock decoder needs at least 2 reference entries"));
        }
        if let Some(e) = reference.entries().iter().find(|e| !texts.contains_key(&e.id)) {
            return Err(Error::invalid(format!("no text for reference entry {:?}", e.id)));
        }
        Ok(Self { reference, texts })
    }

    pub fn reference(&self) -> &VectorStore {
        &self.reference
    }

    pub fn decode(&self, h: &EmbeddingVector) -> Result<String> {
        mock_decode(h, &self.reference, |id| self.texts.get(id).map(String::as_str))
    }
}

#[derive(Debug, Clone)]
pub enum DecoderBackend {
    Remote(RemoteDecoder),
    Mock(MockDecoder),
}

impl DecoderBackend {
    /// The input dimension the backend requires, when it is known locally.
    pub fn expected_dim(&self) -> Option<usize> {
        match self {
            DecoderBackend::Remote(_) => None,
            DecoderBackend::Mock(m) => Some(m.reference.dim()),
        }
    }
}

pub fn decode(backend: &DecoderBackend, h: &EmbeddingVector) -> Result<String> {
    match backend {
        DecoderBackend::Remote(r) => r.decode(h),
        DecoderBackend::Mock(m) => m.decode(h),
    }
}

fn first_tokens(text: &str, n: usize) -> impl Iterator<Item = &str> {
    text.split_whitespace().take(n)
}

/// `ceil(x)` that ignores float noise just above an integer.
fn ceil_count(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Blends the texts of the two nearest reference entries A and B (cosine,
/// ties by entry index). With similarities shifted to be non-negative,
/// `p = s_A / (s_A + s_B)` (1 when both are 0); the output is the first
/// `ceil(p * n_A)` whitespace tokens of A followed by the first
/// `ceil((1 - p) * n_B)` tokens of B.
pub fn mock_decode<'a, F>(h: &EmbeddingVector, reference: &VectorStore, resolver: F) -> Result<String>
where
    F: Fn(&str) -> Option<&'a str>,
{
    if reference.len() < 2 {
        return Err(Error::invalid(format!(
            "mock decoding needs at least 2 reference entries, store has {}",
            reference.len()
        )));
    }
    h.check_dim(reference.dim())?;
    let sims: Vec<f64> = reference
        .entries()
        .iter()
        .map(|e| cosine_similarity(h.as_slice(), e.vector.as_slice()))
        .collect();
    // strict > keeps the lower index on ties
    let best_excluding = |skip: Option<usize>| {
        let mut best: Option<usize> = None;
        for (i, &s) in sims.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            if best.is_none_or(|b| s > sims[b]) {
                best = Some(i);
            }
        }
        best.expect("reference has at least 2 entries")
    };
    let a = best_excluding(None);
    let b = best_excluding(Some(a));

    let shift = sims[a].min(sims[b]).min(0.0);
    let (s_a, s_b) = (sims[a] - shift, sims[b] - shift);
    let p = if s_a + s_b == 0.0 { 1.0 } else { s_a / (s_a + s_b) };

    let text_of = |i: usize| {
        let id = &reference.entries()[i].id;
        resolver(id).ok_or_else(|| Error::invalid(format!("no text for reference entry {id:?}")))
    };
    let (text_a, text_b) = (text_of(a)?, text_of(b)?);
    let n_a = text_a.split_whitespace().count();
    let n_b = text_b.split_whitespace().count();
    let tokens: Vec<&str> = first_tokens(text_a, ceil_count(p * n_a as f64))
        .chain(first_tokens(text_b, ceil_count((1.0 - p) * n_b as f64)))
        .collect();
    Ok(tokens.join(" "))
}

/// Projects each record's vector and decodes it into `record.text`. Records
/// whose decode fails keep their vector and get a `decode_error` note.
/// Output order is the input order whatever `max_in_flight` is.
pub fn decode_records(
    backend: &DecoderBackend,
    projector: &Projector,
    records: &mut [SyntheticRecord],
    max_in_flight: usize,
) -> Result<()> {
    if let Some(expected) = backend.expected_dim() {
        if projector.out_dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: projector.out_dim(),
            });
        }
    }
    let projected: Vec<EmbeddingVector> = records
        .iter()
        .map(|r| projector.project(&r.vector))
        .collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_in_flight.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build decode pool: {e}")))?;
    pool.install(|| {
        records
            .par_iter_mut()
            .zip(projected.par_iter())
            .for_each(|(record, h)| match decode(backend, h) {
                Ok(text) => {
                    record.text = Some(text);
                    record.decode_error = None;
                }
                Err(e) => {
                    record.text = None;
                    record.decode_error = Some(e.to_string());
                }
            });
    });
    Ok(())
}
