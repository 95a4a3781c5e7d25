use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine_similarity, euclidean_distance, VectorStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `1 - cos(a, b)`.
    #[default]
    Cosine,
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: &[f32], b: &[f32]) -> f64 {
        match self {
            Metric::Cosine => 1.0 - cosine_similarity(a, b),
            Metric::Euclidean => euclidean_distance(a, b),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

/// Heap candidate ordered by (distance, entry index); the max is evicted first.
#[derive(PartialEq)]
struct Candidate {
    distance: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Entry indices of the `k` nearest same-class neighbors of entry `query`,
/// nearest first, ties by ascending entry index.
pub fn knn_within_class_indices(store: &VectorStore, query: usize, k: usize, metric: Metric) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let entries = store.entries();
    let q = entries
        .get(query)
        .ok_or_else(|| Error::invalid(format!("entry index {query} out of range")))?;
    let qv = q.vector.as_slice();
    let mut heap = BinaryHeap::with_capacity(k + 1);
    let mut same_class = 0usize;
    for (index, e) in entries.iter().enumerate() {
        if index == query || e.label_id != q.label_id {
            continue;
        }
        same_class += 1;
        let cand = Candidate {
            distance: metric.distance(qv, e.vector.as_slice()),
            index,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().expect("heap holds k >= 1 items") {
            heap.pop();
            heap.push(cand);
        }
    }
    if same_class == 0 {
        return Err(Error::invalid(format!(
            "entry {:?} is the only member of class {:?}",
            q.id,
            store.label(q.label_id)
        )));
    }
    Ok(heap.into_sorted_vec().into_iter().map(|c| c.index).collect())
}

/// Ids of the `k` nearest same-class neighbors of `query_id`, excluding itself.
/// Returns the whole class when it has fewer than `k` other members.
pub fn knn_within_class(store: &VectorStore, query_id: &str, k: usize, metric: Metric) -> Result<Vec<String>> {
    let query = store
        .index_of(query_id)
        .ok_or_else(|| Error::UnknownId(query_id.to_string()))?;
    let neighbors = knn_within_class_indices(store, query, k, metric)?;
    Ok(neighbors
        .into_iter()
        .map(|i| store.entries()[i].id.clone())
        .collect())
}
