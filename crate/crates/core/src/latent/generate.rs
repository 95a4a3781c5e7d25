use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{interpolate, knn_within_class_indices, sample_lambda, AugmentationPlan, Metric, MixCoefficient};
use crate::embedding::{l2_normalize, EmbeddingVector, VectorStore};
use crate::error::{Error, Result};
use crate::rng;

/// An interpolated vector with its provenance and, once decoded, its text.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecord {
    pub id: String,
    /// Base example; weighted by `lambda`.
    pub parent_a: String,
    /// Neighbor of the base; weighted by `1 - lambda`.
    pub parent_b: String,
    pub lambda: MixCoefficient,
    pub vector: EmbeddingVector,
    pub label: String,
    pub text: Option<String>,
    pub decode_error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GenerationOptions {
    pub metric: Metric,
    /// Rescale each interpolated vector to unit norm.
    pub normalize_output: bool,
}

fn generate_one(
    store: &VectorStore,
    plan: &AugmentationPlan,
    options: &GenerationOptions,
    members: &[usize],
    label_id: u32,
    j: usize,
) -> Result<SyntheticRecord> {
    let mut stream = rng::stream(plan.seed, &[label_id as u64, j as u64]);
    let base = members[stream.random_range(0..members.len())];
    let neighbors = knn_within_class_indices(store, base, plan.k_neighbors, options.metric)?;
    let partner = neighbors[stream.random_range(0..neighbors.len())];
    let lambda = sample_lambda(plan.lambda_policy, &mut stream)?;

    let entries = store.entries();
    let (a, b) = (&entries[base], &entries[partner]);
    let mut vector = interpolate(&a.vector, &b.vector, lambda)?;
    if options.normalize_output {
        vector = l2_normalize(&vector)?;
    }
    let label = store.label(label_id).to_string();
    Ok(SyntheticRecord {
        id: format!("syn-{label}-{j}"),
        parent_a: a.id.clone(),
        parent_b: b.id.clone(),
        lambda,
        vector,
        label,
        text: None,
        decode_error: None,
    })
}

/// Produces the records requested by `plan`, class by class in plan order.
///
/// Record `j` of class `c` draws from its own stream seeded by
/// `(plan.seed, c, j)`: the base uniformly from the class, the partner
/// uniformly from the base's `k` nearest same-class neighbors, then lambda.
/// The output is therefore independent of how rayon schedules the work.
pub fn generate_synthetic_vectors(
    store: &VectorStore,
    plan: &AugmentationPlan,
    options: &GenerationOptions,
) -> Result<Vec<SyntheticRecord>> {
    let members = store.class_members();
    let mut tasks = Vec::with_capacity(plan.total());
    for quota in &plan.per_class {
        if quota.count == 0 {
            continue;
        }
        let label_id = store
            .label_id(&quota.label)
            .ok_or_else(|| Error::invalid(format!("plan label {:?} is not in the store", quota.label)))?;
        let n = members[label_id as usize].len();
        if n < 2 {
            return Err(Error::invalid(format!(
                "class {:?} has {n} stored example(s); interpolation needs at least 2",
                quota.label
            )));
        }
        tasks.extend((0..quota.count).map(|j| (label_id, j)));
    }
    tasks
        .par_iter()
        .map(|&(label_id, j)| generate_one(store, plan, options, &members[label_id as usize], label_id, j))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct ProvenanceLine<'a> {
    pub id: &'a str,
    pub parent_a: &'a str,
    pub parent_b: &'a str,
    pub lambda: f64,
    pub label: &'a str,
}

/// One JSON object per record: `id`, `parent_a`, `parent_b`, `lambda`, `label`.
pub fn write_provenance<W: Write>(records: &[SyntheticRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        let line = ProvenanceLine {
            id: &r.id,
            parent_a: &r.parent_a,
            parent_b: &r.parent_b,
            lambda: r.lambda.value(),
            label: &r.label,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
