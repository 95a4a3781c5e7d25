use serde::Serialize;

use super::LambdaPolicy;
use crate::error::{Error, Result};

pub const DEFAULT_K_NEIGHBORS: usize = 5;

/// How many synthetic examples to request.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanTarget {
    /// Explicit per-label counts; unlisted labels get 0.
    Quotas(Vec<(String, usize)>),
    /// A total split evenly, remainder to the first labels.
    Budget(usize),
    /// Top every class up to the size of the largest one.
    BalanceToMax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassQuota {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentationPlan {
    /// One quota per class, in label order.
    pub per_class: Vec<ClassQuota>,
    pub k_neighbors: usize,
    pub lambda_policy: LambdaPolicy,
    pub seed: u64,
}

impl AugmentationPlan {
    pub fn total(&self) -> usize {
        self.per_class.iter().map(|q| q.count).sum()
    }

    pub fn quota(&self, label: &str) -> usize {
        self.per_class
            .iter()
            .find(|q| q.label == label)
            .map_or(0, |q| q.count)
    }
}

pub fn build_plan(
    class_counts: &[(String, usize)],
    target: &PlanTarget,
    k_neighbors: usize,
    lambda_policy: LambdaPolicy,
    seed: u64,
) -> Result<AugmentationPlan> {
    if k_neighbors == 0 {
        return Err(Error::invalid("k_neighbors must be >= 1"));
    }
    lambda_policy.validate()?;
    let n = class_counts.len();
    let counts: Vec<usize> = match target {
        PlanTarget::Quotas(quotas) => {
            let mut counts = vec![0; n];
            for (label, q) in quotas {
                let c = class_counts
                    .iter()
                    .position(|(l, _)| l == label)
                    .ok_or_else(|| Error::invalid(format!("quota for unknown label {label:?}")))?;
                counts[c] = *q;
            }
            counts
        }
        PlanTarget::Budget(total) => {
            if n == 0 {
                if *total > 0 {
                    return Err(Error::invalid("budget given but there are no classes"));
                }
                Vec::new()
            } else {
                (0..n)
                    .map(|c| total / n + usize::from(c < total % n))
                    .collect()
            }
        }
        PlanTarget::BalanceToMax => {
            let max = class_counts.iter().map(|(_, c)| *c).max().unwrap_or(0);
            class_counts.iter().map(|(_, c)| max - c).collect()
        }
    };
    for ((label, available), quota) in class_counts.iter().zip(&counts) {
        if *quota > 0 && *available < 2 {
            return Err(Error::invalid(format!(
                "class {label:?} has {available} example(s); interpolation needs at least 2"
            )));
        }
    }
    Ok(AugmentationPlan {
        per_class: class_counts
            .iter()
            .zip(counts)
            .map(|((label, _), count)| ClassQuota {
                label: label.clone(),
                count,
            })
            .collect(),
        k_neighbors,
        lambda_policy,
        seed,
    })
}
