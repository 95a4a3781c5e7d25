use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScore {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Mean of per-class F1 weighted by gold support.
    pub weighted_f1: f64,
    /// `confusion[gold][pred]`, indexed in label-set order.
    pub confusion: Vec<Vec<u64>>,
    pub per_class: Vec<ClassScore>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, macro-F1 and weighted-F1. Undefined precision, recall or F1
/// counts as 0 and still enters the macro mean.
pub fn compute_metrics<S: AsRef<str>>(pred: &[S], gold: &[S], label_set: &[String]) -> Result<Metrics> {
    if pred.len() != gold.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::invalid("cannot score an empty prediction set"));
    }
    let pos: HashMap<&str, usize> = label_set
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let lookup = |l: &str| {
        pos.get(l)
            .copied()
            .ok_or_else(|| Error::invalid(format!("label {l:?} is not in the label set")))
    };
    let c = label_set.len();
    let mut confusion = vec![vec![0u64; c]; c];
    for (p, g) in pred.iter().zip(gold) {
        confusion[lookup(g.as_ref())?][lookup(p.as_ref())?] += 1;
    }
    let n = gold.len() as u64;
    let correct: u64 = (0..c).map(|i| confusion[i][i]).sum();

    let per_class: Vec<ClassScore> = (0..c)
        .map(|i| {
            let tp = confusion[i][i];
            let support: u64 = confusion[i].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[i]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScore {
                label: label_set[i].clone(),
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let macro_f1 = if c == 0 {
        0.0
    } else {
        per_class.iter().map(|s| s.f1).sum::<f64>() / c as f64
    };
    let weighted_f1 = per_class
        .iter()
        .map(|s| s.f1 * s.support as f64)
        .sum::<f64>()
        / n as f64;
    Ok(Metrics {
        accuracy: ratio(correct, n),
        macro_f1,
        weighted_f1,
        confusion,
        per_class,
    })
}
