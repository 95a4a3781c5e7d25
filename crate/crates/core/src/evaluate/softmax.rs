//! Multinomial logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::class_targets;
use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHyper {
    pub l2: f64,
    pub lr: f64,
    pub iters: usize,
}

impl Default for SoftmaxHyper {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            lr: 0.5,
            iters: 500,
        }
    }
}

/// Mean cross-entropy plus `l2 / 2 * ||W||^2` (bias unregularized).
///
/// Parameters are laid out as the `classes × dim` weight matrix in row-major
/// order followed by the `classes` biases.
#[derive(Debug, Clone)]
pub struct SoftmaxObjective {
    features: Vec<f64>,
    targets: Vec<usize>,
    dim: usize,
    classes: usize,
    l2: f64,
}

impl SoftmaxObjective {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<usize>, classes: usize, l2: f64) -> Result<Self> {
        if features.is_empty() || features.len() != targets.len() {
            return Err(Error::invalid("need one target per feature row and at least one row"));
        }
        let dim = features[0].len();
        if dim == 0 || features.iter().any(|f| f.len() != dim) {
            return Err(Error::invalid("feature rows must share a positive dimension"));
        }
        if targets.iter().any(|&t| t >= classes) {
            return Err(Error::invalid("target outside the class range"));
        }
        if l2 < 0.0 {
            return Err(Error::invalid("l2 weight must be >= 0"));
        }
        Ok(Self {
            features: features.into_iter().flatten().collect(),
            targets,
            dim,
            classes,
            l2,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn n_params(&self) -> usize {
        self.classes * self.dim + self.classes
    }

    fn evaluate(&self, params: &[f64], grad: Option<&mut [f64]>) -> f64 {
        assert_eq!(params.len(), self.n_params());
        let (w, b) = params.split_at(self.classes * self.dim);
        let n = self.targets.len() as f64;
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut logits = vec![0f64; self.classes];
        let mut loss = 0.0;
        for (x, &t) in self.features.chunks_exact(self.dim).zip(&self.targets) {
            for (c, z) in logits.iter_mut().enumerate() {
                let row = &w[c * self.dim..(c + 1) * self.dim];
                *z = b[c] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
            let log_norm = max + sum.ln();
            loss += log_norm - logits[t];
            if let Some(g) = grad.as_deref_mut() {
                let (gw, gb) = g.split_at_mut(self.classes * self.dim);
                for c in 0..self.classes {
                    let p = (logits[c] - log_norm).exp();
                    let delta = (p - f64::from(u8::from(c == t))) / n;
                    gb[c] += delta;
                    for (g, xi) in gw[c * self.dim..(c + 1) * self.dim].iter_mut().zip(x) {
                        *g += delta * xi;
                    }
                }
            }
        }
        let sq: f64 = w.iter().map(|v| v * v).sum();
        if let Some(g) = grad {
            for (g, wi) in g.iter_mut().zip(w) {
                *g += self.l2 * wi;
            }
        }
        loss / n + 0.5 * self.l2 * sq
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.evaluate(params, None)
    }

    pub fn loss_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.n_params()];
        let loss = self.evaluate(params, Some(&mut g));
        (loss, g)
    }
}

/// Linear classifier over embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    pub classes: Vec<String>,
    pub dim: usize,
    /// `classes × dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SoftmaxModel {
    fn logits(&self, x: &[f32]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.dim)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, &v)| w * v as f64).sum::<f64>())
            .collect()
    }

    pub fn predict_proba(&self, features: &[EmbeddingVector]) -> Result<Vec<Vec<f64>>> {
        features
            .iter()
            .map(|f| {
                f.check_dim(self.dim)?;
                let z = self.logits(f.as_slice());
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
                let s: f64 = e.iter().sum();
                Ok(e.into_iter().map(|v| v / s).collect())
            })
            .collect()
    }

    /// Argmax of the logits; the first class in order wins ties.
    pub fn predict(&self, features: &[EmbeddingVector]) -> Result<Vec<String>> {
        features
            .iter()
            .map(|f| {
                f.check_dim(self.dim)?;
                let z = self.logits(f.as_slice());
                let mut best = 0;
                for (c, &v) in z.iter().enumerate().skip(1) {
                    if v > z[best] {
                        best = c;
                    }
                }
                Ok(self.classes[best].clone())
            })
            .collect()
    }
}

pub fn train_softmax(
    features: &[EmbeddingVector],
    labels: &[String],
    classes: &[String],
    hyper: &SoftmaxHyper,
) -> Result<SoftmaxModel> {
    train_softmax_with_history(features, labels, classes, hyper).map(|(m, _)| m)
}

/// Trains from zero initialization and also returns the objective value
/// before every step and after the last one (`iters + 1` values).
pub fn train_softmax_with_history(
    features: &[EmbeddingVector],
    labels: &[String],
    classes: &[String],
    hyper: &SoftmaxHyper,
) -> Result<(SoftmaxModel, Vec<f64>)> {
    if features.is_empty() {
        return Err(Error::invalid("no training features"));
    }
    if features.len() != labels.len() {
        return Err(Error::invalid("features and labels differ in length"));
    }
    let targets = class_targets(labels, classes)?;
    let mut present = targets.clone();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::invalid("softmax training needs at least 2 classes present"));
    }
    let dim = features[0].dim();
    for f in features {
        f.check_dim(dim)?;
    }
    if hyper.lr.is_nan() || hyper.lr <= 0.0 {
        return Err(Error::invalid("learning rate must be > 0"));
    }
    let rows = features
        .iter()
        .map(|f| f.as_slice().iter().map(|&v| v as f64).collect())
        .collect();
    let objective = SoftmaxObjective::new(rows, targets, classes.len(), hyper.l2)?;

    let mut params = vec![0.0; objective.n_params()];
    let mut history = Vec::with_capacity(hyper.iters + 1);
    for iteration in 0..hyper.iters {
        let (loss, grad) = objective.loss_and_gradient(&params);
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration, loss });
        }
        history.push(loss);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= hyper.lr * g;
        }
    }
    let last = objective.loss(&params);
    if !last.is_finite() || params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Divergence {
            iteration: hyper.iters,
            loss: last,
        });
    }
    history.push(last);

    let bias = params.split_off(classes.len() * dim);
    Ok((
        SoftmaxModel {
            classes: classes.to_vec(),
            dim,
            weights: params,
            bias,
        },
        history,
    ))
}
