use super::class_targets;
use crate::embedding::{cosine_similarity, EmbeddingVector};
use crate::error::{Error, Result};

/// Assigns the label of the class mean with the highest cosine similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestCentroid {
    pub classes: Vec<String>,
    pub centroids: Vec<Vec<f32>>,
}

impl NearestCentroid {
    pub fn fit(features: &[EmbeddingVector], labels: &[String], classes: &[String]) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::invalid("features and labels differ in length"));
        }
        let Some(first) = features.first() else {
            return Err(Error::invalid("no training features"));
        };
        let dim = first.dim();
        let targets = class_targets(labels, classes)?;
        let mut sums = vec![vec![0f64; dim]; classes.len()];
        let mut counts = vec![0usize; classes.len()];
        for (f, &t) in features.iter().zip(&targets) {
            f.check_dim(dim)?;
            counts[t] += 1;
            for (s, &v) in sums[t].iter_mut().zip(f.as_slice()) {
                *s += v as f64;
            }
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!("class {:?} has no training vectors", classes[c])));
        }
        let centroids = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| s.into_iter().map(|v| (v / n as f64) as f32).collect())
            .collect();
        Ok(Self {
            classes: classes.to_vec(),
            centroids,
        })
    }

    pub fn predict(&self, features: &[EmbeddingVector]) -> Result<Vec<String>> {
        let dim = self.centroids.first().map_or(0, Vec::len);
        features
            .iter()
            .map(|f| {
                f.check_dim(dim)?;
                let mut best = 0;
                let mut best_sim = f64::NEG_INFINITY;
                for (c, centroid) in self.centroids.iter().enumerate() {
                    let s = cosine_similarity(f.as_slice(), centroid);
                    if s > best_sim {
                        best = c;
                        best_sim = s;
                    }
                }
                Ok(self.classes[best].clone())
            })
            .collect()
    }
}

pub fn nearest_centroid(
    train: &[EmbeddingVector],
    train_labels: &[String],
    classes: &[String],
    test: &[EmbeddingVector],
) -> Result<Vec<String>> {
    NearestCentroid::fit(train, train_labels, classes)?.predict(test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    fn s(names: &[&str]) -> Vec<String> {
        names.iter().map(|n| n.to_string()).collect()
    }

    #[test]
    fn centroid_is_fixed_point() {
        let train = vec![v(&[1.0, 0.2]), v(&[1.0, -0.2]), v(&[0.0, 1.0])];
        let out = nearest_centroid(&train, &s(&["a", "a", "b"]), &s(&["a", "b"]), &[v(&[1.0, 0.0])]).unwrap();
        assert_eq!(out, ["a"]);
    }

    #[test]
    fn tie_goes_to_first_label() {
        let train = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let h = std::f32::consts::FRAC_1_SQRT_2;
        let out = nearest_centroid(&train, &s(&["x", "y"]), &s(&["x", "y"]), &[v(&[h, h])]).unwrap();
        assert_eq!(out, ["x"]);
        let out = nearest_centroid(&train, &s(&["y", "x"]), &s(&["x", "y"]), &[v(&[h, h])]).unwrap();
        assert_eq!(out, ["x"]);
    }

    #[test]
    fn empty_class_rejected() {
        let train = vec![v(&[1.0, 0.0])];
        assert!(NearestCentroid::fit(&train, &s(&["x"]), &s(&["x", "y"])).is_err());
    }
}
