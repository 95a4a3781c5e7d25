//! Oversampling in embedding space: same-class neighbors, mixing coefficients,
//! interpolation and augmentation plans.

mod generate;
mod knn;
mod plan;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};

pub use generate::{
    generate_synthetic_vectors, write_provenance, GenerationOptions, ProvenanceLine, SyntheticRecord,
};
pub use knn::{knn_within_class, knn_within_class_indices, Metric};
pub use plan::{build_plan, AugmentationPlan, ClassQuota, PlanTarget, DEFAULT_K_NEIGHBORS};

/// Mixing coefficient in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct MixCoefficient(f64);

impl MixCoefficient {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("mixing coefficient {lambda} outside [0, 1]")));
        }
        Ok(Self(lambda))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// How mixing coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LambdaPolicy {
    /// Continuous uniform on `[0, 1]`.
    #[default]
    Uniform,
    Fixed(f64),
}

impl LambdaPolicy {
    pub fn validate(self) -> Result<()> {
        if let LambdaPolicy::Fixed(v) = self {
            MixCoefficient::new(v)?;
        }
        Ok(())
    }
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaPolicy::Uniform => f.write_str("uniform"),
            LambdaPolicy::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(LambdaPolicy::Uniform);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::invalid(format!("lambda policy {s:?} is neither \"uniform\" nor a number")))?;
        let policy = LambdaPolicy::Fixed(v);
        policy.validate()?;
        Ok(policy)
    }
}

impl Serialize for LambdaPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LambdaPolicy::Uniform => s.serialize_str("uniform"),
            LambdaPolicy::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Value(f64),
            Name(String),
        }
        let policy = match Repr::deserialize(d)? {
            Repr::Value(v) => LambdaPolicy::Fixed(v),
            Repr::Name(s) => s.parse().map_err(serde::de::Error::custom)?,
        };
        policy.validate().map_err(serde::de::Error::custom)?;
        Ok(policy)
    }
}

/// Draws one coefficient; deterministic given the stream state.
pub fn sample_lambda<R: Rng + ?Sized>(policy: LambdaPolicy, stream: &mut R) -> Result<MixCoefficient> {
    match policy {
        LambdaPolicy::Uniform => MixCoefficient::new(stream.random::<f64>()),
        LambdaPolicy::Fixed(v) => MixCoefficient::new(v),
    }
}

/// `lambda * e_i + (1 - lambda) * e_j`, evaluated in f64 and rounded once, so
/// each output component stays between the corresponding inputs.
pub fn interpolate(e_i: &EmbeddingVector, e_j: &EmbeddingVector, lambda: MixCoefficient) -> Result<EmbeddingVector> {
    e_j.check_dim(e_i.dim())?;
    let l = lambda.value();
    let values = e_i
        .as_slice()
        .iter()
        .zip(e_j.as_slice())
        .map(|(&a, &b)| (l * a as f64 + (1.0 - l) * b as f64) as f32)
        .collect();
    EmbeddingVector::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn v(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    fn lam(x: f64) -> MixCoefficient {
        MixCoefficient::new(x).unwrap()
    }

    #[test]
    fn midpoint() {
        let out = interpolate(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), lam(0.5)).unwrap();
        assert_eq!(out, v(&[0.5, 0.5]));
    }

    #[test]
    fn endpoints_exact() {
        let a = v(&[0.3, -1.7, 2.5e-8]);
        let b = v(&[9.0, 4.25, -3.0]);
        assert_eq!(interpolate(&a, &b, lam(1.0)).unwrap(), a);
        assert_eq!(interpolate(&a, &b, lam(0.0)).unwrap(), b);
    }

    #[test]
    fn hand_arithmetic() {
        let out = interpolate(&v(&[2.0, 0.0]), &v(&[0.0, 4.0]), lam(0.25)).unwrap();
        assert_eq!(out, v(&[0.5, 3.0]));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            interpolate(&v(&[1.0]), &v(&[1.0, 2.0]), lam(0.5)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lambda_bounds() {
        assert!(MixCoefficient::new(-0.01).is_err());
        assert!(MixCoefficient::new(1.01).is_err());
        assert!(MixCoefficient::new(f64::NAN).is_err());
        assert!("1.5".parse::<LambdaPolicy>().is_err());
        assert!(serde_json::from_str::<LambdaPolicy>("-0.2").is_err());
    }

    #[test]
    fn fixed_policy_is_constant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            assert_eq!(sample_lambda(LambdaPolicy::Fixed(0.5), &mut rng).unwrap().value(), 0.5);
        }
    }

    #[test]
    fn uniform_is_deterministic_and_centered() {
        let draw = |seed| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..10_000)
                .map(|_| sample_lambda(LambdaPolicy::Uniform, &mut rng).unwrap().value())
                .collect::<Vec<_>>()
        };
        let a = draw(11);
        assert_eq!(a, draw(11));
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!((0.48..=0.52).contains(&mean), "mean {mean}");
    }

    #[test]
    fn policy_serde() {
        assert_eq!(serde_json::to_string(&LambdaPolicy::Uniform).unwrap(), "\"uniform\"");
        assert_eq!(
            serde_json::from_str::<LambdaPolicy>("0.25").unwrap(),
            LambdaPolicy::Fixed(0.25)
        );
        assert_eq!(
            serde_json::from_str::<LambdaPolicy>("\"uniform\"").unwrap(),
            LambdaPolicy::Uniform
        );
    }

    proptest! {
        #[test]
        fn convex_and_norm_bounded(
            pair in (1usize..64).prop_flat_map(|d| (
                prop::collection::vec(-100f32..100f32, d),
                prop::collection::vec(-100f32..100f32, d),
            )),
            l in 0f64..=1f64,
        ) {
            let (a, b) = pair;
            let ea = v(&a);
            let eb = v(&b);
            let out = interpolate(&ea, &eb, lam(l)).unwrap();
            for ((&x, &y), &z) in a.iter().zip(&b).zip(out.as_slice()) {
                prop_assert!(x.min(y) <= z && z <= x.max(y));
            }
            let bound = ea.norm().max(eb.norm());
            prop_assert!(out.norm() <= bound * (1.0 + 1e-6) + 1e-12);
        }
    }
}
