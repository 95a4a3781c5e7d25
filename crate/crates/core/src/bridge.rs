//! Linear modality bridge applied to latent vectors before decoding.
//!
//! Projector files use a small little-endian format: magic `"SMPW"`,
//! `u32` version 1, `u32` in_dim, `u32` out_dim, `u8` has_bias, then
//! `out_dim × in_dim` row-major `f32` weights and, if present, `out_dim`
//! bias values.

use std::fs;
use std::path::Path;

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};

pub const PROJECTOR_MAGIC: [u8; 4] = *b"SMPW";
pub const PROJECTOR_VERSION: u32 = 1;
const HEADER_LEN: usize = 17;

#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    in_dim: usize,
    out_dim: usize,
    /// Row-major, `out_dim` rows of `in_dim` columns.
    weights: Vec<f32>,
    bias: Option<Vec<f32>>,
}

impl Projector {
    pub fn new(in_dim: usize, out_dim: usize, weights: Vec<f32>, bias: Option<Vec<f32>>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::invalid("projector dims must be positive"));
        }
        if weights.len() != in_dim * out_dim {
            return Err(Error::Format(format!(
                "projector declares {out_dim}x{in_dim} but has {} weights",
                weights.len()
            )));
        }
        if let Some(b) = &bias {
            if b.len() != out_dim {
                return Err(Error::Format(format!(
                    "bias has {} entries, expected {out_dim}",
                    b.len()
                )));
            }
        }
        let all = weights.iter().chain(bias.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("projector parameters".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut weights = vec![0f32; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        Self::new(dim, dim, weights, None)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> Option<&[f32]> {
        self.bias.as_deref()
    }

    /// `weights · e (+ bias)`, accumulated in f64.
    pub fn project(&self, e: &EmbeddingVector) -> Result<EmbeddingVector> {
        e.check_dim(self.in_dim)?;
        let x = e.as_slice();
        let out = self
            .weights
            .chunks_exact(self.in_dim)
            .enumerate()
            .map(|(r, row)| {
                let mut acc: f64 = row.iter().zip(x).map(|(&w, &v)| w as f64 * v as f64).sum();
                if let Some(b) = &self.bias {
                    acc += b[r] as f64;
                }
                acc as f32
            })
            .collect();
        EmbeddingVector::new(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * (self.weights.len() + self.out_dim));
        out.extend_from_slice(&PROJECTOR_MAGIC);
        out.extend_from_slice(&PROJECTOR_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.in_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.out_dim as u32).to_le_bytes());
        out.push(u8::from(self.bias.is_some()));
        for v in self.weights.iter().chain(self.bias.iter().flatten()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated(format!(
                "projector header needs {HEADER_LEN} bytes, file has {}",
                bytes.len()
            )));
        }
        let found: [u8; 4] = bytes[..4].try_into().unwrap();
        if found != PROJECTOR_MAGIC {
            return Err(Error::BadMagic {
                expected: PROJECTOR_MAGIC,
                found,
            });
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = word(4);
        if version != PROJECTOR_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let in_dim = word(8) as usize;
        let out_dim = word(12) as usize;
        let has_bias = match bytes[16] {
            0 => false,
            1 => true,
            other => return Err(Error::Format(format!("has_bias flag {other} is not 0 or 1"))),
        };
        let payload = &bytes[HEADER_LEN..];
        if !payload.len().is_multiple_of(4) {
            return Err(Error::Format(format!(
                "payload of {} bytes is not a whole number of f32 values",
                payload.len()
            )));
        }
        let mut floats: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let expected = in_dim * out_dim + if has_bias { out_dim } else { 0 };
        if floats.len() != expected {
            return Err(Error::Format(format!(
                "projector declares {out_dim}x{in_dim}{} ({expected} floats) but contains {}",
                if has_bias { " plus bias" } else { "" },
                floats.len()
            )));
        }
        let bias = has_bias.then(|| floats.split_off(in_dim * out_dim));
        Self::new(in_dim, out_dim, floats, bias)
    }
}

pub fn load_projector(path: &Path) -> Result<Projector> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Projector::from_bytes(&bytes)
}

pub fn save_projector(projector: &Projector, path: &Path) -> Result<()> {
    fs::write(path, projector.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn identity_projector(dim: usize) -> Result<Projector> {
    Projector::identity(dim)
}

pub fn project(p: &Projector, e: &EmbeddingVector) -> Result<EmbeddingVector> {
    p.project(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn hand_matrix_vector() {
        let p = Projector::new(2, 2, vec![1.0, 1.0, 0.0, 2.0], None).unwrap();
        assert_eq!(p.project(&v(&[3.0, 4.0])).unwrap(), v(&[7.0, 8.0]));
    }

    #[test]
    fn bias_is_added() {
        let p = Projector::new(2, 1, vec![1.0, -1.0], Some(vec![0.5])).unwrap();
        assert_eq!(p.project(&v(&[3.0, 1.0])).unwrap(), v(&[2.5]));
    }

    #[test]
    fn identity_cases() {
        let p = identity_projector(1).unwrap();
        assert_eq!(p.weights(), [1.0]);
        let p = identity_projector(4).unwrap();
        let x = v(&[0.1, -2.0, 3.5, 1e-3]);
        assert_eq!(p.project(&x).unwrap(), x);
        assert_eq!(p.project(&p.project(&x).unwrap()).unwrap(), x);
    }

    #[test]
    fn dim_mismatch() {
        let p = identity_projector(2).unwrap();
        assert!(matches!(
            p.project(&v(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn byte_round_trip_and_shape_errors() {
        let p = Projector::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], Some(vec![0.0, 1.0, -1.0])).unwrap();
        assert_eq!(Projector::from_bytes(&p.to_bytes()).unwrap(), p);

        // declares 3x2 (in=2, out=3) but carries 5 floats
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"SMPW");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.push(0);
        for i in 0..5 {
            bytes.extend_from_slice(&(i as f32).to_le_bytes());
        }
        assert!(matches!(Projector::from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            Projector::new(1, 1, vec![f32::NAN], None),
            Err(Error::NonFinite(_))
        ));
    }
}
