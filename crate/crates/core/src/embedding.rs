use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm deviation below which a vector is accepted as already normalized.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Unit-norm feature vector produced by a recognizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `values` to unit Euclidean norm.
    ///
    /// Vectors whose norm is already within [`UNIT_TOLERANCE`] of one are
    /// stored verbatim so that serialized embeddings reload bit-exactly.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidEmbedding("empty vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding("non-finite component".into()));
        }
        let norm = l2_norm(&values);
        if norm == 0.0 {
            return Err(Error::InvalidEmbedding("zero vector".into()));
        }
        if (norm - 1.0).abs() <= UNIT_TOLERANCE {
            return Ok(Self(values));
        }
        Ok(Self(values.into_iter().map(|v| v / norm).collect()))
    }

    /// Standard basis vector `e_index` in `dim` dimensions.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidEmbedding(format!(
                "basis index {index} >= dim {dim}"
            )));
        }
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.0)
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "embeddings of dim {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }
}

impl std::ops::Neg for &Embedding {
    type Output = Embedding;

    fn neg(self) -> Embedding {
        Embedding(self.0.iter().map(|v| -v).collect())
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(de)?;
        Embedding::new(values).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_degenerate_vectors() {
        assert!(Embedding::new(vec![]).is_err());
        assert!(Embedding::new(vec![0.0, 0.0]).is_err());
        assert!(Embedding::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn normalizes() {
        let e = Embedding::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(e.values(), &[0.6, 0.8]);
    }

    proptest! {
        #[test]
        fn constructor_output_has_unit_norm(v in prop::collection::vec(-1e3f64..1e3, 1..128)) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let e = Embedding::new(v).unwrap();
            prop_assert!((e.norm() - 1.0).abs() <= 1e-6);
        }
    }
}
