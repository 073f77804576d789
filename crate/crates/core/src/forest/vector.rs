use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Encoded feature values, one per schema dimension. Always finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FeatureVector<F>(Vec<F>);

impl<F: Scalar> FeatureVector<F> {
    pub fn new(values: Vec<F>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at dimension {i}")));
        }
        Ok(FeatureVector(values))
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<F> {
        self.0
    }
}

impl<F> AsRef<[F]> for FeatureVector<F> {
    fn as_ref(&self) -> &[F] {
        &self.0
    }
}

impl<F: Scalar> TryFrom<Vec<F>> for FeatureVector<F> {
    type Error = Error;

    fn try_from(values: Vec<F>) -> Result<Self> {
        FeatureVector::new(values)
    }
}

impl<'de, F: Scalar> Deserialize<'de> for FeatureVector<F> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<F>::deserialize(d)?;
        FeatureVector::new(values).map_err(serde::de::Error::custom)
    }
}
