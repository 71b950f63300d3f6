//! Deterministic stand-ins for trained models, for scripting controllers.

use crate::error::{Error, Result};
use crate::models::{Classifier, Regressor};
use crate::scalar::Real;

use super::{GestureClass, PoseClass};

/// Reads the class index from one feature, rounded to the nearest label.
#[derive(Debug, Clone)]
pub struct LabelFromFeature {
    pub labels: Vec<String>,
    pub feature: usize,
    pub n_features: usize,
}

impl LabelFromFeature {
    /// Labels `Normal = 0, Spread = 1, Contract = 2`.
    pub fn gestures(n_features: usize, feature: usize) -> Self {
        Self {
            labels: GestureClass::ALL.iter().map(|g| g.to_string()).collect(),
            feature,
            n_features,
        }
    }

    /// Labels `Power = 0, Precision = 1, Pinch = 2`.
    pub fn poses(n_features: usize, feature: usize) -> Self {
        Self {
            labels: PoseClass::ALL.iter().map(|g| g.to_string()).collect(),
            feature,
            n_features,
        }
    }
}

impl<T: Real> Classifier<T> for LabelFromFeature {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn class_labels(&self) -> &[String] {
        &self.labels
    }

    fn predict_index(&self, x: &[T]) -> Result<usize> {
        let v = x
            .get(self.feature)
            .ok_or_else(|| Error::dim("stub classifier input", self.n_features, x.len()))?;
        let i = v.round().to_usize().unwrap_or(0);
        Ok(i.min(self.labels.len() - 1))
    }
}

#[derive(Debug, Clone)]
pub struct ConstantRegressor<T> {
    pub output: Vec<T>,
    pub n_features: usize,
}

impl<T: Real> ConstantRegressor<T> {
    pub fn new(output: Vec<T>, n_features: usize) -> Self {
        Self { output, n_features }
    }
}

impl<T: Real> Regressor<T> for ConstantRegressor<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_outputs(&self) -> usize {
        self.output.len()
    }

    fn predict(&self, _x: &[T]) -> Result<Vec<T>> {
        Ok(self.output.clone())
    }
}

/// Echoes selected features as outputs.
#[derive(Debug, Clone)]
pub struct FeatureRegressor {
    pub features: Vec<usize>,
    pub n_features: usize,
}

impl<T: Real> Regressor<T> for FeatureRegressor {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_outputs(&self) -> usize {
        self.features.len()
    }

    fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        self.features
            .iter()
            .map(|&i| {
                x.get(i)
                    .copied()
                    .ok_or_else(|| Error::dim("stub regressor input", self.n_features, x.len()))
            })
            .collect()
    }
}
