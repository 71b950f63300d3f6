//! Trainable regressors and classifiers mapping filtered EMG features to
//! subspace targets or gesture labels, plus evaluation metrics.

mod forest;
mod krr;
mod latent;
mod linear;
pub mod metrics;
mod nmf;
pub mod persist;
mod svm;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::stats;

pub use forest::{train_forest, DecisionTree, ForestConfig, ForestModel, TreeNode};
pub use krr::{fit_krr, predict_krr, train_krr, CvPoint, KrrConfig, KrrModel};
pub use latent::{train_latent_space, LatentModel};
pub use linear::LinearMap;
pub use metrics::{classification_report, nrmse, EvalReport};
pub use nmf::{nmf_multiplicative, train_nmf_lr, NmfConfig, NmfFactors, NmfLrModel};
pub use svm::{train_svm, BinarySvm, SvmConfig, SvmModel};

/// One filtered EMG feature vector with optional supervision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LabeledWindow<T: Real> {
    pub features: Vec<T>,
    pub target: Option<Vec<T>>,
    pub gesture: Option<String>,
}

impl<T: Real> LabeledWindow<T> {
    pub fn regression(features: Vec<T>, target: Vec<T>) -> Self {
        Self {
            features,
            target: Some(target),
            gesture: None,
        }
    }

    pub fn classification(features: Vec<T>, gesture: impl Into<String>) -> Self {
        Self {
            features,
            target: None,
            gesture: Some(gesture.into()),
        }
    }
}

pub trait Regressor<T: Real> {
    fn n_features(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn predict(&self, x: &[T]) -> Result<Vec<T>>;
}

pub trait Classifier<T: Real> {
    fn n_features(&self) -> usize;
    fn class_labels(&self) -> &[String];
    /// Index into [`Classifier::class_labels`].
    fn predict_index(&self, x: &[T]) -> Result<usize>;

    fn predict_label(&self, x: &[T]) -> Result<&str> {
        let i = self.predict_index(x)?;
        Ok(self.class_labels()[i].as_str())
    }
}

/// Per-feature z-scoring from training statistics. Constant features keep a
/// unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Standardizer<T: Real> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    pub fn fit(x: &Array2<T>) -> Self {
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let v = col.to_vec();
            let m = stats::mean(&v).unwrap_or(T::zero());
            let var = stats::variance(&v).unwrap_or(T::zero());
            let s = var.sqrt();
            mean.push(m);
            scale.push(if s > T::epsilon() * (T::one() + m.abs()) {
                s
            } else {
                T::one()
            });
        }
        Self { mean, scale }
    }

    pub fn transform_row(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &Array2<T>) -> Array2<T> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// Evenly strided subset of `0..n` with at most `cap` entries.
pub(crate) fn strided_indices(n: usize, cap: Option<usize>) -> Vec<usize> {
    match cap {
        Some(c) if c > 0 && n > c => (0..c).map(|i| i * n / c).collect(),
        _ => (0..n).collect(),
    }
}

/// Contiguous k-fold split: fold `f` holds rows `[f·n/k, (f+1)·n/k)`.
pub(crate) fn fold_ranges(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    (0..k).map(|f| (f * n / k)..((f + 1) * n / k)).collect()
}

pub(crate) fn regression_matrices<T: Real>(
    data: &[LabeledWindow<T>],
) -> Result<(Array2<T>, Array2<T>)> {
    let rows: Vec<&LabeledWindow<T>> = data.iter().filter(|w| w.target.is_some()).collect();
    if rows.is_empty() {
        return Err(Error::InvalidInput("no training targets present".into()));
    }
    let x = linalg::matrix_from_rows(
        &rows
            .iter()
            .map(|w| w.features.as_slice())
            .collect::<Vec<_>>(),
    )?;
    let y = linalg::matrix_from_rows(
        &rows
            .iter()
            .map(|w| w.target.as_deref().expect("filtered"))
            .collect::<Vec<_>>(),
    )?;
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature or target".into()));
    }
    Ok((x, y))
}

/// Feature matrix, class indices and sorted label set.
pub(crate) fn classification_matrices<T: Real>(
    data: &[LabeledWindow<T>],
) -> Result<(Array2<T>, Vec<usize>, Vec<String>)> {
    let mut labels: Vec<String> = Vec::new();
    for (i, w) in data.iter().enumerate() {
        match &w.gesture {
            Some(g) => {
                if !labels.contains(g) {
                    labels.push(g.clone());
                }
            }
            None => {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has no gesture label"
                )))
            }
        }
    }
    labels.sort();
    if labels.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "need at least 2 classes, found {}",
            labels.len()
        )));
    }
    let y = data
        .iter()
        .map(|w| {
            labels
                .binary_search(w.gesture.as_ref().expect("checked"))
                .expect("present")
        })
        .collect();
    let x = linalg::matrix_from_rows(
        &data
            .iter()
            .map(|w| w.features.as_slice())
            .collect::<Vec<_>>(),
    )?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature".into()));
    }
    Ok((x, y, labels))
}

pub(crate) fn default_output_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("y{i}")).collect()
}

/// Any of the trained regressors, for storage and dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "kind", rename_all = "snake_case")]
pub enum AnyRegressor<T: Real> {
    Krr(KrrModel<T>),
    NmfLr(NmfLrModel<T>),
    Latent(LatentModel<T>),
}

impl<T: Real> AnyRegressor<T> {
    pub fn name(&self) -> &'static str {
        match self {
            AnyRegressor::Krr(_) => "KRR",
            AnyRegressor::NmfLr(_) => "NMF+LR",
            AnyRegressor::Latent(_) => "LS",
        }
    }
}

impl<T: Real> Regressor<T> for AnyRegressor<T> {
    fn n_features(&self) -> usize {
        match self {
            AnyRegressor::Krr(m) => m.n_features(),
            AnyRegressor::NmfLr(m) => m.n_features(),
            AnyRegressor::Latent(m) => m.n_features(),
        }
    }

    fn n_outputs(&self) -> usize {
        match self {
            AnyRegressor::Krr(m) => m.n_outputs(),
            AnyRegressor::NmfLr(m) => m.n_outputs(),
            AnyRegressor::Latent(m) => m.n_outputs(),
        }
    }

    fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        match self {
            AnyRegressor::Krr(m) => m.predict(x),
            AnyRegressor::NmfLr(m) => m.predict(x),
            AnyRegressor::Latent(m) => m.predict(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "kind", rename_all = "snake_case")]
pub enum AnyClassifier<T: Real> {
    Forest(ForestModel<T>),
    Svm(SvmModel<T>),
}

impl<T: Real> AnyClassifier<T> {
    pub fn name(&self) -> &'static str {
        match self {
            AnyClassifier::Forest(_) => "RF",
            AnyClassifier::Svm(_) => "SVM",
        }
    }
}

impl<T: Real> Classifier<T> for AnyClassifier<T> {
    fn n_features(&self) -> usize {
        match self {
            AnyClassifier::Forest(m) => m.n_features(),
            AnyClassifier::Svm(m) => m.n_features(),
        }
    }

    fn class_labels(&self) -> &[String] {
        match self {
            AnyClassifier::Forest(m) => m.class_labels(),
            AnyClassifier::Svm(m) => m.class_labels(),
        }
    }

    fn predict_index(&self, x: &[T]) -> Result<usize> {
        match self {
            AnyClassifier::Forest(m) => m.predict_index(x),
            AnyClassifier::Svm(m) => m.predict_index(x),
        }
    }
}
