//! Range-normalized RMSE and confusion-matrix accuracy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `100 · RMSE(pred − truth) / (max(truth) − min(truth))`.
pub fn nrmse<T: Real>(truth: &[T], pred: &[T]) -> Result<T> {
    if truth.is_empty() || truth.len() != pred.len() {
        return Err(Error::dim("nRMSE inputs", truth.len().max(1), pred.len()));
    }
    let (lo, hi) = truth
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if !(range > T::zero()) {
        return Err(Error::Degenerate(
            "truth has zero range; cannot normalize".into(),
        ));
    }
    let sse: T = truth
        .iter()
        .zip(pred)
        .map(|(&t, &p)| (p - t) * (p - t))
        .sum();
    let rmse = (sse / T::from_usize_lossy(truth.len())).sqrt();
    Ok(T::lit(100.0) * rmse / range)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub nrmse_per_output: BTreeMap<String, f64>,
    /// Percentage; `None` for a regression-only report.
    pub global_accuracy: Option<f64>,
    pub class_labels: Vec<String>,
    /// `confusion[truth][pred]`.
    pub confusion: Vec<Vec<usize>>,
    pub n_samples: usize,
}

impl EvalReport {
    pub fn accuracy_from_confusion(confusion: &[Vec<usize>]) -> Option<f64> {
        let total: usize = confusion.iter().flatten().sum();
        let hits: usize = confusion.iter().enumerate().map(|(i, r)| r[i]).sum();
        (total > 0).then(|| 100.0 * hits as f64 / total as f64)
    }

    /// Per-output nRMSE over rows of `(truth, pred)` vectors.
    pub fn regression<T: Real>(
        names: &[String],
        truth: &[Vec<T>],
        pred: &[Vec<T>],
    ) -> Result<Self> {
        if truth.len() != pred.len() || truth.is_empty() {
            return Err(Error::dim(
                "regression report rows",
                truth.len().max(1),
                pred.len(),
            ));
        }
        let mut out = BTreeMap::new();
        for (j, name) in names.iter().enumerate() {
            let col = |rows: &[Vec<T>]| -> Result<Vec<T>> {
                rows.iter()
                    .map(|r| {
                        r.get(j).copied().ok_or_else(|| {
                            Error::dim("regression report columns", names.len(), r.len())
                        })
                    })
                    .collect()
            };
            out.insert(
                name.clone(),
                nrmse(&col(truth)?, &col(pred)?)?.to_f64_lossy(),
            );
        }
        Ok(Self {
            nrmse_per_output: out,
            n_samples: truth.len(),
            ..Self::default()
        })
    }
}

/// Confusion matrix over the sorted union of labels and global accuracy.
pub fn classification_report<S: AsRef<str>>(truth: &[S], pred: &[S]) -> Result<EvalReport> {
    if truth.is_empty() {
        return Err(Error::InvalidInput(
            "classification report needs at least one sample".into(),
        ));
    }
    if truth.len() != pred.len() {
        return Err(Error::dim("classification report", truth.len(), pred.len()));
    }
    let mut labels: Vec<String> = truth
        .iter()
        .chain(pred)
        .map(|s| s.as_ref().to_string())
        .collect();
    labels.sort();
    labels.dedup();
    let at = |s: &S| {
        labels
            .binary_search_by(|l| l.as_str().cmp(s.as_ref()))
            .expect("collected")
    };
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    for (t, p) in truth.iter().zip(pred) {
        confusion[at(t)][at(p)] += 1;
    }
    Ok(EvalReport {
        global_accuracy: EvalReport::accuracy_from_confusion(&confusion),
        class_labels: labels,
        confusion,
        n_samples: truth.len(),
        ..EvalReport::default()
    })
}
