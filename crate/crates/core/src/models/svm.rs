//! One-vs-rest RBF support vector machine.
//!
//! Each binary problem is solved by SMO on the C-SVC dual with the
//! maximal-violating-pair working set, stopping once the KKT gap is below
//! `tol`. Hyperparameters are picked by interleaved k-fold CV accuracy.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::krr::{gram, rbf};
use super::{classification_matrices, strided_indices, Classifier, LabeledWindow, Standardizer};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct SvmConfig<T: Real> {
    pub c_grid: Vec<T>,
    pub gamma_grid: Vec<T>,
    pub cv_folds: usize,
    pub tol: T,
    pub standardize: bool,
    /// Caps the training set by strided subsampling; the dual is dense.
    pub max_train: Option<usize>,
}

impl<T: Real> Default for SvmConfig<T> {
    fn default() -> Self {
        Self {
            c_grid: [0.1, 1.0, 10.0].map(T::lit).to_vec(),
            gamma_grid: [0.01, 0.1, 1.0].map(T::lit).to_vec(),
            cv_folds: 5,
            tol: T::lit(1e-3),
            standardize: true,
            max_train: Some(1500),
        }
    }
}

/// `f(x) = Σ coef_i K(sv_i, x) − rho`, with `coef_i = y_i α_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BinarySvm<T: Real> {
    pub support_vectors: Array2<T>,
    pub coef: Vec<T>,
    pub rho: T,
}

impl<T: Real> BinarySvm<T> {
    pub fn decision(&self, x: &[T], gamma: T) -> T {
        let q = ndarray::ArrayView1::from(x);
        let mut f = -self.rho;
        for (sv, &c) in self.support_vectors.rows().into_iter().zip(&self.coef) {
            f += c * rbf(sv, q, gamma);
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SvmModel<T: Real> {
    /// One machine per class, in label order.
    pub machines: Vec<BinarySvm<T>>,
    pub class_labels: Vec<String>,
    pub c: T,
    pub kernel_gamma: T,
    pub n_features: usize,
    pub scaler: Option<Standardizer<T>>,
    /// `(C, γ, CV accuracy)` for every grid point.
    pub cv: Vec<(T, T, T)>,
}

/// Dual coefficients `y_i α_i` and offset for labels `y ∈ {−1, +1}`.
fn smo<T: Real>(k: ArrayView2<'_, T>, y: &[T], c: T, tol: T) -> (Vec<T>, T) {
    let n = y.len();
    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let tau = T::lit(1e-12);
    let upper = |a: T| a >= c;
    let lower = |a: T| a <= T::zero();
    let max_iter = (100 * n).max(100_000);

    for _ in 0..max_iter {
        // maximal violating pair
        let mut gmax = T::neg_infinity();
        let mut gmin = T::infinity();
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = if y[t] > T::zero() {
                !upper(alpha[t])
            } else {
                !lower(alpha[t])
            };
            let in_low = if y[t] > T::zero() {
                !lower(alpha[t])
            } else {
                !upper(alpha[t])
            };
            if in_up && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            break;
        }

        let qij = y[i] * y[j] * k[[i, j]];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (k[[i, i]] + k[[j, j]] + T::lit(2.0) * qij).max(tau);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > T::zero() {
                if alpha[j] < T::zero() {
                    alpha[j] = T::zero();
                    alpha[i] = diff;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = -diff;
            }
            if diff > T::zero() {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k[[i, i]] + k[[j, j]] - T::lit(2.0) * qij).max(tau);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < T::zero() {
                    alpha[j] = T::zero();
                    alpha[i] = sum;
                }
                if alpha[i] < T::zero() {
                    alpha[i] = T::zero();
                    alpha[j] = sum;
                }
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[[t, i]] * di + y[j] * k[[t, j]] * dj);
        }
    }

    let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
    let (mut free_sum, mut n_free) = (T::zero(), 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let pos = y[t] > T::zero();
        if upper(alpha[t]) {
            if pos {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if lower(alpha[t]) {
            if pos {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        free_sum / T::from_usize_lossy(n_free)
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) * T::lit(0.5)
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    (alpha.iter().zip(y).map(|(&a, &yi)| a * yi).collect(), rho)
}

fn binary_labels<T: Real>(y: &[usize], class: usize) -> Vec<T> {
    y.iter()
        .map(|&c| if c == class { T::one() } else { -T::one() })
        .collect()
}

/// Trains all one-vs-rest machines on rows `idx` of a precomputed Gram matrix.
fn fit_ovr<T: Real>(
    k: &Array2<T>,
    x: &Array2<T>,
    y: &[usize],
    idx: &[usize],
    n_classes: usize,
    c: T,
    tol: T,
) -> Vec<BinarySvm<T>> {
    let sub_k = k
        .select(ndarray::Axis(0), idx)
        .select(ndarray::Axis(1), idx);
    let sub_y: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
    (0..n_classes)
        .map(|class| {
            let (coef, rho) = smo(sub_k.view(), &binary_labels(&sub_y, class), c, tol);
            let keep: Vec<usize> = (0..idx.len()).filter(|&t| coef[t] != T::zero()).collect();
            BinarySvm {
                support_vectors: x.select(
                    ndarray::Axis(0),
                    &keep.iter().map(|&t| idx[t]).collect::<Vec<_>>(),
                ),
                coef: keep.iter().map(|&t| coef[t]).collect(),
                rho,
            }
        })
        .collect()
}

/// Highest decision value wins; exact ties go to the earlier label.
fn argmax_decision<T: Real>(machines: &[BinarySvm<T>], x: &[T], gamma: T) -> usize {
    let mut best = 0;
    let mut best_f = T::neg_infinity();
    for (i, m) in machines.iter().enumerate() {
        let f = m.decision(x, gamma);
        if f > best_f {
            best_f = f;
            best = i;
        }
    }
    best
}

pub fn train_svm<T: Real>(data: &[LabeledWindow<T>], cfg: &SvmConfig<T>) -> Result<SvmModel<T>> {
    if cfg.c_grid.is_empty() || cfg.gamma_grid.is_empty() {
        return Err(Error::InvalidConfig("SVM grids must be non-empty".into()));
    }
    if cfg
        .c_grid
        .iter()
        .chain(&cfg.gamma_grid)
        .any(|&v| !(v > T::zero()))
    {
        return Err(Error::InvalidConfig(
            "SVM C and gamma must be positive".into(),
        ));
    }
    let (x_all, y_all, labels) = classification_matrices(data)?;
    let rows = strided_indices(x_all.nrows(), cfg.max_train);
    let x_raw = x_all.select(ndarray::Axis(0), &rows);
    let y: Vec<usize> = rows.iter().map(|&i| y_all[i]).collect();
    let scaler = cfg.standardize.then(|| Standardizer::fit(&x_raw));
    let x = match &scaler {
        Some(s) => s.transform(&x_raw),
        None => x_raw,
    };
    let n = x.nrows();
    let n_classes = labels.len();
    let all: Vec<usize> = (0..n).collect();

    let single = cfg.c_grid.len() == 1 && cfg.gamma_grid.len() == 1;
    let (c, gamma, cv) = if single {
        (cfg.c_grid[0], cfg.gamma_grid[0], Vec::new())
    } else {
        let folds = cfg.cv_folds;
        if folds < 2 || n < folds {
            return Err(Error::InvalidConfig(format!(
                "need 2 <= cv_folds <= {n}, got {folds}"
            )));
        }
        let grams: Vec<Array2<T>> = cfg.gamma_grid.par_iter().map(|&g| gram(&x, g)).collect();
        let jobs: Vec<(usize, usize, usize)> = (0..cfg.c_grid.len())
            .flat_map(|ci| {
                (0..cfg.gamma_grid.len()).flat_map(move |gi| (0..folds).map(move |f| (ci, gi, f)))
            })
            .collect();
        let correct: Vec<usize> = jobs
            .par_iter()
            .map(|&(ci, gi, f)| {
                let train: Vec<usize> = all.iter().copied().filter(|i| i % folds != f).collect();
                let machines = fit_ovr(
                    &grams[gi],
                    &x,
                    &y,
                    &train,
                    n_classes,
                    cfg.c_grid[ci],
                    cfg.tol,
                );
                all.iter()
                    .filter(|&&i| i % folds == f)
                    .filter(|&&i| {
                        argmax_decision(
                            &machines,
                            x.row(i).as_slice().expect("standard layout"),
                            cfg.gamma_grid[gi],
                        ) == y[i]
                    })
                    .count()
            })
            .collect();
        let mut table = Vec::new();
        let mut best: Option<(usize, usize, usize)> = None;
        for ci in 0..cfg.c_grid.len() {
            for gi in 0..cfg.gamma_grid.len() {
                let base = (ci * cfg.gamma_grid.len() + gi) * folds;
                let hits: usize = correct[base..base + folds].iter().sum();
                table.push((
                    cfg.c_grid[ci],
                    cfg.gamma_grid[gi],
                    T::from_usize_lossy(hits) / T::from_usize_lossy(n),
                ));
                // strict improvement only: earlier (smaller C) points win ties
                if best.is_none_or(|(_, _, h)| hits > h) {
                    best = Some((ci, gi, hits));
                }
            }
        }
        let (ci, gi, _) = best.expect("non-empty grid");
        (cfg.c_grid[ci], cfg.gamma_grid[gi], table)
    };

    let k = gram(&x, gamma);
    let machines = fit_ovr(&k, &x, &y, &all, n_classes, c, cfg.tol);
    Ok(SvmModel {
        machines,
        class_labels: labels,
        c,
        kernel_gamma: gamma,
        n_features: x.ncols(),
        scaler,
        cv,
    })
}

impl<T: Real> SvmModel<T> {
    /// Decision values for each class, in label order.
    pub fn decision_values(&self, x: &[T]) -> Result<Vec<T>> {
        let q = self.prepare(x)?;
        Ok(self
            .machines
            .iter()
            .map(|m| m.decision(&q, self.kernel_gamma))
            .collect())
    }

    fn prepare(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n_features {
            return Err(Error::dim("SVM query", self.n_features, x.len()));
        }
        Ok(match &self.scaler {
            Some(s) => s.transform_row(x),
            None => x.to_vec(),
        })
    }
}

impl<T: Real> Classifier<T> for SvmModel<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    fn predict_index(&self, x: &[T]) -> Result<usize> {
        let q = self.prepare(x)?;
        Ok(argmax_decision(&self.machines, &q, self.kernel_gamma))
    }
}
