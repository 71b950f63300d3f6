//! Kernel ridge regression with an RBF kernel and grid-searched `(λ, γ)`.

use ndarray::{s, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    default_output_names, fold_ranges, regression_matrices, strided_indices, LabeledWindow,
    Regressor, Standardizer,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct KrrConfig<T: Real> {
    pub lambda_grid: Vec<T>,
    pub gamma_grid: Vec<T>,
    pub cv_folds: usize,
    pub standardize: bool,
    /// Caps the number of support points by strided subsampling.
    pub max_support: Option<usize>,
    pub output_names: Vec<String>,
}

impl<T: Real> Default for KrrConfig<T> {
    fn default() -> Self {
        Self {
            lambda_grid: [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2].map(T::lit).to_vec(),
            gamma_grid: [1e-3, 1e-2, 1e-1, 1.0, 1e1].map(T::lit).to_vec(),
            cv_folds: 5,
            standardize: true,
            max_support: None,
            output_names: Vec::new(),
        }
    }
}

impl<T: Real> KrrConfig<T> {
    /// No grid search: one `(λ, γ)` pair.
    pub fn fixed(lambda: T, gamma: T) -> Self {
        Self {
            lambda_grid: vec![lambda],
            gamma_grid: vec![gamma],
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CvPoint<T: Real> {
    pub lambda: T,
    pub gamma: T,
    pub mse: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KrrModel<T: Real> {
    /// Training rows in the (possibly standardized) feature space.
    pub support_points: Array2<T>,
    /// `n_support × n_outputs`.
    pub dual_weights: Array2<T>,
    pub kernel_gamma: T,
    pub ridge_lambda: T,
    pub output_names: Vec<String>,
    pub scaler: Option<Standardizer<T>>,
    /// Cross-validation table; empty when a single grid point was given.
    pub cv: Vec<CvPoint<T>>,
}

#[inline]
pub(crate) fn rbf<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>, gamma: T) -> T {
    let d2: T = a
        .iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    (-gamma * d2).exp()
}

pub(crate) fn gram<T: Real>(x: &Array2<T>, gamma: T) -> Array2<T> {
    let n = x.nrows();
    let mut k = Array2::<T>::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = T::one();
        for j in 0..i {
            let v = rbf(x.row(i), x.row(j), gamma);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

fn solve_dual<T: Real>(k: &Array2<T>, y: &Array2<T>, lambda: T) -> Result<Array2<T>> {
    let mut reg = k.clone();
    for i in 0..reg.nrows() {
        reg[[i, i]] += lambda;
    }
    let l = linalg::cholesky(reg.view()).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!(
            "kernel system (K + {lambda} I) is singular ({msg}); duplicate training points need lambda > 0"
        )),
        other => other,
    })?;
    Ok(linalg::cholesky_solve(l.view(), y.view()))
}

/// Solves `(K + λI) W = Y` for fixed hyperparameters on raw (unscaled) rows.
pub fn fit_krr<T: Real>(x: &Array2<T>, y: &Array2<T>, lambda: T, gamma: T) -> Result<KrrModel<T>> {
    if x.nrows() != y.nrows() {
        return Err(Error::dim("KRR targets", x.nrows(), y.nrows()));
    }
    if !(gamma > T::zero()) || !(lambda >= T::zero()) {
        return Err(Error::InvalidConfig(format!(
            "need gamma > 0 and lambda >= 0, got {gamma}, {lambda}"
        )));
    }
    let k = gram(x, gamma);
    let w = solve_dual(&k, y, lambda)?;
    Ok(KrrModel {
        support_points: x.clone(),
        dual_weights: w,
        kernel_gamma: gamma,
        ridge_lambda: lambda,
        output_names: default_output_names(y.ncols()),
        scaler: None,
        cv: Vec::new(),
    })
}

/// Grid search by contiguous k-fold CV, then refit on all rows.
///
/// Exact MSE ties go to the larger `λ`, then the larger `γ`.
pub fn train_krr<T: Real>(data: &[LabeledWindow<T>], cfg: &KrrConfig<T>) -> Result<KrrModel<T>> {
    let (x_all, y_all) = regression_matrices(data)?;
    if cfg.lambda_grid.is_empty() || cfg.gamma_grid.is_empty() {
        return Err(Error::InvalidConfig("empty KRR hyperparameter grid".into()));
    }
    let idx = strided_indices(x_all.nrows(), cfg.max_support);
    let x_raw = x_all.select(ndarray::Axis(0), &idx);
    let y = y_all.select(ndarray::Axis(0), &idx);
    let scaler = cfg.standardize.then(|| Standardizer::fit(&x_raw));
    let x = match &scaler {
        Some(s) => s.transform(&x_raw),
        None => x_raw,
    };
    let n = x.nrows();

    let single = cfg.lambda_grid.len() == 1 && cfg.gamma_grid.len() == 1;
    let mut cv = Vec::new();
    let (lambda, gamma) = if single {
        (cfg.lambda_grid[0], cfg.gamma_grid[0])
    } else {
        if cfg.cv_folds < 2 || n < cfg.cv_folds {
            return Err(Error::InvalidConfig(format!(
                "need cv_folds >= 2 and at least cv_folds samples (folds {}, samples {n})",
                cfg.cv_folds
            )));
        }
        let folds = fold_ranges(n, cfg.cv_folds);
        let jobs: Vec<(usize, usize)> = (0..cfg.gamma_grid.len())
            .flat_map(|g| (0..folds.len()).map(move |f| (g, f)))
            .collect();
        // each job: squared-error sums per lambda for one (gamma, fold)
        let per_job: Vec<Vec<T>> = jobs
            .par_iter()
            .map(|&(g, f)| {
                let gamma = cfg.gamma_grid[g];
                let test = folds[f].clone();
                let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
                let xt = x.select(ndarray::Axis(0), &train);
                let yt = y.select(ndarray::Axis(0), &train);
                let k = gram(&xt, gamma);
                let kx = Array2::from_shape_fn((test.len(), train.len()), |(a, b)| {
                    rbf(x.row(test.start + a), xt.row(b), gamma)
                });
                let truth = y.slice(s![test.clone(), ..]);
                cfg.lambda_grid
                    .iter()
                    .map(|&lambda| match solve_dual(&k, &yt, lambda) {
                        Ok(w) => {
                            let pred = kx.dot(&w);
                            pred.iter()
                                .zip(truth.iter())
                                .map(|(&p, &t)| (p - t) * (p - t))
                                .sum()
                        }
                        Err(_) => T::infinity(),
                    })
                    .collect()
            })
            .collect();
        let denom = T::from_usize_lossy(n * y.ncols());
        let mut best: Option<CvPoint<T>> = None;
        for (g, &gamma) in cfg.gamma_grid.iter().enumerate() {
            for (l, &lambda) in cfg.lambda_grid.iter().enumerate() {
                let sse: T = (0..folds.len())
                    .map(|f| per_job[g * folds.len() + f][l])
                    .sum();
                let point = CvPoint {
                    lambda,
                    gamma,
                    mse: sse / denom,
                };
                cv.push(point);
                let better = match best {
                    None => true,
                    Some(b) => {
                        point.mse < b.mse
                            || (point.mse == b.mse
                                && (point.lambda > b.lambda
                                    || (point.lambda == b.lambda && point.gamma > b.gamma)))
                    }
                };
                if better {
                    best = Some(point);
                }
            }
        }
        let best = best.expect("non-empty grid");
        if !best.mse.is_finite() {
            return Err(Error::Singular(
                "every grid point produced a singular kernel system; use lambda > 0".into(),
            ));
        }
        (best.lambda, best.gamma)
    };

    let mut model = fit_krr(&x, &y, lambda, gamma)?;
    model.scaler = scaler;
    model.cv = cv;
    model.output_names = if cfg.output_names.len() == y.ncols() {
        cfg.output_names.clone()
    } else {
        default_output_names(y.ncols())
    };
    Ok(model)
}

/// `Σᵢ exp(−γ‖x − xᵢ‖²) Wᵢ`, unclamped.
pub fn predict_krr<T: Real>(model: &KrrModel<T>, x: &[T]) -> Result<Vec<T>> {
    let d = model.support_points.ncols();
    if x.len() != d {
        return Err(Error::dim("KRR query", d, x.len()));
    }
    let q = match &model.scaler {
        Some(s) => s.transform_row(x),
        None => x.to_vec(),
    };
    let m = model.dual_weights.ncols();
    let mut out = vec![T::zero(); m];
    // hot path: walk contiguous buffers when the layout allows it
    if let (Some(sp), Some(dw)) = (
        model.support_points.as_slice(),
        model.dual_weights.as_slice(),
    ) {
        for (row, w) in sp.chunks_exact(d).zip(dw.chunks_exact(m)) {
            let mut d2 = T::zero();
            for (&a, &b) in row.iter().zip(&q) {
                let t = a - b;
                d2 += t * t;
            }
            let k = (-model.kernel_gamma * d2).exp();
            for (o, &wi) in out.iter_mut().zip(w) {
                *o += k * wi;
            }
        }
        return Ok(out);
    }
    for (row, w) in model
        .support_points
        .rows()
        .into_iter()
        .zip(model.dual_weights.rows())
    {
        let d2: T = row.iter().zip(&q).map(|(&a, &b)| (a - b) * (a - b)).sum();
        let k = (-model.kernel_gamma * d2).exp();
        for (o, &wi) in out.iter_mut().zip(w.iter()) {
            *o += k * wi;
        }
    }
    Ok(out)
}

impl<T: Real> KrrModel<T> {
    pub fn n_support(&self) -> usize {
        self.support_points.nrows()
    }
}

impl<T: Real> Regressor<T> for KrrModel<T> {
    fn n_features(&self) -> usize {
        self.support_points.ncols()
    }

    fn n_outputs(&self) -> usize {
        self.dual_weights.ncols()
    }

    fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        predict_krr(self, x)
    }
}
