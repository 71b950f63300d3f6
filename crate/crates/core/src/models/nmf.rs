//! Non-negative matrix factorization by Lee–Seung multiplicative updates,
//! combined with a linear readout from the activations.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{default_output_names, regression_matrices, LabeledWindow, LinearMap, Regressor};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmfConfig {
    pub n_components: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub output_names: Vec<String>,
}

impl Default for NmfConfig {
    fn default() -> Self {
        Self {
            n_components: 4,
            max_iter: 500,
            seed: 0,
            output_names: Vec::new(),
        }
    }
}

/// `X ≈ W H` with the squared Frobenius error after every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfFactors<T: Real> {
    pub w: Array2<T>,
    pub h: Array2<T>,
    pub objective: Vec<T>,
}

fn frobenius2<T: Real>(x: &Array2<T>, w: &Array2<T>, h: &Array2<T>) -> T {
    let r = x - &w.dot(h);
    r.iter().map(|&v| v * v).sum()
}

pub fn nmf_multiplicative<T: Real>(
    x: &Array2<T>,
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<NmfFactors<T>> {
    let (n, d) = x.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidConfig(format!(
            "n_components must be in 1..={d} (feature dimension), got {k}"
        )));
    }
    if x.iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return Err(Error::InvalidInput(
            "NMF requires finite non-negative features".into(),
        ));
    }
    let mean = x.iter().copied().sum::<T>() / T::from_usize_lossy((n * d).max(1));
    let scale = (mean / T::from_usize_lossy(k)).sqrt().max(T::lit(1e-3));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows, cols| {
        Array2::from_shape_fn((rows, cols), |_| {
            T::lit(rng.random::<f64>() * 0.9 + 0.1) * scale
        })
    };
    let mut w = draw(n, k);
    let mut h = draw(k, d);
    let eps = T::lit(1e-12).max(T::min_positive_value());
    let mut objective = Vec::with_capacity(max_iter + 1);
    objective.push(frobenius2(x, &w, &h));
    for _ in 0..max_iter {
        let num_h = w.t().dot(x);
        let den_h = w.t().dot(&w).dot(&h);
        ndarray::Zip::from(&mut h)
            .and(&num_h)
            .and(&den_h)
            .for_each(|hv, &a, &b| *hv = *hv * a / (b + eps));
        let num_w = x.dot(&h.t());
        let den_w = w.dot(&h.dot(&h.t()));
        ndarray::Zip::from(&mut w)
            .and(&num_w)
            .and(&den_w)
            .for_each(|wv, &a, &b| *wv = *wv * a / (b + eps));
        objective.push(frobenius2(x, &w, &h));
    }
    Ok(NmfFactors { w, h, objective })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NmfLrModel<T: Real> {
    /// `k × d` non-negative basis.
    pub basis: Array2<T>,
    pub readout: LinearMap<T>,
    pub output_names: Vec<String>,
    pub seed: u64,
}

/// Factorizes the training features, then regresses targets on the
/// activation rows of `W`.
pub fn train_nmf_lr<T: Real>(data: &[LabeledWindow<T>], cfg: &NmfConfig) -> Result<NmfLrModel<T>> {
    let (x, y) = regression_matrices(data)?;
    let f = nmf_multiplicative(&x, cfg.n_components, cfg.max_iter, cfg.seed)?;
    let readout = LinearMap::fit(&f.w, &y)?;
    Ok(NmfLrModel {
        basis: f.h,
        readout,
        output_names: if cfg.output_names.len() == y.ncols() {
            cfg.output_names.clone()
        } else {
            default_output_names(y.ncols())
        },
        seed: cfg.seed,
    })
}

impl<T: Real> NmfLrModel<T> {
    /// Non-negative activations of `x` against the basis.
    pub fn encode(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.basis.ncols() {
            return Err(Error::dim("NMF+LR query", self.basis.ncols(), x.len()));
        }
        let a = self.basis.t();
        let b = Array1::from(x.to_vec());
        Ok(linalg::nnls(a.view(), b.view())?.to_vec())
    }
}

impl<T: Real> Regressor<T> for NmfLrModel<T> {
    fn n_features(&self) -> usize {
        self.basis.ncols()
    }

    fn n_outputs(&self) -> usize {
        self.readout.n_outputs()
    }

    fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        let c = self.encode(x)?;
        self.readout.apply(&c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank_one() -> (Array2<f64>, Vec<f64>) {
        let u: Vec<f64> = (0..30).map(|i| 0.2 + (i % 7) as f64 * 0.3).collect();
        let v = [1.0, 0.5, 2.0, 0.1, 0.7, 1.3, 0.05, 0.9];
        (Array2::from_shape_fn((30, 8), |(i, j)| u[i] * v[j]), u)
    }

    #[test]
    fn rank_one_is_recovered() {
        let (x, _) = rank_one();
        let f = nmf_multiplicative(&x, 1, 500, 3).unwrap();
        let total: f64 = x.iter().map(|v| v * v).sum();
        assert!(f.objective.last().unwrap() / total < 1e-12);
    }

    #[test]
    fn objective_never_increases() {
        let x = Array2::from_shape_fn((40, 6), |(i, j)| ((i * 3 + j * 5) % 11) as f64 / 10.0);
        let f = nmf_multiplicative(&x, 3, 200, 9).unwrap();
        for pair in f.objective.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-10, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, _) = rank_one();
        assert!(nmf_multiplicative(&x, 9, 10, 0).is_err());
        let mut neg = x.clone();
        neg[[0, 0]] = -1.0;
        assert!(nmf_multiplicative(&neg, 1, 10, 0).is_err());
    }
}
