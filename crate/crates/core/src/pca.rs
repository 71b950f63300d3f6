//! Covariance PCA on mean-centred data, used as the joint-space subspace for
//! the PCA control method and as the latent projection of EMG features.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PcaSubspace<T: Real> {
    pub mean: Vec<T>,
    /// `k × d`, orthonormal rows.
    pub components: Array2<T>,
    /// Top-`k` eigenvalues of the covariance, descending.
    pub explained_variance: Vec<T>,
    pub total_variance: T,
    pub variance_fraction_retained: T,
}

fn covariance_spectrum<T: Real, R: AsRef<[T]>>(
    rows: &[R],
) -> Result<(Array1<T>, Vec<T>, Array2<T>)> {
    if rows.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "PCA needs at least 2 samples, got {}",
            rows.len()
        )));
    }
    let x = linalg::matrix_from_rows(rows)?;
    let (n, d) = x.dim();
    if d == 0 {
        return Err(Error::InvalidInput(
            "PCA needs at least one dimension".into(),
        ));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centred = &x - &mean;
    // population covariance: reconstruction MSE then equals the discarded spectrum
    let cov = centred.t().dot(&centred) / T::from_usize_lossy(n);
    let (mut values, vectors) = linalg::symmetric_eigen(cov.view())?;
    let top = values.first().copied().unwrap_or(T::zero()).max(T::zero());
    let floor = T::epsilon() * T::from_usize_lossy(d) * top;
    for v in &mut values {
        if *v <= floor {
            *v = T::zero();
        }
    }
    let total: T = values.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((mean, values, vectors))
}

fn assemble<T: Real>(
    mean: Array1<T>,
    values: Vec<T>,
    vectors: Array2<T>,
    k: usize,
) -> PcaSubspace<T> {
    let total: T = values.iter().copied().sum();
    let retained: T = values[..k].iter().copied().sum();
    let d = vectors.nrows();
    let mut components = Array2::<T>::zeros((k, d));
    for i in 0..k {
        let mut col = vectors.column(i).to_owned();
        // sign convention: largest-magnitude entry positive
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bv), (i, &v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            });
        if col[imax] < T::zero() {
            col.mapv_inplace(|v| -v);
        }
        components.row_mut(i).assign(&col);
    }
    PcaSubspace {
        mean: mean.to_vec(),
        components,
        explained_variance: values[..k].to_vec(),
        total_variance: total,
        variance_fraction_retained: retained / total,
    }
}

/// Keeps the smallest `k` whose eigenvalue mass reaches `variance_threshold`
/// of the total.
pub fn fit_pca_subspace<T: Real, R: AsRef<[T]>>(
    rows: &[R],
    variance_threshold: T,
) -> Result<PcaSubspace<T>> {
    if !(variance_threshold > T::zero() && variance_threshold <= T::one()) {
        return Err(Error::InvalidConfig(format!(
            "variance threshold must be in (0, 1], got {variance_threshold}"
        )));
    }
    let (mean, values, vectors) = covariance_spectrum(rows)?;
    let total: T = values.iter().copied().sum();
    // relative slack so an exact 9:1 spectrum meets a 0.9 threshold
    let goal = variance_threshold * total * (T::one() - T::lit(1e-12));
    let mut cum = T::zero();
    let mut k = values.len();
    for (i, &v) in values.iter().enumerate() {
        cum += v;
        if cum >= goal {
            k = i + 1;
            break;
        }
    }
    Ok(assemble(mean, values, vectors, k))
}

/// Keeps exactly `k` components.
pub fn fit_pca_components<T: Real, R: AsRef<[T]>>(rows: &[R], k: usize) -> Result<PcaSubspace<T>> {
    let (mean, values, vectors) = covariance_spectrum(rows)?;
    if k == 0 || k > values.len() {
        return Err(Error::InvalidConfig(format!(
            "component count {k} must be in 1..={}",
            values.len()
        )));
    }
    Ok(assemble(mean, values, vectors, k))
}

impl<T: Real> PcaSubspace<T> {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `components · (q − mean)`.
pub fn pca_project<T: Real>(q: &[T], sub: &PcaSubspace<T>) -> Result<Vec<T>> {
    if q.len() != sub.dim() {
        return Err(Error::dim("PCA input", sub.dim(), q.len()));
    }
    Ok(sub
        .components
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(q.iter().zip(&sub.mean))
                .map(|(&c, (&x, &m))| c * (x - m))
                .sum()
        })
        .collect())
}

/// `mean + cᵀ · components`.
pub fn pca_reconstruct<T: Real>(c: &[T], sub: &PcaSubspace<T>) -> Result<Vec<T>> {
    if c.len() != sub.n_components() {
        return Err(Error::dim("PCA coefficients", sub.n_components(), c.len()));
    }
    let mut out = sub.mean.clone();
    for (row, &ci) in sub.components.rows().into_iter().zip(c) {
        for (o, &r) in out.iter_mut().zip(row.iter()) {
            *o += ci * r;
        }
    }
    Ok(out)
}
