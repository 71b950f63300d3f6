//! Dense linear algebra kernels used by the models and the PCA fit.
//!
//! Everything here is written against [`Real`] so the same code runs in `f32`
//! and `f64`. Matrices are small to moderate (a few hundred rows at most for
//! the kernel solves), so plain row-major loops are adequate.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stacks equal-length rows into a matrix.
pub fn matrix_from_rows<T: Real, R: AsRef<[T]>>(rows: &[R]) -> Result<Array2<T>> {
    let n = rows.len();
    let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
    let mut m = Array2::<T>::zeros((n, d));
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != d {
            return Err(Error::dim("row length", d, r.len()));
        }
        for (j, &x) in r.iter().enumerate() {
            m[[i, j]] = x;
        }
    }
    Ok(m)
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
///
/// Fails with [`Error::Singular`] when a pivot drops below
/// `16 · n · eps · max(diag(A))`, which is how exact duplicates under zero
/// regularization show up.
pub fn cholesky<T: Real>(a: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dim(
            "cholesky",
            format!("{n}x{n}"),
            format!("{n}x{}", a.ncols()),
        ));
    }
    let max_diag = (0..n).map(|i| a[[i, i]].abs()).fold(T::zero(), T::max);
    let tol = T::epsilon() * T::lit(16.0) * T::from_usize_lossy(n.max(1)) * max_diag;
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > tol) {
            return Err(Error::Singular(format!(
                "pivot {j} is {d} (tolerance {tol}); the matrix is not positive definite"
            )));
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ X = B` given the Cholesky factor.
pub fn cholesky_solve<T: Real>(l: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Array2<T> {
    let n = l.nrows();
    let mut x = b.to_owned();
    for c in 0..x.ncols() {
        // forward
        for i in 0..n {
            let mut s = x[[i, c]];
            for k in 0..i {
                s -= l[[i, k]] * x[[k, c]];
            }
            x[[i, c]] = s / l[[i, i]];
        }
        // backward
        for i in (0..n).rev() {
            let mut s = x[[i, c]];
            for k in (i + 1)..n {
                s -= l[[k, i]] * x[[k, c]];
            }
            x[[i, c]] = s / l[[i, i]];
        }
    }
    x
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unit eigenvectors
/// as the columns of the second element.
pub fn symmetric_eigen<T: Real>(a: ArrayView2<'_, T>) -> Result<(Vec<T>, Array2<T>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dim(
            "symmetric_eigen",
            format!("{n}x{n}"),
            format!("{n}x{}", a.ncols()),
        ));
    }
    let mut m = a.to_owned();
    // symmetrize against round-off in the caller's accumulation
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[[i, j]] + m[[j, i]]) * T::lit(0.5);
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
    let mut v = Array2::<T>::eye(n);
    let total: T = m.iter().map(|&x| x * x).sum::<T>().sqrt();
    let tiny = T::epsilon() * total;

    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<T>()
            .sqrt();
        if off <= tiny {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[[j, j]]
            .partial_cmp(&m[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| m[[i, i]]).collect();
    let mut vectors = Array2::<T>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok((values, vectors))
}

/// Least-squares solution of `A X ≈ B` by Householder QR.
///
/// Columns that are numerically dependent on earlier columns receive a zero
/// coefficient, so rank-deficient designs still yield a minimizer.
pub fn lstsq<T: Real>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let (m, n) = a.dim();
    if b.nrows() != m {
        return Err(Error::dim("lstsq rhs rows", m, b.nrows()));
    }
    let mut r = a.to_owned();
    let mut qtb = b.to_owned();
    let max_col = (0..n)
        .map(|c| r.column(c).iter().map(|&x| x * x).sum::<T>().sqrt())
        .fold(T::zero(), T::max);
    let tol = T::epsilon() * T::lit(10.0) * T::from_usize_lossy(m.max(n).max(1)) * max_col;

    let mut pivot_row: Vec<Option<usize>> = vec![None; n];
    let mut row = 0;
    for c in 0..n {
        if row >= m {
            break;
        }
        let norm = (row..m).map(|i| r[[i, c]] * r[[i, c]]).sum::<T>().sqrt();
        if !(norm > tol) {
            continue;
        }
        let alpha = if r[[row, c]] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (row..m).map(|i| r[[i, c]]).collect();
        v[0] -= alpha;
        let vv: T = v.iter().map(|&x| x * x).sum();
        if vv > T::zero() {
            let two = T::lit(2.0);
            for j in c..n {
                let dot: T = v.iter().zip(row..m).map(|(&vi, i)| vi * r[[i, j]]).sum();
                let f = two * dot / vv;
                for (vi, i) in v.iter().zip(row..m) {
                    r[[i, j]] -= f * *vi;
                }
            }
            for j in 0..qtb.ncols() {
                let dot: T = v.iter().zip(row..m).map(|(&vi, i)| vi * qtb[[i, j]]).sum();
                let f = two * dot / vv;
                for (vi, i) in v.iter().zip(row..m) {
                    qtb[[i, j]] -= f * *vi;
                }
            }
        }
        pivot_row[c] = Some(row);
        row += 1;
    }

    let mut x = Array2::<T>::zeros((n, b.ncols()));
    for k in 0..b.ncols() {
        for c in (0..n).rev() {
            if let Some(p) = pivot_row[c] {
                let mut s = qtb[[p, k]];
                for j in (c + 1)..n {
                    s -= r[[p, j]] * x[[j, k]];
                }
                x[[c, k]] = s / r[[p, c]];
            }
        }
    }
    Ok(x)
}

/// Non-negative least squares `min ‖A x − b‖₂ s.t. x ≥ 0` (Lawson–Hanson active set).
pub fn nnls<T: Real>(a: ArrayView2<'_, T>, b: ArrayView1<'_, T>) -> Result<Array1<T>> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(Error::dim("nnls rhs", m, b.len()));
    }
    let norm1 = (0..n)
        .map(|c| a.column(c).iter().map(|x| x.abs()).sum::<T>())
        .fold(T::zero(), T::max);
    let tol = T::lit(10.0) * T::epsilon() * norm1 * T::from_usize_lossy(m.max(n).max(1));

    let mut x = Array1::<T>::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 3;

    for _ in 0..max_outer {
        let resid = &b - &a.dot(&x);
        let w = a.t().dot(&resid);
        let candidate = (0..n).filter(|&j| !passive[j]).max_by(|&i, &j| {
            w[i].partial_cmp(&w[j])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(j.cmp(&i))
        });
        let Some(t) = candidate else { break };
        if !(w[t] > tol) {
            break;
        }
        passive[t] = true;

        loop {
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = a.select(Axis(1), &cols);
            let bz = b.to_owned().insert_axis(Axis(1));
            let zp = lstsq(sub.view(), bz.view())?;
            let mut z = Array1::<T>::zeros(n);
            for (k, &j) in cols.iter().enumerate() {
                z[j] = zp[[k, 0]];
            }
            if cols.iter().all(|&j| z[j] > T::zero()) {
                x = z;
                break;
            }
            let mut alpha = T::infinity();
            for &j in &cols {
                if z[j] <= T::zero() {
                    let denom = x[j] - z[j];
                    if denom > T::zero() {
                        alpha = alpha.min(x[j] / denom);
                    } else {
                        alpha = T::zero();
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = T::zero();
            }
            for j in 0..n {
                x[j] = x[j] + alpha * (z[j] - x[j]);
            }
            for &j in &cols {
                if x[j] <= tol {
                    x[j] = T::zero();
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Ok(x)
}
