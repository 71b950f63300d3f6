//! Ordinary least squares with an intercept.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// `y = [x, 1] · coef`, where `coef` is `(d + 1) × m` with the intercept in
/// the last row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearMap<T: Real> {
    pub coef: Array2<T>,
}

impl<T: Real> LinearMap<T> {
    pub fn fit(x: &Array2<T>, y: &Array2<T>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::dim("OLS rows", x.nrows(), y.nrows()));
        }
        let ones = Array2::<T>::ones((x.nrows(), 1));
        let design = ndarray::concatenate(Axis(1), &[x.view(), ones.view()])
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let coef = linalg::lstsq(design.view(), y.view())?;
        Ok(Self { coef })
    }

    pub fn n_inputs(&self) -> usize {
        self.coef.nrows() - 1
    }

    pub fn n_outputs(&self) -> usize {
        self.coef.ncols()
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        let d = self.n_inputs();
        if x.len() != d {
            return Err(Error::dim("linear map input", d, x.len()));
        }
        Ok((0..self.n_outputs())
            .map(|j| {
                let mut s = self.coef[[d, j]];
                for (i, &xi) in x.iter().enumerate() {
                    s += xi * self.coef[[i, j]];
                }
                s
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn recovers_affine_function() {
        let x = array![[0.0f64, 1.0], [1.0, 0.0], [2.0, 1.0], [3.0, 5.0]];
        let y = x
            .map_axis(Axis(1), |r| 2.0 * r[0] - r[1] + 0.5)
            .insert_axis(Axis(1));
        let m = LinearMap::fit(&x, &y).unwrap();
        let p = m.apply(&[10.0, -2.0]).unwrap();
        assert!((p[0] - 22.5).abs() < 1e-10);
    }
}
