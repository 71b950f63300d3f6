//! Latent-space regression: PCA on the EMG features, then least squares from
//! the latent coordinates to the targets.

use serde::{Deserialize, Serialize};

use super::{default_output_names, regression_matrices, LabeledWindow, LinearMap, Regressor};
use crate::error::Result;
use crate::pca::{fit_pca_components, pca_project, PcaSubspace};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LatentModel<T: Real> {
    pub pca: PcaSubspace<T>,
    pub readout: LinearMap<T>,
    pub output_names: Vec<String>,
}

pub fn train_latent_space<T: Real>(
    data: &[LabeledWindow<T>],
    latent_dim: usize,
    output_names: &[String],
) -> Result<LatentModel<T>> {
    let (x, y) = regression_matrices(data)?;
    let rows: Vec<Vec<T>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    let pca = fit_pca_components(&rows, latent_dim)?;
    let latent: Vec<Vec<T>> = rows
        .iter()
        .map(|r| pca_project(r, &pca))
        .collect::<Result<_>>()?;
    let z = crate::linalg::matrix_from_rows(&latent)?;
    let readout = LinearMap::fit(&z, &y)?;
    Ok(LatentModel {
        pca,
        readout,
        output_names: if output_names.len() == y.ncols() {
            output_names.to_vec()
        } else {
            default_output_names(y.ncols())
        },
    })
}

impl<T: Real> Regressor<T> for LatentModel<T> {
    fn n_features(&self) -> usize {
        self.pca.dim()
    }

    fn n_outputs(&self) -> usize {
        self.readout.n_outputs()
    }

    fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        let z = pca_project(x, &self.pca)?;
        self.readout.apply(&z)
    }
}
