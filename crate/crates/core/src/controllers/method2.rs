//! PCA-coefficient regression mapped through the human hand into the robot.

use super::{Controller, StepOutput};
use crate::error::{Error, Result};
use crate::models::Regressor;
use crate::pca::{pca_reconstruct, PcaSubspace};
use crate::scalar::Real;
use crate::signal::{window_len, MovingMedian};
use crate::subspace::{project_from_joints, project_to_robot, HandMap};

pub struct Method2<'a, T: Real, R: ?Sized> {
    regressor: &'a R,
    pca: &'a PcaSubspace<T>,
    human: &'a HandMap<T>,
    robot: &'a HandMap<T>,
    median: Vec<MovingMedian<T>>,
}

impl<'a, T: Real, R: Regressor<T> + ?Sized> Method2<'a, T, R> {
    pub fn new(
        dt: T,
        median_window_s: T,
        regressor: &'a R,
        pca: &'a PcaSubspace<T>,
        human: &'a HandMap<T>,
        robot: &'a HandMap<T>,
    ) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if regressor.n_outputs() != pca.n_components() {
            return Err(Error::dim(
                "regressor outputs (PCA coefficients)",
                pca.n_components(),
                regressor.n_outputs(),
            ));
        }
        if pca.dim() != human.n_joints {
            return Err(Error::dim(
                "PCA dimension vs human joints",
                human.n_joints,
                pca.dim(),
            ));
        }
        human.validate()?;
        robot.validate()?;
        let len = window_len(median_window_s, T::one() / dt)?;
        Ok(Self {
            regressor,
            pca,
            human,
            robot,
            median: (0..pca.n_components())
                .map(|_| MovingMedian::new(len))
                .collect(),
        })
    }
}

impl<T: Real, R: Regressor<T> + ?Sized> Controller<T> for Method2<'_, T, R> {
    fn step(&mut self, x_hat: &[T]) -> Result<StepOutput<T>> {
        if x_hat.len() != self.regressor.n_features() {
            return Err(Error::dim(
                "EMG feature vector",
                self.regressor.n_features(),
                x_hat.len(),
            ));
        }
        let raw = self.regressor.predict(x_hat)?;
        let coef: Vec<T> = self
            .median
            .iter_mut()
            .zip(&raw)
            .map(|(m, &c)| m.push(c))
            .collect();
        let human_q = pca_reconstruct(&coef, self.pca)?;
        let (psi, _) = project_from_joints(&human_q, self.human)?;
        let command = project_to_robot(&psi, self.robot)?;
        Ok(StepOutput {
            label: None,
            mode: None,
            psi,
            command,
            stalled: false,
        })
    }

    fn reset(&mut self) {
        self.median.iter_mut().for_each(MovingMedian::reset);
    }
}
