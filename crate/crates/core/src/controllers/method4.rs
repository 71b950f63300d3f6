//! Grasp-type classification plus a force-driven aperture.
//!
//! The recognized pose picks an (open, closed) template pair; the mean
//! envelope, min–max normalized per pose, interpolates between them. More
//! force opens the hand.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Controller, PoseClass, StepOutput};
use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::scalar::Real;
use crate::stats;
use crate::subspace::{project_to_robot, HandMap, SubspacePose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PoseTemplate<T: Real> {
    pub open: SubspacePose<T>,
    pub closed: SubspacePose<T>,
}

/// `(f_min, f_max)` per pose label.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ForceCalibration<T: Real> {
    pub ranges: BTreeMap<String, [T; 2]>,
}

impl<T: Real> ForceCalibration<T> {
    pub fn validate(&self) -> Result<()> {
        for (label, &[lo, hi]) in &self.ranges {
            if !(lo >= T::zero() && hi > lo) {
                return Err(Error::InvalidConfig(format!(
                    "force calibration for `{label}` needs 0 <= f_min < f_max, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Openness `θ ∈ [0, 1]` for force `f` under pose `label`.
    pub fn theta(&self, label: &str, f: T) -> Result<T> {
        let [lo, hi] = *self
            .ranges
            .get(label)
            .ok_or_else(|| Error::InvalidConfig(format!("no force calibration for `{label}`")))?;
        Ok(((f - lo) / (hi - lo)).clamp_to(T::zero(), T::one()))
    }
}

/// Open/closed templates for the three grasp types.
pub fn default_templates<T: Real>() -> BTreeMap<String, PoseTemplate<T>> {
    let pose = |a: f64, s: f64, e: f64| SubspacePose::new(T::lit(a), T::lit(s), T::lit(e));
    let mut m = BTreeMap::new();
    m.insert(
        PoseClass::Power.to_string(),
        PoseTemplate {
            open: pose(0.3, 0.05, 0.05),
            closed: pose(0.3, 0.9, 0.8),
        },
    );
    m.insert(
        PoseClass::Precision.to_string(),
        PoseTemplate {
            open: pose(0.7, 0.1, 0.1),
            closed: pose(0.7, 0.6, 0.3),
        },
    );
    m.insert(
        PoseClass::Pinch.to_string(),
        PoseTemplate {
            open: pose(0.0, 0.1, 0.0),
            closed: pose(0.0, 0.5, 0.6),
        },
    );
    m
}

/// Mean rectified envelope across channels.
pub fn mean_force<T: Real>(x_hat: &[T]) -> T {
    let abs: Vec<T> = x_hat.iter().map(|v| v.abs()).collect();
    stats::mean(&abs).unwrap_or(T::zero())
}

/// Per-label minimum and maximum of [`mean_force`] over labeled vectors.
pub fn calibrate_force<T: Real, S: AsRef<str>>(
    windows: &[(S, Vec<T>)],
) -> Result<ForceCalibration<T>> {
    let mut ranges: BTreeMap<String, [T; 2]> = BTreeMap::new();
    for (label, x) in windows {
        let f = mean_force(x);
        let r = ranges
            .entry(label.as_ref().to_string())
            .or_insert([T::infinity(), T::neg_infinity()]);
        r[0] = r[0].min(f);
        r[1] = r[1].max(f);
    }
    let cal = ForceCalibration { ranges };
    cal.validate()?;
    Ok(cal)
}

pub struct Method4<'a, T: Real, C: ?Sized> {
    classifier: &'a C,
    calib: &'a ForceCalibration<T>,
    templates: &'a BTreeMap<String, PoseTemplate<T>>,
    map: &'a HandMap<T>,
}

impl<'a, T: Real, C: Classifier<T> + ?Sized> Method4<'a, T, C> {
    pub fn new(
        classifier: &'a C,
        calib: &'a ForceCalibration<T>,
        templates: &'a BTreeMap<String, PoseTemplate<T>>,
        map: &'a HandMap<T>,
    ) -> Result<Self> {
        calib.validate()?;
        map.validate()?;
        for label in classifier.class_labels() {
            if !templates.contains_key(label) {
                return Err(Error::InvalidConfig(format!(
                    "no pose template for `{label}`"
                )));
            }
            if !calib.ranges.contains_key(label) {
                return Err(Error::InvalidConfig(format!(
                    "no force calibration for `{label}`"
                )));
            }
        }
        for (label, t) in templates {
            if !(t.open.is_valid() && t.closed.is_valid()) {
                return Err(Error::InvalidConfig(format!(
                    "template for `{label}` leaves [0,1]^3"
                )));
            }
        }
        Ok(Self {
            classifier,
            calib,
            templates,
            map,
        })
    }
}

impl<T: Real, C: Classifier<T> + ?Sized> Controller<T> for Method4<'_, T, C> {
    fn step(&mut self, x_hat: &[T]) -> Result<StepOutput<T>> {
        if x_hat.len() != self.classifier.n_features() {
            return Err(Error::dim(
                "EMG feature vector",
                self.classifier.n_features(),
                x_hat.len(),
            ));
        }
        let label = self.classifier.predict_label(x_hat)?;
        let theta = self.calib.theta(label, mean_force(x_hat))?;
        let t = &self.templates[label];
        let psi = t.closed.lerp(t.open, theta);
        let command = project_to_robot(&psi, self.map)?;
        Ok(StepOutput {
            label: Some(label.to_string()),
            mode: None,
            psi,
            command,
            stalled: false,
        })
    }

    fn reset(&mut self) {}
}
