//! Streaming teleoperation controllers sharing one step interface.
//!
//! A controller consumes one filtered EMG vector per step and emits a
//! subspace pose together with the clamped robot joint command.

mod method1;
mod method2;
mod method3;
mod method4;
pub mod stubs;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::{EmgSample, EnvelopeFilter, FilterConfig};
use crate::subspace::{JointCommand, SubspacePose};

pub use method1::{ControllerState, Method1, Method1Config, Mode};
pub use method2::Method2;
pub use method3::{
    method3_project, method3_variance_analysis, SegmentVariance, WristAnalysis, WristCalibration,
    WristRoles, WristSegment,
};
pub use method4::{
    calibrate_force, default_templates, mean_force, ForceCalibration, Method4, PoseTemplate,
};

/// Method-1 classifier output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GestureClass {
    Normal,
    Spread,
    /// isometric contraction
    Contract,
}

impl GestureClass {
    pub const ALL: [GestureClass; 3] = [
        GestureClass::Normal,
        GestureClass::Spread,
        GestureClass::Contract,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GestureClass::Normal => "Normal",
            GestureClass::Spread => "Spread",
            GestureClass::Contract => "Contract",
        }
    }
}

impl fmt::Display for GestureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GestureClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GestureClass::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown gesture class `{s}`")))
    }
}

/// Method-4 grasp type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PoseClass {
    Power,
    Precision,
    Pinch,
}

impl PoseClass {
    pub const ALL: [PoseClass; 3] = [PoseClass::Power, PoseClass::Precision, PoseClass::Pinch];

    pub fn as_str(self) -> &'static str {
        match self {
            PoseClass::Power => "Power",
            PoseClass::Precision => "Precision",
            PoseClass::Pinch => "Pinch",
        }
    }
}

impl fmt::Display for PoseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoseClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PoseClass::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown pose class `{s}`")))
    }
}

/// What a controller produced for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<T: Real> {
    /// Classifier decision, when the method has one.
    pub label: Option<String>,
    pub mode: Option<Mode>,
    pub psi: SubspacePose<T>,
    pub command: JointCommand<T>,
    pub stalled: bool,
}

pub trait Controller<T: Real> {
    fn step(&mut self, x_hat: &[T]) -> Result<StepOutput<T>>;
    /// Returns to the initial state.
    fn reset(&mut self);
}

/// One row of a controller trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrajectoryPoint<T: Real> {
    pub t: T,
    pub label: Option<String>,
    pub mode: Option<Mode>,
    pub psi: SubspacePose<T>,
    pub q: Vec<T>,
    pub clamped: Vec<bool>,
    pub stalled: bool,
}

/// Filters a raw session sample by sample and folds the controller over it.
pub fn run_controller<T: Real, C: Controller<T> + ?Sized>(
    controller: &mut C,
    samples: &[EmgSample<T>],
    filter: &FilterConfig<T>,
) -> Result<Vec<TrajectoryPoint<T>>> {
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let mut env = EnvelopeFilter::new(filter.clone(), first.channels.len())?;
    samples
        .iter()
        .enumerate()
        .map(|(index, s)| {
            let at = |e: Error| Error::AtSample {
                index,
                source: Box::new(e),
            };
            let x = env.push(s).map_err(at)?;
            let out = controller.step(&x).map_err(at)?;
            Ok(TrajectoryPoint {
                t: s.t,
                label: out.label,
                mode: out.mode,
                psi: out.psi,
                q: out.command.q,
                clamped: out.command.clamped,
                stalled: out.stalled,
            })
        })
        .collect()
}

/// Same as [`run_controller`] over vectors that are already filtered.
pub fn run_filtered<T: Real, C: Controller<T> + ?Sized>(
    controller: &mut C,
    x_hat: &[Vec<T>],
) -> Result<Vec<StepOutput<T>>> {
    x_hat
        .iter()
        .enumerate()
        .map(|(index, x)| {
            controller.step(x).map_err(|e| Error::AtSample {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}
