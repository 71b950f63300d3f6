//! Core of the EMG teleoperation pipeline: filtering, the hand subspace,
//! trainable models, the four controllers and synthetic sessions.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the common instantiations.
// `!(x > 0.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controllers;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod models;
pub mod pca;
pub mod scalar;
pub mod signal;
pub mod stats;
pub mod subspace;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub type HandMap64 = subspace::HandMap<f64>;
pub type HandMap32 = subspace::HandMap<f32>;
pub type Pose64 = subspace::SubspacePose<f64>;
pub type Pose32 = subspace::SubspacePose<f32>;
pub type EmgSample64 = signal::EmgSample<f64>;
pub type EmgSample32 = signal::EmgSample<f32>;
pub type FilterConfig64 = signal::FilterConfig<f64>;
pub type KrrModel64 = models::KrrModel<f64>;
pub type ForestModel64 = models::ForestModel<f64>;
pub type SvmModel64 = models::SvmModel<f64>;
pub type PcaSubspace64 = pca::PcaSubspace<f64>;
