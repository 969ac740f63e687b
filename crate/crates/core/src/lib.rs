//! Deconvolution kernel estimation of the density and distribution function
//! of a stationary linear process observed with additive noise.
//!
//! The crate covers simulation of short- and long-memory linear processes,
//! noise laws with their characteristic functions, tabulation of the
//! deconvolution kernel, the estimators themselves, bandwidth rules with
//! the matching central-limit normalisations, and a Monte Carlo harness.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandwidth;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod noise;
pub mod process;
pub mod quadrature;
mod series;
pub mod special;
pub mod stats;

pub use bandwidth::{
    classify_regime, regime_threshold, BandwidthPlan, BandwidthRule, CltScaling, CltTarget, Regime,
};
pub use error::{Error, Result};
pub use estimators::{EstimateKind, EstimateResult, TheoryMse};
pub use kernel::{build_gn, default_kernel, GnTable, GridConfig, KernelSpec};
pub use noise::{NoiseModel, ObservedDensity, SmoothnessClass};
pub use process::{CoefficientKind, CoefficientSequence, InnovationLaw, SeriesSample, Simulator};
