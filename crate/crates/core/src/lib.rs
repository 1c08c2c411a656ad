//! Conditional testing with localized conformal p-values.
//!
//! The crate is organised around one primitive, the kernel-weighted
//! ("localized") conformal p-value in [`conformal`], and four procedures
//! built on top of it:
//!
//! - [`selection`]: balanced data selection with per-selection error control.
//! - [`outlier`]: conditional outlier detection with finite-sample FDR control
//!   (BH plus conditional-calibration pruning).
//! - [`screening`]: conditional label screening with FWER control.
//! - [`two_sample`]: a kernel-weighted U-statistic test for equality of two
//!   conditional distributions.
//!
//! [`models`] holds the score functions the procedures consume, [`scenarios`]
//! the seeded simulation designs, and [`harness`] the replication runner used
//! by the `cct` binary.

pub mod conformal;
pub mod data;
pub mod error;
pub mod harness;
pub mod models;
pub mod outlier;
pub mod rng;
pub mod scenarios;
pub mod screening;
pub mod selection;
pub mod stats;
pub mod two_sample;

pub use conformal::{
    default_bandwidth, kernel_weight, localized_p_value, localized_p_value_tiebreak,
    sample_localization_point, simplified_localized_p_value, unweighted_conformal_p_value,
    CalibrationSet, KernelFamily, KernelSpec, LocalizedPValue, TieRule,
};
pub use data::{Dataset, Matrix};
pub use error::{Error, Result};
