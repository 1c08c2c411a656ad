//! Kernel weights, localization sampling and the weighted conformal p-value
//! primitives shared by every procedure in the crate.

mod kernel;
mod localization;
mod pvalue;

pub use kernel::{
    default_bandwidth, kernel_weight, sample_localization_point, KernelFamily, KernelSpec,
    LocalizationKernel,
};
pub use localization::{Bandwidth, Localization};
pub use pvalue::{
    calibration_weights, draw_localization, localized_p_value, localized_p_value_tiebreak,
    localized_p_value_with, score_exceeds, simplified_localized_p_value,
    simplified_localized_p_value_with, unweighted_conformal_p_value,
    unweighted_conformal_p_value_deterministic, unweighted_conformal_p_value_with,
    weighted_p_value, CalibrationSet, LocalizationDraw, LocalizedPValue, TieRule,
};
