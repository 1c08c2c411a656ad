//! Seeded simulation designs and split rules.
//!
//! Every generator is a pure function of its parameters and the random
//! stream it is handed: equal stream states give bitwise-equal samples.

mod bspline;
mod label;
mod outlier;
mod splits;
mod two_sample;

pub use bspline::{additive_spline_mean, cubic_bspline_basis, spline_knots, C3_COEFFICIENTS, C3_COEFFICIENT_SEED};
pub use label::{a2_pilot_thresholds, a2_rules, gen_a2, A2Noise, LabelSample, A2_PILOT_SEED, A2_THRESHOLDS};
pub use outlier::{a1_conditional_score_cdf, a1_oracle_score, gen_a1, gen_b1, GeneratedSample, A1_BETA};
pub use splits::{split_rules, SplitRule, TILT_DIRECTION};
pub use two_sample::{gen_a3, gen_b3, gen_c3, Hypothesis, TwoSampleDesign};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

/// Flags exactly `round(fraction * n)` uniformly chosen rows.
pub(crate) fn exact_flags<R: Rng + ?Sized>(n: usize, fraction: f64, rng: &mut R) -> Vec<bool> {
    let count = ((n as f64) * fraction).round() as usize;
    let mut flags = vec![false; n];
    for i in sample(rng, n, count.min(n)).into_iter() {
        flags[i] = true;
    }
    flags
}

pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on `[lo, hi)`.
pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
