use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::LocalizationKernel;
use crate::data::Matrix;
use crate::error::{Error, Result};

/// How calibration scores tied with the test score are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// `1{v <= V_i}`: ties count with full weight.
    #[default]
    Inclusive,
    /// `1{v < V_i} + ξ 1{v = V_i}`: ties share the randomization draw.
    Randomized,
}

/// Calibration covariates (weighting coordinates only) and their scores.
///
/// Scores are finite, or `f64::NEG_INFINITY` for summary scores taken over
/// an empty set. A `-inf` entry never satisfies the indicator `1{v <= V_i}`
/// but keeps its weight in the denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    covariates: Matrix,
    scores: Vec<f64>,
}

impl CalibrationSet {
    pub fn new(covariates: Matrix, scores: Vec<f64>) -> Result<Self> {
        if covariates.nrows() != scores.len() {
            return Err(Error::DimensionMismatch {
                expected: covariates.nrows(),
                found: scores.len(),
            });
        }
        if let Some((i, s)) = scores
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() || **s == f64::NEG_INFINITY))
        {
            return Err(Error::arg(format!("calibration score {i} is {s}")));
        }
        Ok(Self { covariates, scores })
    }

    pub fn covariates(&self) -> &Matrix {
        &self.covariates
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Calibration points whose index satisfies `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        Self {
            covariates: self.covariates.select_rows(&idx),
            scores: idx.iter().map(|&i| self.scores[i]).collect(),
        }
    }
}

/// The randomization behind one localized p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationDraw {
    pub x_tilde: Vec<f64>,
    pub xi: f64,
}

/// Samples X̃ from `H(test_x, ·)`, then ξ ~ U[0, 1].
pub fn draw_localization<K: LocalizationKernel, R: Rng + ?Sized>(
    kernel: &K,
    test_x: &[f64],
    rng: &mut R,
) -> LocalizationDraw {
    let x_tilde = kernel.sample(test_x, rng);
    let xi = rng.random::<f64>();
    LocalizationDraw { x_tilde, xi }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedPValue {
    pub value: f64,
    pub xi: f64,
    pub x_tilde: Vec<f64>,
    pub numerator_weight_sum: f64,
    pub denominator_weight_sum: f64,
}

/// `1{v <= V}` with the `-inf` sentinel never exceeded.
#[inline]
pub fn score_exceeds(test_score: f64, calib_score: f64) -> bool {
    calib_score != f64::NEG_INFINITY && test_score <= calib_score
}

/// `H(X_i, loc)` for every calibration row.
pub fn calibration_weights<K: LocalizationKernel>(
    covariates: &Matrix,
    loc: &[f64],
    kernel: &K,
) -> Vec<f64> {
    covariates.rows().map(|row| kernel.weight(row, loc)).collect()
}

/// Weighted rank p-value from precomputed weights.
///
/// Returns `(p, numerator, denominator)` where
/// `p = [Σ w_i 1{v ≤ V_i} + ξ w_test] / [Σ w_i + w_test]`, with ties handled
/// per `tie`.
pub fn weighted_p_value(
    weights: &[f64],
    scores: &[f64],
    test_score: f64,
    test_weight: f64,
    xi: f64,
    tie: TieRule,
) -> Result<(f64, f64, f64)> {
    let mut above = 0.0;
    let mut total = 0.0;
    match tie {
        TieRule::Inclusive => {
            for (&w, &s) in weights.iter().zip(scores) {
                if score_exceeds(test_score, s) {
                    above += w;
                }
                total += w;
            }
        }
        TieRule::Randomized => {
            let mut tied = 0.0;
            for (&w, &s) in weights.iter().zip(scores) {
                if s != f64::NEG_INFINITY {
                    if test_score < s {
                        above += w;
                    } else if test_score == s {
                        tied += w;
                    }
                }
                total += w;
            }
            above += xi * tied;
        }
    }
    let numerator = above + xi * test_weight;
    let denominator = total + test_weight;
    if denominator <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    Ok(((numerator / denominator).min(1.0), numerator, denominator))
}

fn check_inputs<K: LocalizationKernel>(
    calib: &CalibrationSet,
    test_x: &[f64],
    kernel: &K,
) -> Result<()> {
    if calib.is_empty() {
        return Err(Error::EmptyCalibration("localized p-value".into()));
    }
    if test_x.len() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: test_x.len(),
        });
    }
    if calib.covariates().ncols() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: calib.covariates().ncols(),
        });
    }
    Ok(())
}

/// Localized conformal p-value for fixed draws (X̃, ξ).
pub fn localized_p_value_with<K: LocalizationKernel>(
    calib: &CalibrationSet,
    test_x: &[f64],
    test_score: f64,
    kernel: &K,
    draw: &LocalizationDraw,
    tie: TieRule,
) -> Result<LocalizedPValue> {
    check_inputs(calib, test_x, kernel)?;
    if draw.x_tilde.len() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: draw.x_tilde.len(),
        });
    }
    let weights = calibration_weights(calib.covariates(), &draw.x_tilde, kernel);
    let test_weight = kernel.weight(test_x, &draw.x_tilde);
    let (value, num, den) =
        weighted_p_value(&weights, calib.scores(), test_score, test_weight, draw.xi, tie)?;
    Ok(LocalizedPValue {
        value,
        xi: draw.xi,
        x_tilde: draw.x_tilde.clone(),
        numerator_weight_sum: num,
        denominator_weight_sum: den,
    })
}

/// Samples (X̃, ξ) and evaluates the localized conformal p-value
/// with the `1{v <= V_i}` indicator.
pub fn localized_p_value<K: LocalizationKernel, R: Rng + ?Sized>(
    calib: &CalibrationSet,
    test_x: &[f64],
    test_score: f64,
    kernel: &K,
    rng: &mut R,
) -> Result<LocalizedPValue> {
    check_inputs(calib, test_x, kernel)?;
    let draw = draw_localization(kernel, test_x, rng);
    localized_p_value_with(calib, test_x, test_score, kernel, &draw, TieRule::Inclusive)
}

/// Same draws as [`localized_p_value`], ties weighted by ξ.
pub fn localized_p_value_tiebreak<K: LocalizationKernel, R: Rng + ?Sized>(
    calib: &CalibrationSet,
    test_x: &[f64],
    test_score: f64,
    kernel: &K,
    rng: &mut R,
) -> Result<LocalizedPValue> {
    check_inputs(calib, test_x, kernel)?;
    let draw = draw_localization(kernel, test_x, rng);
    localized_p_value_with(calib, test_x, test_score, kernel, &draw, TieRule::Randomized)
}

/// Localized p-value centred at the test covariate itself (no X̃ draw);
/// the ξ term is kept.
pub fn simplified_localized_p_value_with<K: LocalizationKernel>(
    calib: &CalibrationSet,
    test_x: &[f64],
    test_score: f64,
    kernel: &K,
    xi: f64,
) -> Result<LocalizedPValue> {
    let draw = LocalizationDraw {
        x_tilde: test_x.to_vec(),
        xi,
    };
    localized_p_value_with(calib, test_x, test_score, kernel, &draw, TieRule::Inclusive)
}

pub fn simplified_localized_p_value<K: LocalizationKernel, R: Rng + ?Sized>(
    calib: &CalibrationSet,
    test_x: &[f64],
    test_score: f64,
    kernel: &K,
    rng: &mut R,
) -> Result<LocalizedPValue> {
    check_inputs(calib, test_x, kernel)?;
    let xi = rng.random::<f64>();
    simplified_localized_p_value_with(calib, test_x, test_score, kernel, xi)
}

/// `(#{V_i >= v} + xi) / (n + 1)`.
pub fn unweighted_conformal_p_value_with(calib_scores: &[f64], test_score: f64, xi: f64) -> Result<f64> {
    if calib_scores.is_empty() {
        return Err(Error::EmptyCalibration("unweighted conformal p-value".into()));
    }
    let mut count = 0.0;
    for &s in calib_scores {
        if score_exceeds(test_score, s) {
            count += 1.0;
        }
    }
    Ok((count + xi) / (calib_scores.len() as f64 + 1.0))
}

/// `(#{V_i >= v} + 1) / (n + 1)`.
pub fn unweighted_conformal_p_value_deterministic(calib_scores: &[f64], test_score: f64) -> Result<f64> {
    unweighted_conformal_p_value_with(calib_scores, test_score, 1.0)
}

/// Randomized conformal p-value with ξ drawn from `rng`.
pub fn unweighted_conformal_p_value<R: Rng + ?Sized>(
    calib_scores: &[f64],
    test_score: f64,
    rng: &mut R,
) -> Result<f64> {
    let xi = rng.random::<f64>();
    unweighted_conformal_p_value_with(calib_scores, test_score, xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::KernelSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn calib_1d(xs: &[f64], scores: &[f64]) -> CalibrationSet {
        CalibrationSet::new(Matrix::column_vector(xs), scores.to_vec()).unwrap()
    }

    #[test]
    fn coinciding_points_reduce_to_unweighted() {
        let k = KernelSpec::gaussian(1.0, 1).unwrap();
        let calib = calib_1d(&[0.0, 0.0, 0.0], &[5.0, 6.0, 7.0]);
        let draw = LocalizationDraw { x_tilde: vec![0.0], xi: 0.5 };
        let p = localized_p_value_with(&calib, &[0.0], 1.0, &k, &draw, TieRule::Inclusive).unwrap();
        assert_abs_diff_eq!(p.value, 0.875, epsilon = 1e-15);
    }

    #[test]
    fn only_randomization_term_survives() {
        let k = KernelSpec::gaussian(1.0, 1).unwrap();
        let calib = calib_1d(&[0.1, -0.4, 1.2], &[1.0, 2.0, 3.0]);
        let draw = LocalizationDraw { x_tilde: vec![0.3], xi: 1.0 };
        let p = localized_p_value_with(&calib, &[0.0], 10.0, &k, &draw, TieRule::Inclusive).unwrap();
        let wt = k.weight(&[0.0], &[0.3]);
        let total: f64 = [0.1, -0.4, 1.2].iter().map(|x| k.weight(&[*x], &[0.3])).sum();
        assert_abs_diff_eq!(p.value, wt / (total + wt), epsilon = 1e-15);
    }

    #[test]
    fn two_point_hand_instance() {
        // weights 0.24197, 0.24197 (calibration) and 0.39894 (test) at X̃ = 1
        let k = KernelSpec::gaussian(1.0, 1).unwrap();
        let calib = calib_1d(&[0.0, 2.0], &[1.0, 3.0]);
        let draw = LocalizationDraw { x_tilde: vec![1.0], xi: 0.5 };
        let p = localized_p_value_with(&calib, &[1.0], 2.0, &k, &draw, TieRule::Inclusive).unwrap();
        let (a, b) = (0.241_970_724_519_143_37, 0.398_942_280_401_432_7);
        let expected = (a + 0.5 * b) / (2.0 * a + b);
        assert_abs_diff_eq!(p.value, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(p.value, 0.500, epsilon = 1e-3);

        let s = simplified_localized_p_value_with(&calib, &[1.0], 2.0, &k, 0.5).unwrap();
        assert_eq!(s.value, p.value);
    }

    #[test]
    fn tiebreak_variant() {
        let k = KernelSpec::gaussian(1.0, 1).unwrap();
        let calib = calib_1d(&[0.0], &[2.0]);
        let draw = LocalizationDraw { x_tilde: vec![0.0], xi: 0.3 };
        let p = localized_p_value_with(&calib, &[0.0], 2.0, &k, &draw, TieRule::Randomized).unwrap();
        assert_abs_diff_eq!(p.value, 0.3, epsilon = 1e-15);

        let draw1 = LocalizationDraw { x_tilde: vec![0.0], xi: 1.0 };
        let a = localized_p_value_with(&calib, &[0.0], 2.0, &k, &draw1, TieRule::Randomized).unwrap();
        let b = localized_p_value_with(&calib, &[0.0], 2.0, &k, &draw1, TieRule::Inclusive).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn tiebreak_matches_default_without_ties() {
        let k = KernelSpec::gaussian(0.7, 1).unwrap();
        let calib = calib_1d(&[0.0, 0.5, 1.0, 1.5], &[0.3, 1.7, 2.2, 0.9]);
        let mut r1 = crate::rng::stream(9);
        let mut r2 = crate::rng::stream(9);
        let a = localized_p_value(&calib, &[0.6], 1.0, &k, &mut r1).unwrap();
        let b = localized_p_value_tiebreak(&calib, &[0.6], 1.0, &k, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simplified_zero_numerator() {
        let k = KernelSpec::gaussian(1.0, 1).unwrap();
        let calib = calib_1d(&[0.0, 1.0], &[1.0, 2.0]);
        let p = simplified_localized_p_value_with(&calib, &[0.5], 5.0, &k, 0.0).unwrap();
        assert_eq!(p.value, 0.0);
    }

    #[test]
    fn sentinel_scores_only_weigh_the_denominator() {
        let k = KernelSpec::gaussian(1.0, 1).unwrap();
        let calib = calib_1d(&[0.0, 0.0], &[f64::NEG_INFINITY, 3.0]);
        let draw = LocalizationDraw { x_tilde: vec![0.0], xi: 0.0 };
        let p = localized_p_value_with(&calib, &[0.0], -1e300, &k, &draw, TieRule::Inclusive).unwrap();
        assert_abs_diff_eq!(p.value, 1.0 / 3.0, epsilon = 1e-15);
        assert!(CalibrationSet::new(Matrix::column_vector(&[0.0]), vec![f64::NAN]).is_err());
        assert!(CalibrationSet::new(Matrix::column_vector(&[0.0]), vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn box_kernel_with_no_support_errors() {
        let k = KernelSpec::boxed(0.1, 1).unwrap();
        let calib = calib_1d(&[5.0], &[1.0]);
        let draw = LocalizationDraw { x_tilde: vec![0.0], xi: 0.5 };
        // test point far from X̃ as well
        let err = localized_p_value_with(&calib, &[3.0], 0.0, &k, &draw, TieRule::Inclusive);
        assert!(matches!(err, Err(Error::DegenerateWeights)));
    }

    #[test]
    fn unweighted_examples() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(unweighted_conformal_p_value_deterministic(&s, 2.5).unwrap(), 0.5);
        assert_eq!(unweighted_conformal_p_value_deterministic(&s, 0.0).unwrap(), 1.0);
        assert_eq!(unweighted_conformal_p_value_with(&s, 2.5, 0.5).unwrap(), 0.375);
        assert!(unweighted_conformal_p_value_deterministic(&[], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_test_score_and_in_range(
            xs in proptest::collection::vec(-2.0f64..2.0, 1..20),
            seed in 0u64..1000,
            v1 in -3.0f64..3.0,
            v2 in -3.0f64..3.0,
            xi in 0.0f64..1.0,
        ) {
            let mut rng = crate::rng::stream(seed);
            let scores: Vec<f64> = xs.iter().map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let calib = calib_1d(&xs, &scores);
            let k = KernelSpec::gaussian(0.5, 1).unwrap();
            let draw = LocalizationDraw { x_tilde: vec![rng.random::<f64>()], xi };
            let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
            let a = localized_p_value_with(&calib, &[0.2], lo, &k, &draw, TieRule::Inclusive).unwrap();
            let b = localized_p_value_with(&calib, &[0.2], hi, &k, &draw, TieRule::Inclusive).unwrap();
            prop_assert!(a.value >= b.value);
            prop_assert!(a.value <= 1.0 && b.value <= 1.0);
            if xi > 0.0 {
                prop_assert!(b.value > 0.0);
            }
        }
    }
}
