//! Conditional outlier detection with finite-sample FDR control.
//!
//! Localized p-values are computed for every test point, each point's BH
//! rejection-set size is recomputed from auxiliary p-values in which that
//! point's own p-value is set to zero, and the resulting initial set is
//! pruned with independent uniforms.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{
    calibration_weights, draw_localization, score_exceeds, unweighted_conformal_p_value_deterministic,
    CalibrationSet, KernelSpec, Localization, LocalizationDraw, LocalizationKernel, LocalizedPValue,
    TieRule,
};
use crate::data::{random_split, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::models::ScoreModelSpec;

/// BH rejection set (ascending indices).
pub fn bh_procedure(p_values: &[f64], alpha: f64) -> Vec<usize> {
    let r_star = bh_rejection_count(p_values, alpha);
    if r_star == 0 {
        return Vec::new();
    }
    let threshold = alpha * r_star as f64 / p_values.len() as f64;
    (0..p_values.len()).filter(|&j| p_values[j] <= threshold).collect()
}

/// `r* = max{r : #{j : p_j <= alpha r / m} >= r}`.
///
/// The count condition holds for `r` exactly when the `r`-th smallest
/// p-value is at most `alpha r / m`.
pub fn bh_rejection_count(p_values: &[f64], alpha: f64) -> usize {
    let m = p_values.len();
    let mut sorted = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (1..=m)
        .rev()
        .find(|&r| sorted[r - 1] <= alpha * r as f64 / m as f64)
        .unwrap_or(0)
}

/// Per-test-point pieces of the localized p-value that the auxiliary
/// p-values reuse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValueParts {
    /// Calibration part of the numerator.
    pub calib_numerator: f64,
    /// `H(X_2j, X̃_2j)`.
    pub test_weight: f64,
    pub denominator: f64,
    pub xi: f64,
}

impl PValueParts {
    pub fn p_value(&self) -> f64 {
        ((self.calib_numerator + self.xi * self.test_weight) / self.denominator).min(1.0)
    }

    /// The p-value with the randomization term kept only if `keep`.
    pub fn with_indicator(&self, keep: bool) -> f64 {
        let extra = if keep { self.xi * self.test_weight } else { 0.0 };
        ((self.calib_numerator + extra) / self.denominator).min(1.0)
    }
}

fn parts_for<K: LocalizationKernel>(
    calib: &CalibrationSet,
    test_x: &[f64],
    test_score: f64,
    kernel: &K,
    draw: &LocalizationDraw,
    tie: TieRule,
) -> Result<PValueParts> {
    let weights = calibration_weights(calib.covariates(), &draw.x_tilde, kernel);
    let test_weight = kernel.weight(test_x, &draw.x_tilde);
    let mut num = 0.0;
    let mut total = 0.0;
    for (&w, &s) in weights.iter().zip(calib.scores()) {
        total += w;
        match tie {
            TieRule::Inclusive => {
                if score_exceeds(test_score, s) {
                    num += w;
                }
            }
            TieRule::Randomized => {
                if s != f64::NEG_INFINITY {
                    if test_score < s {
                        num += w;
                    } else if test_score == s {
                        num += draw.xi * w;
                    }
                }
            }
        }
    }
    let denominator = total + test_weight;
    if denominator <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    Ok(PValueParts { calib_numerator: num, test_weight, denominator, xi: draw.xi })
}

/// Auxiliary p-value of test point `l` seen from the zeroed point `j`:
/// identical to `p_l` except the randomization term carries `1{V_l <= V_j}`.
pub fn auxiliary_p_value(parts: &[PValueParts], scores: &[f64], j: usize, l: usize) -> f64 {
    parts[l].with_indicator(scores[l] <= scores[j])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRun {
    pub p_values: Vec<LocalizedPValue>,
    /// `|R̂_{j→0}|` for each test point.
    pub aux_set_sizes: Vec<usize>,
    pub initial_set: Vec<usize>,
    pub final_set: Vec<usize>,
    pub zeta: Vec<f64>,
    pub r_star: usize,
}

impl OutlierRun {
    pub fn p_value_slice(&self) -> Vec<f64> {
        self.p_values.iter().map(|p| p.value).collect()
    }
}

/// Size of BH on the vector whose `j`-th entry is zero and whose other
/// entries are the auxiliary p-values.
fn zeroed_bh_size(parts: &[PValueParts], scores: &[f64], j: usize, alpha: f64) -> usize {
    let aux: Vec<f64> = (0..parts.len())
        .map(|l| if l == j { 0.0 } else { auxiliary_p_value(parts, scores, j, l) })
        .collect();
    bh_rejection_count(&aux, alpha)
}

/// `r* = max{r : #{j in initial : zeta_j |R_j| <= r} >= r}` and the pruned set.
pub fn prune(initial_set: &[usize], aux_set_sizes: &[usize], zeta: &[f64]) -> (usize, Vec<usize>) {
    let mut c: Vec<f64> = initial_set.iter().map(|&j| zeta[j] * aux_set_sizes[j] as f64).collect();
    c.sort_by(f64::total_cmp);
    let r_star = (1..=c.len()).rev().find(|&r| c[r - 1] <= r as f64).unwrap_or(0);
    let final_set = initial_set
        .iter()
        .copied()
        .filter(|&j| zeta[j] * aux_set_sizes[j] as f64 <= r_star as f64)
        .collect();
    (r_star, final_set)
}

/// Runs the detection procedure on precomputed scores.
///
/// `test_x` holds only the weighting columns. Draws are taken in test-point
/// order (X̃_j then ξ_j), followed by the `m` pruning uniforms.
pub fn detect_from_scores<K, R>(
    calib: &CalibrationSet,
    test_x: &Matrix,
    test_scores: &[f64],
    alpha: f64,
    kernel: &K,
    tie: TieRule,
    rng: &mut R,
) -> Result<OutlierRun>
where
    K: LocalizationKernel + Sync,
    R: Rng + ?Sized,
{
    check_alpha(alpha)?;
    let m = test_x.nrows();
    if test_scores.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: test_scores.len() });
    }
    if calib.is_empty() {
        return Err(Error::EmptyCalibration("outlier detection".into()));
    }
    if test_x.ncols() != kernel.dim() || calib.covariates().ncols() != kernel.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), found: test_x.ncols() });
    }
    let draws: Vec<LocalizationDraw> = (0..m).map(|j| draw_localization(kernel, test_x.row(j), rng)).collect();
    let zeta: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();

    let parts: Vec<PValueParts> = (0..m)
        .into_par_iter()
        .map(|j| parts_for(calib, test_x.row(j), test_scores[j], kernel, &draws[j], tie))
        .collect::<Result<_>>()?;
    let aux_set_sizes: Vec<usize> = (0..m)
        .into_par_iter()
        .map(|j| zeroed_bh_size(&parts, test_scores, j, alpha))
        .collect();

    let p: Vec<f64> = parts.iter().map(PValueParts::p_value).collect();
    let initial_set: Vec<usize> = (0..m)
        .filter(|&j| p[j] <= alpha * aux_set_sizes[j] as f64 / m as f64)
        .collect();
    let (r_star, final_set) = prune(&initial_set, &aux_set_sizes, &zeta);

    let p_values = parts
        .iter()
        .zip(draws)
        .map(|(pt, d)| LocalizedPValue {
            value: pt.p_value(),
            xi: d.xi,
            x_tilde: d.x_tilde,
            numerator_weight_sum: pt.calib_numerator + pt.xi * pt.test_weight,
            denominator_weight_sum: pt.denominator,
        })
        .collect();
    Ok(OutlierRun { p_values, aux_set_sizes, initial_set, final_set, zeta, r_star })
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig {
    pub alpha: f64,
    pub localization: Localization,
    pub score: ScoreModelSpec,
    /// Fraction of the clean data used to train the score.
    pub split_ratio: f64,
    pub tie_rule: TieRule,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            localization: Localization::default(),
            score: ScoreModelSpec::default(),
            split_ratio: 0.5,
            tie_rule: TieRule::Inclusive,
        }
    }
}

/// Scores from one train/calibration split of the clean data.
#[derive(Debug, Clone)]
pub struct ScoredSplit {
    pub calib: CalibrationSet,
    /// Test covariates restricted to the weighting columns.
    pub test_x: Matrix,
    pub test_scores: Vec<f64>,
    pub kernel: KernelSpec,
}

/// Splits `clean`, fits the score on the training part and scores the
/// calibration and test rows.
pub fn score_split<R: Rng + ?Sized>(
    clean: &Dataset,
    test: &Dataset,
    config: &OutlierConfig,
    rng: &mut R,
) -> Result<ScoredSplit> {
    if clean.x.ncols() != test.x.ncols() {
        return Err(Error::DimensionMismatch { expected: clean.x.ncols(), found: test.x.ncols() });
    }
    let (train_idx, calib_idx) = random_split(clean.len(), config.split_ratio, rng)?;
    if calib_idx.is_empty() {
        return Err(Error::EmptyCalibration("no clean rows left for calibration".into()));
    }
    let train = clean.subset(&train_idx);
    let calib = clean.subset(&calib_idx);
    let model = config.score.fit(&train)?;
    let calib_scores = model.score_dataset(&calib)?;
    let test_scores = model.score_dataset(test)?;
    let loc = &config.localization;
    Ok(ScoredSplit {
        calib: CalibrationSet::new(loc.project(&calib.x)?, calib_scores)?,
        test_x: loc.project(&test.x)?,
        test_scores,
        kernel: loc.kernel(clean.len(), clean.x.ncols())?,
    })
}

/// Full pipeline: split, fit, score and detect.
pub fn detect_outliers<R: Rng + ?Sized>(
    clean: &Dataset,
    test: &Dataset,
    config: &OutlierConfig,
    rng: &mut R,
) -> Result<OutlierRun> {
    check_alpha(config.alpha)?;
    let split = score_split(clean, test, config, rng)?;
    detect_from_scores(
        &split.calib,
        &split.test_x,
        &split.test_scores,
        config.alpha,
        &split.kernel,
        config.tie_rule,
        rng,
    )
}

/// Unweighted conformal p-values `(1 + #{V_i >= v}) / (n + 1)` followed by BH.
pub fn conformal_bh_baseline(calib_scores: &[f64], test_scores: &[f64], alpha: f64) -> Result<Vec<usize>> {
    let p: Vec<f64> = test_scores
        .iter()
        .map(|&v| unweighted_conformal_p_value_deterministic(calib_scores, v))
        .collect::<Result<_>>()?;
    Ok(bh_procedure(&p, alpha))
}

/// `(FDP, power)` of a rejection set against the true outlier flags.
pub fn fdp_and_power(final_set: &[usize], is_outlier: &[bool]) -> (f64, f64) {
    let false_rej = final_set.iter().filter(|&&j| !is_outlier[j]).count();
    let true_rej = final_set.len() - false_rej;
    let outliers = is_outlier.iter().filter(|&&o| o).count();
    (
        false_rej as f64 / final_set.len().max(1) as f64,
        true_rej as f64 / outliers.max(1) as f64,
    )
}
