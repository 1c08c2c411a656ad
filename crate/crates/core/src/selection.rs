//! Balanced data selection with per-selection error control.
//!
//! A classifier scores how likely each point is to satisfy the rule
//! `Y ∈ A`. A test point is selected when its score is extreme relative to
//! the localized distribution of scores among rule-violating calibration
//! points.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conformal::{
    draw_localization, localized_p_value_with, unweighted_conformal_p_value_with, CalibrationSet,
    Localization, LocalizationKernel, LocalizedPValue, TieRule,
};
use crate::data::{random_split, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::models::{fit_logistic, DEFAULT_L2};
use crate::outlier::check_alpha;
use crate::screening::Rule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub p_values: Vec<LocalizedPValue>,
    pub decisions: Vec<bool>,
}

impl SelectionResult {
    pub fn selected(&self) -> Vec<usize> {
        (0..self.decisions.len()).filter(|&j| self.decisions[j]).collect()
    }
}

/// Selection on precomputed scores. Only calibration rows flagged in
/// `calib_violates` enter the p-value.
pub fn select_from_scores<K, R>(
    calib: &CalibrationSet,
    calib_violates: &[bool],
    test_x: &Matrix,
    test_scores: &[f64],
    alpha: f64,
    kernel: &K,
    rng: &mut R,
) -> Result<SelectionResult>
where
    K: LocalizationKernel,
    R: Rng + ?Sized,
{
    check_alpha(alpha)?;
    if calib_violates.len() != calib.len() {
        return Err(Error::DimensionMismatch { expected: calib.len(), found: calib_violates.len() });
    }
    if test_scores.len() != test_x.nrows() {
        return Err(Error::DimensionMismatch { expected: test_x.nrows(), found: test_scores.len() });
    }
    let restricted = calib.restrict(|i| calib_violates[i]);
    if restricted.is_empty() {
        return Err(Error::EmptyCalibration("no rule-violating calibration points".into()));
    }
    let mut p_values = Vec::with_capacity(test_scores.len());
    for (j, &v) in test_scores.iter().enumerate() {
        let draw = draw_localization(kernel, test_x.row(j), rng);
        p_values.push(localized_p_value_with(&restricted, test_x.row(j), v, kernel, &draw, TieRule::Inclusive)?);
    }
    let decisions = p_values.iter().map(|p| p.value <= alpha).collect();
    Ok(SelectionResult { p_values, decisions })
}

/// Unweighted counterpart using the randomization draws of `reference`.
pub fn unweighted_selection(
    calib_scores: &[f64],
    calib_violates: &[bool],
    test_scores: &[f64],
    alpha: f64,
    reference: &SelectionResult,
) -> Result<Vec<bool>> {
    let restricted: Vec<f64> = calib_scores
        .iter()
        .zip(calib_violates)
        .filter(|(_, &v)| v)
        .map(|(&s, _)| s)
        .collect();
    test_scores
        .iter()
        .zip(&reference.p_values)
        .map(|(&v, p)| Ok(unweighted_conformal_p_value_with(&restricted, v, p.xi)? <= alpha))
        .collect()
}

/// Fraction of (optionally conditioned) rule-violating test points that were selected.
pub fn pser_metrics(decisions: &[bool], violates: &[bool], condition: Option<&[bool]>) -> Result<f64> {
    if decisions.len() != violates.len() {
        return Err(Error::DimensionMismatch { expected: decisions.len(), found: violates.len() });
    }
    let mut considered = 0usize;
    let mut selected = 0usize;
    for j in 0..decisions.len() {
        if !violates[j] || condition.is_some_and(|c| !c[j]) {
            continue;
        }
        considered += 1;
        if decisions[j] {
            selected += 1;
        }
    }
    if considered == 0 {
        return Err(Error::UndefinedMetric("no rule-violating test points under the condition".into()));
    }
    Ok(selected as f64 / considered as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub alpha: f64,
    pub rule: Rule,
    pub localization: Localization,
    pub split_ratio: f64,
    pub l2: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            rule: Rule::OneOf(vec![1.0]),
            localization: Localization::default(),
            split_ratio: 0.5,
            l2: DEFAULT_L2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionRun {
    pub result: SelectionResult,
    pub calib_scores: Vec<f64>,
    pub calib_violates: Vec<bool>,
    pub test_scores: Vec<f64>,
}

/// Split, fit a logistic classifier for `Y ∈ A` and select test points.
pub fn select<R: Rng + ?Sized>(
    labeled: &Dataset,
    test_x: &Matrix,
    config: &SelectionConfig,
    rng: &mut R,
) -> Result<SelectionRun> {
    check_alpha(config.alpha)?;
    let y = labeled.response()?;
    let (train_idx, calib_idx) = random_split(labeled.len(), config.split_ratio, rng)?;
    let in_rule: Vec<bool> = train_idx.iter().map(|&i| config.rule.contains(y[i])).collect();
    let model = fit_logistic(&labeled.x.select_rows(&train_idx), &in_rule, config.l2)?;
    let calib_x = labeled.x.select_rows(&calib_idx);
    let calib_scores: Vec<f64> = calib_x.rows().map(|r| model.predict_proba(r)).collect();
    let calib_violates: Vec<bool> = calib_idx.iter().map(|&i| config.rule.violated_by(y[i])).collect();
    let test_scores: Vec<f64> = test_x.rows().map(|r| model.predict_proba(r)).collect();
    let loc = &config.localization;
    let kernel = loc.kernel(labeled.len(), labeled.x.ncols())?;
    let calib = CalibrationSet::new(loc.project(&calib_x)?, calib_scores.clone())?;
    let result = select_from_scores(&calib, &calib_violates, &loc.project(test_x)?, &test_scores, config.alpha, &kernel, rng)?;
    Ok(SelectionRun { result, calib_scores, calib_violates, test_scores })
}
