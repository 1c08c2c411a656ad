//! Conditional label screening with family-wise error control.
//!
//! Each calibration point is summarised by the largest score among its
//! rule-violating components (`-inf` when none violate). Every component of
//! a test point is compared with those summaries under one shared
//! localization draw, and the component is retained when its p-value is at
//! most `alpha`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{
    calibration_weights, draw_localization, weighted_p_value, CalibrationSet, Localization,
    LocalizationDraw, LocalizationKernel, TieRule,
};
use crate::data::{random_split, Matrix};
use crate::error::{Error, Result};
use crate::models::{fit_logistic, LogisticModel, DEFAULT_L2};
use crate::outlier::check_alpha;

/// Membership rule `Y_s ∈ A_s` for one label component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    AtLeast(f64),
    AtMost(f64),
    OneOf(Vec<f64>),
}

impl Rule {
    pub fn contains(&self, y: f64) -> bool {
        match self {
            Self::AtLeast(a) => y >= *a,
            Self::AtMost(a) => y <= *a,
            Self::OneOf(set) => set.contains(&y),
        }
    }

    pub fn violated_by(&self, y: f64) -> bool {
        !self.contains(y)
    }
}

/// A rule list; a single rule applies to every component.
fn rule_for(rules: &[Rule], s: usize) -> Result<&Rule> {
    match rules.len() {
        0 => Err(Error::arg("at least one screening rule is required")),
        1 => Ok(&rules[0]),
        _ => rules
            .get(s)
            .ok_or_else(|| Error::arg(format!("no rule for label component {s}"))),
    }
}

/// Covariates with a label vector of possibly varying length per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelDataset {
    pub x: Matrix,
    pub responses: Vec<Vec<f64>>,
}

impl MultiLabelDataset {
    pub fn new(x: Matrix, responses: Vec<Vec<f64>>) -> Result<Self> {
        if responses.len() != x.nrows() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), found: responses.len() });
        }
        if responses.iter().any(Vec::is_empty) {
            return Err(Error::arg("every row needs at least one label component"));
        }
        Ok(Self { x, responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            responses: idx.iter().map(|&i| self.responses[i].clone()).collect(),
        }
    }

    /// `violations[i][s]` is true when component `s` of row `i` breaks its rule.
    pub fn violations(&self, rules: &[Rule]) -> Result<Vec<Vec<bool>>> {
        self.responses
            .iter()
            .map(|ys| {
                ys.iter()
                    .enumerate()
                    .map(|(s, &y)| Ok(rule_for(rules, s)?.violated_by(y)))
                    .collect()
            })
            .collect()
    }
}

/// Largest score among rule-violating components, or `-inf` if none violate.
pub fn summary_score(scores: &[f64], labels: &[f64], rules: &[Rule]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: scores.len() });
    }
    let mut best = f64::NEG_INFINITY;
    for (s, (&v, &y)) in scores.iter().zip(labels).enumerate() {
        if rule_for(rules, s)?.violated_by(y) {
            best = best.max(v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub p_matrix: Vec<Vec<f64>>,
    /// `true` means the component is retained as rule-satisfying.
    pub decisions: Vec<Vec<bool>>,
    pub draws: Vec<LocalizationDraw>,
}

/// Screening on precomputed scores. `calib` carries summary scores and
/// weighting covariates; `test_scores[j]` holds one score per component.
pub fn screen_from_scores<K, R>(
    calib: &CalibrationSet,
    test_x: &Matrix,
    test_scores: &[Vec<f64>],
    alpha: f64,
    kernel: &K,
    rng: &mut R,
) -> Result<ScreeningResult>
where
    K: LocalizationKernel + Sync,
    R: Rng + ?Sized,
{
    check_alpha(alpha)?;
    if calib.is_empty() {
        return Err(Error::EmptyCalibration("label screening".into()));
    }
    if test_scores.len() != test_x.nrows() {
        return Err(Error::DimensionMismatch { expected: test_x.nrows(), found: test_scores.len() });
    }
    if test_x.ncols() != kernel.dim() || calib.covariates().ncols() != kernel.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), found: test_x.ncols() });
    }
    let draws: Vec<LocalizationDraw> = (0..test_x.nrows())
        .map(|j| draw_localization(kernel, test_x.row(j), rng))
        .collect();
    let p_matrix: Vec<Vec<f64>> = (0..test_x.nrows())
        .into_par_iter()
        .map(|j| {
            let d = &draws[j];
            let w = calibration_weights(calib.covariates(), &d.x_tilde, kernel);
            let t = kernel.weight(test_x.row(j), &d.x_tilde);
            test_scores[j]
                .iter()
                .map(|&v| Ok(weighted_p_value(&w, calib.scores(), v, t, d.xi, TieRule::Inclusive)?.0))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(finish(p_matrix, draws, alpha))
}

fn finish(p_matrix: Vec<Vec<f64>>, draws: Vec<LocalizationDraw>, alpha: f64) -> ScreeningResult {
    let decisions = p_matrix
        .iter()
        .map(|row| row.iter().map(|&p| p <= alpha).collect())
        .collect();
    ScreeningResult { p_matrix, decisions, draws }
}

/// The thresholding baseline: unweighted randomized conformal p-values
/// against the same summary scores, reusing the ξ draws of `reference`.
pub fn threshold_baseline(
    calib_summary: &[f64],
    test_scores: &[Vec<f64>],
    alpha: f64,
    reference: &ScreeningResult,
) -> Result<ScreeningResult> {
    check_alpha(alpha)?;
    if calib_summary.is_empty() {
        return Err(Error::EmptyCalibration("threshold baseline".into()));
    }
    let ones = vec![1.0; calib_summary.len()];
    let p_matrix = test_scores
        .iter()
        .zip(&reference.draws)
        .map(|(row, d)| {
            row.iter()
                .map(|&v| Ok(weighted_p_value(&ones, calib_summary, v, 1.0, d.xi, TieRule::Inclusive)?.0))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(finish(p_matrix, reference.draws.clone(), alpha))
}

/// Fraction of (optionally conditioned) test points retaining at least one
/// rule-violating component.
pub fn fwer_metrics(result: &ScreeningResult, violations: &[Vec<bool>], condition: Option<&[bool]>) -> Result<f64> {
    if violations.len() != result.decisions.len() {
        return Err(Error::DimensionMismatch { expected: result.decisions.len(), found: violations.len() });
    }
    let mut considered = 0usize;
    let mut errors = 0usize;
    for (j, (dec, viol)) in result.decisions.iter().zip(violations).enumerate() {
        if condition.is_some_and(|c| !c[j]) {
            continue;
        }
        considered += 1;
        if dec.iter().zip(viol).any(|(&d, &v)| d && v) {
            errors += 1;
        }
    }
    if considered == 0 {
        return Err(Error::UndefinedMetric("condition selects no test points".into()));
    }
    Ok(errors as f64 / considered as f64)
}

/// One logistic classifier per label component for the event `Y_s ∈ A_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentClassifiers {
    pub models: Vec<LogisticModel>,
}

impl ComponentClassifiers {
    /// Fits component `s` on the rows that have an `s`-th label.
    pub fn fit(data: &MultiLabelDataset, rules: &[Rule], l2: f64) -> Result<Self> {
        let s_max = data.responses.iter().map(Vec::len).max().unwrap_or(0);
        let models = (0..s_max)
            .map(|s| {
                let rows: Vec<usize> = (0..data.len()).filter(|&i| data.responses[i].len() > s).collect();
                let rule = rule_for(rules, s)?;
                let labels: Vec<bool> = rows.iter().map(|&i| rule.contains(data.responses[i][s])).collect();
                fit_logistic(&data.x.select_rows(&rows), &labels, l2)
            })
            .collect::<Result<_>>()?;
        Ok(Self { models })
    }

    /// Estimated `Pr(Y_s ∈ A_s | x)` for the first `len` components.
    pub fn scores(&self, x: &[f64], len: usize) -> Result<Vec<f64>> {
        if len > self.models.len() {
            return Err(Error::arg(format!("no classifier for label component {}", self.models.len())));
        }
        Ok(self.models[..len].iter().map(|m| m.predict_proba(x)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub alpha: f64,
    pub localization: Localization,
    pub rules: Vec<Rule>,
    pub split_ratio: f64,
    pub l2: f64,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            localization: Localization::default(),
            rules: vec![Rule::OneOf(vec![1.0])],
            split_ratio: 0.5,
            l2: DEFAULT_L2,
        }
    }
}

/// Screening output together with the pieces needed for baselines.
#[derive(Debug, Clone)]
pub struct ScreeningRun {
    pub result: ScreeningResult,
    pub calib_summary: Vec<f64>,
    pub test_scores: Vec<Vec<f64>>,
}

/// Split, fit per-component classifiers, summarise calibration scores and
/// screen every test point. Test points get as many components as there
/// are fitted classifiers.
pub fn screen<R: Rng + ?Sized>(
    labeled: &MultiLabelDataset,
    test_x: &Matrix,
    config: &ScreeningConfig,
    rng: &mut R,
) -> Result<ScreeningRun> {
    check_alpha(config.alpha)?;
    let (train_idx, calib_idx) = random_split(labeled.len(), config.split_ratio, rng)?;
    if calib_idx.is_empty() {
        return Err(Error::EmptyCalibration("no labelled rows left for calibration".into()));
    }
    let train = labeled.subset(&train_idx);
    let calib = labeled.subset(&calib_idx);
    let classifiers = ComponentClassifiers::fit(&train, &config.rules, config.l2)?;
    let calib_summary: Vec<f64> = (0..calib.len())
        .map(|i| {
            let ys = &calib.responses[i];
            let v = classifiers.scores(calib.x.row(i), ys.len())?;
            summary_score(&v, ys, &config.rules)
        })
        .collect::<Result<_>>()?;
    let s = classifiers.models.len();
    let test_scores: Vec<Vec<f64>> = test_x
        .rows()
        .map(|row| classifiers.scores(row, s))
        .collect::<Result<_>>()?;
    let loc = &config.localization;
    let kernel = loc.kernel(labeled.len(), labeled.x.ncols())?;
    let calib_set = CalibrationSet::new(loc.project(&calib.x)?, calib_summary.clone())?;
    let result = screen_from_scores(&calib_set, &loc.project(test_x)?, &test_scores, config.alpha, &kernel, rng)?;
    Ok(ScreeningRun { result, calib_summary, test_scores })
}
