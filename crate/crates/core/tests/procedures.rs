//! Replicated error-rate checks for the three selection-type procedures.

use cct::harness::{run_experiment, ExperimentConfig, ExperimentReport, Procedure, Scenario, ScoreKind};
use cct::rng::stream;
use cct::screening::screen_from_scores;
use cct::{CalibrationSet, KernelSpec, Matrix};
use proptest::prelude::*;
use rand::Rng;

fn config(procedure: Procedure, scenario: Scenario, n: usize, m: usize, alpha: f64, seed: u64) -> ExperimentConfig {
    ExperimentConfig { procedure: Some(procedure), scenario, n, m, alpha, reps: 200, seed, ..Default::default() }
}

fn mean_se(r: &ExperimentReport, metric: &str) -> (f64, f64) {
    let a = r.aggregate(metric).unwrap_or_else(|| panic!("no metric {metric}"));
    (a.mean.unwrap(), a.se.unwrap())
}

fn worst_excess(r: &ExperimentReport, prefix: &str, alpha: f64) -> f64 {
    ["cell00", "cell10", "cell01", "cell11"]
        .iter()
        .map(|c| mean_se(r, &format!("{prefix}_{c}")).0 - alpha)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn outlier_fdr_at_level_one_tenth() {
    let mut c = config(Procedure::OutlierDetect, Scenario::A1, 1600, 500, 0.1, 41);
    c.score = Some(ScoreKind::KnnCqr);
    let r = run_experiment(&c).unwrap();
    let (fdr, se) = mean_se(&r, "fdp");
    assert!(fdr <= 0.1 + 2.0 * se, "FDR {fdr} SE {se}");
}

#[test]
fn screening_fwer_across_levels() {
    for (k, alpha) in [0.05, 0.2].into_iter().enumerate() {
        let c = config(Procedure::LabelScreen, Scenario::A2, 500, 1000, alpha, 61 + k as u64);
        let r = run_experiment(&c).unwrap();
        let (fwer, se) = mean_se(&r, "fwer");
        assert!(fwer <= alpha + 2.0 * se, "alpha {alpha}: FWER {fwer} SE {se}");
    }
}

#[test]
fn localized_selection_is_better_balanced_than_unweighted() {
    let mut c = config(Procedure::Select, Scenario::A2, 1000, 500, 0.1, 71);
    c.condition_columns = vec![0, 2];
    c.condition_cuts = vec![0.0, 0.0];
    let r = run_experiment(&c).unwrap();
    let (pser, se) = mean_se(&r, "pser");
    assert!(pser <= 0.1 + 2.0 * se, "PSER {pser} SE {se}");
    let localized = worst_excess(&r, "pser", 0.1);
    let unweighted = worst_excess(&r, "unweighted_pser", 0.1);
    assert!(localized < unweighted, "worst-cell excess {localized} vs {unweighted}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn component_p_values_fall_as_scores_rise(seed in any::<u64>(), n in 2usize..40, s in 2usize..6) {
        let mut rng = stream(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let calib_scores: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let set = CalibrationSet::new(Matrix::column_vector(&xs), calib_scores).unwrap();
        let mut row: Vec<f64> = (0..s).map(|_| rng.random_range(-3.0..3.0)).collect();
        row.sort_by(f64::total_cmp);
        let kernel = KernelSpec::gaussian(0.5, 1).unwrap();
        let test_x = Matrix::column_vector(&[rng.random_range(-1.0..1.0)]);
        let out = screen_from_scores(&set, &test_x, &[row], 0.1, &kernel, &mut rng).unwrap();
        for w in out.p_matrix[0].windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }
}
