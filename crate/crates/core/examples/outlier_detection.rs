//! Conditional outlier detection with FDR control, compared with plain
//! conformal p-values followed by Benjamini-Hochberg.

use cct::conformal::Localization;
use cct::models::ScoreModelSpec;
use cct::outlier::{conformal_bh_baseline, detect_outliers, fdp_and_power, score_split, OutlierConfig};
use cct::scenarios::gen_a1;

fn main() -> cct::Result<()> {
    let config = OutlierConfig {
        alpha: 0.1,
        localization: Localization { weight_columns: Some(vec![9]), ..Default::default() },
        score: ScoreModelSpec::KnnCqr { k: 50, lo: 0.05, hi: 0.95 },
        ..Default::default()
    };
    let mut rng = cct::rng::stream(7);
    let clean = gen_a1(1600, false, &mut rng).data;
    let test = gen_a1(500, true, &mut rng);

    let run = detect_outliers(&clean, &test.data, &config, &mut cct::rng::stream(8))?;
    let (fdp, power) = fdp_and_power(&run.final_set, &test.is_outlier);
    println!(
        "localized: BH kept {} of {}, pruning kept {} (r* = {}), FDP {fdp:.3}, power {power:.3}",
        run.initial_set.len(),
        test.data.len(),
        run.final_set.len(),
        run.r_star
    );

    let split = score_split(&clean, &test.data, &config, &mut cct::rng::stream(8))?;
    let baseline = conformal_bh_baseline(split.calib.scores(), &split.test_scores, config.alpha)?;
    let (fdp, power) = fdp_and_power(&baseline, &test.is_outlier);
    println!("unweighted: {} rejections, FDP {fdp:.3}, power {power:.3}", baseline.len());
    Ok(())
}
