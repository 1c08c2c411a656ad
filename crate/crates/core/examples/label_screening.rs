//! Screening two labels per test point: a component is retained as
//! rule-satisfying when its localized p-value is at most alpha.

use cct::conformal::Localization;
use cct::scenarios::{a2_rules, gen_a2, A2Noise};
use cct::screening::{fwer_metrics, screen, threshold_baseline, ScreeningConfig};

fn main() -> cct::Result<()> {
    let mut rng = cct::rng::stream(11);
    let labeled = gen_a2(500, A2Noise::Shared, &mut rng);
    let test = gen_a2(1000, A2Noise::Shared, &mut rng);
    let config = ScreeningConfig {
        alpha: 0.1,
        localization: Localization::default(),
        rules: a2_rules(),
        ..Default::default()
    };

    let run = screen(&labeled.data, &test.data.x, &config, &mut rng)?;
    let retained: usize = run.result.decisions.iter().flatten().filter(|&&d| d).count();
    let fwer = fwer_metrics(&run.result, &test.violations, None)?;
    println!("retained {retained} of {} components; realized FWER {fwer:.3}", 2 * test.data.len());

    let thr = threshold_baseline(&run.calib_summary, &run.test_scores, config.alpha, &run.result)?;
    let fwer_thr = fwer_metrics(&thr, &test.violations, None)?;
    println!("unweighted thresholding: realized FWER {fwer_thr:.3}");

    let j = 0;
    println!("test point 0: labels {:?}, p-values {:?}", test.data.responses[j], run.result.p_matrix[j]);
    Ok(())
}
