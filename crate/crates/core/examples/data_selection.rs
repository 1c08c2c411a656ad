//! Selecting test points predicted to satisfy `Y >= a`, with per-selection
//! error control, and the balance of errors across covariate cells.

use cct::conformal::Localization;
use cct::data::Dataset;
use cct::scenarios::{gen_a2, A2Noise, A2_THRESHOLDS};
use cct::screening::Rule;
use cct::selection::{pser_metrics, select, unweighted_selection, SelectionConfig};

fn main() -> cct::Result<()> {
    let mut rng = cct::rng::stream(19);
    let first_label = |n: usize, rng: &mut cct::rng::Stream| -> cct::Result<(Dataset, Vec<bool>)> {
        let s = gen_a2(n, A2Noise::Shared, rng);
        let y: Vec<f64> = s.data.responses.iter().map(|r| r[0]).collect();
        let violates = s.violations.iter().map(|v| v[0]).collect();
        Ok((Dataset::new(s.data.x, Some(y))?, violates))
    };
    let (labeled, _) = first_label(1000, &mut rng)?;
    let (test, violates) = first_label(500, &mut rng)?;
    let config = SelectionConfig {
        alpha: 0.1,
        rule: Rule::AtLeast(A2_THRESHOLDS[0]),
        localization: Localization::default(),
        ..Default::default()
    };

    let run = select(&labeled, &test.x, &config, &mut rng)?;
    let plain = unweighted_selection(&run.calib_scores, &run.calib_violates, &run.test_scores, config.alpha, &run.result)?;
    println!("selected {} of {}", run.result.selected().len(), test.len());

    println!("{:>12} {:>10} {:>10}", "cell", "localized", "unweighted");
    for (name, lo0, lo2) in [("x1<0,x3<0", false, false), ("x1>=0,x3<0", true, false), ("x1<0,x3>=0", false, true), ("x1>=0,x3>=0", true, true)] {
        let cell: Vec<bool> = test.x.rows().map(|r| (r[0] >= 0.0) == lo0 && (r[2] >= 0.0) == lo2).collect();
        let show = |d: &[bool]| pser_metrics(d, &violates, Some(&cell)).map_or("n/a".into(), |v| format!("{v:.3}"));
        println!("{name:>12} {:>10} {:>10}", show(&run.result.decisions), show(&plain));
    }
    Ok(())
}
