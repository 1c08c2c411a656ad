//! Localized versus unweighted conformal p-values on a heteroscedastic
//! regression where the noise level depends on one covariate `t`.
//!
//! Run with `cargo run --example localized_p_values`.

use cct::rng::stream;
use cct::scenarios::{a1_conditional_score_cdf, a1_oracle_score, gen_a1};
use cct::{default_bandwidth, localized_p_value, unweighted_conformal_p_value, CalibrationSet, KernelSpec, Matrix};

fn main() -> cct::Result<()> {
    let mut rng = stream(2024);
    let n = 4000;
    let calib = gen_a1(n, false, &mut rng).data;
    let y = calib.response()?;
    let scores: Vec<f64> = (0..n).map(|i| a1_oracle_score(calib.x.row(i), y[i])).collect();

    let kernel = KernelSpec::gaussian(default_bandwidth(n, 1)?, 1)?;
    let set = CalibrationSet::new(Matrix::column_vector(&calib.x.column(9)), scores.clone())?;
    println!("bandwidth {:.4}", kernel.bandwidth());
    println!("{:>5} {:>6} {:>10} {:>10} {:>10}", "t", "score", "localized", "unweighted", "target");

    for t in [0.25, 0.5, 0.75] {
        let v = 4.0;
        let local = localized_p_value(&set, &[t], v, &kernel, &mut rng)?;
        let plain = unweighted_conformal_p_value(&scores, v, &mut rng)?;
        let target = 1.0 - a1_conditional_score_cdf(t, v)?;
        println!("{t:>5.2} {v:>6.1} {:>10.4} {plain:>10.4} {target:>10.4}", local.value);
    }
    Ok(())
}
