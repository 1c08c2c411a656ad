//! The localized p-value approaches the conditional tail probability of the
//! score as the calibration set grows.

use cct::rng::replication_stream;
use cct::scenarios::{a1_conditional_score_cdf, a1_oracle_score, gen_a1};
use cct::{default_bandwidth, localized_p_value, CalibrationSet, KernelSpec, Matrix};
use rayon::prelude::*;

const REPS: usize = 40;

/// Ten probe points: `t` spread over (0, 1), zero linear part, and a score
/// sitting at a different conditional quantile for each point.
fn probes() -> Vec<(Vec<f64>, f64)> {
    (0..10)
        .map(|k| {
            let t = 0.05 + 0.1 * k as f64;
            let scale = 3.0 + 2.0 * (2.0 * std::f64::consts::PI * t).sin();
            let z = 0.2 + 0.2 * k as f64;
            let mut x = vec![0.0; 10];
            x[9] = t;
            (x, z * scale)
        })
        .collect()
}

fn mean_abs_deviation(n: usize) -> f64 {
    let probes = probes();
    let kernel = KernelSpec::gaussian(default_bandwidth(n, 1).unwrap(), 1).unwrap();
    let total: f64 = (0..REPS)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_stream(31_337 + n as u64, r as u64);
            let sample = gen_a1(n, false, &mut rng).data;
            let y = sample.y.as_ref().unwrap();
            let scores = (0..n).map(|i| a1_oracle_score(sample.x.row(i), y[i])).collect();
            let set = CalibrationSet::new(Matrix::column_vector(&sample.x.column(9)), scores).unwrap();
            probes
                .iter()
                .map(|(x, v)| {
                    let p = localized_p_value(&set, &x[9..], *v, &kernel, &mut rng).unwrap().value;
                    (p - (1.0 - a1_conditional_score_cdf(x[9], *v).unwrap())).abs()
                })
                .sum::<f64>()
        })
        .sum();
    total / (REPS * 10) as f64
}

#[test]
fn deviation_shrinks_with_calibration_size() {
    let dev: Vec<f64> = [500, 4000, 32_000].into_iter().map(mean_abs_deviation).collect();
    assert!(dev[0] > dev[1] && dev[1] > dev[2], "mean absolute deviations {dev:?}");
}
