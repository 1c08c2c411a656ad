use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{exact_flags, normal, uniform};
use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::stats::normal_cdf;

/// Regression coefficients of the heteroscedastic linear design.
pub const A1_BETA: [f64; 9] = [0.5, -0.5, 0.5, -0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
const OUTLIER_FRACTION: f64 = 0.1;
const B1_DIM: usize = 50;

/// Rows plus the ground-truth outlier flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSample {
    pub data: Dataset,
    pub is_outlier: Vec<bool>,
}

fn a1_noise_scale(t: f64) -> f64 {
    3.0 + 2.0 * (2.0 * std::f64::consts::PI * t).sin()
}

/// Heteroscedastic linear regression. Columns are `X_1..X_9, t`; the noise
/// scale is `3 + 2 sin(2πt)` and outliers add `±3 (3 + 1.5 sin(2πt))`.
pub fn gen_a1<R: Rng + ?Sized>(n: usize, with_outliers: bool, rng: &mut R) -> GeneratedSample {
    let mut x = Matrix::zeros(n, 10);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row_mut(i);
        for v in row.iter_mut().take(9) {
            *v = uniform(rng, -1.0, 1.0);
        }
        row[9] = rng.random::<f64>();
        let mean: f64 = row.iter().zip(&A1_BETA).map(|(a, b)| a * b).sum();
        y.push(mean + a1_noise_scale(row[9]) * normal(rng));
    }
    let is_outlier = if with_outliers {
        exact_flags(n, OUTLIER_FRACTION, rng)
    } else {
        vec![false; n]
    };
    for i in 0..n {
        if is_outlier[i] {
            let t = x.get(i, 9);
            let r = 3.0 * (3.0 + 1.5 * (2.0 * std::f64::consts::PI * t).sin());
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            y[i] += r * sign;
        }
    }
    GeneratedSample { data: Dataset { x, y: Some(y) }, is_outlier }
}

/// `|y - x·β|` with the true coefficients.
pub fn a1_oracle_score(x: &[f64], y: f64) -> f64 {
    (y - x.iter().zip(&A1_BETA).map(|(a, b)| a * b).sum::<f64>()).abs()
}

/// CDF of the oracle score given `t`: `2Φ(v / (3 + 2 sin 2πt)) - 1`.
pub fn a1_conditional_score_cdf(t: f64, v: f64) -> Result<f64> {
    if v < 0.0 || v.is_nan() {
        return Err(Error::arg(format!("score must be nonnegative, got {v}")));
    }
    Ok(2.0 * normal_cdf(v / a1_noise_scale(t)) - 1.0)
}

/// Spatial design without a response: columns `s_1, s_2` then 48 features
/// with variance `0.2 + 0.9‖s‖²` (four times that for outliers).
pub fn gen_b1<R: Rng + ?Sized>(n: usize, with_outliers: bool, rng: &mut R) -> GeneratedSample {
    let mut x = Matrix::zeros(n, B1_DIM);
    let mut z = Matrix::zeros(n, B1_DIM - 2);
    for i in 0..n {
        let row = x.row_mut(i);
        row[0] = uniform(rng, -1.0, 1.0);
        row[1] = uniform(rng, -1.0, 1.0);
        for v in z.row_mut(i).iter_mut() {
            *v = normal(rng);
        }
    }
    let is_outlier = if with_outliers {
        exact_flags(n, OUTLIER_FRACTION, rng)
    } else {
        vec![false; n]
    };
    for i in 0..n {
        let (s1, s2) = (x.get(i, 0), x.get(i, 1));
        let mut var = 0.2 + 0.9 * (s1 * s1 + s2 * s2);
        if is_outlier[i] {
            var *= 4.0;
        }
        let sd = var.sqrt();
        for k in 0..B1_DIM - 2 {
            x.set(i, k + 2, sd * z.get(i, k));
        }
    }
    GeneratedSample { data: Dataset::unlabeled(x), is_outlier }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;

    #[test]
    fn exact_outlier_counts() {
        let mut rng = crate::rng::stream(1);
        let a = gen_a1(2000, true, &mut rng);
        assert_eq!(a.is_outlier.iter().filter(|&&o| o).count(), 200);
        let b = gen_b1(1600, true, &mut rng);
        assert_eq!(b.is_outlier.iter().filter(|&&o| o).count(), 160);
        assert_eq!(b.data.x.ncols(), 50);
        assert!(b.data.y.is_none());
        assert!(!gen_a1(100, false, &mut rng).is_outlier.contains(&true));
    }

    #[test]
    fn generators_are_reproducible() {
        let a = gen_a1(50, true, &mut crate::rng::stream(9));
        let b = gen_a1(50, true, &mut crate::rng::stream(9));
        assert_eq!(a, b);
    }

    #[test]
    fn a1_noise_scale_at_quarter() {
        assert!((a1_noise_scale(0.25) - 5.0).abs() < 1e-12);
        assert!((a1_conditional_score_cdf(0.25, 5.0).unwrap() - 0.682_689_492_137_086).abs() < 1e-9);
        assert_eq!(a1_conditional_score_cdf(0.3, 0.0).unwrap(), 0.0);
        assert!((a1_conditional_score_cdf(0.3, 1e6).unwrap() - 1.0).abs() < 1e-15);
        assert!(a1_conditional_score_cdf(0.3, -1.0).is_err());
    }

    #[test]
    fn a1_conditional_variance_near_quarter() {
        let mut rng = crate::rng::stream(2);
        let mut resid = Vec::new();
        for _ in 0..10 {
            let sample = gen_a1(200_000, false, &mut rng);
            let y = sample.data.y.as_ref().unwrap();
            resid.extend(
                (0..y.len())
                    .filter(|&i| (sample.data.x.get(i, 9) - 0.25).abs() < 0.005)
                    .map(|i| y[i] - sample.data.x.row(i).iter().zip(&A1_BETA).map(|(a, b)| a * b).sum::<f64>()),
            );
        }
        let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
        assert!((var - 25.0).abs() / 25.0 < 0.03, "variance {var} from {} rows", resid.len());
    }

    #[test]
    fn b1_variance_profile() {
        let mut rng = crate::rng::stream(3);
        let s = gen_b1(300_000, false, &mut rng);
        let mut at_one = Vec::new();
        let mut near_zero = Vec::new();
        for i in 0..s.data.len() {
            let r = (s.data.x.get(i, 0).powi(2) + s.data.x.get(i, 1).powi(2)).sqrt();
            let v = s.data.x.get(i, 2).powi(2);
            if (r - 1.0).abs() < 0.02 {
                at_one.push(v);
            }
            if r < 0.05 {
                near_zero.push(v);
            }
        }
        assert!((mean(&at_one) - 1.1).abs() / 1.1 < 0.05, "{}", mean(&at_one));
        assert!((mean(&near_zero) - 0.2).abs() < 0.03, "{}", mean(&near_zero));
    }
}
