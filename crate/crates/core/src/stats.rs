//! Small numerical helpers: the normal distribution, sample summaries and the
//! Kolmogorov–Smirnov distance to N(0, 1).

use statrs::distribution::{ContinuousCDF, Normal};

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Standard normal CDF Φ.
pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Upper tail 1 − Φ(x), evaluated without cancellation for large x.
pub fn normal_sf(x: f64) -> f64 {
    standard_normal().sf(x)
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (denominator n − 1); 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Standard error of the mean, `sd / sqrt(n)`; 0 for a single value.
pub fn standard_error(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    sample_sd(values) / (values.len() as f64).sqrt()
}

/// sup_t |F_n(t) − Φ(t)| for the empirical CDF of `sample`.
pub fn ks_distance_to_normal(sample: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Lower empirical quantile: the sorted value at index `floor(level * (n - 1))`.
pub fn lower_quantile(sorted: &[f64], level: f64) -> f64 {
    let idx = (level * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Sample median (average of the two middle values for even sizes).
pub fn median_of(values: &[f64]) -> f64 {
    use statrs::statistics::{Data, OrderStatistics};
    Data::new(values.to_vec()).median()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_values() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-9);
        assert_abs_diff_eq!(normal_quantile(0.95), 1.644_853_626_951_472_2, epsilon = 1e-9);
        assert_abs_diff_eq!(normal_sf(1.0), 1.0 - normal_cdf(1.0), epsilon = 1e-15);
    }

    #[test]
    fn summaries() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&v), 2.5);
        assert_abs_diff_eq!(sample_sd(&v), (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_eq!(standard_error(&[3.0]), 0.0);
        assert_eq!(median_of(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_of(&v), 2.5);
    }

    #[test]
    fn ks_of_single_point_at_zero() {
        assert_abs_diff_eq!(ks_distance_to_normal(&[0.0]), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn lower_quantile_picks_floor_index() {
        let s = [1.0, 2.0, 10.0];
        assert_eq!(lower_quantile(&s, 0.1), 1.0);
        assert_eq!(lower_quantile(&s, 0.9), 2.0);
        assert_eq!(lower_quantile(&s, 1.0), 10.0);
    }
}
