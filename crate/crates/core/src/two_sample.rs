//! Kernel-weighted U-statistic test of `P_{1,Y|X} = P_{2,Y|X}`.
//!
//! Scores estimate `f_1(y|x) / f_2(y|x)` from two logistic classifiers.
//! Pairs `(i, j)` of calibration points from the two samples contribute
//! `H(X_1i, X_2j) · (1/2 - 1{V_1i < V_2j} - ξ_j 1{V_1i = V_2j})`, and the
//! standardized average is referred to the upper tail of N(0, 1).

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::conformal::{Localization, LocalizationKernel};
use crate::data::{random_split, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::models::{fit_density_ratio, DEFAULT_L2};
use crate::outlier::check_alpha;
use crate::stats::normal_sf;

const BLOCK_ROWS: usize = 32;

/// `1/2 - 1{v1 < v2} - xi 1{v1 = v2}`.
#[inline]
pub fn d_hat(v1: f64, v2: f64, xi: f64) -> f64 {
    if v1 < v2 {
        -0.5
    } else if v1 == v2 {
        0.5 - xi
    } else {
        0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    pub t_hat: f64,
    pub numerator: f64,
    pub sigma_sq_hat: f64,
    pub p_value: f64,
    pub reject: bool,
    pub n1: usize,
}

/// Sums needed for the statistic and its variance, kept in double-double
/// precision. The variance is a difference of terms that can nearly cancel.
#[derive(Debug, Clone, PartialEq)]
pub struct UStatisticSums {
    /// `Σ_j H_ij D_ij` for each `i`.
    pub row_sums: Vec<TwoFloat>,
    /// `Σ_i H_ij D_ij` for each `j`.
    pub col_sums: Vec<TwoFloat>,
    pub total: TwoFloat,
    pub total_sq: TwoFloat,
}

/// Accumulates the pair sums in fixed blocks of rows of `x1`, combined in
/// block order, so the result does not depend on the thread count.
pub fn pair_sums<K: LocalizationKernel + Sync>(
    x1: &Matrix,
    x2: &Matrix,
    v1: &[f64],
    v2: &[f64],
    xi: &[f64],
    kernel: &K,
) -> UStatisticSums {
    let n1 = x1.nrows();
    let n2 = x2.nrows();
    let zero = TwoFloat::from(0.0);
    let blocks: Vec<(Vec<TwoFloat>, Vec<TwoFloat>, TwoFloat)> = (0..n1.div_ceil(BLOCK_ROWS))
        .into_par_iter()
        .map(|b| {
            let rows = b * BLOCK_ROWS..((b + 1) * BLOCK_ROWS).min(n1);
            let mut row_sums = Vec::with_capacity(rows.len());
            let mut cols = vec![zero; n2];
            let mut sq = zero;
            for i in rows {
                let xi_row = x1.row(i);
                let mut rs = zero;
                for j in 0..n2 {
                    let hd = TwoFloat::new_mul(kernel.weight(xi_row, x2.row(j)), d_hat(v1[i], v2[j], xi[j]));
                    rs += hd;
                    cols[j] += hd;
                    sq += hd * hd;
                }
                row_sums.push(rs);
            }
            (row_sums, cols, sq)
        })
        .collect();
    let mut row_sums = Vec::with_capacity(n1);
    let mut col_sums = vec![zero; n2];
    let mut total_sq = zero;
    for (rs, cs, sq) in blocks {
        row_sums.extend(rs);
        for (c, v) in col_sums.iter_mut().zip(cs) {
            *c += v;
        }
        total_sq += sq;
    }
    let total = row_sums.iter().fold(zero, |acc, r| acc + r);
    UStatisticSums { row_sums, col_sums, total, total_sq }
}

/// Numerator and variance estimate from the pair sums.
pub fn statistic_from_sums(sums: &UStatisticSums, n1: usize) -> (f64, f64) {
    let n = TwoFloat::from(n1 as f64);
    let n2 = n * n;
    let squares = |v: &[TwoFloat]| v.iter().fold(TwoFloat::from(0.0), |acc, r| acc + r * r);
    let numerator = sums.total / n2;
    let scaled = squares(&sums.row_sums) + squares(&sums.col_sums) - sums.total_sq - 2.0 * sums.total * sums.total / n;
    let sigma_sq = scaled / (n2 * n2);
    (numerator.hi(), sigma_sq.hi())
}

/// The standardized statistic on calibration pairs with given `ξ_j`.
#[allow(clippy::too_many_arguments)]
pub fn weighted_statistic_with<K: LocalizationKernel + Sync>(
    x1: &Matrix,
    x2: &Matrix,
    v1: &[f64],
    v2: &[f64],
    xi: &[f64],
    kernel: &K,
    alpha: f64,
) -> Result<TwoSampleResult> {
    let n1 = x1.nrows();
    if x2.nrows() != n1 || v1.len() != n1 || v2.len() != n1 || xi.len() != n1 {
        return Err(Error::arg("both calibration samples must have the same size"));
    }
    if n1 < 2 {
        return Err(Error::arg("the statistic needs at least two calibration pairs"));
    }
    if x1.ncols() != kernel.dim() || x2.ncols() != kernel.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), found: x1.ncols() });
    }
    let sums = pair_sums(x1, x2, v1, v2, xi, kernel);
    let (numerator, sigma_sq_hat) = statistic_from_sums(&sums, n1);
    if !(sigma_sq_hat > 0.0) {
        return Err(Error::DegenerateVariance(sigma_sq_hat));
    }
    let t_hat = numerator / sigma_sq_hat.sqrt();
    let p_value = normal_sf(t_hat);
    Ok(TwoSampleResult { t_hat, numerator, sigma_sq_hat, p_value, reject: p_value <= alpha, n1 })
}

/// Draws one `ξ_j` per sample-2 point and evaluates the statistic.
#[allow(clippy::too_many_arguments)]
pub fn weighted_statistic<K: LocalizationKernel + Sync, R: Rng + ?Sized>(
    x1: &Matrix,
    x2: &Matrix,
    v1: &[f64],
    v2: &[f64],
    kernel: &K,
    alpha: f64,
    rng: &mut R,
) -> Result<TwoSampleResult> {
    let xi: Vec<f64> = (0..x2.nrows()).map(|_| rng.random::<f64>()).collect();
    weighted_statistic_with(x1, x2, v1, v2, &xi, kernel, alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleConfig {
    pub alpha: f64,
    pub localization: Localization,
    pub l2: f64,
    /// Fraction of each sample used to fit the classifiers.
    pub split_ratio: f64,
}

impl Default for TwoSampleConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            localization: Localization::default(),
            l2: DEFAULT_L2,
            split_ratio: 0.5,
        }
    }
}

/// Drops uniformly chosen rows from `idx` until it has `target` entries.
fn shrink_to<R: Rng + ?Sized>(idx: Vec<usize>, target: usize, rng: &mut R) -> Vec<usize> {
    if idx.len() <= target {
        return idx;
    }
    let mut keep: Vec<usize> = sample(rng, idx.len(), target).into_vec();
    keep.sort_unstable();
    keep.into_iter().map(|k| idx[k]).collect()
}

/// Split both samples, fit the classifiers on the training halves, score
/// the calibration halves and run the one-sided test.
pub fn conditional_two_sample_test<R: Rng + ?Sized>(
    d1: &Dataset,
    d2: &Dataset,
    config: &TwoSampleConfig,
    rng: &mut R,
) -> Result<TwoSampleResult> {
    check_alpha(config.alpha)?;
    if d1.x.ncols() != d2.x.ncols() {
        return Err(Error::DimensionMismatch { expected: d1.x.ncols(), found: d2.x.ncols() });
    }
    let y1 = d1.response()?;
    let y2 = d2.response()?;
    let (t1, c1) = random_split(d1.len(), config.split_ratio, rng)?;
    let (t2, c2) = random_split(d2.len(), config.split_ratio, rng)?;
    let n1 = c1.len().min(c2.len());
    let c1 = shrink_to(c1, n1, rng);
    let c2 = shrink_to(c2, n1, rng);

    let pick = |y: &[f64], idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| y[i]).collect() };
    let model = fit_density_ratio(
        &d1.x.select_rows(&t1),
        &pick(y1, &t1),
        &d2.x.select_rows(&t2),
        &pick(y2, &t2),
        config.l2,
    )?;
    let score = |x: &Matrix, y: &[f64]| -> Vec<f64> {
        x.rows().zip(y).map(|(r, &v)| (-model.log_ratio(r, v)).exp()).collect()
    };
    let x1c = d1.x.select_rows(&c1);
    let x2c = d2.x.select_rows(&c2);
    let v1 = score(&x1c, &pick(y1, &c1));
    let v2 = score(&x2c, &pick(y2, &c2));

    let loc = &config.localization;
    let kernel = loc.kernel(d1.len(), d1.x.ncols())?;
    weighted_statistic(&loc.project(&x1c)?, &loc.project(&x2c)?, &v1, &v2, &kernel, config.alpha, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::KernelSpec;

    struct Flat;

    impl LocalizationKernel for Flat {
        fn dim(&self) -> usize {
            1
        }
        fn weight(&self, _: &[f64], _: &[f64]) -> f64 {
            1.0
        }
        fn sample<R: Rng + ?Sized>(&self, c: &[f64], _: &mut R) -> Vec<f64> {
            c.to_vec()
        }
    }

    #[test]
    fn d_hat_examples() {
        assert_eq!(d_hat(1.0, 2.0, 0.7), -0.5);
        assert_eq!(d_hat(2.0, 1.0, 0.7), 0.5);
        assert!((d_hat(1.0, 1.0, 0.3) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn all_ties_at_half_are_degenerate() {
        let x = Matrix::column_vector(&[0.0, 1.0, 2.0]);
        let err = weighted_statistic_with(&x, &x, &[1.0; 3], &[1.0; 3], &[0.5; 3], &Flat, 0.05);
        assert!(matches!(err, Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn two_by_two_flat_kernel() {
        // D = [[1/2, -1/2], [1/2, 1/2]] from v1 = (1, 3), v2 = (0, 2)
        let x = Matrix::column_vector(&[0.0, 0.0]);
        let sums = pair_sums(&x, &x, &[1.0, 3.0], &[0.0, 2.0], &[0.0, 0.0], &Flat);
        let (num, sig) = statistic_from_sums(&sums, 2);
        assert_eq!(num, 0.25);
        // rows (0, 1)/2, cols (1, 0)/2, ΣΣ H²D² = 1
        let expected = (0.0 + 0.25) / 4.0 + (0.25 + 0.0) / 4.0 - 1.0 / 16.0 - 2.0 / 2.0 * 0.0625;
        assert!((sig - expected).abs() < 1e-15);
    }

    #[test]
    fn swapping_samples_negates_numerator() {
        let mut rng = crate::rng::stream(12);
        let n = 30;
        let x1 = Matrix::column_vector(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
        let x2 = Matrix::column_vector(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
        let v1: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let v2: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let k = KernelSpec::gaussian(0.3, 1).unwrap();
        let a = pair_sums(&x1, &x2, &v1, &v2, &xi, &k);
        let b = pair_sums(&x2, &x1, &v2, &v1, &xi, &k);
        let (na, _) = statistic_from_sums(&a, n);
        let (nb, _) = statistic_from_sums(&b, n);
        assert!((na + nb).abs() < 1e-15);
    }

    #[test]
    fn positive_rescaling_changes_nothing() {
        let mut rng = crate::rng::stream(13);
        let n = 25;
        let x1 = Matrix::column_vector(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
        let x2 = Matrix::column_vector(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
        let v1: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let v2: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let k = KernelSpec::gaussian(0.5, 1).unwrap();
        let xi: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let a = weighted_statistic_with(&x1, &x2, &v1, &v2, &xi, &k, 0.05).unwrap();
        let s1: Vec<f64> = v1.iter().map(|v| v * 7.5).collect();
        let s2: Vec<f64> = v2.iter().map(|v| v * 7.5).collect();
        let b = weighted_statistic_with(&x1, &x2, &s1, &s2, &xi, &k, 0.05).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shrink_keeps_order_and_size() {
        let kept = shrink_to((10..20).collect(), 7, &mut crate::rng::stream(1));
        assert_eq!(kept.len(), 7);
        assert!(kept.windows(2).all(|w| w[0] < w[1]));
    }
}
