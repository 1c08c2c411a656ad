use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};

const RIDGE_FALLBACK: f64 = 1e-8;

/// Least-squares regression used through its absolute residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearResidualModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

/// Ordinary least squares on centred data; a ridge of `1e-8` (scaled by the
/// Gram diagonal) is added when the normal equations are not positive definite.
pub fn fit_linear_residual(train_x: &Matrix, train_y: &[f64]) -> Result<LinearResidualModel> {
    let n = train_x.nrows();
    let d = train_x.ncols();
    if n == 0 {
        return Err(Error::Fit("linear model needs at least one row".into()));
    }
    if train_y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: train_y.len() });
    }
    let nf = n as f64;
    let mut x_mean = vec![0.0; d];
    for row in train_x.rows() {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += v / nf;
        }
    }
    let y_mean = train_y.iter().sum::<f64>() / nf;

    let xc = DMatrix::from_fn(n, d, |i, j| train_x.get(i, j) - x_mean[j]);
    let yc = DVector::from_iterator(n, train_y.iter().map(|y| y - y_mean));
    let gram = xc.transpose() * &xc;
    let rhs = xc.transpose() * yc;

    let beta = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let scale = (0..d).map(|j| gram[(j, j)]).fold(0.0, f64::max).max(1.0);
            let mut ridged = gram;
            for j in 0..d {
                ridged[(j, j)] += RIDGE_FALLBACK * scale;
            }
            ridged
                .cholesky()
                .ok_or_else(|| Error::Fit("degenerate design after ridge fallback".into()))?
                .solve(&rhs)
        }
    };
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::Fit("non-finite least-squares coefficients".into()));
    }
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearResidualModel { coefficients, intercept })
}

impl LinearResidualModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    /// `|y - intercept - x·β|`.
    pub fn score(&self, x: &[f64], y: f64) -> f64 {
        (y - self.predict(x)).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn exact_fit_gives_zero_residual() {
        let x = Matrix::column_vector(&[0.0, 1.0, 2.0, 4.0]);
        let m = fit_linear_residual(&x, &[0.0, 2.0, 4.0, 8.0]).unwrap();
        assert_abs_diff_eq!(m.score(&[3.0], 6.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.score(&[3.0], 7.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_textbook_two_parameter_solution() {
        let mut rng = crate::rng::stream(4);
        let xs: Vec<f64> = (0..200).map(|_| rng.random::<f64>() * 10.0).collect();
        let sigma = 0.5;
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 1.0 + 2.0 * x + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let m = fit_linear_residual(&Matrix::column_vector(&xs), &ys).unwrap();
        // closed-form slope = cov(x, y) / var(x)
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        assert_abs_diff_eq!(m.coefficients[0], slope, epsilon = 1e-10);
        assert_abs_diff_eq!(m.intercept, icpt, epsilon = 1e-10);
        let off = icpt + slope * 5.0 + 3.0 * sigma;
        assert_abs_diff_eq!(m.score(&[5.0], off), 3.0 * sigma, epsilon = 1e-10);
    }

    #[test]
    fn collinear_design_uses_ridge() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]]).unwrap();
        let m = fit_linear_residual(&x, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(m.coefficients.iter().all(|c| c.is_finite()));
        assert_abs_diff_eq!(m.score(&[5.0, 10.0], 5.0), 0.0, epsilon = 1e-6);
    }
}
