use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Matrix, Standardizer};
use crate::error::{Error, Result};

pub const DEFAULT_L2: f64 = 1e-4;
const GRADIENT_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 100;
/// Linear predictors are clamped to this magnitude so that probabilities
/// stay strictly inside (0, 1).
const LOGIT_CLAMP: f64 = 35.0;

/// L2-penalised logistic regression fitted on standardised features.
///
/// `weights` act on standardised features; the intercept is not penalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub l2: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Penalised log-likelihood `Σ [y η - log(1 + e^η)] - l2/2 ‖w‖²` over
/// standardised rows `z` (with `beta[0]` the intercept).
pub fn penalized_log_likelihood(z: &DMatrix<f64>, labels: &[bool], beta: &DVector<f64>, l2: f64) -> f64 {
    let eta = z * beta;
    let ll: f64 = eta
        .iter()
        .zip(labels)
        .map(|(&e, &y)| if y { e } else { 0.0 } - softplus(e))
        .sum();
    let pen: f64 = beta.iter().skip(1).map(|b| b * b).sum::<f64>();
    ll - 0.5 * l2 * pen
}

fn gradient(z: &DMatrix<f64>, labels: &[bool], beta: &DVector<f64>, l2: f64) -> DVector<f64> {
    let eta = z * beta;
    let resid = DVector::from_iterator(
        labels.len(),
        eta.iter().zip(labels).map(|(&e, &y)| f64::from(u8::from(y)) - sigmoid(e)),
    );
    let mut g = z.transpose() * resid;
    for k in 1..g.len() {
        g[k] -= l2 * beta[k];
    }
    g
}

/// Design matrix `[1, standardised x]`.
fn design(standardizer: &Standardizer, features: &Matrix) -> DMatrix<f64> {
    let d = features.ncols();
    let mut z = DMatrix::zeros(features.nrows(), d + 1);
    let mut buf = vec![0.0; d];
    for (i, row) in features.rows().enumerate() {
        standardizer.transform_row(row, &mut buf);
        z[(i, 0)] = 1.0;
        for j in 0..d {
            z[(i, j + 1)] = buf[j];
        }
    }
    z
}

/// Newton/IRLS iterations with step halving, stopping when the gradient
/// norm drops below `1e-8` or after 100 iterations.
pub fn fit_logistic(features: &Matrix, labels: &[bool], l2: f64) -> Result<LogisticModel> {
    let n = features.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
    }
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::arg(format!("l2 penalty must be nonnegative, got {l2}")));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == n {
        return Err(Error::Fit("logistic regression needs both classes".into()));
    }
    let standardizer = Standardizer::fit(features);
    let z = design(&standardizer, features);
    let p = z.ncols();

    let mut beta = DVector::zeros(p);
    let base_rate = positives as f64 / n as f64;
    beta[0] = (base_rate / (1.0 - base_rate)).ln();
    let mut objective = penalized_log_likelihood(&z, labels, &beta, l2);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        let g = gradient(&z, labels, &beta, l2);
        if g.norm() <= GRADIENT_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let eta = &z * &beta;
        let w: Vec<f64> = eta.iter().map(|&e| {
            let s = sigmoid(e);
            s * (1.0 - s)
        }).collect();
        let mut hess = DMatrix::zeros(p, p);
        for (i, wi) in w.iter().enumerate() {
            let row = z.row(i);
            for a in 0..p {
                let ra = row[a] * wi;
                for b in a..p {
                    hess[(a, b)] += ra * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        for k in 1..p {
            hess[(k, k)] += l2;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => {
                let mut jittered = hess;
                for k in 0..p {
                    jittered[(k, k)] += 1e-10;
                }
                match jittered.cholesky() {
                    Some(ch) => ch.solve(&g),
                    None => g.clone(),
                }
            }
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let candidate = &beta + &step * t;
            let obj = penalized_log_likelihood(&z, labels, &candidate, l2);
            if obj >= objective {
                beta = candidate;
                objective = obj;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !converged {
        converged = gradient(&z, labels, &beta, l2).norm() <= GRADIENT_TOL;
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Fit("logistic coefficients diverged".into()));
    }
    Ok(LogisticModel {
        standardizer,
        intercept: beta[0],
        weights: beta.iter().skip(1).copied().collect(),
        l2,
        converged,
        iterations,
    })
}

impl LogisticModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Clamped linear predictor `log(p / (1 - p))`.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let eta = self.intercept
            + x.iter()
                .zip(&self.weights)
                .zip(self.standardizer.means.iter().zip(&self.standardizer.scales))
                .map(|((v, w), (m, s))| w * (v - m) / s)
                .sum::<f64>();
        eta.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// `p / (1 - p)`: the class-2 to class-1 density ratio when the two
    /// classes were sampled in equal numbers.
    pub fn predict_odds(&self, x: &[f64]) -> f64 {
        self.logit(x).exp()
    }

    /// Gradient norm of the training objective at the fitted parameters.
    pub fn gradient_norm(&self, features: &Matrix, labels: &[bool]) -> f64 {
        let z = design(&self.standardizer, features);
        gradient(&z, labels, &self.parameters(), self.l2).norm()
    }

    fn parameters(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.weights.len() + 1,
            std::iter::once(self.intercept).chain(self.weights.iter().copied()),
        )
    }
}

/// Joint and marginal classifiers separating sample 1 (label `false`) from
/// sample 2 (label `true`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRatioModel {
    pub joint: LogisticModel,
    pub marginal: LogisticModel,
}

impl DensityRatioModel {
    /// ĝ(x), the covariate density ratio f_2(x) / f_1(x).
    pub fn covariate_ratio(&self, x: &[f64]) -> f64 {
        self.marginal.predict_odds(x)
    }

    /// `log f_2(y|x) - log f_1(y|x)` estimated as the joint log-odds minus
    /// the marginal log-odds.
    pub fn log_ratio(&self, x: &[f64], y: f64) -> f64 {
        let mut xy = Vec::with_capacity(x.len() + 1);
        xy.extend_from_slice(x);
        xy.push(y);
        self.joint.logit(&xy) - self.marginal.logit(x)
    }
}

/// Estimate of f_2(y|x) / f_1(y|x): joint odds at (x, y) over marginal odds at x.
pub fn conditional_density_ratio_score(
    joint_model: &LogisticModel,
    marginal_model: &LogisticModel,
    x: &[f64],
    y: f64,
) -> Result<f64> {
    if joint_model.dim() != x.len() + 1 || marginal_model.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: marginal_model.dim(),
            found: x.len(),
        });
    }
    let mut xy = x.to_vec();
    xy.push(y);
    Ok(joint_model.predict_odds(&xy) / marginal_model.predict_odds(x))
}

/// Fits the marginal classifier on `x` and the joint one on `(x, y)`.
pub fn fit_density_ratio(
    x1: &Matrix,
    y1: &[f64],
    x2: &Matrix,
    y2: &[f64],
    l2: f64,
) -> Result<DensityRatioModel> {
    let x = x1.vstack(x2)?;
    let labels: Vec<bool> = std::iter::repeat_n(false, x1.nrows())
        .chain(std::iter::repeat_n(true, x2.nrows()))
        .collect();
    let y: Vec<f64> = y1.iter().chain(y2).copied().collect();
    let xy = x.with_column(&y)?;
    Ok(DensityRatioModel {
        marginal: fit_logistic(&x, &labels, l2)?,
        joint: fit_logistic(&xy, &labels, l2)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_classes(seed: u64, n: usize, shift: f64) -> (Matrix, Vec<bool>) {
        let mut rng = crate::rng::stream(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n {
            let y = i >= n;
            let c = if y { shift } else { 0.0 };
            rows.push([c + rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)]);
            labels.push(y);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn symmetric_labels_give_flat_odds() {
        let rows = [[0.0, 1.0], [1.0, -1.0], [2.0, 0.5], [-1.0, 3.0]];
        let doubled: Vec<[f64; 2]> = rows.iter().chain(rows.iter()).copied().collect();
        let labels: Vec<bool> = (0..8).map(|i| i >= 4).collect();
        let m = fit_logistic(&Matrix::from_rows(&doubled).unwrap(), &labels, DEFAULT_L2).unwrap();
        assert!(m.converged);
        for w in &m.weights {
            assert!(w.abs() < 1e-8);
        }
        assert_abs_diff_eq!(m.predict_odds(&[5.0, -5.0]), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn ordered_classes_give_positive_slope() {
        let x = Matrix::column_vector(&[-2.0, -1.0, 1.0, 2.0]);
        let m = fit_logistic(&x, &[false, false, true, true], 1e-4).unwrap();
        assert!(m.weights[0] > 0.0);
        assert!(m.predict_odds(&[0.5]) > m.predict_odds(&[-0.5]));
        let p = m.predict_proba(&[100.0]);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn stationary_point_matches_finite_differences() {
        let (x, labels) = gaussian_classes(2, 150, 1.0);
        let m = fit_logistic(&x, &labels, DEFAULT_L2).unwrap();
        assert!(m.converged);
        assert!(m.gradient_norm(&x, &labels) <= 1e-6);

        let z = design(&m.standardizer, &x);
        let beta = m.parameters();
        let eps = 1e-5;
        for k in 0..beta.len() {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[k] += eps;
            dn[k] -= eps;
            let fd = (penalized_log_likelihood(&z, &labels, &up, m.l2)
                - penalized_log_likelihood(&z, &labels, &dn, m.l2))
                / (2.0 * eps);
            assert!(fd.abs() < 1e-4, "finite difference {fd} at coordinate {k}");
        }
    }

    #[test]
    fn row_permutation_invariance() {
        let (x, labels) = gaussian_classes(8, 80, 0.7);
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut crate::rng::stream(1));
        let xp = x.select_rows(&order);
        let lp: Vec<bool> = order.iter().map(|&i| labels[i]).collect();
        let a = fit_logistic(&x, &labels, DEFAULT_L2).unwrap();
        let b = fit_logistic(&xp, &lp, DEFAULT_L2).unwrap();
        for (u, v) in a.weights.iter().zip(&b.weights) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(a.intercept, b.intercept, epsilon = 1e-8);
    }

    #[test]
    fn single_class_is_a_fit_error() {
        let x = Matrix::column_vector(&[1.0, 2.0]);
        assert!(matches!(fit_logistic(&x, &[true, true], 1e-4), Err(Error::Fit(_))));
    }

    #[test]
    fn ratio_is_a_quotient_of_odds() {
        // hand-built models: joint log-odds ln 2, marginal log-odds ln 0.5
        let joint = LogisticModel {
            standardizer: Standardizer::identity(2),
            weights: vec![0.0, 0.0],
            intercept: 2f64.ln(),
            l2: 0.0,
            converged: true,
            iterations: 0,
        };
        let marginal = LogisticModel {
            standardizer: Standardizer::identity(1),
            weights: vec![0.0],
            intercept: 0.5f64.ln(),
            l2: 0.0,
            converged: true,
            iterations: 0,
        };
        let r = conditional_density_ratio_score(&joint, &marginal, &[0.3], 1.0).unwrap();
        assert_abs_diff_eq!(r, 4.0, epsilon = 1e-12);
    }

    fn regression_samples(seed: u64, n: usize, x_shift: f64) -> (Matrix, Vec<f64>, Matrix, Vec<f64>) {
        let mut rng = crate::rng::stream(seed);
        let mut draw = |shift: f64| {
            let rows: Vec<[f64; 1]> = (0..n).map(|_| [shift + rng.sample::<f64, _>(StandardNormal)]).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r[0] + rng.sample::<f64, _>(StandardNormal)).collect();
            (Matrix::from_rows(&rows).unwrap(), ys)
        };
        let (x1, y1) = draw(0.0);
        let (x2, y2) = draw(x_shift);
        (x1, y1, x2, y2)
    }

    #[test]
    fn identical_laws_give_ratio_near_one() {
        let (x1, y1, x2, y2) = regression_samples(31, 2000, 0.0);
        let m = fit_density_ratio(&x1, &y1, &x2, &y2, DEFAULT_L2).unwrap();
        for x in [-1.0, 0.0, 1.0] {
            let r = conditional_density_ratio_score(&m.joint, &m.marginal, &[x], x).unwrap();
            assert!((r - 1.0).abs() < 0.15, "ratio {r} at x = {x}");
        }
    }

    #[test]
    fn covariate_shift_only_moves_the_marginal() {
        let (x1, y1, x2, y2) = regression_samples(32, 2000, 1.0);
        let m = fit_density_ratio(&x1, &y1, &x2, &y2, DEFAULT_L2).unwrap();
        let r = conditional_density_ratio_score(&m.joint, &m.marginal, &[0.5], 0.5).unwrap();
        assert!((r - 1.0).abs() < 0.15, "ratio {r}");
        // true covariate ratio at 1.5 is e
        assert!((m.covariate_ratio(&[1.5]) - 1.0).abs() > 0.5);
    }
}
