use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bspline::additive_spline_mean;
use super::normal;
use crate::data::{Dataset, Matrix};

const DIM: usize = 5;
const BETA: [f64; DIM] = [1.0, 1.0, 1.0, -1.0, -1.0];
const A3_SHIFT: [f64; DIM] = [1.0, 1.0, -1.0, -1.0, 0.0];
const MIXTURE_SHIFT: [f64; DIM] = [0.5, 0.5, -0.5, -0.5, 0.0];
const A3_ALT_INTERCEPT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Null,
    Alt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoSampleDesign {
    A3,
    B3,
    C3,
}

impl TwoSampleDesign {
    pub fn generate<R: Rng + ?Sized>(self, n: usize, m: usize, h: Hypothesis, rng: &mut R) -> (Dataset, Dataset) {
        match self {
            Self::A3 => gen_a3(n, m, h, rng),
            Self::B3 => gen_b3(n, m, h, rng),
            Self::C3 => gen_c3(n, m, h, rng),
        }
    }
}

fn gaussian_rows<R: Rng + ?Sized>(n: usize, mean: &[f64; DIM], sd: f64, rng: &mut R) -> Matrix {
    let mut x = Matrix::zeros(n, DIM);
    for i in 0..n {
        for (v, mu) in x.row_mut(i).iter_mut().zip(mean) {
            *v = mu + sd * normal(rng);
        }
    }
    x
}

/// Half N(0, I), half N(shift, I) or N(0, scale I), chosen per row.
fn mixture_rows<R: Rng + ?Sized>(n: usize, second_shift: &[f64; DIM], second_sd: f64, rng: &mut R) -> Matrix {
    let mut x = Matrix::zeros(n, DIM);
    for i in 0..n {
        let second = rng.random::<bool>();
        for (k, v) in x.row_mut(i).iter_mut().enumerate() {
            let z = normal(rng);
            *v = if second { second_shift[k] + second_sd * z } else { z };
        }
    }
    x
}

/// Student t with 5 degrees of freedom: `Z / sqrt(χ²_5 / 5)`.
fn student_t5<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let z = normal(rng);
    let chi2: f64 = (0..5).map(|_| normal(rng).powi(2)).sum();
    z / (chi2 / 5.0).sqrt()
}

fn dot_beta(x: &[f64]) -> f64 {
    x.iter().zip(&BETA).map(|(a, b)| a * b).sum()
}

/// Linear model with Gaussian covariates; sample 2's covariates are
/// shifted and, under the alternative, its intercept is 0.5.
pub fn gen_a3<R: Rng + ?Sized>(n: usize, m: usize, h: Hypothesis, rng: &mut R) -> (Dataset, Dataset) {
    let x1 = gaussian_rows(n, &[0.0; DIM], 1.0, rng);
    let y1: Vec<f64> = x1.rows().map(|r| dot_beta(r) + normal(rng)).collect();
    let x2 = gaussian_rows(m, &A3_SHIFT, 1.0, rng);
    let a2 = match h {
        Hypothesis::Null => 0.0,
        Hypothesis::Alt => A3_ALT_INTERCEPT,
    };
    let y2: Vec<f64> = x2.rows().map(|r| a2 + dot_beta(r) + normal(rng)).collect();
    (Dataset { x: x1, y: Some(y1) }, Dataset { x: x2, y: Some(y2) })
}

fn b3_mean(x: &[f64]) -> f64 {
    BETA[0] * x[0] + BETA[1] * x[1] + BETA[2] * x[2].powi(2) + BETA[3] * x[3].powi(2) + BETA[4] * x[4].powi(3)
}

/// Polynomial mean with t(5) noise; under the alternative sample 2 gets the
/// intercept `0.8 (1 - 0.1‖x‖²)`.
pub fn gen_b3<R: Rng + ?Sized>(n: usize, m: usize, h: Hypothesis, rng: &mut R) -> (Dataset, Dataset) {
    let x1 = mixture_rows(n, &MIXTURE_SHIFT, 1.0, rng);
    let y1: Vec<f64> = x1.rows().map(|r| b3_mean(r) + student_t5(rng)).collect();
    let x2 = mixture_rows(m, &[0.0; DIM], 1.5f64.sqrt(), rng);
    let y2: Vec<f64> = x2
        .rows()
        .map(|r| {
            let a = match h {
                Hypothesis::Null => 0.0,
                Hypothesis::Alt => b3_alt_intercept(r),
            };
            a + b3_mean(r) + student_t5(rng)
        })
        .collect();
    (Dataset { x: x1, y: Some(y1) }, Dataset { x: x2, y: Some(y2) })
}

pub(crate) fn b3_alt_intercept(x: &[f64]) -> f64 {
    0.8 * (1.0 - 0.1 * x.iter().map(|v| v * v).sum::<f64>())
}

/// Additive spline mean with noise variance `4 / (1 + X_1²)`; under the
/// alternative sample 2 uses `1.5 / (1 + X_1²)`.
pub fn gen_c3<R: Rng + ?Sized>(n: usize, m: usize, h: Hypothesis, rng: &mut R) -> (Dataset, Dataset) {
    let x1 = mixture_rows(n, &MIXTURE_SHIFT, 1.0, rng);
    let y1: Vec<f64> = x1
        .rows()
        .map(|r| additive_spline_mean(r) + (4.0 / (1.0 + r[0] * r[0])).sqrt() * normal(rng))
        .collect();
    let x2 = mixture_rows(m, &[0.0; DIM], 1.5f64.sqrt(), rng);
    let var2 = match h {
        Hypothesis::Null => 4.0,
        Hypothesis::Alt => 1.5,
    };
    let y2: Vec<f64> = x2
        .rows()
        .map(|r| additive_spline_mean(r) + (var2 / (1.0 + r[0] * r[0])).sqrt() * normal(rng))
        .collect();
    (Dataset { x: x1, y: Some(y1) }, Dataset { x: x2, y: Some(y2) })
}
