use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{normal, uniform};
use crate::data::Matrix;
use crate::screening::{MultiLabelDataset, Rule};
use crate::stats::lower_quantile;

/// 70% quantiles of the two responses, from a 10⁶-draw pilot run of
/// [`a2_pilot_thresholds`] with seed [`A2_PILOT_SEED`] and shared noise.
pub const A2_THRESHOLDS: [f64; 2] = [11.88052301299115, 11.894936023459751];
pub const A2_PILOT_SEED: u64 = 20_240_601;

/// Whether the two responses share one noise draw per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum A2Noise {
    #[default]
    Shared,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSample {
    pub data: MultiLabelDataset,
    /// `violations[i][s]` is `Y_s < a_s`.
    pub violations: Vec<Vec<bool>>,
}

fn responses(x: &[f64], e1: f64, e2: f64) -> [f64; 2] {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    [
        -2.0 * x1 + 7.0 * x2 * x2 + 3.0 * (x3 + 2.0 * x4 * x4).exp() + e1,
        -6.0 * x1 + 5.0 * x2 * x2 + 3.0 * (2.0 * x3 + x4 * x4).exp() + e2,
    ]
}

fn draw_rows<R: Rng + ?Sized>(n: usize, noise: A2Noise, rng: &mut R) -> (Matrix, Vec<Vec<f64>>) {
    let mut x = Matrix::zeros(n, 4);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        for v in x.row_mut(i) {
            *v = uniform(rng, -1.0, 1.0);
        }
        let e1 = normal(rng);
        let e2 = match noise {
            A2Noise::Shared => e1,
            A2Noise::Independent => normal(rng),
        };
        ys.push(responses(x.row(i), e1, e2).to_vec());
    }
    (x, ys)
}

/// Rules `Y_s >= a_s` with the frozen thresholds.
pub fn a2_rules() -> Vec<Rule> {
    A2_THRESHOLDS.iter().map(|&a| Rule::AtLeast(a)).collect()
}

/// Two-response nonlinear regression on `X ~ U[-1, 1]^4`.
pub fn gen_a2<R: Rng + ?Sized>(n: usize, noise: A2Noise, rng: &mut R) -> LabelSample {
    let (x, ys) = draw_rows(n, noise, rng);
    let data = MultiLabelDataset::new(x, ys).expect("row counts agree by construction");
    let violations = data.violations(&a2_rules()).expect("two rules for two components");
    LabelSample { data, violations }
}

/// Lower empirical 70% quantiles of each response over `draws` rows.
pub fn a2_pilot_thresholds(draws: usize, seed: u64) -> [f64; 2] {
    let (_, ys) = draw_rows(draws, A2Noise::Shared, &mut crate::rng::stream(seed));
    let mut out = [0.0; 2];
    for (s, o) in out.iter_mut().enumerate() {
        let mut col: Vec<f64> = ys.iter().map(|y| y[s]).collect();
        col.sort_by(f64::total_cmp);
        *o = lower_quantile(&col, 0.7);
    }
    out
}
