use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Standardizer};
use crate::error::{Error, Result};

/// Tilting direction for five-feature data.
pub const TILT_DIRECTION: [f64; 5] = [-1.0, 0.0, 0.0, 0.0, 1.0];
const TILT_RESAMPLE_FRACTION: f64 = 0.25;

/// How one real dataset is turned into two samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    /// Uniform partition into `floor(n/2)` and `ceil(n/2)` rows.
    Random,
    /// Random partition, then the second part is resampled with replacement
    /// (25% of its size) with probabilities ∝ `exp(zᵀ direction)` on
    /// features standardized with full-data statistics.
    Tilt { direction: Vec<f64> },
    /// Lower half of the sorted responses versus the upper half.
    Response,
}

impl SplitRule {
    pub fn tilt_default() -> Self {
        Self::Tilt { direction: TILT_DIRECTION.to_vec() }
    }
}

pub fn split_rules<R: Rng + ?Sized>(data: &Dataset, rule: &SplitRule, rng: &mut R) -> Result<(Dataset, Dataset)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Data("splitting needs at least two rows".into()));
    }
    match rule {
        SplitRule::Random => {
            let (a, b) = random_halves(n, rng);
            Ok((data.subset(&a), data.subset(&b)))
        }
        SplitRule::Tilt { direction } => {
            if direction.len() != data.x.ncols() {
                return Err(Error::DimensionMismatch { expected: data.x.ncols(), found: direction.len() });
            }
            let (a, b) = random_halves(n, rng);
            let z = Standardizer::fit(&data.x).transform(&data.x);
            let weights: Vec<f64> = b
                .iter()
                .map(|&i| z.row(i).iter().zip(direction).map(|(v, d)| v * d).sum::<f64>().exp())
                .collect();
            let dist = WeightedIndex::new(&weights).map_err(|e| Error::Data(format!("tilting weights: {e}")))?;
            let size = ((b.len() as f64) * TILT_RESAMPLE_FRACTION).round() as usize;
            let picked: Vec<usize> = (0..size).map(|_| b[dist.sample(rng)]).collect();
            Ok((data.subset(&a), data.subset(&picked)))
        }
        SplitRule::Response => {
            let y = data.response()?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| y[i].total_cmp(&y[j]).then(i.cmp(&j)));
            let (lo, hi) = order.split_at(n / 2);
            Ok((data.subset(lo), data.subset(hi)))
        }
    }
}

fn random_halves<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let second = idx.split_off(n / 2);
    (idx, second)
}
