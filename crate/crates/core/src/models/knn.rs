use serde::{Deserialize, Serialize};

use crate::data::{Matrix, Standardizer};
use crate::error::{Error, Result};
use crate::stats::lower_quantile;

/// Indices of the `k` training rows closest to `query`, nearest first.
/// Equal distances are ordered by row index.
pub fn nearest_neighbors(train: &Matrix, query: &[f64], k: usize) -> Vec<(f64, usize)> {
    let mut dists: Vec<(f64, usize)> = train
        .rows()
        .enumerate()
        .map(|(i, row)| {
            let d2: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        })
        .collect();
    let k = k.min(dists.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dists.len() && k > 0 {
        dists.select_nth_unstable_by(k - 1, cmp);
    }
    dists.truncate(k);
    dists.sort_by(cmp);
    dists.into_iter().map(|(d2, i)| (d2.sqrt(), i)).collect()
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Fit("k-NN model needs a nonempty training set".into()));
    }
    if k == 0 || k > n {
        return Err(Error::Fit(format!("k = {k} must lie in 1..={n}")));
    }
    Ok(())
}

/// k-NN conditional quantile regressor for the CQR score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnQuantileModel {
    standardizer: Standardizer,
    train_covariates: Matrix,
    train_responses: Vec<f64>,
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
}

pub fn fit_knn_quantile(
    train_x: &Matrix,
    train_y: &[f64],
    k: usize,
    lo: f64,
    hi: f64,
) -> Result<KnnQuantileModel> {
    check_k(k, train_x.nrows())?;
    if train_y.len() != train_x.nrows() {
        return Err(Error::DimensionMismatch { expected: train_x.nrows(), found: train_y.len() });
    }
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::arg(format!("quantile levels must satisfy 0 < lo < hi < 1, got {lo}, {hi}")));
    }
    let standardizer = Standardizer::fit(train_x);
    Ok(KnnQuantileModel {
        train_covariates: standardizer.transform(train_x),
        standardizer,
        train_responses: train_y.to_vec(),
        k,
        lo,
        hi,
    })
}

impl KnnQuantileModel {
    /// Lower empirical `(lo, hi)` quantiles of the neighbours' responses.
    pub fn quantiles(&self, x: &[f64]) -> (f64, f64) {
        let mut z = vec![0.0; x.len()];
        self.standardizer.transform_row(x, &mut z);
        let mut ys: Vec<f64> = nearest_neighbors(&self.train_covariates, &z, self.k)
            .into_iter()
            .map(|(_, i)| self.train_responses[i])
            .collect();
        ys.sort_by(f64::total_cmp);
        (lower_quantile(&ys, self.lo), lower_quantile(&ys, self.hi))
    }

    /// `max(q_lo(x) - y, y - q_hi(x))`; negative inside the band.
    pub fn cqr_score(&self, x: &[f64], y: f64) -> f64 {
        let (q_lo, q_hi) = self.quantiles(x);
        (q_lo - y).max(y - q_hi)
    }
}

/// Mean distance to the `k` nearest training points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnOneClassModel {
    standardizer: Standardizer,
    train_covariates: Matrix,
    pub k: usize,
}

/// With `standardize = false` distances are measured in the raw units.
pub fn fit_knn_one_class(train_x: &Matrix, k: usize, standardize: bool) -> Result<KnnOneClassModel> {
    check_k(k, train_x.nrows())?;
    let standardizer = if standardize {
        Standardizer::fit(train_x)
    } else {
        Standardizer::identity(train_x.ncols())
    };
    Ok(KnnOneClassModel {
        train_covariates: standardizer.transform(train_x),
        standardizer,
        k,
    })
}

impl KnnOneClassModel {
    pub fn one_class_score(&self, x: &[f64]) -> f64 {
        let mut z = vec![0.0; x.len()];
        self.standardizer.transform_row(x, &mut z);
        let nn = nearest_neighbors(&self.train_covariates, &z, self.k);
        nn.iter().map(|(d, _)| d).sum::<f64>() / nn.len() as f64
    }
}
