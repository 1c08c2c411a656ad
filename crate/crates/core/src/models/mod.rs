//! Fitted non-conformity score functions.
//!
//! The procedures only need a map from `(x, y)` (or `x` alone) to a real
//! score, so any family works; three are provided for outlier-type scores
//! and a logistic classifier backs the probability and density-ratio scores.

mod knn;
mod linear;
mod logistic;

pub use knn::{fit_knn_one_class, fit_knn_quantile, nearest_neighbors, KnnOneClassModel, KnnQuantileModel};
pub use linear::{fit_linear_residual, LinearResidualModel};
pub use logistic::{
    conditional_density_ratio_score, fit_density_ratio, fit_logistic, penalized_log_likelihood,
    DensityRatioModel, LogisticModel, DEFAULT_L2,
};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Which score family to fit on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScoreModelSpec {
    /// `|y - μ(x)|` with least-squares μ.
    LinearResidual,
    /// Conformalized quantile regression score from k-NN quantiles.
    KnnCqr { k: usize, lo: f64, hi: f64 },
    /// Mean distance to the `k` nearest clean points; ignores any response.
    KnnOneClass { k: usize, standardize: bool },
}

impl Default for ScoreModelSpec {
    fn default() -> Self {
        Self::KnnCqr { k: 50, lo: 0.05, hi: 0.95 }
    }
}

impl ScoreModelSpec {
    pub fn needs_response(&self) -> bool {
        !matches!(self, Self::KnnOneClass { .. })
    }

    pub fn fit(&self, train: &Dataset) -> Result<FittedScore> {
        Ok(match *self {
            Self::LinearResidual => FittedScore::Linear(fit_linear_residual(&train.x, train.response()?)?),
            Self::KnnCqr { k, lo, hi } => {
                FittedScore::Cqr(fit_knn_quantile(&train.x, train.response()?, k, lo, hi)?)
            }
            Self::KnnOneClass { k, standardize } => {
                FittedScore::OneClass(fit_knn_one_class(&train.x, k, standardize)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedScore {
    Linear(LinearResidualModel),
    Cqr(KnnQuantileModel),
    OneClass(KnnOneClassModel),
}

impl FittedScore {
    pub fn score(&self, x: &[f64], y: Option<f64>) -> Result<f64> {
        let need_y = || Error::arg("this score model needs a response value");
        Ok(match self {
            Self::Linear(m) => m.score(x, y.ok_or_else(need_y)?),
            Self::Cqr(m) => m.cqr_score(x, y.ok_or_else(need_y)?),
            Self::OneClass(m) => m.one_class_score(x),
        })
    }

    /// Scores every row of `data`.
    pub fn score_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        (0..data.len())
            .map(|i| self.score(data.x.row(i), data.y.as_ref().map(|y| y[i])))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Matrix;

    #[test]
    fn spec_round_trips_through_toml_style_json() {
        let spec = ScoreModelSpec::KnnCqr { k: 10, lo: 0.1, hi: 0.9 };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"kind\":\"knn-cqr\""));
        assert_eq!(serde_json::from_str::<ScoreModelSpec>(&s).unwrap(), spec);
    }

    #[test]
    fn response_is_required_where_needed() {
        let train = Dataset::new(Matrix::column_vector(&[0.0, 1.0, 2.0]), Some(vec![0.0, 1.0, 2.0])).unwrap();
        let fitted = ScoreModelSpec::LinearResidual.fit(&train).unwrap();
        assert!(fitted.score(&[1.0], None).is_err());
        let oc = ScoreModelSpec::KnnOneClass { k: 1, standardize: false }.fit(&train).unwrap();
        assert_eq!(oc.score(&[5.0], None).unwrap(), 3.0);
        let unlabeled = Dataset::unlabeled(Matrix::column_vector(&[0.0]));
        assert!(ScoreModelSpec::LinearResidual.fit(&unlabeled).is_err());
    }
}
