use serde::{Deserialize, Serialize};

use super::kernel::{default_bandwidth, KernelFamily, KernelSpec};
use crate::data::Matrix;
use crate::error::{Error, Result};

/// A fixed bandwidth or the `(n/2)^(-1/(d_w+2))` rule.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    #[default]
    Auto,
    Fixed(f64),
}

impl Bandwidth {
    pub fn resolve(self, n: usize, weight_dim: usize) -> Result<f64> {
        match self {
            Self::Auto => default_bandwidth(n, weight_dim),
            Self::Fixed(h) => Ok(h),
        }
    }
}

/// How a procedure localizes: kernel family, bandwidth and the covariate
/// columns the kernel sees (`None` means all of them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub family: KernelFamily,
    pub bandwidth: Bandwidth,
    pub weight_columns: Option<Vec<usize>>,
}

impl Default for Localization {
    fn default() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            bandwidth: Bandwidth::Auto,
            weight_columns: None,
        }
    }
}

impl Localization {
    pub fn columns(&self, ncols: usize) -> Result<Vec<usize>> {
        let cols = match &self.weight_columns {
            Some(c) => c.clone(),
            None => (0..ncols).collect(),
        };
        if cols.is_empty() {
            return Err(Error::arg("at least one weighting column is required"));
        }
        if let Some(&bad) = cols.iter().find(|&&c| c >= ncols) {
            return Err(Error::arg(format!("weighting column {bad} out of range for {ncols} columns")));
        }
        Ok(cols)
    }

    /// Kernel for a problem with `n` labelled rows and `ncols` covariates.
    pub fn kernel(&self, n: usize, ncols: usize) -> Result<KernelSpec> {
        let d_w = self.columns(ncols)?.len();
        KernelSpec::new(self.family, self.bandwidth.resolve(n, d_w)?, d_w)
    }

    /// The weighting columns of `x`.
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        x.select_columns(&self.columns(x.ncols())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_bandwidth_uses_weighting_dimension() {
        let loc = Localization {
            weight_columns: Some(vec![9]),
            ..Localization::default()
        };
        let k = loc.kernel(2000, 10).unwrap();
        assert!((k.bandwidth() - 0.1).abs() < 1e-12);
        assert!(loc.kernel(2000, 5).is_err());
    }

    #[test]
    fn projection_keeps_requested_columns() {
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let loc = Localization {
            weight_columns: Some(vec![2, 0]),
            ..Localization::default()
        };
        assert_eq!(loc.project(&x).unwrap().as_slice(), &[3.0, 1.0]);
    }
}
