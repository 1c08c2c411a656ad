use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    /// Uniform density on the ball of radius `sqrt(2) * h`.
    Box,
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "rbf" => Ok(Self::Gaussian),
            "box" => Ok(Self::Box),
            other => Err(Error::arg(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Anything that can weight pairs of points and sample from its own
/// density around a center.
///
/// Implemented by [`KernelSpec`]; tests plug in flat kernels to check that
/// the localized p-value collapses to the unweighted one.
pub trait LocalizationKernel {
    fn dim(&self) -> usize;

    /// Weight `H(x, x')`; callers guarantee both slices have length `dim()`.
    fn weight(&self, x: &[f64], x_prime: &[f64]) -> f64;

    /// One draw from the density `H(center, ·)`.
    fn sample<R: Rng + ?Sized>(&self, center: &[f64], rng: &mut R) -> Vec<f64>;
}

/// Kernel `H(x, x') = h^-d K((x - x') / h)` for a Gaussian or box `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
    dim: usize,
    #[serde(skip)]
    norm: f64,
    #[serde(skip)]
    inv_two_h2: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64, dim: usize) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::arg(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if dim == 0 {
            return Err(Error::arg("kernel dimension must be at least 1"));
        }
        let d = dim as f64;
        let norm = match family {
            KernelFamily::Gaussian => (2.0 * std::f64::consts::PI * bandwidth * bandwidth).powf(-d / 2.0),
            KernelFamily::Box => 1.0 / (box_ball_volume(dim) * bandwidth.powi(dim as i32)),
        };
        Ok(Self {
            family,
            bandwidth,
            dim,
            norm,
            inv_two_h2: 1.0 / (2.0 * bandwidth * bandwidth),
        })
    }

    pub fn gaussian(bandwidth: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, bandwidth, dim)
    }

    pub fn boxed(bandwidth: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Box, bandwidth, dim)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `H(x, x)`, the largest value the kernel takes.
    pub fn peak(&self) -> f64 {
        self.norm
    }

    /// Support radius of the box kernel, `sqrt(2) * h`.
    fn box_radius(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.bandwidth
    }
}

/// Volume of the d-ball of radius sqrt(2): `(2π)^{d/2} / Γ(d/2 + 1)`.
fn box_ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    (2.0 * std::f64::consts::PI).powf(d / 2.0) / gamma(d / 2.0 + 1.0)
}

fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl LocalizationKernel for KernelSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn weight(&self, x: &[f64], x_prime: &[f64]) -> f64 {
        let d2 = squared_distance(x, x_prime);
        match self.family {
            KernelFamily::Gaussian => self.norm * (-d2 * self.inv_two_h2).exp(),
            KernelFamily::Box => {
                if d2 <= 2.0 * self.bandwidth * self.bandwidth {
                    self.norm
                } else {
                    0.0
                }
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, center: &[f64], rng: &mut R) -> Vec<f64> {
        match self.family {
            KernelFamily::Gaussian => center
                .iter()
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    c + self.bandwidth * z
                })
                .collect(),
            KernelFamily::Box => {
                // normalized Gaussian direction, radius with density ∝ r^(d-1)
                let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                let u: f64 = rng.random();
                let r = self.box_radius() * u.powf(1.0 / self.dim as f64);
                if norm == 0.0 {
                    return center.to_vec();
                }
                center.iter().zip(&z).map(|(c, zi)| c + r * zi / norm).collect()
            }
        }
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn kernel_weight(spec: &KernelSpec, x: &[f64], x_prime: &[f64]) -> Result<f64> {
    check_dim(spec.dim, x.len())?;
    check_dim(spec.dim, x_prime.len())?;
    Ok(spec.weight(x, x_prime))
}

/// Draws the localization point X̃ from the density `H(x, ·)`.
pub fn sample_localization_point<R: Rng + ?Sized>(
    spec: &KernelSpec,
    x: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dim(spec.dim, x.len())?;
    Ok(spec.sample(x, rng))
}

/// Bandwidth rule `h = (n / 2)^(-1 / (d_w + 2))`, with `d_w` the number of
/// weighting coordinates.
pub fn default_bandwidth(n: usize, weight_dim: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::arg(format!("default bandwidth needs n >= 2, got {n}")));
    }
    if weight_dim == 0 {
        return Err(Error::arg("weighting dimension must be at least 1"));
    }
    Ok((n as f64 / 2.0).powf(-1.0 / (weight_dim as f64 + 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn gaussian_closed_forms() {
        let k = KernelSpec::gaussian(1.0, 1).unwrap();
        let peak = (2.0 * std::f64::consts::PI).powf(-0.5);
        assert_abs_diff_eq!(kernel_weight(&k, &[0.0], &[0.0]).unwrap(), peak, epsilon = 1e-15);
        assert_abs_diff_eq!(kernel_weight(&k, &[0.0], &[0.0]).unwrap(), 0.398942, epsilon = 1e-6);
        assert_abs_diff_eq!(
            kernel_weight(&k, &[0.0], &[1.0]).unwrap(),
            peak * (-0.5f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(kernel_weight(&k, &[0.0], &[1.0]).unwrap(), 0.241971, epsilon = 1e-6);
    }

    #[test]
    fn peak_matches_closed_form_in_higher_dims() {
        for d in 1..6 {
            let h = 0.7;
            let k = KernelSpec::gaussian(h, d).unwrap();
            let x = vec![0.3; d];
            let expected = (2.0 * std::f64::consts::PI * h * h).powf(-(d as f64) / 2.0);
            assert_abs_diff_eq!(k.weight(&x, &x), expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn box_support_and_normalization() {
        let k = KernelSpec::boxed(1.0, 1).unwrap();
        assert_eq!(kernel_weight(&k, &[0.0], &[2.0]).unwrap(), 0.0);
        // 1-d ball of radius sqrt(2) has length 2 sqrt(2)
        assert_abs_diff_eq!(k.weight(&[0.0], &[1.0]), 1.0 / (2.0 * 2f64.sqrt()), epsilon = 1e-15);
        // 2-d: area 2π
        let k2 = KernelSpec::boxed(0.5, 2).unwrap();
        assert_abs_diff_eq!(k2.peak(), 1.0 / (2.0 * std::f64::consts::PI * 0.25), epsilon = 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let k = KernelSpec::gaussian(1.0, 2).unwrap();
        assert!(matches!(
            kernel_weight(&k, &[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(KernelSpec::gaussian(0.0, 1).is_err());
        assert!(KernelSpec::gaussian(1.0, 0).is_err());
    }

    #[test]
    fn bandwidth_rule() {
        assert_abs_diff_eq!(default_bandwidth(2000, 1).unwrap(), 0.1, epsilon = 1e-12);
        for d in 1..8 {
            assert_eq!(default_bandwidth(2, d).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(default_bandwidth(1000, 5).unwrap(), 0.4116, epsilon = 1e-4);
        assert_abs_diff_eq!(
            default_bandwidth(1000, 5).unwrap(),
            (-(500f64.ln()) / 7.0).exp(),
            epsilon = 1e-14
        );
        assert!(default_bandwidth(1, 1).is_err());
    }

    #[test]
    fn tiny_bandwidth_sample_is_the_center() {
        let k = KernelSpec::gaussian(1e-20, 2).unwrap();
        let x = [1.5, -2.0];
        let mut rng = stream(3);
        assert_eq!(sample_localization_point(&k, &x, &mut rng).unwrap(), x.to_vec());
    }

    #[test]
    fn gaussian_sampler_moments() {
        let mut rng = stream(11);
        let k1 = KernelSpec::gaussian(1.0, 1).unwrap();
        let draws: Vec<f64> = (0..100_000).map(|_| k1.sample(&[0.0], &mut rng)[0]).collect();
        assert!(crate::stats::mean(&draws).abs() < 0.02);

        let k2 = KernelSpec::gaussian(2.0, 1).unwrap();
        let draws: Vec<f64> = (0..100_000).map(|_| k2.sample(&[0.0], &mut rng)[0]).collect();
        let var = crate::stats::sample_sd(&draws).powi(2);
        assert!((var - 4.0).abs() / 4.0 < 0.05, "variance {var}");
    }

    #[test]
    fn box_sampler_stays_in_ball_and_is_uniform_in_radius() {
        let mut rng = stream(5);
        let k = KernelSpec::boxed(0.5, 3).unwrap();
        let center = [1.0, 2.0, 3.0];
        let radius = 2f64.sqrt() * 0.5;
        let mut inner = 0usize;
        let n = 50_000;
        for _ in 0..n {
            let p = k.sample(&center, &mut rng);
            let r = squared_distance(&p, &center).sqrt();
            assert!(r <= radius * (1.0 + 1e-12));
            if r <= radius / 2.0 {
                inner += 1;
            }
        }
        // uniform in a 3-ball: Pr(r <= R/2) = 1/8
        let frac = inner as f64 / n as f64;
        assert!((frac - 0.125).abs() < 0.01, "inner fraction {frac}");
    }

    proptest! {
        #[test]
        fn weight_is_symmetric(
            x in proptest::collection::vec(-5.0f64..5.0, 3),
            y in proptest::collection::vec(-5.0f64..5.0, 3),
            h in 0.05f64..3.0,
        ) {
            for k in [KernelSpec::gaussian(h, 3).unwrap(), KernelSpec::boxed(h, 3).unwrap()] {
                prop_assert_eq!(k.weight(&x, &y), k.weight(&y, &x));
                prop_assert!(k.weight(&x, &y) <= k.peak());
            }
        }
    }
}
