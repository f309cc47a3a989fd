//! Prior distributions of the phase on `[0, 2π)`.
//!
//! The phase is treated as a real variable on `[0, 2π)`, not as a point on the
//! circle, so variances and squared errors are the ordinary non-periodic ones.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre_composite, interval_moments, normal_cdf};
use crate::TWO_PI;
use std::f64::consts::PI;

/// Number of wrap images kept on each side of the wrapped Gaussian.
const WRAP_IMAGES: i32 = 5;

/// Tolerance on the normalization of a tabulated density.
const NORMALIZATION_TOL: f64 = 1e-8;

/// Default grid size used when a prior is tabulated without an explicit size.
pub const DEFAULT_GRID: usize = 4096;

/// A probability density for the phase on `[0, 2π)`.
///
/// Tabulated densities are piecewise constant: value `k` holds on the cell
/// `[k h, (k + 1) h)` with `h = 2π / K`, so the trapezoid rule on the
/// periodic grid is exact for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhasePrior {
    /// Uniform on an arc of length `width` centred on `center`, folded into `[0, 2π)`.
    Uniform {
        #[serde(default = "default_center")]
        center: f64,
        width: f64,
    },
    /// Normal density of standard deviation `sigma` wrapped onto the circle.
    WrappedGaussian { mean: f64, sigma: f64 },
    /// Piecewise-constant density on a uniform grid of `values.len()` cells.
    Tabulated { values: Vec<f64> },
}

fn default_center() -> f64 {
    std::f64::consts::PI
}

impl PhasePrior {
    pub fn uniform(center: f64, width: f64) -> Result<Self> {
        let prior = PhasePrior::Uniform { center, width };
        prior.validate()?;
        Ok(prior)
    }

    /// Uniform over the whole of `[0, 2π)`.
    pub fn full_circle() -> Self {
        PhasePrior::Uniform {
            center: std::f64::consts::PI,
            width: TWO_PI,
        }
    }

    pub fn wrapped_gaussian(mean: f64, sigma: f64) -> Result<Self> {
        let prior = PhasePrior::WrappedGaussian { mean, sigma };
        prior.validate()?;
        Ok(prior)
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        let prior = PhasePrior::Tabulated { values };
        prior.validate()?;
        Ok(prior)
    }

    /// Tabulated prior from nonnegative weights, rescaled to unit mass.
    pub fn tabulated_from_weights(weights: &[f64]) -> Result<Self> {
        let k = weights.len();
        let total: f64 = weights.iter().sum();
        if k < 2 || !(total > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPrior(
                "weights must be finite, nonnegative, at least two, and not all zero".into(),
            ));
        }
        let h = TWO_PI / k as f64;
        PhasePrior::tabulated(weights.iter().map(|w| w / (total * h)).collect())
    }

    /// Histogram of this prior on `cells` equal cells of `[0, 2π)`.
    pub fn tabulate(&self, cells: usize) -> Result<Self> {
        let masses = self.cell_masses(cells);
        let h = TWO_PI / cells as f64;
        PhasePrior::tabulated(masses.iter().map(|m| m / h).collect())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhasePrior::Uniform { center, width } => {
                if !center.is_finite() || !(*width > 0.0 && *width <= TWO_PI + 1e-12) {
                    return Err(Error::InvalidPrior(format!(
                        "uniform width must lie in (0, 2π], got {width}"
                    )));
                }
            }
            PhasePrior::WrappedGaussian { mean, sigma } => {
                if !mean.is_finite() || !(*sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::InvalidPrior(format!(
                        "wrapped Gaussian needs finite mean and sigma > 0, got sigma = {sigma}"
                    )));
                }
                let mass = self.cdf(TWO_PI);
                if (mass - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidPrior(format!(
                        "sigma = {sigma} too wide for {WRAP_IMAGES} wrap images (mass {mass})"
                    )));
                }
            }
            PhasePrior::Tabulated { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidPrior("tabulated prior needs K ≥ 2".into()));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidPrior(
                        "tabulated density must be finite and nonnegative".into(),
                    ));
                }
                let h = TWO_PI / values.len() as f64;
                let integral: f64 = values.iter().sum::<f64>() * h;
                if (integral - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::InvalidPrior(format!(
                        "tabulated density integrates to {integral}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Piecewise-constant description `(center, half_width, density)` for
    /// uniform and tabulated priors.
    fn pieces(&self) -> Option<Vec<(f64, f64, f64)>> {
        match self {
            PhasePrior::Uniform { center, width } => {
                if *width >= TWO_PI - 1e-15 {
                    return Some(vec![(PI, PI, 1.0 / TWO_PI)]);
                }
                let density = 1.0 / width;
                let half = 0.5 * width;
                let c = center.rem_euclid(TWO_PI);
                let (lo, hi) = (c - half, c + half);
                if lo >= 0.0 && hi <= TWO_PI {
                    Some(vec![(c, half, density)])
                } else {
                    let (a, b) = if lo < 0.0 { (lo + TWO_PI, hi) } else { (lo, hi - TWO_PI) };
                    // [0, b] and [a, 2π)
                    Some(vec![
                        (0.5 * b, 0.5 * b, density),
                        (0.5 * (a + TWO_PI), 0.5 * (TWO_PI - a), density),
                    ])
                }
            }
            PhasePrior::Tabulated { values } => {
                let h = TWO_PI / values.len() as f64;
                Some(
                    values
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v > 0.0)
                        .map(|(k, v)| ((k as f64 + 0.5) * h, 0.5 * h, *v))
                        .collect(),
                )
            }
            PhasePrior::WrappedGaussian { .. } => None,
        }
    }

    fn wrapped_gaussian_density(mean: f64, sigma: f64, phi: f64) -> f64 {
        let mu = mean.rem_euclid(TWO_PI);
        let norm = 1.0 / (sigma * (TWO_PI).sqrt());
        (-WRAP_IMAGES..=WRAP_IMAGES)
            .map(|j| {
                let z = (phi + TWO_PI * j as f64 - mu) / sigma;
                norm * (-0.5 * z * z).exp()
            })
            .sum()
    }

    /// Density at `phi`, which is first reduced into `[0, 2π)`.
    pub fn density(&self, phi: f64) -> f64 {
        let phi = phi.rem_euclid(TWO_PI);
        match self {
            PhasePrior::WrappedGaussian { mean, sigma } => Self::wrapped_gaussian_density(*mean, *sigma, phi),
            PhasePrior::Tabulated { values } => {
                let k = ((phi / TWO_PI) * values.len() as f64).floor() as usize;
                values[k.min(values.len() - 1)]
            }
            PhasePrior::Uniform { .. } => self
                .pieces()
                .unwrap_or_default()
                .iter()
                .find(|(c, w, _)| phi >= c - w && phi < c + w)
                .map_or(0.0, |p| p.2),
        }
    }

    /// Cumulative distribution `P(Φ ≤ phi)` for `phi ∈ [0, 2π]`.
    pub fn cdf(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, TWO_PI);
        match self {
            PhasePrior::WrappedGaussian { mean, sigma } => {
                let mu = mean.rem_euclid(TWO_PI);
                (-WRAP_IMAGES..=WRAP_IMAGES)
                    .map(|j| {
                        let shift = TWO_PI * j as f64 - mu;
                        normal_cdf((phi + shift) / sigma) - normal_cdf(shift / sigma)
                    })
                    .sum()
            }
            _ => self
                .pieces()
                .unwrap_or_default()
                .iter()
                .map(|&(c, w, d)| d * (phi.min(c + w) - (c - w)).clamp(0.0, 2.0 * w))
                .sum(),
        }
    }

    /// Probability mass of each of `cells` equal cells of `[0, 2π)`.
    pub fn cell_masses(&self, cells: usize) -> Vec<f64> {
        let h = TWO_PI / cells as f64;
        let edges: Vec<f64> = (0..=cells).map(|k| self.cdf(k as f64 * h)).collect();
        edges.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
    }

    /// Gauss–Legendre panel count for integrals against a smooth prior.
    fn smooth_panels(sigma: f64, min_panels: usize, max_frequency: usize) -> usize {
        let for_width = (TWO_PI / (0.25 * sigma)).ceil() as usize;
        min_panels.max(for_width).max(2 * max_frequency).max(1024)
    }

    /// `∫ φ^r e^{ikφ} P(φ) dφ` over `[0, 2π)` for `r = 0, 1, 2` and `k = 0..=max_frequency`.
    ///
    /// Exact for uniform and tabulated priors. The wrapped Gaussian uses composite
    /// Gauss–Legendre with at least `panels` panels.
    pub fn moment_table(&self, max_frequency: usize, panels: usize) -> Vec<[Complex64; 3]> {
        match self {
            PhasePrior::WrappedGaussian { sigma, .. } => {
                let n = Self::smooth_panels(*sigma, panels, max_frequency);
                let nodes: Vec<(f64, f64)> = gauss_legendre_composite(0.0, TWO_PI, n)
                    .into_iter()
                    .map(|(x, w)| (x, w * self.density(x)))
                    .collect();
                (0..=max_frequency)
                    .map(|k| {
                        let mut acc = [Complex64::new(0.0, 0.0); 3];
                        for &(x, w) in &nodes {
                            let e = Complex64::from_polar(w, k as f64 * x);
                            acc[0] += e;
                            acc[1] += e * x;
                            acc[2] += e * (x * x);
                        }
                        acc
                    })
                    .collect()
            }
            _ => {
                let pieces = self.pieces().unwrap_or_default();
                let mut table: Vec<[Complex64; 3]> = (0..=max_frequency)
                    .map(|k| {
                        let mut acc = [Complex64::new(0.0, 0.0); 3];
                        for &(c, w, d) in &pieces {
                            let m = interval_moments(c, w, k as i64);
                            for r in 0..3 {
                                acc[r] += m[r] * d;
                            }
                        }
                        acc
                    })
                    .collect();
                // absorb rounding in the total mass of split arcs
                let mass = table[0][0].re;
                table.iter_mut().flatten().for_each(|z| *z /= mass);
                table
            }
        }
    }

    /// Fourier coefficients `∫ P(φ) e^{ikφ} dφ` for `k = 0..=max_frequency`.
    pub fn fourier_coefficients(&self, max_frequency: usize) -> Vec<Complex64> {
        self.moment_table(max_frequency, 0).into_iter().map(|m| m[0]).collect()
    }

    pub fn mean(&self) -> f64 {
        self.moment_table(0, 0)[0][1].re
    }

    /// Variance of Φ as a real variable on `[0, 2π)`: the MSE of the best
    /// constant estimate, i.e. the zero-information baseline.
    pub fn variance(&self) -> f64 {
        let m = self.moment_table(0, 0)[0];
        let mass = m[0].re;
        let mean = m[1].re / mass;
        (m[2].re / mass - mean * mean).max(0.0)
    }

    /// Differential entropy `h(Φ) = −∫ P ln P` in nats.
    pub fn differential_entropy(&self) -> Result<f64> {
        self.validate()?;
        Ok(match self {
            PhasePrior::WrappedGaussian { sigma, .. } => {
                let panels = Self::smooth_panels(*sigma, 4096, 0);
                gauss_legendre_composite(0.0, TWO_PI, panels)
                    .iter()
                    .map(|&(x, w)| {
                        let p = self.density(x);
                        if p > 0.0 {
                            -w * p * p.ln()
                        } else {
                            0.0
                        }
                    })
                    .sum()
            }
            _ => self
                .pieces()
                .unwrap_or_default()
                .iter()
                .map(|&(_, w, d)| if d > 0.0 { -2.0 * w * d * d.ln() } else { 0.0 })
                .sum(),
        })
    }

    /// Entropy power `Q = e^{2h} / (2πe)`.
    pub fn entropy_power(&self) -> Result<f64> {
        let h = self.differential_entropy()?;
        Ok((2.0 * h).exp() / (TWO_PI * std::f64::consts::E))
    }

    /// Supremum of the density over `[0, 2π)`.
    pub fn max_density(&self) -> f64 {
        match self {
            PhasePrior::Uniform { width, .. } => 1.0 / width,
            PhasePrior::Tabulated { values } => values.iter().cloned().fold(0.0, f64::max),
            // The wrapped normal is unimodal with its mode at the mean.
            PhasePrior::WrappedGaussian { mean, .. } => self.density(mean.rem_euclid(TWO_PI)),
        }
    }

    /// Draws one phase from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PhasePrior::WrappedGaussian { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mean + sigma * z).rem_euclid(TWO_PI)
            }
            _ => {
                let pieces = self.pieces().unwrap_or_default();
                let mut u: f64 = rng.random::<f64>();
                for &(c, w, d) in &pieces {
                    let mass = 2.0 * w * d;
                    if u < mass {
                        return c - w + u / d;
                    }
                    u -= mass;
                }
                let (c, w, _) = *pieces.last().expect("validated prior has support");
                c - w + rng.random::<f64>() * 2.0 * w
            }
        }
    }
}
