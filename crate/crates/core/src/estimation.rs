//! Bayesian phase estimation with a canonical phase measurement on the signal mode.
//!
//! The outcome density is covariant: `p(θ | φ) = p₀(θ − φ)`, where `p₀` is the
//! canonical phase density of the unmodulated reduced signal state. Integrals
//! over `φ` reduce to prior moments `∫ P(φ) φ^r e^{ikφ} dφ`, and integrals over
//! `θ` use the periodic trapezoid rule.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};
use crate::fock::{chi_decompose, DensityMatrix, ProbeSpec};
use crate::prior::PhasePrior;
use crate::TWO_PI;

/// Largest negative outcome density tolerated before reporting a failure.
const DENSITY_TOL: f64 = 1e-10;

/// Grid-doubling change above which a result is flagged as not converged.
pub const CONVERGENCE_TOL: f64 = 1e-4;

/// Marginal outcome densities at or below this carry no estimator.
const MARGINAL_FLOOR: f64 = 1e-300;

pub const MIN_SAMPLES: usize = 10_000;

/// Quadrature grid sizes.
///
/// `phi` sets the Gauss–Legendre resolution for smooth priors; `theta` is the
/// number of outcome points on `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimGrid {
    pub phi: usize,
    pub theta: usize,
}

impl Default for SimGrid {
    fn default() -> Self {
        SimGrid { phi: 256, theta: 512 }
    }
}

impl SimGrid {
    pub fn new(phi: usize, theta: usize) -> Result<Self> {
        let grid = SimGrid { phi, theta };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phi < 128 || !self.phi.is_power_of_two() {
            return Err(invalid_input(format!(
                "phase grid must be a power of two ≥ 128, got {}",
                self.phi
            )));
        }
        if self.theta < 256 || !self.theta.is_power_of_two() {
            return Err(invalid_input(format!(
                "outcome grid must be a power of two ≥ 256, got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        SimGrid {
            phi: 2 * self.phi,
            theta: 2 * self.theta,
        }
    }
}

/// Canonical phase density `p(θ) = (1/2π) Σ_{m,m′} ρ_{m m′} e^{i(m′−m)θ}` of a
/// signal-only state.
pub fn canonical_phase_density(rho: &DensityMatrix, theta: f64) -> Result<f64> {
    if rho.labels().iter().any(|l| l.idler.is_some()) {
        return Err(invalid_input("canonical phase density needs a signal-only state"));
    }
    let e = rho.entries();
    let labels = rho.labels();
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, la) in labels.iter().enumerate() {
        for (b, lb) in labels.iter().enumerate() {
            let k = lb.signal as f64 - la.signal as f64;
            acc += e[(a, b)] * Complex64::from_polar(1.0, k * theta);
        }
    }
    check_density(acc.re / TWO_PI, theta)
}

fn check_density(p: f64, theta: f64) -> Result<f64> {
    if p < -DENSITY_TOL || !p.is_finite() {
        return Err(Error::NumericalFailure(format!("outcome density {p:e} at θ = {theta}")));
    }
    Ok(p.max(0.0))
}

/// Outcome density `p₀(x)` as a trigonometric polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    /// `a_d = Σ_m ρ_{m, m−d}` for `d = 0..=D`; `p₀(x) = (1/2π) Σ_d a_d e^{−idx}`
    /// with `a_{−d} = a_d*`.
    coefficients: Vec<Complex64>,
}

impl OutcomeModel {
    /// Model for `probe` after a channel of transmittance `eta`, idler traced out.
    pub fn new(probe: &ProbeSpec, eta: f64) -> Result<Self> {
        let rho = chi_decompose(probe, eta)?.output_state().reduced_signal();
        Self::from_signal_state(&rho)
    }

    pub fn from_signal_state(rho: &DensityMatrix) -> Result<Self> {
        rho.check_hermitian_unit_trace()?;
        let e: &DMatrix<Complex64> = rho.entries();
        let dim = rho.dim();
        let coefficients = (0..dim).map(|d| (d..dim).map(|m| e[(m, m - d)]).sum()).collect();
        Ok(OutcomeModel { coefficients })
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Highest frequency present.
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn density(&self, x: f64) -> f64 {
        let mut acc = self.coefficients[0].re;
        for (d, a) in self.coefficients.iter().enumerate().skip(1) {
            acc += 2.0 * (a * Complex64::from_polar(1.0, -(d as f64) * x)).re;
        }
        acc / TWO_PI
    }

    /// Exact probability of each of `cells` equal cells of `[0, 2π)`.
    pub fn cell_masses(&self, cells: usize) -> Vec<f64> {
        let h = TWO_PI / cells as f64;
        (0..cells)
            .map(|j| {
                let (lo, hi) = (j as f64 * h, (j + 1) as f64 * h);
                let mut acc = self.coefficients[0].re * h;
                for (d, a) in self.coefficients.iter().enumerate().skip(1) {
                    let k = d as f64;
                    // ∫ e^{−ikx} dx = (e^{−ik hi} − e^{−ik lo}) / (−ik)
                    let integral = (Complex64::from_polar(1.0, -k * hi) - Complex64::from_polar(1.0, -k * lo))
                        / Complex64::new(0.0, -k);
                    acc += 2.0 * (a * integral).re;
                }
                (acc / TWO_PI).max(0.0)
            })
            .collect()
    }
}

/// Posterior summary on the outcome grid.
#[derive(Debug, Clone, PartialEq)]
struct Posterior {
    marginal: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

fn posterior(model: &OutcomeModel, prior: &PhasePrior, grid: SimGrid) -> Result<Posterior> {
    grid.validate()?;
    prior.validate()?;
    let degree = model.degree();
    let moments = prior.moment_table(degree, grid.phi);
    let h = TWO_PI / grid.theta as f64;
    let rows: Vec<Result<[f64; 3]>> = (0..grid.theta)
        .into_par_iter()
        .map(|j| {
            let theta = j as f64 * h;
            let mut out = [0.0; 3];
            for (r, slot) in out.iter_mut().enumerate() {
                let mut acc = model.coefficients[0].re * moments[0][r].re;
                for (d, (a, m)) in model
                    .coefficients
                    .iter()
                    .zip(&moments)
                    .enumerate()
                    .take(degree + 1)
                    .skip(1)
                {
                    let wave = Complex64::from_polar(1.0, -(d as f64) * theta);
                    // d and −d terms are complex conjugates
                    acc += 2.0 * (a * wave * m[r]).re;
                }
                *slot = acc / TWO_PI;
            }
            out[0] = check_density(out[0], theta)?;
            Ok(out)
        })
        .collect();
    let mut post = Posterior {
        marginal: Vec::with_capacity(grid.theta),
        first: Vec::with_capacity(grid.theta),
        second: Vec::with_capacity(grid.theta),
    };
    for row in rows {
        let [a, b, c] = row?;
        post.marginal.push(a);
        post.first.push(b);
        post.second.push(c);
    }
    Ok(post)
}

fn mmse_on_grid(model: &OutcomeModel, prior: &PhasePrior, grid: SimGrid) -> Result<(f64, Vec<f64>)> {
    let post = posterior(model, prior, grid)?;
    let h = TWO_PI / grid.theta as f64;
    let fallback = prior.mean();
    let mut total = 0.0;
    let mut estimator = Vec::with_capacity(grid.theta);
    for j in 0..grid.theta {
        let (a, b, c) = (post.marginal[j], post.first[j], post.second[j]);
        if a <= MARGINAL_FLOOR {
            estimator.push(fallback);
            continue;
        }
        total += h * (c - b * b / a).max(0.0);
        estimator.push(b / a);
    }
    Ok((total, estimator))
}

/// Posterior-mean estimator `φ̂(θ)` tabulated on the outcome grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTable {
    pub values: Vec<f64>,
}

impl EstimatorTable {
    /// Periodic linear interpolation.
    pub fn evaluate(&self, theta: f64) -> f64 {
        let n = self.values.len();
        let t = theta.rem_euclid(TWO_PI) / TWO_PI * n as f64;
        let j = (t.floor() as usize).min(n - 1);
        let frac = t - j as f64;
        self.values[j] * (1.0 - frac) + self.values[(j + 1) % n] * frac
    }
}

/// Result of [`bayesian_mmse`].
#[derive(Debug, Clone, PartialEq)]
pub struct MmseEstimate {
    /// MMSE on the requested grid.
    pub mse: f64,
    /// MMSE with both grid sizes doubled.
    pub mse_doubled: f64,
    pub converged: bool,
    pub estimator: EstimatorTable,
}

impl MmseEstimate {
    pub fn grid_change(&self) -> f64 {
        (self.mse - self.mse_doubled).abs()
    }
}

/// Bayesian minimum mean-squared error of the posterior-mean estimator.
pub fn bayesian_mmse(probe: &ProbeSpec, eta: f64, prior: &PhasePrior, grid: SimGrid) -> Result<MmseEstimate> {
    let model = OutcomeModel::new(probe, eta)?;
    mmse_for_model(&model, prior, grid)
}

pub fn mmse_for_model(model: &OutcomeModel, prior: &PhasePrior, grid: SimGrid) -> Result<MmseEstimate> {
    let (mse, estimator) = mmse_on_grid(model, prior, grid)?;
    let (mse_doubled, _) = mmse_on_grid(model, prior, grid.doubled())?;
    Ok(MmseEstimate {
        mse,
        mse_doubled,
        converged: (mse - mse_doubled).abs() <= CONVERGENCE_TOL,
        estimator: EstimatorTable { values: estimator },
    })
}

fn trapezoid_entropy(values: impl Iterator<Item = f64>, h: f64) -> f64 {
    values.filter(|&p| p > 0.0).map(|p| -h * p * p.ln()).sum()
}

/// Mutual information `I(Φ; Θ) = h(Θ) − h(Θ | Φ)` in nats.
pub fn measurement_mutual_information(probe: &ProbeSpec, eta: f64, prior: &PhasePrior, grid: SimGrid) -> Result<f64> {
    let model = OutcomeModel::new(probe, eta)?;
    mutual_information_for_model(&model, prior, grid)
}

pub fn mutual_information_for_model(model: &OutcomeModel, prior: &PhasePrior, grid: SimGrid) -> Result<f64> {
    let post = posterior(model, prior, grid)?;
    let h = TWO_PI / grid.theta as f64;
    let conditional: Vec<f64> = (0..grid.theta)
        .map(|j| check_density(model.density(j as f64 * h), j as f64 * h))
        .collect::<Result<_>>()?;
    Ok(trapezoid_entropy(post.marginal.into_iter(), h) - trapezoid_entropy(conditional.into_iter(), h))
}

/// Sample mean of the squared error and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte Carlo check of the estimator: `φ` from the prior, `θ = φ + x` with `x`
/// drawn from `p₀` by inverse CDF on the estimator's grid.
pub fn monte_carlo_mse(
    probe: &ProbeSpec,
    eta: f64,
    prior: &PhasePrior,
    estimator: &EstimatorTable,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples < MIN_SAMPLES {
        return Err(invalid_input(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if estimator.values.is_empty() {
        return Err(invalid_input("estimator table is empty"));
    }
    prior.validate()?;
    let model = OutcomeModel::new(probe, eta)?;
    let cells = estimator.values.len();
    let h = TWO_PI / cells as f64;
    let mut cdf = Vec::with_capacity(cells);
    let mut running = 0.0;
    for m in model.cell_masses(cells) {
        running += m;
        cdf.push(running);
    }
    let total = running;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let phi = prior.sample(&mut rng);
        let u = rng.random::<f64>() * total;
        let cell = cdf.partition_point(|&c| c <= u).min(cells - 1);
        let x = (cell as f64 + rng.random::<f64>()) * h;
        let theta = (phi + x).rem_euclid(TWO_PI);
        let err = estimator.evaluate(theta) - phi;
        let sq = err * err;
        sum += sq;
        sum_sq += sq * sq;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(MonteCarloEstimate {
        mean,
        stderr: (var / n).sqrt(),
        samples,
    })
}
