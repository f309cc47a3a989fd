//! Rate-distortion function of the phase prior under squared error.
//!
//! The Shannon lower bounds give closed forms; [`blahut_arimoto_point`] solves the
//! rate-distortion problem exactly for a discretized source.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, invalid_input, Result};
use crate::prior::PhasePrior;
use crate::TWO_PI;

/// Successive rate iterates closer than this count as converged (nats).
pub const RATE_TOLERANCE: f64 = 1e-9;

/// A test channel whose rate exceeds the dual lower bound at its own
/// distortion by less than this is accepted (nats).
pub const GAP_TOLERANCE: f64 = 1e-4;

pub const MAX_ITERATIONS: usize = 100_000;

pub const MIN_GRID: usize = 16;

/// Output masses and kernel entries below this are set to zero, which keeps
/// the iteration out of subnormal arithmetic.
const FLUSH_FLOOR: f64 = 1e-200;

/// Iterations between compactions of the active output set.
const COMPACT_EVERY: usize = 64;

/// Cap on the over-relaxation exponent of the accelerated update.
const MAX_EXPONENT: f64 = 8.0;

fn flush(q: &mut DVector<f64>) {
    q.iter_mut().filter(|x| **x < FLUSH_FLOOR).for_each(|x| *x = 0.0);
}

/// Allowed shortfall of a discretized curve below the Shannon lower bound:
/// 0.05 nats at `K = 512`, halving as `K` doubles.
pub fn discretization_slack(grid_size: usize) -> f64 {
    0.05 * 512.0 / grid_size as f64
}

/// Shannon lower bound on the rate, `max(0, ½ ln(Q / D))`.
pub fn shannon_lb_rate(entropy_power: f64, distortion: f64) -> Result<f64> {
    if !(entropy_power > 0.0) || !(distortion > 0.0) {
        return Err(domain(format!(
            "entropy power and distortion must be positive, got Q = {entropy_power}, D = {distortion}"
        )));
    }
    Ok((0.5 * (entropy_power / distortion).ln()).max(0.0))
}

/// Shannon lower bound on the distortion, `Q e^{−2R}`.
pub fn shannon_lb_distortion(entropy_power: f64, rate: f64) -> Result<f64> {
    if !(entropy_power > 0.0) {
        return Err(domain(format!("entropy power must be positive, got {entropy_power}")));
    }
    if !(rate >= 0.0) {
        return Err(domain(format!("rate must be ≥ 0, got {rate}")));
    }
    Ok(entropy_power * (-2.0 * rate).exp())
}

/// One point of the rate-distortion curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdPoint {
    /// Expected distortion of the solved test channel.
    pub distortion: f64,
    /// Mutual information of the solved test channel, in nats.
    pub rate: f64,
    /// Lagrange slope `s`; the curve has slope `−s` here.
    pub slope: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `R(D) ≥ dual_intercept − slope · D` holds for every `D`, whatever the
    /// convergence state.
    pub dual_intercept: f64,
}

impl RdPoint {
    pub fn tangent_lower_bound(&self, distortion: f64) -> f64 {
        self.dual_intercept - self.slope * distortion
    }

    /// Certified excess of `rate` over the true `R(distortion)`.
    pub fn gap(&self) -> f64 {
        (self.rate - self.tangent_lower_bound(self.distortion)).max(0.0)
    }
}

/// Per-iteration record of a Blahut–Arimoto run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaIterate {
    pub rate: f64,
    pub distortion: f64,
}

fn check_source(source: &[f64], distortion: &DMatrix<f64>) -> Result<()> {
    if source.is_empty() || source.len() != distortion.nrows() || distortion.ncols() == 0 {
        return Err(invalid_input("distortion matrix must be K × K' with K = source size"));
    }
    if source.iter().any(|p| !(*p >= 0.0)) {
        return Err(invalid_input("source probabilities must be nonnegative"));
    }
    let total: f64 = source.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(invalid_input(format!("source probabilities sum to {total}")));
    }
    if distortion.iter().any(|d| !(*d >= 0.0)) {
        return Err(invalid_input("distortions must be nonnegative"));
    }
    Ok(())
}

/// Best single reproduction point: the zero-rate end of the curve.
fn zero_rate_point(source: &[f64], distortion: &DMatrix<f64>, slope: f64) -> RdPoint {
    let d_max = (0..distortion.ncols())
        .map(|j| {
            source
                .iter()
                .enumerate()
                .map(|(i, p)| p * distortion[(i, j)])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    RdPoint {
        distortion: d_max,
        rate: 0.0,
        slope,
        converged: true,
        iterations: 0,
        dual_intercept: 0.0,
    }
}

/// Solves for the point of slope `−slope` on the rate-distortion curve of a
/// discrete source by Blahut–Arimoto alternating minimisation.
pub fn blahut_arimoto_point(source: &[f64], distortion: &DMatrix<f64>, slope: f64) -> Result<RdPoint> {
    blahut_arimoto_with(source, distortion, slope, |_| {})
}

/// Like [`blahut_arimoto_point`] but also returns every iterate.
pub fn blahut_arimoto_trace(
    source: &[f64],
    distortion: &DMatrix<f64>,
    slope: f64,
) -> Result<(RdPoint, Vec<BaIterate>)> {
    let mut trace = Vec::new();
    let point = blahut_arimoto_with(source, distortion, slope, |it| trace.push(it))?;
    Ok((point, trace))
}

fn blahut_arimoto_with(
    source: &[f64],
    distortion: &DMatrix<f64>,
    slope: f64,
    mut observe: impl FnMut(BaIterate),
) -> Result<RdPoint> {
    check_source(source, distortion)?;
    if !(slope >= 0.0) || !slope.is_finite() {
        return Err(domain(format!("slope must be finite and ≥ 0, got {slope}")));
    }
    let atoms = source.iter().filter(|p| **p > 0.0).count();
    if slope == 0.0 || atoms == 1 {
        return Ok(zero_rate_point(source, distortion, slope));
    }

    // drop zero-probability source letters; they do not affect the solution
    let support: Vec<usize> = (0..source.len()).filter(|&i| source[i] > 0.0).collect();
    let p = DVector::from_iterator(support.len(), support.iter().map(|&i| source[i]));
    let outputs = distortion.ncols();
    let kernel_entry = |r: usize, j: usize| {
        let k = (-slope * distortion[(support[r], j)]).exp();
        if k < FLUSH_FLOOR {
            0.0
        } else {
            k
        }
    };
    let full_kernel = DMatrix::from_fn(support.len(), outputs, kernel_entry);

    // columns whose output mass has been flushed to zero are dropped for good
    let mut active: Vec<usize> = (0..outputs).collect();
    let mut kernel = full_kernel.clone();
    let mut weighted = DMatrix::from_fn(support.len(), outputs, |r, j| {
        kernel[(r, j)] * distortion[(support[r], j)]
    });
    let mut q = DVector::from_element(outputs, 1.0 / outputs as f64);
    let mut c = &kernel * &q;
    let mut previous_rate = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut rate = 0.0;
    let mut dist = 0.0;
    let mut exponent = 1.0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if c.iter().any(|x| !(*x > 0.0)) {
            return Err(crate::Error::NumericalFailure(
                "Blahut–Arimoto normaliser underflowed; slope too steep for this grid".into(),
            ));
        }
        let p_over_c = p.component_div(&c);
        let ratio = kernel.tr_mul(&p_over_c);
        let mut q_next = q.component_mul(&ratio);
        flush(&mut q_next);
        dist = p_over_c.dot(&(&weighted * &q));
        let ln_c: f64 = p.iter().zip(c.iter()).map(|(pi, ci)| pi * ci.ln()).sum();
        let cross: f64 = q_next
            .iter()
            .zip(ratio.iter())
            .filter(|(qn, _)| **qn > 0.0)
            .map(|(qn, r)| qn * r.ln())
            .sum();
        let lagrangian = -cross - ln_c;
        rate = (lagrangian - slope * dist).max(0.0);
        observe(BaIterate { rate, distortion: dist });

        if iterations % COMPACT_EVERY == 0 {
            let intercept = -ln_c - full_kernel.tr_mul(&p_over_c).max().ln();
            if rate - (intercept - slope * dist) < GAP_TOLERANCE {
                converged = true;
                break;
            }
        }
        if (rate - previous_rate).abs() < RATE_TOLERANCE {
            converged = true;
            break;
        }
        previous_rate = rate;

        // over-relaxed step, kept only if its bound stays below the current Lagrangian
        let mut accepted = false;
        if exponent > 1.0 {
            let mut trial = q.zip_map(&ratio, |qj, rj| qj * rj.powf(exponent));
            let total = trial.sum();
            trial /= total;
            flush(&mut trial);
            let c_trial = &kernel * &trial;
            let bound: f64 = -p.iter().zip(c_trial.iter()).map(|(pi, ci)| pi * ci.ln()).sum::<f64>();
            if bound <= lagrangian && c_trial.iter().all(|x| *x > 0.0) {
                q = trial;
                c = c_trial;
                accepted = true;
                exponent = (exponent * 1.25).min(MAX_EXPONENT);
            } else {
                exponent = (exponent * 0.5).max(1.0);
            }
        } else {
            exponent = 1.25;
        }
        if !accepted {
            q = q_next;
            c = &kernel * &q;
        }

        if iterations % COMPACT_EVERY == 0 && q.iter().any(|x| *x == 0.0) {
            let keep: Vec<usize> = (0..q.len()).filter(|&k| q[k] > 0.0).collect();
            active = keep.iter().map(|&k| active[k]).collect();
            q = DVector::from_iterator(keep.len(), keep.iter().map(|&k| q[k]));
            kernel = DMatrix::from_fn(support.len(), active.len(), |r, k| full_kernel[(r, active[k])]);
            weighted = DMatrix::from_fn(support.len(), active.len(), |r, k| {
                kernel[(r, k)] * distortion[(support[r], active[k])]
            });
            c = &kernel * &q;
        }
    }

    // dual bound over every output letter, including dropped ones
    let p_over_c = p.component_div(&c);
    let ln_c: f64 = p.iter().zip(c.iter()).map(|(pi, ci)| pi * ci.ln()).sum();
    let max_ratio = full_kernel.tr_mul(&p_over_c).max();
    let intercept = -ln_c - max_ratio.ln();

    Ok(RdPoint {
        distortion: dist,
        rate,
        slope,
        converged,
        iterations,
        dual_intercept: intercept,
    })
}

/// Squared-error distortion between two sets of points.
pub fn squared_error_matrix(source_points: &[f64], reproduction_points: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(source_points.len(), reproduction_points.len(), |i, j| {
        let d = source_points[i] - reproduction_points[j];
        d * d
    })
}

/// A prior discretized onto `K` cell midpoints of `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteSource {
    pub points: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl DiscreteSource {
    pub fn from_prior(prior: &PhasePrior, cells: usize) -> Result<Self> {
        prior.validate()?;
        let h = TWO_PI / cells as f64;
        let mut probabilities = prior.cell_masses(cells);
        let total: f64 = probabilities.iter().sum();
        probabilities.iter_mut().for_each(|p| *p /= total);
        Ok(DiscreteSource {
            points: (0..cells).map(|k| (k as f64 + 0.5) * h).collect(),
            probabilities,
        })
    }

    /// Entropy power of the histogram density that spreads each mass over its cell.
    pub fn entropy_power(&self) -> Result<f64> {
        PhasePrior::tabulated_from_weights(&self.probabilities)?.entropy_power()
    }

    pub fn variance(&self) -> f64 {
        let mean: f64 = self.points.iter().zip(&self.probabilities).map(|(x, p)| x * p).sum();
        self.points
            .iter()
            .zip(&self.probabilities)
            .map(|(x, p)| p * (x - mean).powi(2))
            .sum()
    }
}

/// Rate-distortion curve traced by a slope sweep, sorted by increasing distortion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdCurve {
    pub points: Vec<RdPoint>,
    pub grid_size: usize,
    /// Entropy power of the discretized source.
    pub source_entropy_power: f64,
}

/// Default slope schedule: zero plus a geometric sweep from 0.02 to 200.
pub fn default_slopes() -> Vec<f64> {
    let mut s = vec![0.0];
    let steps = 24;
    let (lo, hi) = (0.02f64.ln(), 200f64.ln());
    s.extend((0..steps).map(|i| (lo + (hi - lo) * i as f64 / (steps - 1) as f64).exp()));
    s
}

/// Traces `R(D)` for `prior` discretized onto `grid_size` points, one
/// Blahut–Arimoto run per slope.
pub fn rd_curve(prior: &PhasePrior, grid_size: usize, slopes: &[f64]) -> Result<RdCurve> {
    if grid_size < MIN_GRID {
        return Err(invalid_input(format!(
            "grid size must be ≥ {MIN_GRID}, got {grid_size}"
        )));
    }
    if slopes.is_empty() {
        return Err(invalid_input("slope schedule is empty"));
    }
    let source = DiscreteSource::from_prior(prior, grid_size)?;
    let distortion = squared_error_matrix(&source.points, &source.points);
    let mut points = slopes
        .par_iter()
        .map(|&s| blahut_arimoto_point(&source.probabilities, &distortion, s))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.distortion.total_cmp(&b.distortion).then(b.rate.total_cmp(&a.rate)));
    Ok(RdCurve {
        points,
        grid_size,
        source_entropy_power: source.entropy_power()?,
    })
}

impl RdCurve {
    /// Rigorous lower estimate of `R(D)` from the tangent lines of every point.
    pub fn rate_lower_bound(&self, distortion: f64) -> f64 {
        self.points
            .iter()
            .map(|p| p.tangent_lower_bound(distortion))
            .fold(0.0, f64::max)
    }

    /// `R(D)` by linear interpolation between curve points (an upper estimate).
    pub fn rate_at(&self, distortion: f64) -> Option<f64> {
        let pts = &self.points;
        if pts.is_empty() || distortion < pts[0].distortion {
            return None;
        }
        for w in pts.windows(2) {
            if distortion >= w[0].distortion && distortion <= w[1].distortion {
                let span = w[1].distortion - w[0].distortion;
                if span == 0.0 {
                    return Some(w[0].rate.min(w[1].rate));
                }
                let t = (distortion - w[0].distortion) / span;
                return Some(w[0].rate + t * (w[1].rate - w[0].rate));
            }
        }
        Some(pts.last().map_or(0.0, |p| p.rate))
    }

    /// `D(R)` by linear interpolation along the curve.
    pub fn distortion_at_rate(&self, rate: f64) -> Option<f64> {
        let pts = &self.points;
        if pts.is_empty() || rate > pts[0].rate {
            return None;
        }
        for w in pts.windows(2) {
            if rate <= w[0].rate && rate >= w[1].rate {
                let span = w[0].rate - w[1].rate;
                if span == 0.0 {
                    return Some(w[0].distortion);
                }
                let t = (w[0].rate - rate) / span;
                return Some(w[0].distortion + t * (w[1].distortion - w[0].distortion));
            }
        }
        pts.last().map(|p| p.distortion)
    }

    /// Checks that some non-increasing convex curve passes within each point's
    /// certified gap (plus `tol`) below it, using the two neighbours of every point.
    pub fn is_monotone_convex(&self, tol: f64) -> bool {
        let pts = &self.points;
        let valid = pts.iter().all(|p| p.rate >= 0.0 && p.distortion > 0.0);
        let decreasing = pts.windows(2).all(|w| w[1].rate - w[1].gap() <= w[0].rate + tol);
        let convex = pts.windows(3).all(|w| {
            let span = w[2].distortion - w[0].distortion;
            if span <= 0.0 {
                return true;
            }
            let t = (w[1].distortion - w[0].distortion) / span;
            let chord = (1.0 - t) * w[0].rate + t * w[2].rate;
            w[1].rate - w[1].gap() <= chord + tol
        });
        valid && decreasing && convex
    }
}
