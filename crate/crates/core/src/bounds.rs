//! Lower bounds on the mean-squared error of phase estimation.

use serde::{Deserialize, Serialize};

use crate::capacity::{capacity_upper_bound_lossy, unrestricted_capacity};
use crate::error::{domain, Result};
use crate::estimation::{bayesian_mmse, measurement_mutual_information, monte_carlo_mse, MonteCarloEstimate, SimGrid};
use crate::fock::{chi_decompose, holevo_quantity, IdlerMode, ProbeSpec};
use crate::prior::{PhasePrior, DEFAULT_GRID};
use crate::rate_distortion::{default_slopes, rd_curve};
use crate::TWO_PI;
use std::f64::consts::E;

/// Slack allowed on `P_max ≥ 1/2π` for densities evaluated in floating point.
const MAX_DENSITY_TOL: f64 = 1e-12;

fn check_entropy_power(q: f64) -> Result<()> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(domain(format!("entropy power must be positive and finite, got {q}")));
    }
    Ok(())
}

fn check_photons(n: f64) -> Result<()> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(domain(format!("mean photon number must be ≥ 0, got {n}")));
    }
    Ok(())
}

/// Distortion reachable at rate `capacity` by the Shannon lower bound, `Q e^{−2C}`.
pub fn iti_bound(entropy_power: f64, capacity: f64) -> Result<f64> {
    check_entropy_power(entropy_power)?;
    if !(capacity >= 0.0) {
        return Err(domain(format!("capacity must be ≥ 0, got {capacity}")));
    }
    Ok(entropy_power * (-2.0 * capacity).exp())
}

/// `Q / (e² (N+1)²)`.
pub fn h_limit_bound(entropy_power: f64, mean_photons: f64) -> Result<f64> {
    check_entropy_power(entropy_power)?;
    check_photons(mean_photons)?;
    Ok(entropy_power / (E * E * (mean_photons + 1.0).powi(2)))
}

/// `1 / (2π e³ P_max² (N+1)²)`.
pub fn hall_wiseman_bound(max_density: f64, mean_photons: f64) -> Result<f64> {
    if !(max_density >= 1.0 / TWO_PI - MAX_DENSITY_TOL) || !max_density.is_finite() {
        return Err(domain(format!(
            "maximum prior density must be ≥ 1/2π, got {max_density}"
        )));
    }
    check_photons(mean_photons)?;
    Ok(1.0 / (TWO_PI * E.powi(3) * max_density.powi(2) * (mean_photons + 1.0).powi(2)))
}

/// `Q (1−η)² / (2πe [η(1−η)N + 1/12])`.
pub fn lossy_sql_bound(entropy_power: f64, mean_photons: f64, eta: f64) -> Result<f64> {
    check_entropy_power(entropy_power)?;
    check_photons(mean_photons)?;
    if !(0.0..1.0).contains(&eta) {
        return Err(domain(format!("lossy bound needs 0 ≤ η < 1, got {eta}")));
    }
    let spread = eta * (1.0 - eta) * mean_photons + 1.0 / 12.0;
    Ok(entropy_power * (1.0 - eta).powi(2) / (TWO_PI * E * spread))
}

/// `(1−η)/(4ηN) + 1/(4 Var N)`, a bound for unbiased estimators at fixed phase.
pub fn escher_bound(mean_photons: f64, photon_variance: f64, eta: f64) -> Result<f64> {
    if !(mean_photons > 0.0) || !(photon_variance > 0.0) {
        return Err(domain(format!(
            "needs N > 0 and Var N > 0, got N = {mean_photons}, Var N = {photon_variance}"
        )));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(domain(format!("needs 0 < η ≤ 1, got {eta}")));
    }
    Ok((1.0 - eta) / (4.0 * eta * mean_photons) + 1.0 / (4.0 * photon_variance))
}

/// Which optional diagnostics [`build_report`] computes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Phase quadrature resolution for χ with smooth priors; `None` skips χ.
    pub chi_grid: Option<usize>,
    pub simulate: Option<SimGrid>,
    /// `(samples, seed)`; needs `simulate`.
    pub monte_carlo: Option<(usize, u64)>,
    /// Cell count for the exact discretized `D(R)` at `R = C`.
    pub rd_grid: Option<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            chi_grid: Some(DEFAULT_GRID),
            simulate: None,
            monte_carlo: None,
            rd_grid: None,
        }
    }
}

/// All bounds and diagnostics for one (prior, probe, η) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub prior: PhasePrior,
    pub probe: String,
    pub idler: IdlerMode,
    pub eta: f64,
    pub n_s: f64,
    pub photon_variance: f64,
    pub entropy_power: f64,
    pub max_density: f64,
    pub prior_variance: f64,
    /// `Q e^{−2C}` with `C` the unrestricted capacity.
    pub iti_bound: f64,
    pub h_limit: f64,
    pub hall_wiseman: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lossy_sql: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escher: Option<f64>,
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_lossy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iti_chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutual_information: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iti_mutual_information: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse_sim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse_sim_doubled: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloEstimate>,
    /// Exact discretized `D(C)` from Blahut–Arimoto.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_distortion: Option<f64>,
}

impl BoundReport {
    pub fn is_lossless(&self) -> bool {
        self.eta == 1.0
    }
}

/// Computes every bound for `probe` through a channel of transmittance `eta`.
pub fn build_report(prior: &PhasePrior, probe: &ProbeSpec, eta: f64, options: &ReportOptions) -> Result<BoundReport> {
    prior.validate()?;
    let decomp = chi_decompose(probe, eta)?;
    let q = prior.entropy_power()?;
    let max_density = prior.max_density();
    let n_s = probe.mean_photons();
    let var_n = probe.photon_variance();
    let capacity = unrestricted_capacity(n_s)?;
    let lossless = eta == 1.0;

    let capacity_lossy = if lossless {
        None
    } else {
        capacity_upper_bound_lossy(n_s, eta).ok()
    };
    let lossy_sql = if lossless {
        None
    } else {
        Some(lossy_sql_bound(q, n_s, eta)?)
    };
    let escher = escher_bound(n_s, var_n, eta).ok();

    let chi = match options.chi_grid {
        Some(grid) => Some(holevo_quantity(&decomp, prior, grid)?.max(0.0)),
        None => None,
    };
    let iti_chi = chi.map(|c| iti_bound(q, c)).transpose()?;

    let mut report = BoundReport {
        prior: prior.clone(),
        probe: format!("amplitudes(cutoff={})", probe.cutoff()),
        idler: probe.idler(),
        eta,
        n_s,
        photon_variance: var_n,
        entropy_power: q,
        max_density,
        prior_variance: prior.variance(),
        iti_bound: iti_bound(q, capacity)?,
        h_limit: h_limit_bound(q, n_s)?,
        hall_wiseman: hall_wiseman_bound(max_density, n_s)?,
        lossy_sql,
        escher,
        capacity,
        capacity_lossy,
        chi,
        iti_chi,
        mutual_information: None,
        iti_mutual_information: None,
        mse_sim: None,
        mse_sim_doubled: None,
        sim_converged: None,
        monte_carlo: None,
        exact_distortion: None,
    };

    if let Some(grid) = options.simulate {
        let est = bayesian_mmse(probe, eta, prior, grid)?;
        let info = measurement_mutual_information(probe, eta, prior, grid)?;
        report.mutual_information = Some(info);
        report.iti_mutual_information = Some(iti_bound(q, info.max(0.0))?);
        report.mse_sim = Some(est.mse);
        report.mse_sim_doubled = Some(est.mse_doubled);
        report.sim_converged = Some(est.converged);
        if let Some((samples, seed)) = options.monte_carlo {
            report.monte_carlo = Some(monte_carlo_mse(probe, eta, prior, &est.estimator, samples, seed)?);
        }
    }

    if let Some(cells) = options.rd_grid {
        let curve = rd_curve(prior, cells, &default_slopes())?;
        report.exact_distortion = curve.distortion_at_rate(capacity);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn iti_examples() {
        assert_abs_diff_eq!(iti_bound(2.0, 0.0).unwrap(), 2.0, epsilon = 1e-15);
        let c1 = unrestricted_capacity(1.0).unwrap();
        assert_abs_diff_eq!(iti_bound(1.0, c1).unwrap(), 1.0 / 16.0, epsilon = 1e-15);
        for n in [0.5, 2.0, 10.0] {
            let c = unrestricted_capacity(n).unwrap();
            let chain = (1.0 + 1.0 / n).powf(-2.0 * n) / (n + 1.0).powi(2);
            assert_abs_diff_eq!(iti_bound(1.0, c).unwrap(), chain, epsilon = 1e-14);
        }
        assert!(iti_bound(1.0, 2.0).unwrap() < iti_bound(1.0, 1.0).unwrap());
        assert!(iti_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn h_limit_examples() {
        let q = TWO_PI / E;
        assert_abs_diff_eq!(h_limit_bound(q, 0.0).unwrap(), TWO_PI / E.powi(3), epsilon = 1e-15);
        assert_abs_diff_eq!(h_limit_bound(q, 0.0).unwrap(), 0.3128214, epsilon = 1e-7);
        let ratio = h_limit_bound(q, 9.0).unwrap() / h_limit_bound(q, 0.0).unwrap();
        assert_abs_diff_eq!(ratio, 0.01, epsilon = 1e-15);
        for n in [0.1, 1.0, 7.0, 100.0] {
            let iti = iti_bound(q, unrestricted_capacity(n).unwrap()).unwrap();
            assert!(h_limit_bound(q, n).unwrap() <= iti);
        }
    }

    #[test]
    fn hall_wiseman_examples() {
        assert_abs_diff_eq!(
            hall_wiseman_bound(1.0 / TWO_PI, 0.0).unwrap(),
            TWO_PI / E.powi(3),
            epsilon = 1e-15
        );
        assert!(hall_wiseman_bound(1e8, 1.0).unwrap() < 1e-16);
        assert!(hall_wiseman_bound(0.1, 1.0).is_err());
        for l in [PI / 2.0, PI, TWO_PI] {
            let q = l * l / (TWO_PI * E);
            for n in [0.0, 1.0, 10.0] {
                let hw = hall_wiseman_bound(1.0 / l, n).unwrap();
                assert_abs_diff_eq!(hw, h_limit_bound(q, n).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lossy_sql_examples() {
        let q = TWO_PI / E;
        assert_abs_diff_eq!(lossy_sql_bound(q, 5.0, 0.0).unwrap(), 12.0 / (E * E), epsilon = 1e-14);
        assert!(lossy_sql_bound(q, 5.0, 0.0).unwrap() < PI * PI / 3.0);
        let expected = q * 0.25 / (TWO_PI * E * (2.5 + 1.0 / 12.0));
        assert_abs_diff_eq!(lossy_sql_bound(q, 10.0, 0.5).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(lossy_sql_bound(q, 10.0, 0.5).unwrap(), 0.013097, epsilon = 1e-6);
        for (n, eta) in [(1.0, 0.3), (10.0, 0.5), (40.0, 0.9)] {
            let via_capacity = iti_bound(q, capacity_upper_bound_lossy(n, eta).unwrap()).unwrap();
            assert_abs_diff_eq!(lossy_sql_bound(q, n, eta).unwrap(), via_capacity, epsilon = 1e-12);
        }
        assert!(lossy_sql_bound(q, 1.0, 1.0).is_err());
    }

    #[test]
    fn escher_examples() {
        assert_abs_diff_eq!(escher_bound(3.0, 2.0, 1.0).unwrap(), 0.125, epsilon = 1e-15);
        for (n, eta) in [(1.0, 0.5), (4.0, 0.9)] {
            assert_abs_diff_eq!(escher_bound(n, n, eta).unwrap(), 1.0 / (4.0 * eta * n), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(escher_bound(10.0, 10.0, 0.5).unwrap(), 0.05, epsilon = 1e-15);
        assert!(escher_bound(0.0, 1.0, 0.5).is_err());
        assert!(escher_bound(1.0, 0.0, 0.5).is_err());
        assert!(escher_bound(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn report_partitions_lossless_and_lossy() {
        let prior = PhasePrior::full_circle();
        let probe = ProbeSpec::coherent(1.0).unwrap();
        let lossless = build_report(&prior, &probe, 1.0, &ReportOptions::default()).unwrap();
        assert!(lossless.lossy_sql.is_none() && lossless.capacity_lossy.is_none());
        assert_abs_diff_eq!(lossless.hall_wiseman, lossless.h_limit, epsilon = 1e-12);
        let json = serde_json::to_string(&lossless).unwrap();
        assert!(!json.contains("lossy_sql"));

        let lossy = build_report(&prior, &probe, 0.5, &ReportOptions::default()).unwrap();
        assert!(lossy.lossy_sql.is_some() && lossy.capacity_lossy.is_some());
    }

    #[test]
    fn report_with_simulation_respects_rate_distortion_converse() {
        let prior = PhasePrior::full_circle();
        let probe = ProbeSpec::flat_superposition(3).unwrap();
        let options = ReportOptions {
            simulate: Some(SimGrid::default()),
            ..ReportOptions::default()
        };
        let r = build_report(&prior, &probe, 1.0, &options).unwrap();
        let mse = r.mse_sim.unwrap();
        assert!(mse + 1e-9 >= r.iti_mutual_information.unwrap());
        assert!(r.iti_mutual_information.unwrap() + 1e-9 >= r.iti_chi.unwrap());
        assert!(r.iti_chi.unwrap() + 1e-9 >= r.iti_bound);
        assert!(r.iti_bound + 1e-9 >= r.h_limit);
    }
}
