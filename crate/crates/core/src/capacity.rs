//! Capacity formulas and entropy bounds for phase modulation with and without loss.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid_input, Result};
use crate::numerics::{binomial, ln_binomial, shannon_entropy};
use crate::TWO_PI;

/// Above this photon number the binomial kernel is evaluated in log space.
const LOG_SPACE_THRESHOLD: usize = 60;

const NORMALIZATION_TOL: f64 = 1e-10;

/// A pure-loss beam splitter of transmittance `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    eta: f64,
}

impl LossChannel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(domain(format!("transmittance must lie in [0, 1], got {eta}")));
        }
        Ok(LossChannel { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_lossless(&self) -> bool {
        self.eta == 1.0
    }

    /// Probability that `lost` of `n` photons are lost.
    pub fn kernel(&self, n: usize, lost: usize) -> Result<f64> {
        binomial_loss_kernel(n, lost, self.eta)
    }
}

/// Energy-constrained capacity of the lossless single-mode channel,
/// `(N+1) ln(N+1) − N ln N`.
pub fn unrestricted_capacity(mean_photons: f64) -> Result<f64> {
    if !(mean_photons >= 0.0) {
        return Err(domain(format!("mean photon number must be ≥ 0, got {mean_photons}")));
    }
    if mean_photons == 0.0 {
        return Ok(0.0);
    }
    // same value without the cancellation between the two large terms
    Ok(mean_photons.ln_1p() + mean_photons * mean_photons.recip().ln_1p())
}

/// `B_η(n, l) = C(n, l) η^{n−l} (1−η)^l`.
pub fn binomial_loss_kernel(n: usize, lost: usize, eta: f64) -> Result<f64> {
    if lost > n {
        return Err(domain(format!("cannot lose {lost} of {n} photons")));
    }
    let kept = n - lost;
    // exact zeros at the edges of the η range
    if (eta == 0.0 && kept > 0) || (eta == 1.0 && lost > 0) {
        return Ok(0.0);
    }
    if n <= LOG_SPACE_THRESHOLD {
        return Ok(binomial(n, lost) * eta.powi(kept as i32) * (1.0 - eta).powi(lost as i32));
    }
    let mut ln = ln_binomial(n, lost);
    if kept > 0 {
        ln += kept as f64 * eta.ln();
    }
    if lost > 0 {
        ln += lost as f64 * (1.0 - eta).ln();
    }
    Ok(ln.exp())
}

fn check_normalized(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(invalid_input(
            "photon-number distribution must be nonempty and nonnegative",
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(invalid_input(format!("photon-number distribution sums to {total}")));
    }
    Ok(())
}

/// Distribution of the number of lost photons, `q_l = Σ_{n≥l} p_n B_η(n, l)`.
///
/// The output has the same cutoff as the input.
pub fn loss_distribution(p: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_normalized(p)?;
    LossChannel::new(eta)?;
    let cutoff = p.len() - 1;
    let mut q = vec![0.0; cutoff + 1];
    for (n, &pn) in p.iter().enumerate() {
        if pn == 0.0 {
            continue;
        }
        for (l, ql) in q.iter_mut().enumerate().take(n + 1) {
            *ql += pn * binomial_loss_kernel(n, l, eta)?;
        }
    }
    Ok(q)
}

/// Joint distribution `P(N = n, L = l) = p_n B_η(n, l)`, indexed `[n][l]`.
pub fn joint_loss_distribution(p: &[f64], eta: f64) -> Result<Vec<Vec<f64>>> {
    check_normalized(p)?;
    LossChannel::new(eta)?;
    p.iter()
        .enumerate()
        .map(|(n, &pn)| {
            (0..=n)
                .map(|l| Ok(pn * binomial_loss_kernel(n, l, eta)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

/// Upper bound on the Shannon entropy of an integer-valued variable of the
/// given variance, `½ ln[2πe (Var + 1/12)]`.
pub fn entropy_variance_bound(variance: f64) -> f64 {
    0.5 * (TWO_PI * std::f64::consts::E * (variance + 1.0 / 12.0)).ln()
}

/// Entropy gain `H(L) − H(N)` of the pure-loss channel, viewed as mapping the
/// photon-number distribution `p` to the loss-count distribution.
pub fn entropy_gain(p: &[f64], eta: f64) -> Result<f64> {
    let q = loss_distribution(p, eta)?;
    Ok(shannon_entropy(&q) - shannon_entropy(p))
}

/// Upper bound on the phase-modulation capacity of the lossy channel for an
/// NDS probe of mean photon number `mean_photons`:
/// `½ ln[2πe (η(1−η)N + 1/12) / (1−η)²]`.
pub fn capacity_upper_bound_lossy(mean_photons: f64, eta: f64) -> Result<f64> {
    if !(mean_photons >= 0.0) {
        return Err(domain(format!("mean photon number must be ≥ 0, got {mean_photons}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(domain(format!("lossy capacity bound needs 0 < η < 1, got {eta}")));
    }
    let spread = eta * (1.0 - eta) * mean_photons + 1.0 / 12.0;
    Ok(0.5 * (TWO_PI * std::f64::consts::E * spread / (1.0 - eta).powi(2)).ln())
}
