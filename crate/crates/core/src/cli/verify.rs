//! Invariant checks over a configured grid.

use serde::Serialize;

use super::config::ScenarioConfig;
use super::{evaluate_grid, report_options, BoundProvider, PointResult, EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFY_FAILED};
use crate::capacity::entropy_gain;
use crate::error::Result;
use crate::prior::PhasePrior;
use crate::rate_distortion::{default_slopes, discretization_slack, rd_curve, shannon_lb_rate};
use crate::TWO_PI;
use std::f64::consts::E;

/// Slack on the bound ordering chains.
pub const CHAIN_SLACK: f64 = 1e-9;
/// Slack on the rate-distortion converse for the realized channel.
pub const CONVERSE_SLACK: f64 = 1e-6;
/// Largest grid-doubling change accepted for the MMSE.
pub const GRID_CHANGE_TOL: f64 = 1e-5;

/// One inequality and how far inside (positive) or outside (negative) it held.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub inequality: String,
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutcome {
    pub checks: Vec<Check>,
    /// Grid points that failed to evaluate.
    pub errors: Vec<String>,
}

impl VerifyOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            EXIT_NUMERICAL
        } else if self.failures().next().is_some() {
            EXIT_VERIFY_FAILED
        } else {
            EXIT_OK
        }
    }

    /// One line per check, then a summary.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            s.push_str(&format!(
                "{tag} {}: {} (margin {:.3e})\n",
                c.name, c.inequality, c.margin
            ));
        }
        for e in &self.errors {
            s.push_str(&format!("ERROR {e}\n"));
        }
        let failed = self.failures().count();
        s.push_str(&format!(
            "{} checks, {} failed, {} errors\n",
            self.checks.len(),
            failed,
            self.errors.len()
        ));
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checks serialize");
        s.push('\n');
        s
    }
}

struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    /// Records `lhs ≥ rhs − slack`.
    fn at_least(&mut self, name: String, lhs: (&str, f64), rhs: (&str, f64), slack: f64) {
        let margin = lhs.1 - rhs.1 + slack;
        self.checks.push(Check {
            name,
            inequality: format!("{} >= {} - {slack:e}", lhs.0, rhs.0),
            margin,
            passed: margin >= 0.0 && margin.is_finite(),
        });
    }
}

/// Runs every invariant on the grid of `config` using `provider` for the bounds.
///
/// Simulation is switched on with the default grid when the config has none.
pub fn verify_with(config: &ScenarioConfig, provider: &dyn BoundProvider) -> Result<VerifyOutcome> {
    let probes = config.validate()?;
    let mut options = report_options(config);
    options.simulate = Some(config.simulate.unwrap_or_default());
    let points = evaluate_grid(config, &probes, &options, provider)?;
    let mut rec = Recorder { checks: Vec::new() };
    let errors = points
        .iter()
        .filter_map(|p| p.error.as_ref().map(|e| format!("{} eta={}: {e}", p.probe, p.eta)))
        .collect();

    for p in &points {
        point_checks(&mut rec, p, &config.prior);
    }
    sweep_checks(&mut rec, &points);
    for named in &probes {
        let dist = named.probe.probabilities();
        for &eta in config.eta.iter().filter(|&&e| e < 1.0) {
            let gain = entropy_gain(&dist, eta)?;
            rec.at_least(
                format!("entropy_gain[{}, eta={eta}]", named.label),
                ("H(L) - H(N)", gain),
                ("ln(1 - eta)", (1.0 - eta).ln()),
                CHAIN_SLACK,
            );
        }
    }
    if let Some(section) = &config.rd_curve {
        let slopes = section.slopes.clone().unwrap_or_else(default_slopes);
        let curve = rd_curve(&config.prior, section.grid, &slopes)?;
        let ok = curve.is_monotone_convex(CHAIN_SLACK);
        rec.checks.push(Check {
            name: format!("rd_curve_shape[K={}]", section.grid),
            inequality: "R non-increasing and convex in D".into(),
            margin: if ok { 0.0 } else { -1.0 },
            passed: ok,
        });
        let slack = discretization_slack(section.grid);
        for point in &curve.points {
            let slb = shannon_lb_rate(curve.source_entropy_power, point.distortion)?;
            rec.at_least(
                format!("rd_shannon[K={}, D={:.6}]", section.grid, point.distortion),
                ("R_BA", point.rate),
                ("max(0, ln(Q/D)/2)", slb),
                slack,
            );
        }
    }
    Ok(VerifyOutcome {
        checks: rec.checks,
        errors,
    })
}

fn point_checks(rec: &mut Recorder, p: &PointResult, prior: &PhasePrior) {
    let Some(r) = &p.report else { return };
    let tag = format!("{}, eta={}", p.probe, p.eta);
    let bayesian = [
        ("iti_C", Some(r.iti_bound)),
        ("h_limit", Some(r.h_limit)),
        ("hall_wiseman", Some(r.hall_wiseman)),
        ("lossy_sql", r.lossy_sql),
        ("iti_chi", r.iti_chi),
        ("iti_I", r.iti_mutual_information),
    ];
    for (name, value) in bayesian.iter().chain([("escher", r.escher)].iter()) {
        if let Some(v) = value {
            rec.at_least(format!("nonnegative[{name}; {tag}]"), (name, *v), ("0", 0.0), 0.0);
        }
    }
    for (name, value) in bayesian {
        if let Some(v) = value {
            rec.at_least(
                format!("below_prior_variance[{name}; {tag}]"),
                ("prior_variance", r.prior_variance),
                (name, v),
                CHAIN_SLACK,
            );
        }
    }
    if matches!(prior, PhasePrior::Uniform { .. }) {
        let gap = (r.hall_wiseman - r.h_limit).abs();
        rec.checks.push(Check {
            name: format!("uniform_coincidence[{tag}]"),
            inequality: "|hall_wiseman - h_limit| <= 1e-12".into(),
            margin: 1e-12 - gap,
            passed: gap <= 1e-12,
        });
    }
    if let Some(chi) = r.chi {
        rec.at_least(
            format!("holevo_below_capacity[{tag}]"),
            ("C", r.capacity),
            ("chi", chi),
            1e-8,
        );
        if let Some(c_lossy) = r.capacity_lossy {
            rec.at_least(
                format!("holevo_below_lossy_capacity[{tag}]"),
                ("C_ph_upper", c_lossy),
                ("chi", chi),
                1e-8,
            );
        }
    }
    if let Some(i) = r.mutual_information {
        if let Some(chi) = r.chi {
            rec.at_least(format!("holevo_bound[{tag}]"), ("chi", chi), ("I", i), CONVERSE_SLACK);
        }
    }
    let chain: Vec<(&str, Option<f64>)> = if r.is_lossless() {
        vec![
            ("mse_sim", r.mse_sim),
            ("iti_I", r.iti_mutual_information),
            ("iti_chi", r.iti_chi),
            ("iti_C", Some(r.iti_bound)),
            ("h_limit", Some(r.h_limit)),
        ]
    } else {
        vec![
            ("mse_sim", r.mse_sim),
            ("iti_chi", r.iti_chi),
            ("lossy_sql", r.lossy_sql),
        ]
    };
    let present: Vec<(&str, f64)> = chain.into_iter().filter_map(|(n, v)| v.map(|v| (n, v))).collect();
    for w in present.windows(2) {
        rec.at_least(
            format!("chain[{} >= {}; {tag}]", w[0].0, w[1].0),
            w[0],
            w[1],
            CHAIN_SLACK,
        );
    }
    if let Some(mse) = r.mse_sim {
        let converse = r.entropy_power * (-2.0 * r.mutual_information.unwrap_or(0.0)).exp();
        rec.at_least(
            format!("rd_converse[{tag}]"),
            ("mse_sim", mse),
            ("Q exp(-2 I)", converse),
            CONVERSE_SLACK,
        );
        rec.at_least(
            format!("mse_below_prior_variance[{tag}]"),
            ("prior_variance", r.prior_variance),
            ("mse_sim", mse),
            1e-8,
        );
        if let Some(doubled) = r.mse_sim_doubled {
            let change = (mse - doubled).abs();
            rec.checks.push(Check {
                name: format!("grid_convergence[{tag}]"),
                inequality: format!("|mse(G) - mse(2G)| < {GRID_CHANGE_TOL:e}"),
                margin: GRID_CHANGE_TOL - change,
                passed: change < GRID_CHANGE_TOL,
            });
        }
        if let Some(mc) = r.monte_carlo {
            let gap = (mc.mean - mse).abs();
            rec.checks.push(Check {
                name: format!("monte_carlo[{tag}]"),
                inequality: "|mc_mean - mse_sim| <= 3 stderr".into(),
                margin: 3.0 * mc.stderr - gap,
                passed: gap <= 3.0 * mc.stderr,
            });
        }
    }
}

fn sweep_checks(rec: &mut Recorder, points: &[PointResult]) {
    let reports: Vec<(&str, &crate::bounds::BoundReport)> = points
        .iter()
        .filter_map(|p| p.report.as_ref().map(|r| (p.probe.as_str(), r)))
        .collect();

    // MMSE non-increasing in η for each probe
    let mut labels: Vec<&str> = reports.iter().map(|(l, _)| *l).collect();
    labels.dedup();
    for label in &labels {
        let mut by_eta: Vec<(f64, f64)> = reports
            .iter()
            .filter(|(l, _)| l == label)
            .filter_map(|(_, r)| r.mse_sim.map(|m| (r.eta, m)))
            .collect();
        by_eta.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in by_eta.windows(2) {
            if w[0].0 < w[1].0 {
                rec.at_least(
                    format!("mse_monotone_in_eta[{label}, eta {} -> {}]", w[0].0, w[1].0),
                    ("mse(lower eta)", w[0].1),
                    ("mse(higher eta)", w[1].1),
                    CHAIN_SLACK,
                );
            }
        }
    }

    // h_limit (N+1)² is one constant per prior
    if let Some((_, first)) = reports.first() {
        let reference = first.h_limit * (first.n_s + 1.0).powi(2);
        for (label, r) in &reports {
            let scaled = r.h_limit * (r.n_s + 1.0).powi(2);
            let rel = (scaled - reference).abs() / reference;
            rec.checks.push(Check {
                name: format!("h_limit_scaling[{label}, eta={}]", r.eta),
                inequality: "h_limit (N+1)^2 constant within 1e-12 relative".into(),
                margin: 1e-12 - rel,
                passed: rel <= 1e-12,
            });
        }
    }

    // lossy_sql·N approaches Q(1−η)/(2πeη) as N grows
    let mut etas: Vec<f64> = reports
        .iter()
        .map(|(_, r)| r.eta)
        .filter(|e| *e > 0.0 && *e < 1.0)
        .collect();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    for eta in etas {
        let mut gaps: Vec<(f64, f64)> = reports
            .iter()
            .filter(|(_, r)| r.eta == eta && r.n_s > 0.0)
            .filter_map(|(_, r)| {
                let limit = r.entropy_power * (1.0 - eta) / (TWO_PI * E * eta);
                r.lossy_sql.map(|b| (r.n_s, (b * r.n_s - limit).abs()))
            })
            .collect();
        gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in gaps.windows(2) {
            if w[0].0 < w[1].0 {
                rec.at_least(
                    format!("lossy_sql_scaling[eta={eta}, N {} -> {}]", w[0].0, w[1].0),
                    ("gap(smaller N)", w[0].1),
                    ("gap(larger N)", w[1].1),
                    CHAIN_SLACK,
                );
            }
        }
    }
}
