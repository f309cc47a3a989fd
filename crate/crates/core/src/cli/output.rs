//! CSV and JSON renderers. Floats use Rust's shortest round-trip formatting.

use serde::Serialize;

use super::config::ScenarioConfig;
use super::PointResult;
use crate::rate_distortion::RdCurve;

pub const BOUNDS_HEADER: &str = "N_S,eta,Q,h_limit,hall_wiseman,lossy_sql,escher,iti_C,chi,I_meas,mse_sim";
pub const CAPACITY_HEADER: &str = "N_S,eta,C_unrestricted,C_ph_upper";
pub const RD_HEADER: &str = "D,R,slope,converged";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn bounds_csv(points: &[PointResult]) -> String {
    let mut s = String::from(BOUNDS_HEADER);
    s.push('\n');
    for p in points {
        let fields: Vec<String> = match &p.report {
            Some(r) => vec![
                r.n_s.to_string(),
                r.eta.to_string(),
                r.entropy_power.to_string(),
                r.h_limit.to_string(),
                r.hall_wiseman.to_string(),
                opt(r.lossy_sql),
                opt(r.escher),
                r.iti_bound.to_string(),
                opt(r.chi),
                opt(r.mutual_information),
                opt(r.mse_sim),
            ],
            None => {
                let mut f = vec![p.n_s.to_string(), p.eta.to_string()];
                f.resize(11, String::new());
                f
            }
        };
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct BoundsDocument<'a> {
    config: &'a ScenarioConfig,
    points: &'a [PointResult],
}

pub fn bounds_json(config: &ScenarioConfig, points: &[PointResult]) -> String {
    let mut s = serde_json::to_string_pretty(&BoundsDocument { config, points }).expect("reports serialize");
    s.push('\n');
    s
}

/// `(N_S, η, C, C̄_ph)`; the last is absent at η ∈ {0, 1}.
pub type CapacityRow = (f64, f64, f64, Option<f64>);

pub fn capacity_csv(rows: &[CapacityRow]) -> String {
    let mut s = String::from(CAPACITY_HEADER);
    s.push('\n');
    for (n, eta, c, lossy) in rows {
        s.push_str(&format!("{n},{eta},{c},{}\n", opt(*lossy)));
    }
    s
}

pub fn rd_csv(curve: &RdCurve) -> String {
    let mut s = String::from(RD_HEADER);
    s.push('\n');
    for p in &curve.points {
        s.push_str(&format!("{},{},{},{}\n", p.distortion, p.rate, p.slope, p.converged));
    }
    s
}
