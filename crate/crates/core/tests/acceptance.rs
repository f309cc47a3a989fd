//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use phasebound::bounds::{h_limit_bound, hall_wiseman_bound, lossy_sql_bound};
use phasebound::capacity::{
    capacity_upper_bound_lossy, entropy_gain, joint_loss_distribution, loss_distribution, unrestricted_capacity,
};
use phasebound::estimation::{bayesian_mmse, measurement_mutual_information};
use phasebound::fock::{average_state, chi_decompose, holevo_quantity, phase_randomize, von_neumann_entropy};
use phasebound::rate_distortion::{blahut_arimoto_point, rd_curve, shannon_lb_rate, squared_error_matrix};
use phasebound::{IdlerMode, PhasePrior, ProbeSpec, SimGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const E: f64 = std::f64::consts::E;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|x| **x > 0.0).map(|x| -x * x.ln()).sum()
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    // mix dense and sparse supports so extremal inputs are exercised too
    let keep = rng.random_range(1..=len);
    let mut w: Vec<f64> = (0..len).map(|_| rng.random::<f64>().powi(3)).collect();
    for _ in keep..len {
        let i = rng.random_range(0..len);
        w[i] = 0.0;
    }
    if w.iter().all(|x| *x == 0.0) {
        w[rng.random_range(0..len)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn plus_state() -> ProbeSpec {
    let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
    ProbeSpec::from_amplitudes(vec![a, a], IdlerMode::None).unwrap()
}

fn criterion_1() -> Outcome {
    let c1 = unrestricted_capacity(1.0).unwrap();
    let c10 = unrestricted_capacity(10.0).unwrap();
    let e1 = (c1 - 2.0 * LN_2).abs();
    let e10 = (c10 - (11.0 * 11f64.ln() - 10.0 * 10f64.ln())).abs();
    Outcome::new(
        e1 <= 1e-12 && e10 <= 1e-12,
        format!("C(1) err {e1:.1e}, C(10) err {e10:.1e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for l in [PI / 2.0, PI, 2.0 * PI] {
        let prior = PhasePrior::uniform(PI, l).unwrap();
        for n in [0.0, 1.0, 10.0] {
            let hw = hall_wiseman_bound(1.0 / l, n).unwrap();
            let hl = h_limit_bound(l * l / (2.0 * PI * E), n).unwrap();
            let hw_prior = hall_wiseman_bound(prior.max_density(), n).unwrap();
            let hl_prior = h_limit_bound(prior.entropy_power().unwrap(), n).unwrap();
            worst = worst.max((hw - hl).abs()).max((hw_prior - hl_prior).abs());
        }
    }
    Outcome::new(worst <= 1e-12, format!("max |HW − H| = {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let prior = PhasePrior::full_circle();
    let expected = 2.0 * PI / E.powi(3);
    let hl = h_limit_bound(prior.entropy_power().unwrap(), 0.0).unwrap();
    let hw = hall_wiseman_bound(prior.max_density(), 0.0).unwrap();
    let err = (hl - expected).abs().max((hw - expected).abs());
    Outcome::new(
        err <= 1e-9,
        format!("h_limit = {hl:.9}, hall_wiseman = {hw:.9}, 2π/e³ = {expected:.9}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let prior = PhasePrior::full_circle();
    let mut worst_chain = f64::NEG_INFINITY;
    let mut worst_entropy = 0.0f64;
    for _ in 0..20 {
        let p = random_distribution(&mut rng, 31);
        let probe = ProbeSpec::nds_from_distribution(&p).unwrap();
        let n_s = probe.mean_photons();
        for eta in [0.3, 0.5, 0.8] {
            let decomp = chi_decompose(&probe, eta).unwrap();
            let chi = holevo_quantity(&decomp, &prior, 256).unwrap();
            let s_out = von_neumann_entropy(&decomp.output_state()).unwrap();
            let averaged = average_state(&decomp, &prior, 256).unwrap();
            let s_rand = von_neumann_entropy(&phase_randomize(&averaged)).unwrap();
            let h_l = shannon(&loss_distribution(&p, eta).unwrap());
            let joint: Vec<f64> = joint_loss_distribution(&p, eta)
                .unwrap()
                .into_iter()
                .flatten()
                .collect();
            let h_joint = shannon(&joint);
            let upper = capacity_upper_bound_lossy(n_s, eta).unwrap();
            let middle = s_rand - s_out;
            worst_chain = worst_chain.max(chi - middle).max(middle - upper);
            worst_entropy = worst_entropy.max((s_out - h_l).abs()).max((s_rand - h_joint).abs());
        }
    }
    Outcome::new(
        worst_chain <= 1e-8 && worst_entropy <= 1e-8,
        format!("max chain violation {worst_chain:.2e}, max entropy mismatch {worst_entropy:.1e}"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let p = random_distribution(&mut rng, 41);
        for eta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let gain = entropy_gain(&p, eta).unwrap();
            worst = worst.min(gain - (1.0 - eta).ln());
        }
    }
    Outcome::new(worst >= -1e-9, format!("min gain − ln(1−η) = {worst:.3e}"))
}

fn criterion_6() -> Outcome {
    let prior = PhasePrior::full_circle();
    let q = prior.entropy_power().unwrap();
    let grid = SimGrid::default();
    let probes = [
        ("coherent α=1", ProbeSpec::coherent(1.0).unwrap()),
        ("flat d=4", ProbeSpec::flat_superposition(4).unwrap()),
        ("(|0⟩+|1⟩)/√2", plus_state()),
    ];
    let mut passed = true;
    let mut lines = Vec::new();
    for (name, probe) in &probes {
        let n_s = probe.mean_photons();
        for eta in [1.0, 0.5] {
            let est = bayesian_mmse(probe, eta, &prior, grid).unwrap();
            let info = measurement_mutual_information(probe, eta, &prior, grid).unwrap();
            let bound = if eta == 1.0 {
                h_limit_bound(q, n_s).unwrap()
            } else {
                lossy_sql_bound(q, n_s, eta).unwrap()
            };
            let info_bound = q * (-2.0 * info).exp();
            let ok = est.mse >= bound && est.mse >= info_bound - 1e-6 && est.grid_change() < 1e-5;
            passed &= ok;
            lines.push(format!(
                "{name} η={eta}: mse {:.6} ≥ {bound:.6}, ≥ Qe^(−2I) {info_bound:.6}, Δgrid {:.1e}",
                est.mse,
                est.grid_change()
            ));
        }
    }
    Outcome::new(passed, lines.join("; "))
}

fn criterion_7() -> Outcome {
    let d = squared_error_matrix(&[0.0, 1.0], &[0.0, 1.0]);
    let point = blahut_arimoto_point(&[0.5, 0.5], &d, 9f64.ln()).unwrap();
    let h_b = -0.1 * 0.1f64.ln() - 0.9 * 0.9f64.ln();
    let binary_err = (point.rate - (LN_2 - h_b)).abs() + (point.distortion - 0.1).abs();

    let prior = PhasePrior::full_circle();
    let q = prior.entropy_power().unwrap();
    let targets = [0.05, 0.1, 0.5, 1.0];
    let slopes: Vec<f64> = targets.iter().map(|d| 0.5 / d).collect();
    let curve = rd_curve(&prior, 512, &slopes).unwrap();
    let mut worst = f64::INFINITY;
    for d in targets {
        let margin = curve.rate_lower_bound(d) - (shannon_lb_rate(q, d).unwrap() - 0.05);
        worst = worst.min(margin);
    }
    Outcome::new(
        binary_err <= 1e-6 && worst >= 0.0,
        format!("binary rate err {binary_err:.1e}; K=512 min margin over SLB − 0.05: {worst:.4}"),
    )
}

fn criterion_8() -> Outcome {
    let prior = PhasePrior::full_circle();
    let var = prior.variance();
    let grid = SimGrid::default();
    let vacuum = bayesian_mmse(&ProbeSpec::number(0).unwrap(), 1.0, &prior, grid)
        .unwrap()
        .mse;
    let dark = bayesian_mmse(&ProbeSpec::coherent(1.0).unwrap(), 0.0, &prior, grid)
        .unwrap()
        .mse;
    let mse_err = (vacuum - var).abs().max((dark - var).abs());

    let point = PhasePrior::uniform(1.0, 1e-10).unwrap();
    let mut chi_max = 0.0f64;
    for probe in [
        ProbeSpec::coherent(1.0).unwrap(),
        ProbeSpec::flat_superposition(4).unwrap(),
        ProbeSpec::flat_superposition(4).unwrap().with_idler(IdlerMode::Nds),
        plus_state(),
    ] {
        for eta in [1.0, 0.5] {
            let decomp = chi_decompose(&probe, eta).unwrap();
            chi_max = chi_max.max(holevo_quantity(&decomp, &point, 256).unwrap().abs());
        }
    }
    Outcome::new(
        mse_err <= 1e-8 && chi_max <= 1e-9,
        format!("|mse − var| {mse_err:.1e}, max |χ| at point mass {chi_max:.1e}"),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_phasebound"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn read_dir_sorted(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let bytes = std::fs::read(&p).unwrap();
            (PathBuf::from(p.file_name().unwrap()), bytes)
        })
        .collect();
    files.sort();
    files
}

fn criterion_9() -> Outcome {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/verify_default.json");
    let tmp = tempfile::tempdir().unwrap();
    let mut passed = true;
    let mut notes = Vec::new();
    for command in ["verify", "bounds"] {
        let a = tmp.path().join(format!("{command}_a"));
        let b = tmp.path().join(format!("{command}_b"));
        let codes = [
            run_cli(&a, &[command, "--config", config]),
            run_cli(&b, &[command, "--config", config]),
        ];
        let same = read_dir_sorted(&a) == read_dir_sorted(&b) && !read_dir_sorted(&a).is_empty();
        passed &= same && codes == [0, 0];
        notes.push(format!("{command}: exit {codes:?}, identical {same}"));
    }
    Outcome::new(passed, notes.join("; "))
}

fn scaling() -> Outcome {
    let q = PhasePrior::full_circle().entropy_power().unwrap();
    let ns = [1.0, 10.0, 100.0, 1000.0];
    let scaled: Vec<f64> = ns
        .iter()
        .map(|n| h_limit_bound(q, *n).unwrap() * (n + 1.0) * (n + 1.0))
        .collect();
    let spread = scaled.iter().map(|s| (s - scaled[0]).abs()).fold(0.0, f64::max) / scaled[0];
    let eta = 0.5;
    let limit = q * (1.0 - eta) / (2.0 * PI * E * eta);
    let gaps: Vec<f64> = ns
        .iter()
        .map(|n| (lossy_sql_bound(q, *n, eta).unwrap() * n - limit).abs())
        .collect();
    let converging = gaps.windows(2).all(|w| w[1] <= w[0]);
    Outcome::new(
        spread <= 1e-12 && converging,
        format!("h_limit·(N+1)² relative spread {spread:.1e}; |lossy_sql·N − limit| = {gaps:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 capacity formula", criterion_1),
        ("2 uniform-prior coincidence", criterion_2),
        ("3 H-limit anchor", criterion_3),
        ("4 lossy Holevo chain", criterion_4),
        ("5 minimum entropy gain", criterion_5),
        ("6 bounds vs simulation", criterion_6),
        ("7 rate-distortion oracle", criterion_7),
        ("8 degenerate cases", criterion_8),
        ("9 determinism", criterion_9),
        ("scaling invariants", scaling),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = check();
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {name} ({:.1}s): {}",
            t.elapsed().as_secs_f64(),
            outcome.detail
        );
        failures += usize::from(!outcome.passed);
    }
    println!(
        "acceptance: {failures} failed, {:.1}s total",
        start.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
