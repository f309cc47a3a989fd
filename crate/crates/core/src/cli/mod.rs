//! Command-line driver: configuration, parameter sweeps and report files.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input or
//! configuration, 3 numerical failure.

pub mod config;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{build_report, BoundReport, ReportOptions};
use crate::capacity::{capacity_upper_bound_lossy, unrestricted_capacity};
use crate::error::{invalid_input, Error, Result};
use crate::estimation::{bayesian_mmse, measurement_mutual_information, monte_carlo_mse, SimGrid};
use crate::fock::{AmplitudeValue, ProbeFamily, ProbeSpec};
use crate::prior::PhasePrior;
use crate::rate_distortion::{default_slopes, rd_curve, RdCurve};
use config::{ensure_writable, NamedProbe, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidState(_) | Error::NumericalFailure(_) => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "phasebound",
    version,
    about = "Bounds on the mean-squared error of optical phase estimation"
)]
pub struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "PHASEBOUND_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound report over the configured probe × η grid (CSV + JSON).
    Bounds(Common),
    /// Unrestricted and lossy phase-modulation capacities.
    Capacity(CapacityArgs),
    /// Blahut–Arimoto rate-distortion curve of the prior.
    RdCurve(RdArgs),
    /// Bayesian MMSE and mutual information of a canonical phase measurement.
    Simulate(SimulateArgs),
    /// Runs every invariant check on the configured grid.
    Verify(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the config's output.dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Mean photon numbers, used without a config.
    #[arg(long = "n-s", value_delimiter = ',')]
    pub n_s: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RdArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Prior, e.g. `uniform`, `uniform:3.14`, `wrapped_gaussian:3:0.5` or JSON.
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Probe, e.g. `coherent:1`, `flat_superposition:4`, `explicit:0.6,0.8` or JSON.
    #[arg(long)]
    pub probe: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long = "grid-phi")]
    pub grid_phi: Option<usize>,
    #[arg(long = "grid-theta")]
    pub grid_theta: Option<usize>,
    #[arg(long = "mc-samples")]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    let mut stdout = std::io::stdout();
    let mut stderr = std::io::stderr();
    run(cli, &mut stdout, &mut stderr)
}

/// Runs a parsed command, writing console output to `out` and diagnostics to `err`.
pub fn run(cli: Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32 {
    let threads = match cli.threads {
        Some(0) => {
            let _ = writeln!(err, "error: --threads must be at least 1");
            return EXIT_VALIDATION;
        }
        Some(n) => n,
        None => 0,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return EXIT_NUMERICAL;
        }
    };
    pool.install(|| dispatch(cli.command, out, err))
}

fn dispatch(command: Command, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32 {
    let result = match command {
        Command::Bounds(args) => cmd_bounds(&args, err),
        Command::Capacity(args) => cmd_capacity(&args, out, err),
        Command::RdCurve(args) => cmd_rd_curve(&args, out, err),
        Command::Simulate(args) => cmd_simulate(&args, out, err),
        Command::Verify(args) => cmd_verify(&args, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load_with_overrides(args: &Common) -> Result<(ScenarioConfig, PathBuf)> {
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let dir = args.out.clone().unwrap_or_else(|| config.output.dir.clone());
    Ok((config, dir))
}

fn write_file(dir: &Path, name: &str, contents: &str, err: &mut (dyn Write + Send)) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| invalid_input(format!("cannot write {}: {e}", path.display())))?;
    let _ = writeln!(err, "wrote {}", path.display());
    Ok(())
}

/// Computes bound reports; swapped out by tests to inject faults.
pub trait BoundProvider: Sync {
    fn report(&self, prior: &PhasePrior, probe: &ProbeSpec, eta: f64, options: &ReportOptions) -> Result<BoundReport>;
}

/// The real bounds.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardBounds;

impl BoundProvider for StandardBounds {
    fn report(&self, prior: &PhasePrior, probe: &ProbeSpec, eta: f64, options: &ReportOptions) -> Result<BoundReport> {
        build_report(prior, probe, eta, options)
    }
}

/// Outcome at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub probe: String,
    pub n_s: f64,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub exit: i32,
}

/// Evaluates every (probe, η) point in config order.
pub fn evaluate_grid(
    config: &ScenarioConfig,
    probes: &[NamedProbe],
    options: &ReportOptions,
    provider: &dyn BoundProvider,
) -> Result<Vec<PointResult>> {
    let curve = match &config.rd_curve {
        Some(section) => Some(rd_curve(
            &config.prior,
            section.grid,
            section.slopes.as_deref().unwrap_or(&default_slopes()),
        )?),
        None => None,
    };
    let points: Vec<(usize, &NamedProbe, f64)> = probes
        .iter()
        .flat_map(|p| config.eta.iter().map(move |&e| (p, e)))
        .enumerate()
        .map(|(i, (p, e))| (i, p, e))
        .collect();
    Ok(points
        .par_iter()
        .map(|&(index, named, eta)| {
            let mut opts = options.clone();
            if let Some((samples, seed)) = opts.monte_carlo {
                opts.monte_carlo = Some((samples, seed.wrapping_add(index as u64)));
            }
            let outcome = provider.report(&config.prior, &named.probe, eta, &opts);
            let mut point = PointResult {
                probe: named.label.clone(),
                n_s: named.probe.mean_photons(),
                eta,
                report: None,
                error: None,
                exit: EXIT_OK,
            };
            match outcome {
                Ok(mut report) => {
                    report.probe = named.label.clone();
                    if let Some(curve) = &curve {
                        report.exact_distortion = curve.distortion_at_rate(report.capacity);
                    }
                    point.report = Some(report);
                }
                Err(e) => {
                    point.exit = exit_code(&e);
                    point.error = Some(e.to_string());
                }
            }
            point
        })
        .collect())
}

/// Report options implied by a configuration.
pub fn report_options(config: &ScenarioConfig) -> ReportOptions {
    ReportOptions {
        chi_grid: Some(config.chi_grid),
        simulate: config.simulate,
        monte_carlo: config.monte_carlo.map(|mc| (mc.samples, config.seed)),
        rd_grid: None,
    }
}

/// Result of [`run_scenario`]: exit code and the rendered files.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub exit: i32,
    pub csv: String,
    pub json: String,
    pub points: Vec<PointResult>,
}

/// Validates `config`, evaluates its grid and renders the CSV and JSON reports.
pub fn run_scenario_with(config: &ScenarioConfig, provider: &dyn BoundProvider) -> Result<ScenarioOutput> {
    let probes = config.validate()?;
    let points = evaluate_grid(config, &probes, &report_options(config), provider)?;
    let exit = points.iter().map(|p| p.exit).max().unwrap_or(EXIT_OK);
    Ok(ScenarioOutput {
        exit,
        csv: output::bounds_csv(&points),
        json: output::bounds_json(config, &points),
        points,
    })
}

/// Runs `config` and writes `<name>.csv` and `<name>.json` into `dir`.
///
/// Nothing is written when validation fails. Points that fail numerically are
/// written with empty values and an error message, and the exit code is 3.
pub fn run_scenario(config: &ScenarioConfig, dir: &Path, err: &mut (dyn Write + Send)) -> Result<i32> {
    config.validate()?;
    ensure_writable(dir)?;
    let result = run_scenario_with(config, &StandardBounds)?;
    write_file(dir, &format!("{}.csv", config.output.name), &result.csv, err)?;
    write_file(dir, &format!("{}.json", config.output.name), &result.json, err)?;
    for p in result.points.iter().filter(|p| p.error.is_some()) {
        let _ = writeln!(
            err,
            "point {} eta={} failed: {}",
            p.probe,
            p.eta,
            p.error.as_deref().unwrap_or("")
        );
    }
    Ok(result.exit)
}

fn cmd_bounds(args: &Common, err: &mut (dyn Write + Send)) -> Result<i32> {
    let (config, dir) = load_with_overrides(args)?;
    run_scenario(&config, &dir, err)
}

fn cmd_verify(args: &Common, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<i32> {
    let (config, dir) = load_with_overrides(args)?;
    config.validate()?;
    ensure_writable(&dir)?;
    let outcome = verify::verify_with(&config, &StandardBounds)?;
    let text = outcome.render();
    let _ = out.write_all(text.as_bytes());
    write_file(
        &dir,
        &format!("{}_verify.json", config.output.name),
        &outcome.to_json(),
        err,
    )?;
    Ok(outcome.exit_code())
}

/// Emits `contents` to `dir/name` when a directory is given, else to `out`.
fn emit(
    dir: Option<&Path>,
    name: &str,
    contents: &str,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<()> {
    match dir {
        Some(dir) => {
            ensure_writable(dir)?;
            write_file(dir, name, contents, err)
        }
        None => out
            .write_all(contents.as_bytes())
            .map_err(|e| invalid_input(format!("cannot write output: {e}"))),
    }
}

/// Capacity table rows `(N_S, η, C, C̄_ph)`.
pub fn capacity_rows(n_s: &[f64], eta: &[f64]) -> Result<Vec<output::CapacityRow>> {
    if n_s.is_empty() || eta.is_empty() {
        return Err(invalid_input("capacity needs nonempty N_S and eta lists"));
    }
    if let Some(bad) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::Domain(format!("eta must lie in [0, 1], got {bad}")));
    }
    let mut rows = Vec::new();
    for &n in n_s {
        let c = unrestricted_capacity(n)?;
        for &e in eta {
            let lossy = if e > 0.0 && e < 1.0 {
                Some(capacity_upper_bound_lossy(n, e)?)
            } else {
                None
            };
            rows.push((n, e, c, lossy));
        }
    }
    Ok(rows)
}

fn cmd_capacity(args: &CapacityArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<i32> {
    let (n_s, eta, dir) = match &args.config {
        Some(path) => {
            let config = ScenarioConfig::load(path)?;
            let probes = config.validate()?;
            let n_s: Vec<f64> = probes.iter().map(|p| p.probe.mean_photons()).collect();
            let dir = args.out.clone().unwrap_or(config.output.dir.clone());
            (n_s, config.eta, Some(dir))
        }
        None => (args.n_s.clone(), args.eta.clone(), args.out.clone()),
    };
    let rows = capacity_rows(&n_s, &eta)?;
    emit(dir.as_deref(), "capacity.csv", &output::capacity_csv(&rows), out, err)?;
    Ok(EXIT_OK)
}

fn cmd_rd_curve(args: &RdArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<i32> {
    let mut prior = PhasePrior::full_circle();
    let mut grid = 512;
    let mut slopes = default_slopes();
    let mut dir = args.out.clone();
    if let Some(path) = &args.config {
        let config = ScenarioConfig::load(path)?;
        config.prior.validate()?;
        prior = config.prior.clone();
        if let Some(section) = &config.rd_curve {
            grid = section.grid;
            if let Some(s) = &section.slopes {
                slopes = s.clone();
            }
        }
        dir = dir.or(Some(config.output.dir.clone()));
    }
    if let Some(text) = &args.prior {
        prior = parse_prior(text)?;
    }
    if let Some(g) = args.grid {
        grid = g;
    }
    let curve: RdCurve = rd_curve(&prior, grid, &slopes)?;
    emit(dir.as_deref(), "rd_curve.csv", &output::rd_csv(&curve), out, err)?;
    Ok(EXIT_OK)
}

/// JSON emitted by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub mse: f64,
    pub mutual_information: f64,
    pub converged: bool,
    pub mc_mean: Option<f64>,
    pub mc_stderr: Option<f64>,
}

/// Runs one simulation.
pub fn simulate(
    probe: &ProbeSpec,
    eta: f64,
    prior: &PhasePrior,
    grid: SimGrid,
    mc: Option<(usize, u64)>,
) -> Result<SimulationSummary> {
    let est = bayesian_mmse(probe, eta, prior, grid)?;
    let info = measurement_mutual_information(probe, eta, prior, grid)?;
    let mc = mc
        .map(|(samples, seed)| monte_carlo_mse(probe, eta, prior, &est.estimator, samples, seed))
        .transpose()?;
    Ok(SimulationSummary {
        mse: est.mse,
        mutual_information: info,
        converged: est.converged,
        mc_mean: mc.map(|m| m.mean),
        mc_stderr: mc.map(|m| m.stderr),
    })
}

fn cmd_simulate(args: &SimulateArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<i32> {
    let mut prior = PhasePrior::full_circle();
    let mut probe: Option<ProbeSpec> = None;
    let mut eta: Option<f64> = None;
    let mut grid = SimGrid::default();
    let mut samples: Option<usize> = None;
    let mut seed = 0;
    let mut dir = args.out.clone();
    if let Some(path) = &args.config {
        let config = ScenarioConfig::load(path)?;
        let probes = config.validate()?;
        prior = config.prior.clone();
        probe = probes.into_iter().next().map(|p| p.probe);
        eta = config.eta.first().copied();
        grid = config.simulate.unwrap_or_default();
        samples = config.monte_carlo.map(|m| m.samples);
        seed = config.seed;
        dir = dir.or(Some(config.output.dir.clone()));
    }
    if let Some(text) = &args.prior {
        prior = parse_prior(text)?;
    }
    if let Some(text) = &args.probe {
        probe = Some(parse_probe(text)?);
    }
    eta = args.eta.or(eta);
    grid.phi = args.grid_phi.unwrap_or(grid.phi);
    grid.theta = args.grid_theta.unwrap_or(grid.theta);
    samples = args.mc_samples.or(samples);
    seed = args.seed.unwrap_or(seed);
    let probe = probe.ok_or_else(|| invalid_input("simulate needs --probe or --config"))?;
    let eta = eta.ok_or_else(|| invalid_input("simulate needs --eta or --config"))?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta must lie in [0, 1], got {eta}")));
    }
    grid.validate()?;
    let summary = simulate(&probe, eta, &prior, grid, samples.map(|s| (s, seed)))?;
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    emit(dir.as_deref(), "simulate.json", &json, out, err)?;
    Ok(if summary.converged { EXIT_OK } else { EXIT_NUMERICAL })
}

fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid_input(format!("not a number: {t:?}")))
        })
        .collect()
}

/// Parses `uniform`, `uniform:WIDTH[:CENTER]`, `wrapped_gaussian:MEAN:SIGMA` or a JSON prior.
pub fn parse_prior(text: &str) -> Result<PhasePrior> {
    let text = text.trim();
    if text.starts_with('{') {
        let prior: PhasePrior = serde_json::from_str(text).map_err(|e| invalid_input(format!("prior: {e}")))?;
        prior.validate()?;
        return Ok(prior);
    }
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let args = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(':').map(parse_numbers).collect::<Result<Vec<_>>>()?.concat()
    };
    match (kind, args.as_slice()) {
        ("uniform", []) => Ok(PhasePrior::full_circle()),
        ("uniform", [w]) => PhasePrior::uniform(std::f64::consts::PI, *w),
        ("uniform", [w, c]) => PhasePrior::uniform(*c, *w),
        ("wrapped_gaussian" | "wrapped-gaussian", [m, s]) => PhasePrior::wrapped_gaussian(*m, *s),
        _ => Err(invalid_input(format!("unrecognised prior {text:?}"))),
    }
}

/// Parses `coherent:ALPHA`, `number:N`, `flat_superposition:D`,
/// `binomial_phase:D`, `explicit:c0,c1,...` or a JSON probe.
pub fn parse_probe(text: &str) -> Result<ProbeSpec> {
    let text = text.trim();
    let family: ProbeFamily = if text.starts_with('{') {
        serde_json::from_str(text).map_err(|e| invalid_input(format!("probe: {e}")))?
    } else {
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| invalid_input(format!("probe {text:?} needs a parameter")))?;
        let count = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| invalid_input(format!("not a count: {s:?}")))
        };
        match kind {
            "coherent" => ProbeFamily::Coherent {
                alpha: parse_numbers(rest)?.first().copied().unwrap_or(0.0),
            },
            "number" => ProbeFamily::Number { n: count(rest)? },
            "flat_superposition" | "flat-superposition" => ProbeFamily::FlatSuperposition { d: count(rest)? },
            "binomial_phase" | "binomial-phase" => ProbeFamily::BinomialPhase { d: count(rest)? },
            "explicit" => ProbeFamily::Explicit {
                amplitudes: parse_numbers(rest)?.into_iter().map(AmplitudeValue::Real).collect(),
            },
            other => return Err(invalid_input(format!("unknown probe family {other:?}"))),
        }
    };
    family.materialize(Default::default())
}
