//! Scenario configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};
use crate::estimation::{SimGrid, MIN_SAMPLES};
use crate::fock::{FamilyKind, IdlerMode, ProbeFamily, ProbeSpec};
use crate::prior::{PhasePrior, DEFAULT_GRID};
use crate::rate_distortion::MIN_GRID;

/// Bounds that may be requested explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Iti,
    HLimit,
    HallWiseman,
    LossySql,
    Escher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdCurveSection {
    pub grid: usize,
    #[serde(default)]
    pub slopes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_name")]
    pub name: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            name: default_name(),
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_name() -> String {
    "scenario".into()
}

fn default_chi_grid() -> usize {
    DEFAULT_GRID
}

/// A parameter sweep over probes and transmittances for one prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub prior: PhasePrior,
    /// Explicit probes.
    #[serde(default)]
    pub probes: Vec<ProbeFamily>,
    /// Named family swept over `n_s`.
    #[serde(default)]
    pub family: Option<FamilyKind>,
    #[serde(default)]
    pub n_s: Vec<f64>,
    #[serde(default)]
    pub idler: IdlerMode,
    pub eta: Vec<f64>,
    /// Bounds the caller needs; each must be defined at every η.
    #[serde(default)]
    pub bounds: Option<Vec<BoundKind>>,
    #[serde(default = "default_chi_grid")]
    pub chi_grid: usize,
    #[serde(default)]
    pub simulate: Option<SimGrid>,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarloSection>,
    #[serde(default)]
    pub rd_curve: Option<RdCurveSection>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
}

/// One probe with the label used in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedProbe {
    pub label: String,
    pub probe: ProbeSpec,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid_input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid_input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Probe families in config order: explicit probes, then the `n_s` sweep.
    pub fn families(&self) -> Result<Vec<ProbeFamily>> {
        let mut out = self.probes.clone();
        match (self.family, self.n_s.is_empty()) {
            (Some(kind), false) => {
                for &n in &self.n_s {
                    out.push(kind.with_mean_photons(n)?);
                }
            }
            (Some(_), true) => return Err(invalid_input("family given without an n_s list")),
            (None, false) => return Err(invalid_input("n_s given without a family")),
            (None, true) => {}
        }
        if out.is_empty() {
            return Err(invalid_input("no probes configured"));
        }
        Ok(out)
    }

    pub fn materialize_probes(&self) -> Result<Vec<NamedProbe>> {
        self.families()?
            .iter()
            .map(|f| {
                Ok(NamedProbe {
                    label: f.describe(),
                    probe: f.materialize(self.idler)?,
                })
            })
            .collect()
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<Vec<NamedProbe>> {
        self.prior.validate()?;
        if self.eta.is_empty() {
            return Err(invalid_input("eta list is empty"));
        }
        if let Some(bad) = self.eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Domain(format!("eta must lie in [0, 1], got {bad}")));
        }
        if let Some(requested) = &self.bounds {
            if requested.contains(&BoundKind::LossySql) && self.eta.contains(&1.0) {
                return Err(Error::Domain("lossy_sql requested at eta = 1".into()));
            }
            if requested.contains(&BoundKind::Escher) && self.eta.contains(&0.0) {
                return Err(Error::Domain("escher requested at eta = 0".into()));
            }
        }
        if self.chi_grid < 64 {
            return Err(invalid_input(format!("chi_grid must be ≥ 64, got {}", self.chi_grid)));
        }
        if let Some(grid) = &self.simulate {
            grid.validate()?;
        }
        if let Some(mc) = &self.monte_carlo {
            if self.simulate.is_none() {
                return Err(invalid_input("monte_carlo needs a simulate section"));
            }
            if mc.samples < MIN_SAMPLES {
                return Err(invalid_input(format!(
                    "monte_carlo needs at least {MIN_SAMPLES} samples, got {}",
                    mc.samples
                )));
            }
        }
        if let Some(rd) = &self.rd_curve {
            if rd.grid < MIN_GRID {
                return Err(invalid_input(format!("rd_curve grid must be ≥ {MIN_GRID}")));
            }
            if let Some(s) = &rd.slopes {
                if s.is_empty() || s.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(invalid_input(
                        "rd_curve slopes must be a nonempty list of finite values ≥ 0",
                    ));
                }
            }
        }
        if self.output.name.is_empty() || self.output.name.contains(['/', '\\']) {
            return Err(invalid_input("output name must be a plain file stem"));
        }
        self.materialize_probes()
    }
}

/// Creates `dir` if needed and checks that it accepts files.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| invalid_input(format!("cannot create {}: {e}", dir.display())))?;
    let meta = std::fs::metadata(dir).map_err(|e| invalid_input(format!("cannot stat {}: {e}", dir.display())))?;
    if !meta.is_dir() || meta.permissions().readonly() {
        return Err(invalid_input(format!("{} is not a writable directory", dir.display())));
    }
    Ok(())
}
