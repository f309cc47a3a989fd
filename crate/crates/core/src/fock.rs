//! Truncated Fock-space engine for phase-modulated probes sent through a
//! pure-loss channel.
//!
//! States live on a product basis labelled by an idler index and a signal
//! photon number. For number-diagonal-signal (NDS) probes the idler index `n`
//! stands for the orthonormal idler state |Ψ_n⟩ paired with signal number `n`;
//! no explicit idler Hilbert space is built. Signal-only probes carry no idler
//! label at all.
//!
//! The phase shift acts on the original photon number. Each basis label therefore
//! has a *charge*: the idler index for NDS probes, the signal number otherwise.
//! Modulation multiplies entry `(a, b)` by `e^{i(charge_a − charge_b)φ}`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::capacity::LossChannel;
use crate::error::{invalid_input, Error, Result};
use crate::numerics::ln_binomial;
use crate::prior::PhasePrior;
use crate::TWO_PI;

/// Largest photon-number cutoff accepted anywhere.
pub const MAX_CUTOFF: usize = 128;

/// Tail mass below which a photon-number distribution is truncated.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Loss branches lighter than this are dropped from a [`ChiDecomposition`].
const BRANCH_FLOOR: f64 = 1e-14;

/// Eigenvalues at or below this are treated as zero in entropies.
const EIGEN_FLOOR: f64 = 1e-14;

/// Eigenvalues below this are reported as an invalid state.
const NEGATIVE_EIGEN_TOL: f64 = 1e-8;

/// Matrix entries below this magnitude do not couple blocks during diagonalisation.
const COUPLING_FLOOR: f64 = 1e-15;

const MIN_PHASE_GRID: usize = 64;

/// Whether the probe's signal mode is entangled with an idler.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdlerMode {
    /// NDS probe `Σ_n c_n |Ψ_n⟩|n⟩` with orthonormal idler states.
    Nds,
    /// Single-mode probe `Σ_n c_n |n⟩` without an idler.
    #[default]
    None,
}

/// A single-signal-mode probe given by its photon-number amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    amplitudes: Vec<Complex64>,
    idler: IdlerMode,
}

impl ProbeSpec {
    /// Probe with explicit amplitudes `c_0..=c_cutoff`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, idler: IdlerMode) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(invalid_input("probe needs at least one amplitude"));
        }
        if amplitudes.len() > MAX_CUTOFF + 1 {
            return Err(Error::CutoffExceeded {
                needed: amplitudes.len() - 1,
                cap: MAX_CUTOFF,
            });
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid_input("probe amplitudes must be finite"));
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(invalid_input(format!("probe amplitudes have squared norm {norm}")));
        }
        Ok(ProbeSpec { amplitudes, idler })
    }

    /// NDS probe with real amplitudes `√p_n`.
    pub fn nds_from_distribution(p: &[f64]) -> Result<Self> {
        if p.iter().any(|x| !(*x >= 0.0)) {
            return Err(invalid_input("photon-number probabilities must be nonnegative"));
        }
        Self::from_amplitudes(
            p.iter().map(|x| Complex64::new(x.sqrt(), 0.0)).collect(),
            IdlerMode::Nds,
        )
    }

    /// Coherent state |α⟩ truncated where the tail mass drops below 1e-12.
    pub fn coherent(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(invalid_input("coherent amplitude must be finite"));
        }
        let mean = alpha * alpha;
        let ln_p = |n: usize| {
            if mean == 0.0 {
                if n == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                -mean + n as f64 * mean.ln() - crate::numerics::ln_factorial(n)
            }
        };
        let mut amplitudes = Vec::new();
        let mut mass = 0.0;
        for n in 0..=MAX_CUTOFF {
            let p = ln_p(n).exp();
            mass += p;
            let sign = if alpha < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
            amplitudes.push(Complex64::new(sign * p.sqrt(), 0.0));
            if n as f64 >= mean && 1.0 - mass < TAIL_TOLERANCE {
                return Self::from_amplitudes(amplitudes, IdlerMode::None);
            }
        }
        Err(Error::CutoffExceeded {
            needed: MAX_CUTOFF + 1,
            cap: MAX_CUTOFF,
        })
    }

    /// Number state |n⟩.
    pub fn number(n: usize) -> Result<Self> {
        if n > MAX_CUTOFF {
            return Err(Error::CutoffExceeded {
                needed: n,
                cap: MAX_CUTOFF,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(amplitudes, IdlerMode::None)
    }

    /// Equal-weight superposition of |0⟩..|d−1⟩.
    pub fn flat_superposition(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid_input("flat superposition needs d ≥ 1"));
        }
        if d - 1 > MAX_CUTOFF {
            return Err(Error::CutoffExceeded {
                needed: d - 1,
                cap: MAX_CUTOFF,
            });
        }
        let a = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        Self::from_amplitudes(vec![a; d], IdlerMode::None)
    }

    /// Binomial superposition `c_n = √(C(d, n) / 2^d)`, `n = 0..=d`.
    pub fn binomial_phase(d: usize) -> Result<Self> {
        if d > MAX_CUTOFF {
            return Err(Error::CutoffExceeded {
                needed: d,
                cap: MAX_CUTOFF,
            });
        }
        let amplitudes = (0..=d)
            .map(|n| {
                let ln_p = ln_binomial(d, n) - d as f64 * std::f64::consts::LN_2;
                Complex64::new((0.5 * ln_p).exp(), 0.0)
            })
            .collect();
        Self::from_amplitudes(amplitudes, IdlerMode::None)
    }

    pub fn with_idler(mut self, idler: IdlerMode) -> Self {
        self.idler = idler;
        self
    }

    pub fn idler(&self) -> IdlerMode {
        self.idler
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// Photon-number distribution `p_n = |c_n|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mean_photons(&self) -> f64 {
        self.probabilities().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Photon-number variance `⟨ΔN̂²⟩`.
    pub fn photon_variance(&self) -> f64 {
        let p = self.probabilities();
        let mean = self.mean_photons();
        let second: f64 = p.iter().enumerate().map(|(n, x)| (n * n) as f64 * x).sum();
        (second - mean * mean).max(0.0)
    }
}

/// Amplitude given either as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmplitudeValue {
    Real(f64),
    Complex([f64; 2]),
}

impl From<AmplitudeValue> for Complex64 {
    fn from(a: AmplitudeValue) -> Self {
        match a {
            AmplitudeValue::Real(x) => Complex64::new(x, 0.0),
            AmplitudeValue::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Probe as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProbeFamily {
    Coherent {
        alpha: f64,
    },
    Number {
        n: usize,
    },
    #[serde(alias = "flat-superposition")]
    FlatSuperposition {
        d: usize,
    },
    #[serde(alias = "binomial-phase")]
    BinomialPhase {
        d: usize,
    },
    Explicit {
        amplitudes: Vec<AmplitudeValue>,
    },
}

/// Named family without its parameter, used to scale probes to a target mean photon number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Coherent,
    Number,
    #[serde(alias = "flat-superposition")]
    FlatSuperposition,
    #[serde(alias = "binomial-phase")]
    BinomialPhase,
}

fn integral_parameter(x: f64, what: &str) -> Result<usize> {
    if x >= 0.0 && (x - x.round()).abs() < 1e-9 {
        Ok(x.round() as usize)
    } else {
        Err(invalid_input(format!("{what} must be a nonnegative integer, got {x}")))
    }
}

impl FamilyKind {
    /// Member of this family with mean photon number `mean_photons`.
    pub fn with_mean_photons(self, mean_photons: f64) -> Result<ProbeFamily> {
        if !(mean_photons >= 0.0) {
            return Err(invalid_input(format!(
                "mean photon number must be ≥ 0, got {mean_photons}"
            )));
        }
        Ok(match self {
            FamilyKind::Coherent => ProbeFamily::Coherent {
                alpha: mean_photons.sqrt(),
            },
            FamilyKind::Number => ProbeFamily::Number {
                n: integral_parameter(mean_photons, "number-state photon count")?,
            },
            FamilyKind::FlatSuperposition => ProbeFamily::FlatSuperposition {
                d: integral_parameter(2.0 * mean_photons + 1.0, "flat-superposition size 2N+1")?,
            },
            FamilyKind::BinomialPhase => ProbeFamily::BinomialPhase {
                d: integral_parameter(2.0 * mean_photons, "binomial size 2N")?,
            },
        })
    }
}

impl ProbeFamily {
    pub fn materialize(&self, idler: IdlerMode) -> Result<ProbeSpec> {
        let probe = match self {
            ProbeFamily::Coherent { alpha } => ProbeSpec::coherent(*alpha)?,
            ProbeFamily::Number { n } => ProbeSpec::number(*n)?,
            ProbeFamily::FlatSuperposition { d } => ProbeSpec::flat_superposition(*d)?,
            ProbeFamily::BinomialPhase { d } => ProbeSpec::binomial_phase(*d)?,
            ProbeFamily::Explicit { amplitudes } => ProbeSpec::from_amplitudes(
                amplitudes.iter().map(|a| Complex64::from(*a)).collect(),
                IdlerMode::None,
            )?,
        };
        Ok(probe.with_idler(idler))
    }

    /// Short human-readable description, e.g. `coherent(alpha=1)`.
    pub fn describe(&self) -> String {
        match self {
            ProbeFamily::Coherent { alpha } => format!("coherent(alpha={alpha})"),
            ProbeFamily::Number { n } => format!("number(n={n})"),
            ProbeFamily::FlatSuperposition { d } => format!("flat_superposition(d={d})"),
            ProbeFamily::BinomialPhase { d } => format!("binomial_phase(d={d})"),
            ProbeFamily::Explicit { amplitudes } => format!("explicit(cutoff={})", amplitudes.len().saturating_sub(1)),
        }
    }
}

/// Basis label: idler index (absent for signal-only probes) and signal photon number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub idler: Option<usize>,
    pub signal: usize,
}

impl BasisLabel {
    /// Eigenvalue of the phase generator attached to this label.
    pub fn charge(&self) -> usize {
        self.idler.unwrap_or(self.signal)
    }
}

/// Hermitian unit-trace matrix over a labelled basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    labels: Vec<BasisLabel>,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(labels: Vec<BasisLabel>, entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != labels.len() || entries.ncols() != labels.len() {
            return Err(invalid_input("density matrix dimension does not match its basis"));
        }
        Ok(DensityMatrix { labels, entries })
    }

    /// Signal-only density matrix from a plain matrix over photon numbers `0..d`.
    pub fn signal_only(entries: DMatrix<Complex64>) -> Result<Self> {
        let labels = (0..entries.nrows())
            .map(|m| BasisLabel { idler: None, signal: m })
            .collect();
        Self::new(labels, entries)
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    /// Checks Hermiticity (1e-12) and unit trace (1e-10).
    pub fn check_hermitian_unit_trace(&self) -> Result<()> {
        let n = self.dim();
        for i in 0..n {
            for j in i..n {
                let d = (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm();
                if d > 1e-12 {
                    return Err(Error::InvalidState(format!(
                        "not Hermitian at ({i}, {j}): deviation {d:e}"
                    )));
                }
            }
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("trace is {tr}, not 1")));
        }
        Ok(())
    }

    /// Eigenvalues in ascending order, computed block by block.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .blocks()
            .iter()
            .flat_map(|block| {
                if block.len() == 1 {
                    return vec![self.entries[(block[0], block[0])].re];
                }
                let sub = DMatrix::from_fn(block.len(), block.len(), |r, c| self.entries[(block[r], block[c])]);
                SymmetricEigen::new(sub).eigenvalues.iter().copied().collect()
            })
            .collect();
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    /// Index sets of the irreducible blocks of the coupling graph.
    fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.entries[(i, j)].norm() > COUPLING_FLOOR {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = find(&mut parent, i);
            groups[r].push(i);
        }
        groups.into_iter().filter(|g| !g.is_empty()).collect()
    }

    /// Full validity check: Hermitian, unit trace, eigenvalues ≥ −1e-10.
    pub fn validate(&self) -> Result<()> {
        self.check_hermitian_unit_trace()?;
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Traces out the idler index, leaving a matrix over signal numbers `0..=max`.
    pub fn reduced_signal(&self) -> DensityMatrix {
        let dim = self.labels.iter().map(|l| l.signal).max().map_or(0, |m| m + 1);
        let mut out = DMatrix::zeros(dim, dim);
        for (a, la) in self.labels.iter().enumerate() {
            for (b, lb) in self.labels.iter().enumerate() {
                if la.idler == lb.idler {
                    out[(la.signal, lb.signal)] += self.entries[(a, b)];
                }
            }
        }
        DensityMatrix::signal_only(out).expect("square by construction")
    }

    /// Applies `U_φ · U_φ†`: entry `(a, b)` picks up `e^{i(charge_a − charge_b)φ}`.
    pub fn phase_shifted(&self, phi: f64) -> DensityMatrix {
        let charges: Vec<f64> = self.labels.iter().map(|l| l.charge() as f64).collect();
        let entries = DMatrix::from_fn(self.dim(), self.dim(), |a, b| {
            self.entries[(a, b)] * Complex64::from_polar(1.0, (charges[a] - charges[b]) * phi)
        });
        DensityMatrix {
            labels: self.labels.clone(),
            entries,
        }
    }
}

/// Decomposition `ρ_IS = Σ_l q_l |χ_l⟩⟨χ_l|` by number of photons lost.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiDecomposition {
    idler: IdlerMode,
    eta: f64,
    cutoff: usize,
    /// `q_l` for every `l = 0..=cutoff`, including negligible ones.
    all_losses: Vec<f64>,
    branches: Vec<ChiBranch>,
    labels: Vec<BasisLabel>,
}

/// One loss branch: `l` photons lost with probability `q_l`, conditional state `χ_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiBranch {
    pub lost: usize,
    pub probability: f64,
    /// Amplitudes of `χ_l` over `(label, original photon number)`.
    pub amplitudes: Vec<(BasisLabel, usize, Complex64)>,
}

fn basis_for(idler: IdlerMode, cutoff: usize) -> Vec<BasisLabel> {
    match idler {
        IdlerMode::Nds => (0..=cutoff)
            .flat_map(|n| {
                (0..=n).map(move |m| BasisLabel {
                    idler: Some(n),
                    signal: m,
                })
            })
            .collect(),
        IdlerMode::None => (0..=cutoff).map(|m| BasisLabel { idler: None, signal: m }).collect(),
    }
}

/// Splits the lossy output of `probe` into loss branches.
pub fn chi_decompose(probe: &ProbeSpec, eta: f64) -> Result<ChiDecomposition> {
    let channel = LossChannel::new(eta)?;
    let cutoff = probe.cutoff();
    let amps = probe.amplitudes();
    let mut all_losses = vec![0.0; cutoff + 1];
    let mut branches = Vec::new();
    for (lost, q_slot) in all_losses.iter_mut().enumerate() {
        let mut components = Vec::new();
        let mut q = 0.0;
        for (n, c) in amps.iter().enumerate().skip(lost) {
            let weight = c.norm_sqr() * channel.kernel(n, lost)?;
            if weight == 0.0 {
                continue;
            }
            q += weight;
            let label = BasisLabel {
                idler: match probe.idler() {
                    IdlerMode::Nds => Some(n),
                    IdlerMode::None => None,
                },
                signal: n - lost,
            };
            components.push((label, n, *c * channel.kernel(n, lost)?.sqrt()));
        }
        *q_slot = q;
        if q < BRANCH_FLOOR {
            continue;
        }
        let scale = 1.0 / q.sqrt();
        branches.push(ChiBranch {
            lost,
            probability: q,
            amplitudes: components
                .into_iter()
                .map(|(label, n, a)| (label, n, a * scale))
                .collect(),
        });
    }
    Ok(ChiDecomposition {
        idler: probe.idler(),
        eta,
        cutoff,
        all_losses,
        branches,
        labels: basis_for(probe.idler(), cutoff),
    })
}

impl ChiDecomposition {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn idler(&self) -> IdlerMode {
        self.idler
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn branches(&self) -> &[ChiBranch] {
        &self.branches
    }

    /// Loss-count distribution `q_l` for `l = 0..=cutoff`.
    pub fn loss_probabilities(&self) -> &[f64] {
        &self.all_losses
    }

    /// Gram matrix `⟨χ_l|χ_l'⟩` over the retained branches.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let k = self.branches.len();
        DMatrix::from_fn(k, k, |i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (la, _, a) in &self.branches[i].amplitudes {
                for (lb, _, b) in &self.branches[j].amplitudes {
                    if la == lb {
                        acc += a.conj() * b;
                    }
                }
            }
            acc
        })
    }

    fn label_index(&self) -> std::collections::HashMap<BasisLabel, usize> {
        self.labels.iter().enumerate().map(|(i, l)| (*l, i)).collect()
    }

    /// Unmodulated output state `ρ_IS`.
    pub fn output_state(&self) -> DensityMatrix {
        let index = self.label_index();
        let dim = self.labels.len();
        let mut rho = DMatrix::zeros(dim, dim);
        for branch in &self.branches {
            for (la, _, a) in &branch.amplitudes {
                for (lb, _, b) in &branch.amplitudes {
                    rho[(index[la], index[lb])] += *a * b.conj() * branch.probability;
                }
            }
        }
        DensityMatrix {
            labels: self.labels.clone(),
            entries: rho,
        }
    }
}

/// Output state `ρ_φ` for a phase shift `φ`.
pub fn modulated_state(decomp: &ChiDecomposition, phi: f64) -> DensityMatrix {
    decomp.output_state().phase_shifted(phi)
}

fn check_phase_grid(grid: usize) -> Result<()> {
    if grid < MIN_PHASE_GRID {
        return Err(invalid_input(format!(
            "phase grid must have at least {MIN_PHASE_GRID} points, got {grid}"
        )));
    }
    Ok(())
}

/// Prior-averaged output state `ρ̄ = ∫ P(φ) ρ_φ dφ`.
///
/// Entry `(a, b)` of `ρ̄` is entry `(a, b)` of `ρ_IS` times the prior's Fourier
/// coefficient at frequency `charge_a − charge_b`, so only coefficients up to
/// the cutoff are needed. `grid` sets the minimum quadrature resolution for
/// smooth priors.
pub fn average_state(decomp: &ChiDecomposition, prior: &PhasePrior, grid: usize) -> Result<DensityMatrix> {
    check_phase_grid(grid)?;
    prior.validate()?;
    let coeffs: Vec<Complex64> = prior
        .moment_table(decomp.cutoff, grid)
        .into_iter()
        .map(|m| m[0])
        .collect();
    let rho = decomp.output_state();
    let entries = DMatrix::from_fn(rho.dim(), rho.dim(), |a, b| {
        let ca = rho.labels[a].charge() as i64;
        let cb = rho.labels[b].charge() as i64;
        let k = ca - cb;
        let f = if k >= 0 {
            coeffs[k as usize]
        } else {
            coeffs[(-k) as usize].conj()
        };
        rho.entries[(a, b)] * f
    });
    Ok(DensityMatrix {
        labels: rho.labels,
        entries,
    })
}

/// Brute-force `ρ̄`: trapezoid average of `ρ_φ` over a `grid`-point periodic grid.
pub fn average_state_by_quadrature(
    decomp: &ChiDecomposition,
    prior: &PhasePrior,
    grid: usize,
) -> Result<DensityMatrix> {
    check_phase_grid(grid)?;
    prior.validate()?;
    let rho = decomp.output_state();
    let h = TWO_PI / grid as f64;
    let weights: Vec<f64> = (0..grid).map(|g| prior.density(g as f64 * h)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NumericalFailure("prior has no mass on the phase grid".into()));
    }
    let mut acc = DMatrix::zeros(rho.dim(), rho.dim());
    for (g, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        acc += rho.phase_shifted(g as f64 * h).entries * Complex64::new(w / total, 0.0);
    }
    Ok(DensityMatrix {
        labels: rho.labels,
        entries: acc,
    })
}

/// Uniform phase randomisation: removes coherences between different charges.
pub fn phase_randomize(rho: &DensityMatrix) -> DensityMatrix {
    let entries = DMatrix::from_fn(rho.dim(), rho.dim(), |a, b| {
        if rho.labels[a].charge() == rho.labels[b].charge() {
            rho.entries[(a, b)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    DensityMatrix {
        labels: rho.labels.clone(),
        entries,
    }
}

/// Von Neumann entropy `−Tr ρ ln ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    rho.check_hermitian_unit_trace()?;
    let eigenvalues = rho.eigenvalues();
    if let Some(&min) = eigenvalues.first() {
        if min < -NEGATIVE_EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
    }
    Ok(eigenvalues
        .iter()
        .filter(|&&l| l > EIGEN_FLOOR)
        .map(|&l| -l * l.ln())
        .sum())
}

/// Holevo quantity `S(ρ̄) − S(ρ_IS)` of the phase-modulated ensemble.
///
/// Every `ρ_φ` is unitarily equivalent to `ρ_IS`, so the average output
/// entropy equals `S(ρ_IS)`.
pub fn holevo_quantity(decomp: &ChiDecomposition, prior: &PhasePrior, grid: usize) -> Result<f64> {
    let average = average_state(decomp, prior, grid)?;
    Ok(von_neumann_entropy(&average)? - von_neumann_entropy(&decomp.output_state())?)
}
