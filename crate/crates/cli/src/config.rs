//! Experiment configuration: a TOML file with one section per concern.
//! Unknown keys are rejected, naming the key.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use subcell_sbp::experiments::{
    advection_sine, burgers_smooth, euler_manufactured, maxwell_right_going, standard_domain, MeshSpec, Problem,
};
use subcell_sbp::mesh::{CouplingMode, Splits};
use subcell_sbp::{FluxKind, Law, OversetDomain, SplitFamily, VolumeFlux};

pub const PRESETS: &[(&str, &str)] = &[
    ("advection-table1", include_str!("../presets/advection-table1.toml")),
    ("euler-table2", include_str!("../presets/euler-table2.toml")),
    ("spectra-fig5", include_str!("../presets/spectra-fig5.toml")),
    ("flux-compare-fig8", include_str!("../presets/flux-compare-fig8.toml")),
    ("long-time-fig4", include_str!("../presets/long-time-fig4.toml")),
    (
        "long-time-fig4-baseline",
        include_str!("../presets/long-time-fig4-baseline.toml"),
    ),
    (
        "conservation-burgers",
        include_str!("../presets/conservation-burgers.toml"),
    ),
    (
        "conservation-maxwell",
        include_str!("../presets/conservation-maxwell.toml"),
    ),
];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Seed for the randomised operator checks.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "standard_domain")]
    pub domain: OversetDomain,
    #[serde(default = "default_law")]
    pub law: Law,
    /// Initial data; derived from the law if absent.
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub flux: FluxConfig,
    #[serde(default)]
    pub integrate: IntegrateConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
}

fn default_law() -> Law {
    Law::Advection { alpha: 2.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `sin(k pi x)`; advection only.
    Sine {
        #[serde(default = "one")]
        k: f64,
    },
    /// `rho = c + A sin(omega (x - t))`, `rho v = rho`, `rho e = rho^2`.
    EulerManufactured {
        #[serde(default = "two")]
        c: f64,
        #[serde(default = "tenth")]
        amplitude: f64,
        #[serde(default = "pi")]
        omega: f64,
        #[serde(default = "yes")]
        source: bool,
    },
    BurgersSmooth,
    MaxwellRightGoing,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn tenth() -> f64 {
    0.1
}
fn pi() -> f64 {
    PI
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_u: usize,
    pub n_v: usize,
    pub degree: usize,
    #[serde(default)]
    pub family: SplitFamily,
    #[serde(default = "subcell")]
    pub coupling: CouplingMode,
    #[serde(default = "yes")]
    pub split_b: bool,
    #[serde(default = "yes")]
    pub split_c: bool,
}

fn subcell() -> CouplingMode {
    CouplingMode::Subcell
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            n_u: 10,
            n_v: 10,
            degree: 3,
            family: SplitFamily::Lobatto,
            coupling: CouplingMode::Subcell,
            split_b: true,
            split_c: true,
        }
    }
}

impl MeshConfig {
    pub fn spec(&self) -> MeshSpec {
        MeshSpec {
            n_u: self.n_u,
            n_v: self.n_v,
            degree: self.degree,
            family: self.family,
            coupling: self.coupling,
            splits: Splits {
                at_b: self.split_b,
                at_c: self.split_c,
            },
        }
    }
}

/// Unset entries keep the problem's defaults.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    pub surface: Option<FluxKind>,
    pub subcell: Option<FluxKind>,
    pub volume: Option<VolumeFlux>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateConfig {
    #[serde(default = "two")]
    pub t_final: f64,
    /// Absolute and relative tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Number of equal intervals between diagnostic samples.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Abort a run once the max-norm exceeds this multiple of its initial value.
    pub stop_growth: Option<f64>,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_samples() -> usize {
    100
}

impl Default for IntegrateConfig {
    fn default() -> Self {
        Self {
            t_final: 2.0,
            tol: default_tol(),
            samples: default_samples(),
            stop_growth: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("output")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_degrees")]
    pub degrees: Vec<usize>,
    #[serde(default = "default_families")]
    pub families: Vec<SplitFamily>,
    /// Split points inside `cell`.
    #[serde(default = "default_splits")]
    pub splits: Vec<f64>,
    #[serde(default = "default_cell")]
    pub cell: [f64; 2],
    /// Random polynomial pairs per operator for the integration-by-parts check.
    #[serde(default = "default_random")]
    pub random_pairs: usize,
}

fn default_degrees() -> Vec<usize> {
    (1..=6).collect()
}
fn default_families() -> Vec<SplitFamily> {
    vec![SplitFamily::Lobatto, SplitFamily::Radau]
}
fn default_splits() -> Vec<f64> {
    vec![-0.5, 0.0, 0.3]
}
fn default_cell() -> [f64; 2] {
    [-1.0, 1.0]
}
fn default_random() -> usize {
    10
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            degrees: default_degrees(),
            families: default_families(),
            splits: default_splits(),
            cell: default_cell(),
            random_pairs: default_random(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_elements")]
    pub elements: Vec<usize>,
    /// Degrees to sweep; defaults to `mesh.degree`.
    pub degrees: Option<Vec<usize>>,
    /// If set, the last EOC of every variable must be at least
    /// `degree + 1 - eoc_tolerance`.
    pub eoc_tolerance: Option<f64>,
}

fn default_elements() -> Vec<usize> {
    vec![10, 20, 40, 80]
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            elements: default_elements(),
            degrees: None,
            eoc_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Also analyse the interpolation-coupled baseline with these
    /// `[n_u, n_v]` elements.
    pub baseline_elements: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxSwitch {
    /// Surface and sub-cell-point flux both take the compared flux.
    #[default]
    Both,
    /// Only the sub-cell-point flux changes.
    Subcell,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// The first flux is the reference expected to be conservative.
    #[serde(default = "default_compare")]
    pub fluxes: Vec<FluxKind>,
    #[serde(default)]
    pub switch: FluxSwitch,
    /// Every other flux must drift at least this many times more than the
    /// reference.
    pub min_drift_ratio: Option<f64>,
    /// Every other flux must show some positive entropy rate.
    #[serde(default)]
    pub expect_anti_dissipation: bool,
}

fn default_compare() -> Vec<FluxKind> {
    vec![FluxKind::Hll, FluxKind::Rusanov]
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            fluxes: default_compare(),
            switch: FluxSwitch::Both,
            min_drift_ratio: None,
            expect_anti_dissipation: false,
        }
    }
}

/// Thresholds turned into pass/fail checks; unset ones are not checked.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub max_conservation_drift: Option<f64>,
    pub max_energy_rate: Option<f64>,
    pub max_entropy_rate: Option<f64>,
    pub max_amplitude_growth: Option<f64>,
    pub min_amplitude_growth: Option<f64>,
    pub max_abscissa: Option<f64>,
    pub min_baseline_abscissa: Option<f64>,
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub degree: Option<usize>,
    pub elements: Option<(usize, usize)>,
    pub flux: Option<FluxKind>,
    pub output_dir: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| anyhow::anyhow!("{}", e.to_string().trim_end()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn preset(name: &str) -> Result<Self> {
        let Some((_, text)) = PRESETS.iter().find(|(n, _)| *n == name) else {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            bail!("unknown preset '{name}' (available: {})", names.join(", "));
        };
        Self::parse(text).with_context(|| format!("invalid preset {name}"))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(d) = o.degree {
            self.mesh.degree = d;
            self.verify.degrees = vec![d];
            self.convergence.degrees = Some(vec![d]);
        }
        if let Some((nu, nv)) = o.elements {
            self.mesh.n_u = nu;
            self.mesh.n_v = nv;
        }
        if let Some(f) = o.flux {
            self.flux.surface = Some(f);
            self.flux.subcell = Some(f);
        }
        if let Some(dir) = &o.output_dir {
            self.output.dir = dir.clone();
        }
        self.validate()
    }

    fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.mesh.degree == 0 || self.mesh.n_u == 0 || self.mesh.n_v == 0 {
            bail!("mesh.degree, mesh.n_u and mesh.n_v must be positive");
        }
        if !(self.integrate.t_final > 0.0) || !(self.integrate.tol > 0.0) {
            bail!("integrate.t_final and integrate.tol must be positive");
        }
        if self.integrate.samples == 0 {
            bail!("integrate.samples must be positive");
        }
        if self.convergence.elements.is_empty() || self.convergence.elements.contains(&0) {
            bail!("convergence.elements must be a non-empty list of positive counts");
        }
        if self.compare.fluxes.is_empty() {
            bail!("compare.fluxes must not be empty");
        }
        self.problem_config()?;
        Ok(())
    }

    fn problem_config(&self) -> Result<ProblemConfig> {
        let pc = match (self.problem, self.law) {
            (Some(p), _) => p,
            (None, Law::Advection { .. }) => ProblemConfig::Sine { k: 1.0 },
            (None, Law::Burgers) => ProblemConfig::BurgersSmooth,
            (None, Law::Maxwell { .. }) => ProblemConfig::MaxwellRightGoing,
            (None, Law::Euler { .. }) => ProblemConfig::EulerManufactured {
                c: 2.0,
                amplitude: 0.1,
                omega: PI,
                source: true,
            },
        };
        let ok = matches!(
            (pc, self.law),
            (ProblemConfig::Sine { .. }, Law::Advection { .. })
                | (ProblemConfig::EulerManufactured { .. }, Law::Euler { .. })
                | (ProblemConfig::BurgersSmooth, Law::Burgers)
                | (ProblemConfig::MaxwellRightGoing, Law::Maxwell { .. })
        );
        if !ok {
            bail!("problem {:?} does not fit law '{}'", pc, self.law.name());
        }
        Ok(pc)
    }

    /// The configured problem with the `[flux]` section applied.
    pub fn problem(&self) -> Result<Problem> {
        let mut p = match (self.problem_config()?, self.law) {
            (ProblemConfig::Sine { k }, Law::Advection { alpha }) => advection_sine(alpha, k),
            (
                ProblemConfig::EulerManufactured {
                    c,
                    amplitude,
                    omega,
                    source,
                },
                Law::Euler { gamma },
            ) => euler_manufactured(gamma, c, amplitude, omega, source),
            (ProblemConfig::BurgersSmooth, _) => burgers_smooth(),
            (ProblemConfig::MaxwellRightGoing, Law::Maxwell { c }) => maxwell_right_going(c),
            _ => unreachable!("checked in problem_config"),
        };
        if let Some(f) = self.flux.surface {
            p.surface_flux = f;
        }
        if let Some(f) = self.flux.subcell {
            p.subcell_flux = f;
        }
        if let Some(v) = self.flux.volume {
            p.volume_flux = v;
        }
        Ok(p)
    }
}

/// `"N"` or `"N_U,N_V"`.
pub fn parse_elements(s: &str) -> std::result::Result<(usize, usize), String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("'{t}' is not an element count"))
    };
    match s.split_once(',') {
        Some((u, v)) => Ok((parse(u)?, parse(v)?)),
        None => parse(s).map(|n| (n, n)),
    }
}
