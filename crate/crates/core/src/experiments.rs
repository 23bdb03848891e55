//! Ready-made problems and drivers for the numerical experiments:
//! convergence studies, long runs with diagnostics, spectra and flux
//! comparisons.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    energy_rate, entropy_rate, eoc, max_norm, overset_energy, overset_entropy, overset_integral, solution_error,
    spectrum, DiagnosticsRecord, Norm, Spectrum,
};
use crate::equations::{FluxKind, Law, VolumeFlux};
use crate::error::Result;
use crate::mesh::{
    baseline_overset_mesh, build_overset_mesh_with, CouplingMode, OversetDomain, OversetMesh, SplitFamily, Splits,
};
use crate::semidiscretization::{Semidiscretization, SolverConfig, Source};
use crate::time_integration::{integrate_with, IntegratorConfig, StepStats};

/// `x -> state`.
pub type InitialFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
/// `(x, t) -> state`.
pub type ExactFn = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

/// A periodic test problem on `[a, d]`.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub law: Law,
    pub initial: InitialFn,
    pub exact: Option<ExactFn>,
    pub source: Source,
    pub surface_flux: FluxKind,
    pub subcell_flux: FluxKind,
    pub volume_flux: VolumeFlux,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("law", &self.law)
            .field("surface_flux", &self.surface_flux)
            .field("subcell_flux", &self.subcell_flux)
            .field("volume_flux", &self.volume_flux)
            .finish()
    }
}

impl Problem {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::new(self.law, self.surface_flux)
            .with_subcell_flux(self.subcell_flux)
            .with_volume_flux(self.volume_flux)
            .with_source(self.source)
    }

    pub fn with_fluxes(mut self, surface: FluxKind, subcell: FluxKind) -> Self {
        self.surface_flux = surface;
        self.subcell_flux = subcell;
        self
    }
}

/// Domain `[-1, 0.1]` and `[-0.1, 1]`.
pub fn standard_domain() -> OversetDomain {
    OversetDomain {
        a: -1.0,
        b: -0.1,
        c: 0.1,
        d: 1.0,
    }
}

/// `w_0 = sin(k pi x)` advected with speed `alpha`, upwind fluxes.
pub fn advection_sine(alpha: f64, k: f64) -> Problem {
    Problem {
        name: format!("advection-sine-k{k}"),
        law: Law::Advection { alpha },
        initial: Arc::new(move |x| vec![(k * PI * x).sin()]),
        exact: Some(Arc::new(move |x, t| vec![(k * PI * (x - alpha * t)).sin()])),
        source: Source::None,
        surface_flux: FluxKind::Upwind,
        subcell_flux: FluxKind::Upwind,
        volume_flux: VolumeFlux::DerivativeForm,
    }
}

/// Manufactured Euler solution `rho = c + A sin(omega (x - t))`,
/// `rho v = rho`, `rho e = rho^2`, with HLL fluxes and entropy-conservative
/// flux differencing.
pub fn euler_manufactured(gamma: f64, c: f64, amplitude: f64, omega: f64, with_source: bool) -> Problem {
    let exact = move |x: f64, t: f64| {
        let rho = c + amplitude * (omega * (x - t)).sin();
        vec![rho, rho, rho * rho]
    };
    Problem {
        name: "euler-manufactured".into(),
        law: Law::Euler { gamma },
        initial: Arc::new(move |x| exact(x, 0.0)),
        exact: with_source.then(|| Arc::new(exact) as ExactFn),
        source: if with_source {
            Source::EulerManufactured { c, amplitude, omega }
        } else {
            Source::None
        },
        surface_flux: FluxKind::Hll,
        subcell_flux: FluxKind::Hll,
        volume_flux: VolumeFlux::EntropyConservative,
    }
}

/// Smooth positive Burgers data `2 + 0.5 sin(pi x)` (shock forms at
/// `t = 2 / pi`), Godunov fluxes and entropy-conservative flux differencing.
pub fn burgers_smooth() -> Problem {
    Problem {
        name: "burgers-smooth".into(),
        law: Law::Burgers,
        initial: Arc::new(|x| vec![2.0 + 0.5 * (PI * x).sin()]),
        exact: None,
        source: Source::None,
        surface_flux: FluxKind::Godunov,
        subcell_flux: FluxKind::Godunov,
        volume_flux: VolumeFlux::EntropyConservative,
    }
}

/// Right-going Maxwell wave `E = c B = sin(pi x)` with Rusanov fluxes.
pub fn maxwell_right_going(c: f64) -> Problem {
    Problem {
        name: "maxwell-right-going".into(),
        law: Law::Maxwell { c },
        initial: Arc::new(move |x| {
            let e = (PI * x).sin();
            vec![e, e / c]
        }),
        exact: Some(Arc::new(move |x, t| {
            let e = (PI * (x - c * t)).sin();
            vec![e, e / c]
        })),
        source: Source::None,
        surface_flux: FluxKind::Rusanov,
        subcell_flux: FluxKind::Rusanov,
        volume_flux: VolumeFlux::DerivativeForm,
    }
}

/// Mesh description shared by all drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub n_u: usize,
    pub n_v: usize,
    pub degree: usize,
    #[serde(default)]
    pub family: SplitFamily,
    #[serde(default = "default_mode")]
    pub coupling: CouplingMode,
    #[serde(default)]
    pub splits: Splits,
}

fn default_mode() -> CouplingMode {
    CouplingMode::Subcell
}

impl MeshSpec {
    pub fn new(n_u: usize, n_v: usize, degree: usize) -> Self {
        Self {
            n_u,
            n_v,
            degree,
            family: SplitFamily::Lobatto,
            coupling: CouplingMode::Subcell,
            splits: Splits::default(),
        }
    }

    pub fn baseline(mut self) -> Self {
        self.coupling = CouplingMode::Baseline;
        self
    }

    pub fn with_splits(mut self, splits: Splits) -> Self {
        self.splits = splits;
        self
    }

    pub fn build(&self, domain: OversetDomain) -> Result<OversetMesh> {
        match self.coupling {
            CouplingMode::Subcell => {
                build_overset_mesh_with(domain, self.n_u, self.n_v, self.degree, self.family, self.splits)
            }
            CouplingMode::Baseline => baseline_overset_mesh(domain, self.n_u, self.n_v, self.degree),
        }
    }
}

pub fn semidiscretization(problem: &Problem, domain: OversetDomain, mesh: &MeshSpec) -> Result<Semidiscretization> {
    Semidiscretization::new(mesh.build(domain)?, problem.solver_config())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// L2 error per variable.
    pub errors: Vec<f64>,
    /// EOC per variable against the previous row.
    pub eoc: Vec<Option<f64>>,
    pub steps: usize,
}

/// L2 errors at `t_final` on meshes with `N` elements in each domain.
pub fn convergence_study(
    problem: &Problem,
    domain: OversetDomain,
    base: MeshSpec,
    ns: &[usize],
    t_final: f64,
    tol: f64,
) -> Result<Vec<ConvergenceRow>> {
    let exact = problem
        .exact
        .clone()
        .ok_or_else(|| crate::error::Error::invalid(format!("{} has no exact solution", problem.name)))?;
    let nv = problem.law.n_vars();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in ns {
        let spec = MeshSpec { n_u: n, n_v: n, ..base };
        let sd = semidiscretization(problem, domain, &spec)?;
        let w0 = sd.project(|x| (problem.initial)(x));
        let cfg = IntegratorConfig::new(0.0, t_final, tol);
        let mut last = Vec::new();
        let stats = integrate_with(sd.rhs_fn(), &w0, &cfg, |_, y| {
            last = y.to_vec();
            Ok(())
        })
        .map_err(|e| crate::error::Error::invalid(format!("N = {n}: {e}")))?;
        let errors = solution_error(&sd.mesh, &last, nv, |x| exact(x, t_final), Norm::L2);
        let eoc_row = match rows.last() {
            None => vec![None; nv],
            Some(prev) => (0..nv)
                .map(|k| eoc(&[prev.errors[k], errors[k]], &[prev.n as f64, n as f64])[1])
                .collect(),
        };
        rows.push(ConvergenceRow {
            n,
            errors,
            eoc: eoc_row,
            steps: stats.accepted,
        });
    }
    Ok(rows)
}

/// Diagnostics of `w` at time `t`; entropy is reported for non-quadratic
/// entropies only (Euler), where it differs from the energy.
pub fn diagnostics_at(sd: &Semidiscretization, problem: &Problem, t: f64, w: &[f64]) -> Result<DiagnosticsRecord> {
    let law = &sd.config.law;
    let nv = law.n_vars();
    let mut dw = vec![0.0; w.len()];
    sd.rhs(t, w, &mut dw)?;
    let euler = matches!(law, Law::Euler { .. });
    let (l2, linf) = match &problem.exact {
        Some(ex) => (
            Some(solution_error(&sd.mesh, w, nv, |x| ex(x, t), Norm::L2)),
            Some(solution_error(&sd.mesh, w, nv, |x| ex(x, t), Norm::Linf)),
        ),
        None => (None, None),
    };
    Ok(DiagnosticsRecord {
        time: t,
        integral: overset_integral(&sd.mesh, w, nv),
        energy: overset_energy(&sd.mesh, law, w),
        energy_rate: energy_rate(&sd.mesh, law, w, &dw),
        entropy: if euler {
            Some(overset_entropy(&sd.mesh, law, w)?)
        } else {
            None
        },
        entropy_rate: if euler {
            Some(entropy_rate(&sd.mesh, law, w, &dw)?)
        } else {
            None
        },
        max_norm: max_norm(w, nv),
        l2_error: l2,
        linf_error: linf,
    })
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<DiagnosticsRecord>,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub stats: StepStats,
    /// Set if the integration stopped early; records up to that point are
    /// kept.
    pub failure: Option<String>,
}

impl RunResult {
    /// `max_t |I_k(t) - I_k(0)|` over all variables.
    pub fn conservation_drift(&self) -> f64 {
        let Some(first) = self.records.first() else { return 0.0 };
        self.records
            .iter()
            .flat_map(|r| r.integral.iter().zip(&first.integral).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_energy_rate(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.energy_rate)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn entropy_rate_range(&self) -> Option<(f64, f64)> {
        let rates: Vec<f64> = self.records.iter().filter_map(|r| r.entropy_rate).collect();
        if rates.is_empty() {
            return None;
        }
        Some((
            rates.iter().cloned().fold(f64::INFINITY, f64::min),
            rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ))
    }

    /// Largest nodal max-norm over the run, relative to the initial one
    /// (first variable).
    pub fn amplitude_growth(&self) -> f64 {
        let Some(first) = self.records.first() else {
            return f64::NAN;
        };
        let peak = self.records.iter().map(|r| r.max_norm[0]).fold(0.0, f64::max);
        peak / first.max_norm[0]
    }
}

/// Integrate with diagnostics at `n_samples + 1` equally spaced times.
/// Integration failures are recorded in the result rather than returned,
/// so that partial output survives; `stop_growth` aborts once the
/// max-norm exceeds that multiple of its initial value.
pub fn run(
    sd: &Semidiscretization,
    problem: &Problem,
    t_final: f64,
    tol: f64,
    n_samples: usize,
    stop_growth: Option<f64>,
) -> Result<RunResult> {
    let w0 = sd.project(|x| (problem.initial)(x));
    let cfg = IntegratorConfig::new(0.0, t_final, tol).with_uniform_samples(n_samples);
    let mut records = Vec::new();
    let mut final_state = w0.clone();
    let mut final_time = 0.0;
    let nv = sd.n_vars();
    let initial_amp = max_norm(&w0, nv)[0];
    let outcome = integrate_with(sd.rhs_fn(), &w0, &cfg, |t, y| {
        let rec = diagnostics_at(sd, problem, t, y)?;
        let amp = rec.max_norm[0];
        records.push(rec);
        final_state = y.to_vec();
        final_time = t;
        match stop_growth {
            Some(g) if amp > g * initial_amp => Err(crate::error::Error::invalid(format!(
                "amplitude grew beyond {g} x initial at t = {t}"
            ))),
            _ => Ok(()),
        }
    });
    let (stats, failure) = match outcome {
        Ok(s) => (s, None),
        Err(e) => (StepStats::default(), Some(e.to_string())),
    };
    Ok(RunResult {
        records,
        final_time,
        final_state,
        stats,
        failure,
    })
}

/// Spectrum of the semi-discretisation linearised at the initial state.
pub fn jacobian_spectrum(sd: &Semidiscretization, problem: &Problem) -> Result<Spectrum> {
    let w0 = sd.project(|x| (problem.initial)(x));
    let j = sd.jacobian(0.0, &w0, 1e-7)?;
    spectrum(&j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_advection_run_conserves() {
        let problem = advection_sine(2.0, 1.0);
        let sd = semidiscretization(&problem, standard_domain(), &MeshSpec::new(4, 4, 3)).unwrap();
        let res = run(&sd, &problem, 0.2, 1e-10, 4, None).unwrap();
        assert!(res.failure.is_none());
        assert_eq!(res.records.len(), 5);
        assert!(res.conservation_drift() < 1e-12);
        assert!(res.max_energy_rate() <= 1e-12);
    }

    #[test]
    fn growth_guard_stops_run() {
        let problem = advection_sine(2.0, 1.0);
        let sd = semidiscretization(&problem, standard_domain(), &MeshSpec::new(4, 4, 3)).unwrap();
        let res = run(&sd, &problem, 0.2, 1e-10, 4, Some(0.5)).unwrap();
        assert!(res.failure.unwrap().contains("amplitude"));
        assert_eq!(res.records.len(), 1);
    }
}
