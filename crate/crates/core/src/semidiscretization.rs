//! Spatial right-hand side of the overset SBP-SAT discretisation.
//!
//! The state is a flat vector in node-major order: variable `k` at global
//! node `i` lives at `i * n_vars + k`, with u-mesh elements first. Every
//! element gets the volume term `-D f` (or flux differencing) plus
//! `sign * P^{-1} e (f* - e^T f)` for each coupling it receives. Using the
//! projected nodal flux `e^T f` rather than `f(e^T w)` keeps the scheme
//! conservative for non-nodal projections.

use std::fmt;
use std::sync::Arc;

use log::warn;
use nalgebra::DMatrix;

use crate::equations::{FluxKind, Law, NumericalFlux, VolumeFlux, MAX_VARS};
use crate::error::{Error, Result};
use crate::mesh::{single_block, CouplingKind, CouplingMode, ElementOperator, OversetDomain, OversetMesh, StateSource};
use crate::subcell::SubcellOperator;

/// Time-dependent boundary data `t -> state`.
pub type BoundaryFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Default)]
pub enum Boundary {
    /// `g_L` is the v-mesh trace at `d`, `g_R` the u-mesh trace at `a`.
    #[default]
    Periodic,
    Dirichlet {
        left: BoundaryFn,
        right: BoundaryFn,
    },
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => write!(f, "Periodic"),
            Boundary::Dirichlet { .. } => write!(f, "Dirichlet"),
        }
    }
}

/// Pointwise source terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum Source {
    #[default]
    None,
    /// Sources that make `rho = c + A sin(omega (x - t))`, `rho v = rho`,
    /// `rho e = rho^2` an exact Euler solution.
    EulerManufactured { c: f64, amplitude: f64, omega: f64 },
}

impl Source {
    fn add(&self, law: &Law, x: f64, t: f64, out: &mut [f64]) {
        if let (Source::EulerManufactured { c, amplitude, omega }, Law::Euler { gamma }) = (*self, *law) {
            let phase = omega * (x - t);
            let rho = c + amplitude * phase.sin();
            let s = omega * amplitude * phase.cos() * (2.0 * rho - 0.5) * (gamma - 1.0);
            out[1] += s;
            out[2] += s;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub law: Law,
    /// Flux at element interfaces and physical boundaries.
    pub surface_flux: NumericalFlux,
    /// Flux at `b` and `c`, where the two meshes and the sub-cells meet.
    pub subcell_flux: NumericalFlux,
    pub volume_flux: VolumeFlux,
    pub boundary: Boundary,
    pub source: Source,
}

impl SolverConfig {
    pub fn new(law: Law, flux: FluxKind) -> Self {
        Self {
            law,
            surface_flux: flux.into(),
            subcell_flux: flux.into(),
            volume_flux: VolumeFlux::DerivativeForm,
            boundary: Boundary::Periodic,
            source: Source::None,
        }
    }

    pub fn with_subcell_flux(mut self, flux: FluxKind) -> Self {
        self.subcell_flux = flux.into();
        self
    }

    pub fn with_volume_flux(mut self, vf: VolumeFlux) -> Self {
        self.volume_flux = vf;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    /// Set when a non-linear law is coupled at a sub-cell point with a flux
    /// that is never fully upwind; conservation is then lost.
    pub fn conservation_warning(&self) -> bool {
        !self.law.is_linear() && !self.subcell_flux.can_be_fully_upwind(&self.law)
    }
}

/// Mesh plus configuration; evaluates the semi-discrete right-hand side.
#[derive(Debug, Clone)]
pub struct Semidiscretization {
    pub mesh: Arc<OversetMesh>,
    pub config: SolverConfig,
    node_x: Vec<f64>,
    p_inv: Vec<f64>,
}

impl Semidiscretization {
    pub fn new(mesh: impl Into<Arc<OversetMesh>>, config: SolverConfig) -> Result<Self> {
        let mesh = mesh.into();
        config.surface_flux.supports(&config.law)?;
        config.subcell_flux.supports(&config.law)?;
        if config.volume_flux.is_flux_differencing() && !mesh.is_lobatto() {
            return Err(Error::invalid(
                "flux differencing needs Gauss-Lobatto operators on every element",
            ));
        }
        if config.conservation_warning() && mesh.mode == CouplingMode::Subcell {
            warn!(
                "{} flux at the sub-cell points is not fully upwind for {}; the scheme is not conservative",
                config.subcell_flux.kind.name(),
                config.law.name()
            );
        }
        let node_x = mesh.nodes();
        let p_inv = mesh.weights.iter().flatten().map(|p| 1.0 / p).collect();
        Ok(Self {
            mesh,
            config,
            node_x,
            p_inv,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.config.law.n_vars()
    }

    pub fn len(&self) -> usize {
        self.mesh.n_nodes() * self.n_vars()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.node_x
    }

    /// Nodal interpolation of `f(x) -> state`.
    pub fn project(&self, f: impl Fn(f64) -> Vec<f64>) -> Vec<f64> {
        self.node_x.iter().flat_map(|&x| f(x)).collect()
    }

    fn source_state(&self, src: &StateSource, t: f64, w: &[f64], out: &mut [f64]) {
        let nv = self.n_vars();
        match (src, &self.config.boundary) {
            (StateSource::Trace(tr), _) => self.mesh.eval_trace(tr, w, nv, out),
            (StateSource::LeftBoundary, Boundary::Periodic) => {
                self.mesh.eval_trace(&self.mesh.trace_v_at_d(), w, nv, out)
            }
            (StateSource::RightBoundary, Boundary::Periodic) => {
                self.mesh.eval_trace(&self.mesh.trace_u_at_a(), w, nv, out)
            }
            (StateSource::LeftBoundary, Boundary::Dirichlet { left, .. }) => out[..nv].copy_from_slice(&left(t)[..nv]),
            (StateSource::RightBoundary, Boundary::Dirichlet { right, .. }) => {
                out[..nv].copy_from_slice(&right(t)[..nv])
            }
        }
    }

    fn flux_for(&self, kind: CouplingKind) -> &NumericalFlux {
        match kind {
            CouplingKind::SubcellPoint => &self.config.subcell_flux,
            _ => &self.config.surface_flux,
        }
    }

    /// `dw = rhs(t, w)`.
    pub fn rhs(&self, t: f64, w: &[f64], dw: &mut [f64]) -> Result<()> {
        let law = &self.config.law;
        let nv = law.n_vars();
        let n = self.len();
        if w.len() != n || dw.len() != n {
            return Err(Error::invalid(format!(
                "state has length {}, the mesh needs {n}",
                w.len()
            )));
        }
        let mut f = vec![0.0; n];
        for (i, (wi, fi)) in w.chunks_exact(nv).zip(f.chunks_exact_mut(nv)).enumerate() {
            law.flux(wi, fi)
                .map_err(|e| e.at(format!("node {i} (x = {})", self.node_x[i])))?;
        }

        dw.iter_mut().for_each(|v| *v = 0.0);
        for el in &self.mesh.elements {
            let d = el.operator.d();
            let range = el.offset * nv..(el.offset + el.len()) * nv;
            if self.config.volume_flux.is_flux_differencing() {
                self.flux_differencing(d, &w[range.clone()], &mut dw[range])?;
            } else {
                derivative_form(d, &f[range.clone()], &mut dw[range], nv);
            }
        }

        let mut wl = [0.0; MAX_VARS];
        let mut wr = [0.0; MAX_VARS];
        let mut fstar = [0.0; MAX_VARS];
        for cp in &self.mesh.couplings {
            self.source_state(&cp.left, t, w, &mut wl);
            self.source_state(&cp.right, t, w, &mut wr);
            self.flux_for(cp.kind)
                .eval(law, &wl[..nv], &wr[..nv], &mut fstar)
                .map_err(|e| e.at(format!("coupling at x = {}", cp.x)))?;
            for rc in &cp.receivers {
                let el = &self.mesh.elements[rc.element];
                let mut proj = [0.0; MAX_VARS];
                for (j, &e) in rc.weights.iter().enumerate() {
                    if e != 0.0 {
                        for k in 0..nv {
                            proj[k] += e * f[(el.offset + j) * nv + k];
                        }
                    }
                }
                for (j, &e) in rc.weights.iter().enumerate() {
                    if e != 0.0 {
                        let node = el.offset + j;
                        let s = rc.sign * e * self.p_inv[node];
                        for k in 0..nv {
                            dw[node * nv + k] += s * (fstar[k] - proj[k]);
                        }
                    }
                }
            }
        }

        if self.config.source != Source::None {
            for (i, dwi) in dw.chunks_exact_mut(nv).enumerate() {
                self.config.source.add(law, self.node_x[i], t, dwi);
            }
        }
        Ok(())
    }

    /// `dw_i -= 2 sum_j D_ij F(w_i, w_j)`, exploiting symmetry of `F`.
    fn flux_differencing(&self, d: &DMatrix<f64>, w: &[f64], dw: &mut [f64]) -> Result<()> {
        let law = &self.config.law;
        let nv = law.n_vars();
        let n = d.nrows();
        let mut fij = [0.0; MAX_VARS];
        for i in 0..n {
            let wi = &w[i * nv..(i + 1) * nv];
            law.flux(wi, &mut fij)?;
            for k in 0..nv {
                dw[i * nv + k] -= 2.0 * d[(i, i)] * fij[k];
            }
            for j in i + 1..n {
                let (dij, dji) = (d[(i, j)], d[(j, i)]);
                if dij == 0.0 && dji == 0.0 {
                    continue;
                }
                self.config
                    .volume_flux
                    .two_point(law, wi, &w[j * nv..(j + 1) * nv], &mut fij)?;
                for k in 0..nv {
                    dw[i * nv + k] -= 2.0 * dij * fij[k];
                    dw[j * nv + k] -= 2.0 * dji * fij[k];
                }
            }
        }
        Ok(())
    }

    /// Closure suitable for the time integrator.
    pub fn rhs_fn(&self) -> impl Fn(f64, &[f64], &mut [f64]) -> Result<()> + '_ {
        move |t, w, dw| self.rhs(t, w, dw)
    }

    /// Jacobian of the right-hand side at `(t, w)`: exact for linear laws
    /// without sources, central differences otherwise.
    pub fn jacobian(&self, t: f64, w: &[f64], epsilon: f64) -> Result<DMatrix<f64>> {
        if self.config.law.is_linear() && self.config.source == Source::None {
            self.linear_operator(t)
        } else {
            self.jacobian_fd(t, w, epsilon)
        }
    }

    /// Matrix of a linear scheme, assembled by applying the right-hand side
    /// (with zero boundary data) to unit vectors.
    pub fn linear_operator(&self, t: f64) -> Result<DMatrix<f64>> {
        if !self.config.law.is_linear() {
            return Err(Error::invalid(format!("{} is not linear", self.config.law.name())));
        }
        let n = self.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut col = vec![0.0; n];
        let mut e = vec![0.0; n];
        let homogeneous = self.homogeneous();
        for j in 0..n {
            e[j] = 1.0;
            homogeneous.rhs(t, &e, &mut col)?;
            jac.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        Ok(jac)
    }

    /// Central-difference Jacobian with step `epsilon * (1 + |w_j|)`.
    pub fn jacobian_fd(&self, t: f64, w: &[f64], epsilon: f64) -> Result<DMatrix<f64>> {
        let n = self.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut fm = vec![0.0; n];
        let mut fp = vec![0.0; n];
        let mut wp = w.to_vec();
        for j in 0..n {
            let h = epsilon * (1.0 + w[j].abs());
            wp[j] = w[j] + h;
            self.rhs(t, &wp, &mut fp)?;
            wp[j] = w[j] - h;
            self.rhs(t, &wp, &mut fm)?;
            wp[j] = w[j];
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    fn homogeneous(&self) -> Semidiscretization {
        let mut copy = self.clone();
        if let Boundary::Dirichlet { .. } = copy.config.boundary {
            let nv = self.n_vars();
            let zero: BoundaryFn = Arc::new(move |_| vec![0.0; nv]);
            copy.config.boundary = Boundary::Dirichlet {
                left: zero.clone(),
                right: zero,
            };
        }
        copy
    }

    /// Whether the flux used at the sub-cell points is fully upwind for
    /// every state pair it is evaluated on at `w`.
    pub fn subcell_coupling_is_upwind(&self, t: f64, w: &[f64]) -> bool {
        let nv = self.n_vars();
        let mut wl = [0.0; MAX_VARS];
        let mut wr = [0.0; MAX_VARS];
        self.mesh
            .couplings
            .iter()
            .filter(|c| c.kind == CouplingKind::SubcellPoint)
            .all(|c| {
                self.source_state(&c.left, t, w, &mut wl);
                self.source_state(&c.right, t, w, &mut wr);
                self.config
                    .subcell_flux
                    .is_fully_upwind(&self.config.law, &wl[..nv], &wr[..nv])
            })
    }
}

fn derivative_form(d: &DMatrix<f64>, f: &[f64], dw: &mut [f64], nv: usize) {
    let n = d.nrows();
    for i in 0..n {
        for j in 0..n {
            let dij = d[(i, j)];
            if dij == 0.0 {
                continue;
            }
            for k in 0..nv {
                dw[i * nv + k] -= dij * f[j * nv + k];
            }
        }
    }
}

/// Right-hand side of the single-block scheme with one operator per domain.
pub fn rhs_single_block(
    domain: OversetDomain,
    op_u: SubcellOperator,
    op_v: ElementOperator,
    config: SolverConfig,
    t: f64,
    state: &[f64],
) -> Result<Vec<f64>> {
    let sd = Semidiscretization::new(single_block(domain, op_u, op_v)?, config)?;
    let mut out = vec![0.0; sd.len()];
    sd.rhs(t, state, &mut out)?;
    Ok(out)
}

/// Right-hand side on a multi-element sub-cell mesh.
pub fn rhs_multiblock(mesh: &Arc<OversetMesh>, config: SolverConfig, t: f64, state: &[f64]) -> Result<Vec<f64>> {
    let sd = Semidiscretization::new(mesh.clone(), config)?;
    let mut out = vec![0.0; sd.len()];
    sd.rhs(t, state, &mut out)?;
    Ok(out)
}

/// Right-hand side on a baseline mesh; identical code path, the mesh's
/// couplings carry the donor interpolation.
pub fn rhs_baseline(mesh: &Arc<OversetMesh>, config: SolverConfig, t: f64, state: &[f64]) -> Result<Vec<f64>> {
    if mesh.mode != CouplingMode::Baseline {
        return Err(Error::invalid("rhs_baseline needs a baseline mesh"));
    }
    rhs_multiblock(mesh, config, t, state)
}
