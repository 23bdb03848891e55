//! Discrete functionals over both meshes with the overlap counted once,
//! their time rates, errors, convergence orders and spectra.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::equations::{Law, MAX_VARS};
use crate::error::{Error, Result};
use crate::mesh::OversetMesh;

fn overset_weight_iter(mesh: &OversetMesh) -> impl Iterator<Item = f64> + '_ {
    mesh.overset_weights.iter().flatten().copied()
}

/// `I = 1^T P_ubar u + 1^T P_v v`, per variable.
pub fn overset_integral(mesh: &OversetMesh, state: &[f64], n_vars: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_vars];
    for (p, w) in overset_weight_iter(mesh).zip(state.chunks_exact(n_vars)) {
        for k in 0..n_vars {
            out[k] += p * w[k];
        }
    }
    out
}

/// Same functional written with the full u-norm minus its overlap part;
/// equal to [`overset_integral`] up to rounding.
pub fn overset_integral_three_term(mesh: &OversetMesh, state: &[f64], n_vars: usize) -> Vec<f64> {
    let mut full_u = vec![0.0; n_vars];
    let mut overlap_u = vec![0.0; n_vars];
    let mut v = vec![0.0; n_vars];
    let full = mesh.weights.iter().flatten();
    let bar = overset_weight_iter(mesh);
    let n_u_nodes: usize = mesh.u_elements().iter().map(|e| e.len()).sum();
    for (i, ((p, pb), w)) in full.zip(bar).zip(state.chunks_exact(n_vars)).enumerate() {
        for k in 0..n_vars {
            if i < n_u_nodes {
                full_u[k] += p * w[k];
                overlap_u[k] += (p - pb) * w[k];
            } else {
                v[k] += p * w[k];
            }
        }
    }
    (0..n_vars).map(|k| full_u[k] + v[k] - overlap_u[k]).collect()
}

/// `E = u^T P_ubar W u + v^T P_v W v` with the law's energy weights `W`.
pub fn overset_energy(mesh: &OversetMesh, law: &Law, state: &[f64]) -> f64 {
    let nv = law.n_vars();
    let wts = law.energy_weights();
    overset_weight_iter(mesh)
        .zip(state.chunks_exact(nv))
        .map(|(p, w)| p * (0..nv).map(|k| wts[k] * w[k] * w[k]).sum::<f64>())
        .sum()
}

/// `d/dt I` given the right-hand side at the state.
pub fn integral_rate(mesh: &OversetMesh, rhs: &[f64], n_vars: usize) -> Vec<f64> {
    overset_integral(mesh, rhs, n_vars)
}

/// `d/dt E = 2 (u^T P_ubar W u_t + v^T P_v W v_t)`.
pub fn energy_rate(mesh: &OversetMesh, law: &Law, state: &[f64], rhs: &[f64]) -> f64 {
    let nv = law.n_vars();
    let wts = law.energy_weights();
    2.0 * overset_weight_iter(mesh)
        .zip(state.chunks_exact(nv).zip(rhs.chunks_exact(nv)))
        .map(|(p, (w, dw))| p * (0..nv).map(|k| wts[k] * w[k] * dw[k]).sum::<f64>())
        .sum::<f64>()
}

/// Total entropy `sum p eta(w)` over both meshes, overlap once.
pub fn overset_entropy(mesh: &OversetMesh, law: &Law, state: &[f64]) -> Result<f64> {
    let nv = law.n_vars();
    let mut total = 0.0;
    for (p, w) in overset_weight_iter(mesh).zip(state.chunks_exact(nv)) {
        if p != 0.0 {
            total += p * law.entropy(w)?;
        }
    }
    Ok(total)
}

/// `d/dt sum p eta(w) = sum p eta'(w) . w_t`.
pub fn entropy_rate(mesh: &OversetMesh, law: &Law, state: &[f64], rhs: &[f64]) -> Result<f64> {
    let nv = law.n_vars();
    let mut v = [0.0; MAX_VARS];
    let mut total = 0.0;
    for (p, (w, dw)) in overset_weight_iter(mesh).zip(state.chunks_exact(nv).zip(rhs.chunks_exact(nv))) {
        if p != 0.0 {
            law.entropy_variables(w, &mut v)?;
            total += p * (0..nv).map(|k| v[k] * dw[k]).sum::<f64>();
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    Linf,
}

/// Per-variable error against `reference(x) -> state`: `L2` uses the
/// overset quadrature, `Linf` the nodal maximum over both meshes.
pub fn solution_error(
    mesh: &OversetMesh,
    state: &[f64],
    n_vars: usize,
    reference: impl Fn(f64) -> Vec<f64>,
    norm: Norm,
) -> Vec<f64> {
    let nodes = mesh.nodes();
    let mut out = vec![0.0; n_vars];
    for ((x, p), w) in nodes
        .iter()
        .zip(overset_weight_iter(mesh))
        .zip(state.chunks_exact(n_vars))
    {
        let r = reference(*x);
        for k in 0..n_vars {
            let e = w[k] - r[k];
            match norm {
                Norm::L2 => out[k] += p * e * e,
                Norm::Linf => out[k] = out[k].max(e.abs()),
            }
        }
    }
    if norm == Norm::L2 {
        out.iter_mut().for_each(|v| *v = v.sqrt());
    }
    out
}

/// Max-norm of the nodal values over both meshes, per variable.
pub fn max_norm(state: &[f64], n_vars: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; n_vars];
    for w in state.chunks_exact(n_vars) {
        for k in 0..n_vars {
            out[k] = out[k].max(w[k].abs());
        }
    }
    out
}

/// Experimental orders `log(e_{i-1} / e_i) / log(N_i / N_{i-1})`; `None`
/// where undefined. The first entry is always `None`.
pub fn eoc(errors: &[f64], resolutions: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None];
    for i in 1..errors.len().min(resolutions.len()) {
        let (e0, e1) = (errors[i - 1], errors[i]);
        let (n0, n1) = (resolutions[i - 1], resolutions[i]);
        out.push(if e0 > 0.0 && e1 > 0.0 && n1 != n0 && n0 > 0.0 && n1 > 0.0 {
            Some((e0 / e1).ln() / (n1 / n0).ln())
        } else {
            None
        });
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Eigenvalues as `(re, im)`, sorted by real part (descending).
    pub eigenvalues: Vec<(f64, f64)>,
    /// Largest real part.
    pub abscissa: f64,
}

/// All eigenvalues of a square matrix.
pub fn spectrum(j: &DMatrix<f64>) -> Result<Spectrum> {
    if !j.is_square() {
        return Err(Error::invalid("spectrum needs a square matrix"));
    }
    let n = j.nrows();
    let schur = nalgebra::linalg::Schur::try_new(j.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenFailure { n })?;
    let eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().cloned().collect();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure { n });
    }
    let mut eigenvalues: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    eigenvalues.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    let abscissa = eigenvalues.first().map(|e| e.0).unwrap_or(f64::NEG_INFINITY);
    Ok(Spectrum { eigenvalues, abscissa })
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub integral: Vec<f64>,
    pub energy: f64,
    pub energy_rate: f64,
    pub entropy: Option<f64>,
    pub entropy_rate: Option<f64>,
    pub max_norm: Vec<f64>,
    pub l2_error: Option<Vec<f64>>,
    pub linf_error: Option<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_overset_mesh, OversetDomain, SplitFamily};

    fn mesh(family: SplitFamily) -> OversetMesh {
        let dom = OversetDomain::new(-1.0, -0.1, 0.1, 1.0).unwrap();
        build_overset_mesh(dom, 5, 7, 3, family).unwrap()
    }

    #[test]
    fn integrals_of_simple_functions() {
        for family in [SplitFamily::Lobatto, SplitFamily::Radau] {
            let m = mesh(family);
            let ones = vec![1.0; m.n_nodes()];
            assert!((overset_integral(&m, &ones, 1)[0] - 2.0).abs() < 1e-13);
            assert!((overset_energy(&m, &Law::Advection { alpha: 1.0 }, &ones) - 2.0).abs() < 1e-13);
            let x = m.nodes();
            assert!(overset_integral(&m, &x, 1)[0].abs() < 1e-13);
            // Cubic: exact integral over [-1, 1].
            let f = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x + 0.7 * x * x * x;
            let vals: Vec<f64> = x.iter().map(|&x| f(x)).collect();
            let exact = 2.0 - 2.0;
            assert!((overset_integral(&m, &vals, 1)[0] - exact).abs() < 1e-12);
            let a = overset_integral(&m, &vals, 1)[0];
            let b = overset_integral_three_term(&m, &vals, 1)[0];
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_offset_error() {
        let m = mesh(SplitFamily::Lobatto);
        let delta = 1e-3;
        let state: Vec<f64> = m.nodes().iter().map(|x| x.sin() + delta).collect();
        let l2 = solution_error(&m, &state, 1, |x| vec![x.sin()], Norm::L2);
        assert!((l2[0] - delta * 2.0f64.sqrt()).abs() < 1e-14);
        let linf = solution_error(&m, &state, 1, |x| vec![x.sin()], Norm::Linf);
        assert!((linf[0] - delta).abs() < 1e-15);
        let exact: Vec<f64> = m.nodes().iter().map(|x| x.sin()).collect();
        assert_eq!(solution_error(&m, &exact, 1, |x| vec![x.sin()], Norm::L2)[0], 0.0);
    }

    #[test]
    fn eoc_examples() {
        let e = eoc(&[2.05e-05, 1.28e-06], &[10.0, 20.0]);
        assert!((e[1].unwrap() - 4.00).abs() < 0.005);
        let e = eoc(&[2.09e-07, 7.42e-09], &[10.0, 20.0]);
        assert!((e[1].unwrap() - 4.82).abs() < 0.005);
        assert_eq!(eoc(&[1.0, 1.0], &[10.0, 20.0])[1], Some(0.0));
        assert_eq!(eoc(&[1.0, 0.0], &[10.0, 20.0])[1], None);
    }

    #[test]
    fn skew_spectrum() {
        let mut a = DMatrix::zeros(6, 6);
        for i in 0..6 {
            for j in i + 1..6 {
                let v = (i as f64 + 1.0) * 0.3 - j as f64 * 0.1;
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        let s = spectrum(&a).unwrap();
        assert!(s.abscissa.abs() <= 1e-12);
        let trace: f64 = s.eigenvalues.iter().map(|e| e.0).sum();
        assert!(trace.abs() < 1e-12);
    }
}
