//! Sub-cell SBP operators.
//!
//! A sub-cell operator on `[w_L, w_R]` with split point `w_M` mimics
//! integration by parts on the whole cell and on each of the sub-cells
//! `[w_L, w_M]` and `[w_M, w_R]`. Such an operator exists exactly when SBP
//! operators exist on both sub-cells, and it is then block diagonal; it is
//! built here by assembling two [`CellOperator`]s.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::function_space::{
    numerical_rank, vandermonde, vandermonde_at, vandermonde_derivative_at, FunctionSpace, NodeSet,
};
use crate::report::Report;
use crate::sbp_cell::{boundary_exactness_residual, dump_matrix, dump_vector, CellFamily, CellOperator};

/// How a projection vector is synthesised from the exactness conditions
/// `e^T f(x) = f(point)` for all basis functions `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Square system; requires exactly `K` nodes.
    Interpolation,
    /// Minimal Euclidean norm solution of the underdetermined system.
    MinNormLeastSquares,
}

const RANK_TOL: f64 = 1e-12;

/// Projection vector `e` on `nodes` with `e^T f(nodes) = f(point)` for
/// every basis function of `space`.
pub fn projection_vector(
    space: &FunctionSpace,
    nodes: &NodeSet,
    point: f64,
    mode: ProjectionMode,
) -> Result<DVector<f64>> {
    let (n, k) = (nodes.len(), space.dim());
    let unisolvent = Error::NotUnisolvent { nodes: n, dim: k };
    match mode {
        ProjectionMode::Interpolation if n != k => {
            return Err(Error::invalid(format!(
                "interpolation projection needs exactly {k} nodes, got {n}"
            )))
        }
        _ if n < k => return Err(unisolvent),
        _ => {}
    }
    let v = vandermonde(space, nodes);
    if numerical_rank(&v, RANK_TOL) < k {
        return Err(unisolvent);
    }
    let target = DVector::from_vec(space.eval_all(point));
    let vt = v.transpose();
    let e = match mode {
        ProjectionMode::Interpolation => vt.lu().solve(&target).ok_or(unisolvent)?,
        ProjectionMode::MinNormLeastSquares => vt.svd(true, true).solve(&target, 0.0).map_err(|_| unisolvent)?,
    };
    Ok(e)
}

/// Interpolation when the node count equals the space dimension, minimum
/// norm least squares otherwise.
pub fn default_projection(space: &FunctionSpace, nodes: &NodeSet, point: f64) -> Result<DVector<f64>> {
    let mode = if nodes.len() == space.dim() {
        ProjectionMode::Interpolation
    } else {
        ProjectionMode::MinNormLeastSquares
    };
    projection_vector(space, nodes, point, mode)
}

/// Residual tolerance used for operators of the given degree.
pub fn tolerance_for_degree(degree: usize) -> f64 {
    if degree <= 3 {
        1e-13
    } else {
        1e-11
    }
}

/// A sub-cell SBP operator. All matrices are `N x N` with
/// `N = n_left + n_right`; the first `n_left` nodes lie in the left
/// sub-cell.
#[derive(Debug, Clone)]
pub struct SubcellOperator {
    pub cell: (f64, f64),
    pub split: f64,
    pub x: Vec<f64>,
    pub n_left: usize,
    pub d: DMatrix<f64>,
    pub p_left: Vec<f64>,
    pub p_right: Vec<f64>,
    pub s_left: DMatrix<f64>,
    pub s_right: DMatrix<f64>,
    pub b_left: DMatrix<f64>,
    pub b_right: DMatrix<f64>,
    pub e_l: DVector<f64>,
    pub e_ml: DVector<f64>,
    pub e_mr: DVector<f64>,
    pub e_r: DVector<f64>,
    pub space: FunctionSpace,
    pub left_family: CellFamily,
    pub right_family: CellFamily,
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut m = DMatrix::zeros(na + nb, na + nb);
    m.view_mut((0, 0), (na, na)).copy_from(a);
    m.view_mut((na, na), (nb, nb)).copy_from(b);
    m
}

fn pad(v: &DVector<f64>, before: usize, after: usize) -> DVector<f64> {
    let mut out = DVector::zeros(before + v.len() + after);
    out.rows_mut(before, v.len()).copy_from(v);
    out
}

/// Assemble a sub-cell operator from SBP operators on two abutting cells.
pub fn assemble_subcell(left: &CellOperator, right: &CellOperator) -> Result<SubcellOperator> {
    let (wl, wm) = left.interval();
    let (wm_r, wr) = right.interval();
    let scale = (wr - wl).abs().max(1.0);
    if (wm - wm_r).abs() > 1e-12 * scale || !(wl < wm && wm_r < wr) {
        return Err(Error::NotAbutting {
            left_end: wm,
            right_start: wm_r,
        });
    }
    if !left.space.same_span(&right.space) {
        return Err(Error::SpaceMismatch {
            left: left.space.descriptor(),
            right: right.space.descriptor(),
        });
    }
    let (nl, nr) = (left.len(), right.len());

    let e_l = default_projection(&left.space, &left.nodes, wl)?;
    let e_ml = default_projection(&left.space, &left.nodes, wm)?;
    let e_mr = default_projection(&right.space, &right.nodes, wm)?;
    let e_r = default_projection(&right.space, &right.nodes, wr)?;

    let zl = DMatrix::zeros(nl, nl);
    let zr = DMatrix::zeros(nr, nr);
    let mut x = left.x().to_vec();
    x.extend_from_slice(right.x());

    Ok(SubcellOperator {
        cell: (wl, wr),
        split: wm,
        x,
        n_left: nl,
        d: block_diag(&left.d, &right.d),
        p_left: left.p.iter().cloned().chain(std::iter::repeat_n(0.0, nr)).collect(),
        p_right: std::iter::repeat_n(0.0, nl).chain(right.p.iter().cloned()).collect(),
        s_left: block_diag(&left.s(), &zr),
        s_right: block_diag(&zl, &right.s()),
        b_left: block_diag(&left.b, &zr),
        b_right: block_diag(&zl, &right.b),
        e_l: pad(&e_l, 0, nr),
        e_ml: pad(&e_ml, 0, nr),
        e_mr: pad(&e_mr, nl, 0),
        e_r: pad(&e_r, nl, 0),
        space: left.space.adapted_to(wl, wr),
        left_family: left.family,
        right_family: right.family,
    })
}

impl SubcellOperator {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_right(&self) -> usize {
        self.len() - self.n_left
    }

    pub fn p(&self) -> Vec<f64> {
        self.p_left.iter().zip(&self.p_right).map(|(a, b)| a + b).collect()
    }

    pub fn b(&self) -> DMatrix<f64> {
        &self.b_left + &self.b_right
    }

    pub fn s(&self) -> DMatrix<f64> {
        &self.s_left + &self.s_right
    }

    pub fn q_left(&self) -> DMatrix<f64> {
        diag_times(&self.p_left, &self.d)
    }

    pub fn q_right(&self) -> DMatrix<f64> {
        diag_times(&self.p_right, &self.d)
    }

    pub fn q(&self) -> DMatrix<f64> {
        diag_times(&self.p(), &self.d)
    }

    /// Re-wrap the left diagonal block as a cell operator.
    pub fn extract_left(&self) -> Result<CellOperator> {
        let n = self.n_left;
        let nodes = NodeSet::new(self.x[..n].to_vec(), self.cell.0, self.split)?;
        CellOperator::from_parts(
            nodes,
            self.p_left[..n].to_vec(),
            self.d.view((0, 0), (n, n)).into_owned(),
            self.e_l.rows(0, n).into_owned(),
            self.e_ml.rows(0, n).into_owned(),
            self.space.adapted_to(self.cell.0, self.split),
            self.left_family,
        )
    }

    /// Re-wrap the right diagonal block as a cell operator.
    pub fn extract_right(&self) -> Result<CellOperator> {
        let (o, n) = (self.n_left, self.n_right());
        let nodes = NodeSet::new(self.x[o..].to_vec(), self.split, self.cell.1)?;
        CellOperator::from_parts(
            nodes,
            self.p_right[o..].to_vec(),
            self.d.view((o, o), (n, n)).into_owned(),
            self.e_mr.rows(o, n).into_owned(),
            self.e_r.rows(o, n).into_owned(),
            self.space.adapted_to(self.split, self.cell.1),
            self.right_family,
        )
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# subcell-operator n_left={} n_right={} cell=[{:.16e}, {:.16e}] split={:.16e}",
            self.n_left,
            self.n_right(),
            self.cell.0,
            self.cell.1,
            self.split
        );
        dump_vector(&mut out, "nodes", &self.x);
        dump_vector(&mut out, "p_left", &self.p_left);
        dump_vector(&mut out, "p_right", &self.p_right);
        dump_matrix(&mut out, "D", &self.d);
        dump_matrix(&mut out, "S_left", &self.s_left);
        dump_matrix(&mut out, "S_right", &self.s_right);
        dump_matrix(&mut out, "B_left", &self.b_left);
        dump_matrix(&mut out, "B_right", &self.b_right);
        for (name, e) in [
            ("e_L", &self.e_l),
            ("e_ML", &self.e_ml),
            ("e_MR", &self.e_mr),
            ("e_R", &self.e_r),
        ] {
            dump_vector(&mut out, name, e.as_slice());
        }
        out
    }
}

fn diag_times(p: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| p[i] * m[(i, j)])
}

fn diag(p: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(p))
}

/// Max-abs residual of `f^T P (D g) + (D f)^T P g - f^T B g` over all basis
/// pairs.
fn sbp_identity_residual(p: &[f64], d: &DMatrix<f64>, b: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let pm = diag(p);
    let dv = d * v;
    let lhs = v.transpose() * &pm * &dv + dv.transpose() * &pm * v;
    (lhs - v.transpose() * b * v).amax()
}

fn support_violation(v: &[f64], allowed: std::ops::Range<usize>, positive: bool) -> Option<String> {
    for (i, &x) in v.iter().enumerate() {
        let inside = allowed.contains(&i);
        if inside && positive && !(x > 0.0) {
            return Some(format!("non-positive weight at index {i}"));
        }
        if !inside && x != 0.0 {
            return Some(format!("nonzero entry {x:e} at index {i}"));
        }
    }
    None
}

/// Evaluate conditions (i)–(v) of the sub-cell SBP definition, the sub-cell
/// SBP identities on all basis pairs, exactness of the projections, and the
/// structural conditions of [`structural_check`].
pub fn verify_subcell(op: &SubcellOperator, tol: f64) -> Report {
    let (wl, wr) = op.cell;
    let wm = op.split;
    let n = op.len();
    let nl = op.n_left;
    let mut report = Report::new(format!(
        "subcell {}|{} n={}+{} on [{wl}, {wm}, {wr}]",
        op.left_family.name(),
        op.right_family.name(),
        nl,
        op.n_right()
    ));

    let space = op.space.adapted_to(wl, wr);
    let v = vandermonde_at(&space, &op.x);
    let dv = vandermonde_derivative_at(&space, &op.x);
    let scale = dv.amax().max(1.0);
    report.residual("(i) derivative_exactness", (&op.d * &v - &dv).amax() / scale, tol);

    let left_support = support_violation(&op.p_left, 0..nl, true);
    report.condition("(ii) p_left_support", 0.0, left_support.is_none(), left_support);
    let right_support = support_violation(&op.p_right, nl..n, true);
    report.condition("(ii) p_right_support", 0.0, right_support.is_none(), right_support);

    let q_l = op.q_left();
    let q_r = op.q_right();
    report.residual("(iii) q_left_split", (&q_l - &op.s_left - &op.b_left * 0.5).amax(), tol);
    report.residual(
        "(iii) q_right_split",
        (&q_r - &op.s_right - &op.b_right * 0.5).amax(),
        tol,
    );
    report.residual("(iii) s_left_skew", (&op.s_left + op.s_left.transpose()).amax(), tol);
    report.residual("(iii) s_right_skew", (&op.s_right + op.s_right.transpose()).amax(), tol);
    report.residual(
        "(iii) b_left_symmetric",
        (&op.b_left - op.b_left.transpose()).amax(),
        tol,
    );
    report.residual(
        "(iii) b_right_symmetric",
        (&op.b_right - op.b_right.transpose()).amax(),
        tol,
    );

    report.residual(
        "(iv) b_left_exactness",
        boundary_exactness_residual(&op.b_left, &v, &space, wl, wm),
        tol,
    );
    report.residual(
        "(iv) b_right_exactness",
        boundary_exactness_residual(&op.b_right, &v, &space, wm, wr),
        tol,
    );

    report.residual("(v) q_additivity", (op.q() - (&q_l + &q_r)).amax(), tol);
    let p_sum: f64 = op
        .p()
        .iter()
        .zip(op.p_left.iter().zip(&op.p_right))
        .map(|(p, (a, b))| (p - a - b).abs())
        .fold(0.0, f64::max);
    report.residual("(v) p_additivity", p_sum, tol);

    report.residual(
        "sbp_identity_left",
        sbp_identity_residual(&op.p_left, &op.d, &op.b_left, &v),
        tol,
    );
    report.residual(
        "sbp_identity_right",
        sbp_identity_residual(&op.p_right, &op.d, &op.b_right, &v),
        tol,
    );

    let b_l_form = &op.e_ml * op.e_ml.transpose() - &op.e_l * op.e_l.transpose();
    let b_r_form = &op.e_r * op.e_r.transpose() - &op.e_mr * op.e_mr.transpose();
    report.residual("b_left_projection_form", (&op.b_left - b_l_form).amax(), tol);
    report.residual("b_right_projection_form", (&op.b_right - b_r_form).amax(), tol);

    let mut proj = 0.0_f64;
    for (e, point) in [(&op.e_l, wl), (&op.e_ml, wm), (&op.e_mr, wm), (&op.e_r, wr)] {
        let got = v.transpose() * e;
        let want = DVector::from_vec(space.eval_all(point));
        proj = proj.max((got - want).amax());
    }
    report.residual("projection_exactness", proj, tol);

    let quad = quadrature_residual(op, &space);
    report.residual("subcell_quadrature", quad, tol.max(1e-12));

    report.merge(structural_check(op));
    report
}

/// Each sub-cell norm integrates the basis over its own sub-cell.
fn quadrature_residual(op: &SubcellOperator, space: &FunctionSpace) -> f64 {
    // Integrals of Legendre-type bases are not available in closed form for
    // arbitrary bases; use a high-order Gauss-Lobatto rule on each sub-cell.
    let (xi, w) = crate::quadrature::gauss_lobatto(space.dim() + 8);
    let integrate = |k: usize, a: f64, b: f64| -> f64 {
        let jac = 0.5 * (b - a);
        xi.iter()
            .zip(&w)
            .map(|(s, w)| w * jac * space.eval(k, a + (s + 1.0) * jac))
            .sum()
    };
    let mut res = 0.0_f64;
    for k in 0..space.dim() {
        let vals: Vec<f64> = op.x.iter().map(|&x| space.eval(k, x)).collect();
        let ql: f64 = vals.iter().zip(&op.p_left).map(|(f, p)| f * p).sum();
        let qr: f64 = vals.iter().zip(&op.p_right).map(|(f, p)| f * p).sum();
        res = res
            .max((ql - integrate(k, op.cell.0, op.split)).abs())
            .max((qr - integrate(k, op.split, op.cell.1)).abs());
    }
    res
}

/// Residual matrices of the two existence equations
/// `S_L V + S_R V - P_L V' - P_R V' + B V / 2` and
/// `P_L S_R - P_R S_L + P_L B_R / 2 - P_R B_L / 2`.
pub fn existence_residuals(op: &SubcellOperator) -> (DMatrix<f64>, DMatrix<f64>) {
    let space = op.space.adapted_to(op.cell.0, op.cell.1);
    let v = vandermonde_at(&space, &op.x);
    let dv = vandermonde_derivative_at(&space, &op.x);
    let pl = diag(&op.p_left);
    let pr = diag(&op.p_right);
    let r1 = &op.s_left * &v + &op.s_right * &v - &pl * &dv - &pr * &dv + op.b() * &v * 0.5;
    let r2 = &pl * &op.s_right - &pr * &op.s_left + &pl * &op.b_right * 0.5 - &pr * &op.b_left * 0.5;
    (r1, r2)
}

fn block_max(m: &DMatrix<f64>, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> f64 {
    let mut out = 0.0_f64;
    for i in rows {
        for j in cols.clone() {
            out = out.max(m[(i, j)].abs());
        }
    }
    out
}

/// Block structure of the skew parts and one-sidedness of the projections.
pub fn structural_check(op: &SubcellOperator) -> Report {
    let n = op.len();
    let nl = op.n_left;
    let (lo, hi) = (0..nl, nl..n);
    let mut report = Report::new("structure");
    let scale = op.s().amax().max(1.0);
    let tol = 1e-14 * scale;
    let blocks = [
        ("s_left_12", &op.s_left, lo.clone(), hi.clone()),
        ("s_left_21", &op.s_left, hi.clone(), lo.clone()),
        ("s_left_22", &op.s_left, hi.clone(), hi.clone()),
        ("s_right_11", &op.s_right, lo.clone(), lo.clone()),
        ("s_right_12", &op.s_right, lo.clone(), hi.clone()),
        ("s_right_21", &op.s_right, hi.clone(), lo.clone()),
        ("d_12", &op.d, lo.clone(), hi.clone()),
        ("d_21", &op.d, hi.clone(), lo.clone()),
    ];
    for (name, m, rows, cols) in blocks {
        report.residual(&format!("block {name} = 0"), block_max(m, rows, cols), tol);
    }
    for (name, e, allowed) in [
        ("e_L", &op.e_l, lo.clone()),
        ("e_ML", &op.e_ml, lo.clone()),
        ("e_MR", &op.e_mr, hi.clone()),
        ("e_R", &op.e_r, hi.clone()),
    ] {
        let violation = support_violation(e.as_slice(), allowed, false);
        report.condition(
            &format!("support {name}"),
            0.0,
            violation.is_none(),
            violation.map(|v| format!("{name}: {v}")),
        );
    }
    report
}
