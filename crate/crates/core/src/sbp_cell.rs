//! Classical diagonal-norm SBP operators on a single cell.
//!
//! `D = P^{-1} Q` with `Q + Q^T = B`, built from Gauss–Lobatto or
//! Gauss–Radau quadrature and Lagrange differentiation. These are the
//! building blocks the sub-cell operators are assembled from.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::function_space::{vandermonde, vandermonde_derivative, FunctionSpace, NodeSet};
use crate::lagrange::{differentiation_matrix, lagrange_values};
use crate::quadrature::{gauss_lobatto, gauss_radau, RadauEnd};
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFamily {
    Lobatto,
    Radau(RadauEnd),
    Custom,
}

impl CellFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CellFamily::Lobatto => "lobatto",
            CellFamily::Radau(RadauEnd::Left) => "radau-left",
            CellFamily::Radau(RadauEnd::Right) => "radau-right",
            CellFamily::Custom => "custom",
        }
    }
}

/// An SBP operator on one cell.
#[derive(Debug, Clone)]
pub struct CellOperator {
    pub nodes: NodeSet,
    /// Diagonal of the norm matrix `P`.
    pub p: Vec<f64>,
    pub q: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// Projection to the left end of the cell, `e_left^T u ~ u(x_l)`.
    pub e_left: DVector<f64>,
    pub e_right: DVector<f64>,
    pub space: FunctionSpace,
    pub family: CellFamily,
}

impl CellOperator {
    /// Build `Q = P D` and `B = e_r e_r^T - e_l e_l^T` from the remaining
    /// parts. Nothing is verified here; see [`verify_cell_operator`].
    pub fn from_parts(
        nodes: NodeSet,
        p: Vec<f64>,
        d: DMatrix<f64>,
        e_left: DVector<f64>,
        e_right: DVector<f64>,
        space: FunctionSpace,
        family: CellFamily,
    ) -> Result<Self> {
        let n = nodes.len();
        if p.len() != n || d.shape() != (n, n) || e_left.len() != n || e_right.len() != n {
            return Err(Error::invalid("cell operator parts have inconsistent sizes"));
        }
        let q = DMatrix::from_fn(n, n, |i, j| p[i] * d[(i, j)]);
        let b = &e_right * e_right.transpose() - &e_left * e_left.transpose();
        Ok(Self {
            nodes,
            p,
            q,
            b,
            d,
            e_left,
            e_right,
            space,
            family,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.nodes.interval()
    }

    pub fn x(&self) -> &[f64] {
        self.nodes.nodes()
    }

    /// Skew-symmetric part `S = Q - B/2`.
    pub fn s(&self) -> DMatrix<f64> {
        &self.q - &self.b * 0.5
    }

    /// Plain-text dump, row-major, 17 significant digits.
    pub fn dump(&self) -> String {
        let (l, r) = self.interval();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# cell-operator family={} n={} interval=[{:.16e}, {:.16e}]",
            self.family.name(),
            self.len(),
            l,
            r
        );
        dump_vector(&mut out, "nodes", self.x());
        dump_vector(&mut out, "p", &self.p);
        dump_matrix(&mut out, "D", &self.d);
        dump_matrix(&mut out, "Q", &self.q);
        dump_matrix(&mut out, "B", &self.b);
        dump_vector(&mut out, "e_left", self.e_left.as_slice());
        dump_vector(&mut out, "e_right", self.e_right.as_slice());
        out
    }
}

pub(crate) fn dump_vector(out: &mut String, name: &str, v: &[f64]) {
    let _ = writeln!(out, "{name}");
    let row: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
    let _ = writeln!(out, "{}", row.join(" "));
}

pub(crate) fn dump_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// Map reference nodes on `[-1, 1]` to `[l, r]`, pinning the end points.
fn map_nodes(xi: &[f64], l: f64, r: f64) -> Vec<f64> {
    xi.iter()
        .map(|&s| {
            if s == -1.0 {
                l
            } else if s == 1.0 {
                r
            } else {
                l + 0.5 * (s + 1.0) * (r - l)
            }
        })
        .collect()
}

fn check_cell(cell: (f64, f64)) -> Result<()> {
    if !(cell.0 < cell.1) || !cell.0.is_finite() || !cell.1.is_finite() {
        return Err(Error::invalid(format!(
            "cell [{}, {}] is not a finite non-empty interval",
            cell.0, cell.1
        )));
    }
    Ok(())
}

fn from_reference_rule(
    xi: &[f64],
    w: &[f64],
    degree: usize,
    cell: (f64, f64),
    family: CellFamily,
) -> Result<CellOperator> {
    let (l, r) = cell;
    let jac = 0.5 * (r - l);
    let x = map_nodes(xi, l, r);
    let p = w.iter().map(|w| w * jac).collect();
    let d = differentiation_matrix(xi) / jac;
    let e_left = lagrange_values(xi, -1.0);
    let e_right = lagrange_values(xi, 1.0);
    let nodes = NodeSet::new(x, l, r)?;
    let space = FunctionSpace::polynomial_on(degree, l, r);
    CellOperator::from_parts(nodes, p, d, e_left, e_right, space, family)
}

/// `P_d`-exact operator on `d + 1` Gauss–Lobatto nodes of `cell`.
pub fn gauss_lobatto_operator(degree: usize, cell: (f64, f64)) -> Result<CellOperator> {
    if degree == 0 {
        return Err(Error::invalid("Gauss-Lobatto operators need degree >= 1"));
    }
    check_cell(cell)?;
    let (xi, w) = gauss_lobatto(degree + 1);
    from_reference_rule(&xi, &w, degree, cell, CellFamily::Lobatto)
}

/// `P_d`-exact operator on `d + 1` Gauss–Radau nodes of `cell` including
/// `fixed_end`. The projection to the free end extrapolates the Lagrange
/// interpolant, so `B` is exact on `P_d` although it is not diagonal.
pub fn gauss_radau_operator(degree: usize, cell: (f64, f64), fixed_end: RadauEnd) -> Result<CellOperator> {
    if degree == 0 {
        return Err(Error::invalid("Gauss-Radau operators need degree >= 1"));
    }
    check_cell(cell)?;
    let (xi, w) = gauss_radau(degree + 1, fixed_end);
    from_reference_rule(&xi, &w, degree, cell, CellFamily::Radau(fixed_end))
}

pub(crate) fn boundary_exactness_residual(
    b: &DMatrix<f64>,
    v: &DMatrix<f64>,
    space: &FunctionSpace,
    left: f64,
    right: f64,
) -> f64 {
    let btv = v.transpose() * b * v;
    let fl = space.eval_all(left);
    let fr = space.eval_all(right);
    let mut res = 0.0_f64;
    for k in 0..space.dim() {
        for m in 0..space.dim() {
            let exact = fr[k] * fr[m] - fl[k] * fl[m];
            res = res.max((btv[(k, m)] - exact).abs());
        }
    }
    res
}

/// Check positivity of `P`, `Q + Q^T = B`, `D V = V'`, and exactness of
/// `B` on all basis pairs.
pub fn verify_cell_operator(op: &CellOperator, tol: f64) -> Report {
    let (l, r) = op.interval();
    let mut report = Report::new(format!("{} cell n={} on [{l}, {r}]", op.family.name(), op.len()));
    let min_p = op.p.iter().cloned().fold(f64::INFINITY, f64::min);
    let detail = if min_p > 0.0 {
        None
    } else {
        op.p.iter()
            .position(|&p| !(p > 0.0))
            .map(|i| format!("non-positive weight at index {i}"))
    };
    report.condition("norm_positive", min_p, min_p > 0.0, detail);

    let sym = (&op.q + op.q.transpose() - &op.b).amax();
    report.residual("q_plus_qt_minus_b", sym, tol);

    let space = op.space.adapted_to(l, r);
    let v = vandermonde(&space, &op.nodes);
    let dv = vandermonde_derivative(&space, &op.nodes);
    let scale = dv.amax().max(1.0);
    report.residual("derivative_exactness", (&op.d * &v - &dv).amax() / scale, tol);

    report.residual(
        "boundary_exactness",
        boundary_exactness_residual(&op.b, &v, &space, l, r),
        tol,
    );
    report
}
