//! Overlapping element meshes on `[a, c]` and `[b, d]`.
//!
//! The element of the u-mesh containing `b` and the element of the v-mesh
//! containing `c` carry sub-cell operators split exactly at those points;
//! all other elements carry Gauss–Lobatto operators. The mesh also records
//! every place where a numerical flux is evaluated (a [`Coupling`]) and which
//! element receives the resulting SAT.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrange::lagrange_values;
use crate::quadrature::RadauEnd;
use crate::sbp_cell::{gauss_lobatto_operator, gauss_radau_operator, CellFamily, CellOperator};
use crate::subcell::{assemble_subcell, SubcellOperator};

/// `Omega_u = [a, c]`, `Omega_v = [b, d]`, overlap `[b, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OversetDomain {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl OversetDomain {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let dom = Self { a, b, c, d };
        dom.validate()?;
        Ok(dom)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.a, self.b, self.c, self.d].iter().all(|x| x.is_finite())
            && self.a < self.b
            && self.b < self.c
            && self.c < self.d;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "overset domain needs a < b < c < d, got ({}, {}, {}, {})",
                self.a, self.b, self.c, self.d
            )))
        }
    }

    pub fn length(&self) -> f64 {
        self.d - self.a
    }
}

/// Family of the sub-cell operators placed at `b` and `c`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitFamily {
    #[default]
    Lobatto,
    Radau,
}

#[derive(Debug, Clone)]
pub enum ElementOperator {
    Cell(CellOperator),
    Subcell(SubcellOperator),
}

impl ElementOperator {
    pub fn len(&self) -> usize {
        match self {
            ElementOperator::Cell(op) => op.len(),
            ElementOperator::Subcell(op) => op.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self) -> &[f64] {
        match self {
            ElementOperator::Cell(op) => op.x(),
            ElementOperator::Subcell(op) => &op.x,
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        match self {
            ElementOperator::Cell(op) => op.interval(),
            ElementOperator::Subcell(op) => op.cell,
        }
    }

    pub fn d(&self) -> &nalgebra::DMatrix<f64> {
        match self {
            ElementOperator::Cell(op) => &op.d,
            ElementOperator::Subcell(op) => &op.d,
        }
    }

    /// Full norm diagonal.
    pub fn p(&self) -> Vec<f64> {
        match self {
            ElementOperator::Cell(op) => op.p.clone(),
            ElementOperator::Subcell(op) => op.p(),
        }
    }

    pub fn e_left(&self) -> &DVector<f64> {
        match self {
            ElementOperator::Cell(op) => &op.e_left,
            ElementOperator::Subcell(op) => &op.e_l,
        }
    }

    pub fn e_right(&self) -> &DVector<f64> {
        match self {
            ElementOperator::Cell(op) => &op.e_right,
            ElementOperator::Subcell(op) => &op.e_r,
        }
    }

    pub fn split(&self) -> Option<f64> {
        match self {
            ElementOperator::Cell(_) => None,
            ElementOperator::Subcell(op) => Some(op.split),
        }
    }

    /// Whether every block has nodes at both of its ends, so that the
    /// projections are unit vectors (needed for flux differencing).
    pub fn is_lobatto(&self) -> bool {
        match self {
            ElementOperator::Cell(op) => op.family == CellFamily::Lobatto,
            ElementOperator::Subcell(op) => {
                op.left_family == CellFamily::Lobatto && op.right_family == CellFamily::Lobatto
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ElementOperator::Cell(_) => "cell",
            ElementOperator::Subcell(_) => "subcell",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshId {
    U,
    V,
}

impl MeshId {
    pub fn name(&self) -> &'static str {
        match self {
            MeshId::U => "u",
            MeshId::V => "v",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Element {
    pub mesh: MeshId,
    pub operator: ElementOperator,
    /// First node slot of this element in the global node ordering.
    pub offset: usize,
}

impl Element {
    pub fn len(&self) -> usize {
        self.operator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operator.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.operator.interval()
    }
}

/// A linear functional `weights^T w` of the nodal values of one element.
#[derive(Debug, Clone)]
pub struct Trace {
    pub element: usize,
    pub weights: DVector<f64>,
}

/// Where the left or right argument of a numerical flux comes from.
#[derive(Debug, Clone)]
pub enum StateSource {
    Trace(Trace),
    /// `g_L`; for periodic problems the v-mesh trace at `d`.
    LeftBoundary,
    /// `g_R`; for periodic problems the u-mesh trace at `a`.
    RightBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// Between elements of one mesh.
    Interface,
    /// Physical boundary `a` or `d`.
    Boundary,
    /// Coupling at `b` or `c`. These must be evaluated with a fully upwind
    /// flux for the scheme to be conservative.
    SubcellPoint,
    /// Coupling to the other mesh through interpolation of a whole donor
    /// element, as in the baseline method.
    Interpolated,
}

/// A SAT `sign * P^{-1} weights (f* - weights^T f)` added to one element.
#[derive(Debug, Clone)]
pub struct Receiver {
    pub element: usize,
    pub weights: DVector<f64>,
    pub sign: f64,
}

/// One evaluation of `f*(left, right)` and the SATs fed by it.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub x: f64,
    pub kind: CouplingKind,
    pub left: StateSource,
    pub right: StateSource,
    pub receivers: Vec<Receiver>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMode {
    Subcell,
    Baseline,
}

/// Which of the two points receive a sub-cell operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Splits {
    pub at_b: bool,
    pub at_c: bool,
}

impl Default for Splits {
    fn default() -> Self {
        Self { at_b: true, at_c: true }
    }
}

#[derive(Debug, Clone)]
pub struct OversetMesh {
    pub domain: OversetDomain,
    pub mode: CouplingMode,
    pub elements: Vec<Element>,
    /// Number of u-mesh elements; they come first in `elements`.
    pub n_u: usize,
    pub couplings: Vec<Coupling>,
    /// Index of the u-element split at `b`, if any.
    pub split_b: Option<usize>,
    /// Index of the v-element split at `c`, if any.
    pub split_c: Option<usize>,
    /// Per element, the norm restricted to `[a, b]` on the u-mesh and the
    /// full norm on the v-mesh; this counts the overlap exactly once.
    pub overset_weights: Vec<Vec<f64>>,
    /// Per element, the full norm.
    pub weights: Vec<Vec<f64>>,
    n_nodes: usize,
}

fn uniform_breaks(l: f64, r: f64, n: usize) -> Vec<f64> {
    let h = (r - l) / n as f64;
    let mut x: Vec<f64> = (0..=n).map(|i| l + i as f64 * h).collect();
    x[n] = r;
    x
}

/// Index of the element containing `p`, or `Err(i)` if `p` coincides with
/// break `i` within `1e-12` of the local element length.
fn locate(breaks: &[f64], p: f64) -> std::result::Result<usize, usize> {
    for (i, w) in breaks.windows(2).enumerate() {
        let tol = 1e-12 * (w[1] - w[0]);
        if (p - w[0]).abs() <= tol {
            return Err(i);
        }
        if (p - w[1]).abs() <= tol {
            return Err(i + 1);
        }
        if p > w[0] && p < w[1] {
            return Ok(i);
        }
    }
    Err(usize::MAX)
}

fn split_operator(degree: usize, l: f64, m: f64, r: f64, family: SplitFamily) -> Result<SubcellOperator> {
    let (left, right) = match family {
        SplitFamily::Lobatto => (
            gauss_lobatto_operator(degree, (l, m))?,
            gauss_lobatto_operator(degree, (m, r))?,
        ),
        SplitFamily::Radau => (
            gauss_radau_operator(degree, (l, m), RadauEnd::Left)?,
            gauss_radau_operator(degree, (m, r), RadauEnd::Right)?,
        ),
    };
    assemble_subcell(&left, &right)
}

fn mesh_operators(breaks: &[f64], degree: usize, split: Option<(f64, SplitFamily)>) -> Result<Vec<ElementOperator>> {
    let target = split.and_then(|(p, _)| locate(breaks, p).ok());
    breaks
        .windows(2)
        .enumerate()
        .map(|(i, w)| match (target, split) {
            (Some(t), Some((p, family))) if t == i => {
                split_operator(degree, w[0], p, w[1], family).map(ElementOperator::Subcell)
            }
            _ => gauss_lobatto_operator(degree, (w[0], w[1])).map(ElementOperator::Cell),
        })
        .collect()
}

/// Sub-cell overset mesh with uniform partitions of `[a, c]` and `[b, d]`
/// and both splits.
pub fn build_overset_mesh(
    domain: OversetDomain,
    n_u: usize,
    n_v: usize,
    degree: usize,
    family: SplitFamily,
) -> Result<OversetMesh> {
    build_overset_mesh_with(domain, n_u, n_v, degree, family, Splits::default())
}

/// As [`build_overset_mesh`], choosing which of `b` and `c` are split. An
/// unsplit point is coupled through interpolation on the donor element.
pub fn build_overset_mesh_with(
    domain: OversetDomain,
    n_u: usize,
    n_v: usize,
    degree: usize,
    family: SplitFamily,
    splits: Splits,
) -> Result<OversetMesh> {
    check_sizes(&domain, n_u, n_v, degree)?;
    let bu = uniform_breaks(domain.a, domain.c, n_u);
    let bv = uniform_breaks(domain.b, domain.d, n_v);
    let u = mesh_operators(&bu, degree, splits.at_b.then_some((domain.b, family)))?;
    let v = mesh_operators(&bv, degree, splits.at_c.then_some((domain.c, family)))?;
    OversetMesh::from_operators(domain, u, v, CouplingMode::Subcell)
}

/// Gauss–Lobatto elements everywhere, coupled by interpolating the
/// solution on the donor element containing `b` (resp. `c`).
pub fn baseline_overset_mesh(domain: OversetDomain, n_u: usize, n_v: usize, degree: usize) -> Result<OversetMesh> {
    check_sizes(&domain, n_u, n_v, degree)?;
    let bu = uniform_breaks(domain.a, domain.c, n_u);
    let bv = uniform_breaks(domain.b, domain.d, n_v);
    let u = mesh_operators(&bu, degree, None)?;
    let v = mesh_operators(&bv, degree, None)?;
    OversetMesh::from_operators(domain, u, v, CouplingMode::Baseline)
}

/// One element per mesh: `op_u` must be split at `b`; `op_v` may be a cell
/// operator or split at `c`.
pub fn single_block(domain: OversetDomain, op_u: SubcellOperator, op_v: ElementOperator) -> Result<OversetMesh> {
    OversetMesh::from_operators(
        domain,
        vec![ElementOperator::Subcell(op_u)],
        vec![op_v],
        CouplingMode::Subcell,
    )
}

fn check_sizes(domain: &OversetDomain, n_u: usize, n_v: usize, degree: usize) -> Result<()> {
    domain.validate()?;
    if n_u == 0 || n_v == 0 {
        return Err(Error::invalid("each mesh needs at least one element"));
    }
    if degree == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    Ok(())
}

fn unit_trace(element: usize, weights: &DVector<f64>) -> StateSource {
    StateSource::Trace(Trace {
        element,
        weights: weights.clone(),
    })
}

impl OversetMesh {
    /// Build couplings for given element operators. The u-operators must
    /// partition `[a, c]` and the v-operators `[b, d]`, in order.
    pub fn from_operators(
        domain: OversetDomain,
        u_ops: Vec<ElementOperator>,
        v_ops: Vec<ElementOperator>,
        mode: CouplingMode,
    ) -> Result<Self> {
        domain.validate()?;
        check_partition(&u_ops, domain.a, domain.c, "u")?;
        check_partition(&v_ops, domain.b, domain.d, "v")?;
        let n_u = u_ops.len();
        let mut elements = Vec::with_capacity(n_u + v_ops.len());
        let mut offset = 0;
        for (mesh, op) in u_ops
            .into_iter()
            .map(|op| (MeshId::U, op))
            .chain(v_ops.into_iter().map(|op| (MeshId::V, op)))
        {
            let n = op.len();
            elements.push(Element {
                mesh,
                operator: op,
                offset,
            });
            offset += n;
        }
        let n_el = elements.len();
        let scale = domain.length().max(1.0);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * scale;

        let find_split = |range: std::ops::Range<usize>, p: f64| {
            range
                .clone()
                .find(|&i| elements[i].operator.split().is_some_and(|s| close(s, p)))
        };
        let split_b = find_split(0..n_u, domain.b);
        let split_c = find_split(n_u..n_el, domain.c);
        if mode == CouplingMode::Baseline && (split_b.is_some() || split_c.is_some()) {
            return Err(Error::invalid("baseline meshes carry no sub-cell operators"));
        }

        let mut couplings = Vec::new();
        let interface = |kind, x, l: usize, r: usize, els: &[Element]| Coupling {
            x,
            kind,
            left: unit_trace(l, els[l].operator.e_right()),
            right: unit_trace(r, els[r].operator.e_left()),
            receivers: vec![
                Receiver {
                    element: l,
                    weights: els[l].operator.e_right().clone(),
                    sign: -1.0,
                },
                Receiver {
                    element: r,
                    weights: els[r].operator.e_left().clone(),
                    sign: 1.0,
                },
            ],
        };

        // Internal faces of both meshes.
        let sub = mode == CouplingMode::Subcell;
        for range in [0..n_u, n_u..n_el] {
            for i in range.start..range.end.saturating_sub(1) {
                let x = elements[i].interval().1;
                let at_point = if elements[i].mesh == MeshId::U {
                    close(x, domain.b)
                } else {
                    close(x, domain.c)
                };
                let kind = if sub && at_point {
                    CouplingKind::SubcellPoint
                } else {
                    CouplingKind::Interface
                };
                couplings.push(interface(kind, x, i, i + 1, &elements));
            }
        }

        // Faces inside the split elements.
        for e in [split_b, split_c].into_iter().flatten() {
            if let ElementOperator::Subcell(op) = &elements[e].operator {
                couplings.push(Coupling {
                    x: op.split,
                    kind: CouplingKind::SubcellPoint,
                    left: unit_trace(e, &op.e_ml),
                    right: unit_trace(e, &op.e_mr),
                    receivers: vec![
                        Receiver {
                            element: e,
                            weights: op.e_ml.clone(),
                            sign: -1.0,
                        },
                        Receiver {
                            element: e,
                            weights: op.e_mr.clone(),
                            sign: 1.0,
                        },
                    ],
                });
            }
        }

        // Physical boundaries.
        couplings.push(Coupling {
            x: domain.a,
            kind: CouplingKind::Boundary,
            left: StateSource::LeftBoundary,
            right: unit_trace(0, elements[0].operator.e_left()),
            receivers: vec![Receiver {
                element: 0,
                weights: elements[0].operator.e_left().clone(),
                sign: 1.0,
            }],
        });
        let last = n_el - 1;
        couplings.push(Coupling {
            x: domain.d,
            kind: CouplingKind::Boundary,
            left: unit_trace(last, elements[last].operator.e_right()),
            right: StateSource::RightBoundary,
            receivers: vec![Receiver {
                element: last,
                weights: elements[last].operator.e_right().clone(),
                sign: -1.0,
            }],
        });

        // v-mesh left boundary at b takes u from the left of b.
        let (u_at_b, kind_b) = one_sided_trace(&elements, 0..n_u, domain.b, Side::Left, sub, &close)?;
        couplings.push(Coupling {
            x: domain.b,
            kind: kind_b,
            left: StateSource::Trace(u_at_b),
            right: unit_trace(n_u, elements[n_u].operator.e_left()),
            receivers: vec![Receiver {
                element: n_u,
                weights: elements[n_u].operator.e_left().clone(),
                sign: 1.0,
            }],
        });
        // u-mesh right boundary at c takes v from the right of c.
        let u_last = n_u - 1;
        let (v_at_c, kind_c) = one_sided_trace(&elements, n_u..n_el, domain.c, Side::Right, sub, &close)?;
        couplings.push(Coupling {
            x: domain.c,
            kind: kind_c,
            left: unit_trace(u_last, elements[u_last].operator.e_right()),
            right: StateSource::Trace(v_at_c),
            receivers: vec![Receiver {
                element: u_last,
                weights: elements[u_last].operator.e_right().clone(),
                sign: -1.0,
            }],
        });

        let weights: Vec<Vec<f64>> = elements.iter().map(|e| e.operator.p()).collect();
        let overset_weights = elements
            .iter()
            .zip(&weights)
            .enumerate()
            .map(|(i, (e, p))| overset_part(i, e, p, split_b, &domain, &close))
            .collect();

        Ok(Self {
            domain,
            mode,
            elements,
            n_u,
            couplings,
            split_b,
            split_c,
            overset_weights,
            weights,
            n_nodes: offset,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn u_elements(&self) -> &[Element] {
        &self.elements[..self.n_u]
    }

    pub fn v_elements(&self) -> &[Element] {
        &self.elements[self.n_u..]
    }

    /// Node coordinates in slot order.
    pub fn nodes(&self) -> Vec<f64> {
        self.elements
            .iter()
            .flat_map(|e| e.operator.x().iter().cloned())
            .collect()
    }

    /// Whether flux differencing can be used on every element.
    pub fn is_lobatto(&self) -> bool {
        self.elements.iter().all(|e| e.operator.is_lobatto())
    }

    /// Linear functional evaluating the u-mesh at `a` (used as `g_R` for
    /// periodic problems).
    pub fn trace_u_at_a(&self) -> Trace {
        Trace {
            element: 0,
            weights: self.elements[0].operator.e_left().clone(),
        }
    }

    /// Linear functional evaluating the v-mesh at `d` (used as `g_L` for
    /// periodic problems).
    pub fn trace_v_at_d(&self) -> Trace {
        let last = self.elements.len() - 1;
        Trace {
            element: last,
            weights: self.elements[last].operator.e_right().clone(),
        }
    }

    /// Find the coupling at `x` of the given kind.
    pub fn coupling_at(&self, x: f64, kind: CouplingKind) -> Option<&Coupling> {
        let tol = 1e-12 * self.domain.length().max(1.0);
        self.couplings.iter().find(|c| c.kind == kind && (c.x - x).abs() <= tol)
    }

    /// Evaluate a trace of a state with `n_vars` components per node.
    pub fn eval_trace(&self, trace: &Trace, state: &[f64], n_vars: usize, out: &mut [f64]) {
        let el = &self.elements[trace.element];
        out[..n_vars].iter_mut().for_each(|o| *o = 0.0);
        for (i, wgt) in trace.weights.iter().enumerate() {
            if *wgt == 0.0 {
                continue;
            }
            let base = (el.offset + i) * n_vars;
            for k in 0..n_vars {
                out[k] += wgt * state[base + k];
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// Trace of one mesh at `p` seen from `side` of `p`: the one-sided
/// projection of a sub-cell element, the end of the element abutting `p`,
/// or interpolation on the element containing `p`.
fn one_sided_trace(
    elements: &[Element],
    range: std::ops::Range<usize>,
    p: f64,
    side: Side,
    subcell_mode: bool,
    close: &dyn Fn(f64, f64) -> bool,
) -> Result<(Trace, CouplingKind)> {
    let point_kind = if subcell_mode {
        CouplingKind::SubcellPoint
    } else {
        CouplingKind::Interpolated
    };
    for i in range.clone() {
        let op = &elements[i].operator;
        let (l, r) = op.interval();
        if let ElementOperator::Subcell(s) = op {
            if close(s.split, p) {
                let weights = if side == Side::Left {
                    s.e_ml.clone()
                } else {
                    s.e_mr.clone()
                };
                return Ok((Trace { element: i, weights }, point_kind));
            }
        }
        let abut = match side {
            Side::Left => close(r, p),
            Side::Right => close(l, p),
        };
        if abut {
            let weights = if side == Side::Left {
                op.e_right().clone()
            } else {
                op.e_left().clone()
            };
            return Ok((Trace { element: i, weights }, point_kind));
        }
    }
    for i in range {
        let op = &elements[i].operator;
        let (l, r) = op.interval();
        if p > l && p < r {
            let weights = lagrange_values(op.x(), p);
            return Ok((Trace { element: i, weights }, CouplingKind::Interpolated));
        }
    }
    Err(Error::invalid(format!("point {p} lies outside the mesh")))
}

fn overset_part(
    i: usize,
    e: &Element,
    p: &[f64],
    split_b: Option<usize>,
    domain: &OversetDomain,
    close: &dyn Fn(f64, f64) -> bool,
) -> Vec<f64> {
    if e.mesh == MeshId::V {
        return p.to_vec();
    }
    if Some(i) == split_b {
        if let ElementOperator::Subcell(s) = &e.operator {
            return s.p_left.clone();
        }
    }
    let (_, r) = e.interval();
    if r < domain.b || close(r, domain.b) {
        return p.to_vec();
    }
    let (l, _) = e.interval();
    if l < domain.b && !close(l, domain.b) {
        // Unsplit donor element straddling b (baseline): count it fully.
        return p.to_vec();
    }
    vec![0.0; p.len()]
}

fn check_partition(ops: &[ElementOperator], l: f64, r: f64, name: &str) -> Result<()> {
    if ops.is_empty() {
        return Err(Error::invalid(format!("{name}-mesh has no elements")));
    }
    let tol = 1e-12 * (r - l).abs().max(1.0);
    let mut x = l;
    for op in ops {
        let (a, b) = op.interval();
        if (a - x).abs() > tol {
            return Err(Error::invalid(format!(
                "{name}-mesh elements do not partition [{l}, {r}]: gap or overlap at {x}"
            )));
        }
        x = b;
    }
    if (x - r).abs() > tol {
        return Err(Error::invalid(format!("{name}-mesh ends at {x}, expected {r}")));
    }
    Ok(())
}

impl fmt::Display for OversetMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dm = &self.domain;
        writeln!(
            f,
            "overset mesh ({:?}): a={} b={} c={} d={}, {} nodes",
            self.mode, dm.a, dm.b, dm.c, dm.d, self.n_nodes
        )?;
        for (i, e) in self.elements.iter().enumerate() {
            let (l, r) = e.interval();
            write!(
                f,
                "  {}[{:>3}] [{:>10.6}, {:>10.6}] {:<7} n={}",
                e.mesh.name(),
                i,
                l,
                r,
                e.operator.kind(),
                e.len()
            )?;
            if let Some(s) = e.operator.split() {
                write!(f, " split={s}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subcell::verify_subcell;

    fn paper_domain() -> OversetDomain {
        OversetDomain::new(-1.0, -0.1, 0.1, 1.0).unwrap()
    }

    #[test]
    fn splits_land_on_b_and_c() {
        let mesh = build_overset_mesh(paper_domain(), 9, 10, 3, SplitFamily::Lobatto).unwrap();
        let sb = mesh.split_b.unwrap();
        let sc = mesh.split_c.unwrap();
        assert!(sb < mesh.n_u && sc >= mesh.n_u);
        assert!((mesh.elements[sb].operator.split().unwrap() + 0.1).abs() < 1e-14);
        assert!((mesh.elements[sc].operator.split().unwrap() - 0.1).abs() < 1e-14);
        let n_sub = mesh
            .elements
            .iter()
            .filter(|e| matches!(e.operator, ElementOperator::Subcell(_)))
            .count();
        assert_eq!(n_sub, 2);
    }

    #[test]
    fn total_quadrature() {
        for (n_u, n_v) in [(1, 1), (9, 10), (4, 7)] {
            let mesh = build_overset_mesh(paper_domain(), n_u, n_v, 3, SplitFamily::Radau).unwrap();
            let su: f64 = mesh.u_elements().iter().flat_map(|e| e.operator.p()).sum();
            let sv: f64 = mesh.v_elements().iter().flat_map(|e| e.operator.p()).sum();
            assert!((su - 1.1).abs() < 1e-12 && (sv - 1.1).abs() < 1e-12);
            let so: f64 = mesh.overset_weights.iter().flatten().sum();
            assert!((so - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_element_meshes_verify() {
        let mesh = build_overset_mesh(paper_domain(), 1, 1, 3, SplitFamily::Lobatto).unwrap();
        for e in &mesh.elements {
            let ElementOperator::Subcell(op) = &e.operator else {
                panic!("expected sub-cell operator")
            };
            assert!(verify_subcell(op, 1e-12).passed());
        }
    }

    #[test]
    fn aligned_point_uses_interface() {
        // b = -0.5 is a break of the 4-element partition of [-1, 1].
        let dom = OversetDomain::new(-1.0, -0.5, 1.0, 2.0).unwrap();
        let mesh = build_overset_mesh(dom, 4, 3, 2, SplitFamily::Lobatto).unwrap();
        assert!(mesh.split_b.is_none());
        let face = mesh.coupling_at(-0.5, CouplingKind::SubcellPoint).unwrap();
        assert_eq!(face.receivers.len(), 2);
        assert!(mesh.elements[..4]
            .iter()
            .all(|e| matches!(e.operator, ElementOperator::Cell(_))));
    }

    #[test]
    fn one_sided_supports() {
        let mesh = build_overset_mesh(paper_domain(), 9, 10, 3, SplitFamily::Radau).unwrap();
        let ElementOperator::Subcell(op) = &mesh.elements[mesh.split_b.unwrap()].operator else {
            unreachable!()
        };
        for (i, &x) in op.x.iter().enumerate() {
            if x > -0.1 {
                assert_eq!(op.e_ml[i], 0.0);
            }
            if x < -0.1 {
                assert_eq!(op.e_mr[i], 0.0);
            }
        }
    }

    #[test]
    fn baseline_donor_interpolation() {
        let mesh = baseline_overset_mesh(paper_domain(), 10, 10, 3).unwrap();
        let face = mesh.coupling_at(-0.1, CouplingKind::Interpolated).unwrap();
        let StateSource::Trace(t) = &face.left else { panic!() };
        let (l, r) = mesh.elements[t.element].interval();
        assert!(l < -0.1 && -0.1 < r);
        // Cubic reproduction.
        let f = |x: f64| 1.0 + x - 2.0 * x * x + 0.5 * x * x * x;
        let vals = DVector::from_iterator(4, mesh.elements[t.element].operator.x().iter().map(|&x| f(x)));
        assert!((t.weights.dot(&vals) - f(-0.1)).abs() < 1e-13);
    }

    #[test]
    fn invalid_inputs() {
        assert!(OversetDomain::new(0.0, -1.0, 1.0, 2.0).is_err());
        assert!(build_overset_mesh(paper_domain(), 0, 3, 3, SplitFamily::Lobatto).is_err());
        assert!(build_overset_mesh(paper_domain(), 3, 3, 0, SplitFamily::Lobatto).is_err());
    }
}
