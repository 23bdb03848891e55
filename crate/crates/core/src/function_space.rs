//! Finite-dimensional exactness spaces and their Vandermonde matrices.
//!
//! A [`FunctionSpace`] is a list of `K` basis functions with exact
//! derivatives. Operators are required to differentiate (and their boundary
//! operators to integrate by parts) every element of the space exactly.
//! Only polynomial spaces are built here, but the [`Basis`] trait keeps the
//! rest of the crate independent of that choice.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Identifies the span of a basis, so that two bases describing the same
/// space (for instance Legendre polynomials mapped to different intervals)
/// compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SpanId {
    Polynomial { degree: usize },
    Custom(String),
}

/// A basis of scalar `C^1` functions.
pub trait Basis: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, k: usize, x: f64) -> f64;
    fn deriv(&self, k: usize, x: f64) -> f64;
    fn descriptor(&self) -> String;
    fn span_id(&self) -> SpanId;

    /// A basis of the same span that is well conditioned on `[left, right]`,
    /// if the basis knows how to produce one.
    fn adapted_to(&self, _left: f64, _right: f64) -> Option<Arc<dyn Basis>> {
        None
    }
}

/// Legendre polynomials `P_0 .. P_degree` of the affine coordinate mapping
/// `[left, right]` onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreBasis {
    degree: usize,
    center: f64,
    half_width: f64,
}

impl LegendreBasis {
    pub fn new(degree: usize, left: f64, right: f64) -> Self {
        Self {
            degree,
            center: 0.5 * (left + right),
            half_width: 0.5 * (right - left),
        }
    }

    fn xi(&self, x: f64) -> f64 {
        (x - self.center) / self.half_width
    }
}

/// Values of `P_0(x) .. P_n(x)` and their derivatives.
pub(crate) fn legendre_with_derivatives(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
    }
    (p, dp)
}

pub(crate) fn legendre(n: usize, x: f64) -> f64 {
    legendre_with_derivatives(n, x).0[n]
}

impl Basis for LegendreBasis {
    fn dim(&self) -> usize {
        self.degree + 1
    }

    fn eval(&self, k: usize, x: f64) -> f64 {
        legendre(k, self.xi(x))
    }

    fn deriv(&self, k: usize, x: f64) -> f64 {
        legendre_with_derivatives(k, self.xi(x)).1[k] / self.half_width
    }

    fn descriptor(&self) -> String {
        format!("polynomials degree <= {}", self.degree)
    }

    fn span_id(&self) -> SpanId {
        SpanId::Polynomial { degree: self.degree }
    }

    fn adapted_to(&self, left: f64, right: f64) -> Option<Arc<dyn Basis>> {
        Some(Arc::new(LegendreBasis::new(self.degree, left, right)))
    }
}

/// The exactness space `F` of an operator. Cheap to clone and immutable.
#[derive(Clone)]
pub struct FunctionSpace {
    basis: Arc<dyn Basis>,
}

impl fmt::Debug for FunctionSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSpace")
            .field("descriptor", &self.descriptor())
            .field("dim", &self.dim())
            .finish()
    }
}

impl FunctionSpace {
    pub fn from_basis(basis: Arc<dyn Basis>) -> Result<Self> {
        if basis.dim() == 0 {
            return Err(Error::invalid("function space must have dimension >= 1"));
        }
        Ok(Self { basis })
    }

    /// `P_d` represented by Legendre polynomials on `[-1, 1]`.
    pub fn polynomial(degree: usize) -> Self {
        Self::polynomial_on(degree, -1.0, 1.0)
    }

    /// `P_d` represented by Legendre polynomials of the coordinate mapped
    /// from `[left, right]`.
    pub fn polynomial_on(degree: usize, left: f64, right: f64) -> Self {
        Self {
            basis: Arc::new(LegendreBasis::new(degree, left, right)),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn eval(&self, k: usize, x: f64) -> f64 {
        self.basis.eval(k, x)
    }

    pub fn deriv(&self, k: usize, x: f64) -> f64 {
        self.basis.deriv(k, x)
    }

    pub fn descriptor(&self) -> String {
        self.basis.descriptor()
    }

    pub fn span_id(&self) -> SpanId {
        self.basis.span_id()
    }

    pub fn same_span(&self, other: &FunctionSpace) -> bool {
        self.span_id() == other.span_id()
    }

    /// The same space, re-represented for good conditioning on
    /// `[left, right]`; returns `self` unchanged if the basis cannot adapt.
    pub fn adapted_to(&self, left: f64, right: f64) -> FunctionSpace {
        match self.basis.adapted_to(left, right) {
            Some(basis) => FunctionSpace { basis },
            None => self.clone(),
        }
    }

    /// All basis values at `x`.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        (0..self.dim()).map(|k| self.eval(k, x)).collect()
    }
}

/// `P_d` with a Legendre basis; see [`FunctionSpace::polynomial`].
pub fn polynomial_space(degree: usize) -> FunctionSpace {
    FunctionSpace::polynomial(degree)
}

/// A strictly increasing set of nodes inside `[left, right]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    nodes: Vec<f64>,
    left: f64,
    right: f64,
}

impl NodeSet {
    pub fn new(nodes: Vec<f64>, left: f64, right: f64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("node set is empty"));
        }
        if !(left < right) {
            return Err(Error::invalid(format!("node interval [{left}, {right}] is empty")));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(format!(
                "nodes must be strictly increasing ({} >= {})",
                w[0], w[1]
            )));
        }
        let tol = 1e-14 * (right - left).abs().max(1.0);
        if nodes[0] < left - tol || nodes[nodes.len() - 1] > right + tol {
            return Err(Error::invalid(format!("nodes leave the interval [{left}, {right}]")));
        }
        Ok(Self { nodes, left, right })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.left, self.right)
    }
}

/// `V[n, k] = f_k(x_n)`.
pub fn vandermonde(space: &FunctionSpace, nodes: &NodeSet) -> DMatrix<f64> {
    vandermonde_at(space, nodes.nodes())
}

/// `V'[n, k] = f_k'(x_n)`.
pub fn vandermonde_derivative(space: &FunctionSpace, nodes: &NodeSet) -> DMatrix<f64> {
    vandermonde_derivative_at(space, nodes.nodes())
}

pub(crate) fn vandermonde_at(space: &FunctionSpace, x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), space.dim(), |n, k| space.eval(k, x[n]))
}

pub(crate) fn vandermonde_derivative_at(space: &FunctionSpace, x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), space.dim(), |n, k| space.deriv(k, x[n]))
}

/// Numerical rank via singular values relative to the largest one.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}
