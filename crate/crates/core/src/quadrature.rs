//! Gauss–Lobatto and Gauss–Radau rules on `[-1, 1]`.
//!
//! Interior nodes are zeros of Jacobi polynomials: `P^{(1,1)}_{n-2}` for
//! Lobatto and `P^{(0,1)}_{n-1}` for Radau with `-1` fixed. They are seeded
//! with the eigenvalues of the Jacobi matrix and polished by Newton's method.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::function_space::legendre;

const NEWTON_TOL: f64 = 1e-14;

/// Which end of the interval a Radau rule includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadauEnd {
    Left,
    Right,
}

/// `P^{(alpha,beta)}_n(x)` and its derivative by the three-term recurrence.
fn jacobi_with_derivative(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut dp_prev = 0.0;
    let mut p = 0.5 * ((alpha + beta + 2.0) * x + (alpha - beta));
    let mut dp = 0.5 * (alpha + beta + 2.0);
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + alpha + beta;
        let c1 = 2.0 * k * (k + alpha + beta) * (s - 2.0);
        let c2 = (s - 1.0) * s * (s - 2.0);
        let c3 = (s - 1.0) * (alpha * alpha - beta * beta);
        let c4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s;
        let p_next = ((c2 * x + c3) * p - c4 * p_prev) / c1;
        let dp_next = (c2 * p + (c2 * x + c3) * dp - c4 * dp_prev) / c1;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
    }
    (p, dp)
}

/// Zeros of `P^{(alpha,beta)}_n`, ascending.
fn jacobi_zeros(n: usize, alpha: f64, beta: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let ab = alpha + beta;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        jm[(k, k)] = (beta * beta - alpha * alpha) / (s * (s + 2.0));
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + ab;
            let b2 = 4.0 * m * (m + alpha) * (m + beta) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0));
            jm[(k, k + 1)] = b2.sqrt();
            jm[(k + 1, k)] = b2.sqrt();
        }
    }
    let mut roots: Vec<f64> = SymmetricEigen::new(jm).eigenvalues.iter().cloned().collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for r in roots.iter_mut() {
        for _ in 0..20 {
            let (p, dp) = jacobi_with_derivative(n, alpha, beta, *r);
            let dx = p / dp;
            *r -= dx;
            if dx.abs() <= NEWTON_TOL * r.abs().max(1.0) {
                break;
            }
        }
    }
    roots
}

/// `n`-point Gauss–Lobatto nodes and weights on `[-1, 1]`, `n >= 2`.
/// Exact for polynomials of degree `2n - 3`.
pub fn gauss_lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "Gauss-Lobatto needs at least two points");
    let mut x = Vec::with_capacity(n);
    x.push(-1.0);
    x.extend(jacobi_zeros(n - 2, 1.0, 1.0));
    x.push(1.0);
    let nf = n as f64;
    let w = x
        .iter()
        .map(|&xi| {
            let p = legendre(n - 1, xi);
            2.0 / (nf * (nf - 1.0) * p * p)
        })
        .collect();
    (x, w)
}

/// `n`-point Gauss–Radau nodes and weights on `[-1, 1]` including the given
/// end point, `n >= 1`. Exact for polynomials of degree `2n - 2`.
pub fn gauss_radau(n: usize, end: RadauEnd) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Radau needs at least one point");
    let mut x = Vec::with_capacity(n);
    x.push(-1.0);
    x.extend(jacobi_zeros(n - 1, 0.0, 1.0));
    let nf = n as f64;
    let mut w: Vec<f64> = x
        .iter()
        .map(|&xi| {
            if xi == -1.0 {
                2.0 / (nf * nf)
            } else {
                let p = legendre(n - 1, xi);
                (1.0 - xi) / (nf * nf * p * p)
            }
        })
        .collect();
    if end == RadauEnd::Right {
        x = x.into_iter().rev().map(|v| -v).collect();
        w.reverse();
    }
    (x, w)
}
