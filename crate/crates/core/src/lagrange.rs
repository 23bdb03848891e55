//! Barycentric Lagrange interpolation on arbitrary distinct nodes.

use nalgebra::{DMatrix, DVector};

pub fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let prod: f64 = (0..x.len()).filter(|&k| k != j).map(|k| x[j] - x[k]).product();
            1.0 / prod
        })
        .collect()
}

/// Values `l_j(point)` of all Lagrange basis polynomials on `x`.
pub fn lagrange_values(x: &[f64], point: f64) -> DVector<f64> {
    if let Some(j) = x.iter().position(|&xj| xj == point) {
        let mut e = DVector::zeros(x.len());
        e[j] = 1.0;
        return e;
    }
    let w = barycentric_weights(x);
    let terms: Vec<f64> = x.iter().zip(&w).map(|(xj, wj)| wj / (point - xj)).collect();
    let denom: f64 = terms.iter().sum();
    DVector::from_iterator(x.len(), terms.iter().map(|t| t / denom))
}

/// `D[i, j] = l_j'(x_i)`, with the diagonal from the negative row sum.
pub fn differentiation_matrix(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let w = barycentric_weights(x);
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (x[i] - x[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}
