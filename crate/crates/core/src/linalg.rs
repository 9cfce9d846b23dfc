//! Small dense symmetric solves on `q x q` information matrices.

use nalgebra::{DMatrix, DVector};

/// Relative pivot threshold below which a matrix is treated as singular.
const PIVOT_TOL: f64 = 1e-12;

/// Cholesky factor of the diagonally rescaled matrix, so the singularity test
/// does not depend on the units of the statistics.
fn scaled_cholesky(m: &[Vec<f64>]) -> Option<(nalgebra::Cholesky<f64, nalgebra::Dyn>, Vec<f64>)> {
    let q = m.len();
    let scale: Vec<f64> = (0..q).map(|i| m[i][i]).collect();
    if scale.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return None;
    }
    let s: Vec<f64> = scale.iter().map(|d| d.sqrt()).collect();
    let scaled = DMatrix::from_fn(q, q, |i, j| m[i][j] / (s[i] * s[j]));
    let chol = scaled.cholesky()?;
    let l = chol.l();
    if (0..q).any(|i| l[(i, i)] * l[(i, i)] < PIVOT_TOL) {
        return None;
    }
    Some((chol, s))
}

/// Solves `m x = b` for symmetric positive definite `m`.
pub(crate) fn solve_spd(m: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let (chol, s) = scaled_cholesky(m)?;
    let rhs = DVector::from_iterator(b.len(), b.iter().zip(&s).map(|(x, si)| x / si));
    let y = chol.solve(&rhs);
    Some(y.iter().zip(&s).map(|(v, si)| v / si).collect())
}

/// Inverse of a symmetric positive definite matrix.
pub(crate) fn inverse_spd(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let (chol, s) = scaled_cholesky(m)?;
    let inv = chol.inverse();
    let q = m.len();
    let mut out = vec![vec![0.0; q]; q];
    for i in 0..q {
        for j in 0..q {
            out[i][j] = inv[(i, j)] / (s[i] * s[j]);
        }
    }
    for i in 0..q {
        for j in i + 1..q {
            let v = 0.5 * (out[i][j] + out[j][i]);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Some(out)
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
