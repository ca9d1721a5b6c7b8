use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenvalues sorted ascending with the matching unit eigenvectors stored as
/// columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<S> {
    pub eigenvalues: Vec<S>,
    pub eigenvectors: Matrix<S>,
}

impl<S: Scalar> EigenDecomposition<S> {
    pub fn vector(&self, k: usize) -> Vec<S> {
        self.eigenvectors.column(k)
    }

    pub fn min_eigenvalue(&self) -> S {
        self.eigenvalues.first().copied().unwrap_or_else(S::zero)
    }

    pub fn max_eigenvalue(&self) -> S {
        self.eigenvalues.last().copied().unwrap_or_else(S::zero)
    }

    /// Groups indices of numerically equal eigenvalues (relative to `tol`).
    pub fn clusters(&self, tol: S) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            match out.last_mut() {
                Some(c) if (lam - self.eigenvalues[c[0]]).abs() <= tol => c.push(k),
                _ => out.push(vec![k]),
            }
        }
        out
    }
}

const MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig<S: Scalar>(a: &Matrix<S>) -> Result<EigenDecomposition<S>> {
    if !a.is_square() {
        return Err(Error::Dimension("eigendecomposition needs a square matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let n = a.nrows();
    let mut m = a.symmetrized();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius();
    let threshold = S::epsilon() * scale;

    for _ in 0..MAX_SWEEPS {
        let mut off = S::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= threshold || off == S::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= S::min_positive_value() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (S::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                let t = if theta == S::zero() { S::one() } else { t };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let col = v.column(src);
        let nrm = crate::scalar::norm2(&col);
        for i in 0..n {
            vectors[(i, k)] = col[i] / nrm;
        }
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors: vectors })
}

fn rotate<S: Scalar>(m: &mut Matrix<S>, v: &mut Matrix<S>, p: usize, q: usize, c: S, s: S) {
    let n = m.nrows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
