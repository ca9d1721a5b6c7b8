use super::{sym_eig, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative pivot threshold below which a matrix is declared singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Solves `M x = rhs` by LU with partial pivoting.
///
/// A pivot smaller than `1e-12` times the largest pivot seen so far (or the
/// largest entry of `M` for the first column) flags the system as singular.
pub fn solve_linear<S: Scalar>(m: &Matrix<S>, rhs: &[S]) -> Result<Vec<S>> {
    if rhs.len() != m.nrows() {
        return Err(Error::Dimension(format!("{}x{} system with rhs {}", m.nrows(), m.ncols(), rhs.len())));
    }
    let b = Matrix::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    Ok(solve_linear_many(m, &b)?.column(0))
}

/// Solves `M X = B` for every column of `B` with one factorization.
pub fn solve_linear_many<S: Scalar>(m: &Matrix<S>, rhs: &Matrix<S>) -> Result<Matrix<S>> {
    let n = m.nrows();
    let r = rhs.ncols();
    if !m.is_square() || rhs.nrows() != n {
        return Err(Error::Dimension(format!("{}x{} system with rhs {}x{}", n, m.ncols(), rhs.nrows(), r)));
    }
    let mut a = m.clone();
    let mut b = rhs.clone();
    let mut scale = m.max_abs();
    if scale == S::zero() {
        return if n == 0 { Ok(b) } else { Err(Error::Singular) };
    }
    let tol = S::lit(SINGULAR_PIVOT);
    for k in 0..n {
        let (piv, best) = (k..n)
            .map(|i| (i, a[(i, k)].abs()))
            .fold((k, S::zero()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best <= tol * scale {
            return Err(Error::Singular);
        }
        scale = if k == 0 { best } else { scale.max(best) };
        if piv != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(piv, j)];
                a[(piv, j)] = t;
            }
            for j in 0..r {
                let t = b[(k, j)];
                b[(k, j)] = b[(piv, j)];
                b[(piv, j)] = t;
            }
        }
        let d = a[(k, k)];
        for i in (k + 1)..n {
            let f = a[(i, k)] / d;
            if f == S::zero() {
                continue;
            }
            for j in k..n {
                a[(i, j)] = a[(i, j)] - f * a[(k, j)];
            }
            for j in 0..r {
                b[(i, j)] = b[(i, j)] - f * b[(k, j)];
            }
        }
    }
    let mut x = Matrix::zeros(n, r);
    for c in 0..r {
        for i in (0..n).rev() {
            let mut s = b[(i, c)];
            for j in (i + 1)..n {
                s = s - a[(i, j)] * x[(j, c)];
            }
            x[(i, c)] = s / a[(i, i)];
        }
    }
    Ok(x)
}

/// Minimum-norm least-squares solution of a symmetric system via the
/// eigendecomposition pseudo-inverse. Returns the solution and the residual
/// norm `‖M x − rhs‖`.
pub fn solve_symmetric_lstsq<S: Scalar>(m: &Matrix<S>, rhs: &[S]) -> Result<(Vec<S>, S)> {
    let n = m.nrows();
    if !m.is_square() || rhs.len() != n {
        return Err(Error::Dimension("least-squares system".into()));
    }
    let e = sym_eig(m)?;
    let cutoff = S::lit(1e-10) * e.eigenvalues.iter().fold(S::zero(), |a, l| a.max(l.abs())).max(S::min_positive_value());
    let mut x = vec![S::zero(); n];
    for k in 0..n {
        let lam = e.eigenvalues[k];
        if lam.abs() <= cutoff {
            continue;
        }
        let v = e.vector(k);
        let coef = crate::scalar::dot(&v, rhs) / lam;
        for i in 0..n {
            x[i] = x[i] + coef * v[i];
        }
    }
    let r: Vec<S> = m.mul_vec(&x).iter().zip(rhs).map(|(&a, &b)| a - b).collect();
    Ok((x, crate::scalar::norm2(&r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let x = solve_linear(&Matrix::<f64>::identity(2), &[1.0, 2.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn rank_one_is_singular() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(solve_linear(&m, &[1.0, 0.0]), Err(Error::Singular));
    }

    #[test]
    fn diagonal_solve() {
        let m = Matrix::diag(&[2.0, 4.0]);
        assert_eq!(solve_linear(&m, &[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn residual_within_contract() {
        let m = Matrix::from_rows(&[vec![4.0f64, 1.0, 0.5], vec![1.0, -3.0, 2.0], vec![0.5, 2.0, 1.0]]).unwrap();
        let rhs = [1.0, -2.0, 0.25];
        let x = solve_linear(&m, &rhs).unwrap();
        let r: f64 = m.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(r <= 1e-8 * (1.0 + 2.3));
    }

    #[test]
    fn lstsq_consistent_singular() {
        let m = Matrix::from_rows(&[vec![1.0f64, 1.0], vec![1.0, 1.0]]).unwrap();
        let (x, r) = solve_symmetric_lstsq(&m, &[2.0, 2.0]).unwrap();
        assert!(r < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        let (_, r) = solve_symmetric_lstsq(&m, &[1.0, 0.0]).unwrap();
        assert!(r > 0.5);
    }
}
