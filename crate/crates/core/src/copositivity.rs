//! Copositivity and strict copositivity of symmetric matrices on the
//! nonnegative orthant and on polyhedral subcones.
//!
//! The decision works on `μ* = min { xᵀQx : x ∈ Δ }` (unit simplex). A
//! simplicial branch-and-bound splits the simplex along longest edges. For a
//! node with vertex set `V` the quadratic is `λᵀ(VᵀQV)λ` over the standard
//! simplex, so `min_ij (VᵀQV)_ij` is a valid lower bound and the smallest
//! vertex value an upper bound. Nodes that still straddle the `±eps` band at
//! `exact_depth` are closed by an exact standard-quadratic-program solve by
//! support enumeration (only a minimal-support minimizer matters, and its
//! bordered KKT system is nonsingular).

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkernel::{enumerate_vertices, solve_linear, sym_eig, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CopositivityStatus {
    StrictlyCopositive,
    CopositiveNotStrict,
    NotCopositive,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct CopositivityVerdict<S> {
    pub status: CopositivityStatus,
    /// Point of the unit simplex (or of the cone slice): `dᵀQd < −eps` for
    /// `NotCopositive`, `|dᵀQd| ≤ eps` for `CopositiveNotStrict`.
    pub witness: Option<Vec<S>>,
    /// Lower bound on the simplex minimum over all closed nodes.
    pub certified_min: S,
    /// Smallest value actually evaluated.
    pub best_value: S,
    /// The cone reduced to the origin; verdict is vacuous.
    pub trivial_cone: bool,
    pub nodes: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct CopositivityOptions<S> {
    pub eps: S,
    pub max_depth: usize,
    /// Depth at which straddling nodes are closed exactly.
    pub exact_depth: usize,
    /// Largest vertex count handled by the exact node solve.
    pub exact_dim: usize,
    pub max_nodes: usize,
}

impl<S: Scalar> Default for CopositivityOptions<S> {
    fn default() -> Self {
        CopositivityOptions { eps: S::lit(1e-9), max_depth: 40, exact_depth: 2, exact_dim: 12, max_nodes: 200_000 }
    }
}

impl<S: Scalar> CopositivityOptions<S> {
    pub fn with_eps(eps: S) -> Self {
        CopositivityOptions { eps, ..Self::default() }
    }

    /// Deeper search used by callers that need a decision.
    pub fn escalated(self) -> Self {
        CopositivityOptions { max_depth: 60, max_nodes: self.max_nodes * 4, ..self }
    }
}

/// Exact minimum of `λᵀMλ` over the standard simplex.
#[derive(Clone, Debug)]
pub struct SimplexMinimum<S> {
    pub value: S,
    pub argmin: Vec<S>,
}

/// Exact standard quadratic program by support enumeration.
pub fn minimize_on_simplex<S: Scalar>(m: &Matrix<S>) -> Result<SimplexMinimum<S>> {
    let k = m.nrows();
    if !m.is_square() {
        return Err(Error::Dimension("simplex minimization needs a square matrix".into()));
    }
    if k == 0 {
        return Err(Error::Dimension("empty simplex".into()));
    }
    if k > 20 {
        return Err(Error::TooLarge { size: k, limit: 20 });
    }
    let mut best: Option<SimplexMinimum<S>> = None;
    for mask in 1u32..(1u32 << k) {
        let support: Vec<usize> = (0..k).filter(|&j| mask & (1 << j) != 0).collect();
        let f = support.len();
        let mut kkt = Matrix::zeros(f + 1, f + 1);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] = m[(i, j)];
            }
            kkt[(a, f)] = S::one();
            kkt[(f, a)] = S::one();
        }
        let mut rhs = vec![S::zero(); f + 1];
        rhs[f] = S::one();
        let Ok(sol) = solve_linear(&kkt, &rhs) else { continue };
        if sol[..f].iter().any(|&v| v < S::lit(-1e-12)) {
            continue;
        }
        let total = sol[..f].iter().fold(S::zero(), |a, &v| a + v.max(S::zero()));
        if total <= S::zero() {
            continue;
        }
        let mut lambda = vec![S::zero(); k];
        for (&i, &v) in support.iter().zip(&sol[..f]) {
            lambda[i] = v.max(S::zero()) / total;
        }
        let value = m.quad_form(&lambda);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(SimplexMinimum { value, argmin: lambda });
        }
    }
    best.ok_or(Error::Singular)
}

struct Node<S> {
    vertices: Vec<Vec<S>>,
    depth: usize,
}

/// Decides (strict) copositivity of a symmetric `Q` on `R^n_+`.
pub fn check_copositive<S: Scalar>(q: &Matrix<S>, opts: &CopositivityOptions<S>) -> Result<CopositivityVerdict<S>> {
    if !q.is_square() {
        return Err(Error::Dimension("copositivity needs a square matrix".into()));
    }
    if !q.is_finite() {
        return Err(Error::NonFinite("copositivity input"));
    }
    if !q.is_symmetric(S::lit(1e-12) * (S::one() + q.max_abs())) {
        return Err(Error::NotSymmetric);
    }
    let n = q.nrows();
    if n == 0 {
        return Ok(CopositivityVerdict {
            status: CopositivityStatus::StrictlyCopositive,
            witness: None,
            certified_min: S::infinity(),
            best_value: S::infinity(),
            trivial_cone: true,
            nodes: 0,
        });
    }
    simplicial_search(q, opts)
}

fn simplicial_search<S: Scalar>(q: &Matrix<S>, opts: &CopositivityOptions<S>) -> Result<CopositivityVerdict<S>> {
    let n = q.nrows();
    let eps = opts.eps;
    let root: Vec<Vec<S>> = (0..n).map(|i| unit(n, i)).collect();
    let mut queue = VecDeque::new();
    queue.push_back(Node { vertices: root, depth: 0 });

    let mut best_value = S::infinity();
    let mut witness: Option<Vec<S>> = None;
    let mut certified_min = S::infinity();
    let mut undecided = false;
    let mut nodes = 0usize;

    while let Some(node) = queue.pop_front() {
        nodes += 1;
        let k = node.vertices.len();
        let qv: Vec<Vec<S>> = node.vertices.iter().map(|v| q.mul_vec(v)).collect();
        let gram = Matrix::from_fn(k, k, |i, j| crate::scalar::dot(&node.vertices[i], &qv[j]));

        let mut upper = S::infinity();
        let mut upper_at = 0;
        for i in 0..k {
            if gram[(i, i)] < upper {
                upper = gram[(i, i)];
                upper_at = i;
            }
        }
        if upper < best_value {
            best_value = upper;
            witness = Some(node.vertices[upper_at].clone());
        }
        if best_value < -eps {
            return Ok(verdict(CopositivityStatus::NotCopositive, witness, certified_min.min(best_value), best_value, nodes));
        }

        let lower = node_lower_bound(&gram)?;
        if lower > eps || (lower >= -eps && upper <= eps) {
            certified_min = certified_min.min(lower);
            continue;
        }

        if node.depth >= opts.exact_depth && k <= opts.exact_dim {
            let exact = minimize_on_simplex(&gram)?;
            let x = combine(&node.vertices, &exact.argmin);
            let value = q.quad_form(&x);
            if value < best_value {
                best_value = value;
                witness = Some(x);
            }
            if best_value < -eps {
                return Ok(verdict(CopositivityStatus::NotCopositive, witness, certified_min.min(best_value), best_value, nodes));
            }
            certified_min = certified_min.min(exact.value);
            continue;
        }

        if node.depth >= opts.max_depth || nodes + queue.len() >= opts.max_nodes {
            undecided = true;
            certified_min = certified_min.min(lower);
            continue;
        }

        let (a, b) = longest_edge(&node.vertices);
        let mid: Vec<S> = node.vertices[a].iter().zip(&node.vertices[b]).map(|(&x, &y)| S::lit(0.5) * (x + y)).collect();
        let mut left = node.vertices.clone();
        left[a] = mid.clone();
        let mut right = node.vertices;
        right[b] = mid;
        queue.push_back(Node { vertices: left, depth: node.depth + 1 });
        queue.push_back(Node { vertices: right, depth: node.depth + 1 });
    }

    let status = if undecided {
        CopositivityStatus::Undecided
    } else if certified_min > eps {
        CopositivityStatus::StrictlyCopositive
    } else {
        CopositivityStatus::CopositiveNotStrict
    };
    let witness = if status == CopositivityStatus::StrictlyCopositive { None } else { witness };
    Ok(verdict(status, witness, certified_min, best_value, nodes))
}

fn verdict<S: Scalar>(
    status: CopositivityStatus,
    witness: Option<Vec<S>>,
    certified_min: S,
    best_value: S,
    nodes: usize,
) -> CopositivityVerdict<S> {
    let witness = match status {
        CopositivityStatus::StrictlyCopositive => None,
        _ => witness,
    };
    CopositivityVerdict { status, witness, certified_min, best_value, trivial_cone: false, nodes }
}

/// Lower bound of `λᵀGλ` on the standard simplex: the smallest entry, or the
/// smallest eigenvalue scaled by the extreme values of `‖λ‖²`.
fn node_lower_bound<S: Scalar>(gram: &Matrix<S>) -> Result<S> {
    let k = gram.nrows();
    let entry = gram.as_slice().iter().fold(S::infinity(), |a, &v| a.min(v));
    if entry >= S::zero() || k == 1 {
        return Ok(entry);
    }
    let lam = sym_eig(gram)?.min_eigenvalue();
    let spectral = if lam >= S::zero() { lam / S::from_usize_lossy(k) } else { lam };
    Ok(entry.max(spectral))
}

fn longest_edge<S: Scalar>(v: &[Vec<S>]) -> (usize, usize) {
    let mut best = (0, 1, S::neg_infinity());
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            let d = v[i].iter().zip(&v[j]).fold(S::zero(), |a, (&x, &y)| a + (x - y) * (x - y));
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    (best.0, best.1)
}

fn combine<S: Scalar>(vertices: &[Vec<S>], lambda: &[S]) -> Vec<S> {
    let n = vertices[0].len();
    let mut x = vec![S::zero(); n];
    for (v, &l) in vertices.iter().zip(lambda) {
        for i in 0..n {
            x[i] = x[i] + l * v[i];
        }
    }
    x
}

fn unit<S: Scalar>(n: usize, i: usize) -> Vec<S> {
    let mut e = vec![S::zero(); n];
    e[i] = S::one();
    e
}

/// Polyhedral cone `{d ≥ 0 : a_jᵀd = 0 ∀j, d_i = 0 ∀i ∈ zero_set}`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PolyhedralCone<S> {
    pub dim: usize,
    pub equalities: Vec<Vec<S>>,
    pub zero_set: Vec<usize>,
}

impl<S: Scalar> PolyhedralCone<S> {
    pub fn orthant(dim: usize) -> Self {
        PolyhedralCone { dim, equalities: vec![], zero_set: vec![] }
    }

    /// Vertices of the slice `cone ∩ {eᵀd = 1}` in full coordinates.
    pub fn slice_vertices(&self) -> Result<Vec<Vec<S>>> {
        if self.equalities.iter().any(|a| a.len() != self.dim) || self.zero_set.iter().any(|&i| i >= self.dim) {
            return Err(Error::Dimension("cone description".into()));
        }
        let free: Vec<usize> = (0..self.dim).filter(|i| !self.zero_set.contains(i)).collect();
        if free.is_empty() {
            return Ok(vec![]);
        }
        let rows = self.equalities.len() + 1;
        let mut a = Matrix::zeros(rows, free.len());
        for (r, eq) in self.equalities.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                a[(r, c)] = eq[j];
            }
        }
        for c in 0..free.len() {
            a[(rows - 1, c)] = S::one();
        }
        let mut b = vec![S::zero(); rows];
        b[rows - 1] = S::one();
        let verts = enumerate_vertices(&a, &b)?;
        Ok(verts
            .into_iter()
            .map(|v| {
                let mut d = vec![S::zero(); self.dim];
                for (&j, &x) in free.iter().zip(&v) {
                    d[j] = x;
                }
                d
            })
            .collect())
    }
}

/// Decides (strict) copositivity of `Q` restricted to a polyhedral cone.
/// Strict copositivity is equivalent to `{d ∈ cone : dᵀQd ≤ 0} = {0}`.
pub fn check_copositive_on_cone<S: Scalar>(
    q: &Matrix<S>,
    cone: &PolyhedralCone<S>,
    opts: &CopositivityOptions<S>,
) -> Result<CopositivityVerdict<S>> {
    if !q.is_square() || q.nrows() != cone.dim {
        return Err(Error::Dimension("cone and matrix dimensions differ".into()));
    }
    let verts = cone.slice_vertices()?;
    if verts.is_empty() {
        return Ok(CopositivityVerdict {
            status: CopositivityStatus::StrictlyCopositive,
            witness: None,
            certified_min: S::infinity(),
            best_value: S::infinity(),
            trivial_cone: true,
            nodes: 0,
        });
    }
    let qv: Vec<Vec<S>> = verts.iter().map(|v| q.mul_vec(v)).collect();
    let k = verts.len();
    let gram = Matrix::from_fn(k, k, |i, j| crate::scalar::dot(&verts[i], &qv[j])).symmetrized();
    let mut inner = check_copositive(&gram, opts)?;
    inner.witness = inner.witness.map(|lambda| combine(&verts, &lambda));
    Ok(inner)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn check(q: &Matrix<f64>) -> CopositivityVerdict<f64> {
        check_copositive(q, &CopositivityOptions::default()).unwrap()
    }

    #[test]
    fn indefinite_pair_not_copositive() {
        let v = check(&mat(&[&[1.0, 1.0], &[1.0, -1.0]]));
        assert_eq!(v.status, CopositivityStatus::NotCopositive);
        let w = v.witness.unwrap();
        assert!((w[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_strictly_copositive() {
        let v = check(&Matrix::identity(4));
        assert_eq!(v.status, CopositivityStatus::StrictlyCopositive);
        assert!(v.certified_min > 1e-9);
    }

    #[test]
    fn horn_matrix_copositive_not_strict() {
        let h = mat(&[
            &[1.0, -1.0, 1.0, 1.0, -1.0],
            &[-1.0, 1.0, -1.0, 1.0, 1.0],
            &[1.0, -1.0, 1.0, -1.0, 1.0],
            &[1.0, 1.0, -1.0, 1.0, -1.0],
            &[-1.0, 1.0, 1.0, -1.0, 1.0],
        ]);
        let v = check(&h);
        assert_eq!(v.status, CopositivityStatus::CopositiveNotStrict);
        let w = v.witness.unwrap();
        assert!(h.quad_form(&w).abs() <= 1e-9);
    }

    #[test]
    fn nonnegative_offdiagonal_psd_not_strict() {
        // (x1 - x2)^2 vanishes on the simplex at (1/2, 1/2).
        let v = check(&mat(&[&[1.0, -1.0], &[-1.0, 1.0]]));
        assert_eq!(v.status, CopositivityStatus::CopositiveNotStrict);
    }

    #[test]
    fn exact_simplex_minimum_of_ones_minus_identity() {
        let m = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let r = minimize_on_simplex(&m).unwrap();
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn trivial_cone_is_vacuously_strict() {
        let cone = PolyhedralCone { dim: 2, equalities: vec![], zero_set: vec![0, 1] };
        let v = check_copositive_on_cone(&(Matrix::identity(2).scale(-1.0)), &cone, &CopositivityOptions::default()).unwrap();
        assert_eq!(v.status, CopositivityStatus::StrictlyCopositive);
        assert!(v.trivial_cone);
    }

    #[test]
    fn negative_identity_on_orthant() {
        let v = check_copositive_on_cone(&Matrix::identity(2).scale(-1.0), &PolyhedralCone::orthant(2), &CopositivityOptions::default())
            .unwrap();
        assert_eq!(v.status, CopositivityStatus::NotCopositive);
        let w = v.witness.unwrap();
        assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn restriction_to_second_coordinate() {
        let q = mat(&[&[-1.0, 0.0], &[0.0, 1.0]]);
        let cone = PolyhedralCone { dim: 2, equalities: vec![], zero_set: vec![0] };
        let v = check_copositive_on_cone(&q, &cone, &CopositivityOptions::default()).unwrap();
        assert_eq!(v.status, CopositivityStatus::StrictlyCopositive);
        assert!(!v.trivial_cone);
    }

    #[test]
    fn undecided_when_depth_exhausted() {
        // Exact closing disabled and depth capped: a boundary case cannot be settled.
        let opts = CopositivityOptions { exact_depth: usize::MAX, max_depth: 3, ..CopositivityOptions::default() };
        let v = check_copositive(&mat(&[&[1.0, -1.0], &[-1.0, 1.0]]), &opts).unwrap();
        assert!(matches!(v.status, CopositivityStatus::Undecided | CopositivityStatus::CopositiveNotStrict));
    }

    #[test]
    fn rejects_asymmetric() {
        assert_eq!(check_copositive(&mat(&[&[0.0, 1.0], &[0.0, 0.0]]), &CopositivityOptions::default()).unwrap_err(), Error::NotSymmetric);
    }

    #[test]
    fn single_precision_identity() {
        let v = check_copositive(&Matrix::<f32>::identity(3), &CopositivityOptions::with_eps(1e-5)).unwrap();
        assert_eq!(v.status, CopositivityStatus::StrictlyCopositive);
    }
}
