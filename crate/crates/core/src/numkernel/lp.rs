use serde::Serialize;

use super::{solve_linear, solve_linear_many, Matrix};
use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpResult<S> {
    pub status: LpStatus,
    pub value: Option<S>,
    pub x: Option<Vec<S>>,
    /// Recession direction `d ≥ 0, A d = 0` improving the objective.
    pub ray: Option<Vec<S>>,
}

const MAX_PIVOTS: usize = 200_000;
const REINVERT_EVERY: usize = 200;
const MAX_POLISH: usize = 3;

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    z: Vec<S>,
    basis: Vec<usize>,
    width: usize,
    /// Original augmented rows `[±A | I | ±b]`, for reinversion.
    orig: Vec<Vec<S>>,
    /// Original index of each surviving row.
    row_ids: Vec<usize>,
    /// Cost of the current phase over all columns.
    cost: Vec<S>,
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

impl<S: Scalar> Tableau<S> {
    fn rhs(&self, i: usize) -> S {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v = *v / p;
        }
        let pr = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f == S::zero() {
                continue;
            }
            for (v, &w) in row.iter_mut().zip(&pr) {
                *v = *v - f * w;
            }
            row[j] = S::zero();
        }
        let f = self.z[j];
        if f != S::zero() {
            for (v, &w) in self.z.iter_mut().zip(&pr) {
                *v = *v - f * w;
            }
            self.z[j] = S::zero();
        }
        self.basis[r] = j;
    }

    /// Rebuilds the first `cols` columns, the right-hand side and the reduced
    /// costs from the original data for the current basis, discarding the
    /// drift of the pivot updates. Keeps the tableau when the basis is
    /// numerically singular.
    fn reinvert(&mut self, cols: usize) {
        let k = self.rows.len();
        let w = self.width;
        let bm = Matrix::from_fn(k, k, |r, c| self.orig[self.row_ids[r]][self.basis[c]]);
        let part = Matrix::from_fn(k, cols + 1, |r, c| self.orig[self.row_ids[r]][if c == cols { w } else { c }]);
        let Ok(t) = solve_linear_many(&bm, &part) else { return };
        for (r, row) in self.rows.iter_mut().enumerate() {
            row[..cols].copy_from_slice(&t.row(r)[..cols]);
            row[w] = t[(r, cols)];
            for (q, &bv) in self.basis.iter().enumerate() {
                if bv < cols {
                    row[bv] = if q == r { S::one() } else { S::zero() };
                }
            }
        }
        self.reprice();
    }

    /// Reduced costs `c − c_Bᵀ T` of the current phase.
    fn reprice(&mut self) {
        let mut z = self.cost.clone();
        z.push(S::zero());
        for (row, &bv) in self.rows.iter().zip(&self.basis) {
            let cb = self.cost[bv];
            if cb == S::zero() {
                continue;
            }
            for (zj, &rj) in z.iter_mut().zip(row) {
                *zj = *zj - cb * rj;
            }
        }
        for &bv in &self.basis {
            z[bv] = S::zero();
        }
        self.z = z;
    }

    /// Most negative basic value and the entering column of the dual ratio
    /// test, when the basis is primal infeasible beyond rounding.
    fn dual_pivot(&self, allowed: usize) -> Option<(usize, usize)> {
        let scale = (0..self.rows.len()).fold(S::one(), |m, i| m.max(self.rhs(i).abs()));
        let (r, v) = (0..self.rows.len()).map(|i| (i, self.rhs(i))).fold((0, S::zero()), |a, b| if b.1 < a.1 { b } else { a });
        if v >= -S::lit(1e-9) * scale {
            return None;
        }
        let row = &self.rows[r];
        let row_max = row[..allowed].iter().fold(S::zero(), |m, v| m.max(v.abs()));
        (0..allowed)
            .filter(|&j| row[j] < -S::lit(1e-9) * row_max)
            .map(|j| (j, self.z[j].max(S::zero()) / -row[j]))
            .fold(None, |acc: Option<(usize, S)>, cur| match acc {
                Some(a) if a.1 <= cur.1 => Some(a),
                _ => Some(cur),
            })
            .map(|(j, _)| (r, j))
    }

    /// Dantzig pricing with a largest-pivot ratio test; a long run of
    /// degenerate pivots switches to Bland's rule, which cannot cycle.
    /// With `polish`, optimality is confirmed on a reinverted tableau and
    /// repaired by dual pivots if drift broke primal feasibility.
    fn run(&mut self, allowed: usize, polish: bool) -> Result<Outcome> {
        let rc_tol = S::lit(1e-11) * self.cost.iter().fold(S::one(), |m, v| m.max(v.abs()));
        let piv_tol = S::lit(1e-9);
        let mut dead = vec![false; allowed];
        let mut degenerate = 0usize;
        let mut since_reinvert = 0usize;
        let mut repairs = 0usize;
        let mut polished = 0usize;
        for _ in 0..MAX_PIVOTS {
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert(allowed);
                since_reinvert = 0;
            }
            let bland = degenerate > 50;
            let candidates = (0..allowed).filter(|&j| !dead[j] && self.z[j] < -rc_tol);
            let entering = if bland {
                candidates.min()
            } else {
                candidates.min_by(|&p, &q| self.z[p].partial_cmp(&self.z[q]).expect("finite reduced costs"))
            };
            let Some(j) = entering else {
                if !polish {
                    return Ok(Outcome::Optimal);
                }
                if since_reinvert > 0 {
                    self.reinvert(allowed);
                    since_reinvert = 0;
                    dead.iter_mut().for_each(|d| *d = false);
                    // Rounding in the fresh reduced costs can make two bases
                    // alternate; past a few rounds the current one stands.
                    polished += 1;
                    if polished <= MAX_POLISH {
                        continue;
                    }
                }
                // Optimal reduced costs on a basis that drift has left
                // primal infeasible: repair with dual simplex pivots.
                if repairs < 2 * self.rows.len() + 10 {
                    if let Some((r, j)) = self.dual_pivot(allowed) {
                        repairs += 1;
                        self.pivot(r, j);
                        since_reinvert += 1;
                        continue;
                    }
                }
                return Ok(Outcome::Optimal);
            };
            let col_max = self.rows.iter().fold(S::one(), |m, r| m.max(r[j].abs()));
            let mut leave: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][j];
                if a <= piv_tol * col_max {
                    continue;
                }
                let ratio = self.rhs(i).max(S::zero()) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= S::lit(1e-12) * (S::one() + br.abs());
                        let better_tie = if bland { self.basis[i] < self.basis[bi] } else { a > self.rows[bi][j] };
                        if (tie && better_tie) || (!tie && ratio < br) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leave {
                None => {
                    // A ray whose gain is at rounding level relative to the
                    // cost row is noise from earlier pivots.
                    let zscale = self.z[..allowed].iter().fold(S::one(), |m, v| m.max(v.abs()));
                    if self.z[j] > -S::lit(1e-9) * zscale {
                        dead[j] = true;
                        continue;
                    }
                    return Ok(Outcome::Unbounded(j));
                }
                Some((r, ratio)) => {
                    degenerate = if ratio <= S::lit(1e-12) { degenerate + 1 } else { 0 };
                    self.pivot(r, j);
                    since_reinvert += 1;
                    dead.iter_mut().for_each(|d| *d = false);
                }
            }
        }
        Err(Error::IterationLimit("simplex"))
    }
}

/// Solves `min/max cᵀx  s.t.  A x = b, x ≥ 0` with a two-phase dense tableau
/// simplex.
pub fn lp_solve<S: Scalar>(c: &[S], a: &Matrix<S>, b: &[S], sense: Sense) -> Result<LpResult<S>> {
    let n = c.len();
    let m = a.nrows();
    if a.ncols() != n || b.len() != m {
        return Err(Error::Dimension(format!("LP with {} costs, {}x{} matrix, {} rhs", n, m, a.ncols(), b.len())));
    }
    let cost: Vec<S> = match sense {
        Sense::Minimize => c.to_vec(),
        Sense::Maximize => c.iter().map(|&x| -x).collect(),
    };
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < S::zero() { -S::one() } else { S::one() };
        let mut row = vec![S::zero(); width + 1];
        for j in 0..n {
            row[j] = sign * a[(i, j)];
        }
        row[n + i] = S::one();
        row[width] = sign * b[i];
        rows.push(row);
    }
    let mut phase1 = vec![S::zero(); width];
    phase1[n..].iter_mut().for_each(|v| *v = S::one());
    let orig = rows.clone();
    // Crash basis: a column whose only nonzero is positive serves its row in
    // place of the artificial.
    let mut basis: Vec<usize> = (n..n + m).collect();
    for j in 0..n {
        let nz: Vec<usize> = (0..m).filter(|&i| rows[i][j] != S::zero()).collect();
        if let [i] = nz[..] {
            if rows[i][j] > S::zero() && basis[i] >= n {
                basis[i] = j;
            }
        }
    }
    for (row, &j) in rows.iter_mut().zip(&basis) {
        if j < n {
            let p = row[j];
            row.iter_mut().for_each(|v| *v = *v / p);
        }
    }
    let mut t = Tableau { rows, z: vec![], basis, width, orig, row_ids: (0..m).collect(), cost: phase1 };
    t.reprice();
    t.run(width, false)?;

    let bscale = b.iter().fold(S::one(), |acc, v| acc.max(v.abs()));
    if -t.z[width] > S::lit(1e-9) * bscale {
        return Ok(LpResult { status: LpStatus::Infeasible, value: None, x: None, ray: None });
    }

    // Drive artificials out of the basis; rows that cannot pivot are redundant.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            let col = (0..n)
                .filter(|&j| t.rows[i][j].abs() > S::lit(1e-9))
                .max_by(|&p, &q| t.rows[i][p].abs().partial_cmp(&t.rows[i][q].abs()).expect("finite tableau"));
            match col {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    t.row_ids.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    t.cost = cost.iter().copied().chain(std::iter::repeat_n(S::zero(), m)).collect();
    t.reprice();
    match t.run(n, true)? {
        Outcome::Optimal => {
            let mut x = vec![S::zero(); n];
            for (i, &bv) in t.basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t.rhs(i).max(S::zero());
                }
            }
            let value = crate::scalar::dot(c, &x);
            Ok(LpResult { status: LpStatus::Optimal, value: Some(value), x: Some(x), ray: None })
        }
        Outcome::Unbounded(j) => {
            let mut d = vec![S::zero(); n];
            d[j] = S::one();
            for (i, &bv) in t.basis.iter().enumerate() {
                d[bv] = -t.rows[i][j];
            }
            Ok(LpResult { status: LpStatus::Unbounded, value: None, x: None, ray: Some(d) })
        }
    }
}

/// Lists the vertices of `{x ≥ 0 : A x = b}` by basis enumeration over
/// supports with linearly independent columns. Intended for small `n`.
pub fn enumerate_vertices<S: Scalar>(a: &Matrix<S>, b: &[S]) -> Result<Vec<Vec<S>>> {
    let n = a.ncols();
    let m = a.nrows();
    if b.len() != m {
        return Err(Error::Dimension("vertex enumeration rhs".into()));
    }
    if n > 24 {
        return Err(Error::TooLarge { size: n, limit: 24 });
    }
    let tol = S::lit(1e-9);
    let bnorm = norm2(b);
    let mut out: Vec<Vec<S>> = Vec::new();
    let push = |x: Vec<S>, out: &mut Vec<Vec<S>>| {
        let dup = out.iter().any(|y| y.iter().zip(&x).all(|(&p, &q)| (p - q).abs() <= tol * (S::one() + p.abs())));
        if !dup {
            out.push(x);
        }
    };
    if bnorm <= tol {
        push(vec![S::zero(); n], &mut out);
    }
    let kmax = m.min(n);
    for mask in 1u32..(1u32 << n) {
        let k = mask.count_ones() as usize;
        if k > kmax {
            continue;
        }
        let support: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
        let rows: Vec<usize> = (0..m).collect();
        let a_s = a.select(&rows, &support);
        let gram = a_s.transpose().matmul(&a_s);
        let rhs = a_s.transpose().mul_vec(b);
        let Ok(xs) = solve_linear(&gram, &rhs) else { continue };
        if xs.iter().any(|&v| v < -tol) {
            continue;
        }
        let r: Vec<S> = a_s.mul_vec(&xs).iter().zip(b).map(|(&p, &q)| p - q).collect();
        if norm2(&r) > tol * (S::one() + bnorm) {
            continue;
        }
        let mut x = vec![S::zero(); n];
        for (&j, &v) in support.iter().zip(&xs) {
            x[j] = v.max(S::zero());
        }
        push(x, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn max_on_simplex_slice() {
        let r = lp_solve(&[1.0, 0.0], &mat(&[&[1.0, 1.0]]), &[1.0], Sense::Maximize).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_ray_certified() {
        let a = mat(&[&[1.0, -1.0]]);
        let r = lp_solve(&[1.0, 0.0], &a, &[0.0], Sense::Maximize).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
        let d = r.ray.unwrap();
        assert!(d.iter().all(|&v| v >= 0.0));
        assert!(a.mul_vec(&d)[0].abs() < 1e-12);
        assert!(d[0] > 0.0);
    }

    #[test]
    fn infeasible_negative_rhs() {
        let r = lp_solve(&[0.0], &mat(&[&[1.0]]), &[-1.0], Sense::Minimize).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
    }

    #[test]
    fn redundant_rows_handled() {
        let a = mat(&[&[1.0, 1.0, 0.0], &[2.0, 2.0, 0.0], &[0.0, 0.0, 1.0]]);
        let r = lp_solve(&[-1.0, -2.0, 1.0], &a, &[1.0, 2.0, 0.5], Sense::Minimize).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value.unwrap() - (-2.0 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn vertices_of_triangle_slice() {
        let v = enumerate_vertices(&mat(&[&[1.0, 1.0, 1.0]]), &[1.0]).unwrap();
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn vertices_of_pointed_cone_slice() {
        // {d ≥ 0 : d1 - d2 = 0, d1 + d2 + d3 = 1}
        let v = enumerate_vertices(&mat(&[&[1.0, -1.0, 0.0], &[1.0, 1.0, 1.0]]), &[0.0, 1.0]).unwrap();
        assert_eq!(v.len(), 2);
    }
}
