//! Interval lower bounds for quadratics on boxes and a branch-and-bound that
//! certifies `max_j h_j > 0` everywhere on a box.

use crate::qp_model::Quadratic;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct BoxCell<S> {
    pub lo: Vec<S>,
    pub hi: Vec<S>,
}

impl<S: Scalar> BoxCell<S> {
    pub fn center(&self) -> Vec<S> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| S::lit(0.5) * (a + b)).collect()
    }

    fn widest(&self, scale: &[S]) -> (usize, S) {
        let mut best = (0, S::zero());
        for i in 0..self.lo.len() {
            let w = (self.hi[i] - self.lo[i]) / scale[i];
            if w > best.1 {
                best = (i, w);
            }
        }
        best
    }

    fn split(&self, i: usize) -> (Self, Self) {
        let mid = S::lit(0.5) * (self.lo[i] + self.hi[i]);
        let mut left = self.clone();
        left.hi[i] = mid;
        let mut right = self.clone();
        right.lo[i] = mid;
        (left, right)
    }
}

/// Natural interval extension: each monomial bounded separately.
fn natural_lower<S: Scalar>(h: &Quadratic<S>, cell: &BoxCell<S>) -> S {
    let n = h.dim();
    let mut total = h.c;
    let prod_range = |i: usize, j: usize| {
        let c = [cell.lo[i] * cell.lo[j], cell.lo[i] * cell.hi[j], cell.hi[i] * cell.lo[j], cell.hi[i] * cell.hi[j]];
        let mut lo = c.iter().fold(S::infinity(), |m, &v| m.min(v));
        let hi = c.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
        if i == j && cell.lo[i] <= S::zero() && cell.hi[i] >= S::zero() {
            lo = S::zero();
        }
        (lo, hi)
    };
    for i in 0..n {
        let bi = h.b[i];
        total = total + if bi >= S::zero() { bi * cell.lo[i] } else { bi * cell.hi[i] };
        for j in i..n {
            let coef = if i == j { h.a[(i, i)] } else { h.a[(i, j)] + h.a[(j, i)] };
            if coef == S::zero() {
                continue;
            }
            let (lo, hi) = prod_range(i, j);
            total = total + if coef >= S::zero() { coef * lo } else { coef * hi };
        }
    }
    total
}

/// Centered form around the midpoint `m`:
/// `h(m) + ∇h(m)ᵀδ + δᵀAδ` with `|δ_i| ≤ r_i`.
fn centered_lower<S: Scalar>(h: &Quadratic<S>, cell: &BoxCell<S>) -> S {
    let n = h.dim();
    let m = cell.center();
    let r: Vec<S> = (0..n).map(|i| S::lit(0.5) * (cell.hi[i] - cell.lo[i])).collect();
    let am = h.a.mul_vec(&m);
    let mut total = h.eval(&m);
    for i in 0..n {
        let g = S::lit(2.0) * am[i] + h.b[i];
        total = total - g.abs() * r[i];
        // Diagonal terms δ_i² ∈ [0, r_i²]; off-diagonal bounded by |a_ij| r_i r_j.
        let aii = h.a[(i, i)];
        if aii < S::zero() {
            total = total + aii * r[i] * r[i];
        }
        for j in 0..n {
            if j != i {
                total = total - h.a[(i, j)].abs() * r[i] * r[j];
            }
        }
    }
    total
}

pub fn lower_bound<S: Scalar>(h: &Quadratic<S>, cell: &BoxCell<S>) -> S {
    natural_lower(h, cell).max(centered_lower(h, cell))
}

pub fn coefficient_scale<S: Scalar>(h: &Quadratic<S>) -> S {
    let b = h.b.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    S::one().max(h.a.max_abs()).max(b).max(h.c.abs())
}

#[derive(Clone, Debug, Default)]
pub struct BranchStats {
    pub cells: usize,
    pub certified: bool,
}

/// Certifies that on every point of `root` some `h_j` is strictly positive.
/// Returns `certified = false` when the node budget or minimal width is
/// exhausted.
pub fn certify_positive_max<S: Scalar>(hs: &[Quadratic<S>], root: BoxCell<S>, max_cells: usize) -> BranchStats {
    let dim = root.lo.len();
    let scale: Vec<S> = (0..dim).map(|i| (root.hi[i] - root.lo[i]).max(S::min_positive_value())).collect();
    let margins: Vec<S> = hs.iter().map(|h| S::lit(1e-10) * coefficient_scale(h)).collect();
    let mut stack = vec![root];
    let mut cells = 0usize;
    while let Some(cell) = stack.pop() {
        cells += 1;
        if cells > max_cells {
            return BranchStats { cells, certified: false };
        }
        let covered = hs.iter().zip(&margins).any(|(h, &mg)| lower_bound(h, &cell) > mg);
        if covered {
            continue;
        }
        let (i, w) = cell.widest(&scale);
        if w < S::lit(1e-9) {
            return BranchStats { cells, certified: false };
        }
        // A center point violating nothing means a genuine solution is nearby.
        let c = cell.center();
        if hs.iter().all(|h| h.eval(&c) <= S::zero()) {
            return BranchStats { cells, certified: false };
        }
        let (l, r) = cell.split(i);
        stack.push(r);
        stack.push(l);
    }
    BranchStats { cells, certified: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Matrix;

    fn q1(a: f64, b: f64, c: f64) -> Quadratic<f64> {
        Quadratic::new(Matrix::from_rows(&[vec![a]]).unwrap(), vec![b], c)
    }

    #[test]
    fn bounds_are_valid() {
        let h = Quadratic::new(Matrix::from_rows(&[vec![1.0, -2.0], vec![-2.0, -1.0]]).unwrap(), vec![0.5, -1.0], 0.3);
        let cell = BoxCell { lo: vec![0.2, 0.1], hi: vec![0.7, 0.9] };
        let lb = lower_bound(&h, &cell);
        for i in 0..=20 {
            for j in 0..=20 {
                let x = [0.2 + 0.5 * i as f64 / 20.0, 0.1 + 0.8 * j as f64 / 20.0];
                assert!(h.eval(&x) >= lb - 1e-12);
            }
        }
    }

    #[test]
    fn positive_parabola_certified() {
        let st = certify_positive_max(&[q1(1.0, -1.0, 1.0)], BoxCell { lo: vec![0.0], hi: vec![10.0] }, 10_000);
        assert!(st.certified);
    }

    #[test]
    fn root_inside_blocks_certificate() {
        let st = certify_positive_max(&[q1(1.0, 0.0, -1.0)], BoxCell { lo: vec![0.0], hi: vec![10.0] }, 10_000);
        assert!(!st.certified);
    }
}
