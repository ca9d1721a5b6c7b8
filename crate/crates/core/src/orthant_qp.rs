//! Exhaustive minimization of `xᵀQx + qᵀx + r` over the nonnegative orthant
//! and over polytopes `{x ≥ 0 : A x = b}`.
//!
//! Both solvers enumerate faces. A minimizer of smallest support has a
//! nonsingular stationarity system on its face (otherwise the objective is
//! constant along a kernel direction that can be followed until a coordinate
//! vanishes), so face enumeration finds the global minimum whenever it is
//! attained. On the orthant, unboundedness with a copositive `Q` happens
//! exactly when some `d ≥ 0` has `dᵀQd = 0` and `qᵀd < 0`; the zero set of a
//! copositive form is the union over faces `F` of `{d_F ≥ 0 : Q_FF d_F = 0}`,
//! so one LP per face with a numerical kernel decides it.

use serde::Serialize;

use crate::copositivity::{check_copositive, check_copositive_on_cone, CopositivityOptions, CopositivityStatus, PolyhedralCone};
use crate::error::{Error, Result};
use crate::numkernel::{enumerate_vertices, lp_solve, solve_linear, solve_symmetric_lstsq, sym_eig, LpStatus, Matrix, Sense};
use crate::scalar::{dot, norm2, ExtValue, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaStatus {
    Attained,
    MinusInfinity,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaResult<S> {
    pub status: ThetaStatus,
    /// Minimum value; for `undecided` the smallest value seen by the probe.
    pub value: ExtValue<S>,
    pub minimizer: Option<Vec<S>>,
    /// Direction `d ≥ 0` along which the objective diverges from the origin.
    pub unbounded_ray: Option<Vec<S>>,
    pub kkt_residual: Option<S>,
    /// The polytope fallback was used; `value` is an upper bound only.
    pub approximate: bool,
    pub copositivity: CopositivityStatus,
}

impl<S: Scalar> ThetaResult<S> {
    fn minus_infinity(ray: Vec<S>, cop: CopositivityStatus) -> Self {
        ThetaResult {
            status: ThetaStatus::MinusInfinity,
            value: ExtValue::MinusInfinity,
            minimizer: None,
            unbounded_ray: Some(ray),
            kkt_residual: None,
            approximate: false,
            copositivity: cop,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OrthantOptions<S> {
    pub n_max: usize,
    pub copositivity: CopositivityOptions<S>,
    /// Largest dimension for the `3^n` box probe.
    pub probe_max_dim: usize,
}

impl<S: Scalar> Default for OrthantOptions<S> {
    fn default() -> Self {
        OrthantOptions { n_max: 14, copositivity: CopositivityOptions::default(), probe_max_dim: 9 }
    }
}

fn objective<S: Scalar>(q: &Matrix<S>, lin: &[S], r: S, x: &[S]) -> S {
    q.quad_form(x) + dot(lin, x) + r
}

fn support(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask & (1 << i) != 0).collect()
}

fn scatter<S: Scalar>(n: usize, idx: &[usize], vals: &[S]) -> Vec<S> {
    let mut x = vec![S::zero(); n];
    for (&i, &v) in idx.iter().zip(vals) {
        x[i] = v;
    }
    x
}

/// KKT residual on the orthant: gradient on positive coordinates, negative
/// part of the gradient (the multiplier) on zero coordinates.
fn kkt_residual<S: Scalar>(q: &Matrix<S>, lin: &[S], x: &[S]) -> S {
    let qx = q.mul_vec(x);
    let mut res = S::zero();
    for i in 0..x.len() {
        let g = S::lit(2.0) * qx[i] + lin[i];
        let r = if x[i] > S::lit(1e-12) { g.abs() } else { (-g).max(S::zero()) };
        res = res.max(r);
    }
    res
}

/// Solves a square system, falling back to least squares on singular
/// symmetric systems and accepting the fallback only when consistent.
fn solve_face<S: Scalar>(m: &Matrix<S>, rhs: &[S]) -> Option<Vec<S>> {
    match solve_linear(m, rhs) {
        Ok(x) => Some(x),
        Err(_) => {
            let (x, res) = solve_symmetric_lstsq(m, rhs).ok()?;
            let scale = S::one() + norm2(rhs);
            (res <= S::lit(1e-8) * scale).then_some(x)
        }
    }
}

/// Global minimum of `xᵀQx + qᵀx + r` over `x ≥ 0`.
pub fn min_quadratic_orthant<S: Scalar>(q: &Matrix<S>, lin: &[S], r: S, opts: &OrthantOptions<S>) -> Result<ThetaResult<S>> {
    let n = q.nrows();
    if !q.is_square() || lin.len() != n {
        return Err(Error::Dimension(format!("quadratic of size {}x{} with linear term {}", n, q.ncols(), lin.len())));
    }
    if n > opts.n_max {
        return Err(Error::TooLarge { size: n, limit: opts.n_max });
    }
    if !q.is_finite() || lin.iter().any(|v| !v.is_finite()) || !r.is_finite() {
        return Err(Error::NonFinite("quadratic data"));
    }
    let q = q.symmetrized();
    let scale = S::one().max(q.max_abs());
    let verdict = check_copositive(&q.scale(S::one() / scale), &opts.copositivity)?;
    let cop = verdict.status;
    if cop == CopositivityStatus::NotCopositive {
        let mut d = verdict.witness.expect("not copositive carries a witness");
        let nd = norm2(&d);
        d.iter_mut().for_each(|v| *v = *v / nd);
        return Ok(ThetaResult::minus_infinity(d, cop));
    }

    // Zero-curvature rays with linear decrease.
    if cop != CopositivityStatus::StrictlyCopositive {
        if let Some(d) = zero_curvature_descent(&q, lin, opts.copositivity.eps)? {
            return Ok(ThetaResult::minus_infinity(d, cop));
        }
    }

    let (x, value) = enumerate_orthant_faces(&q, lin, r);

    if cop == CopositivityStatus::Undecided && !box_probe_settles(&q, lin, r, value, opts) {
        return Ok(ThetaResult {
            status: ThetaStatus::Undecided,
            value: ExtValue::Finite(value),
            minimizer: Some(x),
            unbounded_ray: None,
            kkt_residual: None,
            approximate: true,
            copositivity: cop,
        });
    }
    let res = kkt_residual(&q, lin, &x);
    Ok(ThetaResult {
        status: ThetaStatus::Attained,
        value: ExtValue::Finite(value),
        minimizer: Some(x),
        unbounded_ray: None,
        kkt_residual: Some(res),
        approximate: false,
        copositivity: cop,
    })
}

/// Best stationary point over all faces; ties keep the first face in
/// enumeration order (the origin first).
fn enumerate_orthant_faces<S: Scalar>(q: &Matrix<S>, lin: &[S], r: S) -> (Vec<S>, S) {
    let n = q.nrows();
    let mut best_x = vec![S::zero(); n];
    let mut best = r;
    for mask in 1u32..(1u32 << n) {
        let f = support(mask, n);
        let qff = q.select(&f, &f);
        let rhs: Vec<S> = f.iter().map(|&i| -lin[i] / S::lit(2.0)).collect();
        let Some(xf) = solve_face(&qff, &rhs) else { continue };
        if xf.iter().any(|&v| v < S::lit(-1e-12)) {
            continue;
        }
        let xf: Vec<S> = xf.into_iter().map(|v| v.max(S::zero())).collect();
        let x = scatter(n, &f, &xf);
        let v = objective(q, lin, r, &x);
        if v < best - S::lit(1e-12) * (S::one() + best.abs()) {
            best = v;
            best_x = x;
        }
    }
    (best_x, best)
}

/// Searches every face for `d_F ≥ 0` in the numerical kernel of `Q_FF`
/// (eigenvalues within `tol` of zero after scaling) with `eᵀd_F = 1`,
/// minimizing `q_Fᵀd_F`; a negative minimum means the objective decreases
/// without bound along `t·d`, up to curvature of order `tol`.
fn zero_curvature_descent<S: Scalar>(q: &Matrix<S>, lin: &[S], tol: S) -> Result<Option<Vec<S>>> {
    let n = q.nrows();
    let qscale = S::one().max(q.max_abs());
    let lscale = S::one().max(norm2(lin));
    for mask in 1u32..(1u32 << n) {
        let f = support(mask, n);
        if f.iter().all(|&i| lin[i] >= S::zero()) {
            continue;
        }
        let k = f.len();
        let eig = sym_eig(&q.select(&f, &f).scale(S::one() / qscale))?;
        let kernel: Vec<usize> = (0..k).filter(|&j| eig.eigenvalues[j].abs() <= tol).collect();
        if kernel.is_empty() {
            continue;
        }
        // Variables (c⁺, c⁻, d_F): K c⁺ − K c⁻ − d_F = 0, eᵀd_F = 1.
        let r = kernel.len();
        let mut a = Matrix::zeros(k + 1, 2 * r + k);
        for i in 0..k {
            for (col, &j) in kernel.iter().enumerate() {
                let v = eig.eigenvectors[(i, j)];
                a[(i, col)] = v;
                a[(i, r + col)] = -v;
            }
            a[(i, 2 * r + i)] = -S::one();
            a[(k, 2 * r + i)] = S::one();
        }
        let mut b = vec![S::zero(); k + 1];
        b[k] = S::one();
        let mut c = vec![S::zero(); 2 * r + k];
        for (i, &fi) in f.iter().enumerate() {
            c[2 * r + i] = lin[fi] / lscale;
        }
        let lp = lp_solve(&c, &a, &b, Sense::Minimize)?;
        if lp.status != LpStatus::Optimal {
            continue;
        }
        if lp.value.expect("optimal LP has a value") >= S::lit(-1e-9) {
            continue;
        }
        let x = lp.x.expect("optimal LP has a point");
        let d = scatter(n, &f, &x[2 * r..]);
        if dot(&d, &q.mul_vec(&d)) <= S::lit(10.0) * tol * qscale * dot(&d, &d) {
            let nd = norm2(&d);
            return Ok(Some(d.into_iter().map(|v| v / nd).collect()));
        }
    }
    Ok(None)
}

/// Minimizes over `[0, 10^k]^n` for `k = 2, 4, 6`; settles the question when
/// the values stop decreasing by more than one per escalation.
fn box_probe_settles<S: Scalar>(q: &Matrix<S>, lin: &[S], r: S, face_value: S, opts: &OrthantOptions<S>) -> bool {
    let n = q.nrows();
    if n > opts.probe_max_dim {
        return false;
    }
    let values: Vec<S> = [2, 4, 6].iter().map(|&k| min_on_box(q, lin, r, S::lit(10f64.powi(k)))).collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0] - S::one());
    !decreasing && values[2] >= face_value - S::one()
}

/// Exact minimum over a box `[0, u]^n` by enumerating, per coordinate, the
/// states at-zero / at-upper / free.
fn min_on_box<S: Scalar>(q: &Matrix<S>, lin: &[S], r: S, upper: S) -> S {
    let n = q.nrows();
    let total = 3usize.pow(n as u32);
    let mut best = S::infinity();
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut x: Vec<S> = state.iter().map(|&s| if s == 1 { upper } else { S::zero() }).collect();
        if !free.is_empty() {
            let qff = q.select(&free, &free);
            let qx = q.mul_vec(&x);
            let rhs: Vec<S> = free.iter().map(|&i| -(lin[i] / S::lit(2.0) + qx[i])).collect();
            let Some(xf) = solve_face(&qff, &rhs) else { continue };
            if xf.iter().any(|&v| v < S::zero() || v > upper) {
                continue;
            }
            for (&i, &v) in free.iter().zip(&xf) {
                x[i] = v;
            }
        }
        best = best.min(objective(q, lin, r, &x));
    }
    best
}

/// Global minimum of `xᵀQx + qᵀx + r` over the polytope `{x ≥ 0 : A x = b}`.
pub fn min_quadratic_polytope<S: Scalar>(
    q: &Matrix<S>,
    lin: &[S],
    r: S,
    a: &Matrix<S>,
    b: &[S],
    n_max: usize,
) -> Result<ThetaResult<S>> {
    let n = q.nrows();
    if !q.is_square() || lin.len() != n || a.ncols() != n || a.nrows() != b.len() {
        return Err(Error::Dimension("polytope quadratic data".into()));
    }
    if n > n_max {
        return Err(Error::TooLarge { size: n, limit: n_max });
    }
    let q = q.symmetrized();
    let ones = vec![S::one(); n];
    let lp = lp_solve(&ones, a, b, Sense::Maximize)?;
    match lp.status {
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => {
            // Attainment still holds when Q is strictly copositive on the
            // recession cone {d ≥ 0 : A d = 0}.
            let cone = PolyhedralCone { dim: n, equalities: a.to_rows(), zero_set: vec![] };
            let scale = S::one().max(q.max_abs());
            let v = check_copositive_on_cone(&q.scale(S::one() / scale), &cone, &CopositivityOptions::default())?;
            match v.status {
                CopositivityStatus::StrictlyCopositive => {}
                CopositivityStatus::NotCopositive => {
                    let mut d = v.witness.expect("not copositive carries a witness");
                    let nd = norm2(&d);
                    d.iter_mut().for_each(|t| *t = *t / nd);
                    return Ok(ThetaResult::minus_infinity(d, v.status));
                }
                _ => return Err(Error::Unbounded),
            }
        }
        LpStatus::Optimal => {}
    }
    let m = a.nrows();
    let bscale = S::one() + norm2(b);
    let mut best: Option<(Vec<S>, S)> = None;
    for mask in 0u32..(1u32 << n) {
        let f = support(mask, n);
        let k = f.len();
        let x = if k == 0 {
            vec![S::zero(); n]
        } else {
            let mut kkt = Matrix::zeros(k + m, k + m);
            for (ii, &i) in f.iter().enumerate() {
                for (jj, &j) in f.iter().enumerate() {
                    kkt[(ii, jj)] = S::lit(2.0) * q[(i, j)];
                }
                for row in 0..m {
                    kkt[(ii, k + row)] = a[(row, i)];
                    kkt[(k + row, ii)] = a[(row, i)];
                }
            }
            let mut rhs: Vec<S> = f.iter().map(|&i| -lin[i]).collect();
            rhs.extend_from_slice(b);
            let Some(sol) = solve_face(&kkt, &rhs) else { continue };
            if sol[..k].iter().any(|&v| v < S::lit(-1e-12)) {
                continue;
            }
            scatter(n, &f, &sol[..k].iter().map(|&v| v.max(S::zero())).collect::<Vec<_>>())
        };
        let resid: Vec<S> = a.mul_vec(&x).iter().zip(b).map(|(&p, &t)| p - t).collect();
        if norm2(&resid) > S::lit(1e-9) * bscale {
            continue;
        }
        let v = objective(&q, lin, r, &x);
        if best.as_ref().is_none_or(|(_, bv)| v < *bv - S::lit(1e-12) * (S::one() + bv.abs())) {
            best = Some((x, v));
        }
    }
    if let Some((x, v)) = best {
        return Ok(ThetaResult {
            status: ThetaStatus::Attained,
            value: ExtValue::Finite(v),
            minimizer: Some(x),
            unbounded_ray: None,
            kkt_residual: None,
            approximate: false,
            copositivity: CopositivityStatus::Undecided,
        });
    }
    // Numerical fallback: vertices and edge midpoints.
    let verts = enumerate_vertices(a, b)?;
    let mut cands = verts.clone();
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            cands.push(verts[i].iter().zip(&verts[j]).map(|(&p, &t)| S::lit(0.5) * (p + t)).collect());
        }
    }
    let (x, v) = cands
        .into_iter()
        .map(|x| {
            let v = objective(&q, lin, r, &x);
            (x, v)
        })
        .fold(None, |acc: Option<(Vec<S>, S)>, c| match acc {
            Some(bst) if bst.1 <= c.1 => Some(bst),
            _ => Some(c),
        })
        .ok_or(Error::Infeasible)?;
    Ok(ThetaResult {
        status: ThetaStatus::Attained,
        value: ExtValue::Finite(v),
        minimizer: Some(x),
        unbounded_ray: None,
        kkt_residual: None,
        approximate: true,
        copositivity: CopositivityStatus::Undecided,
    })
}
