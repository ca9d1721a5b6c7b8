//! Brute-force primal solvers used as ground truth, and membership in the
//! extended image set.

pub mod interval;
pub mod membership;

use serde::Serialize;

pub use membership::{membership, MembershipOptions, MembershipQuery, MembershipVerdict, NonMembershipCertificate};

use crate::error::{Error, Result};
use crate::numkernel::{solve_linear, Matrix};
use crate::orthant_qp::{min_quadratic_orthant, min_quadratic_polytope, OrthantOptions, ThetaStatus};
use crate::qp_model::{HqpInstance, LinearEquality, MixedIntegerQp, QpInstance, Quadratic, RobustMiqp};
use crate::scalar::{norm2, ExtValue, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrimalMethod {
    BinaryEnumeration,
    FaceEnumeration,
    Grid,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrimalResult<S> {
    pub value: ExtValue<S>,
    pub argmin: Option<Vec<S>>,
    pub method: PrimalMethod,
    /// Half-width of the uncertainty on `value` (zero for exact methods).
    pub error_bar: S,
    /// No feasible grid point was found; the problem may still be feasible.
    pub possibly_infeasible: bool,
    pub feasibility_residual: S,
    /// Some continuous restriction fell back to a heuristic candidate set.
    pub approximate: bool,
}

impl<S: Scalar> PrimalResult<S> {
    fn infeasible(method: PrimalMethod) -> Self {
        PrimalResult {
            value: ExtValue::PlusInfinity,
            argmin: None,
            method,
            error_bar: S::zero(),
            possibly_infeasible: false,
            feasibility_residual: S::zero(),
            approximate: false,
        }
    }

    fn unbounded(method: PrimalMethod) -> Self {
        PrimalResult { value: ExtValue::MinusInfinity, ..Self::infeasible(method) }
    }
}

/// Largest dimension accepted by the grid oracle.
pub const GRID_MAX_DIM: usize = 4;
/// Largest binary count enumerated.
pub const MAX_BINARIES: usize = 20;
const FACE_MAX_DIM: usize = 16;

/// `min f(x)` over `{x ≥ 0 : g_i(x) ≤ 0}`, searched on the box `[0, R]^n` by a
/// refined grid unless every constraint is linear, in which case faces of
/// the slack polytope are enumerated exactly.
pub fn solve_qp_bruteforce<S: Scalar>(p: &QpInstance<S>, radius: S) -> Result<PrimalResult<S>> {
    if p.all_linear() {
        return linear_constraints(p, radius);
    }
    if p.n > GRID_MAX_DIM {
        return Err(Error::TooLarge { size: p.n, limit: GRID_MAX_DIM });
    }
    if !(radius > S::zero()) || !radius.is_finite() {
        return Err(Error::Precondition("grid radius must be positive and finite".into()));
    }
    Ok(grid_search(p, radius))
}

fn linear_constraints<S: Scalar>(p: &QpInstance<S>, radius: S) -> Result<PrimalResult<S>> {
    let n = p.n;
    let obj = &p.objective;
    if p.constraints.is_empty() {
        let t = min_quadratic_orthant(&obj.a, &obj.b, obj.c, &OrthantOptions::default())?;
        return match t.status {
            ThetaStatus::Attained => Ok(exact(p, t.minimizer.expect("attained"), PrimalMethod::FaceEnumeration)),
            ThetaStatus::MinusInfinity => Ok(PrimalResult::unbounded(PrimalMethod::FaceEnumeration)),
            ThetaStatus::Undecided => Err(Error::Precondition("orthant minimization undecided".into())),
        };
    }
    // b_iᵀx + s_i = −c_i with slacks s ≥ 0.
    let m = p.constraints.len();
    let build = |boxed: bool| {
        let cols = n + m + if boxed { n } else { 0 };
        let rows = m + if boxed { n } else { 0 };
        let a = Matrix::from_fn(rows, cols, |r, j| {
            if r < m {
                if j < n {
                    p.constraints[r].b[j]
                } else if j == n + r {
                    S::one()
                } else {
                    S::zero()
                }
            } else {
                let i = r - m;
                if j == i || j == n + m + i {
                    S::one()
                } else {
                    S::zero()
                }
            }
        });
        let mut rhs: Vec<S> = p.constraints.iter().map(|g| -g.c).collect();
        if boxed {
            rhs.extend(std::iter::repeat_n(radius, n));
        }
        let q = obj.a.embed(cols, cols, 0, 0);
        let mut lin = obj.b.clone();
        lin.resize(cols, S::zero());
        (q, lin, a, rhs)
    };
    let (q, lin, a, rhs) = build(false);
    let res = match min_quadratic_polytope(&q, &lin, obj.c, &a, &rhs, FACE_MAX_DIM) {
        Err(Error::Unbounded) if radius.is_finite() && radius > S::zero() => {
            let (q, lin, a, rhs) = build(true);
            min_quadratic_polytope(&q, &lin, obj.c, &a, &rhs, FACE_MAX_DIM)
        }
        other => other,
    };
    match res {
        Err(Error::Infeasible) => Ok(PrimalResult::infeasible(PrimalMethod::FaceEnumeration)),
        Err(e) => Err(e),
        Ok(t) if t.status == ThetaStatus::MinusInfinity => Ok(PrimalResult::unbounded(PrimalMethod::FaceEnumeration)),
        Ok(t) => {
            let mut r = exact(p, t.minimizer.expect("attained")[..n].to_vec(), PrimalMethod::FaceEnumeration);
            r.approximate = t.approximate;
            Ok(r)
        }
    }
}

fn exact<S: Scalar>(p: &QpInstance<S>, x: Vec<S>, method: PrimalMethod) -> PrimalResult<S> {
    let value = p.objective.eval(&x);
    let residual = p.infeasibility(&x).unwrap_or(S::infinity());
    PrimalResult {
        value: ExtValue::Finite(value),
        argmin: Some(x),
        method,
        error_bar: S::zero(),
        possibly_infeasible: false,
        feasibility_residual: residual,
        approximate: false,
    }
}

/// Newton on the KKT system of the face and constraint set active at `x`,
/// for a few activity thresholds. A lattice cannot follow a curved boundary,
/// so grid points stall short of a minimizer lying on one. Returns the best
/// feasible improvement found.
fn polish<S: Scalar>(p: &QpInstance<S>, x: &[S], radius: S, feasible: &impl Fn(&[S]) -> bool) -> Option<(Vec<S>, S)> {
    let n = p.n;
    let grad = |q: &Quadratic<S>, y: &[S]| -> Vec<S> {
        let ay = q.a.mul_vec(y);
        let aty = q.a.transpose().mul_vec(y);
        (0..n).map(|i| ay[i] + aty[i] + q.b[i]).collect()
    };
    let mut best: Option<(Vec<S>, S)> = None;
    for tol in [1e-9, 1e-6, 1e-4, 1e-3] {
        let t = S::lit(tol);
        let free: Vec<usize> = (0..n).filter(|&j| x[j] > t * radius).collect();
        let active: Vec<usize> = (0..p.constraints.len())
            .filter(|&i| {
                let g = &p.constraints[i];
                g.eval(x) >= -t * (S::one() + norm2(&grad(g, x)))
            })
            .collect();
        let (k, m) = (free.len(), active.len());
        if k == 0 || m > k {
            continue;
        }
        let mut y: Vec<S> = x.iter().enumerate().map(|(j, &v)| if free.contains(&j) { v } else { S::zero() }).collect();
        let mut lambda = vec![S::zero(); m];
        let mut ok = false;
        for _ in 0..50 {
            let gf = grad(&p.objective, &y);
            let gg: Vec<Vec<S>> = active.iter().map(|&i| grad(&p.constraints[i], &y)).collect();
            let mut res = vec![S::zero(); k + m];
            for (r, &j) in free.iter().enumerate() {
                res[r] = gf[j] + (0..m).fold(S::zero(), |acc, a| acc + lambda[a] * gg[a][j]);
            }
            for (a, &i) in active.iter().enumerate() {
                res[k + a] = p.constraints[i].eval(&y);
            }
            if norm2(&res) <= S::lit(1e-13) * (S::one() + norm2(&gf)) {
                ok = true;
                break;
            }
            let mut jac = Matrix::zeros(k + m, k + m);
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    let mut h = p.objective.a[(i, j)] + p.objective.a[(j, i)];
                    for (a, &ci) in active.iter().enumerate() {
                        let q = &p.constraints[ci].a;
                        h = h + lambda[a] * (q[(i, j)] + q[(j, i)]);
                    }
                    jac[(r, c)] = h;
                }
                for a in 0..m {
                    jac[(r, k + a)] = gg[a][i];
                    jac[(k + a, r)] = gg[a][i];
                }
            }
            let Ok(step) = solve_linear(&jac, &res) else { break };
            for (r, &j) in free.iter().enumerate() {
                y[j] = y[j] - step[r];
            }
            for a in 0..m {
                lambda[a] = lambda[a] - step[k + a];
            }
        }
        if !ok || y.iter().any(|&v| v < S::zero() || v > radius) || !feasible(&y) {
            continue;
        }
        let v = p.objective.eval(&y);
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((y, v));
        }
    }
    best
}

/// Coarse-grid seeds refined independently.
const SEEDS: usize = 12;
/// Recentering moves per seed before the spacing is forced down.
const MAX_MOVES: usize = 400;

fn grid_search<S: Scalar>(p: &QpInstance<S>, radius: S) -> PrimalResult<S> {
    let n = p.n;
    let scale = p
        .constraints
        .iter()
        .map(|g| S::one().max(g.a.max_abs()).max(g.c.abs()).max(g.b.iter().fold(S::zero(), |m, v| m.max(v.abs()))))
        .fold(S::one(), S::max);
    let feas_tol = S::lit(1e-12) * scale;
    let feasible = |x: &[S]| p.constraints.iter().all(|g| g.eval(x) <= feas_tol);
    let (initial, zoom_points) = match n {
        1 => (2001, 41),
        2 => (201, 21),
        3 => (41, 11),
        _ => (17, 9),
    };

    // Every feasible point of the scan, or only improvements of `best`.
    let scan = |lo: &[S], step: S, points: usize, best: &mut Option<(Vec<S>, S)>, all: Option<&mut Vec<(Vec<S>, S)>>| {
        let total = points.pow(n as u32);
        let mut x = vec![S::zero(); n];
        let mut all = all;
        for mut code in 0..total {
            for i in 0..n {
                x[i] = (lo[i] + step * S::from_usize_lossy(code % points)).min(radius);
                code /= points;
            }
            if !feasible(&x) {
                continue;
            }
            let v = p.objective.eval(&x);
            if let Some(all) = all.as_deref_mut() {
                all.push((x.clone(), v));
            }
            if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                *best = Some((x.clone(), v));
            }
        }
    };

    let coarse = radius / S::from_usize_lossy(initial - 1);
    let mut best: Option<(Vec<S>, S)> = None;
    let mut points = Vec::new();
    scan(&vec![S::zero(); n], coarse, initial, &mut best, Some(&mut points));
    if best.is_none() {
        let mut r = PrimalResult::infeasible(PrimalMethod::Grid);
        r.possibly_infeasible = true;
        return r;
    }
    // Seeds: the best coarse points at least a few cells apart, so a basin
    // whose floor falls between grid points is still refined.
    points.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));
    let mut seeds: Vec<(Vec<S>, S)> = Vec::new();
    for (x, v) in points {
        if seeds.len() == SEEDS {
            break;
        }
        let apart = seeds.iter().all(|(y, _)| x.iter().zip(y).any(|(&a, &b)| (a - b).abs() > S::lit(3.0) * coarse));
        if apart {
            seeds.push((x, v));
        }
    }
    let shrink = S::from_usize_lossy(zoom_points - 1) / S::lit(4.0);
    let mut refined: Vec<((Vec<S>, S), S, S)> = Vec::new();
    for seed in seeds {
        // Pattern search: rescan at the same spacing while the incumbent
        // moves, refine once it stays put.
        let mut local = Some(seed);
        let mut step = coarse / shrink;
        let mut last_gain = S::zero();
        let mut moves = 0;
        while step > S::lit(1e-9) * radius {
            let (center, before) = local.clone().expect("seed exists");
            let half = S::from_usize_lossy((zoom_points - 1) / 2) * step;
            let lo: Vec<S> = center.iter().map(|&c| (c - half).max(S::zero())).collect();
            scan(&lo, step, zoom_points, &mut local, None);
            let after = local.as_ref().expect("seed exists").1;
            last_gain = before - after;
            if after < before && moves < MAX_MOVES {
                moves += 1;
            } else {
                step = step / shrink;
            }
        }
        refined.push((local.expect("seed exists"), last_gain, step));
    }
    for ((x, v), _, _) in refined.iter_mut() {
        if let Some((y, w)) = polish(p, x, radius, &feasible) {
            if w < *v {
                *x = y;
                *v = w;
            }
        }
    }
    let ((x, v), last_gain, step) = refined
        .into_iter()
        .min_by(|a, b| a.0 .1.partial_cmp(&b.0 .1).expect("finite objective"))
        .expect("at least one seed");
    let best = Some((x, v));
    let (x, v) = best.expect("incumbent exists");
    let grad_norm = {
        let ax = p.objective.a.mul_vec(&x);
        let g: Vec<S> = ax.iter().zip(&p.objective.b).map(|(&a, &b)| S::lit(2.0) * a + b).collect();
        norm2(&g)
    };
    let error_bar = last_gain + grad_norm * step * S::from_usize_lossy(n).sqrt();
    let residual = p.infeasibility(&x).unwrap_or(S::infinity());
    PrimalResult {
        value: ExtValue::Finite(v),
        argmin: Some(x),
        method: PrimalMethod::Grid,
        error_bar,
        possibly_infeasible: false,
        feasibility_residual: residual,
        approximate: false,
    }
}

/// Box radius that contains `{x ≥ 0 : xᵀBx ≤ 1}` when `B` is strictly
/// copositive: `xᵀBx ≥ μ‖x‖₁²` with `μ` the standard-simplex minimum.
pub fn hqp_box_radius<S: Scalar>(h: &HqpInstance<S>) -> Result<S> {
    let mu = crate::copositivity::minimize_on_simplex(&h.b)?.value;
    if !(mu > S::zero()) {
        return Err(Error::Precondition("constraint matrix is not strictly copositive".into()));
    }
    Ok(S::one() / mu.sqrt())
}

pub fn solve_hqp_bruteforce<S: Scalar>(h: &HqpInstance<S>) -> Result<PrimalResult<S>> {
    let radius = hqp_box_radius(h)?;
    solve_qp_bruteforce(&QpInstance::from(h.clone()), radius)
}

/// Exhaustive over the binary patterns; each continuous restriction is solved
/// by face enumeration on its polytope.
pub fn solve_miqp_bruteforce<S: Scalar>(p: &MixedIntegerQp<S>) -> Result<PrimalResult<S>> {
    let s = p.binary_count;
    if s > MAX_BINARIES {
        return Err(Error::TooLarge { size: s, limit: MAX_BINARIES });
    }
    let n = p.n;
    let (eq, rhs) = p.equality_system();
    let cont: Vec<usize> = (s..n).collect();
    let bins: Vec<usize> = (0..s).collect();
    let obj = &p.objective;
    let mut best: Option<PrimalResult<S>> = None;
    let mut approximate = false;
    for pattern in 0u64..(1u64 << s) {
        let z: Vec<S> = (0..s).map(|i| if pattern & (1 << i) != 0 { S::one() } else { S::zero() }).collect();
        let candidate = if cont.is_empty() {
            let resid = eq.mul_vec(&z).iter().zip(&rhs).fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            if resid > S::lit(1e-9) * (S::one() + norm2(&rhs)) {
                continue;
            }
            z.clone()
        } else {
            let ayy = obj.a.select(&cont, &cont);
            let ayb = obj.a.select(&cont, &bins);
            let aby = obj.a.select(&bins, &cont);
            let cross1 = ayb.mul_vec(&z);
            let cross2 = aby.transpose().mul_vec(&z);
            let lin: Vec<S> = (0..cont.len()).map(|j| obj.b[cont[j]] + cross1[j] + cross2[j]).collect();
            let e_y = eq.select(&(0..eq.nrows()).collect::<Vec<_>>(), &cont);
            let e_b = eq.select(&(0..eq.nrows()).collect::<Vec<_>>(), &bins);
            let shift = e_b.mul_vec(&z);
            let r: Vec<S> = rhs.iter().zip(&shift).map(|(&b, &t)| b - t).collect();
            match min_quadratic_polytope(&ayy, &lin, S::zero(), &e_y, &r, FACE_MAX_DIM) {
                Err(Error::Infeasible) => continue,
                Err(e) => return Err(e),
                Ok(t) if t.status == ThetaStatus::MinusInfinity => {
                    return Ok(PrimalResult::unbounded(PrimalMethod::BinaryEnumeration));
                }
                Ok(t) => {
                    approximate |= t.approximate;
                    let mut x = z.clone();
                    x.extend(t.minimizer.expect("attained"));
                    x
                }
            }
        };
        let v = obj.eval(&candidate);
        if best.as_ref().is_none_or(|b| b.value.as_scalar() > v) {
            best = Some(PrimalResult {
                value: ExtValue::Finite(v),
                feasibility_residual: p.infeasibility(&candidate),
                argmin: Some(candidate),
                method: PrimalMethod::BinaryEnumeration,
                error_bar: S::zero(),
                possibly_infeasible: false,
                approximate: false,
            });
        }
    }
    let mut out = best.unwrap_or_else(|| PrimalResult::infeasible(PrimalMethod::BinaryEnumeration));
    out.approximate = approximate;
    Ok(out)
}

/// `min xᵀ(A_0+ρI)x + max_k c_kᵀx`: for each scenario `k`, minimize with cost
/// `c_k` on the region where `k` attains the maximum (extra slack variables
/// carry `(c_k − c_j)ᵀx ≥ 0`), then take the best.
pub fn solve_robust_bruteforce<S: Scalar>(p: &RobustMiqp<S>) -> Result<PrimalResult<S>> {
    let n = p.n;
    let q = p.num_scenarios();
    let costs: Vec<Vec<S>> = (0..q).map(|k| p.scenario_cost(k)).collect();
    let mut best: Option<PrimalResult<S>> = None;
    for k in 0..q {
        let others: Vec<usize> = (0..q).filter(|&j| j != k).collect();
        let dim = n + others.len();
        let mut equalities: Vec<LinearEquality<S>> = p
            .equalities
            .iter()
            .map(|e| {
                let mut a = e.a.clone();
                a.resize(dim, S::zero());
                LinearEquality { a, b: e.b }
            })
            .collect();
        for (t, &j) in others.iter().enumerate() {
            let mut a: Vec<S> = costs[k].iter().zip(&costs[j]).map(|(&ck, &cj)| ck - cj).collect();
            a.resize(dim, S::zero());
            a[n + t] = -S::one();
            equalities.push(LinearEquality { a, b: S::zero() });
        }
        let mut cost = costs[k].clone();
        cost.resize(dim, S::zero());
        let sub = MixedIntegerQp {
            n: dim,
            objective: Quadratic::new(p.worst_case_hessian().embed(dim, dim, 0, 0), cost, S::zero()),
            equalities,
            binary_count: p.binary_count,
        };
        let mut r = solve_miqp_bruteforce(&sub)?;
        if r.value == ExtValue::MinusInfinity {
            return Ok(r);
        }
        if let Some(x) = r.argmin.as_mut() {
            x.truncate(n);
            r.value = ExtValue::Finite(p.robust_objective(x));
        }
        let better = match (&best, r.value) {
            (_, ExtValue::PlusInfinity) => false,
            (None, _) => true,
            (Some(b), v) => v.as_scalar() < b.value.as_scalar(),
        };
        if better {
            best = Some(r);
        }
    }
    match best {
        Some(mut r) => {
            let x = r.argmin.clone().expect("finite value carries a point");
            let base = MixedIntegerQp { n, objective: Quadratic::zero(n), equalities: p.equalities.clone(), binary_count: p.binary_count };
            r.feasibility_residual = base.infeasibility(&x);
            Ok(r)
        }
        None => Err(Error::Infeasible),
    }
}
