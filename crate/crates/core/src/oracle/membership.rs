//! Membership in the extended image set
//! `{(g_0(x), …, g_m(x), f(x)) : x ≥ 0} + R^{m+2}_+`.
//!
//! A target `(u, r)` is a member iff `h_i = g_i − u_i ≤ 0` and `h_f = f − r ≤ 0`
//! have a common solution `x ≥ 0`. Witnesses are searched along rays `t·d`,
//! where each `h_j(t·d)` is a univariate quadratic solved exactly.
//! Non-membership is certified face by face on the orthant: either some
//! `h_j` restricted to the face has only nonnegative coefficients and is not
//! identically zero (so it is positive on the relative interior), or an
//! interval branch-and-bound proves `max_j h_j > 0` on the closed face,
//! covered by a bounded chart `[0, R]^F` and one tail chart per coordinate
//! (`x_k = 1/s` largest, `x_j = y_j/s`, everything multiplied by `s²`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::interval::{certify_positive_max, BoxCell};
use crate::error::{Error, Result};
use crate::numkernel::{lp_solve, LpStatus, Matrix, Sense};
use crate::qp_model::{QpInstance, Quadratic};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipVerdict {
    Member,
    NonMember,
    Undecided,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NonMembershipCertificate {
    /// Faces settled by the coefficient sign rule.
    pub sign_rule_faces: usize,
    /// Faces whose closure was settled by interval branch-and-bound.
    pub interval_faces: usize,
    pub interval_cells: usize,
    pub radius: f64,
    /// Exact infeasibility of a linear system.
    pub linear_program: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipQuery<S> {
    pub target: Vec<S>,
    pub verdict: MembershipVerdict,
    pub witness: Option<Vec<S>>,
    pub certificate: Option<NonMembershipCertificate>,
}

#[derive(Clone, Debug)]
pub struct MembershipOptions {
    pub tol: f64,
    pub random_directions: usize,
    pub seed: u64,
    pub max_cells: usize,
    pub radii: Vec<f64>,
    pub max_dim: usize,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions {
            tol: 1e-9,
            random_directions: 4000,
            seed: 7,
            max_cells: 400_000,
            radii: vec![1.0, 10.0, 100.0],
            max_dim: 8,
        }
    }
}

fn shifted_system<S: Scalar>(p: &QpInstance<S>, target: &[S]) -> Vec<Quadratic<S>> {
    let mut hs: Vec<Quadratic<S>> = p
        .constraints
        .iter()
        .zip(target)
        .map(|(g, &t)| Quadratic::new(g.a.clone(), g.b.clone(), g.c - t))
        .collect();
    let last = *target.last().expect("target is nonempty");
    hs.push(Quadratic::new(p.objective.a.clone(), p.objective.b.clone(), p.objective.c - last));
    hs
}

pub fn membership<S: Scalar>(p: &QpInstance<S>, target: &[S], opts: &MembershipOptions) -> Result<MembershipQuery<S>> {
    if target.len() != p.constraints.len() + 1 {
        return Err(Error::Dimension(format!("target has length {}, expected {}", target.len(), p.constraints.len() + 1)));
    }
    let n = p.n;
    if n > opts.max_dim {
        return Err(Error::TooLarge { size: n, limit: opts.max_dim });
    }
    let hs = shifted_system(p, target);
    let tol = S::lit(opts.tol);
    let answer = |verdict, witness, certificate| MembershipQuery { target: target.to_vec(), verdict, witness, certificate };

    if hs.iter().all(Quadratic::is_linear) {
        return linear_membership(&hs, n, tol).map(|(v, w, c)| answer(v, w, c));
    }
    if let Some(x) = ray_witness(&hs, n, tol, opts) {
        return Ok(answer(MembershipVerdict::Member, Some(x), None));
    }
    match certify_empty(&hs, n, opts) {
        Some(cert) => Ok(answer(MembershipVerdict::NonMember, None, Some(cert))),
        None => Ok(answer(MembershipVerdict::Undecided, None, None)),
    }
}

type LinearAnswer<S> = (MembershipVerdict, Option<Vec<S>>, Option<NonMembershipCertificate>);

fn linear_membership<S: Scalar>(hs: &[Quadratic<S>], n: usize, tol: S) -> Result<LinearAnswer<S>> {
    // b_jᵀx + s_j = −c_j with x, s ≥ 0.
    let k = hs.len();
    let a = Matrix::from_fn(k, n + k, |j, i| if i < n { hs[j].b[i] } else if i - n == j { S::one() } else { S::zero() });
    let rhs: Vec<S> = hs.iter().map(|h| -h.c).collect();
    let lp = lp_solve(&vec![S::zero(); n + k], &a, &rhs, Sense::Minimize)?;
    match lp.status {
        LpStatus::Optimal => {
            let x = lp.x.expect("optimal LP has a point")[..n].to_vec();
            if hs.iter().all(|h| h.eval(&x) <= tol) {
                Ok((MembershipVerdict::Member, Some(x), None))
            } else {
                Ok((MembershipVerdict::Undecided, None, None))
            }
        }
        LpStatus::Infeasible => {
            Ok((MembershipVerdict::NonMember, None, Some(NonMembershipCertificate { linear_program: true, ..Default::default() })))
        }
        LpStatus::Unbounded => Err(Error::Invalid("feasibility LP cannot be unbounded".into())),
    }
}

/// `{t ≥ 0 : α t² + β t + γ ≤ 0}` as a union of intervals.
fn sublevel<S: Scalar>(alpha: S, beta: S, gamma: S) -> Vec<(S, S)> {
    let inf = S::infinity();
    let tiny = S::lit(1e-14) * (S::one() + beta.abs() + gamma.abs());
    let clip = |iv: Vec<(S, S)>| -> Vec<(S, S)> {
        iv.into_iter().filter(|&(l, h)| h >= S::zero() && l <= h).map(|(l, h)| (l.max(S::zero()), h)).collect()
    };
    if alpha.abs() <= tiny {
        if beta.abs() <= tiny {
            return if gamma <= S::zero() { vec![(S::zero(), inf)] } else { vec![] };
        }
        let root = -gamma / beta;
        return if beta > S::zero() { clip(vec![(S::neg_infinity(), root)]) } else { clip(vec![(root, inf)]) };
    }
    let disc = beta * beta - S::lit(4.0) * alpha * gamma;
    if disc < S::zero() {
        return if alpha > S::zero() { vec![] } else { vec![(S::zero(), inf)] };
    }
    let sq = disc.sqrt();
    let qv = -S::lit(0.5) * (beta + if beta >= S::zero() { sq } else { -sq });
    let (mut r1, mut r2) = if qv == S::zero() { (S::zero(), S::zero()) } else { (qv / alpha, gamma / qv) };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    if alpha > S::zero() {
        clip(vec![(r1, r2)])
    } else {
        clip(vec![(S::neg_infinity(), r1), (r2, inf)])
    }
}

fn intersect<S: Scalar>(a: &[(S, S)], b: &[(S, S)]) -> Vec<(S, S)> {
    let mut out = vec![];
    for &(l1, h1) in a {
        for &(l2, h2) in b {
            let (l, h) = (l1.max(l2), h1.min(h2));
            if l <= h {
                out.push((l, h));
            }
        }
    }
    out
}

fn directions<S: Scalar>(n: usize, opts: &MembershipOptions) -> Vec<Vec<S>> {
    let levels: Vec<f64> = match n {
        0..=2 => std::iter::once(0.0).chain((-8..=8).map(|e| 10f64.powf(e as f64 / 2.0))).collect(),
        3 => std::iter::once(0.0).chain((-4..=4).map(|e| 10f64.powi(e))).collect(),
        4 => std::iter::once(0.0).chain((-3..=3).map(|e| 10f64.powi(e))).collect(),
        _ => vec![],
    };
    let mut out = vec![];
    if !levels.is_empty() {
        let base = levels.len();
        let total = base.pow(n as u32);
        for mut code in 1..total {
            let d: Vec<S> = (0..n)
                .map(|_| {
                    let v = levels[code % base];
                    code /= base;
                    S::lit(v)
                })
                .collect();
            out.push(d);
        }
    } else {
        for i in 0..n {
            let mut e = vec![S::zero(); n];
            e[i] = S::one();
            out.push(e);
        }
    }
    // The grid only sees ratios that are powers of ten, so witnesses in a
    // narrow cone between them need random directions too.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_directions {
        out.push(
            (0..n)
                .map(|_| if rng.gen_bool(0.25) { S::zero() } else { S::lit(10f64.powf(rng.gen_range(-3.0..3.0))) })
                .collect(),
        );
    }
    out
}

fn ray_witness<S: Scalar>(hs: &[Quadratic<S>], n: usize, tol: S, opts: &MembershipOptions) -> Option<Vec<S>> {
    let origin = vec![S::zero(); n];
    if hs.iter().all(|h| h.eval(&origin) <= tol) {
        return Some(origin);
    }
    let slack = S::lit(0.5) * tol;
    for d in directions::<S>(n, opts) {
        let mut feasible = vec![(S::zero(), S::infinity())];
        for h in hs {
            let alpha = h.a.quad_form(&d);
            let beta = crate::scalar::dot(&h.b, &d);
            feasible = intersect(&feasible, &sublevel(alpha, beta, h.c - slack));
            if feasible.is_empty() {
                break;
            }
        }
        for &(lo, hi) in &feasible {
            let cands = if hi.is_finite() { [S::lit(0.5) * (lo + hi), lo, hi] } else { [lo + S::one(), lo, lo * S::lit(2.0)] };
            for t in cands {
                let x: Vec<S> = d.iter().map(|&v| v * t).collect();
                if hs.iter().all(|h| h.eval(&x) <= tol) {
                    return Some(x);
                }
            }
        }
    }
    None
}

fn restrict<S: Scalar>(h: &Quadratic<S>, face: &[usize]) -> Quadratic<S> {
    Quadratic::new(h.a.select(face, face), face.iter().map(|&i| h.b[i]).collect(), h.c)
}

/// Positive on the open orthant of the face by coefficient signs.
fn sign_rule<S: Scalar>(h: &Quadratic<S>) -> bool {
    let k = h.dim();
    let mut any_positive = h.c > S::zero();
    if h.c < S::zero() {
        return false;
    }
    for i in 0..k {
        let coefs = std::iter::once(h.b[i]).chain((i..k).map(|j| if i == j { h.a[(i, i)] } else { h.a[(i, j)] + h.a[(j, i)] }));
        for v in coefs {
            if v < S::zero() {
                return false;
            }
            any_positive = any_positive || v > S::zero();
        }
    }
    any_positive
}

/// `s² h(ỹ / s)` with `ỹ_k = 1`, as a quadratic in `(y_{−k}, s)`. Linear
/// functions are scaled by `s` only so they do not vanish at infinity.
fn tail_chart<S: Scalar>(h: &Quadratic<S>, k: usize) -> Quadratic<S> {
    let dim = h.dim();
    let idx = |i: usize| if i < k { i } else { i - 1 };
    let s = dim - 1;
    if h.is_linear() {
        let mut b = vec![S::zero(); dim];
        for i in (0..dim).filter(|&i| i != k) {
            b[idx(i)] = h.b[i];
        }
        b[s] = h.c;
        return Quadratic::new(Matrix::zeros(dim, dim), b, h.b[k]);
    }
    let mut a = Matrix::zeros(dim, dim);
    let mut b = vec![S::zero(); dim];
    let c = h.a[(k, k)];
    for i in 0..dim {
        if i == k {
            continue;
        }
        for j in 0..dim {
            if j == k {
                continue;
            }
            a[(idx(i), idx(j))] = h.a[(i, j)];
        }
        b[idx(i)] = b[idx(i)] + h.a[(i, k)] + h.a[(k, i)];
        a[(idx(i), s)] = a[(idx(i), s)] + S::lit(0.5) * h.b[i];
        a[(s, idx(i))] = a[(s, idx(i))] + S::lit(0.5) * h.b[i];
    }
    b[s] = b[s] + h.b[k];
    a[(s, s)] = a[(s, s)] + h.c;
    Quadratic::new(a, b, c)
}

fn closure_certified<S: Scalar>(hs: &[Quadratic<S>], radius: S, max_cells: usize, cells: &mut usize) -> bool {
    let dim = hs[0].dim();
    let bounded = BoxCell { lo: vec![S::zero(); dim], hi: vec![radius; dim] };
    let st = certify_positive_max(hs, bounded, max_cells);
    *cells += st.cells;
    if !st.certified {
        return false;
    }
    for k in 0..dim {
        let charts: Vec<Quadratic<S>> = hs.iter().map(|h| tail_chart(h, k)).collect();
        let mut hi = vec![S::one(); dim];
        hi[dim - 1] = S::one() / radius;
        let st = certify_positive_max(&charts, BoxCell { lo: vec![S::zero(); dim], hi }, max_cells);
        *cells += st.cells;
        if !st.certified {
            return false;
        }
    }
    true
}

fn certify_empty<S: Scalar>(hs: &[Quadratic<S>], n: usize, opts: &MembershipOptions) -> Option<NonMembershipCertificate> {
    let mut masks: Vec<u32> = (0..(1u32 << n)).collect();
    masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    'radius: for &radius in &opts.radii {
        let mut cert = NonMembershipCertificate { radius, ..Default::default() };
        let mut covered: Vec<u32> = vec![];
        for &mask in &masks {
            if covered.iter().any(|&c| mask & !c == 0) {
                continue;
            }
            let face: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let restricted: Vec<Quadratic<S>> = hs.iter().map(|h| restrict(h, &face)).collect();
            if restricted.iter().any(sign_rule) {
                cert.sign_rule_faces += 1;
                continue;
            }
            if face.is_empty() {
                continue 'radius;
            }
            if closure_certified(&restricted, S::lit(radius), opts.max_cells, &mut cert.interval_cells) {
                cert.interval_faces += 1;
                covered.push(mask);
            } else {
                continue 'radius;
            }
        }
        return Some(cert);
    }
    None
}
