//! Problem transformations: mixed-integer to pure quadratic constraints, the
//! robust problem to its augmented form, homogeneous QPs, and the conic
//! relaxation matrices.

use serde::Serialize;

use crate::certificates::{check_compactness_condition, Verdict};
use crate::copositivity::minimize_on_simplex;
use crate::error::{Error, Result};
use crate::numkernel::{lp_solve, LpStatus, Matrix, Sense};
use crate::qp_model::{HqpInstance, LinearEquality, MixedIntegerQp, QpInstance, Quadratic, RobustMiqp};
use crate::scalar::{dot, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `a_jᵀx − b_j ≤ 0`
    EqualityUpper,
    /// `−a_jᵀx + b_j ≤ 0`
    EqualityLower,
    /// `(a_jᵀx)² − b_j² ≤ 0`
    SquaredUpper,
    /// `−(a_jᵀx)² + b_j² ≤ 0`
    SquaredLower,
    /// `x_i(x_i − 1) ≤ 0`
    BinaryUpper,
    /// `−x_i(x_i − 1) ≤ 0`
    BinaryLower,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintOrigin {
    pub family: Family,
    /// Zero-based row of the equality system or binary coordinate.
    pub source_index: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariableBlock {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReformulationMap<S> {
    pub source_kind: String,
    pub target: QpInstance<S>,
    pub variable_map: Vec<VariableBlock>,
    pub provenance: Vec<ConstraintOrigin>,
    pub notes: Vec<String>,
}

/// Right-hand side used for the last two augmented rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSign {
    /// `t_1 + v_{q+1} = M` and `t_1 − t_2 + v_{q+2} = M`.
    #[default]
    Plus,
    /// `b̄ = −M`, which makes the system infeasible whenever `M > 0`.
    Minus,
}

fn expand_equalities<S: Scalar>(n: usize, eqs: &[LinearEquality<S>], s: usize) -> (Vec<Quadratic<S>>, Vec<ConstraintOrigin>) {
    let mut cons = vec![];
    let mut prov = vec![];
    let origin = |family, source_index| ConstraintOrigin { family, source_index };
    for (j, e) in eqs.iter().enumerate() {
        cons.push(Quadratic::linear(e.a.clone(), -e.b));
        prov.push(origin(Family::EqualityUpper, j));
    }
    for (j, e) in eqs.iter().enumerate() {
        cons.push(Quadratic::linear(e.a.iter().map(|&v| -v).collect(), e.b));
        prov.push(origin(Family::EqualityLower, j));
    }
    for (j, e) in eqs.iter().enumerate() {
        cons.push(Quadratic::new(Matrix::outer(&e.a, &e.a), vec![S::zero(); n], -e.b * e.b));
        prov.push(origin(Family::SquaredUpper, j));
    }
    for (j, e) in eqs.iter().enumerate() {
        cons.push(Quadratic::new(Matrix::outer(&e.a, &e.a).scale(-S::one()), vec![S::zero(); n], e.b * e.b));
        prov.push(origin(Family::SquaredLower, j));
    }
    let binary = |i: usize, sign: S| {
        let mut a = Matrix::zeros(n, n);
        a[(i, i)] = sign;
        let mut b = vec![S::zero(); n];
        b[i] = -sign;
        Quadratic::new(a, b, S::zero())
    };
    for i in 0..s {
        cons.push(binary(i, S::one()));
        prov.push(origin(Family::BinaryUpper, i));
    }
    for i in 0..s {
        cons.push(binary(i, -S::one()));
        prov.push(origin(Family::BinaryLower, i));
    }
    (cons, prov)
}

/// Replaces equalities and integrality by `4m + 2s` quadratic inequalities.
pub fn miqp_to_pd<S: Scalar>(p: &MixedIntegerQp<S>) -> ReformulationMap<S> {
    let (constraints, provenance) = expand_equalities(p.n, &p.equalities, p.binary_count);
    ReformulationMap {
        source_kind: "miqp".into(),
        target: QpInstance { n: p.n, objective: p.objective.clone(), constraints },
        variable_map: vec![VariableBlock { name: "x".into(), start: 0, len: p.n }],
        provenance,
        notes: vec![],
    }
}

/// `max{max_{x ∈ C, k} c_kᵀx, 0}` by enumerating binary patterns and solving
/// one LP per pattern and scenario.
pub fn compute_m<S: Scalar>(p: &RobustMiqp<S>) -> Result<S> {
    let cert = check_compactness_condition(p)?;
    if cert.verdict != Verdict::Holds {
        return Err(Error::Precondition("feasible set is not certified compact".into()));
    }
    let (n, s) = (p.n, p.binary_count);
    if s > crate::oracle::MAX_BINARIES {
        return Err(Error::TooLarge { size: s, limit: crate::oracle::MAX_BINARIES });
    }
    let (eq, rhs) = p.equality_system();
    let rows: Vec<usize> = (0..eq.nrows()).collect();
    let cont: Vec<usize> = (s..n).collect();
    let bins: Vec<usize> = (0..s).collect();
    let e_y = eq.select(&rows, &cont);
    let e_b = eq.select(&rows, &bins);
    let costs: Vec<Vec<S>> = (0..p.num_scenarios()).map(|k| p.scenario_cost(k)).collect();
    let mut best: Option<S> = None;
    for pattern in 0u64..(1u64 << s) {
        let z: Vec<S> = (0..s).map(|i| if pattern & (1 << i) != 0 { S::one() } else { S::zero() }).collect();
        let shift = e_b.mul_vec(&z);
        let r: Vec<S> = rhs.iter().zip(&shift).map(|(&b, &t)| b - t).collect();
        for c in &costs {
            let fixed = dot(&c[..s], &z);
            let value = if cont.is_empty() || rows.is_empty() {
                if cont.is_empty() && r.iter().all(|v| v.abs() <= S::lit(1e-9)) {
                    Some(fixed)
                } else if cont.is_empty() {
                    None
                } else {
                    return Err(Error::Unbounded);
                }
            } else {
                let lp = lp_solve(&c[s..], &e_y, &r, Sense::Maximize)?;
                match lp.status {
                    LpStatus::Infeasible => None,
                    LpStatus::Unbounded => return Err(Error::Unbounded),
                    LpStatus::Optimal => Some(fixed + lp.value.expect("optimal LP has a value")),
                }
            };
            if let Some(v) = value {
                best = Some(best.map_or(v, |b: S| b.max(v)));
            }
        }
    }
    best.map(|b| b.max(S::zero())).ok_or(Error::Infeasible)
}

/// The augmented mixed-integer problem in `z = (x, t_1, t_2, v)` together
/// with the constant `M`.
pub fn robust_to_ap_miqp<S: Scalar>(p: &RobustMiqp<S>, sign: BoundSign) -> Result<(MixedIntegerQp<S>, S)> {
    let m_val = compute_m(p)?;
    let (n, q) = (p.n, p.num_scenarios());
    let dim = n + q + 4;
    let (t1, t2, v0) = (n, n + 1, n + 2);
    let mut eqs: Vec<LinearEquality<S>> = p
        .equalities
        .iter()
        .map(|e| {
            let mut a = e.a.clone();
            a.resize(dim, S::zero());
            LinearEquality { a, b: e.b }
        })
        .collect();
    for k in 0..q {
        let mut a = p.scenario_cost(k);
        a.resize(dim, S::zero());
        a[t1] = -S::one();
        a[t2] = S::one();
        a[v0 + k] = S::one();
        eqs.push(LinearEquality { a, b: S::zero() });
    }
    let rhs = match sign {
        BoundSign::Plus => m_val,
        BoundSign::Minus => -m_val,
    };
    let mut a = vec![S::zero(); dim];
    a[t1] = S::one();
    a[v0 + q] = S::one();
    eqs.push(LinearEquality { a, b: rhs });
    let mut a = vec![S::zero(); dim];
    a[t1] = S::one();
    a[t2] = -S::one();
    a[v0 + q + 1] = S::one();
    eqs.push(LinearEquality { a, b: rhs });
    let mut w = vec![S::zero(); dim];
    w[t1] = S::one();
    w[t2] = -S::one();
    let objective = Quadratic::new(p.worst_case_hessian().embed(dim, dim, 0, 0), w, S::zero());
    Ok((MixedIntegerQp { n: dim, objective, equalities: eqs, binary_count: p.binary_count }, m_val))
}

pub fn robust_to_ap<S: Scalar>(p: &RobustMiqp<S>, sign: BoundSign) -> Result<ReformulationMap<S>> {
    let (ap, m_val) = robust_to_ap_miqp(p, sign)?;
    let (n, q) = (p.n, p.num_scenarios());
    let mut map = miqp_to_pd(&ap);
    map.source_kind = "robust_miqp".into();
    map.variable_map = vec![
        VariableBlock { name: "x".into(), start: 0, len: n },
        VariableBlock { name: "t1".into(), start: n, len: 1 },
        VariableBlock { name: "t2".into(), start: n + 1, len: 1 },
        VariableBlock { name: "v".into(), start: n + 2, len: q + 2 },
    ];
    map.notes.push(format!("M = {}", m_val.to_f64_lossy()));
    map.notes.push("recover t = t1 - t2".into());
    if sign == BoundSign::Minus && m_val > S::zero() {
        map.notes.push("bound rows use -M with M > 0: the augmented system has no feasible point".into());
    }
    Ok(map)
}

/// Lifts `(x, t)` with `t ≥ max_k c_kᵀx` and `t ≤ M` to `z = (x, t_1, t_2, v)`.
pub fn lift_ap_point<S: Scalar>(p: &RobustMiqp<S>, m_val: S, x: &[S], t: S) -> Vec<S> {
    let q = p.num_scenarios();
    let (t1, t2) = (t.max(S::zero()), -(t.min(S::zero())));
    let mut z = x.to_vec();
    z.push(t1);
    z.push(t2);
    for k in 0..q {
        z.push(t - dot(&p.scenario_cost(k), x));
    }
    z.push(m_val - t1);
    z.push(m_val - t);
    z
}

pub fn hqp_to_qp<S: Scalar>(h: &HqpInstance<S>) -> QpInstance<S> {
    QpInstance::from(h.clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaStar<S> {
    /// `min {xᵀAx : x ≥ 0, xᵀBx = 1}`.
    pub value: S,
    /// Minimizing direction on the standard simplex.
    pub direction: Vec<S>,
    pub iterations: usize,
}

/// `α* = min_{d ∈ Δ} dᵀAd / dᵀBd` by Dinkelbach iterations, each an exact
/// standard quadratic program `min_{d ∈ Δ} dᵀ(A − λB)d`.
pub fn standard_form_alpha_star<S: Scalar>(h: &HqpInstance<S>) -> Result<AlphaStar<S>> {
    let a = h.a.symmetrized();
    let b = h.b.symmetrized();
    let mu = minimize_on_simplex(&b)?.value;
    if !(mu > S::zero()) {
        return Err(Error::Precondition("constraint matrix is not strictly copositive".into()));
    }
    let n = h.dim();
    let ratio = |d: &[S]| a.quad_form(d) / b.quad_form(d);
    let (mut lambda, mut dir) = (0..n)
        .map(|i| {
            let mut e = vec![S::zero(); n];
            e[i] = S::one();
            (ratio(&e), e)
        })
        .fold(None, |acc: Option<(S, Vec<S>)>, c| match acc {
            Some(best) if best.0 <= c.0 => Some(best),
            _ => Some(c),
        })
        .ok_or_else(|| Error::Dimension("empty matrix".into()))?;
    let scale = S::one().max(a.max_abs()).max(b.max_abs());
    for it in 1..=100 {
        let sm = minimize_on_simplex(&a.add_scaled(-lambda, &b))?;
        if sm.value >= -S::lit(1e-13) * scale * (S::one() + lambda.abs()) {
            return Ok(AlphaStar { value: lambda, direction: dir, iterations: it });
        }
        let next = ratio(&sm.argmin);
        if !(next < lambda) {
            return Ok(AlphaStar { value: lambda, direction: dir, iterations: it });
        }
        lambda = next;
        dir = sm.argmin;
    }
    Err(Error::IterationLimit("ratio minimization"))
}

#[derive(Clone, Debug, Serialize)]
pub struct CopositiveRelaxation<S> {
    pub h: Matrix<S>,
    pub h_constraints: Vec<Matrix<S>>,
    pub j0: Matrix<S>,
    pub cone: String,
}

impl<S: Scalar> CopositiveRelaxation<S> {
    /// `z = (1, x)`.
    pub fn lift(x: &[S]) -> Vec<S> {
        std::iter::once(S::one()).chain(x.iter().copied()).collect()
    }
}

/// `[[c, bᵀ/2], [b/2, A]]`.
pub fn bordered<S: Scalar>(q: &Quadratic<S>) -> Matrix<S> {
    let n = q.dim();
    Matrix::from_fn(n + 1, n + 1, |i, j| match (i, j) {
        (0, 0) => q.c,
        (0, j) => S::lit(0.5) * q.b[j - 1],
        (i, 0) => S::lit(0.5) * q.b[i - 1],
        (i, j) => q.a[(i - 1, j - 1)],
    })
}

pub fn build_copositive_relaxation<S: Scalar>(p: &QpInstance<S>) -> CopositiveRelaxation<S> {
    let mut j0 = Matrix::zeros(p.n + 1, p.n + 1);
    j0[(0, 0)] = S::one();
    CopositiveRelaxation {
        h: bordered(&p.objective),
        h_constraints: p.constraints.iter().map(bordered).collect(),
        j0,
        cone: "completely_positive".into(),
    }
}
