//! Decidable sufficient conditions for convexifiability and zero duality
//! gaps, each returned with evidence that can be re-checked.

use serde::Serialize;

use crate::copositivity::{check_copositive, check_copositive_on_cone, CopositivityOptions, CopositivityStatus, PolyhedralCone};
use crate::error::{Error, Result};
use crate::numkernel::{lp_solve, sym_eig, LpStatus, Matrix, Sense};
use crate::oracle::{membership, MembershipOptions, MembershipVerdict};
use crate::qp_model::{HqpInstance, MixedIntegerQp, QpInstance, RobustMiqp, UniformQpInstance};
use crate::scalar::{dot, norm2, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    HqpStrongConvexifiable,
    UniformStrongConvexifiable,
    #[serde(rename = "RA")]
    Ra,
    Thm31Cone,
    Thm41Cone,
    NoneApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Undecided,
}

impl Verdict {
    fn from_strict(status: CopositivityStatus) -> Self {
        match status {
            CopositivityStatus::StrictlyCopositive => Verdict::Holds,
            CopositivityStatus::CopositiveNotStrict | CopositivityStatus::NotCopositive => Verdict::Fails,
            CopositivityStatus::Undecided => Verdict::Undecided,
        }
    }

    fn any(items: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Fails;
        for v in items {
            match v {
                Verdict::Holds => return Verdict::Holds,
                Verdict::Undecided => out = Verdict::Undecided,
                Verdict::Fails => {}
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence<S> {
    Copositivity { subject: String, status: CopositivityStatus, witness: Option<Vec<S>>, trivial_cone: bool },
    ScalarPremise { sign: i8, gamma: S, beta: Vec<S> },
    Eigenvector { condition: String, eigenvalue: S, vector: Vec<S>, residual: S, orthogonality: S, eigenspace_dim: usize },
    LpMaximum { index: usize, status: LpStatus, value: Option<S> },
    ConeLp { value: Option<S>, status: LpStatus },
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate<S> {
    pub kind: CertificateKind,
    pub verdict: Verdict,
    pub evidence: Vec<Evidence<S>>,
    pub notes: Vec<String>,
}

impl<S> Certificate<S> {
    fn new(kind: CertificateKind, verdict: Verdict) -> Self {
        Certificate { kind, verdict, evidence: vec![], notes: vec![] }
    }

    pub fn none_applicable(note: impl Into<String>) -> Self {
        Certificate { notes: vec![note.into()], ..Self::new(CertificateKind::NoneApplicable, Verdict::Undecided) }
    }
}

fn copositivity_evidence<S: Scalar>(subject: &str, v: &crate::copositivity::CopositivityVerdict<S>) -> Evidence<S> {
    Evidence::Copositivity { subject: subject.into(), status: v.status, witness: v.witness.clone(), trivial_cone: v.trivial_cone }
}

/// Strong convexifiability of `min xᵀAx, xᵀBx ≤ 1, x ≥ 0` from strict
/// copositivity of `B`.
pub fn check_hqp<S: Scalar>(h: &HqpInstance<S>) -> Result<Certificate<S>> {
    let v = check_copositive(&h.b, &CopositivityOptions::default())?;
    let mut c = Certificate::new(CertificateKind::HqpStrongConvexifiable, Verdict::from_strict(v.status));
    c.evidence.push(copositivity_evidence("B", &v));
    Ok(c)
}

/// Per-condition verdicts for a uniform instance.
#[derive(Clone, Debug, Serialize)]
pub struct UniformConditions<S> {
    pub premise: Verdict,
    pub psd: Verdict,
    pub nsd: Verdict,
    pub mixed: Verdict,
    pub evidence: Vec<Evidence<S>>,
    pub notes: Vec<String>,
}

pub fn uniform_conditions<S: Scalar>(p: &UniformQpInstance<S>) -> Result<UniformConditions<S>> {
    let n = p.n;
    let a = p.a.symmetrized();
    let mut evidence = vec![];
    let mut notes = vec![];
    let opts = CopositivityOptions::default();

    // (γ + Σ α_i β_i) ranges over [0, ∞), extended by (−∞, 0) when some α_i < 0.
    let pos = check_copositive(&a, &opts)?;
    evidence.push(copositivity_evidence("A", &pos));
    let premise = if pos.status == CopositivityStatus::StrictlyCopositive {
        evidence.push(Evidence::ScalarPremise { sign: 1, gamma: S::one(), beta: vec![S::zero(); p.constraints.len()] });
        Verdict::Holds
    } else if let Some(i) = p.constraints.iter().position(|g| g.alpha < S::zero()) {
        let neg = check_copositive(&a.scale(-S::one()), &opts)?;
        evidence.push(copositivity_evidence("-A", &neg));
        if neg.status == CopositivityStatus::StrictlyCopositive {
            let mut beta = vec![S::zero(); p.constraints.len()];
            beta[i] = S::one() / (-p.constraints[i].alpha);
            evidence.push(Evidence::ScalarPremise { sign: -1, gamma: S::zero(), beta });
            Verdict::Holds
        } else {
            Verdict::any([Verdict::from_strict(pos.status), Verdict::from_strict(neg.status)])
        }
    } else {
        notes.push("no negative multiplier: only nonnegative scalings of A are reachable".into());
        Verdict::from_strict(pos.status)
    };

    let ortho: Vec<Vec<S>> = p
        .constraints
        .iter()
        .map(|g| g.b.iter().zip(&p.b).map(|(&bi, &b)| bi - g.alpha * b).collect())
        .collect();
    let eig = sym_eig(&a)?;
    let scale = S::one().max(a.max_abs());
    let lam_tol = S::lit(1e-8) * scale;
    let psd_tol = S::lit(1e-9) * scale;
    let clusters = eig.clusters(lam_tol);
    let search = |positive: bool, condition: &str, evidence: &mut Vec<Evidence<S>>| -> Result<bool> {
        for cl in &clusters {
            let lam = eig.eigenvalues[cl[0]];
            if (positive && lam <= lam_tol) || (!positive && lam >= -lam_tol) {
                continue;
            }
            let basis = Matrix::from_fn(n, cl.len(), |r, c| eig.eigenvectors[(r, cl[c])]);
            if let Some(d) = nonnegative_in_span(&basis, &ortho)? {
                let ad = a.mul_vec(&d);
                let lam_d = dot(&d, &ad);
                let residual = norm2(&ad.iter().zip(&d).map(|(&x, &y)| x - lam_d * y).collect::<Vec<_>>());
                let orth = ortho.iter().map(|w| dot(w, &d).abs() / (S::one() + norm2(w))).fold(S::zero(), S::max);
                if residual <= S::lit(1e-8) * scale && orth <= S::lit(1e-8) && d.iter().all(|&t| t >= S::lit(-1e-9)) {
                    evidence.push(Evidence::Eigenvector {
                        condition: condition.into(),
                        eigenvalue: lam_d,
                        vector: d,
                        residual,
                        orthogonality: orth,
                        eigenspace_dim: cl.len(),
                    });
                    return Ok(true);
                }
            }
        }
        Ok(false)
    };
    let has_pos = search(true, "positive eigenvalue", &mut evidence)?;
    let has_neg = search(false, "negative eigenvalue", &mut evidence)?;
    let yes = |b: bool| if b { Verdict::Holds } else { Verdict::Fails };
    let psd = yes(eig.min_eigenvalue() >= -psd_tol && has_pos);
    let nsd = yes(eig.max_eigenvalue() <= psd_tol && has_neg);
    let mixed = yes(has_pos && has_neg);
    Ok(UniformConditions { premise, psd, nsd, mixed, evidence, notes })
}

/// Unit vector `d = V w ≥ 0` in the column span of `basis` with `wᵢᵀd = 0`.
/// Solved as an LP over the whole computed eigenspace.
fn nonnegative_in_span<S: Scalar>(basis: &Matrix<S>, ortho: &[Vec<S>]) -> Result<Option<Vec<S>>> {
    let (n, k) = (basis.nrows(), basis.ncols());
    let m = ortho.len();
    let cols = 2 * k + n;
    let rows = n + m + 1;
    let proj: Vec<Vec<S>> = ortho.iter().map(|w| (0..k).map(|c| dot(w, &basis.column(c))).collect()).collect();
    let sums: Vec<S> = (0..k).map(|c| basis.column(c).iter().fold(S::zero(), |s, &v| s + v)).collect();
    let a = Matrix::from_fn(rows, cols, |r, j| {
        let (c, sign) = if j < k { (j, S::one()) } else if j < 2 * k { (j - k, -S::one()) } else { (usize::MAX, S::zero()) };
        if r < n {
            if c == usize::MAX {
                if j - 2 * k == r {
                    -S::one()
                } else {
                    S::zero()
                }
            } else {
                sign * basis[(r, c)]
            }
        } else if c == usize::MAX {
            S::zero()
        } else if r < n + m {
            sign * proj[r - n][c]
        } else {
            sign * sums[c]
        }
    });
    let mut rhs = vec![S::zero(); rows];
    rhs[rows - 1] = S::one();
    let lp = lp_solve(&vec![S::zero(); cols], &a, &rhs, Sense::Minimize)?;
    if lp.status != LpStatus::Optimal {
        return Ok(None);
    }
    let x = lp.x.expect("optimal LP has a point");
    let w: Vec<S> = (0..k).map(|c| x[c] - x[k + c]).collect();
    let mut d = basis.mul_vec(&w);
    let nd = norm2(&d);
    if !(nd > S::zero()) {
        return Ok(None);
    }
    d.iter_mut().for_each(|t| *t = (*t / nd).max(S::zero()));
    let nd = norm2(&d);
    d.iter_mut().for_each(|t| *t = *t / nd);
    Ok(Some(d))
}

pub fn check_uniform<S: Scalar>(p: &UniformQpInstance<S>) -> Result<Certificate<S>> {
    let u = uniform_conditions(p)?;
    let conditions = Verdict::any([u.psd, u.nsd, u.mixed]);
    let verdict = match (u.premise, conditions) {
        (Verdict::Holds, Verdict::Holds) => Verdict::Holds,
        (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
        _ => Verdict::Undecided,
    };
    let mut c = Certificate::new(CertificateKind::UniformStrongConvexifiable, verdict);
    c.evidence = u.evidence;
    c.notes = u.notes;
    let name = |v: Verdict| match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Undecided => "undecided",
    };
    c.notes.push(format!("premise {}, psd {}, nsd {}, mixed {}", name(u.premise), name(u.psd), name(u.nsd), name(u.mixed)));
    Ok(c)
}

/// `max d_i` over `{d ≥ 0 : a_jᵀd = b_j}` is at most one for every binary `i`.
pub fn check_ra<S: Scalar>(p: &MixedIntegerQp<S>) -> Result<Certificate<S>> {
    let (eq, rhs) = p.equality_system();
    ra_on_system(p.n, &eq, &rhs, p.binary_count)
}

fn ra_on_system<S: Scalar>(n: usize, eq: &Matrix<S>, rhs: &[S], s: usize) -> Result<Certificate<S>> {
    let mut c = Certificate::new(CertificateKind::Ra, Verdict::Holds);
    for i in 0..s {
        let mut obj = vec![S::zero(); n];
        obj[i] = S::one();
        let (status, value) = if eq.nrows() == 0 {
            (LpStatus::Unbounded, None)
        } else {
            let lp = lp_solve(&obj, eq, rhs, Sense::Maximize)?;
            (lp.status, lp.value)
        };
        c.evidence.push(Evidence::LpMaximum { index: i, status, value });
        match status {
            LpStatus::Infeasible => {
                c.notes.push("equality system is infeasible; the assumption holds vacuously".into());
                return Ok(c);
            }
            LpStatus::Unbounded => c.verdict = Verdict::Fails,
            LpStatus::Optimal => {
                if value.expect("optimal LP has a value") > S::one() + S::lit(1e-9) {
                    c.verdict = Verdict::Fails;
                }
            }
        }
    }
    Ok(c)
}

fn recession_cone<S: Scalar>(n: usize, eq: &Matrix<S>, s: usize) -> PolyhedralCone<S> {
    PolyhedralCone { dim: n, equalities: eq.to_rows(), zero_set: (0..s).collect() }
}

/// `{d ≥ 0 : dᵀAd ≤ 0, a_jᵀd = 0, d_i = 0 (i < s)} = {0}`.
pub fn check_thm31_cone<S: Scalar>(p: &MixedIntegerQp<S>) -> Result<Certificate<S>> {
    let (eq, _) = p.equality_system();
    let cone = recession_cone(p.n, &eq, p.binary_count);
    let v = check_copositive_on_cone(&p.objective.a.symmetrized(), &cone, &CopositivityOptions::default())?;
    let mut c = Certificate::new(CertificateKind::Thm31Cone, Verdict::from_strict(v.status));
    c.evidence.push(copositivity_evidence("A on recession cone", &v));
    Ok(c)
}

/// `{d ≥ 0 : a_jᵀd = 0, d_i = 0 (i < s)} = {0}`, by an LP maximizing `eᵀd`
/// under `eᵀd ≤ 1`.
pub fn check_thm41_cone<S: Scalar>(p: &RobustMiqp<S>) -> Result<Certificate<S>> {
    let (eq, _) = p.equality_system();
    linear_cone_trivial(p.n, &eq, p.binary_count)
}

pub fn check_compactness_condition<S: Scalar>(p: &RobustMiqp<S>) -> Result<Certificate<S>> {
    check_thm41_cone(p)
}

fn linear_cone_trivial<S: Scalar>(n: usize, eq: &Matrix<S>, s: usize) -> Result<Certificate<S>> {
    // Variables (d, t): a_jᵀd = 0, d_i = 0 (i < s), eᵀd + t = 1.
    let rows = eq.nrows() + s + 1;
    let a = Matrix::from_fn(rows, n + 1, |r, j| {
        if r < eq.nrows() {
            if j < n {
                eq[(r, j)]
            } else {
                S::zero()
            }
        } else if r < eq.nrows() + s {
            if j == r - eq.nrows() {
                S::one()
            } else {
                S::zero()
            }
        } else {
            S::one()
        }
    });
    let mut rhs = vec![S::zero(); rows];
    rhs[rows - 1] = S::one();
    let mut obj = vec![S::one(); n + 1];
    obj[n] = S::zero();
    let lp = lp_solve(&obj, &a, &rhs, Sense::Maximize)?;
    let verdict = match (lp.status, lp.value) {
        (LpStatus::Optimal, Some(v)) if v <= S::lit(1e-9) => Verdict::Holds,
        (LpStatus::Optimal, _) => Verdict::Fails,
        _ => Verdict::Undecided,
    };
    let mut c = Certificate::new(CertificateKind::Thm41Cone, verdict);
    c.evidence.push(Evidence::ConeLp { value: lp.value, status: lp.status });
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexifiabilityStatus {
    ConsistentWithConvexifiable,
    CounterexampleFound,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexifiabilityDiagnostic<S> {
    pub status: ConvexifiabilityStatus,
    /// Smallest `r` with `(0, r)` in the hull of the sampled image plus the
    /// nonnegative orthant.
    pub hull_slice_min: Option<S>,
    /// `(0, …, 0, r)`: in the closed convex hull but certified outside the set.
    pub point: Option<Vec<S>>,
    pub samples: usize,
}

/// Falsifier for convexifiability: compares the axis slice of the convex hull
/// of sampled image points with direct membership tests. Never a proof.
pub fn sample_convexifiability<S: Scalar>(p: &QpInstance<S>, radius: S, budget: usize) -> Result<ConvexifiabilityDiagnostic<S>> {
    let k = p.constraints.len() + 1;
    if k > 2 {
        return Err(Error::TooLarge { size: k, limit: 2 });
    }
    let n = p.n;
    let per_dim = ((budget.max(2) as f64).powf(1.0 / n.max(1) as f64).floor() as usize).max(2);
    let total = per_dim.pow(n as u32);
    let mut images: Vec<(Vec<S>, S)> = Vec::with_capacity(total);
    for mut code in 0..total {
        let x: Vec<S> = (0..n)
            .map(|_| {
                let i = code % per_dim;
                code /= per_dim;
                radius * S::from_usize_lossy(i) / S::from_usize_lossy(per_dim - 1)
            })
            .collect();
        images.push((p.constraints.iter().map(|g| g.eval(&x)).collect(), p.objective.eval(&x)));
    }
    // min Σλ f_k  s.t.  Σλ g_ik + slack_i = 0, Σλ = 1.
    let m = k - 1;
    let cols = total + m;
    let a = Matrix::from_fn(m + 1, cols, |r, j| {
        if j < total {
            if r < m {
                images[j].0[r]
            } else {
                S::one()
            }
        } else if r == j - total {
            S::one()
        } else {
            S::zero()
        }
    });
    let mut rhs = vec![S::zero(); m + 1];
    rhs[m] = S::one();
    let mut obj: Vec<S> = images.iter().map(|im| im.1).collect();
    obj.resize(cols, S::zero());
    let lp = lp_solve(&obj, &a, &rhs, Sense::Minimize)?;
    let inconclusive = |hull| ConvexifiabilityDiagnostic { status: ConvexifiabilityStatus::Inconclusive, hull_slice_min: hull, point: None, samples: total };
    let Some(mu) = lp.value.filter(|_| lp.status == LpStatus::Optimal) else {
        return Ok(inconclusive(None));
    };
    let delta = S::lit(1e-3) * (S::one() + mu.abs());
    let mut target = vec![S::zero(); m];
    target.push(mu + delta);
    let q = membership(p, &target, &MembershipOptions::default())?;
    let status = match q.verdict {
        MembershipVerdict::Member => ConvexifiabilityStatus::ConsistentWithConvexifiable,
        MembershipVerdict::NonMember => ConvexifiabilityStatus::CounterexampleFound,
        MembershipVerdict::Undecided => return Ok(inconclusive(Some(mu))),
    };
    let point = (status == ConvexifiabilityStatus::CounterexampleFound).then_some(target);
    Ok(ConvexifiabilityDiagnostic { status, hull_slice_min: Some(mu), point, samples: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp_model::{LinearEquality, Quadratic, UniformConstraint};

    fn mat(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn miqp(a: Vec<f64>, b: f64, s: usize, obj: Matrix<f64>) -> MixedIntegerQp<f64> {
        let n = a.len();
        MixedIntegerQp { n, objective: Quadratic::new(obj, vec![0.0; n], 0.0), equalities: vec![LinearEquality { a, b }], binary_count: s }
    }

    #[test]
    fn hqp_cases() {
        let h = HqpInstance { a: Matrix::identity(2), b: Matrix::<f64>::identity(2) };
        assert_eq!(check_hqp(&h).unwrap().verdict, Verdict::Holds);
        let h = HqpInstance { a: mat(&[&[-2.0, 1.0], &[1.0, 1.0]]), b: mat(&[&[1.0, 1.0], &[1.0, -1.0]]) };
        assert_eq!(check_hqp(&h).unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn ra_cases() {
        assert_eq!(check_ra(&miqp(vec![1.0, 1.0], 1.0, 2, Matrix::zeros(2, 2))).unwrap().verdict, Verdict::Holds);
        assert_eq!(check_ra(&miqp(vec![1.0, -1.0], 0.0, 1, Matrix::zeros(2, 2))).unwrap().verdict, Verdict::Fails);
        assert_eq!(check_ra(&miqp(vec![1.0, 0.0], 2.0, 1, Matrix::zeros(2, 2))).unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn cone_cases() {
        let p = miqp(vec![1.0, 1.0], 1.0, 0, Matrix::zeros(2, 2));
        let r = RobustMiqp {
            n: 2,
            equalities: p.equalities.clone(),
            binary_count: 0,
            a0: Matrix::zeros(2, 2),
            rho: 0.0,
            c0: vec![0.0, 0.0],
            generators: vec![],
            scenarios: vec![vec![]],
        };
        assert_eq!(check_thm41_cone(&r).unwrap().verdict, Verdict::Holds);
        let free = MixedIntegerQp { n: 2, objective: Quadratic::new(mat(&[&[-1.0, 0.0], &[0.0, -1.0]]), vec![0.0; 2], 0.0), equalities: vec![], binary_count: 0 };
        assert_eq!(check_thm31_cone(&free).unwrap().verdict, Verdict::Fails);
        let all_binary = MixedIntegerQp { binary_count: 2, ..free };
        assert_eq!(check_thm31_cone(&all_binary).unwrap().verdict, Verdict::Holds);
        let r = RobustMiqp { equalities: vec![], binary_count: 2, ..r };
        assert_eq!(check_thm41_cone(&r).unwrap().verdict, Verdict::Holds);
    }

    fn uniform(a: Matrix<f64>, b: Vec<f64>, cons: Vec<(f64, Vec<f64>)>) -> UniformQpInstance<f64> {
        UniformQpInstance {
            n: a.nrows(),
            a,
            b,
            c: 0.0,
            constraints: cons.into_iter().map(|(alpha, b)| UniformConstraint { alpha, b, c: -1.0 }).collect(),
        }
    }

    #[test]
    fn uniform_identity_holds() {
        let p = uniform(Matrix::identity(2), vec![1.0, 2.0], vec![(1.0, vec![1.0, 2.0])]);
        assert_eq!(check_uniform(&p).unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn uniform_negative_identity_fails_premise() {
        let p = uniform(Matrix::<f64>::identity(2).scale(-1.0), vec![0.0, 0.0], vec![(1.0, vec![0.0, 0.0])]);
        let u = uniform_conditions(&p).unwrap();
        assert_eq!(u.premise, Verdict::Fails);
        assert_eq!(check_uniform(&p).unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn uniform_mixed_condition() {
        let p = uniform(mat(&[&[1.0, 0.0], &[0.0, -1.0]]), vec![0.0, 0.0], vec![(1.0, vec![0.0, 0.0])]);
        let u = uniform_conditions(&p).unwrap();
        assert_eq!(u.mixed, Verdict::Holds);
        assert_eq!(u.psd, Verdict::Fails);
    }

    #[test]
    fn eigenspace_search_finds_interior_vector() {
        // Eigenspace of 2 for the first two coordinates; (1,1,0)/√2 is the
        // only direction orthogonal to (1,-1,0).
        let a = mat(&[&[2.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 1.0]]);
        let p = uniform(a, vec![0.0; 3], vec![(1.0, vec![1.0, -1.0, 0.0]), (1.0, vec![0.0, 0.0, 1.0])]);
        let u = uniform_conditions(&p).unwrap();
        assert_eq!(u.psd, Verdict::Holds);
    }

    #[test]
    fn e1_sampling_finds_counterexample() {
        let p = QpInstance::new(Quadratic::new(mat(&[&[-1.0]]), vec![0.0], 0.0), vec![Quadratic::linear(vec![1.0], -1.0)]);
        let d = sample_convexifiability(&p, 10.0, 200).unwrap();
        assert_eq!(d.status, ConvexifiabilityStatus::CounterexampleFound);
        assert!(d.hull_slice_min.unwrap() < -1.0);
    }
}
