//! Problem classes: nonnegative QPs with quadratic constraints, mixed-integer
//! QPs with linear equalities, homogeneous QPs, uniform QPs and robust
//! mixed-integer QPs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::scalar::{dot, Scalar};

/// `xᵀAx + bᵀx + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadratic<S> {
    pub a: Matrix<S>,
    pub b: Vec<S>,
    pub c: S,
}

impl<S: Scalar> Quadratic<S> {
    pub fn new(a: Matrix<S>, b: Vec<S>, c: S) -> Self {
        Quadratic { a, b, c }
    }

    pub fn zero(n: usize) -> Self {
        Quadratic { a: Matrix::zeros(n, n), b: vec![S::zero(); n], c: S::zero() }
    }

    pub fn linear(b: Vec<S>, c: S) -> Self {
        let n = b.len();
        Quadratic { a: Matrix::zeros(n, n), b, c }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, x: &[S]) -> S {
        self.a.quad_form(x) + dot(&self.b, x) + self.c
    }

    pub fn is_linear(&self) -> bool {
        self.a.is_zero()
    }

    pub fn negated(&self) -> Self {
        Quadratic { a: self.a.scale(-S::one()), b: self.b.iter().map(|&v| -v).collect(), c: -self.c }
    }

    fn check(&self, n: usize, what: &str, report: &mut ValidationReport) -> bool {
        let mut ok = true;
        if self.a.nrows() != n || self.a.ncols() != n {
            report.errors.push(format!("{what}: matrix is {}x{}, expected {n}x{n}", self.a.nrows(), self.a.ncols()));
            ok = false;
        }
        if self.b.len() != n {
            report.errors.push(format!("{what}: linear term has length {}, expected {n}", self.b.len()));
            ok = false;
        }
        if !self.a.is_finite() || self.b.iter().any(|v| !v.is_finite()) || !self.c.is_finite() {
            report.errors.push(format!("{what}: non-finite entry"));
            ok = false;
        }
        if ok && !self.a.is_symmetric(S::zero()) {
            report.warnings.push(format!("{what}: symmetrized"));
        }
        ok
    }

    fn symmetrize(&mut self) {
        if self.a.is_square() {
            self.a = self.a.symmetrized();
        }
    }
}

/// Outcome of [`Validate::validate`]: errors break an invariant, warnings
/// record harmless corrections such as symmetrization.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

pub trait Validate: Sized {
    fn validate(&self) -> ValidationReport;

    /// Symmetrizes every matrix in place.
    fn symmetrize(&mut self);

    /// Validates, then returns the symmetrized instance with the report.
    fn validated(mut self) -> Result<(Self, ValidationReport)> {
        let report = self.validate();
        if !report.is_ok() {
            return Err(Error::Invalid(report.errors.join("; ")));
        }
        self.symmetrize();
        Ok((self, report))
    }
}

/// `min f(x)  s.t.  g_i(x) ≤ 0 (i = 0..m), x ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpInstance<S> {
    pub n: usize,
    pub objective: Quadratic<S>,
    /// `g_0, …, g_m`.
    pub constraints: Vec<Quadratic<S>>,
}

impl<S: Scalar> QpInstance<S> {
    pub fn new(objective: Quadratic<S>, constraints: Vec<Quadratic<S>>) -> Self {
        QpInstance { n: objective.dim(), objective, constraints }
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn check_point(&self, x: &[S]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("point has length {}, instance has n = {}", x.len(), self.n)));
        }
        Ok(())
    }

    pub fn evaluate_objective(&self, x: &[S]) -> Result<S> {
        self.check_point(x)?;
        Ok(self.objective.eval(x))
    }

    pub fn evaluate_constraint(&self, i: usize, x: &[S]) -> Result<S> {
        self.check_point(x)?;
        let g = self
            .constraints
            .get(i)
            .ok_or_else(|| Error::Dimension(format!("constraint index {i} out of range 0..{}", self.constraints.len())))?;
        Ok(g.eval(x))
    }

    pub fn constraint_values(&self, x: &[S]) -> Result<Vec<S>> {
        self.check_point(x)?;
        Ok(self.constraints.iter().map(|g| g.eval(x)).collect())
    }

    /// Largest violation of `g_i(x) ≤ 0` and `x ≥ 0`.
    pub fn infeasibility(&self, x: &[S]) -> Result<S> {
        let g = self.constraint_values(x)?;
        let gmax = g.iter().fold(S::zero(), |m, &v| m.max(v));
        let xneg = x.iter().fold(S::zero(), |m, &v| m.max(-v));
        Ok(gmax.max(xneg))
    }

    pub fn all_linear(&self) -> bool {
        self.constraints.iter().all(Quadratic::is_linear)
    }
}

impl<S: Scalar> Validate for QpInstance<S> {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        self.objective.check(self.n, "objective", &mut r);
        for (i, g) in self.constraints.iter().enumerate() {
            g.check(self.n, &format!("constraint {i}"), &mut r);
        }
        r
    }

    fn symmetrize(&mut self) {
        self.objective.symmetrize();
        self.constraints.iter_mut().for_each(Quadratic::symmetrize);
    }
}

/// `a ᵀx = b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality<S> {
    pub a: Vec<S>,
    pub b: S,
}

fn equality_system<S: Scalar>(n: usize, eqs: &[LinearEquality<S>]) -> (Matrix<S>, Vec<S>) {
    let a = Matrix::from_fn(eqs.len(), n, |j, i| eqs[j].a[i]);
    (a, eqs.iter().map(|e| e.b).collect())
}

fn check_equalities<S: Scalar>(n: usize, eqs: &[LinearEquality<S>], binary_count: usize, r: &mut ValidationReport) {
    for (j, e) in eqs.iter().enumerate() {
        if e.a.len() != n {
            r.errors.push(format!("equality {}: length {}, expected {n}", j + 1, e.a.len()));
        }
        if e.a.iter().any(|v| !v.is_finite()) || !e.b.is_finite() {
            r.errors.push(format!("equality {}: non-finite entry", j + 1));
        }
    }
    if binary_count > n {
        r.errors.push("binary set exceeds dimension".into());
    }
}

/// `min f(x)  s.t.  a_jᵀx = b_j, x ≥ 0, x_i ∈ {0,1} for the first s indices`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedIntegerQp<S> {
    pub n: usize,
    pub objective: Quadratic<S>,
    pub equalities: Vec<LinearEquality<S>>,
    /// `s`: coordinates `0..s` are binary.
    pub binary_count: usize,
}

impl<S: Scalar> MixedIntegerQp<S> {
    pub fn equality_system(&self) -> (Matrix<S>, Vec<S>) {
        equality_system(self.n, &self.equalities)
    }

    /// Largest violation of the equalities, nonnegativity and integrality.
    pub fn infeasibility(&self, x: &[S]) -> S {
        let mut v = x.iter().fold(S::zero(), |m, &t| m.max(-t));
        for e in &self.equalities {
            v = v.max((dot(&e.a, x) - e.b).abs());
        }
        for &t in &x[..self.binary_count.min(x.len())] {
            v = v.max(t.abs().min((t - S::one()).abs()));
        }
        v
    }
}

impl<S: Scalar> Validate for MixedIntegerQp<S> {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        self.objective.check(self.n, "objective", &mut r);
        check_equalities(self.n, &self.equalities, self.binary_count, &mut r);
        r
    }

    fn symmetrize(&mut self) {
        self.objective.symmetrize();
    }
}

/// `min xᵀAx  s.t.  xᵀBx ≤ 1, x ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HqpInstance<S> {
    pub a: Matrix<S>,
    pub b: Matrix<S>,
}

impl<S: Scalar> HqpInstance<S> {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

impl<S: Scalar> Validate for HqpInstance<S> {
    fn validate(&self) -> ValidationReport {
        let n = self.a.nrows();
        let mut r = ValidationReport::default();
        Quadratic::new(self.a.clone(), vec![S::zero(); n], S::zero()).check(n, "objective", &mut r);
        Quadratic::new(self.b.clone(), vec![S::zero(); n], S::zero()).check(n, "constraint matrix", &mut r);
        r
    }

    fn symmetrize(&mut self) {
        self.a = self.a.symmetrized();
        self.b = self.b.symmetrized();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformConstraint<S> {
    pub alpha: S,
    pub b: Vec<S>,
    pub c: S,
}

/// QP whose constraint Hessians are all multiples `α_i A` of the objective
/// Hessian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformQpInstance<S> {
    pub n: usize,
    pub a: Matrix<S>,
    pub b: Vec<S>,
    pub c: S,
    pub constraints: Vec<UniformConstraint<S>>,
}

impl<S: Scalar> UniformQpInstance<S> {
    pub fn to_qp(&self) -> QpInstance<S> {
        QpInstance {
            n: self.n,
            objective: Quadratic::new(self.a.clone(), self.b.clone(), self.c),
            constraints: self
                .constraints
                .iter()
                .map(|g| Quadratic::new(self.a.scale(g.alpha), g.b.clone(), g.c))
                .collect(),
        }
    }

    /// The same instance with `A` replaced by `−A` and every `b_i` kept.
    pub fn with_negated_hessian(&self) -> Self {
        UniformQpInstance { a: self.a.scale(-S::one()), ..self.clone() }
    }
}

impl<S: Scalar> Validate for UniformQpInstance<S> {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        Quadratic::new(self.a.clone(), self.b.clone(), self.c).check(self.n, "objective", &mut r);
        for (i, g) in self.constraints.iter().enumerate() {
            if g.b.len() != self.n {
                r.errors.push(format!("constraint {i}: linear term has length {}, expected {}", g.b.len(), self.n));
            }
            if !g.alpha.is_finite() || !g.c.is_finite() || g.b.iter().any(|v| !v.is_finite()) {
                r.errors.push(format!("constraint {i}: non-finite entry"));
            }
        }
        r
    }

    fn symmetrize(&mut self) {
        self.a = self.a.symmetrized();
    }
}

/// `min_x max_{c ∈ U, A ∈ V} xᵀAx + cᵀx` over a mixed-integer polytope with
/// `U = {c_0 + Σ ξ_l c_l : ξ ∈ conv{ξ^(1..q)}}` and
/// `V = {A_0 + V : ‖V‖_spec ≤ ρ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustMiqp<S> {
    pub n: usize,
    pub equalities: Vec<LinearEquality<S>>,
    pub binary_count: usize,
    pub a0: Matrix<S>,
    pub rho: S,
    pub c0: Vec<S>,
    /// `c_1, …, c_L`.
    pub generators: Vec<Vec<S>>,
    /// `ξ^(1), …, ξ^(q)`, each of length `L`.
    pub scenarios: Vec<Vec<S>>,
}

impl<S: Scalar> RobustMiqp<S> {
    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// `c_0 + Σ_l ξ^(k)_l c_l` for scenario `k` (zero-based).
    pub fn scenario_cost(&self, k: usize) -> Vec<S> {
        let mut c = self.c0.clone();
        for (xi, gen) in self.scenarios[k].iter().zip(&self.generators) {
            for (ci, &gi) in c.iter_mut().zip(gen) {
                *ci = *ci + *xi * gi;
            }
        }
        c
    }

    /// `A_0 + ρ I`, the worst case over the spectral ball.
    pub fn worst_case_hessian(&self) -> Matrix<S> {
        self.a0.add_scaled(self.rho, &Matrix::identity(self.n))
    }

    /// `xᵀ(A_0 + ρI)x + max_k c_kᵀx`.
    pub fn robust_objective(&self, x: &[S]) -> S {
        let worst = (0..self.num_scenarios()).map(|k| dot(&self.scenario_cost(k), x)).fold(S::neg_infinity(), S::max);
        self.worst_case_hessian().quad_form(x) + worst
    }

    pub fn equality_system(&self) -> (Matrix<S>, Vec<S>) {
        equality_system(self.n, &self.equalities)
    }

    /// The mixed-integer problem with a fixed cost vector.
    pub fn with_cost(&self, cost: Vec<S>) -> MixedIntegerQp<S> {
        MixedIntegerQp {
            n: self.n,
            objective: Quadratic::new(self.worst_case_hessian(), cost, S::zero()),
            equalities: self.equalities.clone(),
            binary_count: self.binary_count,
        }
    }
}

impl<S: Scalar> Validate for RobustMiqp<S> {
    fn validate(&self) -> ValidationReport {
        let n = self.n;
        let mut r = ValidationReport::default();
        Quadratic::new(self.a0.clone(), self.c0.clone(), S::zero()).check(n, "nominal objective", &mut r);
        check_equalities(n, &self.equalities, self.binary_count, &mut r);
        if !(self.rho >= S::zero()) {
            r.errors.push("spectral radius must be nonnegative".into());
        }
        if self.scenarios.is_empty() {
            r.errors.push("at least one scenario is required".into());
        }
        for (l, g) in self.generators.iter().enumerate() {
            if g.len() != n {
                r.errors.push(format!("generator {}: length {}, expected {n}", l + 1, g.len()));
            }
        }
        for (k, xi) in self.scenarios.iter().enumerate() {
            if xi.len() != self.generators.len() {
                r.errors.push(format!("scenario {}: length {}, expected {}", k + 1, xi.len(), self.generators.len()));
            }
        }
        r
    }

    fn symmetrize(&mut self) {
        self.a0 = self.a0.symmetrized();
    }
}

impl<S: Scalar> From<HqpInstance<S>> for QpInstance<S> {
    fn from(h: HqpInstance<S>) -> Self {
        let n = h.dim();
        QpInstance {
            n,
            objective: Quadratic::new(h.a, vec![S::zero(); n], S::zero()),
            constraints: vec![Quadratic::new(h.b, vec![S::zero(); n], -S::one())],
        }
    }
}

/// Any supported problem class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance<S> {
    Qp(QpInstance<S>),
    Miqp(MixedIntegerQp<S>),
    Hqp(HqpInstance<S>),
    Uniform(UniformQpInstance<S>),
    RobustMiqp(RobustMiqp<S>),
}

impl<S: Scalar> Instance<S> {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Qp(_) => "qp",
            Instance::Miqp(_) => "miqp",
            Instance::Hqp(_) => "hqp",
            Instance::Uniform(_) => "uniform",
            Instance::RobustMiqp(_) => "robust_miqp",
        }
    }
}

impl<S: Scalar> Validate for Instance<S> {
    fn validate(&self) -> ValidationReport {
        match self {
            Instance::Qp(p) => p.validate(),
            Instance::Miqp(p) => p.validate(),
            Instance::Hqp(p) => p.validate(),
            Instance::Uniform(p) => p.validate(),
            Instance::RobustMiqp(p) => p.validate(),
        }
    }

    fn symmetrize(&mut self) {
        match self {
            Instance::Qp(p) => p.symmetrize(),
            Instance::Miqp(p) => p.symmetrize(),
            Instance::Hqp(p) => p.symmetrize(),
            Instance::Uniform(p) => p.symmetrize(),
            Instance::RobustMiqp(p) => p.symmetrize(),
        }
    }
}
