//! Semi-Lagrangian dual `sup_{u ≥ 0} Θ(u)`, `Θ(u) = inf_{x ≥ 0} L(x, u)`,
//! maximized by a box-step cutting-plane method, and duality-gap reports.

use serde::Serialize;

use crate::certificates::{Certificate, Verdict};
use crate::error::{Error, Result};
use crate::numkernel::{lp_solve, LpStatus, Matrix, Sense};
use crate::oracle::PrimalResult;
use crate::orthant_qp::{min_quadratic_orthant, OrthantOptions, ThetaResult, ThetaStatus};
use crate::qp_model::QpInstance;
use crate::scalar::{dot, ExtValue, Scalar};

/// Multipliers with the inner minimization result at them.
#[derive(Clone, Debug, Serialize)]
pub struct DualPoint<S> {
    pub u: Vec<S>,
    pub theta: ThetaResult<S>,
    /// `g(x*(u))`, a supergradient of `Θ` at `u` when attained.
    pub supergradient: Option<Vec<S>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationCap,
    DualUnboundedBelowEverywhere,
    UndecidedInner,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualResult<S> {
    pub best_value: ExtValue<S>,
    /// Representative of a maximizing sequence, not a certified maximizer.
    pub best_u: Vec<S>,
    /// Best value after each inner evaluation; nondecreasing.
    pub history: Vec<ExtValue<S>>,
    pub termination: Termination,
    pub iterations: usize,
    /// Cutting-plane model maximum over the final multiplier box.
    pub model_bound: Option<S>,
    pub u_cap: S,
    pub optimality_cuts: usize,
    pub feasibility_cuts: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct DualOptions<S> {
    pub tol_dual: S,
    pub u_cap: S,
    pub u_cap_max: S,
    pub max_iter: usize,
    pub eps_ray: S,
    pub max_cuts: usize,
    pub orthant: OrthantOptions<S>,
}

impl<S: Scalar> Default for DualOptions<S> {
    fn default() -> Self {
        DualOptions {
            tol_dual: S::lit(1e-6),
            u_cap: S::lit(1e4),
            u_cap_max: S::lit(1e8),
            max_iter: 500,
            eps_ray: S::lit(1e-6),
            max_cuts: 60,
            orthant: OrthantOptions::default(),
        }
    }
}

/// `(Q(u), q(u), r(u))` with `Q(u) = A + Σ u_i A_i` and likewise.
pub fn lagrangian_data<S: Scalar>(p: &QpInstance<S>, u: &[S]) -> Result<(Matrix<S>, Vec<S>, S)> {
    if u.len() != p.constraints.len() {
        return Err(Error::Dimension(format!("{} multipliers for {} constraints", u.len(), p.constraints.len())));
    }
    if u.iter().any(|&v| !(v >= S::zero())) {
        return Err(Error::Precondition("multipliers must be nonnegative".into()));
    }
    let mut q = p.objective.a.clone();
    let mut lin = p.objective.b.clone();
    let mut r = p.objective.c;
    for (&ui, g) in u.iter().zip(&p.constraints) {
        if ui == S::zero() {
            continue;
        }
        q = q.add_scaled(ui, &g.a);
        for (l, &bi) in lin.iter_mut().zip(&g.b) {
            *l = *l + ui * bi;
        }
        r = r + ui * g.c;
    }
    Ok((q, lin, r))
}

pub fn eval_theta<S: Scalar>(p: &QpInstance<S>, u: &[S], opts: &OrthantOptions<S>) -> Result<DualPoint<S>> {
    let (q, lin, r) = lagrangian_data(p, u)?;
    let theta = min_quadratic_orthant(&q, &lin, r, opts)?;
    let supergradient = match (&theta.status, &theta.minimizer) {
        (ThetaStatus::Attained, Some(x)) => Some(p.constraint_values(x)?),
        _ => None,
    };
    Ok(DualPoint { u: u.to_vec(), theta, supergradient })
}

/// `Θ(u') ≤ slope·u' + offset`.
#[derive(Clone, Debug)]
struct OptCut<S> {
    slope: Vec<S>,
    offset: S,
    age: usize,
}

/// `coef·u' ≥ rhs`.
#[derive(Clone, Debug)]
struct FeasCut<S> {
    coef: Vec<S>,
    rhs: S,
}

struct Master<S> {
    opt: Vec<OptCut<S>>,
    feas: Vec<FeasCut<S>>,
}

struct MasterSolution<S> {
    u: Vec<S>,
    model: Option<S>,
}

impl<S: Scalar> Master<S> {
    /// Maximizes the cut model over `[lo, hi]`; without optimality cuts it
    /// returns the feasible point of smallest total weight. `floor` is a
    /// value known to be attained inside the box.
    fn solve(&self, lo: &[S], hi: &[S], floor: Option<S>) -> Result<Option<MasterSolution<S>>> {
        if self.opt.is_empty() {
            return self.solve_band(lo, hi, None, None);
        }
        let range = |c: &OptCut<S>| {
            let (mut min, mut max) = (c.offset, c.offset);
            for i in 0..lo.len() {
                let (a, b) = (c.slope[i] * lo[i], c.slope[i] * hi[i]);
                min = min + a.min(b);
                max = max + a.max(b);
            }
            (min, max)
        };
        let ranges: Vec<(S, S)> = self.opt.iter().map(range).collect();
        let ub = ranges.iter().map(|r| r.1).fold(S::infinity(), S::min);
        let wide = ranges.iter().map(|r| r.0).fold(S::infinity(), S::min).min(ub - S::one());
        // Cuts generated far away can be extremely steep. Measuring the model
        // in units of a narrow band keeps its variable well scaled against
        // them; the wide band is the fallback when the floor is not feasible.
        if let Some(f) = floor {
            let tight = f - (ub - f).abs() - S::one();
            if tight > wide {
                if let Some(sol) = self.solve_lex(lo, hi, (tight, ub))? {
                    return Ok(Some(sol));
                }
            }
        }
        self.solve_lex(lo, hi, (wide, ub))
    }

    /// Pairs of multipliers that enter only through their difference make
    /// the model optimum non-unique; among optimal points prefer the one of
    /// least total weight so the box does not drift outward.
    fn solve_lex(&self, lo: &[S], hi: &[S], band: (S, S)) -> Result<Option<MasterSolution<S>>> {
        let Some((first, tau)) = self.solve_band_raw(lo, hi, Some(band), None)? else {
            return Ok(None);
        };
        let pin = tau - S::lit(1e-9) * (S::one() + tau.abs());
        let top = self.model_at(&first.u);
        let second = self.solve_band(lo, hi, Some(band), Some(pin.max(S::zero())))?;
        // With steep cuts far out, rounding in the second stage can cost more
        // than the pin allows; the first-stage point is the safe choice then.
        let u = match second {
            Some(s) if self.model_at(&s.u) >= top - S::lit(1e-7) * (S::one() + top.abs()) => s.u,
            _ => first.u,
        };
        Ok(Some(MasterSolution { u, model: Some(top) }))
    }

    fn solve_band(&self, lo: &[S], hi: &[S], band: Option<(S, S)>, pin: Option<S>) -> Result<Option<MasterSolution<S>>> {
        Ok(self.solve_band_raw(lo, hi, band, pin)?.map(|r| r.0))
    }

    /// Model value `η = band.0 + (band.1 − band.0)·τ`, `τ ∈ [0, 1]`. With a
    /// `pin` the total weight is minimized subject to `τ ≥ pin`.
    fn solve_band_raw(
        &self,
        lo: &[S],
        hi: &[S],
        band: Option<(S, S)>,
        pin: Option<S>,
    ) -> Result<Option<(MasterSolution<S>, S)>> {
        let p = lo.len();
        let nk = if band.is_some() { self.opt.len() } else { 0 };
        let nf = self.feas.len();
        let tau = usize::from(band.is_some());
        let pinned = usize::from(pin.is_some());
        let cols = p + tau + nk + nf + p + tau + pinned;
        let rows = nk + nf + p + tau + pinned;
        let mut a = Matrix::zeros(rows, cols);
        let mut b = vec![S::zero(); rows];
        let mut c = vec![S::zero(); cols];
        let slack0 = p + tau;
        if let Some((eta_lo, eta_hi)) = band {
            let width = eta_hi - eta_lo;
            for (k, cut) in self.opt.iter().enumerate() {
                let scale = cut.slope.iter().fold(width, |m, v| m.max(v.abs()));
                a[(k, p)] = width / scale;
                for i in 0..p {
                    a[(k, i)] = -cut.slope[i] / scale;
                }
                a[(k, slack0 + k)] = S::one();
                b[k] = (cut.offset + dot(&cut.slope, lo) - eta_lo) / scale;
            }
            let (r, col) = (nk + nf + p, slack0 + nk + nf + p);
            a[(r, p)] = S::one();
            a[(r, col)] = S::one();
            b[r] = S::one();
            if let Some(t) = pin {
                a[(r + 1, p)] = S::one();
                a[(r + 1, col + 1)] = -S::one();
                b[r + 1] = t;
            } else {
                c[p] = S::one();
            }
        }
        if band.is_none() || pin.is_some() {
            c[..p].iter_mut().for_each(|v| *v = S::one());
        }
        for (f, cut) in self.feas.iter().enumerate() {
            let row = nk + f;
            let scale = cut.coef.iter().fold(S::zero(), |m, v| m.max(v.abs()));
            let scale = if scale > S::zero() { scale } else { S::one() };
            for i in 0..p {
                a[(row, i)] = cut.coef[i] / scale;
            }
            a[(row, slack0 + nk + f)] = -S::one();
            b[row] = (cut.rhs - dot(&cut.coef, lo)) / scale;
        }
        for i in 0..p {
            let row = nk + nf + i;
            a[(row, i)] = S::one();
            a[(row, slack0 + nk + nf + i)] = S::one();
            b[row] = hi[i] - lo[i];
        }
        let sense = if band.is_some() && pin.is_none() { Sense::Maximize } else { Sense::Minimize };
        let lp = lp_solve(&c, &a, &b, sense)?;
        match lp.status {
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::Invalid("cutting-plane model unbounded on a bounded box".into())),
            LpStatus::Optimal => {
                let x = lp.x.expect("optimal LP has a point");
                let u: Vec<S> = (0..p).map(|i| (lo[i] + x[i]).max(S::zero()).min(hi[i])).collect();
                let model = band.is_some().then(|| self.model_at(&u));
                let tau = if band.is_some() { x[p] } else { S::zero() };
                Ok(Some((MasterSolution { u, model }, tau)))
            }
        }
    }

    fn model_at(&self, u: &[S]) -> S {
        self.opt.iter().map(|c| dot(&c.slope, u) + c.offset).fold(S::infinity(), S::min)
    }

    fn add_opt(&mut self, slope: Vec<S>, offset: S, age: usize, max_cuts: usize, keep: &[S], at: &[S]) {
        self.opt.push(OptCut { slope, offset, age });
        while self.opt.len() > max_cuts {
            // Drop the loosest cut at the latest master point, sparing the one
            // tight at the incumbent.
            let tight_keep = self
                .opt
                .iter()
                .enumerate()
                .map(|(k, c)| (k, dot(&c.slope, keep) + c.offset))
                .fold((0, S::infinity()), |a, b| if b.1 < a.1 { b } else { a })
                .0;
            let newest = self.opt.len() - 1;
            let victim = self
                .opt
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != tight_keep && *k != newest)
                .map(|(k, c)| (k, dot(&c.slope, at) + c.offset, c.age))
                .fold(None, |acc: Option<(usize, S, usize)>, cur| match acc {
                    Some(a) if a.1 > cur.1 || (a.1 == cur.1 && a.2 <= cur.2) => Some(a),
                    _ => Some(cur),
                });
            match victim {
                Some((k, _, _)) => {
                    self.opt.remove(k);
                }
                None => break,
            }
        }
    }
}

/// Cut from a divergence ray `d` at `u`.
enum RayCut<S> {
    Feasibility(FeasCut<S>),
    /// `Θ(u') ≤ f(x) + u'ᵀg(x)` at a point `x = τd` far along the ray.
    Lagrangian { slope: Vec<S>, offset: S },
}

/// Every point of the domain satisfies `dᵀQ(u')d ≥ 0`, which separates `u`
/// when the curvature there is negative. A flat ray whose curvature does not
/// depend on `u'` gives `q(u')ᵀd ≥ 0`. On the boundary of the curvature cut
/// the divergence is linear; neither inequality separates `u` there, so the
/// Lagrangian at a distant point of the ray supplies an optimality cut
/// instead, with value `target` at `u`.
fn ray_cut<S: Scalar>(p: &QpInstance<S>, u: &[S], d: &[S], eps: S, target: S, incumbent: S) -> RayCut<S> {
    let curv: Vec<S> = p.constraints.iter().map(|g| g.a.quad_form(d)).collect();
    let curv0 = p.objective.a.quad_form(d);
    let at_u = curv0 + dot(&curv, u);
    let scale = S::one() + curv.iter().fold(curv0.abs(), |m, v| m.max(v.abs()));
    let flat = curv.iter().all(|v| v.abs() <= S::lit(1e-12) * scale);
    let lin: Vec<S> = p.constraints.iter().map(|g| dot(&g.b, d)).collect();
    let lin0 = dot(&p.objective.b, d);
    if at_u < -eps * scale {
        return RayCut::Feasibility(FeasCut { coef: curv, rhs: -curv0 });
    }
    if flat {
        return RayCut::Feasibility(FeasCut { coef: lin, rhs: -lin0 });
    }
    let slope_u = lin0 + dot(&lin, u);
    let const_u = p.objective.c + p.constraints.iter().zip(u).fold(S::zero(), |acc, (g, &ui)| acc + ui * g.c);
    if slope_u >= S::zero() {
        return RayCut::Feasibility(FeasCut { coef: curv, rhs: -curv0 + eps });
    }
    // First crossing of at_u·τ² + slope_u·τ + const_u = target; the far root
    // is of order slope/curvature and swamps the master when the curvature
    // is nearly zero.
    let gap = const_u - target;
    let disc = slope_u * slope_u - S::lit(4.0) * at_u * gap;
    let tau = if gap <= S::zero() {
        S::one()
    } else if disc >= S::zero() {
        S::lit(2.0) * gap / (-slope_u + disc.sqrt())
    } else {
        // The target is out of reach; the minimizer along the ray still
        // separates `u` when it undercuts the incumbent.
        let tau_min = -slope_u / (S::lit(2.0) * at_u);
        let lowest = const_u - slope_u * slope_u / (S::lit(4.0) * at_u);
        if lowest >= incumbent {
            return RayCut::Feasibility(FeasCut { coef: curv, rhs: -curv0 + eps });
        }
        tau_min
    }
    .max(S::one());
    let x: Vec<S> = d.iter().map(|&v| v * tau).collect();
    let slope = p.constraints.iter().map(|g| g.eval(&x)).collect();
    RayCut::Lagrangian { slope, offset: p.objective.eval(&x) }
}

fn close<S: Scalar>(a: &[S], b: &[S]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| (x - y).abs() <= S::lit(1e-9) * (S::one() + x.abs()))
}

fn coarse_grid<S: Scalar>(p: usize) -> Vec<Vec<S>> {
    let levels = [S::zero(), S::one(), S::lit(10.0)];
    let total = 3usize.saturating_pow(p as u32).min(243);
    (0..total)
        .map(|mut code| {
            (0..p)
                .map(|_| {
                    let v = levels[code % 3];
                    code /= 3;
                    v
                })
                .collect()
        })
        .collect()
}

struct Run<S> {
    best: Option<(Vec<S>, S)>,
    history: Vec<ExtValue<S>>,
    iterations: usize,
    undecided: usize,
    diverged: Vec<Vec<S>>,
}

impl<S: Scalar> Run<S> {
    fn record(&mut self, point: &DualPoint<S>) -> bool {
        self.iterations += 1;
        let mut improved = false;
        if let ThetaStatus::Attained = point.theta.status {
            let v = point.theta.value.finite().expect("attained value is finite");
            if self.best.as_ref().is_none_or(|(_, b)| v > *b) {
                self.best = Some((point.u.clone(), v));
                improved = true;
            }
        }
        let current = self.best.as_ref().map_or(ExtValue::MinusInfinity, |(_, b)| ExtValue::Finite(*b));
        self.history.push(current);
        improved
    }
}

/// Maximizes `Θ` over `u ≥ 0`.
pub fn maximize_dual<S: Scalar>(p: &QpInstance<S>, opts: &DualOptions<S>) -> Result<DualResult<S>> {
    let np = p.constraints.len();
    let mut run = Run { best: None, history: vec![], iterations: 0, undecided: 0, diverged: vec![] };
    let mut master = Master { opt: vec![], feas: vec![] };
    let mut cap = opts.u_cap;

    let finish = |run: Run<S>, termination: Termination, model: Option<S>, cap: S, master: &Master<S>| {
        let (best_u, best_value) = match run.best {
            Some((u, v)) => (u, ExtValue::Finite(v)),
            None => (vec![S::zero(); np], ExtValue::MinusInfinity),
        };
        DualResult {
            best_value,
            best_u,
            history: run.history,
            termination,
            iterations: run.iterations,
            model_bound: model,
            u_cap: cap,
            optimality_cuts: master.opt.len(),
            feasibility_cuts: master.feas.len(),
        }
    };

    let absorb = |point: &DualPoint<S>, run: &mut Run<S>, master: &mut Master<S>, keep: &[S]| -> bool {
        let improved = run.record(point);

        match point.theta.status {
            ThetaStatus::Attained => {
                let g = point.supergradient.clone().expect("attained point has a supergradient");
                let v = point.theta.value.finite().expect("attained value is finite");
                let offset = v - dot(&g, &point.u);
                let keep = run.best.as_ref().map_or(keep.to_vec(), |(u, _)| u.clone());
                master.add_opt(g, offset, run.iterations, opts.max_cuts.max(np + 2), &keep, &point.u);
            }
            ThetaStatus::MinusInfinity => {
                let d = point.theta.unbounded_ray.as_ref().expect("divergence carries a ray");
                // A cut through a primal-feasible point of the ray carries no
                // information, so aim well below the incumbent and further
                // still each time the same point comes back.
                let repeats = run.diverged.iter().filter(|v| close(v, &point.u)).count();
                run.diverged.push(point.u.clone());
                let base = run.best.as_ref().map_or(S::zero(), |b| b.1);
                let target = base - S::lit(10.0) * (S::one() + base.abs()) * S::lit(4.0).powi(repeats.min(8) as i32);
                match ray_cut(p, &point.u, d, opts.eps_ray, target, base) {
                    RayCut::Feasibility(cut) => master.feas.push(cut),
                    RayCut::Lagrangian { slope, offset } => {
                        let keep = run.best.as_ref().map_or(keep.to_vec(), |(u, _)| u.clone());
                        master.add_opt(slope, offset, run.iterations, opts.max_cuts.max(np + 2), &keep, &point.u);
                    }
                }
            }
            ThetaStatus::Undecided => run.undecided += 1,
        }
        improved
    };

    let start = vec![S::zero(); np];
    let first = eval_theta(p, &start, &opts.orthant)?;
    absorb(&first, &mut run, &mut master, &start);
    if np == 0 {
        let term = match first.theta.status {
            ThetaStatus::Attained => Termination::Converged,
            ThetaStatus::MinusInfinity => Termination::DualUnboundedBelowEverywhere,
            ThetaStatus::Undecided => Termination::UndecidedInner,
        };
        let model = first.theta.value.finite();
        return Ok(finish(run, term, model, cap, &master));
    }

    let mut delta = S::one();
    let mut grid_tried = false;
    let mut last_undecided: Option<Vec<S>> = first.theta.status.eq(&ThetaStatus::Undecided).then(|| start.clone());
    let mut restarted = false;
    let mut rounds = 0usize;
    let mut stalled_at: Option<S> = None;

    loop {
        rounds += 1;
        if run.iterations >= opts.max_iter || rounds > 4 * opts.max_iter {
            let model = run.best.as_ref().and_then(|(u, _)| (!master.opt.is_empty()).then(|| master.model_at(u)));
            return Ok(finish(run, Termination::IterationCap, model, cap, &master));
        }

        if let Some(bad) = last_undecided.take() {
            if restarted {
                return Ok(finish(run, Termination::UndecidedInner, None, cap, &master));
            }
            restarted = true;
            for g in coarse_grid::<S>(np) {
                if g == bad {
                    continue;
                }
                let pt = eval_theta(p, &g, &opts.orthant)?;
                absorb(&pt, &mut run, &mut master, &g);
            }
            if run.best.is_none() && master.opt.is_empty() {
                return Ok(finish(run, Termination::UndecidedInner, None, cap, &master));
            }
        }

        let center = run.best.as_ref().map_or_else(|| vec![S::zero(); np], |(u, _)| u.clone());
        let lo: Vec<S> = center.iter().map(|&c| (c - delta).max(S::zero())).collect();
        let hi: Vec<S> = center.iter().map(|&c| (c + delta).min(cap)).collect();
        let global = lo.iter().all(|&v| v == S::zero()) && hi.iter().all(|&v| v == cap);

        let Some(sol) = master.solve(&lo, &hi, run.best.as_ref().map(|b| b.1))? else {
            if !global {
                delta = cap;
                continue;
            }
            if cap < opts.u_cap_max {
                cap = (cap * S::lit(2.0)).min(opts.u_cap_max);
                delta = cap;
                continue;
            }
            if !grid_tried {
                grid_tried = true;
                let mut finite = vec![];
                for g in coarse_grid::<S>(np) {
                    let pt = eval_theta(p, &g, &opts.orthant)?;
                    if pt.theta.status == ThetaStatus::Attained {
                        finite.push(g.clone());
                    }
                    absorb(&pt, &mut run, &mut master, &g);
                }
                if !finite.is_empty() {
                    master.feas.retain(|c| finite.iter().all(|u| dot(&c.coef, u) >= c.rhs));
                    continue;
                }
            }
            let term = if run.best.is_none() { Termination::DualUnboundedBelowEverywhere } else { Termination::Converged };
            return Ok(finish(run, term, None, cap, &master));
        };

        let tr_binding = (0..np).any(|i| {
            let tol = S::lit(1e-9) * (S::one() + delta);
            (lo[i] > S::zero() && sol.u[i] <= lo[i] + tol) || (hi[i] < cap && sol.u[i] >= hi[i] - tol)
        });
        let cap_binding = sol.u.iter().any(|&v| v >= cap * (S::one() - S::lit(1e-9)));

        // The incumbent is feasible for the master, so a top below the model
        // there means the LP lost accuracy; a smaller box conditions it better.
        let consistent = match (sol.model, run.best.as_ref()) {
            (Some(model), Some((u, _))) => {
                let at_best = master.model_at(u);
                model >= at_best - S::lit(1e-7) * (S::one() + at_best.abs())
            }
            _ => true,
        };
        if !consistent {
            // Twice without progress: the model cannot be trusted at this
            // scale, so stop short of claiming convergence.
            let best = run.best.as_ref().map(|b| b.1);
            if stalled_at.is_some() && stalled_at == best {
                let model = run.best.as_ref().map(|(u, _)| master.model_at(u));
                return Ok(finish(run, Termination::IterationCap, model, cap, &master));
            }
            stalled_at = best;
            if delta > S::one() {
                delta = S::one();
                continue;
            }
        }
        if let (true, Some(model), Some((_, best))) = (consistent, sol.model, run.best.as_ref()) {
            if model - *best <= opts.tol_dual {
                if tr_binding {
                    delta = delta * S::lit(4.0);
                    continue;
                }
                if cap_binding && cap < opts.u_cap_max {
                    cap = (cap * S::lit(2.0)).min(opts.u_cap_max);
                    continue;
                }
                return Ok(finish(run, Termination::Converged, Some(model), cap, &master));
            }
        }
        if cap_binding && cap < opts.u_cap_max {
            cap = (cap * S::lit(2.0)).min(opts.u_cap_max);
        }

        let point = eval_theta(p, &sol.u, &opts.orthant)?;
        let before = run.best.as_ref().map(|(_, b)| *b);
        let improved = absorb(&point, &mut run, &mut master, &sol.u);
        match point.theta.status {
            ThetaStatus::Undecided => last_undecided = Some(sol.u.clone()),
            ThetaStatus::MinusInfinity => {}
            ThetaStatus::Attained => {
                if improved && tr_binding {
                    delta = delta * S::lit(2.0);
                }
                if before.is_none() {
                    delta = delta.max(S::one());
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapClass {
    ZeroGap,
    PositiveGap,
    InfiniteGap,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport<S> {
    pub primal_value: ExtValue<S>,
    pub dual_value: ExtValue<S>,
    /// `primal − dual`; absent when both sides are `−∞`.
    pub gap: Option<ExtValue<S>>,
    pub classification: GapClass,
    pub tol_gap: S,
    pub primal_error_bar: S,
    pub dual_termination: Termination,
    pub certificates: Vec<Certificate<S>>,
    /// Every attached certificate holds, so a zero gap is expected.
    pub certified_zero_gap: bool,
}

/// Weak-duality breaches beyond this (plus the primal error bar) are errors.
pub const WEAK_DUALITY_SLACK: f64 = 1e-5;

pub fn gap_report<S: Scalar>(
    primal: &PrimalResult<S>,
    dual: &DualResult<S>,
    certificates: Vec<Certificate<S>>,
    tol_gap: S,
) -> Result<GapReport<S>> {
    let bar = primal.error_bar;
    let (gap, class) = match (primal.value, dual.best_value) {
        (ExtValue::Finite(pv), ExtValue::Finite(dv)) => {
            let g = pv - dv;
            if -g > S::lit(WEAK_DUALITY_SLACK) + bar {
                return Err(Error::WeakDuality { primal: pv.to_f64_lossy(), dual: dv.to_f64_lossy() });
            }
            let class = if g.abs() <= tol_gap + bar {
                GapClass::ZeroGap
            } else if dual.termination == Termination::Converged {
                GapClass::PositiveGap
            } else {
                GapClass::Inconclusive
            };
            (Some(ExtValue::Finite(g)), class)
        }
        (ExtValue::Finite(_), ExtValue::MinusInfinity) => {
            let class = if dual.termination == Termination::DualUnboundedBelowEverywhere {
                GapClass::InfiniteGap
            } else {
                GapClass::Inconclusive
            };
            (Some(ExtValue::PlusInfinity), class)
        }
        (ExtValue::MinusInfinity, ExtValue::MinusInfinity) => (None, GapClass::ZeroGap),
        (ExtValue::MinusInfinity, ExtValue::Finite(dv)) => {
            return Err(Error::WeakDuality { primal: f64::NEG_INFINITY, dual: dv.to_f64_lossy() });
        }
        (ExtValue::PlusInfinity, ExtValue::Finite(_)) | (ExtValue::PlusInfinity, ExtValue::MinusInfinity) => {
            let class = if primal.possibly_infeasible { GapClass::Inconclusive } else { GapClass::InfiniteGap };
            (Some(ExtValue::PlusInfinity), class)
        }
        (_, ExtValue::PlusInfinity) => return Err(Error::Invalid("dual value cannot be +inf".into())),
    };
    let certified_zero_gap = !certificates.is_empty() && certificates.iter().all(|c| c.verdict == Verdict::Holds);
    Ok(GapReport {
        primal_value: primal.value,
        dual_value: dual.best_value,
        gap,
        classification: class,
        tol_gap,
        primal_error_bar: bar,
        dual_termination: dual.termination,
        certificates,
        certified_zero_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp_model::Quadratic;

    fn scalar(v: f64) -> Matrix<f64> {
        Matrix::from_rows(&[vec![v]]).unwrap()
    }

    fn e1() -> QpInstance<f64> {
        QpInstance::new(Quadratic::new(scalar(-1.0), vec![0.0], 0.0), vec![Quadratic::linear(vec![1.0], -1.0)])
    }

    fn hqp_1d() -> QpInstance<f64> {
        QpInstance::new(Quadratic::new(scalar(-1.0), vec![0.0], 0.0), vec![Quadratic::new(scalar(1.0), vec![0.0], -1.0)])
    }

    #[test]
    fn e1_theta_is_minus_infinity() {
        let t = eval_theta(&e1(), &[0.0], &OrthantOptions::default()).unwrap();
        assert_eq!(t.theta.status, ThetaStatus::MinusInfinity);
    }

    #[test]
    fn convex_objective_theta_at_zero() {
        let p = QpInstance::new(Quadratic::new(scalar(1.0), vec![0.0], 0.0), vec![Quadratic::linear(vec![1.0], -1.0)]);
        let t = eval_theta(&p, &[0.0], &OrthantOptions::default()).unwrap();
        assert_eq!(t.theta.value, ExtValue::Finite(0.0));
    }

    #[test]
    fn hqp_theta_at_one() {
        let t = eval_theta(&hqp_1d(), &[1.0], &OrthantOptions::default()).unwrap();
        assert_eq!(t.theta.status, ThetaStatus::Attained);
        assert_eq!(t.theta.value, ExtValue::Finite(-1.0));
    }

    #[test]
    fn e1_dual_unbounded_everywhere() {
        let d = maximize_dual(&e1(), &DualOptions::default()).unwrap();
        assert_eq!(d.best_value, ExtValue::MinusInfinity);
        assert_eq!(d.termination, Termination::DualUnboundedBelowEverywhere);
    }

    #[test]
    fn hqp_dual_value() {
        let d = maximize_dual(&hqp_1d(), &DualOptions::default()).unwrap();
        assert_eq!(d.termination, Termination::Converged);
        assert!((d.best_value.finite().unwrap() + 1.0).abs() < 1e-5, "{:?}", d.best_value);
        assert!(d.history.windows(2).all(|w| w[0].as_scalar() <= w[1].as_scalar()));
    }

    #[test]
    fn unconstrained_convex() {
        let p = QpInstance::new(Quadratic::new(scalar(1.0), vec![-2.0], 0.0), vec![]);
        let d = maximize_dual(&p, &DualOptions::default()).unwrap();
        assert_eq!(d.best_value, ExtValue::Finite(-1.0));
        assert_eq!(d.termination, Termination::Converged);
    }

    #[test]
    fn linear_objective_needs_multiplier() {
        // min -x s.t. x - 1 <= 0: Θ(u) = -u for u >= 1, sup = -1.
        let p = QpInstance::new(Quadratic::linear(vec![-1.0], 0.0), vec![Quadratic::linear(vec![1.0], -1.0)]);
        let d: DualResult<f64> = maximize_dual(&p, &DualOptions::default()).unwrap();
        assert!((d.best_value.finite().unwrap() + 1.0).abs() < 1e-6, "{:?}", d);
    }

    #[test]
    fn coarse_grid_truncated() {
        assert_eq!(coarse_grid::<f64>(2).len(), 9);
        assert_eq!(coarse_grid::<f64>(8).len(), 243);
    }
}
