//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use semilag::qp_model::{HqpInstance, LinearEquality, MixedIntegerQp, QpInstance, Quadratic, RobustMiqp};
use semilag::Matrix64;

pub fn sym<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Matrix64 {
    let mut m = Matrix64::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(lo..hi);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn vector<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// `B = I + N` with `N ≥ 0` entrywise, so `B` is strictly copositive.
pub fn hqp<R: Rng>(rng: &mut R, n: usize) -> HqpInstance<f64> {
    let noise = sym(rng, n, 0.0, 0.5);
    HqpInstance { a: sym(rng, n, -2.0, 2.0), b: Matrix64::identity(n).add(&noise) }
}

/// Equality rows whose first row is positive, so the continuous relaxation is
/// a polytope, and whose binary coefficients in that row are at least the
/// right-hand side, so binaries cannot exceed one. Feasible by construction:
/// every row is satisfied at a point with all binaries zero.
pub fn equalities<R: Rng>(rng: &mut R, n: usize, m: usize, s: usize) -> Vec<LinearEquality<f64>> {
    assert!(s < n);
    let b0 = rng.gen_range(0.5..2.0);
    let a0: Vec<f64> = (0..n).map(|i| if i < s { b0 * rng.gen_range(1.0..2.0) } else { rng.gen_range(0.5..2.0) }).collect();
    let mut x0 = vec![0.0; n];
    for v in x0.iter_mut().skip(s) {
        *v = rng.gen_range(0.1..1.0);
    }
    let t: f64 = a0.iter().zip(&x0).map(|(a, x)| a * x).sum();
    x0.iter_mut().for_each(|v| *v *= b0 / t);
    let mut rows = vec![LinearEquality { a: a0, b: b0 }];
    for _ in 1..m {
        let a = vector(rng, n, -1.0, 1.0);
        let b = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
        rows.push(LinearEquality { a, b });
    }
    rows
}

pub fn miqp<R: Rng>(rng: &mut R) -> MixedIntegerQp<f64> {
    let n = rng.gen_range(2..=5);
    let s = rng.gen_range(0..=2.min(n - 1));
    let m = rng.gen_range(1..=2);
    let equalities = equalities(rng, n, m, s);
    let objective = Quadratic::new(sym(rng, n, -1.0, 1.0), vector(rng, n, -1.0, 1.0), 0.0);
    MixedIntegerQp { n, objective, equalities, binary_count: s }
}

pub fn robust<R: Rng>(rng: &mut R) -> RobustMiqp<f64> {
    let n = rng.gen_range(2..=3);
    let s = rng.gen_range(0..=1);
    RobustMiqp {
        n,
        equalities: equalities(rng, n, 1, s),
        binary_count: s,
        a0: sym(rng, n, -0.5, 1.0),
        rho: rng.gen_range(0.0..0.5),
        c0: vector(rng, n, -1.0, 1.0),
        generators: (0..2).map(|_| vector(rng, n, -1.0, 1.0)).collect(),
        scenarios: (0..2).map(|_| vector(rng, 2, 0.0, 1.0)).collect(),
    }
}

/// Small general instance: `n ≤ 2`, `m ≤ 2`, objective and constraints with
/// arbitrary signs.
pub fn small_qp<R: Rng>(rng: &mut R) -> QpInstance<f64> {
    let n = rng.gen_range(1..=2);
    let m = rng.gen_range(0..=2);
    let quad = |rng: &mut R, c: f64| Quadratic::new(sym(rng, n, -1.0, 1.0), vector(rng, n, -1.0, 1.0), c);
    let objective = quad(rng, 0.0);
    let constraints = (0..m)
        .map(|_| {
            let c = -rng.gen_range(0.1..1.0);
            quad(rng, c)
        })
        .collect();
    QpInstance::new(objective, constraints)
}
