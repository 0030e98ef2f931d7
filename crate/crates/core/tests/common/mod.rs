//! Property checks shared by the `properties` and `acceptance` targets.
//! Each check runs a deterministic proptest runner and reports the first
//! failure as a string.

#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};
use sfft_uq::moments::{moment, Density};
use sfft_uq::ode_solver::{solve, Maps, OdeProblem, SolverConfig};
use sfft_uq::periodization::{PeriodizationKind, PeriodizationMap};
use sfft_uq::trig_poly::{Frequency, SparseTrigPoly};
use sfft_uq::{Complex64, SfftConfig};

pub const CASES: u32 = 1000;

pub fn run<S, F>(cases: u32, strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config.clone(), TestRng::deterministic_rng(config.rng_algorithm));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

// trig_poly

pub fn poly_strategy(dim: usize, max_terms: usize, n: i32) -> impl Strategy<Value = SparseTrigPoly> {
    prop::collection::vec(
        (prop::collection::vec(-n..=n, dim), -10.0..10.0f64, -10.0..10.0f64),
        0..=max_terms,
    )
    .prop_map(move |terms| {
        SparseTrigPoly::from_terms(
            dim,
            terms.into_iter().map(|(k, re, im)| (Frequency::new(k), Complex64::new(re, im))),
        )
        .unwrap()
    })
}

pub fn point_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, dim)
}

/// Differentiating the antiderivative reproduces the coefficients up to
/// the rounding of one division and one multiplication.
pub fn antiderivative_round_trip(cases: u32) -> Result<(), String> {
    let strat = (1usize..5).prop_flat_map(|d| poly_strategy(d, 30, 12));
    run(cases, strat, |p| {
        let back = p.antiderivative_first_var().derivative();
        prop_assert_eq!(back.frequencies(), p.frequencies());
        for (a, b) in back.coefficients().iter().zip(p.coefficients()) {
            prop_assert!((a - b).norm() <= 4.0 * f64::EPSILON * b.norm(), "{} vs {}", a, b);
        }
        Ok(())
    })
}

pub fn antiderivative_vanishes_at_zero(cases: u32) -> Result<(), String> {
    let strat = (1usize..5).prop_flat_map(|d| (poly_strategy(d, 30, 12), point_strategy(d - 1)));
    run(cases, strat, |(p, y)| {
        let v = p.antiderivative_first_var().evaluate(0.0, &y).unwrap();
        prop_assert_eq!(v, Complex64::new(0.0, 0.0));
        Ok(())
    })
}

pub fn evaluation_is_linear(cases: u32) -> Result<(), String> {
    let strat = (1usize..5).prop_flat_map(|d| (poly_strategy(d, 20, 10), poly_strategy(d, 20, 10), point_strategy(d)));
    run(cases, strat, |(p, q, x)| {
        let sum = p.add(&q).unwrap().evaluate(&x).unwrap();
        let parts = p.evaluate(&x).unwrap() + q.evaluate(&x).unwrap();
        prop_assert!((sum - parts).norm() <= 1e-12 * (1.0 + parts.norm()), "{} vs {}", sum, parts);
        Ok(())
    })
}

pub fn expansion_monotone_in_floor(cases: u32) -> Result<(), String> {
    let strat = (1usize..6).prop_flat_map(|d| (poly_strategy(d, 30, 20), 0.0..15.0f64, 0.0..15.0f64));
    run(cases, strat, |(p, a, b)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let e_lo = p.directional_expansion(lo);
        let e_hi = p.directional_expansion(hi);
        prop_assert!(e_lo.iter().zip(&e_hi).all(|(l, h)| h <= l), "{:?} vs {:?}", e_lo, e_hi);
        Ok(())
    })
}

// periodization

pub fn kind_strategy() -> impl Strategy<Value = PeriodizationKind> {
    prop_oneof![
        Just(PeriodizationKind::Tent),
        Just(PeriodizationKind::Spline4),
        Just(PeriodizationKind::Cosine)
    ]
}

pub fn map_strategy() -> impl Strategy<Value = PeriodizationMap> {
    (kind_strategy(), -10.0..10.0f64, 0.01..10.0f64)
        .prop_map(|(k, alpha, width)| PeriodizationMap::new(k, alpha, alpha + width).unwrap())
}

pub fn round_trips(cases: u32) -> Result<(), String> {
    run(cases, (map_strategy(), 0.0..=1.0f64, 0.0..=0.5f64), |(m, u, x)| {
        let t = m.alpha() + u * (m.beta() - m.alpha());
        let scale = 1.0 + m.alpha().abs().max(m.beta().abs());
        let back = m.forward(m.inverse(t).unwrap()).unwrap();
        prop_assert!((back - t).abs() <= 1e-12 * scale, "forward(inverse({})) = {}", t, back);
        let back = m.inverse(m.forward(x).unwrap()).unwrap();
        if m.derivative(x).unwrap().abs() >= 1e-2 * (m.beta() - m.alpha()) {
            prop_assert!((back - x).abs() <= 1e-12, "inverse(forward({})) = {}", x, back);
        } else {
            // φ′ nearly vanishes, so x is only determined up to rounding of φ(x)
            let (a, b) = (m.forward(back).unwrap(), m.forward(x).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * scale, "inverse(forward({})) = {}", x, back);
        }
        Ok(())
    })
}

pub fn symmetry(cases: u32) -> Result<(), String> {
    run(cases, map_strategy(), |m| {
        let scale = 1.0 + m.alpha().abs().max(m.beta().abs());
        for i in 0..=1000 {
            let x = 0.5 * i as f64 / 1000.0;
            let (l, r) = (m.forward(0.5 - x).unwrap(), m.forward(0.5 + x).unwrap());
            prop_assert!((l - r).abs() <= 1e-14 * scale, "x = {}: {} vs {}", x, l, r);
        }
        Ok(())
    })
}

pub fn derivative_sign_and_antisymmetry(cases: u32) -> Result<(), String> {
    run(cases, (map_strategy(), 1e-6..0.5f64 - 1e-6), |(m, x)| {
        prop_assert!(m.derivative(x).unwrap() > 0.0);
        let h = 0.5 - x;
        let (l, r) = (m.derivative(0.5 - h).unwrap(), m.derivative(0.5 + h).unwrap());
        prop_assert!((l + r).abs() <= 1e-12 * (1.0 + l.abs()), "{} vs {}", l, r);
        Ok(())
    })
}

/// One-sided four-point stencils are exact for the cubic pieces.
pub fn spline_is_c2(cases: u32) -> Result<(), String> {
    run(cases, (-10.0..10.0f64, 0.01..10.0f64, 1e-3..1e-1f64), |(alpha, width, h)| {
        let m = PeriodizationMap::new(PeriodizationKind::Spline4, alpha, alpha + width).unwrap();
        let f = |x: f64| m.forward(x).unwrap();
        let left = (2.0 * f(0.5) - 5.0 * f(0.5 - h) + 4.0 * f(0.5 - 2.0 * h) - f(0.5 - 3.0 * h)) / (h * h);
        let right = (2.0 * f(0.5) - 5.0 * f(0.5 + h) + 4.0 * f(0.5 + 2.0 * h) - f(0.5 + 3.0 * h)) / (h * h);
        let tol = 1e-10f64.max(64.0 * f64::EPSILON * (1.0 + alpha.abs() + width) / (h * h));
        prop_assert!((left - right).abs() <= tol, "{} vs {}", left, right);
        prop_assert!((left - m.second_derivative(0.5)).abs() <= tol + 1e-9 * width);
        Ok(())
    })
}

// moments

/// `−(a u′)′ = f₀` on `[0, 1]` with `a = a₀ + b ξ cos(πη)`, `ξ ∈ [−1, 1]`.
#[derive(Clone, Debug)]
pub struct RandomProblem {
    pub a0: f64,
    pub b: f64,
    pub f0: f64,
}

impl RandomProblem {
    pub fn problem(&self) -> OdeProblem {
        let RandomProblem { a0, b, f0 } = *self;
        let pi = std::f64::consts::PI;
        OdeProblem::new(
            Arc::new(move |_| f0),
            Arc::new(move |eta, xi: &[f64]| a0 + b * xi[0] * (pi * eta).cos()),
            (0.0, 1.0),
            vec![(-1.0, 1.0)],
        )
        .unwrap()
        .with_antiderivative(Arc::new(move |eta| f0 * eta))
    }
}

pub fn random_problem(max_ratio: f64) -> impl Strategy<Value = RandomProblem> {
    (1.5..5.0f64, 0.0..max_ratio, 0.5..10.0f64).prop_map(|(a0, ratio, f0)| RandomProblem { a0, b: ratio * a0, f0 })
}

/// Cosine in η keeps `ŭ` smooth across the reflection points; tent in ξ
/// makes the density weight constant.
fn smooth_maps(p: &OdeProblem) -> Maps {
    Maps::for_problem(p, PeriodizationKind::Cosine, PeriodizationKind::Tent).unwrap()
}

fn grid() -> impl Iterator<Item = f64> {
    (0..=100).map(|k| k as f64 / 100.0)
}

/// Solves with a small sFFT and returns moments computed over the full
/// box `[−n, n]²`, so the moment step does not truncate.
fn moments_of(rp: &RandomProblem, seed: u64, n: u32, orders: &[u32]) -> Vec<sfft_uq::moments::MomentRep> {
    let p = rp.problem();
    let cfg = SfftConfig::new(8, 100, 1e-12, 2).with_seed(seed);
    let rep = solve(&p, &smooth_maps(&p), &SolverConfig::uniform(&cfg)).unwrap();
    let full = ((2 * n + 1) * (2 * n + 1)) as usize;
    let mcfg = SfftConfig::new(n, full, 1e-12, 2).with_seed(seed ^ 1);
    orders.iter().map(|&k| moment(&rep, k, &Density::Uniform, &mcfg).unwrap()).collect()
}

pub fn even_moments_nonnegative(cases: u32) -> Result<(), String> {
    run(cases, (random_problem(0.5), any::<u64>()), |(rp, seed)| {
        let m = moments_of(&rp, seed, 32, &[2]);
        for t in grid() {
            let v = m[0].evaluate(t).unwrap();
            prop_assert!(v >= -1e-8, "{:?}: second moment {} at t = {}", rp, v, t);
        }
        Ok(())
    })
}

pub fn variance_nonnegative(cases: u32) -> Result<(), String> {
    run(cases, (random_problem(0.5), any::<u64>()), |(rp, seed)| {
        let m = moments_of(&rp, seed, 16, &[1, 2]);
        for t in grid() {
            let (a, b) = (m[0].evaluate(t).unwrap(), m[1].evaluate(t).unwrap());
            prop_assert!(b >= a * a - 1e-6, "{:?}: E[u²] = {} < E[u]² = {} at t = {}", rp, b, a * a, t);
        }
        Ok(())
    })
}

pub fn deterministic_moments_are_powers(cases: u32) -> Result<(), String> {
    let strat = (1.5..5.0f64, 0.0..0.9f64, 1u32..4, 0.5..10.0f64, any::<u64>());
    run(cases, strat, |(a0, ratio, n, f0, seed)| {
        let pi = std::f64::consts::PI;
        let b = ratio * a0;
        let p = OdeProblem::new(
            Arc::new(move |_| f0),
            Arc::new(move |eta, _: &[f64]| a0 + b * (pi * eta).cos()),
            (0.0, 1.0),
            vec![(-1.0, 1.0)],
        )
        .unwrap();
        let cfg = SfftConfig::new(16, 100, 1e-12, 1).with_seed(seed);
        let rep = solve(&p, &smooth_maps(&p), &SolverConfig::uniform(&cfg)).unwrap();
        let mcfg = SfftConfig::new(256, 200, 1e-12, 3).with_seed(seed ^ 1);
        let m = moment(&rep, n, &Density::Uniform, &mcfg).unwrap();
        for t in grid() {
            let want = rep.evaluate(t, &[0.0]).unwrap().powi(n as i32);
            let got = m.evaluate(t).unwrap();
            prop_assert!((got - want).abs() <= 1e-6, "n = {}, t = {}: {} vs {}", n, t, got, want);
        }
        Ok(())
    })
}
