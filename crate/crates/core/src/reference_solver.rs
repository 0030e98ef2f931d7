//! Quadrature reference solutions for fixed `ξ` and Monte-Carlo moments.

use std::cell::Cell;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ode_solver::OdeProblem;
use crate::quadrature::integrate;

/// Number of grid intervals; the grid has `GRID_INTERVALS + 1` points.
pub const GRID_INTERVALS: usize = 100;

/// Panel tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("diffusion coefficient {value} at η = {eta} is not positive")]
    NonPositive { eta: f64, value: f64 },
    #[error("expected {expected} random variables, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("n_test must be positive")]
    NoDraws,
}

/// Values on the uniform grid `η_k = α₁ + k (β₁ − α₁) / 100`, `k = 0..100`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub bounds: (f64, f64),
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(bounds: (f64, f64)) -> Self {
        GridFunction {
            bounds,
            values: vec![0.0; GRID_INTERVALS + 1],
        }
    }

    pub fn eta(&self, k: usize) -> f64 {
        grid_point(self.bounds, k)
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=GRID_INTERVALS).map(|k| self.eta(k)).collect()
    }

    /// `eta,value` lines, one per grid point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{:e}", self.eta(k), v)?;
        }
        Ok(())
    }
}

pub fn grid_point(bounds: (f64, f64), k: usize) -> f64 {
    if k == GRID_INTERVALS {
        bounds.1
    } else {
        bounds.0 + k as f64 * (bounds.1 - bounds.0) / GRID_INTERVALS as f64
    }
}

/// `u₁ + c₁ u₂` on the grid for one parameter `ξ`, both integrals accumulated
/// panel by panel with adaptive Gauss–Kronrod quadrature of tolerance `tol`
/// per panel.
pub fn solve_fixed_xi(problem: &OdeProblem, xi: &[f64], tol: f64) -> Result<GridFunction, ReferenceError> {
    if xi.len() != problem.d_xi() {
        return Err(ReferenceError::Dimension {
            expected: problem.d_xi(),
            got: xi.len(),
        });
    }
    let bounds = problem.eta_bounds();
    let alpha = bounds.0;
    let bad: Cell<Option<(f64, f64)>> = Cell::new(None);
    let a = |s: f64| {
        let v = problem.a(s, xi);
        if v > 0.0 {
            return v;
        }
        if bad.get().is_none() {
            bad.set(Some((s, v)));
        }
        // keeps the quadrature finite until the error is reported
        1.0
    };
    // F(α₁) − F(s)
    let rhs_part = |s: f64| match problem.antiderivative() {
        Some(big_f) => big_f(alpha) - big_f(s),
        None => -integrate(|r| problem.f(r), alpha, s, 1e-3 * tol),
    };
    let mut u1 = vec![0.0; GRID_INTERVALS + 1];
    let mut u2 = vec![0.0; GRID_INTERVALS + 1];
    for k in 1..=GRID_INTERVALS {
        let (lo, hi) = (grid_point(bounds, k - 1), grid_point(bounds, k));
        u1[k] = u1[k - 1] + integrate(|s| rhs_part(s) / a(s), lo, hi, tol);
        u2[k] = u2[k - 1] + integrate(|s| 1.0 / a(s), lo, hi, tol);
    }
    if let Some((eta, value)) = bad.get() {
        return Err(ReferenceError::NonPositive { eta, value });
    }
    let c1 = -u1[GRID_INTERVALS] / u2[GRID_INTERVALS];
    let mut values: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + c1 * b).collect();
    values[0] = 0.0;
    values[GRID_INTERVALS] = 0.0;
    Ok(GridFunction { bounds, values })
}

/// Draw `i` of a reference sample: uniform on the random box, from the
/// stream `i` of a generator seeded with `seed`.
pub fn reference_draw(bounds: &[(f64, f64)], seed: u64, i: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect()
}

pub fn reference_draws(bounds: &[(f64, f64)], n_test: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n_test as u64).map(|i| reference_draw(bounds, seed, i)).collect()
}

/// Reference solutions for all `draws`, computed in parallel.
pub fn solve_draws(problem: &OdeProblem, draws: &[Vec<f64>], tol: f64) -> Result<Vec<GridFunction>, ReferenceError> {
    draws.par_iter().map(|xi| solve_fixed_xi(problem, xi, tol)).collect()
}

/// Monte-Carlo estimate `(1/n_test) Σ_i ǔ(η_k, ξ^i)ⁿ` with uniform draws.
pub fn mc_moment(problem: &OdeProblem, n: u32, n_test: usize, seed: u64) -> Result<GridFunction, ReferenceError> {
    let draws = reference_draws(problem.xi_bounds(), n_test, seed);
    let sols = solve_draws(problem, &draws, DEFAULT_TOL)?;
    mc_moment_from(&sols, n)
}

/// Pointwise mean of the `n`-th powers of precomputed reference solutions,
/// summed in draw order.
pub fn mc_moment_from(sols: &[GridFunction], n: u32) -> Result<GridFunction, ReferenceError> {
    let first = sols.first().ok_or(ReferenceError::NoDraws)?;
    let mut out = GridFunction::zeros(first.bounds);
    for s in sols {
        for (o, v) in out.values.iter_mut().zip(&s.values) {
            *o += v.powi(n as i32);
        }
    }
    let inv = 1.0 / sols.len() as f64;
    out.values.iter_mut().for_each(|v| *v *= inv);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn constant(a0: f64, closed_form: bool) -> OdeProblem {
        let p = OdeProblem::new(Arc::new(|_| 10.0), Arc::new(move |_, _| a0), (0.0, 1.0), vec![(-1.0, 1.0)]).unwrap();
        if closed_form {
            p.with_antiderivative(Arc::new(|s| 10.0 * s))
        } else {
            p
        }
    }

    #[test]
    fn unit_coefficient_closed_form() {
        for closed in [true, false] {
            let g = solve_fixed_xi(&constant(1.0, closed), &[0.2], DEFAULT_TOL).unwrap();
            for k in 0..=GRID_INTERVALS {
                let eta = g.eta(k);
                assert!((g.values[k] - 5.0 * eta * (1.0 - eta)).abs() < 1e-9);
            }
            assert_eq!(g.values[0], 0.0);
            assert_eq!(g.values[GRID_INTERVALS], 0.0);
        }
    }

    #[test]
    fn scaled_coefficient() {
        let g = solve_fixed_xi(&constant(4.3, true), &[0.0], DEFAULT_TOL).unwrap();
        assert!((g.values[50] - 1.25 / 4.3).abs() < 1e-12);
        assert!((g.values[50] - 0.29069).abs() < 1e-5);
    }

    #[test]
    fn nonpositive_coefficient() {
        let p = OdeProblem::new(Arc::new(|_| 1.0), Arc::new(|eta, _| eta - 0.5), (0.0, 1.0), vec![(-1.0, 1.0)]).unwrap();
        assert!(matches!(
            solve_fixed_xi(&p, &[0.0], 1e-8),
            Err(ReferenceError::NonPositive { .. })
        ));
        assert!(matches!(
            solve_fixed_xi(&p, &[0.0, 1.0], 1e-8),
            Err(ReferenceError::Dimension { .. })
        ));
    }

    #[test]
    fn single_draw_moment_is_the_solution() {
        let pi = std::f64::consts::PI;
        let p = OdeProblem::new(
            Arc::new(|_| 10.0),
            Arc::new(move |eta, xi: &[f64]| 4.3 + xi[0] * (pi * eta).cos()),
            (0.0, 1.0),
            vec![(-1.0, 1.0)],
        )
        .unwrap();
        let m = mc_moment(&p, 1, 1, 7).unwrap();
        let xi = reference_draw(p.xi_bounds(), 7, 0);
        assert_eq!(m, solve_fixed_xi(&p, &xi, DEFAULT_TOL).unwrap());
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 101);
    }

    #[test]
    fn halving_tolerance_is_stable() {
        let pi = std::f64::consts::PI;
        let p = OdeProblem::new(
            Arc::new(|eta: f64| 10.0 * (1.0 + eta * eta)),
            Arc::new(move |eta, xi: &[f64]| 2.0 + xi[0] * (3.0 * pi * eta).sin()),
            (0.0, 1.0),
            vec![(-1.0, 1.0)],
        )
        .unwrap();
        let a = solve_fixed_xi(&p, &[0.9], 1e-8).unwrap();
        let b = solve_fixed_xi(&p, &[0.9], 5e-9).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}
