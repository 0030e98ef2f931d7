//! Moments `E[ŭ(t, ·)ⁿ]` of an approximate solution.
//!
//! The weighted power `w_n(x, y) = ŭ(φ_η(x), φ_ξ(y))ⁿ ρ(φ_ξ(y)) Π_j |φ′_j(y_j)|`
//! is approximated by a sparse FFT. Integrating over `y ∈ 𝕋^{d_ξ}` removes
//! every term with `l ≠ 0`; the symmetric extension contributes the factor
//! `2^{−d_ξ}`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::ode_solver::{staged, CompiledSolution, SolutionEvaluator, SolutionRep, SolverError, Stage};
use crate::periodization::{reflect, PeriodizationMap};
use crate::sfft::{for_lanes, sfft_detailed, BlackBox, BlackBoxError, SfftConfig};
use crate::trig_poly::{Frequency, SparseTrigPoly, LANES};

/// Product density of the random variables.
#[derive(Clone)]
pub enum Density {
    /// Uniform on the box spanned by the periodization intervals.
    Uniform,
    /// Arbitrary density `ρ(ξ)`.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Density::Uniform => f.write_str("Uniform"),
            Density::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// `ŭ*_{Eⁿ}(t) = 2^{−d_ξ} Σ_k â_{(k,0)} e^{2πik φ_η⁻¹(t)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentRep {
    pub order: u32,
    /// One-dimensional coefficients, already scaled by `2^{−d_ξ}`.
    pub coeffs: SparseTrigPoly,
    pub map: PeriodizationMap,
    pub samples: u64,
}

impl MomentRep {
    pub fn evaluate(&self, t: f64) -> Result<f64, SolverError> {
        let x = self.map.inverse(t)?;
        Ok(self.coeffs.evaluate(&[x])?.re)
    }
}

/// Evaluates a moment curve at `t`.
pub fn evaluate_moment(m: &MomentRep, t: f64) -> Result<f64, SolverError> {
    m.evaluate(t)
}

struct MomentBox<'a> {
    rep: &'a SolutionRep,
    sol: CompiledSolution,
    order: u32,
    /// Uniform density on the random box.
    uniform: f64,
    density: &'a Density,
}

impl MomentBox<'_> {
    fn eval_with(
        &self,
        p: &[f64],
        ev: &mut SolutionEvaluator<'_>,
        y: &mut [f64],
        xi: &mut [f64],
    ) -> Result<Complex64, BlackBoxError> {
        let maps = &self.rep.maps;
        let mut jac = 1.0;
        for (j, m) in maps.xi.iter().enumerate() {
            y[j] = reflect(p[j + 1]);
            jac *= m.integration_weight(p[j + 1]).abs();
        }
        let rho = match self.density {
            Density::Uniform => self.uniform,
            Density::Custom(f) => {
                for (j, m) in maps.xi.iter().enumerate() {
                    xi[j] = m.apply(p[j + 1]);
                }
                f(xi)
            }
        };
        let u = ev.at_periodized(reflect(p[0]), y);
        Ok(u.powu(self.order) * (rho * jac))
    }
}

impl BlackBox for MomentBox<'_> {
    fn dim(&self) -> usize {
        1 + self.rep.d_xi()
    }

    fn eval(&self, x: &[f64]) -> Result<Complex64, BlackBoxError> {
        let d = self.rep.d_xi();
        self.eval_with(x, &mut self.sol.evaluator(), &mut vec![0.0; d], &mut vec![0.0; d])
    }

    fn eval_batch(&self, points: &[f64], out: &mut [Complex64]) -> Result<(), BlackBoxError> {
        let d = self.rep.d_xi();
        let maps = &self.rep.maps;
        let mut ev = self.sol.evaluator();
        let mut xi = vec![0.0; d];
        for_lanes(points, d + 1, out, |xs, o| {
            let mut weight = [1.0; LANES];
            for (l, w) in weight.iter_mut().enumerate() {
                for (j, m) in maps.xi.iter().enumerate() {
                    *w *= m.integration_weight(xs[j + 1][l]).abs();
                }
                *w *= match self.density {
                    Density::Uniform => self.uniform,
                    Density::Custom(f) => {
                        for (j, m) in maps.xi.iter().enumerate() {
                            xi[j] = m.apply(xs[j + 1][l]);
                        }
                        f(&xi)
                    }
                };
            }
            for x in xs.iter_mut() {
                x.iter_mut().for_each(|v| *v = reflect(*v));
            }
            let u = ev.at_periodized_lanes(xs);
            for (l, o) in o.iter_mut().enumerate() {
                *o = u[l].powu(self.order) * weight[l];
            }
            Ok(())
        })
    }
}

/// `n`-th moment of `ŭ` with respect to `density`, using the periodizations
/// stored in `rep`.
pub fn moment(rep: &SolutionRep, n: u32, density: &Density, cfg: &SfftConfig) -> Result<MomentRep, SolverError> {
    if n == 0 {
        return Err(SolverError::Problem("moment order must be positive".into()));
    }
    let bb = MomentBox {
        rep,
        sol: rep.compile(),
        order: n,
        uniform: rep.maps.xi.iter().map(|m| 1.0 / (m.beta() - m.alpha())).product(),
        density,
    };
    let out = staged(Stage::Moment, sfft_detailed(&bb, cfg))?;
    let scale = 0.5f64.powi(rep.d_xi() as i32);
    let terms = out
        .poly
        .iter()
        .filter(|(k, _)| k[1..].iter().all(|&l| l == 0))
        .map(|(k, c)| (Frequency::new(vec![k[0]]), c * scale));
    Ok(MomentRep {
        order: n,
        coeffs: SparseTrigPoly::from_terms(1, terms)?,
        map: rep.maps.eta,
        samples: out.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_solver::{solve, Maps, OdeProblem, SolverConfig};
    use crate::periodization::PeriodizationKind;

    fn eta_only_problem() -> OdeProblem {
        let pi = std::f64::consts::PI;
        OdeProblem::new(
            Arc::new(|_| 10.0),
            Arc::new(move |eta, _| 3.0 + (pi * eta).cos()),
            (0.0, 1.0),
            vec![(-1.0, 1.0); 2],
        )
        .unwrap()
    }

    #[test]
    fn deterministic_solution_moments_are_powers() {
        let p = eta_only_problem();
        // the cosine map keeps the reflected solution smooth at both ends
        let maps = Maps::for_problem(&p, PeriodizationKind::Cosine, PeriodizationKind::Tent).unwrap();
        let rep = solve(&p, &maps, &SolverConfig::uniform(&SfftConfig::new(32, 200, 1e-12, 2))).unwrap();
        let mcfg = SfftConfig::new(256, 1000, 1e-12, 3);
        for n in 1..=3 {
            let m = moment(&rep, n, &Density::Uniform, &mcfg).unwrap();
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                let err = (m.evaluate(t).unwrap() - rep.evaluate(t, &[0.1, -0.7]).unwrap().powi(n as i32)).abs();
                assert!(err < 1e-6, "n={n} t={t}: {err:e}");
            }
        }
    }

    #[test]
    fn custom_uniform_density_matches_builtin() {
        let p = eta_only_problem();
        let maps = Maps::tent(&p).unwrap();
        let cfg = SfftConfig::new(16, 100, 1e-12, 1);
        let rep = solve(&p, &maps, &SolverConfig::uniform(&cfg)).unwrap();
        let a = moment(&rep, 1, &Density::Uniform, &cfg).unwrap();
        let b = moment(&rep, 1, &Density::Custom(Arc::new(|_| 0.25)), &cfg).unwrap();
        assert!((a.evaluate(0.4).unwrap() - b.evaluate(0.4).unwrap()).abs() < 1e-14);
        assert!(moment(&rep, 0, &Density::Uniform, &cfg).is_err());
    }
}
