//! Approximation of `−(a u′)′ = f`, `u(α₁) = u(β₁) = 0`, jointly in the
//! spatial variable `η` and the random parameters `ξ`.
//!
//! The formal solution is `u = u₁ + c₁ u₂` with
//!
//! ```text
//! u₁(η, ξ) = ∫_{α₁}^{η} (F(α₁) − F(s)) / a(s, ξ) ds,   u₂(η, ξ) = ∫_{α₁}^{η} 1 / a(s, ξ) ds,
//! c₁(ξ) = −u₁(β₁, ξ) / u₂(β₁, ξ).
//! ```
//!
//! Each integrand is periodized, approximated by a sparse FFT, integrated in
//! closed form in the periodized spatial variable and evaluated through the
//! inverse periodization.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice;
use crate::periodization::{reflect, PeriodizationError, PeriodizationKind, PeriodizationMap};
use crate::sfft::{for_lanes, sfft_detailed, BlackBox, BlackBoxError, SfftConfig, SfftError};
use crate::trig_poly::{
    merge_radii, AntiderivativeRep, CompiledAntiderivative, CompiledTerms, Frequency, LanePowerTable, PowerTable,
    SparseTrigPoly, TrigPolyError, LANES,
};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type CoefficientFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: SfftError,
    },
    #[error("{0}")]
    Domain(#[from] PeriodizationError),
    #[error("{0}")]
    Poly(#[from] TrigPolyError),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("malformed solution file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Rhs,
    V1,
    V2,
    C1,
    Moment,
    Expansion,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Rhs => "right-hand side stage",
            Stage::V1 => "v1 stage",
            Stage::V2 => "v2 stage",
            Stage::C1 => "c1 stage",
            Stage::Moment => "moment stage",
            Stage::Expansion => "expansion stage",
        })
    }
}

pub(crate) fn staged<T>(stage: Stage, r: Result<T, SfftError>) -> Result<T, SolverError> {
    r.map_err(|source| SolverError::Stage { stage, source })
}

/// Boundary value problem with right-hand side `f(η)` and diffusion
/// coefficient `a(η, ξ)`, `ξ ∈ ×_j [α_j, β_j]`.
#[derive(Clone)]
pub struct OdeProblem {
    f: ScalarFn,
    antiderivative: Option<ScalarFn>,
    a: CoefficientFn,
    eta_bounds: (f64, f64),
    xi_bounds: Vec<(f64, f64)>,
}

impl std::fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OdeProblem")
            .field("eta_bounds", &self.eta_bounds)
            .field("xi_bounds", &self.xi_bounds)
            .field("closed_form_antiderivative", &self.antiderivative.is_some())
            .finish()
    }
}

impl OdeProblem {
    pub fn new(
        f: ScalarFn,
        a: CoefficientFn,
        eta_bounds: (f64, f64),
        xi_bounds: Vec<(f64, f64)>,
    ) -> Result<Self, SolverError> {
        if !(eta_bounds.0 < eta_bounds.1) {
            return Err(SolverError::Problem("spatial interval must satisfy α₁ < β₁".into()));
        }
        if xi_bounds.is_empty() {
            return Err(SolverError::Problem("at least one random variable is required".into()));
        }
        if xi_bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(SolverError::Problem("random intervals must satisfy α_j < β_j".into()));
        }
        Ok(OdeProblem {
            f,
            antiderivative: None,
            a,
            eta_bounds,
            xi_bounds,
        })
    }

    /// Attaches a closed-form antiderivative `F` with `F′ = f`.
    pub fn with_antiderivative(mut self, big_f: ScalarFn) -> Self {
        self.antiderivative = Some(big_f);
        self
    }

    pub fn f(&self, eta: f64) -> f64 {
        (self.f)(eta)
    }

    pub fn antiderivative(&self) -> Option<&ScalarFn> {
        self.antiderivative.as_ref()
    }

    pub fn a(&self, eta: f64, xi: &[f64]) -> f64 {
        (self.a)(eta, xi)
    }

    pub fn eta_bounds(&self) -> (f64, f64) {
        self.eta_bounds
    }

    pub fn xi_bounds(&self) -> &[(f64, f64)] {
        &self.xi_bounds
    }

    pub fn d_xi(&self) -> usize {
        self.xi_bounds.len()
    }

    /// Same problem with `f` scaled by `s`.
    pub fn scaled_rhs(&self, s: f64) -> Self {
        let f = self.f.clone();
        let mut out = self.clone();
        out.f = Arc::new(move |eta| s * f(eta));
        out.antiderivative = self.antiderivative.clone().map(|big_f| {
            let g: ScalarFn = Arc::new(move |eta| s * big_f(eta));
            g
        });
        out
    }

    fn checked_a(&self, eta: f64, xi: &[f64]) -> Result<f64, BlackBoxError> {
        let v = (self.a)(eta, xi);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(BlackBoxError(format!(
                "diffusion coefficient {v} at η = {eta}, ξ = {xi:?} violates the positive lower bound"
            )))
        }
    }
}

/// Periodizations of the spatial variable and of every random variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Maps {
    pub eta: PeriodizationMap,
    pub xi: Vec<PeriodizationMap>,
}

impl Maps {
    pub fn for_problem(problem: &OdeProblem, spatial: PeriodizationKind, random: PeriodizationKind) -> Result<Self, SolverError> {
        let (a, b) = problem.eta_bounds();
        Ok(Maps {
            eta: PeriodizationMap::new(spatial, a, b)?,
            xi: problem
                .xi_bounds()
                .iter()
                .map(|&(lo, hi)| PeriodizationMap::new(random, lo, hi))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn tent(problem: &OdeProblem) -> Result<Self, SolverError> {
        Self::for_problem(problem, PeriodizationKind::Tent, PeriodizationKind::Tent)
    }

    fn xi_into(&self, y: &[f64], out: &mut [f64]) {
        for ((o, m), &v) in out.iter_mut().zip(&self.xi).zip(y) {
            *o = m.apply(v);
        }
    }
}

/// `F̆(η) = F(α₁) − F(η)` in periodized form:
/// `F̆ = −â₀ x − Σ_{k≠0} (â_k / 2πik)(e^{2πikx} − 1)` with `x = φ⁻¹(η)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RhsAntiderivative {
    pub a0_hat: Complex64,
    /// `â_k / (2πik)` for `k ≠ 0`, one-dimensional.
    pub osc: SparseTrigPoly,
    pub map: PeriodizationMap,
}

impl RhsAntiderivative {
    /// Value at the periodized point `x ∈ [0, 1/2]`.
    pub fn at_periodized(&self, x: f64) -> f64 {
        let mut v = -self.a0_hat * x;
        for (k, c) in self.osc.iter() {
            let (s, co) = (TWO_PI * k[0] as f64 * x).sin_cos();
            v -= c * (Complex64::new(co, s) - 1.0);
        }
        v.re
    }

    pub fn evaluate(&self, eta: f64) -> Result<f64, SolverError> {
        Ok(self.at_periodized(self.map.inverse(eta)?))
    }

    /// Dense table of `F̆(φ(x))` for fast repeated evaluation.
    fn tabulate(&self) -> RhsTable {
        let n = self.osc.radii().first().copied().unwrap_or(0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * n as usize + 1];
        let mut constant = Complex64::new(0.0, 0.0);
        for (k, c) in self.osc.iter() {
            coeffs[(k[0] + n) as usize] = *c;
            constant += c;
        }
        RhsTable {
            a0: self.a0_hat.re,
            n,
            coeffs,
            constant: constant.re,
        }
    }
}

struct RhsTable {
    a0: f64,
    n: i32,
    coeffs: Vec<Complex64>,
    constant: f64,
}

impl RhsTable {
    fn at(&self, x: f64) -> f64 {
        let (s, c) = (TWO_PI * x).sin_cos();
        let w = Complex64::new(c, s);
        let mut p = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for k in 1..=self.n {
            p = if k % 32 == 0 {
                let (s, c) = (TWO_PI * k as f64 * x).sin_cos();
                Complex64::new(c, s)
            } else {
                p * w
            };
            let pos = self.coeffs[(self.n + k) as usize];
            let neg = self.coeffs[(self.n - k) as usize];
            acc += (pos * p + neg * p.conj()).re;
        }
        -self.a0 * x - acc + self.constant
    }
}

/// Approximates `F̆` from `2N+1` equispaced samples of the periodized
/// integrand `f(φ(x)) w(x)` and one DFT; `w` is `φ′`, or the constant
/// `2(β−α)` for the tent map.
pub fn approximate_rhs_antiderivative<F: Fn(f64) -> f64>(
    f: F,
    map: &PeriodizationMap,
    n: u32,
) -> RhsAntiderivative {
    let len = 2 * n as usize + 1;
    let mut buf: Vec<Complex64> = (0..len)
        .map(|j| {
            let x = j as f64 / len as f64;
            Complex64::new(f(map.apply(x)) * map.integration_weight(x), 0.0)
        })
        .collect();
    lattice::dft_forward(&mut buf);
    let scale = 1.0 / len as f64;
    let ni = n as i32;
    let mut freqs = Vec::new();
    let mut coeffs = Vec::new();
    for k in -ni..=ni {
        if k == 0 {
            continue;
        }
        let c = buf[k.rem_euclid(len as i32) as usize] * scale;
        freqs.push(Frequency::new(vec![k]));
        coeffs.push(c / Complex64::new(0.0, TWO_PI * k as f64));
    }
    RhsAntiderivative {
        a0_hat: buf[0] * scale,
        osc: SparseTrigPoly::from_unique(1, freqs, coeffs).expect("one-dimensional"),
        map: *map,
    }
}

struct IntegrandBox<'a> {
    problem: &'a OdeProblem,
    maps: &'a Maps,
    rhs: Option<RhsTable>,
}

impl BlackBox for IntegrandBox<'_> {
    fn dim(&self) -> usize {
        1 + self.maps.xi.len()
    }

    fn eval(&self, x: &[f64]) -> Result<Complex64, BlackBoxError> {
        let mut xi = vec![0.0; self.maps.xi.len()];
        self.eval_into(x, &mut xi)
    }

    fn eval_batch(&self, points: &[f64], out: &mut [Complex64]) -> Result<(), BlackBoxError> {
        let mut xi = vec![0.0; self.maps.xi.len()];
        for (o, x) in out.iter_mut().zip(points.chunks_exact(self.dim())) {
            *o = self.eval_into(x, &mut xi)?;
        }
        Ok(())
    }
}

impl IntegrandBox<'_> {
    #[inline]
    fn eval_into(&self, x: &[f64], xi: &mut [f64]) -> Result<Complex64, BlackBoxError> {
        let eta = self.maps.eta.apply(x[0]);
        self.maps.xi_into(&x[1..], xi);
        let a = self.problem.checked_a(eta, xi)?;
        let w = self.maps.eta.integration_weight(x[0]);
        let num = match &self.rhs {
            Some(t) => t.at(reflect(x[0])) * w,
            None => w,
        };
        Ok(Complex64::new(num / a, 0.0))
    }
}

/// Sparse approximation `b̂` of `(x, y) ↦ F̆(φ_η(x)) w(x) / a(φ_η(x), φ_ξ(y))`.
pub fn approximate_v1(
    problem: &OdeProblem,
    rhs: &RhsAntiderivative,
    maps: &Maps,
    cfg: &SfftConfig,
) -> Result<(SparseTrigPoly, u64), SolverError> {
    let bb = IntegrandBox {
        problem,
        maps,
        rhs: Some(rhs.tabulate()),
    };
    let out = staged(Stage::V1, sfft_detailed(&bb, cfg))?;
    Ok((out.poly, out.samples))
}

/// Sparse approximation `ĉ` of `(x, y) ↦ w(x) / a(φ_η(x), φ_ξ(y))`.
pub fn approximate_v2(problem: &OdeProblem, maps: &Maps, cfg: &SfftConfig) -> Result<(SparseTrigPoly, u64), SolverError> {
    let bb = IntegrandBox {
        problem,
        maps,
        rhs: None,
    };
    let out = staged(Stage::V2, sfft_detailed(&bb, cfg))?;
    Ok((out.poly, out.samples))
}

/// Antiderivative in the spatial variable, vanishing at `x = 0`. The
/// returned family holds `v̂_{(k,l)} / (2πik)` for `k ≠ 0` and `v̂_{(0,l)}`
/// for the linear part.
pub fn antiderivative_and_deperiodize(vhat: &SparseTrigPoly) -> AntiderivativeRep {
    vhat.antiderivative_first_var()
}

/// `y ↦ U(1/2, y)`: the antiderivative at the right end of the spatial
/// interval as a polynomial in the random variables. Oscillatory terms
/// contribute `(−1)^k − 1`, linear terms `1/2`.
pub fn right_boundary_trace(u: &AntiderivativeRep) -> SparseTrigPoly {
    let d = u.dim() - 1;
    let osc = u.oscillatory().iter().filter(|(k, _)| k[0] % 2 != 0).map(|(k, c)| {
        (Frequency::from(&k[1..]), -2.0 * c)
    });
    let lin = u.linear().iter().map(|(l, c)| (l.clone(), 0.5 * c));
    SparseTrigPoly::from_terms(d, osc.chain(lin)).expect("consistent dimensions")
}

struct C1Box {
    p1: CompiledTerms,
    p2: CompiledTerms,
    radii: Vec<i32>,
}

impl C1Box {
    fn new(p1: &SparseTrigPoly, p2: &SparseTrigPoly) -> Self {
        let mut radii = p1.radii().to_vec();
        merge_radii(&mut radii, p2.radii(), 0);
        let layout = PowerTable::new(&radii);
        C1Box {
            p1: p1.compile(&layout, 0),
            p2: p2.compile(&layout, 0),
            radii,
        }
    }

    fn eval_with(&self, y: &[f64], r: &mut [f64], table: &mut PowerTable) -> Result<Complex64, BlackBoxError> {
        r.copy_from_slice(y);
        table.fill(r);
        let den = self.p2.evaluate(table);
        if den.norm() < 1e-14 {
            return Err(BlackBoxError(format!(
                "|u2(β₁, ·)| = {:e} below 1e-14 at y = {y:?}",
                den.norm()
            )));
        }
        Ok(Complex64::from(-(self.p1.evaluate(table) / den).re))
    }
}

impl BlackBox for C1Box {
    fn dim(&self) -> usize {
        self.radii.len()
    }

    fn eval(&self, y: &[f64]) -> Result<Complex64, BlackBoxError> {
        let mut r = vec![0.0; self.dim()];
        self.eval_with(y, &mut r, &mut PowerTable::new(&self.radii))
    }

    fn eval_batch(&self, points: &[f64], out: &mut [Complex64]) -> Result<(), BlackBoxError> {
        let d = self.dim();
        let mut table = LanePowerTable::new(&PowerTable::new(&self.radii));
        for_lanes(points, d, out, |xs, o| {
            table.fill(xs);
            let (nr, ni) = self.p1.evaluate_lanes(&table);
            let (dr, di) = self.p2.evaluate_lanes(&table);
            for (l, o) in o.iter_mut().enumerate() {
                let den = Complex64::new(dr[l], di[l]);
                if den.norm() < 1e-14 {
                    let y: Vec<f64> = xs.iter().map(|x| x[l]).collect();
                    return Err(BlackBoxError(format!(
                        "|u2(β₁, ·)| = {:e} below 1e-14 at y = {y:?}",
                        den.norm()
                    )));
                }
                *o = Complex64::from(-(Complex64::new(nr[l], ni[l]) / den).re);
            }
            Ok(())
        })
    }
}

/// Sparse approximation of `y ↦ −Re(U₁(1/2, y) / U₂(1/2, y))`, i.e. of
/// `c₁(φ_ξ(y))`. The traces are even in every `y_j`, so no reflection is needed.
pub fn approximate_c1(
    u1: &AntiderivativeRep,
    u2: &AntiderivativeRep,
    cfg: &SfftConfig,
) -> Result<(SparseTrigPoly, u64), SolverError> {
    let p1 = right_boundary_trace(u1);
    let p2 = right_boundary_trace(u2);
    let bb = C1Box::new(&p1, &p2);
    let out = staged(Stage::C1, sfft_detailed(&bb, cfg))?;
    Ok((out.poly, out.samples))
}

/// Per-stage sfft configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// `N` of the right-hand side DFT.
    pub rhs_n: u32,
    pub v1: SfftConfig,
    pub v2: SfftConfig,
    pub c1: SfftConfig,
}

impl SolverConfig {
    /// One configuration for all stages; stage seeds are derived from `cfg.seed`.
    pub fn uniform(cfg: &SfftConfig) -> Self {
        let with = |i: u64| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i);
            c
        };
        SolverConfig {
            rhs_n: cfg.n,
            v1: with(1),
            v2: with(2),
            c1: with(3),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSamples {
    pub rhs: u64,
    pub v1: u64,
    pub v2: u64,
    pub c1: u64,
}

impl StageSamples {
    pub fn total(&self) -> u64 {
        self.rhs + self.v1 + self.v2 + self.c1
    }
}

/// `ŭ(t, ξ) = ŭ₁(t, ξ) + c̆̆₁(ξ) ŭ₂(t, ξ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionRep {
    pub u1: AntiderivativeRep,
    pub u2: AntiderivativeRep,
    pub c1: SparseTrigPoly,
    pub maps: Maps,
    pub samples: StageSamples,
}

/// Runs the full pipeline.
pub fn solve(problem: &OdeProblem, maps: &Maps, cfg: &SolverConfig) -> Result<SolutionRep, SolverError> {
    if maps.xi.len() != problem.d_xi() {
        return Err(SolverError::Problem(format!(
            "{} random periodizations for {} random variables",
            maps.xi.len(),
            problem.d_xi()
        )));
    }
    let rhs = approximate_rhs_antiderivative(|eta| problem.f(eta), &maps.eta, cfg.rhs_n);
    let rhs_samples = 2 * cfg.rhs_n as u64 + 1;
    let (b, v1_samples) = approximate_v1(problem, &rhs, maps, &cfg.v1)?;
    log::info!("v1: {} terms, {} samples", b.len(), v1_samples);
    let (c, v2_samples) = approximate_v2(problem, maps, &cfg.v2)?;
    log::info!("v2: {} terms, {} samples", c.len(), v2_samples);
    let u1 = antiderivative_and_deperiodize(&b);
    let u2 = antiderivative_and_deperiodize(&c);
    let (d, c1_samples) = approximate_c1(&u1, &u2, &cfg.c1)?;
    log::info!("c1: {} terms, {} samples", d.len(), c1_samples);
    Ok(SolutionRep {
        u1,
        u2,
        c1: d,
        maps: maps.clone(),
        samples: StageSamples {
            rhs: rhs_samples,
            v1: v1_samples,
            v2: v2_samples,
            c1: c1_samples,
        },
    })
}

/// [`SolutionRep`] bound to one shared power-table layout.
#[derive(Clone, Debug)]
pub struct CompiledSolution {
    u1: CompiledAntiderivative,
    u2: CompiledAntiderivative,
    c1: CompiledTerms,
    radii: Vec<i32>,
    maps: Maps,
}

impl CompiledSolution {
    pub fn new(rep: &SolutionRep) -> Self {
        let mut radii = rep.u1.radii();
        merge_radii(&mut radii, &rep.u2.radii(), 0);
        merge_radii(&mut radii, rep.c1.radii(), 1);
        let layout = PowerTable::with_shifted_first(&radii);
        CompiledSolution {
            u1: rep.u1.compile(&layout),
            u2: rep.u2.compile(&layout),
            c1: rep.c1.compile(&layout, 1),
            radii,
            maps: rep.maps.clone(),
        }
    }

    pub fn d_xi(&self) -> usize {
        self.radii.len() - 1
    }

    pub fn evaluator(&self) -> SolutionEvaluator<'_> {
        SolutionEvaluator {
            sol: self,
            table: PowerTable::with_shifted_first(&self.radii),
            lanes: LanePowerTable::new(&PowerTable::with_shifted_first(&self.radii)),
            point: vec![0.0; self.radii.len()],
        }
    }
}

/// Scratch space for repeated evaluation of a [`CompiledSolution`].
pub struct SolutionEvaluator<'a> {
    sol: &'a CompiledSolution,
    table: PowerTable,
    lanes: LanePowerTable,
    point: Vec<f64>,
}

impl SolutionEvaluator<'_> {
    /// Complex value at periodized coordinates `x ∈ [0, 1/2]`, `y ∈ [0, 1/2]^{d_ξ}`.
    #[inline]
    pub fn at_periodized(&mut self, x: f64, y: &[f64]) -> Complex64 {
        self.point[0] = x;
        self.point[1..].copy_from_slice(y);
        self.table.fill(&self.point);
        let s = self.sol;
        s.u1.evaluate(x, &self.table) + s.c1.evaluate(&self.table) * s.u2.evaluate(x, &self.table)
    }

    /// [`at_periodized`](Self::at_periodized) for [`LANES`] points;
    /// `xs[0]` holds `x`, `xs[1..]` holds `y`.
    pub fn at_periodized_lanes(&mut self, xs: &[[f64; LANES]]) -> [Complex64; LANES] {
        self.lanes.fill(xs);
        let s = self.sol;
        let (ar, ai) = s.u1.evaluate_lanes(&xs[0], &self.lanes);
        let (br, bi) = s.u2.evaluate_lanes(&xs[0], &self.lanes);
        let (cr, ci) = s.c1.evaluate_lanes(&self.lanes);
        std::array::from_fn(|l| Complex64::new(ar[l], ai[l]) + Complex64::new(cr[l], ci[l]) * Complex64::new(br[l], bi[l]))
    }

    /// `ŭ(t, ξ)`, real part.
    pub fn evaluate(&mut self, t: f64, xi: &[f64]) -> Result<f64, SolverError> {
        let maps = &self.sol.maps;
        if xi.len() != maps.xi.len() {
            return Err(SolverError::Problem(format!(
                "expected {} random variables, got {}",
                maps.xi.len(),
                xi.len()
            )));
        }
        let x = maps.eta.inverse(t)?;
        let y = xi
            .iter()
            .zip(&maps.xi)
            .map(|(&v, m)| m.inverse(v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.at_periodized(x, &y).re)
    }
}

impl SolutionRep {
    pub fn d_xi(&self) -> usize {
        self.c1.dim()
    }

    pub fn compile(&self) -> CompiledSolution {
        CompiledSolution::new(self)
    }

    /// `ŭ(t, ξ)`. Compiles on every call; use [`compile`](Self::compile) for
    /// repeated evaluation.
    pub fn evaluate(&self, t: f64, xi: &[f64]) -> Result<f64, SolverError> {
        self.compile().evaluator().evaluate(t, xi)
    }

    /// Writes a JSON header line followed by the three coefficient blocks.
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), SolverError> {
        let header = SolutionHeader {
            eta: self.maps.eta,
            xi: self.maps.xi.clone(),
            d_xi: self.d_xi(),
            samples: self.samples,
        };
        writeln!(w, "{}", serde_json::to_string(&header).map_err(|e| SolverError::Format(e.to_string()))?)?;
        for (name, p) in [
            ("frak_b", self.u1.to_family()),
            ("frak_c", self.u2.to_family()),
            ("frak_d", self.c1.clone()),
        ] {
            writeln!(w, "## {name}")?;
            p.write_dump(&mut w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(mut r: R) -> Result<Self, SolverError> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: SolutionHeader = serde_json::from_str(line.trim()).map_err(|e| SolverError::Format(e.to_string()))?;
        let mut block = |name: &str| -> Result<SparseTrigPoly, SolverError> {
            line.clear();
            r.read_line(&mut line)?;
            if line.trim() != format!("## {name}") {
                return Err(SolverError::Format(format!("expected block {name}, found `{}`", line.trim())));
            }
            Ok(SparseTrigPoly::read_dump(&mut r)?)
        };
        let b = block("frak_b")?;
        let c = block("frak_c")?;
        let d = block("frak_d")?;
        if b.dim() != header.d_xi + 1 || c.dim() != header.d_xi + 1 || d.dim() != header.d_xi {
            return Err(SolverError::Format("block dimensions disagree with header".into()));
        }
        Ok(SolutionRep {
            u1: AntiderivativeRep::from_family(&b),
            u2: AntiderivativeRep::from_family(&c),
            c1: d,
            maps: Maps {
                eta: header.eta,
                xi: header.xi,
            },
            samples: header.samples,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SolutionHeader {
    eta: PeriodizationMap,
    xi: Vec<PeriodizationMap>,
    d_xi: usize,
    samples: StageSamples,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_problem(a0: f64, f0: f64, d_xi: usize) -> OdeProblem {
        OdeProblem::new(
            Arc::new(move |_| f0),
            Arc::new(move |_, _| a0),
            (0.0, 1.0),
            vec![(-1.0, 1.0); d_xi],
        )
        .unwrap()
        .with_antiderivative(Arc::new(move |eta| f0 * eta))
    }

    #[test]
    fn rhs_antiderivative_of_constant() {
        let m = PeriodizationMap::tent(0.0, 1.0).unwrap();
        let r = approximate_rhs_antiderivative(|_| 10.0, &m, 32);
        for i in 0..=20 {
            let eta = i as f64 / 20.0;
            assert!((r.evaluate(eta).unwrap() + 10.0 * eta).abs() < 1e-10);
        }
        let z = approximate_rhs_antiderivative(|_| 0.0, &m, 8);
        assert_eq!(z.evaluate(0.7).unwrap(), 0.0);
    }

    #[test]
    fn rhs_antiderivative_of_cosine() {
        let m = PeriodizationMap::tent(0.0, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let r = approximate_rhs_antiderivative(|eta| (pi * eta).cos(), &m, 64);
        let table = r.tabulate();
        for i in 0..=50 {
            let eta = i as f64 / 50.0;
            let want = -(pi * eta).sin() / pi;
            assert!((r.evaluate(eta).unwrap() - want).abs() < 1e-8);
            assert!((table.at(m.invert(eta)) - want).abs() < 1e-8);
        }
    }

    #[test]
    fn v2_of_constant_coefficient() {
        let p = constant_problem(4.0, 10.0, 2);
        let maps = Maps::tent(&p).unwrap();
        let (c, _) = approximate_v2(&p, &maps, &SfftConfig::new(8, 50, 1e-12, 2)).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.get(&[0, 0, 0]).unwrap() - Complex64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn deperiodized_linear_and_oscillatory_terms() {
        let v = SparseTrigPoly::from_terms(2, [(Frequency::new(vec![0, 3]), Complex64::new(5.0, 0.0))]).unwrap();
        let u = antiderivative_and_deperiodize(&v);
        let got = u.evaluate(0.2, &[0.1]).unwrap();
        let want = 5.0 * 0.2 * Complex64::from_polar(1.0, TWO_PI * 0.3);
        assert!((got - want).norm() < 1e-14);
        let v = SparseTrigPoly::from_terms(1, [(Frequency::new(vec![2]), Complex64::new(0.0, 2.0 * TWO_PI))]).unwrap();
        let u = antiderivative_and_deperiodize(&v);
        assert!((u.oscillatory().get(&[2]).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(antiderivative_and_deperiodize(&SparseTrigPoly::zero(3)).oscillatory().is_empty());
    }

    #[test]
    fn boundary_trace_matches_evaluation() {
        let v = SparseTrigPoly::from_terms(
            2,
            [
                (Frequency::new(vec![1, 2]), Complex64::new(0.3, 0.1)),
                (Frequency::new(vec![2, -1]), Complex64::new(-0.2, 0.4)),
                (Frequency::new(vec![0, 1]), Complex64::new(1.5, 0.0)),
                (Frequency::new(vec![-3, 0]), Complex64::new(0.7, -0.7)),
            ],
        )
        .unwrap();
        let u = v.antiderivative_first_var();
        let p = right_boundary_trace(&u);
        for y in [0.0, 0.17, 0.42] {
            let a = u.evaluate(0.5, &[y]).unwrap();
            let b = p.evaluate(&[y]).unwrap();
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn unit_coefficient_closed_form() {
        let p = constant_problem(1.0, 10.0, 1);
        let maps = Maps::tent(&p).unwrap();
        let rep = solve(&p, &maps, &SolverConfig::uniform(&SfftConfig::new(512, 2000, 1e-12, 2))).unwrap();
        assert_eq!(rep.evaluate(0.0, &[0.3]).unwrap(), 0.0);
        // c₁ = 5, constant in ξ
        assert!(rep.c1.iter().all(|(k, _)| k[0] == 0));
        assert!((rep.c1.get(&[0]).unwrap().re - 5.0).abs() < 1e-4);
        let sol = rep.compile();
        let mut ev = sol.evaluator();
        let err = (0..=100)
            .map(|k| {
                let eta = k as f64 / 100.0;
                (ev.evaluate(eta, &[0.3]).unwrap() - 5.0 * eta * (1.0 - eta)).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn serialization_round_trip() {
        let p = constant_problem(2.0, 1.0, 2);
        let maps = Maps::tent(&p).unwrap();
        let rep = solve(&p, &maps, &SolverConfig::uniform(&SfftConfig::new(4, 20, 1e-12, 1))).unwrap();
        let mut buf = Vec::new();
        rep.write(&mut buf).unwrap();
        let back = SolutionRep::read(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.samples, rep.samples);
        let a = rep.evaluate(0.3, &[0.2, -0.4]).unwrap();
        let b = back.evaluate(0.3, &[0.2, -0.4]).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_coefficient_is_reported_with_stage() {
        let p = OdeProblem::new(Arc::new(|_| 1.0), Arc::new(|_, xi: &[f64]| xi[0]), (0.0, 1.0), vec![(-1.0, 1.0)]).unwrap();
        let maps = Maps::tent(&p).unwrap();
        let err = solve(&p, &maps, &SolverConfig::uniform(&SfftConfig::new(4, 10, 1e-12, 1))).unwrap_err();
        assert!(matches!(err, SolverError::Stage { stage: Stage::V1, .. }), "{err}");
    }
}
