//! The trigonometric diffusion model and the error, moment and expansion
//! studies built on it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::{moment, Density, MomentRep};
use crate::ode_solver::{solve, staged, CompiledSolution, Maps, OdeProblem, SolutionRep, SolverConfig, SolverError, Stage, StageSamples};
use crate::periodization::{reflect, PeriodizationKind};
use crate::reference_solver::{
    mc_moment_from, reference_draws, solve_draws, GridFunction, ReferenceError, DEFAULT_TOL, GRID_INTERVALS,
};
use crate::sfft::{for_lanes, sfft_detailed, Backend, BlackBox, BlackBoxError, SfftConfig};
use crate::Complex64;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid model: {0}")]
    Model(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// `ζ(γ)` for `γ > 1`: exact for `γ = 2`, otherwise a direct sum with an
/// Euler–Maclaurin tail.
pub fn zeta(gamma: f64) -> f64 {
    assert!(gamma > 1.0, "ζ(γ) diverges for γ ≤ 1");
    if gamma == 2.0 {
        return std::f64::consts::PI.powi(2) / 6.0;
    }
    const N: usize = 1000;
    let n = N as f64;
    let head: f64 = (1..N).map(|j| (j as f64).powf(-gamma)).sum();
    // Σ_{j≥N} j^{−γ} ≈ N^{1−γ}/(γ−1) + N^{−γ}/2 + γ N^{−γ−1}/12 − γ(γ+1)(γ+2) N^{−γ−3}/720
    let tail = n.powf(1.0 - gamma) / (gamma - 1.0) + 0.5 * n.powf(-gamma) + gamma * n.powf(-gamma - 1.0) / 12.0
        - gamma * (gamma + 1.0) * (gamma + 2.0) * n.powf(-gamma - 3.0) / 720.0;
    head + tail
}

/// `a(η, ξ) = a₀ + Σ_{j=1}^{d_ξ/2} (ξ_{2j−1} cos(jπη) + ξ_{2j} sin(jπη)) / j^γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionModel {
    pub a0: f64,
    pub gamma: f64,
    pub d_xi: usize,
}

impl Default for DiffusionModel {
    fn default() -> Self {
        DiffusionModel {
            a0: 4.3,
            gamma: 2.0,
            d_xi: 20,
        }
    }
}

impl DiffusionModel {
    pub fn new(a0: f64, gamma: f64, d_xi: usize) -> Result<Self, ExperimentError> {
        let m = DiffusionModel { a0, gamma, d_xi };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.gamma > 1.0) {
            return Err(ExperimentError::Model(format!("γ = {} must exceed 1", self.gamma)));
        }
        if self.d_xi == 0 || self.d_xi % 2 != 0 {
            return Err(ExperimentError::Model(format!("d_ξ = {} must be even and positive", self.d_xi)));
        }
        let z = zeta(self.gamma);
        if !(self.a0 > 2.0 * z) {
            return Err(ExperimentError::Model(format!(
                "a₀ = {} must exceed 2ζ(γ) = {}",
                self.a0,
                2.0 * z
            )));
        }
        Ok(())
    }

    /// `[a₀ − 2ζ(γ), a₀ + 2ζ(γ)]`.
    pub fn bounds(&self) -> (f64, f64) {
        let z = 2.0 * zeta(self.gamma);
        (self.a0 - z, self.a0 + z)
    }

    #[inline]
    pub fn value(&self, eta: f64, xi: &[f64]) -> f64 {
        let mut a = self.a0;
        for j in 1..=self.d_xi / 2 {
            let jf = j as f64;
            let (s, c) = (jf * std::f64::consts::PI * eta).sin_cos();
            a += (xi[2 * j - 2] * c + xi[2 * j - 1] * s) / jf.powf(self.gamma);
        }
        a
    }

    pub fn diffusion_coefficient(&self, eta: f64, xi: &[f64]) -> Result<f64, ExperimentError> {
        if xi.len() != self.d_xi {
            return Err(ExperimentError::Model(format!(
                "expected {} random variables, got {}",
                self.d_xi,
                xi.len()
            )));
        }
        Ok(self.value(eta, xi))
    }

    /// `−(a u′)′ = 10` on `[0, 1]` with `ξ ∈ [−1, 1]^{d_ξ}`.
    pub fn problem(&self) -> OdeProblem {
        let m = *self;
        let weights: Vec<f64> = (1..=m.d_xi / 2).map(|j| (j as f64).powf(-m.gamma)).collect();
        let a = move |eta: f64, xi: &[f64]| {
            let mut a = m.a0;
            for (j, w) in weights.iter().enumerate() {
                let (s, c) = ((j + 1) as f64 * std::f64::consts::PI * eta).sin_cos();
                a += (xi[2 * j] * c + xi[2 * j + 1] * s) * w;
            }
            a
        };
        OdeProblem::new(Arc::new(|_| 10.0), Arc::new(a), (0.0, 1.0), vec![(-1.0, 1.0); m.d_xi])
            .expect("valid bounds")
            .with_antiderivative(Arc::new(|eta| 10.0 * eta))
    }
}

/// sFFT parameter sets `(N, s, θ, r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Setting {
    I,
    II,
    III,
    Custom { n: u32, s: usize, theta: f64, r: usize },
}

impl Setting {
    pub fn params(&self) -> (u32, usize, f64, usize) {
        match *self {
            Setting::I => (32, 1000, 1e-12, 5),
            Setting::II => (64, 5000, 1e-12, 5),
            Setting::III => (128, 8000, 1e-12, 5),
            Setting::Custom { n, s, theta, r } => (n, s, theta, r),
        }
    }
}

impl std::str::FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "1" => Ok(Setting::I),
            "II" | "2" => Ok(Setting::II),
            "III" | "3" => Ok(Setting::III),
            other => Err(format!("unknown setting `{other}` (expected I, II or III)")),
        }
    }
}

fn default_setting() -> Setting {
    Setting::I
}

fn default_n_test() -> usize {
    2000
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodizationChoice {
    pub spatial: PeriodizationKind,
    pub random: PeriodizationKind,
}

impl Default for PeriodizationChoice {
    fn default() -> Self {
        PeriodizationChoice {
            spatial: PeriodizationKind::Tent,
            random: PeriodizationKind::Tent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: DiffusionModel,
    #[serde(default = "default_setting")]
    pub setting: Setting,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub periodization: PeriodizationChoice,
    /// Overrides `N` of the right-hand side DFT.
    #[serde(default)]
    pub rhs_n: Option<u32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: DiffusionModel::default(),
            setting: Setting::I,
            backend: Backend::default(),
            n_test: default_n_test(),
            seed: 0,
            out: default_out(),
            periodization: PeriodizationChoice::default(),
            rhs_n: None,
        }
    }
}

impl ExperimentConfig {
    pub fn sfft_config(&self) -> SfftConfig {
        let (n, s, theta, r) = self.setting.params();
        SfftConfig::new(n, s, theta, r).with_backend(self.backend).with_seed(self.seed)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut c = SolverConfig::uniform(&self.sfft_config());
        if let Some(n) = self.rhs_n {
            c.rhs_n = n;
        }
        c
    }

    fn derived(&self, salt: u64) -> SfftConfig {
        let mut c = self.sfft_config();
        c.seed = self.seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(salt);
        c
    }

    /// sFFT configuration of the moment of order `n`.
    pub fn moment_config(&self, n: u32) -> SfftConfig {
        self.derived(10 + n as u64)
    }

    pub fn expansion_config(&self) -> SfftConfig {
        self.derived(20)
    }

    /// Seed of the reference draws, independent of the sFFT seeds.
    pub fn reference_seed(&self) -> u64 {
        self.seed ^ 0x5EED_0F_DA7A
    }
}

/// Runs the pipeline for the configured model.
pub fn solve_model(cfg: &ExperimentConfig) -> Result<(OdeProblem, SolutionRep), ExperimentError> {
    cfg.model.validate()?;
    let problem = cfg.model.problem();
    let maps = Maps::for_problem(&problem, cfg.periodization.spatial, cfg.periodization.random)?;
    let t0 = Instant::now();
    let rep = solve(&problem, &maps, &cfg.solver_config())?;
    log::info!(
        "solved d_xi={} setting={:?} backend={} in {:.1}s, samples {:?}",
        cfg.model.d_xi,
        cfg.setting,
        cfg.backend,
        t0.elapsed().as_secs_f64(),
        rep.samples
    );
    Ok((problem, rep))
}

/// `ŭ(η_k, ξ)` on the grid for every draw.
pub fn evaluate_on_grid(rep: &SolutionRep, draws: &[Vec<f64>]) -> Result<Vec<GridFunction>, ExperimentError> {
    let bounds = (rep.maps.eta.alpha(), rep.maps.eta.beta());
    let sol = rep.compile();
    draws
        .par_iter()
        .map_init(
            || sol.evaluator(),
            |ev, xi| {
                let mut g = GridFunction::zeros(bounds);
                for k in 0..=GRID_INTERVALS {
                    g.values[k] = ev.evaluate(g.eta(k), xi)?;
                }
                Ok(g)
            },
        )
        .collect()
}

#[derive(Clone, Debug)]
pub struct ErrorStudy {
    /// `Err(η_k) = (1/n_test) Σ_i |ǔ(η_k, ξ^i) − ŭ(η_k, ξ^i)|`.
    pub err: GridFunction,
    pub samples: StageSamples,
}

impl ErrorStudy {
    pub fn mean(&self) -> f64 {
        self.err.values.iter().sum::<f64>() / self.err.values.len() as f64
    }
}

/// Pointwise mean absolute error of `rep` against quadrature references for
/// `n_test` uniform draws.
pub fn error_study_for(rep: &SolutionRep, problem: &OdeProblem, n_test: usize, seed: u64) -> Result<ErrorStudy, ExperimentError> {
    let draws = reference_draws(problem.xi_bounds(), n_test, seed);
    let refs = solve_draws(problem, &draws, DEFAULT_TOL)?;
    let approx = evaluate_on_grid(rep, &draws)?;
    let mut err = GridFunction::zeros(problem.eta_bounds());
    for (r, a) in refs.iter().zip(&approx) {
        for (e, (x, y)) in err.values.iter_mut().zip(r.values.iter().zip(&a.values)) {
            *e += (x - y).abs();
        }
    }
    let inv = 1.0 / n_test.max(1) as f64;
    err.values.iter_mut().for_each(|v| *v *= inv);
    Ok(ErrorStudy {
        err,
        samples: rep.samples,
    })
}

pub fn run_error_study(cfg: &ExperimentConfig) -> Result<ErrorStudy, ExperimentError> {
    let (problem, rep) = solve_model(cfg)?;
    error_study_for(&rep, &problem, cfg.n_test, cfg.reference_seed())
}

#[derive(Clone, Debug)]
pub struct MomentStudy {
    pub order: u32,
    pub moment: GridFunction,
    pub reference: GridFunction,
    /// `|reference − moment|` pointwise.
    pub res: GridFunction,
    pub samples: u64,
}

/// Moment of order `n` against the Monte-Carlo mean of precomputed reference
/// solutions.
pub fn moment_study_for(
    rep: &SolutionRep,
    refs: &[GridFunction],
    n: u32,
    cfg: &SfftConfig,
) -> Result<MomentStudy, ExperimentError> {
    let m: MomentRep = moment(rep, n, &Density::Uniform, cfg)?;
    let reference = mc_moment_from(refs, n)?;
    let mut curve = GridFunction::zeros(reference.bounds);
    let mut res = GridFunction::zeros(reference.bounds);
    for k in 0..=GRID_INTERVALS {
        curve.values[k] = m.evaluate(curve.eta(k))?;
        res.values[k] = (reference.values[k] - curve.values[k]).abs();
    }
    Ok(MomentStudy {
        order: n,
        moment: curve,
        reference,
        res,
        samples: m.samples,
    })
}

pub fn run_moment_study(cfg: &ExperimentConfig, n: u32) -> Result<MomentStudy, ExperimentError> {
    let (problem, rep) = solve_model(cfg)?;
    let draws = reference_draws(problem.xi_bounds(), cfg.n_test, cfg.reference_seed());
    let refs = solve_draws(&problem, &draws, DEFAULT_TOL)?;
    moment_study_for(&rep, &refs, n, &cfg.moment_config(n))
}

struct SolutionBox {
    sol: CompiledSolution,
}

impl BlackBox for SolutionBox {
    fn dim(&self) -> usize {
        1 + self.sol.d_xi()
    }

    fn eval(&self, x: &[f64]) -> Result<Complex64, BlackBoxError> {
        let mut out = [Complex64::new(0.0, 0.0)];
        self.eval_batch(x, &mut out)?;
        Ok(out[0])
    }

    fn eval_batch(&self, points: &[f64], out: &mut [Complex64]) -> Result<(), BlackBoxError> {
        let mut ev = self.sol.evaluator();
        for_lanes(points, self.dim(), out, |xs, o| {
            xs[0].iter_mut().for_each(|v| *v = reflect(*v));
            let u = ev.at_periodized_lanes(xs);
            o.copy_from_slice(&u[..o.len()]);
            Ok(())
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionStudy {
    /// Index 0 is the spatial variable, index `j` the random variable `ξ_j`.
    pub expansions: Vec<u32>,
    pub coeff_floor: f64,
    pub terms: usize,
    pub samples: u64,
}

/// Directional expansion of a sparse FFT approximation of `ŭ` itself.
pub fn expansion_study_for(rep: &SolutionRep, coeff_floor: f64, cfg: &SfftConfig) -> Result<ExpansionStudy, ExperimentError> {
    let out = staged(Stage::Expansion, sfft_detailed(&SolutionBox { sol: rep.compile() }, cfg))?;
    Ok(ExpansionStudy {
        expansions: out.poly.directional_expansion(coeff_floor),
        coeff_floor,
        terms: out.poly.len(),
        samples: out.samples,
    })
}

pub fn run_expansion_study(cfg: &ExperimentConfig, coeff_floor: f64) -> Result<ExpansionStudy, ExperimentError> {
    let (_, rep) = solve_model(cfg)?;
    expansion_study_for(&rep, coeff_floor, &cfg.expansion_config())
}

fn create(dir: &Path, name: &str) -> Result<fs::File, ExperimentError> {
    fs::create_dir_all(dir)?;
    Ok(fs::File::create(dir.join(name))?)
}

pub fn write_err_csv(dir: &Path, study: &ErrorStudy) -> Result<(), ExperimentError> {
    let mut f = create(dir, "err.csv")?;
    writeln!(f, "eta,err")?;
    for (k, v) in study.err.values.iter().enumerate() {
        writeln!(f, "{},{:e}", study.err.eta(k), v)?;
    }
    Ok(())
}

/// `res1.csv` or `res2.csv`.
pub fn write_res_csv(dir: &Path, study: &MomentStudy) -> Result<(), ExperimentError> {
    let n = study.order;
    let mut f = create(dir, &format!("res{n}.csv"))?;
    writeln!(f, "eta,moment_{n},reference_{n},res_{n}")?;
    for k in 0..=GRID_INTERVALS {
        writeln!(
            f,
            "{},{:e},{:e},{:e}",
            study.moment.eta(k),
            study.moment.values[k],
            study.reference.values[k],
            study.res.values[k]
        )?;
    }
    Ok(())
}

pub fn write_moment_csv(dir: &Path, m: &MomentRep) -> Result<(), ExperimentError> {
    let n = m.order;
    let mut f = create(dir, &format!("moment{n}.csv"))?;
    writeln!(f, "eta,moment_{n}")?;
    let (a, b) = (m.map.alpha(), m.map.beta());
    for k in 0..=GRID_INTERVALS {
        let t = crate::reference_solver::grid_point((a, b), k);
        writeln!(f, "{},{:e}", t, m.evaluate(t)?)?;
    }
    Ok(())
}

pub fn write_expansion_csv(dir: &Path, study: &ExpansionStudy) -> Result<(), ExperimentError> {
    let mut f = create(dir, "expansion.csv")?;
    writeln!(f, "dimension,expansion")?;
    for (j, e) in study.expansions.iter().enumerate() {
        writeln!(f, "{j},{e}")?;
    }
    Ok(())
}

pub fn write_solution(dir: &Path, rep: &SolutionRep) -> Result<(), ExperimentError> {
    let f = create(dir, "solution.coeffs")?;
    rep.write(std::io::BufWriter::new(f))?;
    Ok(())
}

/// `samples.json`: per-stage sample counts plus any extra stages.
pub fn write_samples_json(dir: &Path, samples: &StageSamples, extra: &[(&str, u64)]) -> Result<(), ExperimentError> {
    let mut map = serde_json::Map::new();
    map.insert("rhs".into(), samples.rhs.into());
    map.insert("v1".into(), samples.v1.into());
    map.insert("v2".into(), samples.v2.into());
    map.insert("c1".into(), samples.c1.into());
    for (k, v) in extra {
        map.insert((*k).into(), (*v).into());
    }
    map.insert("solve_total".into(), samples.total().into());
    let f = create(dir, "samples.json")?;
    serde_json::to_writer_pretty(f, &serde_json::Value::Object(map))?;
    Ok(())
}
