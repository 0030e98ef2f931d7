//! Dimension-incremental sparse FFT.
//!
//! Given a black-box function on `𝕋^d` and the search box `[−N, N]^d`, the
//! algorithm detects a sparse frequency set and the corresponding Fourier
//! coefficients:
//!
//! 1. For every dimension, one-dimensional candidates are detected from
//!    `2N+1` equispaced samples along that axis with the other coordinates
//!    fixed at random anchors.
//! 2. For `t = 2, …, d` the detected set over the first `t−1` dimensions is
//!    combined with the candidates of dimension `t`; the projected function
//!    `x_{1..t} ↦ f(x_{1..t}, anchor)` is reconstructed on this candidate set
//!    from (multiple) rank-1 lattice samples for several random anchors, and
//!    frequencies whose coefficients pass the threshold are kept.
//! 3. The step `t = d` has no anchor; its coefficients are the output.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{
    self, build_multiple_lattices, cbc_reconstructing_lattice, extend_lattice, LatticeError, NodeCursor,
    ReconstructionPlan,
};
use crate::trig_poly::{by_magnitude_desc, Frequency, SparseTrigPoly, LANES};

/// Points handed to [`BlackBox::eval_batch`] at once.
const BATCH: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct BlackBoxError(pub String);

/// Function sampled by the sparse FFT.
pub trait BlackBox: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<Complex64, BlackBoxError>;

    /// Evaluates `out.len()` points stored contiguously in `points`.
    fn eval_batch(&self, points: &[f64], out: &mut [Complex64]) -> Result<(), BlackBoxError> {
        let d = self.dim();
        for (o, x) in out.iter_mut().zip(points.chunks_exact(d)) {
            *o = self.eval(x)?;
        }
        Ok(())
    }
}

/// Feeds `points` to `f` in groups of [`LANES`], transposed so that
/// `xs[j][lane]` is coordinate `j`. A short final group repeats its last
/// point in the unused lanes; `f` writes one value per used lane.
pub fn for_lanes<F>(points: &[f64], dim: usize, out: &mut [Complex64], mut f: F) -> Result<(), BlackBoxError>
where
    F: FnMut(&mut [[f64; LANES]], &mut [Complex64]) -> Result<(), BlackBoxError>,
{
    let mut xs = vec![[0.0; LANES]; dim];
    for (group, o) in points.chunks(dim * LANES).zip(out.chunks_mut(LANES)) {
        let used = o.len();
        for l in 0..LANES {
            let p = &group[l.min(used - 1) * dim..][..dim];
            for (x, &v) in xs.iter_mut().zip(p) {
                x[l] = v;
            }
        }
        f(&mut xs, o)?;
    }
    Ok(())
}

/// Adapter turning a closure into a [`BlackBox`].
pub struct FnBlackBox<F> {
    dim: usize,
    f: F,
}

impl<F> BlackBox for FnBlackBox<F>
where
    F: Fn(&[f64]) -> Result<Complex64, BlackBoxError> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<Complex64, BlackBoxError> {
        (self.f)(x)
    }
}

pub fn black_box<F>(dim: usize, f: F) -> FnBlackBox<F>
where
    F: Fn(&[f64]) -> Result<Complex64, BlackBoxError> + Sync,
{
    FnBlackBox { dim, f }
}

/// Sampling scheme of the dimension-incremental steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    /// One reconstructing rank-1 lattice per step, found by CBC search.
    #[default]
    #[serde(rename = "r1l")]
    SingleLattice,
    /// Randomly drawn multiple rank-1 lattices.
    #[serde(rename = "mr1l")]
    MultipleLattice,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::SingleLattice => "r1l",
            Backend::MultipleLattice => "mr1l",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "r1l" => Ok(Backend::SingleLattice),
            "mr1l" => Ok(Backend::MultipleLattice),
            other => Err(format!("unknown backend `{other}` (expected r1l or mr1l)")),
        }
    }
}

/// Whether the relative threshold is applied inside each detection
/// iteration or once to the per-frequency maxima over all iterations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    #[default]
    PerIteration,
    PostUnion,
}

fn default_candidate_cap() -> usize {
    10_000_000
}

fn default_cbc_cap() -> u64 {
    lattice::DEFAULT_CBC_CAP
}

fn default_oversampling() -> f64 {
    2.0
}

fn default_abs_floor() -> f64 {
    100.0 * f64::EPSILON
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfftConfig {
    /// Half-width of the search box `[−N, N]^d`.
    pub n: u32,
    /// Sparsity cap of the output and of every incremental step.
    pub s: usize,
    /// Per-iteration cap; `None` means `s`.
    #[serde(default)]
    pub s_local: Option<usize>,
    /// Relative threshold.
    pub theta: f64,
    /// Detection iterations (random anchors) per step.
    pub r: usize,
    /// Restarts allowed for the multiple-lattice construction.
    #[serde(default = "default_restarts")]
    pub b: usize,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threshold_mode: ThresholdMode,
    #[serde(default = "default_candidate_cap")]
    pub candidate_cap: usize,
    /// Hard limit on the total number of samples.
    #[serde(default)]
    pub sample_cap: Option<u64>,
    #[serde(default = "default_cbc_cap")]
    pub cbc_cap: u64,
    /// Oversampling `c` of the multiple-lattice sizes `M ∈ [c|I|, 2c|I|]`.
    #[serde(default = "default_oversampling")]
    pub oversampling: f64,
    /// Magnitudes below this are never detected.
    #[serde(default = "default_abs_floor")]
    pub abs_floor: f64,
}

fn default_restarts() -> usize {
    5
}

impl SfftConfig {
    pub fn new(n: u32, s: usize, theta: f64, r: usize) -> Self {
        SfftConfig {
            n,
            s,
            s_local: None,
            theta,
            r,
            b: default_restarts(),
            backend: Backend::default(),
            seed: 0,
            threshold_mode: ThresholdMode::default(),
            candidate_cap: default_candidate_cap(),
            sample_cap: None,
            cbc_cap: default_cbc_cap(),
            oversampling: default_oversampling(),
            abs_floor: default_abs_floor(),
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn s_local(&self) -> usize {
        self.s_local.unwrap_or(self.s)
    }

    pub fn validate(&self) -> Result<(), SfftError> {
        let bad = |m: &str| Err(SfftError::Config(m.to_string()));
        if self.n == 0 {
            return bad("N must be positive");
        }
        if self.s == 0 || self.s_local() == 0 {
            return bad("sparsity caps must be positive");
        }
        if !(self.theta > 0.0) {
            return bad("theta must be positive");
        }
        if self.r == 0 || self.b == 0 {
            return bad("r and b must be positive");
        }
        if !(self.oversampling >= 1.0) {
            return bad("oversampling must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SfftError {
    #[error("invalid sFFT configuration: {0}")]
    Config(String),
    #[error("black-box evaluation failed: {0}")]
    BlackBox(#[from] BlackBoxError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("sample budget exceeded: {needed} samples needed, cap is {cap}")]
    SampleBudget { needed: u64, cap: u64 },
    #[error("candidate set of size {size} at dimension {t} exceeds cap {cap}")]
    CandidateExplosion { t: usize, size: usize, cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    OneDim,
    Incremental,
    Final,
}

/// Diagnostics of one detection step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub phase: Phase,
    /// Dimension (1-based) the step is about.
    pub t: usize,
    pub candidates: usize,
    pub kept: usize,
    pub samples: u64,
}

#[derive(Clone, Debug)]
pub struct SfftOutput {
    pub poly: SparseTrigPoly,
    pub samples: u64,
    pub steps: Vec<StepRecord>,
}

/// Approximates `f` by a sparse trigonometric polynomial supported in
/// `[−N, N]^d`.
pub fn sfft(f: &dyn BlackBox, cfg: &SfftConfig) -> Result<SparseTrigPoly, SfftError> {
    sfft_detailed(f, cfg).map(|o| o.poly)
}

struct Budget {
    used: u64,
    cap: Option<u64>,
}

impl Budget {
    fn take(&mut self, n: u64) -> Result<(), SfftError> {
        let needed = self.used + n;
        if let Some(cap) = self.cap {
            if needed > cap {
                return Err(SfftError::SampleBudget { needed, cap });
            }
        }
        self.used = needed;
        Ok(())
    }
}

fn anchor_coordinate(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen::<u32>() as f64 / 4_294_967_296.0
}

/// Frequencies passing `max(θ·max, floor)`, at most `cap` of them, sorted by
/// descending magnitude.
fn threshold(entries: Vec<(Frequency, Complex64)>, cfg: &SfftConfig, cap: usize) -> Vec<(Frequency, Complex64)> {
    let max = entries.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let cut = (cfg.theta * max).max(cfg.abs_floor);
    let mut kept: Vec<(Frequency, Complex64)> = entries.into_iter().filter(|(_, c)| c.norm() >= cut).collect();
    kept.sort_by(|a, b| by_magnitude_desc((&a.0, a.1.norm()), (&b.0, b.1.norm())));
    kept.truncate(cap);
    kept
}

/// Merges per-iteration detections: keeps the largest magnitude seen for
/// each frequency, applies the post-union threshold if configured, and caps
/// at `cap` by descending magnitude.
fn merge_iterations(
    iterations: Vec<Vec<(Frequency, Complex64)>>,
    cfg: &SfftConfig,
    cap: usize,
) -> Vec<Frequency> {
    let mut best: std::collections::BTreeMap<Frequency, f64> = std::collections::BTreeMap::new();
    for it in iterations {
        for (k, c) in it {
            let m = c.norm();
            let e = best.entry(k).or_insert(0.0);
            *e = e.max(m);
        }
    }
    let mut v: Vec<(Frequency, f64)> = best.into_iter().collect();
    if cfg.threshold_mode == ThresholdMode::PostUnion {
        let max = v.iter().map(|e| e.1).fold(0.0, f64::max);
        let cut = (cfg.theta * max).max(cfg.abs_floor);
        v.retain(|e| e.1 >= cut);
    }
    v.sort_by(|a, b| by_magnitude_desc((&a.0, a.1), (&b.0, b.1)));
    v.truncate(cap);
    let mut out: Vec<Frequency> = v.into_iter().map(|e| e.0).collect();
    out.sort();
    out
}

/// Per-iteration filter: thresholded in [`ThresholdMode::PerIteration`],
/// everything above the absolute floor otherwise.
fn iteration_filter(entries: Vec<(Frequency, Complex64)>, cfg: &SfftConfig) -> Vec<(Frequency, Complex64)> {
    match cfg.threshold_mode {
        ThresholdMode::PerIteration => threshold(entries, cfg, cfg.s_local()),
        ThresholdMode::PostUnion => {
            let mut v: Vec<_> = entries.into_iter().filter(|(_, c)| c.norm() >= cfg.abs_floor).collect();
            v.sort_by(|a, b| by_magnitude_desc((&a.0, a.1.norm()), (&b.0, b.1.norm())));
            v.truncate(cfg.s_local());
            v
        }
    }
}

/// Samples `f` along axis `axis` at `2N+1` equispaced points with the other
/// coordinates taken from `base`, and returns the DFT coefficients for
/// `k = −N..N`.
fn axis_coefficients(
    f: &dyn BlackBox,
    n: u32,
    axis: usize,
    base: &[f64],
) -> Result<Vec<(i32, Complex64)>, SfftError> {
    let len = 2 * n as usize + 1;
    let d = base.len();
    let mut points = Vec::with_capacity(len * d);
    for j in 0..len {
        let start = points.len();
        points.extend_from_slice(base);
        points[start + axis] = j as f64 / len as f64;
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    sample_points(f, &points, &mut buf)?;
    lattice::dft_forward(&mut buf);
    let scale = 1.0 / len as f64;
    Ok((-(n as i32)..=n as i32)
        .map(|k| (k, buf[k.rem_euclid(len as i32) as usize] * scale))
        .collect())
}

fn sample_points(f: &dyn BlackBox, points: &[f64], out: &mut [Complex64]) -> Result<(), SfftError> {
    let d = f.dim();
    out.par_chunks_mut(BATCH)
        .zip(points.par_chunks(BATCH * d))
        .try_for_each(|(o, p)| f.eval_batch(p, o))?;
    Ok(())
}

/// Samples `f` on one lattice whose nodes fill the leading coordinates, the
/// remaining coordinates fixed to `anchor`.
fn sample_lattice(
    f: &dyn BlackBox,
    lat: &lattice::Rank1Lattice,
    anchor: &[f64],
) -> Result<Vec<Complex64>, SfftError> {
    let t = lat.dim();
    let d = t + anchor.len();
    let m = lat.size() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    out.par_chunks_mut(BATCH)
        .enumerate()
        .try_for_each_init(
            || vec![0.0; BATCH * d],
            |points, (chunk, o)| {
                let mut cur = NodeCursor::new(lat, (chunk * BATCH) as u64);
                for p in points.chunks_exact_mut(d).take(o.len()) {
                    cur.write(&mut p[..t]);
                    p[t..].copy_from_slice(anchor);
                    cur.advance();
                }
                f.eval_batch(&points[..o.len() * d], o)
            },
        )?;
    Ok(out)
}

/// Coefficients of the projection `x_{1..t} ↦ f(x_{1..t}, anchor)` on the
/// plan's target set, aligned with `plan.target()`.
pub fn projected_coefficients(
    f: &dyn BlackBox,
    anchor: &[f64],
    plan: &ReconstructionPlan,
) -> Result<Vec<Complex64>, SfftError> {
    let samples = plan
        .lattices()
        .iter()
        .map(|l| sample_lattice(f, l, anchor))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(plan.reconstruct_coefficients(samples)?)
}

/// Plan for `set = prefix × component`. The single-lattice backend searches
/// a CBC lattice for the prefix set and extends it to the new component.
fn build_plan(
    set: &[Frequency],
    prefix: &[Frequency],
    component: &[i32],
    cfg: &SfftConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ReconstructionPlan, SfftError> {
    Ok(match cfg.backend {
        Backend::SingleLattice => {
            let base = cbc_reconstructing_lattice(prefix, cfg.cbc_cap)?;
            let lat = extend_lattice(&base, component);
            if lat.size() > cfg.cbc_cap {
                return Err(LatticeError::CbcFailed {
                    size: set.len(),
                    cap: cfg.cbc_cap,
                }
                .into());
            }
            ReconstructionPlan::single(set, lat)?
        }
        Backend::MultipleLattice => {
            let ml = build_multiple_lattices(set, cfg.oversampling, cfg.b, rng)?;
            ReconstructionPlan::multiple(set, ml)?
        }
    })
}

fn record(steps: &mut Vec<StepRecord>, rec: StepRecord) {
    log::debug!(
        "sfft step phase={:?} t={} candidates={} kept={} samples={}",
        rec.phase,
        rec.t,
        rec.candidates,
        rec.kept,
        rec.samples
    );
    steps.push(rec);
}

/// [`sfft`] with sample count and per-step diagnostics.
pub fn sfft_detailed(f: &dyn BlackBox, cfg: &SfftConfig) -> Result<SfftOutput, SfftError> {
    cfg.validate()?;
    let d = f.dim();
    if d == 0 {
        return Err(SfftError::Config("black box has dimension 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut budget = Budget {
        used: 0,
        cap: cfg.sample_cap,
    };
    let mut steps = Vec::new();
    let n = cfg.n;
    let line_len = 2 * n as u64 + 1;

    if d == 1 {
        budget.take(line_len)?;
        let coeffs = axis_coefficients(f, n, 0, &[0.0])?;
        let entries = coeffs.into_iter().map(|(k, c)| (Frequency::new(vec![k]), c)).collect();
        let kept = threshold(entries, cfg, cfg.s);
        record(
            &mut steps,
            StepRecord {
                phase: Phase::Final,
                t: 1,
                candidates: line_len as usize,
                kept: kept.len(),
                samples: line_len,
            },
        );
        let (fs, cs): (Vec<_>, Vec<_>) = kept.into_iter().unzip();
        let poly = SparseTrigPoly::from_unique(1, fs, cs).expect("dimension 1");
        return Ok(SfftOutput {
            poly,
            samples: budget.used,
            steps,
        });
    }

    // one-dimensional candidates per axis
    let mut axis_candidates: Vec<Vec<i32>> = Vec::with_capacity(d);
    for axis in 0..d {
        let mut iterations = Vec::with_capacity(cfg.r);
        for _ in 0..cfg.r {
            let base: Vec<f64> = (0..d).map(|_| anchor_coordinate(&mut rng)).collect();
            budget.take(line_len)?;
            let coeffs = axis_coefficients(f, n, axis, &base)?;
            let entries = coeffs.into_iter().map(|(k, c)| (Frequency::new(vec![k]), c)).collect();
            iterations.push(iteration_filter(entries, cfg));
        }
        let cand: Vec<i32> = merge_iterations(iterations, cfg, cfg.r * cfg.s_local())
            .into_iter()
            .map(|k| k[0])
            .collect();
        record(
            &mut steps,
            StepRecord {
                phase: Phase::OneDim,
                t: axis + 1,
                candidates: line_len as usize,
                kept: cand.len(),
                samples: line_len * cfg.r as u64,
            },
        );
        axis_candidates.push(cand);
    }

    let mut detected: Vec<Frequency> = axis_candidates[0].iter().map(|&k| Frequency::new(vec![k])).collect();
    for t in 1..d {
        if detected.is_empty() || axis_candidates[t].is_empty() {
            return Ok(SfftOutput {
                poly: SparseTrigPoly::zero(d),
                samples: budget.used,
                steps,
            });
        }
        let size = detected.len() * axis_candidates[t].len();
        if size > cfg.candidate_cap {
            return Err(SfftError::CandidateExplosion {
                t: t + 1,
                size,
                cap: cfg.candidate_cap,
            });
        }
        let mut cands = Vec::with_capacity(size);
        for k in &detected {
            for &kt in &axis_candidates[t] {
                cands.push(k.extended(kt));
            }
        }
        let plan = build_plan(&cands, &detected, &axis_candidates[t], cfg, &mut rng)?;
        let per_pass = plan.sample_count();
        let last = t + 1 == d;
        if last {
            budget.take(per_pass)?;
            let coeffs = projected_coefficients(f, &[], &plan)?;
            let entries = cands.into_iter().zip(coeffs).collect();
            let kept = threshold(entries, cfg, cfg.s);
            record(
                &mut steps,
                StepRecord {
                    phase: Phase::Final,
                    t: d,
                    candidates: size,
                    kept: kept.len(),
                    samples: per_pass,
                },
            );
            let (fs, cs): (Vec<_>, Vec<_>) = kept.into_iter().unzip();
            let poly = SparseTrigPoly::from_unique(d, fs, cs).expect("consistent dimensions");
            return Ok(SfftOutput {
                poly,
                samples: budget.used,
                steps,
            });
        }
        let mut iterations = Vec::with_capacity(cfg.r);
        for _ in 0..cfg.r {
            let anchor: Vec<f64> = (t + 1..d).map(|_| anchor_coordinate(&mut rng)).collect();
            budget.take(per_pass)?;
            let coeffs = projected_coefficients(f, &anchor, &plan)?;
            let entries = cands.iter().cloned().zip(coeffs).collect();
            iterations.push(iteration_filter(entries, cfg));
        }
        detected = merge_iterations(iterations, cfg, cfg.s);
        record(
            &mut steps,
            StepRecord {
                phase: Phase::Incremental,
                t: t + 1,
                candidates: size,
                kept: detected.len(),
                samples: per_pass * cfg.r as u64,
            },
        );
    }
    unreachable!("the final step returns")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_box(p: SparseTrigPoly) -> impl BlackBox {
        let d = p.dim();
        black_box(d, move |x: &[f64]| Ok(p.evaluate(x).expect("dimension")))
    }

    fn term(k: &[i32], re: f64, im: f64) -> (Frequency, Complex64) {
        (Frequency::new(k.to_vec()), Complex64::new(re, im))
    }

    #[test]
    fn zero_function_gives_empty_set() {
        let f = black_box(3, |_: &[f64]| Ok(Complex64::new(0.0, 0.0)));
        let p = sfft(&f, &SfftConfig::new(4, 10, 1e-12, 2)).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.dim(), 3);
    }

    #[test]
    fn constant_function() {
        for backend in [Backend::SingleLattice, Backend::MultipleLattice] {
            let f = black_box(4, |_: &[f64]| Ok(Complex64::new(5.0, 0.0)));
            let cfg = SfftConfig::new(8, 10, 1e-12, 3).with_backend(backend);
            let p = sfft(&f, &cfg).unwrap();
            assert_eq!(p.len(), 1);
            assert!((p.get(&[0, 0, 0, 0]).unwrap() - Complex64::new(5.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn one_dimensional_dft() {
        let p = SparseTrigPoly::from_terms(1, [term(&[3], 1.0, 2.0), term(&[-7], 0.5, 0.0)]).unwrap();
        let out = sfft_detailed(&poly_box(p.clone()), &SfftConfig::new(8, 10, 1e-12, 1)).unwrap();
        assert_eq!(out.samples, 17);
        assert_eq!(out.poly.frequencies(), p.frequencies());
    }

    #[test]
    fn projection_single_frequency() {
        let p = SparseTrigPoly::from_terms(3, [term(&[2, 1, -3], 1.0, 0.0)]).unwrap();
        let f = poly_box(p);
        let set = vec![Frequency::new(vec![2]), Frequency::new(vec![0])];
        let lat = cbc_reconstructing_lattice(&set, 1 << 20).unwrap();
        let plan = ReconstructionPlan::single(&set, lat).unwrap();
        let y0 = [0.125, 0.3];
        let c = projected_coefficients(&f, &y0, &plan).unwrap();
        let want = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (0.125 - 0.9));
        assert!((c[0] - want).norm() < 1e-12);
        assert!(c[1].norm() < 1e-12);
    }

    #[test]
    fn cancelling_pair_is_found_with_several_anchors() {
        // (1, 0) and (1, 1) cancel in the projection onto x₁ whenever e^{2πi y} = −1
        let p = SparseTrigPoly::from_terms(2, [term(&[1, 0], 1.0, 0.0), term(&[1, 1], 1.0, 0.0)]).unwrap();
        let cfg = SfftConfig::new(4, 10, 1e-12, 3).with_seed(9);
        let got = sfft(&poly_box(p.clone()), &cfg).unwrap();
        assert_eq!(got.frequencies(), p.frequencies());
    }

    #[test]
    fn sparsity_cap_and_sample_cap() {
        let p = SparseTrigPoly::from_terms(
            2,
            [term(&[1, 2], 4.0, 0.0), term(&[-3, 1], 3.0, 0.0), term(&[0, -2], 2.0, 0.0), term(&[2, 2], 1.0, 0.0)],
        )
        .unwrap();
        let got = sfft(&poly_box(p.clone()), &SfftConfig::new(4, 2, 1e-12, 3)).unwrap();
        assert!(got.len() <= 2);
        let mut capped = SfftConfig::new(4, 10, 1e-12, 3);
        capped.sample_cap = Some(20);
        assert!(matches!(
            sfft(&poly_box(p), &capped),
            Err(SfftError::SampleBudget { .. })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let p = SparseTrigPoly::from_terms(3, [term(&[1, -2, 3], 1.0, 0.5), term(&[0, 4, -1], 0.3, 0.0)]).unwrap();
        let cfg = SfftConfig::new(5, 20, 1e-12, 2).with_backend(Backend::MultipleLattice).with_seed(3);
        let a = sfft_detailed(&poly_box(p.clone()), &cfg).unwrap();
        let b = sfft_detailed(&poly_box(p), &cfg).unwrap();
        assert_eq!(a.poly, b.poly);
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.samples, a.steps.iter().map(|s| s.samples).sum::<u64>());
    }

    #[test]
    fn backend_names_round_trip() {
        for b in [Backend::SingleLattice, Backend::MultipleLattice] {
            assert_eq!(b.to_string().parse::<Backend>().unwrap(), b);
        }
        assert!("fft".parse::<Backend>().is_err());
    }
}
