//! Sparse multivariate trigonometric polynomials
//! `p(x) = Σ_{k∈I} p̂_k e^{2πi k·x}` on the torus `[0,1)^d`.
//!
//! Terms are kept sorted lexicographically by frequency, so every summation
//! runs in the same order and evaluation is reproducible bit for bit.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Deref;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Error)]
pub enum TrigPolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed coefficient dump at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An integer frequency vector. Ordered lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Frequency(Vec<i32>);

impl Frequency {
    pub fn new(components: Vec<i32>) -> Self {
        Frequency(components)
    }

    pub fn zero(dim: usize) -> Self {
        Frequency(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<i32> {
        self.0
    }

    /// `k·x`
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum()
    }

    /// Appends one component, producing a frequency of dimension `d + 1`.
    pub fn extended(&self, last: i32) -> Frequency {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(last);
        Frequency(v)
    }
}

impl Deref for Frequency {
    type Target = [i32];
    fn deref(&self) -> &[i32] {
        &self.0
    }
}

impl From<Vec<i32>> for Frequency {
    fn from(v: Vec<i32>) -> Self {
        Frequency(v)
    }
}

impl From<&[i32]> for Frequency {
    fn from(v: &[i32]) -> Self {
        Frequency(v.to_vec())
    }
}

impl fmt::Debug for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Compressed nonzero pattern of the frequencies, used by the evaluators.
#[derive(Clone, Debug, Default)]
struct SparsePattern {
    /// `starts[i]..starts[i+1]` indexes the nonzero components of term `i`.
    starts: Vec<u32>,
    dims: Vec<u32>,
    ks: Vec<i32>,
    /// Per dimension, the largest `|k_j|` over all terms.
    radii: Vec<i32>,
}

impl SparsePattern {
    fn build(dim: usize, freqs: &[Frequency]) -> Self {
        let mut starts = Vec::with_capacity(freqs.len() + 1);
        let mut dims = Vec::new();
        let mut ks = Vec::new();
        let mut radii = vec![0i32; dim];
        starts.push(0u32);
        for k in freqs {
            for (j, &kj) in k.iter().enumerate() {
                if kj != 0 {
                    dims.push(j as u32);
                    ks.push(kj);
                    radii[j] = radii[j].max(kj.abs());
                }
            }
            starts.push(dims.len() as u32);
        }
        SparsePattern {
            starts,
            dims,
            ks,
            radii,
        }
    }
}

/// Table of `e^{2πi k x_j}` for `|k| ≤ radius_j`, one block per dimension.
#[derive(Clone, Debug, Default)]
pub struct PowerTable {
    offsets: Vec<usize>,
    radii: Vec<i32>,
    values: Vec<Complex64>,
    /// Centre of the optional block `e^{2πi k x_0} − 1`.
    shifted: Option<usize>,
}

impl PowerTable {
    pub fn new(radii: &[i32]) -> Self {
        let mut offsets = Vec::with_capacity(radii.len());
        let mut total = 0usize;
        for &r in radii {
            offsets.push(total + r as usize);
            total += 2 * r as usize + 1;
        }
        PowerTable {
            offsets,
            radii: radii.to_vec(),
            values: vec![Complex64::new(1.0, 0.0); total],
            shifted: None,
        }
    }

    /// Like [`new`](Self::new), plus a block holding `e^{2πi k x_0} − 1`,
    /// which is exactly zero at `x_0 = 0`.
    pub fn with_shifted_first(radii: &[i32]) -> Self {
        let mut t = Self::new(radii);
        let r0 = radii.first().copied().unwrap_or(0) as usize;
        t.shifted = Some(t.values.len() + r0);
        t.values.resize(t.values.len() + 2 * r0 + 1, Complex64::new(0.0, 0.0));
        t
    }

    pub fn radii(&self) -> &[i32] {
        &self.radii
    }

    /// Refills the table for the point `x`. Powers are built by repeated
    /// multiplication, re-anchored with an exact `sin_cos` every 32 steps.
    pub fn fill(&mut self, x: &[f64]) {
        for (j, &xj) in x.iter().enumerate().take(self.radii.len()) {
            let r = self.radii[j] as usize;
            if r == 0 {
                continue;
            }
            let base = self.offsets[j];
            let (s, c) = (TWO_PI * xj).sin_cos();
            let w = Complex64::new(c, s);
            let mut p = Complex64::new(1.0, 0.0);
            for k in 1..=r {
                p = if k % 32 == 0 {
                    let (s, c) = (TWO_PI * (k as f64) * xj).sin_cos();
                    Complex64::new(c, s)
                } else {
                    p * w
                };
                self.values[base + k] = p;
                self.values[base - k] = p.conj();
            }
        }
        if let Some(c) = self.shifted {
            let one = Complex64::new(1.0, 0.0);
            let base = self.offsets[0];
            let r = self.radii[0] as usize;
            for k in 0..=2 * r {
                self.values[c - r + k] = self.values[base - r + k] - one;
            }
        }
    }

    #[inline]
    pub fn get(&self, dim: usize, k: i32) -> Complex64 {
        self.values[(self.offsets[dim] as isize + k as isize) as usize]
    }

    /// Flat position of `e^{2πi k x_dim}` in the table.
    fn index(&self, dim: usize, k: i32) -> u32 {
        assert!(
            dim < self.radii.len() && k.abs() <= self.radii[dim],
            "power table does not cover frequency {k} in dimension {dim}"
        );
        (self.offsets[dim] as isize + k as isize) as u32
    }

    fn shifted_index(&self, k: i32) -> u32 {
        let c = self.shifted.expect("power table has no shifted block");
        assert!(k.abs() <= self.radii[0], "power table does not cover frequency {k} in dimension 0");
        (c as isize + k as isize) as u32
    }
}

/// Number of points evaluated together by the batched evaluators.
pub const LANES: usize = 8;

/// [`PowerTable`] for [`LANES`] points at once, stored position-major so
/// the per-lane arithmetic vectorizes. Lane values equal those of
/// [`PowerTable::fill`] bit for bit.
#[derive(Clone, Debug)]
pub struct LanePowerTable {
    offsets: Vec<usize>,
    radii: Vec<i32>,
    shifted: Option<usize>,
    re: Vec<[f64; LANES]>,
    im: Vec<[f64; LANES]>,
}

impl LanePowerTable {
    /// Same layout as `layout`.
    pub fn new(layout: &PowerTable) -> Self {
        let n = layout.values.len();
        LanePowerTable {
            offsets: layout.offsets.clone(),
            radii: layout.radii.clone(),
            shifted: layout.shifted,
            re: vec![[1.0; LANES]; n],
            im: vec![[0.0; LANES]; n],
        }
    }

    /// `xs[j][lane]` is coordinate `j` of the point in `lane`.
    pub fn fill(&mut self, xs: &[[f64; LANES]]) {
        for (j, xj) in xs.iter().enumerate().take(self.radii.len()) {
            let r = self.radii[j] as usize;
            if r == 0 {
                continue;
            }
            let base = self.offsets[j];
            let mut wr = [0.0; LANES];
            let mut wi = [0.0; LANES];
            for l in 0..LANES {
                let (s, c) = (TWO_PI * xj[l]).sin_cos();
                wr[l] = c;
                wi[l] = s;
            }
            let mut pr = [1.0; LANES];
            let mut pi = [0.0; LANES];
            for k in 1..=r {
                if k % 32 == 0 {
                    for l in 0..LANES {
                        let (s, c) = (TWO_PI * (k as f64) * xj[l]).sin_cos();
                        pr[l] = c;
                        pi[l] = s;
                    }
                } else {
                    for l in 0..LANES {
                        let (a, b) = (pr[l], pi[l]);
                        pr[l] = a * wr[l] - b * wi[l];
                        pi[l] = a * wi[l] + b * wr[l];
                    }
                }
                self.re[base + k] = pr;
                self.im[base + k] = pi;
                self.re[base - k] = pr;
                for l in 0..LANES {
                    self.im[base - k][l] = -pi[l];
                }
            }
        }
        if let Some(c) = self.shifted {
            let base = self.offsets[0];
            let r = self.radii[0] as usize;
            for k in 0..=2 * r {
                let src = self.re[base - r + k];
                self.im[c - r + k] = self.im[base - r + k];
                for l in 0..LANES {
                    self.re[c - r + k][l] = src[l] - 1.0;
                }
            }
        }
    }
}

/// Real and imaginary parts per lane.
pub type Lanes = ([f64; LANES], [f64; LANES]);

/// Componentwise maximum of radii; `other` is placed at dimension offset
/// `shift`.
pub fn merge_radii(base: &mut Vec<i32>, other: &[i32], shift: usize) {
    if base.len() < other.len() + shift {
        base.resize(other.len() + shift, 0);
    }
    for (j, &r) in other.iter().enumerate() {
        base[j + shift] = base[j + shift].max(r);
    }
}

/// Terms bound to one [`PowerTable`] layout, with every factor resolved to a
/// flat table position.
#[derive(Clone, Debug, Default)]
pub struct CompiledTerms {
    coeffs: Vec<Complex64>,
    starts: Vec<u32>,
    idx: Vec<u32>,
}

impl CompiledTerms {
    fn from_terms<I: IntoIterator<Item = (Vec<u32>, Complex64)>>(terms: I) -> Self {
        let mut out = CompiledTerms {
            starts: vec![0],
            ..Default::default()
        };
        for (idx, c) in terms {
            out.coeffs.push(c);
            out.idx.extend_from_slice(&idx);
            out.starts.push(out.idx.len() as u32);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn evaluate_lanes(&self, table: &LanePowerTable) -> Lanes {
        let (vr, vi) = (&table.re, &table.im);
        let mut ar = [0.0; LANES];
        let mut ai = [0.0; LANES];
        for (i, c) in self.coeffs.iter().enumerate() {
            let mut tr = [c.re; LANES];
            let mut ti = [c.im; LANES];
            for &j in &self.idx[self.starts[i] as usize..self.starts[i + 1] as usize] {
                let (fr, fi) = (&vr[j as usize], &vi[j as usize]);
                for l in 0..LANES {
                    let (a, b) = (tr[l], ti[l]);
                    tr[l] = a * fr[l] - b * fi[l];
                    ti[l] = a * fi[l] + b * fr[l];
                }
            }
            for l in 0..LANES {
                ar[l] += tr[l];
                ai[l] += ti[l];
            }
        }
        (ar, ai)
    }

    #[inline]
    pub fn evaluate(&self, table: &PowerTable) -> Complex64 {
        let v = &table.values;
        let mut acc = [Complex64::new(0.0, 0.0); 2];
        for (i, c) in self.coeffs.iter().enumerate() {
            let span = &self.idx[self.starts[i] as usize..self.starts[i + 1] as usize];
            acc[i & 1] += span.iter().fold(*c, |t, &j| t * v[j as usize]);
        }
        acc[0] + acc[1]
    }
}

/// [`AntiderivativeRep`] bound to a table layout. The factor
/// `e^{2πikx} − 1` is expanded, so both parts are plain products.
#[derive(Clone, Debug, Default)]
pub struct CompiledAntiderivative {
    osc: CompiledTerms,
    lin: CompiledTerms,
}

impl CompiledAntiderivative {
    #[inline]
    pub fn evaluate(&self, x: f64, table: &PowerTable) -> Complex64 {
        self.osc.evaluate(table) + self.lin.evaluate(table) * x
    }

    pub fn evaluate_lanes(&self, x: &[f64; LANES], table: &LanePowerTable) -> Lanes {
        let (mut or, mut oi) = self.osc.evaluate_lanes(table);
        let (lr, li) = self.lin.evaluate_lanes(table);
        for l in 0..LANES {
            or[l] += lr[l] * x[l];
            oi[l] += li[l] * x[l];
        }
        (or, oi)
    }

    pub fn len(&self) -> usize {
        self.osc.len() + self.lin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sparse multivariate trigonometric polynomial.
///
/// Immutable after construction; safe to share between threads.
#[derive(Clone, Debug)]
pub struct SparseTrigPoly {
    dim: usize,
    freqs: Vec<Frequency>,
    coeffs: Vec<Complex64>,
    pattern: SparsePattern,
}

impl PartialEq for SparseTrigPoly {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.freqs == other.freqs && self.coeffs == other.coeffs
    }
}

impl SparseTrigPoly {
    /// The zero polynomial in `dim` variables.
    pub fn zero(dim: usize) -> Self {
        Self::from_sorted(dim, Vec::new(), Vec::new())
    }

    /// Builds a polynomial from terms; coefficients of repeated frequencies
    /// are summed.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self, TrigPolyError>
    where
        I: IntoIterator<Item = (Frequency, Complex64)>,
    {
        let mut map: BTreeMap<Frequency, Complex64> = BTreeMap::new();
        for (k, c) in terms {
            if k.dim() != dim {
                return Err(TrigPolyError::DimensionMismatch {
                    expected: dim,
                    got: k.dim(),
                });
            }
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let (freqs, coeffs) = map.into_iter().unzip();
        Ok(Self::from_sorted(dim, freqs, coeffs))
    }

    /// Builds a polynomial from parallel vectors whose frequencies are unique
    /// (in any order).
    pub fn from_unique(
        dim: usize,
        freqs: Vec<Frequency>,
        coeffs: Vec<Complex64>,
    ) -> Result<Self, TrigPolyError> {
        assert_eq!(freqs.len(), coeffs.len());
        if let Some(k) = freqs.iter().find(|k| k.dim() != dim) {
            return Err(TrigPolyError::DimensionMismatch {
                expected: dim,
                got: k.dim(),
            });
        }
        let mut idx: Vec<usize> = (0..freqs.len()).collect();
        idx.sort_by(|&a, &b| freqs[a].cmp(&freqs[b]));
        let mut f = Vec::with_capacity(freqs.len());
        let mut c: Vec<Complex64> = Vec::with_capacity(freqs.len());
        for i in idx {
            if f.last() == Some(&freqs[i]) {
                *c.last_mut().unwrap() += coeffs[i];
            } else {
                f.push(freqs[i].clone());
                c.push(coeffs[i]);
            }
        }
        Ok(Self::from_sorted(dim, f, c))
    }

    fn from_sorted(dim: usize, freqs: Vec<Frequency>, coeffs: Vec<Complex64>) -> Self {
        let pattern = SparsePattern::build(dim, &freqs);
        SparseTrigPoly {
            dim,
            freqs,
            coeffs,
            pattern,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn frequencies(&self) -> &[Frequency] {
        &self.freqs
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Frequency, &Complex64)> {
        self.freqs.iter().zip(self.coeffs.iter())
    }

    pub fn get(&self, k: &[i32]) -> Option<Complex64> {
        self.freqs
            .binary_search_by(|f| f.as_ref().cmp(k))
            .ok()
            .map(|i| self.coeffs[i])
    }

    /// Largest `|k_j|` per dimension over all stored terms.
    pub fn radii(&self) -> &[i32] {
        &self.pattern.radii
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Pointwise sum.
    pub fn add(&self, other: &SparseTrigPoly) -> Result<SparseTrigPoly, TrigPolyError> {
        if other.dim != self.dim {
            return Err(TrigPolyError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Self::from_terms(
            self.dim,
            self.iter()
                .chain(other.iter())
                .map(|(k, c)| (k.clone(), *c)),
        )
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: Complex64) -> SparseTrigPoly {
        Self::from_sorted(
            self.dim,
            self.freqs.clone(),
            self.coeffs.iter().map(|c| c * s).collect(),
        )
    }

    /// Keeps the terms for which `keep` returns true.
    pub fn filtered<F: Fn(&Frequency, Complex64) -> bool>(&self, keep: F) -> SparseTrigPoly {
        let (freqs, coeffs) = self
            .iter()
            .filter(|(k, c)| keep(k, **c))
            .map(|(k, c)| (k.clone(), *c))
            .unzip();
        Self::from_sorted(self.dim, freqs, coeffs)
    }

    /// Evaluates `Σ p̂_k e^{2πi k·x}`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64, TrigPolyError> {
        if x.len() != self.dim {
            return Err(TrigPolyError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut table = self.power_table();
        table.fill(x);
        Ok(self.evaluate_with(&table))
    }

    /// A power table sized for this polynomial.
    pub fn power_table(&self) -> PowerTable {
        PowerTable::new(&self.pattern.radii)
    }

    /// Resolves the terms against `table`, reading dimension `j` of this
    /// polynomial from table dimension `j + shift`.
    pub fn compile(&self, table: &PowerTable, shift: usize) -> CompiledTerms {
        let p = &self.pattern;
        CompiledTerms::from_terms(self.coeffs.iter().enumerate().map(|(i, c)| {
            let (a, b) = (p.starts[i] as usize, p.starts[i + 1] as usize);
            let idx = (a..b).map(|n| table.index(p.dims[n] as usize + shift, p.ks[n])).collect();
            (idx, *c)
        }))
    }

    /// Evaluates from a power table already filled for the target point.
    /// The table may have larger radii than this polynomial needs.
    pub fn evaluate_with(&self, table: &PowerTable) -> Complex64 {
        let p = &self.pattern;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let (a, b) = (p.starts[i] as usize, p.starts[i + 1] as usize);
            let mut term = *c;
            for n in a..b {
                term *= table.get(p.dims[n] as usize, p.ks[n]);
            }
            acc += term;
        }
        acc
    }

    /// Elementwise [`evaluate`](Self::evaluate); points are processed in
    /// parallel, each with the same summation order as the scalar path.
    pub fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Complex64>, TrigPolyError> {
        if let Some(x) = xs.iter().find(|x| x.len() != self.dim) {
            return Err(TrigPolyError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(xs
            .par_iter()
            .map_init(
                || self.power_table(),
                |table, x| {
                    table.fill(x);
                    self.evaluate_with(table)
                },
            )
            .collect())
    }

    /// Antiderivative with respect to the first variable, normalized so it
    /// vanishes at `x₁ = 0`.
    pub fn antiderivative_first_var(&self) -> AntiderivativeRep {
        assert!(self.dim >= 1, "antiderivative needs at least one variable");
        let mut osc_f = Vec::new();
        let mut osc_c = Vec::new();
        let mut lin_f = Vec::new();
        let mut lin_c = Vec::new();
        for (k, c) in self.iter() {
            if k[0] == 0 {
                lin_f.push(Frequency::from(&k[1..]));
                lin_c.push(*c);
            } else {
                osc_f.push(k.clone());
                osc_c.push(c / Complex64::new(0.0, TWO_PI * k[0] as f64));
            }
        }
        // Both subsequences inherit the lexicographic order of `self`.
        AntiderivativeRep {
            oscillatory: Self::from_sorted(self.dim, osc_f, osc_c),
            linear: Self::from_sorted(self.dim - 1, lin_f, lin_c),
        }
    }

    /// Per dimension, the largest `|k_j|` over terms with `|p̂_k| ≥ coeff_floor`.
    pub fn directional_expansion(&self, coeff_floor: f64) -> Vec<u32> {
        let mut out = vec![0u32; self.dim];
        for (k, c) in self.iter() {
            if c.norm() >= coeff_floor {
                for (o, &kj) in out.iter_mut().zip(k.iter()) {
                    *o = (*o).max(kj.unsigned_abs());
                }
            }
        }
        out
    }

    /// Writes the coefficient dump: a `# dim=<d> terms=<n>` header, then one
    /// `k_1 … k_d re im` line per term in sorted order.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# dim={} terms={}", self.dim, self.len())?;
        for (k, c) in self.iter() {
            for kj in k.iter() {
                write!(w, "{} ", kj)?;
            }
            writeln!(w, "{:e} {:e}", c.re, c.im)?;
        }
        Ok(())
    }

    /// Reads one dump block (header plus `terms` lines) from `r`.
    pub fn read_dump<R: BufRead>(r: &mut R) -> Result<Self, TrigPolyError> {
        let mut line = String::new();
        let mut lineno = 0usize;
        let header = loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(TrigPolyError::Parse {
                    line: lineno,
                    msg: "missing header".into(),
                });
            }
            lineno += 1;
            let t = line.trim();
            if !t.is_empty() {
                break t.to_string();
            }
        };
        let parse_err = |line: usize, msg: &str| TrigPolyError::Parse {
            line,
            msg: msg.to_string(),
        };
        let rest = header
            .strip_prefix('#')
            .ok_or_else(|| parse_err(lineno, "header must start with '#'"))?;
        let mut dim = None;
        let mut terms = None;
        for tok in rest.split_whitespace() {
            if let Some(v) = tok.strip_prefix("dim=") {
                dim = v.parse::<usize>().ok();
            } else if let Some(v) = tok.strip_prefix("terms=") {
                terms = v.parse::<usize>().ok();
            }
        }
        let dim = dim.ok_or_else(|| parse_err(lineno, "missing dim"))?;
        let terms = terms.ok_or_else(|| parse_err(lineno, "missing terms"))?;
        let mut freqs = Vec::with_capacity(terms);
        let mut coeffs = Vec::with_capacity(terms);
        for _ in 0..terms {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(parse_err(lineno, "unexpected end of block"));
            }
            lineno += 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != dim + 2 {
                return Err(parse_err(lineno, "wrong number of fields"));
            }
            let k = toks[..dim]
                .iter()
                .map(|t| t.parse::<i32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| parse_err(lineno, &e.to_string()))?;
            let re = toks[dim]
                .parse::<f64>()
                .map_err(|e| parse_err(lineno, &e.to_string()))?;
            let im = toks[dim + 1]
                .parse::<f64>()
                .map_err(|e| parse_err(lineno, &e.to_string()))?;
            freqs.push(Frequency(k));
            coeffs.push(Complex64::new(re, im));
        }
        Self::from_unique(dim, freqs, coeffs)
    }
}

/// Sorts frequencies by descending magnitude, ties broken lexicographically.
pub(crate) fn by_magnitude_desc(a: (&Frequency, f64), b: (&Frequency, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(b.0))
}

/// Antiderivative of a sparse trigonometric polynomial in its first variable:
///
/// ```text
/// Σ_{k≠0} o_{(k,l)} (e^{2πikx} − 1) e^{2πi l·y}  +  x Σ_l λ_l e^{2πi l·y}
/// ```
///
/// The oscillatory part stores `o_{(k,l)} = p̂_{(k,l)} / (2πik)`, the linear
/// part stores `λ_l = p̂_{(0,l)}`. The representation vanishes at `x = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AntiderivativeRep {
    oscillatory: SparseTrigPoly,
    linear: SparseTrigPoly,
}

impl AntiderivativeRep {
    pub fn new(
        oscillatory: SparseTrigPoly,
        linear: SparseTrigPoly,
    ) -> Result<Self, TrigPolyError> {
        if linear.dim() + 1 != oscillatory.dim() {
            return Err(TrigPolyError::DimensionMismatch {
                expected: oscillatory.dim(),
                got: linear.dim() + 1,
            });
        }
        Ok(AntiderivativeRep {
            oscillatory: oscillatory.filtered(|k, _| k[0] != 0),
            linear,
        })
    }

    pub fn zero(dim: usize) -> Self {
        AntiderivativeRep {
            oscillatory: SparseTrigPoly::zero(dim),
            linear: SparseTrigPoly::zero(dim - 1),
        }
    }

    /// Dimension including the integration variable.
    pub fn dim(&self) -> usize {
        self.oscillatory.dim()
    }

    pub fn oscillatory(&self) -> &SparseTrigPoly {
        &self.oscillatory
    }

    pub fn linear(&self) -> &SparseTrigPoly {
        &self.linear
    }

    /// Radii covering both parts, in the full `(x, y)` layout.
    pub fn radii(&self) -> Vec<i32> {
        let mut r = self.oscillatory.radii().to_vec();
        for (j, &lr) in self.linear.radii().iter().enumerate() {
            r[j + 1] = r[j + 1].max(lr);
        }
        r
    }

    /// Evaluates at `x` (integration variable) and `y`.
    pub fn evaluate(&self, x: f64, y: &[f64]) -> Result<Complex64, TrigPolyError> {
        if y.len() + 1 != self.dim() {
            return Err(TrigPolyError::DimensionMismatch {
                expected: self.dim() - 1,
                got: y.len(),
            });
        }
        let mut table = PowerTable::new(&self.radii());
        let mut pt = Vec::with_capacity(self.dim());
        pt.push(x);
        pt.extend_from_slice(y);
        table.fill(&pt);
        Ok(self.evaluate_with(x, &table))
    }

    /// Binds to `table` (full `(x, y)` layout), which needs the block built
    /// by [`PowerTable::with_shifted_first`].
    pub fn compile(&self, table: &PowerTable) -> CompiledAntiderivative {
        let osc = self.oscillatory.iter().map(|(k, c)| {
            let idx = std::iter::once(table.shifted_index(k[0]))
                .chain(k.iter().enumerate().skip(1).filter(|(_, &v)| v != 0).map(|(j, &v)| table.index(j, v)))
                .collect();
            (idx, *c)
        });
        CompiledAntiderivative {
            osc: CompiledTerms::from_terms(osc),
            lin: self.linear.compile(table, 1),
        }
    }

    /// Evaluates from a power table filled at `(x, y)` in the full layout.
    pub fn evaluate_with(&self, x: f64, table: &PowerTable) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let p = &self.oscillatory.pattern;
        let mut osc = Complex64::new(0.0, 0.0);
        for (i, c) in self.oscillatory.coeffs.iter().enumerate() {
            let (a, b) = (p.starts[i] as usize, p.starts[i + 1] as usize);
            let mut term = *c;
            for n in a..b {
                let d = p.dims[n] as usize;
                let f = table.get(d, p.ks[n]);
                term *= if d == 0 { f - one } else { f };
            }
            osc += term;
        }
        let q = &self.linear.pattern;
        let mut lin = Complex64::new(0.0, 0.0);
        for (i, c) in self.linear.coeffs.iter().enumerate() {
            let (a, b) = (q.starts[i] as usize, q.starts[i + 1] as usize);
            let mut term = *c;
            for n in a..b {
                term *= table.get(q.dims[n] as usize + 1, q.ks[n]);
            }
            lin += term;
        }
        osc + lin * x
    }

    /// Analytic derivative in the first variable, i.e. the integrand this
    /// representation was built from.
    pub fn derivative(&self) -> SparseTrigPoly {
        let terms = self
            .oscillatory
            .iter()
            .map(|(k, c)| (k.clone(), c * Complex64::new(0.0, TWO_PI * k[0] as f64)))
            .chain(self.linear.iter().map(|(l, c)| {
                let mut v = Vec::with_capacity(l.dim() + 1);
                v.push(0);
                v.extend_from_slice(l);
                (Frequency(v), *c)
            }));
        SparseTrigPoly::from_terms(self.dim(), terms).expect("dimensions are consistent")
    }

    /// Merges both parts into one coefficient family indexed by `(k, l)`:
    /// `k ≠ 0` entries are oscillatory coefficients, `k = 0` entries are the
    /// linear-part coefficients.
    pub fn to_family(&self) -> SparseTrigPoly {
        let terms = self
            .oscillatory
            .iter()
            .map(|(k, c)| (k.clone(), *c))
            .chain(self.linear.iter().map(|(l, c)| {
                let mut v = Vec::with_capacity(l.dim() + 1);
                v.push(0);
                v.extend_from_slice(l);
                (Frequency(v), *c)
            }));
        SparseTrigPoly::from_terms(self.dim(), terms).expect("dimensions are consistent")
    }

    /// Inverse of [`to_family`](Self::to_family).
    pub fn from_family(family: &SparseTrigPoly) -> Self {
        let mut osc_f = Vec::new();
        let mut osc_c = Vec::new();
        let mut lin_f = Vec::new();
        let mut lin_c = Vec::new();
        for (k, c) in family.iter() {
            if k[0] == 0 {
                lin_f.push(Frequency::from(&k[1..]));
                lin_c.push(*c);
            } else {
                osc_f.push(k.clone());
                osc_c.push(*c);
            }
        }
        AntiderivativeRep {
            oscillatory: SparseTrigPoly::from_sorted(family.dim(), osc_f, osc_c),
            linear: SparseTrigPoly::from_sorted(family.dim() - 1, lin_f, lin_c),
        }
    }
}
