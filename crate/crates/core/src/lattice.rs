//! Rank-1 lattices `Λ(z, M) = { (j/M) z mod 1 : j = 0..M−1 }`, multiple
//! rank-1 lattices, and the lattice FFTs that evaluate and reconstruct sparse
//! trigonometric polynomials on them.
//!
//! The Fourier matrix `A(Λ, I)` is never formed. A frequency `k` only enters
//! through its residue `k·z mod M`; evaluation accumulates coefficients into
//! an `M`-vector of residues and runs one inverse DFT, reconstruction runs
//! one forward DFT and gathers residues.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::primes::next_prime;
use crate::trig_poly::{Frequency, SparseTrigPoly};

/// Largest lattice size tried by the CBC search unless configured otherwise.
pub const DEFAULT_CBC_CAP: u64 = 1 << 26;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("no reconstructing rank-1 lattice with M ≤ {cap} for {size} frequencies")]
    CbcFailed { size: usize, cap: u64 },
    #[error("multiple rank-1 lattice construction failed after {restarts} restarts")]
    Exhausted { restarts: usize },
    #[error("lattice does not reconstruct the frequency set ({0})")]
    NotReconstructing(String),
    #[error("sample shape mismatch: {0}")]
    Shape(String),
    #[error("empty frequency set")]
    EmptySet,
    #[error("frequency dimension {got} does not match lattice dimension {expected}")]
    Dimension { expected: usize, got: usize },
}

/// `Λ(z, M)`, with `z` stored as canonical residues in `[0, M)`.
#[derive(Clone, PartialEq, Eq)]
pub struct Rank1Lattice {
    z: Vec<u64>,
    m: u64,
}

impl fmt::Debug for Rank1Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ(z={:?}, M={})", self.z, self.m)
    }
}

/// `M; z_1 … z_d`
impl fmt::Display for Rank1Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.m)?;
        for z in &self.z {
            write!(f, " {}", z)?;
        }
        Ok(())
    }
}

impl Rank1Lattice {
    pub fn new(z: Vec<i64>, m: u64) -> Self {
        assert!(m >= 1, "lattice size must be positive");
        let mi = m as i128;
        let z = z
            .into_iter()
            .map(|v| ((v as i128).rem_euclid(mi)) as u64)
            .collect();
        Rank1Lattice { z, m }
    }

    pub fn size(&self) -> u64 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn generator(&self) -> &[u64] {
        &self.z
    }

    /// `k·z mod M`.
    #[inline]
    pub fn residue(&self, k: &[i32]) -> u64 {
        let m = self.m as i128;
        let mut acc: i128 = 0;
        for (&kj, &zj) in k.iter().zip(&self.z) {
            acc += kj as i128 * zj as i128;
        }
        acc.rem_euclid(m) as u64
    }

    /// Node `j`, written into `out[..d]`.
    pub fn node_into(&self, j: u64, out: &mut [f64]) {
        let m = self.m as u128;
        let inv = 1.0 / self.m as f64;
        for (o, &z) in out.iter_mut().zip(&self.z) {
            *o = ((j as u128 * z as u128) % m) as f64 * inv;
        }
    }

    /// All nodes in order of `j`.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let mut it = NodeCursor::new(self, 0);
        (0..self.m)
            .map(|_| {
                let mut x = vec![0.0; self.dim()];
                it.write(&mut x);
                it.advance();
                x
            })
            .collect()
    }

    /// Values of `poly` at all lattice nodes, by residue folding and one
    /// inverse DFT of length `M`.
    pub fn evaluate(&self, poly: &SparseTrigPoly) -> Result<Vec<Complex64>, LatticeError> {
        if poly.dim() != self.dim() {
            return Err(LatticeError::Dimension {
                expected: self.dim(),
                got: poly.dim(),
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m as usize];
        for (k, c) in poly.iter() {
            buf[self.residue(k) as usize] += c;
        }
        fft_for(self.m as usize, Direction::Inverse).process(&mut buf);
        Ok(buf)
    }
}

/// Walks lattice nodes in order of `j`, updating integer residues by
/// addition instead of recomputing `j z_t mod M`.
pub struct NodeCursor<'a> {
    lattice: &'a Rank1Lattice,
    residues: Vec<u64>,
    inv: f64,
}

impl<'a> NodeCursor<'a> {
    pub fn new(lattice: &'a Rank1Lattice, start: u64) -> Self {
        let m = lattice.m as u128;
        let residues = lattice
            .z
            .iter()
            .map(|&z| ((start as u128 * z as u128) % m) as u64)
            .collect();
        NodeCursor {
            lattice,
            residues,
            inv: 1.0 / lattice.m as f64,
        }
    }

    #[inline]
    pub fn write(&self, out: &mut [f64]) {
        for (o, &r) in out.iter_mut().zip(&self.residues) {
            *o = r as f64 * self.inv;
        }
    }

    #[inline]
    pub fn advance(&mut self) {
        let m = self.lattice.m;
        for (r, &z) in self.residues.iter_mut().zip(&self.lattice.z) {
            *r += z;
            if *r >= m {
                *r -= m;
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn fft_for(len: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    thread_local! {
        static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
    }
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(len),
            Direction::Inverse => p.plan_fft_inverse(len),
        }
    })
}

/// Forward DFT `F[r] = Σ_j x_j e^{−2πi jr/n}` in place.
pub fn dft_forward(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        fft_for(buf.len(), Direction::Forward).process(buf);
    }
}

/// True iff `k ↦ k·z mod M` is injective on `set`.
pub fn is_reconstructing(lat: &Rank1Lattice, set: &[Frequency]) -> bool {
    if set.len() as u64 > lat.m {
        return false;
    }
    let mut seen = vec![false; lat.m as usize];
    for k in set {
        let r = lat.residue(k) as usize;
        if seen[r] {
            return false;
        }
        seen[r] = true;
    }
    true
}

/// Distinct prefix projections of a sorted frequency set, one level per
/// dimension. Level `t` lists the distinct `(k_1..k_{t+1})` as (parent index
/// at level `t−1`, `k_{t+1}`).
struct PrefixTree {
    levels: Vec<Vec<(u32, i32)>>,
}

impl PrefixTree {
    fn build(sorted: &[Frequency], dim: usize) -> Self {
        let mut levels: Vec<Vec<(u32, i32)>> = vec![Vec::new(); dim];
        // index of the current group at each level
        let mut current = vec![u32::MAX; dim];
        let mut prev: Option<&Frequency> = None;
        for k in sorted {
            // first level at which k differs from its predecessor
            let split = match prev {
                None => 0,
                Some(p) => p.iter().zip(k.iter()).position(|(a, b)| a != b).unwrap_or(dim),
            };
            for t in split..dim {
                let parent = if t == 0 { 0 } else { current[t - 1] };
                levels[t].push((parent, k[t]));
                current[t] = (levels[t].len() - 1) as u32;
            }
            prev = Some(k);
        }
        PrefixTree { levels }
    }
}

/// Greedy search of a generating vector for a fixed prime `M`; `None` if
/// some component admits no collision-free value.
fn cbc_for_modulus(tree: &PrefixTree, m: u64, seen: &mut Vec<u32>, stamp: &mut u32) -> Option<Vec<u64>> {
    if seen.len() < m as usize {
        seen.resize(m as usize, 0);
    }
    let mut z = Vec::with_capacity(tree.levels.len());
    let mut prev: Vec<u64> = vec![0];
    let mut cur: Vec<u64> = Vec::new();
    for level in &tree.levels {
        if level.len() as u64 > m {
            return None;
        }
        let mut found = None;
        for zt in 1..m {
            *stamp = stamp.wrapping_add(1);
            if *stamp == 0 {
                seen.iter_mut().for_each(|s| *s = 0);
                *stamp = 1;
            }
            cur.clear();
            let mut ok = true;
            for &(parent, kt) in level {
                let r = (prev[parent as usize] as i128 + kt as i128 * zt as i128).rem_euclid(m as i128) as u64;
                let slot = &mut seen[r as usize];
                if *slot == *stamp {
                    ok = false;
                    break;
                }
                *slot = *stamp;
                cur.push(r);
            }
            if ok {
                found = Some(zt);
                break;
            }
        }
        let zt = found?;
        z.push(zt);
        std::mem::swap(&mut prev, &mut cur);
    }
    Some(z)
}

/// Component-by-component search for a reconstructing rank-1 lattice.
///
/// Lattice sizes are primes tried in increasing order starting at `|I|`;
/// after each failure the next candidate is the first prime above
/// `1.05·M`. For each candidate, `z_t` is scanned upward from 1 and the
/// first value keeping `k ↦ k·z mod M` injective on the projection of `I`
/// onto the first `t` coordinates is kept.
pub fn cbc_reconstructing_lattice(set: &[Frequency], cap: u64) -> Result<Rank1Lattice, LatticeError> {
    if set.is_empty() {
        return Err(LatticeError::EmptySet);
    }
    let dim = set[0].dim();
    if let Some(k) = set.iter().find(|k| k.dim() != dim) {
        return Err(LatticeError::Dimension {
            expected: dim,
            got: k.dim(),
        });
    }
    if set.len() == 1 {
        return Ok(Rank1Lattice::new(vec![0; dim], 1));
    }
    let mut sorted = set.to_vec();
    sorted.sort();
    sorted.dedup();
    let tree = PrefixTree::build(&sorted, dim);
    let mut seen = Vec::new();
    let mut stamp = 0u32;
    let mut m = next_prime(sorted.len() as u64);
    while m <= cap {
        if let Some(z) = cbc_for_modulus(&tree, m, &mut seen, &mut stamp) {
            let lat = Rank1Lattice {
                z,
                m,
            };
            debug_assert!(is_reconstructing(&lat, &sorted));
            return Ok(lat);
        }
        m = next_prime(((m as f64) * 1.05).ceil() as u64 + 1);
    }
    Err(LatticeError::CbcFailed {
        size: sorted.len(),
        cap,
    })
}

/// Extends a lattice reconstructing `I` to one reconstructing
/// `I × K` for `K ⊂ ℤ`.
///
/// With `L` the smallest integer making `K` injective modulo `L`, the result
/// is `Λ((L z, 1), L M)`: residues `L (k·z mod M) + k_new` of distinct pairs
/// differ either modulo `L` or in the first part.
pub fn extend_lattice(lat: &Rank1Lattice, new_component: &[i32]) -> Rank1Lattice {
    let mut ks = new_component.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut l = ks.len().max(1) as u64;
    let mut seen = Vec::new();
    loop {
        seen.clear();
        seen.resize(l as usize, false);
        let ok = ks.iter().all(|&k| {
            let r = (k as i64).rem_euclid(l as i64) as usize;
            !std::mem::replace(&mut seen[r], true)
        });
        if ok {
            break;
        }
        l += 1;
    }
    let mut z: Vec<u64> = lat.z.iter().map(|&v| v * l).collect();
    z.push(1);
    let m = lat.m * l;
    Rank1Lattice {
        z: z.into_iter().map(|v| v % m).collect(),
        m,
    }
}

/// Union of rank-1 lattices with an assignment of every frequency of the
/// target set to one lattice on which it does not alias with any other
/// frequency of the set.
#[derive(Clone, Debug)]
pub struct MultipleRank1Lattice {
    lattices: Vec<Rank1Lattice>,
    frequencies: Vec<Frequency>,
    assignment: Vec<usize>,
}

impl MultipleRank1Lattice {
    pub fn lattices(&self) -> &[Rank1Lattice] {
        &self.lattices
    }

    /// Frequencies of the target set, sorted.
    pub fn frequencies(&self) -> &[Frequency] {
        &self.frequencies
    }

    /// Lattice index per frequency, aligned with [`frequencies`](Self::frequencies).
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn lattice_for(&self, k: &Frequency) -> Option<usize> {
        self.frequencies
            .binary_search(k)
            .ok()
            .map(|i| self.assignment[i])
    }

    /// `Σ M_i`; origins shared between lattices are counted once per lattice.
    pub fn sample_count(&self) -> u64 {
        self.lattices.iter().map(|l| l.m).sum()
    }
}

/// Per-lattice failure bound `1/c` gives the number of lattices after which
/// a frequency set of size `n` is fully assigned with probability ≥ 99%.
fn lattices_per_attempt(n: usize, c: f64) -> usize {
    let q = (1.0 / c).clamp(0.5, 0.9);
    (((100.0 * n as f64).ln() / -q.ln()).ceil() as usize).max(4)
}

fn random_prime<R: Rng>(rng: &mut R, lo: u64, hi: u64) -> u64 {
    let u = rng.gen_range(lo..=hi);
    let p = next_prime(u);
    if p <= hi {
        p
    } else {
        next_prime(lo)
    }
}

/// Randomized construction of a multiple rank-1 lattice reconstructing `set`.
///
/// Lattices of random prime size `M ∈ [c|I|, 2c|I|]` with uniformly random
/// generating vectors are drawn one at a time. A still unassigned frequency
/// is assigned to the current lattice when its residue is shared with no
/// other frequency of `set`. An attempt that leaves frequencies unassigned
/// after a fixed number of lattices is discarded; at most `restarts`
/// discarded attempts are tolerated.
pub fn build_multiple_lattices<R: Rng>(
    set: &[Frequency],
    c: f64,
    restarts: usize,
    rng: &mut R,
) -> Result<MultipleRank1Lattice, LatticeError> {
    if set.is_empty() {
        return Err(LatticeError::EmptySet);
    }
    assert!(c >= 1.0, "oversampling factor c must be at least 1");
    let dim = set[0].dim();
    if let Some(k) = set.iter().find(|k| k.dim() != dim) {
        return Err(LatticeError::Dimension {
            expected: dim,
            got: k.dim(),
        });
    }
    let mut sorted = set.to_vec();
    sorted.sort();
    sorted.dedup();
    let n = sorted.len();
    let lo = ((c * n as f64).ceil() as u64).max(2);
    let hi = ((2.0 * c * n as f64).floor() as u64).max(lo);
    let per_attempt = lattices_per_attempt(n, c);
    let mut counts: Vec<u32> = Vec::new();
    let mut residues: Vec<u64> = vec![0; n];

    for _attempt in 0..=restarts {
        let mut lattices = Vec::new();
        let mut assignment = vec![usize::MAX; n];
        let mut remaining = n;
        for _ in 0..per_attempt {
            let m = random_prime(rng, lo, hi);
            let z: Vec<u64> = (0..dim).map(|_| rng.gen_range(1..m.max(2))).collect();
            let lat = Rank1Lattice { z, m };
            counts.clear();
            counts.resize(m as usize, 0);
            for (r, k) in residues.iter_mut().zip(&sorted) {
                *r = lat.residue(k);
                counts[*r as usize] += 1;
            }
            let idx = lattices.len();
            let mut used = false;
            for (i, a) in assignment.iter_mut().enumerate() {
                if *a == usize::MAX && counts[residues[i] as usize] == 1 {
                    *a = idx;
                    remaining -= 1;
                    used = true;
                }
            }
            if used {
                lattices.push(lat);
            }
            if remaining == 0 {
                return Ok(MultipleRank1Lattice {
                    lattices,
                    frequencies: sorted,
                    assignment,
                });
            }
        }
    }
    Err(LatticeError::Exhausted { restarts })
}

#[derive(Clone, Debug)]
pub enum Scheme {
    Single(Rank1Lattice),
    Multiple(MultipleRank1Lattice),
}

/// Sampling and reconstruction plan for a frequency set `I`.
#[derive(Clone, Debug)]
pub struct ReconstructionPlan {
    target: Vec<Frequency>,
    scheme: Scheme,
    /// Per target frequency: lattice index and residue on that lattice.
    slots: Vec<(usize, u64)>,
}

impl ReconstructionPlan {
    pub fn single(target: &[Frequency], lattice: Rank1Lattice) -> Result<Self, LatticeError> {
        if let Some(k) = target.iter().find(|k| k.dim() != lattice.dim()) {
            return Err(LatticeError::Dimension {
                expected: lattice.dim(),
                got: k.dim(),
            });
        }
        if !is_reconstructing(&lattice, target) {
            return Err(LatticeError::NotReconstructing(format!("{lattice:?}")));
        }
        let slots = target.iter().map(|k| (0, lattice.residue(k))).collect();
        Ok(ReconstructionPlan {
            target: target.to_vec(),
            scheme: Scheme::Single(lattice),
            slots,
        })
    }

    pub fn multiple(target: &[Frequency], mlat: MultipleRank1Lattice) -> Result<Self, LatticeError> {
        let mut slots = Vec::with_capacity(target.len());
        for k in target {
            let i = mlat.lattice_for(k).ok_or_else(|| {
                LatticeError::NotReconstructing(format!("frequency {k:?} is not assigned"))
            })?;
            slots.push((i, mlat.lattices[i].residue(k)));
        }
        Ok(ReconstructionPlan {
            target: target.to_vec(),
            scheme: Scheme::Multiple(mlat),
            slots,
        })
    }

    pub fn target(&self) -> &[Frequency] {
        &self.target
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn lattices(&self) -> &[Rank1Lattice] {
        match &self.scheme {
            Scheme::Single(l) => std::slice::from_ref(l),
            Scheme::Multiple(m) => &m.lattices,
        }
    }

    /// Total number of sampling nodes, `M` or `Σ M_i`.
    pub fn sample_count(&self) -> u64 {
        self.lattices().iter().map(|l| l.m).sum()
    }

    /// Samples of `poly` on every lattice of the plan.
    pub fn evaluate(&self, poly: &SparseTrigPoly) -> Result<Vec<Vec<Complex64>>, LatticeError> {
        self.lattices().iter().map(|l| l.evaluate(poly)).collect()
    }

    /// Coefficients for the target frequencies, aligned with [`target`](Self::target).
    pub fn reconstruct_coefficients(&self, samples: Vec<Vec<Complex64>>) -> Result<Vec<Complex64>, LatticeError> {
        let lats = self.lattices();
        if samples.len() != lats.len() {
            return Err(LatticeError::Shape(format!(
                "{} sample vectors for {} lattices",
                samples.len(),
                lats.len()
            )));
        }
        let mut spectra = Vec::with_capacity(samples.len());
        for (mut s, l) in samples.into_iter().zip(lats) {
            if s.len() as u64 != l.m {
                return Err(LatticeError::Shape(format!(
                    "{} samples for lattice of size {}",
                    s.len(),
                    l.m
                )));
            }
            dft_forward(&mut s);
            let scale = 1.0 / l.m as f64;
            s.iter_mut().for_each(|v| *v *= scale);
            spectra.push(s);
        }
        Ok(self
            .slots
            .iter()
            .map(|&(i, r)| spectra[i][r as usize])
            .collect())
    }
}

/// Coefficients on `set` from lattice samples.
pub fn lattice_reconstruct(
    set: &[Frequency],
    plan: &ReconstructionPlan,
    samples: Vec<Vec<Complex64>>,
) -> Result<SparseTrigPoly, LatticeError> {
    let coeffs = plan.reconstruct_coefficients(samples)?;
    let dim = plan.lattices()[0].dim();
    let lookup: std::collections::HashMap<&Frequency, Complex64> =
        plan.target().iter().zip(coeffs).collect();
    let mut freqs = Vec::with_capacity(set.len());
    let mut cs = Vec::with_capacity(set.len());
    for k in set {
        let c = lookup.get(k).ok_or_else(|| {
            LatticeError::NotReconstructing(format!("frequency {k:?} is not covered by the plan"))
        })?;
        freqs.push(k.clone());
        cs.push(*c);
    }
    SparseTrigPoly::from_unique(dim, freqs, cs).map_err(|e| LatticeError::Shape(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(v: &[i32]) -> Frequency {
        Frequency::new(v.to_vec())
    }

    fn cube(n: i32, d: usize) -> Vec<Frequency> {
        let mut out = vec![Vec::new()];
        for _ in 0..d {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (-n..=n).map(move |k| {
                        let mut q = p.clone();
                        q.push(k);
                        q
                    })
                })
                .collect();
        }
        out.into_iter().map(Frequency::new).collect()
    }

    #[test]
    fn nodes_small_cases() {
        let l = Rank1Lattice::new(vec![1, 1], 2);
        assert_eq!(l.nodes(), vec![vec![0.0, 0.0], vec![0.5, 0.5]]);
        let l = Rank1Lattice::new(vec![1, 2], 4);
        assert_eq!(
            l.nodes(),
            vec![vec![0.0, 0.0], vec![0.25, 0.5], vec![0.5, 0.0], vec![0.75, 0.5]]
        );
        let l = Rank1Lattice::new(vec![3, 5, 7], 1);
        assert_eq!(l.nodes(), vec![vec![0.0, 0.0, 0.0]]);
        let l = Rank1Lattice::new(vec![-1, 9], 4);
        assert_eq!(l.generator(), &[3, 1]);
        assert_eq!(l.to_string(), "4; 3 1");
    }

    #[test]
    fn cursor_matches_direct_nodes() {
        let l = Rank1Lattice::new(vec![1, 433, 9_000_001], 1_000_003);
        let mut c = NodeCursor::new(&l, 777);
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        for j in 777..1777 {
            c.write(&mut a);
            l.node_into(j, &mut b);
            assert_eq!(a, b);
            c.advance();
        }
    }

    #[test]
    fn single_frequency_evaluation() {
        let l = Rank1Lattice::new(vec![1, 5], 13);
        let p = SparseTrigPoly::from_terms(2, [(f(&[2, -3]), Complex64::new(1.0, 0.0))]).unwrap();
        let v = l.evaluate(&p).unwrap();
        let r = l.residue(&[2, -3]) as f64;
        for (j, x) in v.iter().enumerate() {
            let want = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 * r / 13.0);
            assert!((x - want).norm() < 1e-13);
        }
    }

    #[test]
    fn reconstructing_property() {
        let l = Rank1Lattice::new(vec![3, 4], 7);
        assert!(is_reconstructing(&l, &[f(&[0, 0])]));
        // (4, −3)·(3, 4) = 0 mod 7
        assert!(!is_reconstructing(&l, &[f(&[0, 0]), f(&[4, -3])]));
        let box2 = cube(2, 2);
        let l = Rank1Lattice::new(vec![1, 5], 25);
        let mut res: Vec<u64> = box2.iter().map(|k| l.residue(k)).collect();
        res.sort();
        res.dedup();
        assert_eq!(is_reconstructing(&l, &box2), res.len() == box2.len());
        assert!(is_reconstructing(&l, &box2));
    }

    #[test]
    fn cbc_small_cases() {
        let l = cbc_reconstructing_lattice(&[f(&[0, 0, 0])], DEFAULT_CBC_CAP).unwrap();
        assert_eq!(l.size(), 1);
        assert_eq!(l.generator(), &[0, 0, 0]);
        let line: Vec<Frequency> = (-4..=4).map(|k| f(&[k])).collect();
        let l = cbc_reconstructing_lattice(&line, DEFAULT_CBC_CAP).unwrap();
        assert_eq!(l.size(), 11);
        assert!(is_reconstructing(&l, &line));
        assert!(matches!(cbc_reconstructing_lattice(&[], 10), Err(LatticeError::EmptySet)));
    }

    #[test]
    fn cbc_respects_cap() {
        let set = cube(3, 3);
        assert!(matches!(
            cbc_reconstructing_lattice(&set, 100),
            Err(LatticeError::CbcFailed { .. })
        ));
    }

    #[test]
    fn cbc_random_sets_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut set: Vec<Frequency> = (0..50)
                .map(|_| f(&[rng.gen_range(-8..=8), rng.gen_range(-8..=8), rng.gen_range(-8..=8)]))
                .collect();
            set.sort();
            set.dedup();
            let l = cbc_reconstructing_lattice(&set, DEFAULT_CBC_CAP).unwrap();
            assert!(is_reconstructing(&l, &set));
        }
    }

    #[test]
    fn extension_reconstructs_product() {
        let base: Vec<Frequency> = vec![f(&[0, 0]), f(&[3, -1]), f(&[-2, 5]), f(&[1, 1])];
        let lat = cbc_reconstructing_lattice(&base, DEFAULT_CBC_CAP).unwrap();
        let comp = [-7, -1, 0, 2, 9];
        let ext = extend_lattice(&lat, &comp);
        let prod: Vec<Frequency> = base.iter().flat_map(|k| comp.iter().map(move |&c| k.extended(c))).collect();
        assert!(is_reconstructing(&ext, &prod));
        assert!(ext.size() <= lat.size() * 17);
        let one = extend_lattice(&Rank1Lattice::new(vec![0], 1), &[-1, 0, 1]);
        assert_eq!(one.size(), 3);
    }

    #[test]
    fn multiple_lattice_box() {
        let set = cube(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let ml = build_multiple_lattices(&set, 2.0, 5, &mut rng).unwrap();
        assert_eq!(ml.frequencies().len(), 25);
        for (k, &i) in ml.frequencies().iter().zip(ml.assignment()) {
            let l = &ml.lattices()[i];
            let r = l.residue(k);
            assert_eq!(set.iter().filter(|h| l.residue(h) == r).count(), 1);
        }
        let one = build_multiple_lattices(&[f(&[3, 1])], 2.0, 5, &mut rng).unwrap();
        assert_eq!(one.lattices().len(), 1);
    }

    #[test]
    fn zero_samples_give_zero_coefficients() {
        let set = cube(1, 2);
        let l = cbc_reconstructing_lattice(&set, DEFAULT_CBC_CAP).unwrap();
        let plan = ReconstructionPlan::single(&set, l.clone()).unwrap();
        let p = lattice_reconstruct(&set, &plan, vec![vec![Complex64::new(0.0, 0.0); l.size() as usize]]).unwrap();
        assert!(p.coefficients().iter().all(|c| c.norm() == 0.0));
        assert!(lattice_reconstruct(&set, &plan, vec![vec![]]).is_err());
    }

    #[test]
    fn aliased_frequency_adds_its_coefficient() {
        let set = vec![f(&[0, 0]), f(&[1, 0]), f(&[0, 1])];
        let l = Rank1Lattice::new(vec![1, 2], 5);
        let plan = ReconstructionPlan::single(&set, l.clone()).unwrap();
        // (5, 0) aliases onto (0, 0) modulo 5
        let p = SparseTrigPoly::from_terms(
            2,
            [
                (f(&[0, 0]), Complex64::new(1.0, 0.0)),
                (f(&[1, 0]), Complex64::new(2.0, 0.0)),
                (f(&[5, 0]), Complex64::new(0.25, -0.5)),
            ],
        )
        .unwrap();
        let got = lattice_reconstruct(&set, &plan, plan.evaluate(&p).unwrap()).unwrap();
        assert!((got.get(&[0, 0]).unwrap() - Complex64::new(1.25, -0.5)).norm() < 1e-14);
        assert!((got.get(&[1, 0]).unwrap() - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        assert!(got.get(&[0, 1]).unwrap().norm() < 1e-14);
    }
}
