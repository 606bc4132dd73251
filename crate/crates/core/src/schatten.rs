//! One-pass estimation of ‖A‖ₚᵖ for even `p` on sparse turnstile matrix
//! streams, plus exact oracles.
//!
//! The estimator keeps, for each of the `q = p/2` slots, a wide Count-Sketch
//! of `A` (to recover the heavy rows) and `T` precision samplers of `DA`
//! (to draw light rows with probability ∝ ‖aᵢ‖²). At the end it sums the
//! cyclic products `⟨ã_{i₁}, ã_{i₂}⟩⋯⟨ã_{i_q}, ã_{i₁}⟩` over one member of
//! every slot, each weighted by its inverse inclusion rate.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hashing::derive_seed;
use crate::sketches::{log2_ceil, CountSketch, DecodeMode, F2Sketch, PrecisionSampler, SamplerParams, MAX_EPSILON, MIN_EPSILON};
use crate::spectra::{svd_oracle, DenseMatrix};

/// A turnstile update `A[row, col] += delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixUpdate {
    pub row: usize,
    pub col: usize,
    pub delta: f64,
}

impl MatrixUpdate {
    pub fn new(row: usize, col: usize, delta: f64) -> Self {
        Self { row, col, delta }
    }
}

const LOWER_BOUND_NOTE: &str = "only even p is supported: by the streaming lower bound, one-pass estimation \
     of Schatten p-norms for p not an even integer needs space polynomial in n even on sparse matrices \
     (n^(1-1/t) for t x t block instances)";

/// Rejects exponents the estimator cannot serve.
pub fn check_even_exponent(p: f64) -> Result<u32> {
    if !(p.is_finite() && p >= 2.0 && p.fract() == 0.0 && (p as u64) % 2 == 0 && p <= 64.0) {
        return Err(Error::UnsupportedExponent(p, LOWER_BOUND_NOTE.into()));
    }
    Ok(p as u32)
}

pub const DEFAULT_C_T: f64 = 0.5;
pub const DEFAULT_C_HEAVY: f64 = 32.0;
/// Rows of each heavy-row sketch. Over `n²` indices, spurious entries need a
/// majority of colliding rows; seven keeps them rare at the widths used here.
pub const HEAVY_DEPTH: usize = 7;
pub const F2_DEPTH: usize = 5;
/// Updates buffered per block by [`EstimatorState::ingest_all`].
pub const INGEST_BLOCK: usize = 4096;
/// Largest accepted update magnitude. Scaled by up to 2²⁰ in the samplers it
/// stays inside the fixed-point range.
pub const MAX_ABS_DELTA: f64 = 1e6;
/// The heavy set keeps at most `HEAVY_CAP_FACTOR · T` rows.
pub const HEAVY_CAP_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub n: usize,
    pub p: u32,
    pub epsilon: f64,
    /// `C` in `T = ⌈C n^{1−2/p} / ε²⌉`.
    pub c_t: f64,
    /// `c_R` in the repetition count of each sampler.
    pub c_r: f64,
    /// `c_w` in `w = ⌈c_w (ε⁻¹ log₂ n + ε⁻²)⌉`.
    pub c_w: f64,
    /// `C'` in the sampler acceptance rule `‖b̃ᵢ‖² ≥ C'L/ε`.
    pub c_prime: f64,
    /// Heavy-row sketch width is `⌈c_heavy · ε⁻¹ T log₂ n⌉` per row.
    pub c_heavy: f64,
    pub seed: u64,
}

impl EstimatorConfig {
    pub fn new(n: usize, p: u32, epsilon: f64, seed: u64) -> Result<Self> {
        let c = Self {
            n,
            p,
            epsilon,
            c_t: DEFAULT_C_T,
            c_r: crate::sketches::DEFAULT_C_R,
            c_w: crate::sketches::DEFAULT_C_W,
            c_prime: crate::sketches::DEFAULT_C_PRIME,
            c_heavy: DEFAULT_C_HEAVY,
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_even_exponent(self.p as f64)?;
        if self.n == 0 {
            return invalid("n must be positive");
        }
        if !(MIN_EPSILON..MAX_EPSILON).contains(&self.epsilon) {
            return invalid(format!("epsilon {} must lie in [{MIN_EPSILON}, 1/3)", self.epsilon));
        }
        for (name, v) in [("C", self.c_t), ("c_R", self.c_r), ("c_w", self.c_w), ("C'", self.c_prime), ("c_heavy", self.c_heavy)] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} = {v} must be positive"));
            }
        }
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.p as usize / 2
    }

    /// Samplers per slot.
    pub fn t_budget(&self) -> usize {
        let expo = 1.0 - 2.0 / self.p as f64;
        ((self.c_t * (self.n as f64).powf(expo) / (self.epsilon * self.epsilon)).ceil() as usize).max(1)
    }

    pub fn sampler_params(&self) -> Result<SamplerParams> {
        SamplerParams::with_constants(self.n, self.epsilon, self.c_r, self.c_w, self.c_prime)
    }

    pub fn heavy_width(&self) -> usize {
        let lg = log2_ceil(self.n) as f64;
        (self.c_heavy * self.t_budget() as f64 * lg / self.epsilon).ceil() as usize
    }

    pub fn f2_width(&self) -> usize {
        (8.0 / (self.epsilon * self.epsilon)).ceil() as usize
    }

    /// Accumulators the state allocates, counted from the configuration.
    pub fn accounted_accumulators(&self) -> Result<usize> {
        let f2 = F2_DEPTH * self.f2_width();
        if self.p == 2 {
            return Ok(f2);
        }
        let per_slot = self.t_budget() * self.sampler_params()?.accumulator_count() + HEAVY_DEPTH * self.heavy_width();
        Ok(f2 + self.q() * per_slot)
    }
}

/// Where a member of `I_s` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowOrigin {
    Heavy,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledRow {
    pub index: usize,
    /// Sparse reconstruction `(col, value)`, sorted by column.
    pub entries: Vec<(usize, f64)>,
    pub ell: f64,
    pub origin: RowOrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub y: f64,
    pub p: u32,
    pub epsilon: f64,
    pub n: usize,
    /// Estimate of ‖A‖_F².
    pub l: f64,
    pub t: usize,
    pub heavy_rows: Vec<usize>,
    pub sampled_rows: Vec<usize>,
    /// Samples that landed in the heavy set and were dropped.
    pub absorbed_samples: Vec<usize>,
    /// `(slot, sampler)` pairs where every repetition failed.
    pub failed_slots: Vec<(usize, usize)>,
    /// Most distinct rows of the next slot any member shares support with.
    pub max_neighbor_rows: usize,
    /// Partial chains expanded by the tuple enumeration.
    pub chain_visits: u64,
    pub memory_bytes: usize,
}

impl Estimate {
    pub fn degraded(&self) -> bool {
        !self.failed_slots.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    config: EstimatorConfig,
    f2: F2Sketch,
    heavy: Vec<CountSketch>,
    samplers: Vec<Vec<PrecisionSampler>>,
    updates: u64,
}

impl EstimatorState {
    pub fn new(config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let domain = (n as u64).checked_mul(n as u64).ok_or_else(|| Error::Overflow("n²".into()))?;
        let f2 = F2Sketch::new(domain, F2_DEPTH, config.f2_width(), derive_seed(config.seed, &[1]))?;
        let (mut heavy, mut samplers) = (Vec::new(), Vec::new());
        if config.p > 2 {
            let params = config.sampler_params()?;
            for s in 0..config.q() {
                heavy.push(CountSketch::new(n, n, HEAVY_DEPTH, config.heavy_width(), derive_seed(config.seed, &[2, s as u64]))?);
                samplers.push(
                    (0..config.t_budget())
                        .map(|t| PrecisionSampler::new(params, derive_seed(config.seed, &[3, s as u64, t as u64])))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
        }
        Ok(Self { config, f2, heavy, samplers, updates: 0 })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn updates_seen(&self) -> u64 {
        self.updates
    }

    /// Accumulators actually allocated.
    pub fn measured_accumulators(&self) -> usize {
        self.f2.accumulator_count()
            + self.heavy.iter().map(CountSketch::accumulator_count).sum::<usize>()
            + self.samplers.iter().flatten().map(PrecisionSampler::accumulator_count).sum::<usize>()
    }

    pub fn memory_bytes(&self) -> usize {
        8 * self.measured_accumulators()
    }

    pub fn ingest(&mut self, u: &MatrixUpdate) -> Result<()> {
        self.ingest_batch(std::slice::from_ref(u))
    }

    /// Ingests a block of the stream one substructure at a time. The result
    /// is identical to ingesting the updates one by one; a rejected batch
    /// leaves the state untouched.
    pub fn ingest_batch(&mut self, updates: &[MatrixUpdate]) -> Result<()> {
        let n = self.config.n;
        let mut triples = Vec::with_capacity(updates.len());
        for u in updates {
            if u.row >= n || u.col >= n {
                return Err(Error::IndexOutOfRange { row: u.row, col: u.col, n });
            }
            if !u.delta.is_finite() || u.delta.abs() > MAX_ABS_DELTA {
                return invalid(format!("update delta {} is not a finite value of magnitude at most {MAX_ABS_DELTA:e}", u.delta));
            }
            triples.push((u.row, u.col, u.delta));
        }
        for &(r, c, d) in &triples {
            self.f2.update((r * n + c) as u64, d)?;
        }
        for cs in &mut self.heavy {
            cs.update_batch(&triples)?;
        }
        for ps in self.samplers.iter_mut().flatten() {
            ps.update_batch(&triples)?;
        }
        self.updates += updates.len() as u64;
        Ok(())
    }

    pub fn ingest_all<'a>(&mut self, updates: impl IntoIterator<Item = &'a MatrixUpdate>) -> Result<()> {
        let mut block = Vec::with_capacity(INGEST_BLOCK);
        for u in updates {
            block.push(*u);
            if block.len() == INGEST_BLOCK {
                self.ingest_batch(&block)?;
                block.clear();
            }
        }
        if !block.is_empty() {
            self.ingest_batch(&block)?;
        }
        Ok(())
    }

    /// Sum with a state built from another shard of the same stream.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.config != other.config {
            return Err(Error::ShapeMismatch("estimator configurations differ".into()));
        }
        self.f2.merge(&other.f2)?;
        for (a, b) in self.heavy.iter_mut().zip(&other.heavy) {
            a.merge(b)?;
        }
        for (a, b) in self.samplers.iter_mut().flatten().zip(other.samplers.iter().flatten()) {
            a.merge(b)?;
        }
        self.updates += other.updates;
        Ok(())
    }

    /// `K_s`: rows whose reconstructed norm is at least `L/(10T)`, at most `10T`
    /// of them (largest first, ties to the smaller index), sorted by index.
    pub fn heavy_set(&self, s: usize, l: f64) -> Vec<SampledRow> {
        let t = self.config.t_budget();
        let w_h = self.heavy[s].width() as f64 / 4.0;
        let tau = 2.0 * (l / w_h).sqrt();
        let mut rows: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for e in self.heavy[s].decode(tau, DecodeMode::HotBuckets) {
            rows.entry(e.row).or_default().push((e.col, e.value));
        }
        let cut = l / (HEAVY_CAP_FACTOR as f64 * t as f64);
        let mut found: Vec<SampledRow> = rows
            .into_iter()
            .map(|(index, entries)| {
                let ell = entries.iter().map(|(_, v)| v * v).sum();
                SampledRow { index, entries, ell, origin: RowOrigin::Heavy }
            })
            .filter(|r| r.ell >= cut)
            .collect();
        found.sort_by(|a, b| b.ell.total_cmp(&a.ell).then(a.index.cmp(&b.index)));
        found.truncate(HEAVY_CAP_FACTOR * t);
        found.sort_by_key(|r| r.index);
        found
    }

    pub fn finalize(&self) -> Result<Estimate> {
        if self.updates == 0 {
            return invalid("no updates were ingested");
        }
        let l = self.f2.estimate();
        let mut est = Estimate {
            y: 0.0,
            p: self.config.p,
            epsilon: self.config.epsilon,
            n: self.config.n,
            l,
            t: self.config.t_budget(),
            heavy_rows: Vec::new(),
            sampled_rows: Vec::new(),
            absorbed_samples: Vec::new(),
            failed_slots: Vec::new(),
            max_neighbor_rows: 0,
            chain_visits: 0,
            memory_bytes: self.memory_bytes(),
        };
        if self.config.p == 2 {
            est.y = l;
            return Ok(est);
        }
        if l <= 0.0 {
            return Ok(est);
        }
        let q = self.config.q();
        let mut slots: Vec<Vec<(SampledRow, f64)>> = Vec::with_capacity(q);
        for s in 0..q {
            let heavy = self.heavy_set(s, l);
            let in_heavy: BTreeSet<usize> = heavy.iter().map(|r| r.index).collect();
            est.heavy_rows.extend(heavy.iter().map(|r| r.index));
            let draws: Vec<Option<_>> =
                self.samplers[s].par_iter().map(|ps| ps.sample(l)).collect::<Result<Vec<_>>>()?;
            let successes = draws.iter().filter(|d| d.is_some()).count();
            let mut members: Vec<(SampledRow, f64)> = heavy.into_iter().map(|r| (r, 1.0)).collect();
            for (t, draw) in draws.into_iter().enumerate() {
                match draw {
                    None => est.failed_slots.push((s, t)),
                    Some(d) if in_heavy.contains(&d.row) => est.absorbed_samples.push(d.row),
                    Some(d) if d.ell > 0.0 => {
                        est.sampled_rows.push(d.row);
                        let weight = l / (d.ell * successes as f64);
                        members.push((SampledRow { index: d.row, entries: d.entries, ell: d.ell, origin: RowOrigin::Sampled }, weight));
                    }
                    Some(_) => {}
                }
            }
            slots.push(members);
        }
        let (y, visits, max_nb) = cyclic_sum(&slots);
        est.y = y;
        est.chain_visits = visits;
        est.max_neighbor_rows = max_nb;
        Ok(est)
    }
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// `Σ Π weights · Π ⟨ã_{k_j}, ã_{k_{j+1}}⟩` over one member per slot, cyclic.
/// Only chains whose consecutive members share a column are expanded.
fn cyclic_sum(slots: &[Vec<(SampledRow, f64)>]) -> (f64, u64, usize) {
    let q = slots.len();
    // column → members of each slot
    let index: Vec<BTreeMap<usize, Vec<usize>>> = slots
        .iter()
        .map(|members| {
            let mut m: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (k, (row, _)) in members.iter().enumerate() {
                for &(c, _) in &row.entries {
                    m.entry(c).or_default().push(k);
                }
            }
            m
        })
        .collect();
    let neighbours = |s: usize, k: usize| -> Vec<usize> {
        let next = (s + 1) % q;
        let mut out: Vec<usize> = slots[s][k].0.entries.iter().filter_map(|(c, _)| index[next].get(c)).flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    };
    let mut max_nb = 0;
    for (s, members) in slots.iter().enumerate() {
        for k in 0..members.len() {
            let next = (s + 1) % q;
            let rows: BTreeSet<usize> = neighbours(s, k).into_iter().map(|j| slots[next][j].0.index).collect();
            max_nb = max_nb.max(rows.len());
        }
    }
    let mut visits = 0u64;
    let mut total = 0.0;
    for k0 in 0..slots[0].len() {
        let mut acc = 0.0;
        let w0 = slots[0][k0].1;
        walk(slots, &neighbours, k0, 0, k0, w0, &mut acc, &mut visits);
        total += acc;
    }
    (total, visits, max_nb)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    slots: &[Vec<(SampledRow, f64)>],
    neighbours: &dyn Fn(usize, usize) -> Vec<usize>,
    first: usize,
    s: usize,
    k: usize,
    prod: f64,
    acc: &mut f64,
    visits: &mut u64,
) {
    *visits += 1;
    let q = slots.len();
    let row = &slots[s][k].0.entries;
    if s + 1 == q {
        let close = sparse_dot(row, &slots[0][first].0.entries);
        *acc += prod * close;
        return;
    }
    for j in neighbours(s, k) {
        let (next, w) = (&slots[s + 1][j].0, slots[s + 1][j].1);
        let d = sparse_dot(row, &next.entries);
        if d != 0.0 {
            walk(slots, neighbours, first, s + 1, j, prod * d * w, acc, visits);
        }
    }
}

/// Square sparse matrix with rows stored as sorted `(col, value)` lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    /// Replays a stream. Updates to one entry are summed in a canonical order,
    /// so any permutation of the stream yields the same matrix.
    pub fn from_updates(n: usize, updates: &[MatrixUpdate]) -> Result<Self> {
        let mut sorted: Vec<MatrixUpdate> = Vec::with_capacity(updates.len());
        for u in updates {
            if u.row >= n || u.col >= n {
                return Err(Error::IndexOutOfRange { row: u.row, col: u.col, n });
            }
            sorted.push(*u);
        }
        sorted.sort_by(|a, b| (a.row, a.col).cmp(&(b.row, b.col)).then(a.delta.total_cmp(&b.delta)));
        let mut rows = vec![Vec::new(); n];
        let mut i = 0;
        while i < sorted.len() {
            let (r, c) = (sorted[i].row, sorted[i].col);
            let mut v = 0.0;
            while i < sorted.len() && (sorted[i].row, sorted[i].col) == (r, c) {
                v += sorted[i].delta;
                i += 1;
            }
            if v != 0.0 {
                rows[r].push((c, v));
            }
        }
        Ok(Self { n, rows })
    }

    pub fn from_dense(a: &DenseMatrix) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::ShapeMismatch(format!("{}x{} is not square", a.n_rows(), a.n_cols())));
        }
        let rows = (0..a.n_rows())
            .map(|i| a.row(i).iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect())
            .collect();
        Ok(Self { n: a.n_rows(), rows })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                d.set(i, j, v);
            }
        }
        d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.rows.iter().flatten().map(|(_, v)| v * v).sum()
    }

    pub fn max_row_nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_col_nnz(&self) -> usize {
        let mut counts = vec![0usize; self.n];
        for &(j, _) in self.rows.iter().flatten() {
            counts[j] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }

    /// One update per nonzero, row-major.
    pub fn updates(&self) -> Vec<MatrixUpdate> {
        self.rows.iter().enumerate().flat_map(|(i, row)| row.iter().map(move |&(j, v)| MatrixUpdate::new(i, j, v))).collect()
    }

    /// Row Gram matrix `AAᵀ` as sparse rows.
    fn row_gram(&self) -> Vec<Vec<(usize, f64)>> {
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                by_col[j].push((i, v));
            }
        }
        self.rows
            .iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for &(j, v) in row {
                    for &(k, w) in &by_col[j] {
                        *acc.entry(k).or_insert(0.0) += v * w;
                    }
                }
                acc.into_iter().filter(|(_, v)| *v != 0.0).collect()
            })
            .collect()
    }
}

/// A random `n × n` matrix with at most `per_line` nonzeros in every row and
/// column: the union of `per_line` random permutation patterns, values
/// uniform on `[−max_abs, max_abs] \ {0}`.
pub fn random_sparse(n: usize, per_line: usize, max_abs: i64, seed: u64) -> SparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[7]));
    let mut ups = Vec::new();
    for _ in 0..per_line {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for (i, &j) in perm.iter().enumerate() {
            let mut v = rng.gen_range(1..=max_abs.max(1));
            if rng.gen::<bool>() {
                v = -v;
            }
            ups.push(MatrixUpdate::new(i, j, v as f64));
        }
    }
    SparseMatrix::from_updates(n, &ups).expect("indices are in range")
}

/// `‖A‖ₚᵖ` as the cyclic sum `Σ_{i₁..i_q} Π ⟨a_{i_j}, a_{i_{j+1}}⟩` with
/// `q = p/2`, evaluated by walking closed paths in the row Gram graph.
pub fn exact_schatten_even_sparse(a: &SparseMatrix, p: u32) -> Result<f64> {
    let p = check_even_exponent(p as f64)?;
    let q = p as usize / 2;
    let g = a.row_gram();
    let mut total = 0.0;
    for start in 0..a.n {
        // v = e_start · G^(q-1), then close the cycle with G[·][start]
        let mut v: BTreeMap<usize, f64> = BTreeMap::from([(start, 1.0)]);
        for _ in 0..q - 1 {
            let mut next: BTreeMap<usize, f64> = BTreeMap::new();
            for (&i, &x) in &v {
                for &(k, w) in &g[i] {
                    *next.entry(k).or_insert(0.0) += x * w;
                }
            }
            v = next;
        }
        total += v.iter().map(|(&i, &x)| g[i].iter().find(|(k, _)| *k == start).map_or(0.0, |(_, w)| x * w)).sum::<f64>();
    }
    Ok(total)
}

/// Dense entry point of the cyclic sum.
pub fn exact_schatten_even(a: &DenseMatrix, p: u32) -> Result<f64> {
    exact_schatten_even_sparse(&SparseMatrix::from_dense(a)?, p)
}

/// `trace((AᵀA)^{p/2})` by repeated dense multiplication.
pub fn trace_power_schatten(a: &DenseMatrix, p: u32) -> Result<f64> {
    let p = check_even_exponent(p as f64)?;
    let g = a.gram_cols();
    let mut m = g.clone();
    for _ in 1..p / 2 {
        m = m.matmul(&g)?;
    }
    Ok(m.trace())
}

/// `Σ σᵢᵖ` from the Jacobi singular values.
pub fn svd_schatten(a: &DenseMatrix, p: u32) -> Result<f64> {
    let p = check_even_exponent(p as f64)?;
    Ok(svd_oracle(a)?.values().iter().map(|s| s.powi(p as i32)).sum())
}

/// Single-pair estimator of ‖A‖₄⁴ for rows drawn with probability
/// ‖aᵢ‖²/‖A‖_F²: `⟨aᵢ, aⱼ⟩² L² / (‖aᵢ‖² ‖aⱼ‖²)` with `L = ‖A‖_F²`.
pub fn importance_weight(row_i: &[f64], row_j: &[f64], l: f64) -> Result<f64> {
    if row_i.len() != row_j.len() {
        return Err(Error::ShapeMismatch(format!("rows of length {} and {}", row_i.len(), row_j.len())));
    }
    let ni: f64 = row_i.iter().map(|v| v * v).sum();
    let nj: f64 = row_j.iter().map(|v| v * v).sum();
    if ni == 0.0 || nj == 0.0 {
        return invalid("importance weight needs nonzero rows");
    }
    let dot: f64 = row_i.iter().zip(row_j).map(|(a, b)| a * b).sum();
    Ok(dot * dot * l * l / (ni * nj))
}
