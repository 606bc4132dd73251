//! Linear sketches: Count-Sketch, an F2 (second moment) sketch and the
//! precision ℓ₂ row sampler for matrix streams.
//!
//! All accumulators are fixed-point `i64` with [`SCALE_BITS`] fractional bits,
//! so any reordering of the same multiset of updates produces bit-identical
//! tables. Each update is rounded once on entry; the rounding is symmetric, so
//! an update followed by its negation cancels exactly.
//!
//! The Count-Sketch hashes a two-dimensional index `(r, c)` to the bucket
//! `(g(r) + h(c)) mod W` with `g`, `h` pairwise independent. Distinct indices
//! still collide with probability `1/W`, and the additive form lets the
//! decoder enumerate the preimage of a bucket row by row instead of scanning
//! the whole universe.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hashing::{derive_seed, unit_uniform, PolyHash};

pub const SCALE_BITS: u32 = 20;
const SCALE: f64 = (1u64 << SCALE_BITS) as f64;
const MAX_FIXED: f64 = (1u64 << 62) as f64;
/// Smallest `u` handed out by the sampler; keeps `1/√u` below 2²⁰.
pub const MIN_U: f64 = 1.0 / (1u64 << 40) as f64;

/// Buckets per unit of the error parameter `w`. With width exactly `w` the
/// bound ‖x‖₂²/w is a one-sigma event per index and fails almost surely over
/// a thousand indices.
pub const GUARANTEE_WIDTH_FACTOR: usize = 8;

const CS_MAGIC: &[u8; 4] = b"SKCS";
const F2_MAGIC: &[u8; 4] = b"SKF2";
const FORMAT_VERSION: u32 = 1;

fn to_fixed(x: f64) -> Result<i64> {
    let v = (x * SCALE).round();
    if !v.is_finite() || v.abs() >= MAX_FIXED {
        return Err(Error::Overflow(format!("the fixed-point image of update {x}")));
    }
    Ok(v as i64)
}

fn from_fixed(v: i64) -> f64 {
    v as f64 / SCALE
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let d = values.len();
    if d % 2 == 1 {
        values[d / 2]
    } else {
        (values[d / 2 - 1] + values[d / 2]) / 2.0
    }
}

/// Entry recovered by thresholded decoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveredEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeMode {
    /// Enumerate preimages of buckets above the threshold.
    HotBuckets,
    /// Query every index of the universe; quadratic, kept as a reference.
    FullScan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountSketch {
    index_rows: usize,
    index_cols: usize,
    depth: usize,
    width: usize,
    seed: u64,
    row_hash: Vec<PolyHash>,
    col_hash: Vec<PolyHash>,
    sign_hash: Vec<PolyHash>,
    tables: Vec<i64>,
}

struct BucketIndex {
    row_class: Vec<Vec<u32>>,
    col_offsets: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
    col_class: Vec<Vec<u32>>,
}

impl CountSketch {
    /// Sketch over the index space `[index_rows] × [index_cols]`.
    pub fn new(index_rows: usize, index_cols: usize, depth: usize, width: usize, seed: u64) -> Result<Self> {
        if index_rows == 0 || index_cols == 0 {
            return invalid("the index universe must be nonempty");
        }
        if (index_rows as u128) * (index_cols as u128) >= crate::hashing::MERSENNE_61 as u128 {
            return invalid("the index universe must stay below 2^61 - 1");
        }
        if depth == 0 || width == 0 {
            return invalid(format!("depth {depth} and width {width} must be positive"));
        }
        let hashes = |kind: u64, k: usize| (0..depth).map(|j| PolyHash::new(derive_seed(seed, &[j as u64, kind]), k)).collect();
        Ok(Self {
            index_rows,
            index_cols,
            depth,
            width,
            seed,
            row_hash: hashes(0, 2),
            col_hash: hashes(1, 2),
            sign_hash: hashes(2, 4),
            tables: vec![0; depth * width],
        })
    }

    /// Sketch of a vector over `[domain]` meeting `‖x̃ − x‖∞² ≤ ‖x‖₂²/w`:
    /// the table is [`GUARANTEE_WIDTH_FACTOR`]·w buckets wide.
    pub fn for_guarantee(domain: usize, w: usize, depth: usize, seed: u64) -> Result<Self> {
        Self::one_dimensional(domain, depth, GUARANTEE_WIDTH_FACTOR * w, seed)
    }

    /// Sketch of a plain vector indexed by `[domain]`.
    pub fn one_dimensional(domain: usize, depth: usize, width: usize, seed: u64) -> Result<Self> {
        Self::new(1, domain, depth, width, seed)
    }

    pub fn domain(&self) -> u64 {
        (self.index_rows * self.index_cols) as u64
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.index_rows, self.index_cols)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn accumulator_count(&self) -> usize {
        self.tables.len()
    }

    pub fn is_zero(&self) -> bool {
        self.tables.iter().all(|&v| v == 0)
    }

    fn split(&self, index: u64) -> Result<(usize, usize)> {
        if index >= self.domain() {
            return Err(Error::IndexOutOfRange { row: index as usize, col: 0, n: self.domain() as usize });
        }
        Ok(((index / self.index_cols as u64) as usize, (index % self.index_cols as u64) as usize))
    }

    fn check_entry(&self, r: usize, c: usize) -> Result<()> {
        if r >= self.index_rows || c >= self.index_cols {
            return Err(Error::IndexOutOfRange { row: r, col: c, n: self.index_rows.max(self.index_cols) });
        }
        Ok(())
    }

    fn bucket(&self, j: usize, r: usize, c: usize) -> usize {
        let w = self.width;
        (self.row_hash[j].bucket(r as u64, w) + self.col_hash[j].bucket(c as u64, w)) % w
    }

    fn flat(&self, r: usize, c: usize) -> u64 {
        (r * self.index_cols + c) as u64
    }

    pub fn update(&mut self, index: u64, delta: f64) -> Result<()> {
        let (r, c) = self.split(index)?;
        self.update_entry(r, c, delta)
    }

    pub fn update_entry(&mut self, r: usize, c: usize, delta: f64) -> Result<()> {
        self.check_entry(r, c)?;
        self.add_fixed(r, c, to_fixed(delta)?);
        Ok(())
    }

    /// Applies a batch of `(row, col, delta)` updates atomically: nothing is
    /// written if any index is out of range or any value overflows.
    pub fn update_batch(&mut self, updates: &[(usize, usize, f64)]) -> Result<()> {
        let mut fixed = Vec::with_capacity(updates.len());
        for &(r, c, delta) in updates {
            self.check_entry(r, c)?;
            fixed.push((r, c, to_fixed(delta)?));
        }
        for (r, c, v) in fixed {
            self.add_fixed(r, c, v);
        }
        Ok(())
    }

    /// Adds an already fixed-point value; the index must be in range.
    pub(crate) fn add_fixed(&mut self, r: usize, c: usize, v: i64) {
        let flat = self.flat(r, c);
        for j in 0..self.depth {
            let b = self.bucket(j, r, c);
            let s = self.sign_hash[j].sign(flat);
            let slot = &mut self.tables[j * self.width + b];
            *slot = slot.wrapping_add(s * v);
        }
    }

    pub fn query(&self, index: u64) -> Result<f64> {
        let (r, c) = self.split(index)?;
        self.query_entry(r, c)
    }

    pub fn query_entry(&self, r: usize, c: usize) -> Result<f64> {
        self.check_entry(r, c)?;
        Ok(self.estimate_unchecked(r, c))
    }

    fn estimate_unchecked(&self, r: usize, c: usize) -> f64 {
        let flat = self.flat(r, c);
        let mut vals: Vec<f64> = (0..self.depth)
            .map(|j| from_fixed(self.sign_hash[j].sign(flat) * self.tables[j * self.width + self.bucket(j, r, c)]))
            .collect();
        median(&mut vals)
    }

    fn same_shape(&self, other: &Self) -> bool {
        (self.index_rows, self.index_cols, self.depth, self.width, self.seed)
            == (other.index_rows, other.index_cols, other.depth, other.width, other.seed)
    }

    /// Entrywise sum with a sketch of identical shape and seed.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("count-sketch shapes or seeds differ".into()));
        }
        for (a, b) in self.tables.iter_mut().zip(&other.tables) {
            *a = a.wrapping_add(*b);
        }
        Ok(())
    }

    /// Median over rows of the sum of squared buckets, an estimate of ‖x‖₂².
    pub fn f2_estimate(&self) -> f64 {
        let mut sums: Vec<f64> = self
            .tables
            .chunks(self.width)
            .map(|row| row.iter().map(|&v| from_fixed(v).powi(2)).sum())
            .collect();
        median(&mut sums)
    }

    /// All indices whose estimate has magnitude at least `tau`, sorted by
    /// `(row, col)`.
    pub fn decode(&self, tau: f64, mode: DecodeMode) -> Vec<RecoveredEntry> {
        match mode {
            DecodeMode::HotBuckets => self.decode_hot(tau),
            DecodeMode::FullScan => self.decode_full_scan(tau),
        }
    }

    fn decode_full_scan(&self, tau: f64) -> Vec<RecoveredEntry> {
        let mut out = Vec::new();
        for r in 0..self.index_rows {
            for c in 0..self.index_cols {
                let value = self.estimate_unchecked(r, c);
                if value.abs() >= tau {
                    out.push(RecoveredEntry { row: r, col: c, value });
                }
            }
        }
        out
    }

    fn bucket_index(&self) -> BucketIndex {
        let w = self.width;
        let mut idx = BucketIndex { row_class: Vec::new(), col_offsets: Vec::new(), cols: Vec::new(), col_class: Vec::new() };
        for j in 0..self.depth {
            idx.row_class.push((0..self.index_rows).map(|r| self.row_hash[j].bucket(r as u64, w) as u32).collect());
            let classes: Vec<u32> = (0..self.index_cols).map(|c| self.col_hash[j].bucket(c as u64, w) as u32).collect();
            let mut offsets = vec![0u32; w + 1];
            for &k in &classes {
                offsets[k as usize + 1] += 1;
            }
            for k in 0..w {
                offsets[k + 1] += offsets[k];
            }
            let mut fill = offsets.clone();
            let mut cols = vec![0u32; self.index_cols];
            for (c, &k) in classes.iter().enumerate() {
                cols[fill[k as usize] as usize] = c as u32;
                fill[k as usize] += 1;
            }
            idx.col_offsets.push(offsets);
            idx.cols.push(cols);
            idx.col_class.push(classes);
        }
        idx
    }

    // An index whose median has magnitude ≥ τ sees |bucket| ≥ τ in at least
    // ⌈d/2⌉ of the d rows, hence in one of the first d − ⌈d/2⌉ + 1 rows. So it
    // suffices to invert the hot buckets of those rows.
    fn decode_hot(&self, tau: f64) -> Vec<RecoveredEntry> {
        let (d, w) = (self.depth, self.width);
        let need = d.div_ceil(2);
        let probe = d - need + 1;
        let hot: Vec<bool> = self.tables.iter().map(|&v| from_fixed(v).abs() >= tau).collect();
        let hot_lists: Vec<Vec<usize>> = (0..probe).map(|j| (0..w).filter(|&b| hot[j * w + b]).collect()).collect();
        if hot_lists.iter().all(Vec::is_empty) {
            return Vec::new();
        }
        let idx = self.bucket_index();
        let (n_r, n_c) = (self.index_rows, self.index_cols);
        let mut candidates: Vec<u64> = Vec::new();
        let mut consider = |r: usize, c: usize, j: usize| {
            // already hot in row j; look for need − 1 more before too many misses
            let (mut hits, mut misses) = (1, 0);
            if need == 1 {
                candidates.push(self.flat(r, c));
                return;
            }
            for jj in (0..d).filter(|&jj| jj != j) {
                let k = (idx.row_class[jj][r] + idx.col_class[jj][c]) as usize;
                if hot[jj * w + if k >= w { k - w } else { k }] {
                    hits += 1;
                    if hits == need {
                        candidates.push(self.flat(r, c));
                        return;
                    }
                } else {
                    misses += 1;
                    if misses > d - need {
                        return;
                    }
                }
            }
        };
        for (j, list) in hot_lists.iter().enumerate() {
            let (offsets, cols, row_class, col_class) = (&idx.col_offsets[j], &idx.cols[j], &idx.row_class[j], &idx.col_class[j]);
            let hot_j = &hot[j * w..(j + 1) * w];
            // Inverting a hot bucket walks all rows; past this many hot
            // buckets a plain pass over the universe is cheaper.
            if list.len() as f64 * (1.0 + n_c as f64 / w as f64) >= n_c as f64 {
                for (r, &g) in row_class.iter().enumerate() {
                    for (c, &h) in col_class.iter().enumerate() {
                        let k = (g + h) as usize;
                        if hot_j[if k >= w { k - w } else { k }] {
                            consider(r, c, j);
                        }
                    }
                }
                continue;
            }
            for &b in list {
                for (r, &g) in row_class.iter().enumerate().take(n_r) {
                    let class = if b >= g as usize { b - g as usize } else { b + w - g as usize };
                    for &c in &cols[offsets[class] as usize..offsets[class + 1] as usize] {
                        consider(r, c as usize, j);
                    }
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        candidates
            .into_iter()
            .filter_map(|flat| {
                let (r, c) = ((flat / self.index_cols as u64) as usize, (flat % self.index_cols as u64) as usize);
                let value = self.estimate_unchecked(r, c);
                (value.abs() >= tau).then_some(RecoveredEntry { row: r, col: c, value })
            })
            .collect()
    }

    /// Self-describing little-endian layout: magic, version, shape, seed, then
    /// the accumulators row by row.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48 + 8 * self.tables.len());
        out.extend_from_slice(CS_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for v in [self.index_rows as u64, self.index_cols as u64, self.depth as u64, self.width as u64, self.seed] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&SCALE_BITS.to_le_bytes());
        for v in &self.tables {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader::new(bytes, CS_MAGIC)?;
        let (rows, cols, depth, width, seed) = (rd.u64()?, rd.u64()?, rd.u64()?, rd.u64()?, rd.u64()?);
        rd.scale()?;
        let mut cs = Self::new(rows as usize, cols as usize, depth as usize, width as usize, seed)?;
        for v in cs.tables.iter_mut() {
            *v = rd.i64()?;
        }
        rd.finish()?;
        Ok(cs)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != magic {
            return Err(Error::Decode("bad magic tag".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Decode(format!("unsupported format version {version}")));
        }
        Ok(Self { bytes, pos: 8 })
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| Error::Decode("truncated sketch".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take::<8>()?))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take::<8>()?))
    }

    fn scale(&mut self) -> Result<()> {
        let bits = u32::from_le_bytes(self.take::<4>()?);
        if bits != SCALE_BITS {
            return Err(Error::Decode(format!("fixed-point scale {bits} differs from {SCALE_BITS}")));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Decode("trailing bytes after sketch".into()));
        }
        Ok(())
    }
}

/// Second-moment sketch: `depth` rows of `width` signed buckets; the estimate
/// is the median over rows of the sum of squared buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct F2Sketch {
    domain: u64,
    depth: usize,
    width: usize,
    seed: u64,
    bucket_hash: Vec<PolyHash>,
    sign_hash: Vec<PolyHash>,
    counters: Vec<i64>,
}

impl F2Sketch {
    pub fn new(domain: u64, depth: usize, width: usize, seed: u64) -> Result<Self> {
        if domain == 0 || domain >= crate::hashing::MERSENNE_61 {
            return invalid(format!("domain {domain} out of range"));
        }
        if depth == 0 || width == 0 {
            return invalid(format!("depth {depth} and width {width} must be positive"));
        }
        let hashes = |kind: u64, k: usize| (0..depth).map(|j| PolyHash::new(derive_seed(seed, &[j as u64, kind]), k)).collect();
        Ok(Self {
            domain,
            depth,
            width,
            seed,
            bucket_hash: hashes(10, 2),
            sign_hash: hashes(11, 4),
            counters: vec![0; depth * width],
        })
    }

    /// Budget for a (1 ± ε) estimate: width ⌈8/ε²⌉, five rows.
    pub fn with_epsilon(domain: u64, epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return invalid(format!("epsilon {epsilon} must lie in (0, 1)"));
        }
        Self::new(domain, 5, (8.0 / (epsilon * epsilon)).ceil() as usize, seed)
    }

    pub fn accumulator_count(&self) -> usize {
        self.counters.len()
    }

    pub fn is_zero(&self) -> bool {
        self.counters.iter().all(|&v| v == 0)
    }

    pub fn update(&mut self, index: u64, delta: f64) -> Result<()> {
        if index >= self.domain {
            return Err(Error::IndexOutOfRange { row: index as usize, col: 0, n: self.domain as usize });
        }
        let v = to_fixed(delta)?;
        for j in 0..self.depth {
            let b = self.bucket_hash[j].bucket(index, self.width);
            let slot = &mut self.counters[j * self.width + b];
            *slot = slot.wrapping_add(self.sign_hash[j].sign(index) * v);
        }
        Ok(())
    }

    pub fn estimate(&self) -> f64 {
        let mut sums: Vec<f64> = self
            .counters
            .chunks(self.width)
            .map(|row| row.iter().map(|&v| from_fixed(v).powi(2)).sum())
            .collect();
        median(&mut sums)
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if (self.domain, self.depth, self.width, self.seed) != (other.domain, other.depth, other.width, other.seed) {
            return Err(Error::ShapeMismatch("F2 sketch shapes or seeds differ".into()));
        }
        for (a, b) in self.counters.iter_mut().zip(&other.counters) {
            *a = a.wrapping_add(*b);
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(44 + 8 * self.counters.len());
        out.extend_from_slice(F2_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for v in [self.domain, self.depth as u64, self.width as u64, self.seed] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&SCALE_BITS.to_le_bytes());
        for v in &self.counters {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader::new(bytes, F2_MAGIC)?;
        let (domain, depth, width, seed) = (rd.u64()?, rd.u64()?, rd.u64()?, rd.u64()?);
        rd.scale()?;
        let mut f2 = Self::new(domain, depth as usize, width as usize, seed)?;
        for v in f2.counters.iter_mut() {
            *v = rd.i64()?;
        }
        rd.finish()?;
        Ok(f2)
    }
}

pub const DEFAULT_C_R: f64 = 0.1;
/// Repetitions share the sampler's u-vector, so they only guard against
/// Count-Sketch failures and two are already enough at small `n`.
pub const MIN_REPS: usize = 1;
/// Margin, in bits, by which a majority of collisions with one recovered
/// entry must be rarer than one per universe element.
const FALSE_POSITIVE_BITS: f64 = 8.0;
pub const DEFAULT_C_W: f64 = 8.0;
pub const DEFAULT_C_PRIME: f64 = 0.5;
pub const MIN_EPSILON: f64 = 0.01;
pub const MAX_EPSILON: f64 = 1.0 / 3.0;

pub fn log2_ceil(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as usize
}

/// Shape of one precision sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub n: usize,
    pub epsilon: f64,
    /// Repetitions, each with its own Count-Sketch over the same `B`.
    pub reps: usize,
    /// Count-Sketch rows per repetition.
    pub depth: usize,
    /// Count-Sketch buckets per row.
    pub width: usize,
    /// Error parameter of the thresholding rule, entries below 2√(L'/w) are
    /// dropped.
    pub w: usize,
    pub c_prime: f64,
}

impl SamplerParams {
    /// `R = max(2, ⌈c_R log₂ n⌉)`, `w = ⌈c_w (ε⁻¹ log₂ n + ε⁻²)⌉`, width `4w`.
    ///
    /// The inner sketch spans all `n²` entries and a sampled entry can be
    /// scaled up by 2²⁰, so an unrelated index that shares its bucket in a
    /// majority of rows would be recovered with a huge spurious value. The
    /// depth is the smallest odd `d ≥ 3` with `W^{⌈d/2⌉} ≥ 2⁸ n²`, which keeps
    /// the expected number of such indices below 2⁻⁸·C(d, ⌈d/2⌉).
    pub fn with_constants(n: usize, epsilon: f64, c_r: f64, c_w: f64, c_prime: f64) -> Result<Self> {
        let lg = log2_ceil(n) as f64;
        let w = (c_w * (lg / epsilon + 1.0 / (epsilon * epsilon))).ceil() as usize;
        let width = 4 * w;
        let need = 2.0 * (n.max(2) as f64).log2() + FALSE_POSITIVE_BITS;
        let mut depth: usize = 3;
        while depth.div_ceil(2) as f64 * (width as f64).log2() < need {
            depth += 2;
        }
        let p = Self { n, epsilon, reps: ((c_r * lg).ceil() as usize).max(MIN_REPS), depth, width, w, c_prime };
        p.validate()?;
        Ok(p)
    }

    pub fn defaults(n: usize, epsilon: f64) -> Result<Self> {
        Self::with_constants(n, epsilon, DEFAULT_C_R, DEFAULT_C_W, DEFAULT_C_PRIME)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("n must be positive");
        }
        if !(MIN_EPSILON..MAX_EPSILON).contains(&self.epsilon) {
            return invalid(format!("epsilon {} must lie in [{MIN_EPSILON}, 1/3)", self.epsilon));
        }
        if self.reps == 0 || self.depth == 0 || self.width == 0 || self.w == 0 {
            return invalid("sampler sizes must be positive");
        }
        if !(self.c_prime > 0.0 && self.c_prime.is_finite()) {
            return invalid(format!("C' = {} must be positive", self.c_prime));
        }
        Ok(())
    }

    pub fn accumulator_count(&self) -> usize {
        self.reps * self.depth * self.width
    }
}

/// A sampled row: `entries` are the surviving entries rescaled back to the
/// scale of `A`, `ell` their squared norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSample {
    pub row: usize,
    pub entries: Vec<(usize, f64)>,
    pub ell: f64,
    pub repetition: usize,
}

/// Precision ℓ₂ sampler over the rows of an `n × n` turnstile matrix. Row `i`
/// is scaled by `1/√uᵢ` and all `n²` entries of the scaled matrix `B` are
/// hashed into a Count-Sketch. The repetitions share one u-vector, a pure
/// function of the seed, and differ in their Count-Sketch hashes.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionSampler {
    params: SamplerParams,
    seed: u64,
    u_seed: u64,
    u_override: Option<Vec<f64>>,
    reps: Vec<CountSketch>,
}

impl PrecisionSampler {
    pub fn new(params: SamplerParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let reps = (0..params.reps)
            .map(|r| CountSketch::new(params.n, params.n, params.depth, params.width, derive_seed(seed, &[r as u64, 1])))
            .collect::<Result<_>>()?;
        Ok(Self { params, seed, u_seed: derive_seed(seed, &[u64::MAX, 0]), u_override: None, reps })
    }

    /// Sampler with an explicit u-vector.
    pub fn with_u(params: SamplerParams, seed: u64, u: Vec<f64>) -> Result<Self> {
        if u.len() != params.n {
            return invalid(format!("u has length {} but n = {}", u.len(), params.n));
        }
        if let Some(v) = u.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return invalid(format!("u entry {v} is outside (0, 1]"));
        }
        let mut s = Self::new(params, seed)?;
        s.u_override = Some(u);
        Ok(s)
    }

    pub fn params(&self) -> &SamplerParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn u(&self, row: usize) -> f64 {
        match &self.u_override {
            Some(u) => u[row],
            None => unit_uniform(self.u_seed, row as u64).max(MIN_U),
        }
    }

    pub fn inner(&self, rep: usize) -> &CountSketch {
        &self.reps[rep]
    }

    pub fn accumulator_count(&self) -> usize {
        self.reps.iter().map(CountSketch::accumulator_count).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.reps.iter().all(CountSketch::is_zero)
    }

    pub fn update(&mut self, row: usize, col: usize, delta: f64) -> Result<()> {
        self.update_batch(&[(row, col, delta)])
    }

    /// Applies a batch one repetition at a time, which keeps each table hot
    /// in cache. The state is the same as after the updates one by one.
    pub fn update_batch(&mut self, updates: &[(usize, usize, f64)]) -> Result<()> {
        let n = self.params.n;
        let mut scaled = Vec::with_capacity(updates.len());
        for &(row, col, delta) in updates {
            if row >= n || col >= n {
                return Err(Error::IndexOutOfRange { row, col, n });
            }
            scaled.push((row, col, to_fixed(delta / self.u(row).sqrt())?));
        }
        for cs in &mut self.reps {
            for &(row, col, v) in &scaled {
                cs.add_fixed(row, col, v);
            }
        }
        Ok(())
    }

    /// Estimate of ‖B‖_F² for repetition `rep`, read off the inner sketch.
    pub fn f2_b(&self, rep: usize) -> f64 {
        self.reps[rep].f2_estimate()
    }

    pub fn threshold(&self, rep: usize) -> f64 {
        2.0 * (self.f2_b(rep) / self.params.w as f64).sqrt()
    }

    pub fn sample(&self, l: f64) -> Result<Option<RowSample>> {
        self.sample_with(l, DecodeMode::HotBuckets)
    }

    /// Tries the repetitions in order and returns the first whose thresholded
    /// row norms have a unique row at or above `C'·L/ε`.
    pub fn sample_with(&self, l: f64, mode: DecodeMode) -> Result<Option<RowSample>> {
        if !(l > 0.0 && l.is_finite()) {
            return invalid(format!("L = {l} must be positive"));
        }
        let cut = self.params.c_prime * l / self.params.epsilon;
        for rep in 0..self.reps.len() {
            let tau = self.threshold(rep);
            if tau <= 0.0 {
                continue;
            }
            let mut rows: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
            for e in self.reps[rep].decode(tau, mode) {
                rows.entry(e.row).or_default().push((e.col, e.value));
            }
            let mut heavy = rows.iter().filter(|(_, es)| es.iter().map(|(_, v)| v * v).sum::<f64>() >= cut);
            let (Some((&row, entries)), None) = (heavy.next(), heavy.next()) else {
                continue;
            };
            let scale = self.u(row).sqrt();
            let entries: Vec<(usize, f64)> = entries.iter().map(|&(c, v)| (c, v * scale)).collect();
            let ell = entries.iter().map(|(_, v)| v * v).sum();
            return Ok(Some(RowSample { row, entries, ell, repetition: rep }));
        }
        Ok(None)
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.params != other.params || self.seed != other.seed || self.u_override != other.u_override {
            return Err(Error::ShapeMismatch("precision samplers differ in shape, seed or u".into()));
        }
        for (a, b) in self.reps.iter_mut().zip(&other.reps) {
            a.merge(b)?;
        }
        Ok(())
    }
}
