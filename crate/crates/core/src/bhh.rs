//! Boolean Hidden Hypermatching instances, the reduction to the weight-n/2
//! variant, the matrix streams built from them and the distinguishing
//! experiments.
//!
//! An instance of `BHH⁰_{t,n}` is drawn through the reduction: a uniform
//! `x ∈ {0,1}^{n/2}` and hypermatching `M`, with `w` chosen so that
//! `Mx ⊕ w` is the case vector, are mapped to `x' = x‖x̄` and two hyperedges
//! per edge of `M`. The two hyperedges built from one edge hold `q` and
//! `t − q` ones and form a group; groups are independent and `q` follows
//! `p_t` restricted to the parity of the case. Blocks `2l` and `2l + 1` of
//! the instance are group `l`.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaplab::{gap_expectation, GapReport, Verdict};
use crate::hashing::derive_seed;
use crate::schatten::MatrixUpdate;
use crate::spectra::{eval_function, spectrum_block, BlockKind, BlockParams, SpectralFunction};

/// Environment variable capping the worker threads of the experiments.
pub const THREADS_ENV: &str = "SCHATTEN_STREAM_THREADS";
/// Relative tolerance of the zero-gap precondition.
pub const GAP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BhhCase {
    /// `Mx = 0^{n/t}`: every block has even weight.
    AllZero,
    /// `Mx = 1^{n/t}`: every block has odd weight.
    AllOne,
}

impl BhhCase {
    pub fn bit(self) -> bool {
        self == BhhCase::AllOne
    }

    pub fn name(self) -> &'static str {
        match self {
            BhhCase::AllZero => "even",
            BhhCase::AllOne => "odd",
        }
    }
}

impl FromStr for BhhCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "even" | "zero" | "allzero" | "0" => Ok(BhhCase::AllZero),
            "odd" | "one" | "allone" | "1" => Ok(BhhCase::AllOne),
            other => invalid(format!("unknown case '{other}', expected even or odd")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BhhInstance {
    pub t: usize,
    pub n: usize,
    pub x: Vec<bool>,
    /// `n/t` hyperedges of `t` coordinates each.
    pub matching: Vec<Vec<usize>>,
    pub case: BhhCase,
    pub seed: u64,
}

fn parity(x: &[bool], edge: &[usize]) -> bool {
    edge.iter().fold(false, |acc, &i| acc ^ x[i])
}

fn check_t(t: usize) -> Result<()> {
    if t < 2 || t % 2 == 1 {
        return invalid(format!("t = {t} must be an even integer at least 2"));
    }
    Ok(())
}

impl BhhInstance {
    /// Ones per block, in block order.
    pub fn block_weights(&self) -> Vec<usize> {
        self.matching.iter().map(|e| e.iter().filter(|&&i| self.x[i]).count()).collect()
    }

    /// `Mx`.
    pub fn parities(&self) -> Vec<bool> {
        self.matching.iter().map(|e| parity(&self.x, e)).collect()
    }

    /// Checks weight, matching and promise.
    pub fn validate(&self) -> Result<()> {
        check_t(self.t)?;
        if self.x.len() != self.n || self.matching.len() * self.t != self.n {
            return invalid("x and the matching disagree with n");
        }
        let mut seen = vec![false; self.n];
        for e in &self.matching {
            if e.len() != self.t {
                return invalid(format!("hyperedge of size {} in a {}-hypermatching", e.len(), self.t));
            }
            for &i in e {
                if i >= self.n || std::mem::replace(&mut seen[i], true) {
                    return invalid(format!("coordinate {i} is out of range or covered twice"));
                }
            }
        }
        if self.x.iter().filter(|&&b| b).count() * 2 != self.n {
            return invalid("x must have weight n/2");
        }
        if self.parities().iter().any(|&p| p != self.case.bit()) {
            return invalid("a block parity breaks the promise");
        }
        Ok(())
    }
}

/// `BHH_{t,n} → BHH⁰_{t,2n}`: `x' = x‖x̄` (coordinate `n + i` holds `x̄ᵢ`) and
/// two hyperedges per edge. With `w_l = 0` the edge and its complement copy;
/// with `w_l = 1` the first coordinate is swapped between the two. Since `t`
/// is even, both new edges have parity `(Mx)_l ⊕ w_l`.
pub fn reduce_bhh_to_bhh0(x: &[bool], matching: &[Vec<usize>], w: &[bool]) -> Result<(Vec<bool>, Vec<Vec<usize>>)> {
    let n = x.len();
    let t = matching.first().map_or(0, Vec::len);
    check_t(t)?;
    if matching.len() * t != n || w.len() != matching.len() {
        return invalid(format!("need |x| = t·|M| and |w| = |M|, got |x| = {n}, |M| = {}, |w| = {}", matching.len(), w.len()));
    }
    if matching.iter().any(|e| e.len() != t || e.iter().any(|&i| i >= n)) {
        return invalid("every hyperedge must hold t in-range coordinates");
    }
    let mut x2 = x.to_vec();
    x2.extend(x.iter().map(|b| !b));
    let mut m2 = Vec::with_capacity(2 * matching.len());
    for (e, &wl) in matching.iter().zip(w) {
        let mut a: Vec<usize> = e.clone();
        let mut b: Vec<usize> = e.iter().map(|i| i + n).collect();
        if wl {
            std::mem::swap(&mut a[0], &mut b[0]);
        }
        m2.push(a);
        m2.push(b);
    }
    Ok((x2, m2))
}

/// Uniform perfect `t`-hypermatching on `n` coordinates.
fn random_matching(n: usize, t: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm.chunks(t).map(<[usize]>::to_vec).collect()
}

pub fn sample_instance(t: usize, n: usize, case: BhhCase, seed: u64) -> Result<BhhInstance> {
    check_t(t)?;
    if n == 0 || n % (4 * t) != 0 {
        return invalid(format!("n = {n} must be a positive multiple of 4t = {}", 4 * t));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xB11]));
    let half = n / 2;
    let x: Vec<bool> = (0..half).map(|_| rng.gen()).collect();
    let matching = random_matching(half, t, &mut rng);
    let w: Vec<bool> = matching.iter().map(|e| parity(&x, e) ^ case.bit()).collect();
    let (x2, m2) = reduce_bhh_to_bhh0(&x, &matching, &w)?;
    // hide the x‖x̄ layout behind a uniform relabelling of the coordinates
    let mut relabel: Vec<usize> = (0..n).collect();
    relabel.shuffle(&mut rng);
    let mut x3 = vec![false; n];
    for (i, &b) in x2.iter().enumerate() {
        x3[relabel[i]] = b;
    }
    let matching = m2.into_iter().map(|e| e.into_iter().map(|i| relabel[i]).collect()).collect();
    let inst = BhhInstance { t, n, x: x3, matching, case, seed };
    inst.validate()?;
    Ok(inst)
}

/// One block `(index, q)` of the block-diagonal matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDescriptor {
    pub block: usize,
    pub q: usize,
}

/// The matrix stream of an instance: Alice's tentacle entries, then Bob's
/// clique entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardStream {
    pub dim: usize,
    pub t: usize,
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub kind: BlockKind,
    pub case: BhhCase,
    pub seed: u64,
    pub alice_part: Vec<MatrixUpdate>,
    pub bob_part: Vec<MatrixUpdate>,
    pub blocks: Vec<BlockDescriptor>,
}

/// Side of one block of the given kind.
pub fn block_side(kind: BlockKind, m: usize) -> usize {
    match kind {
        BlockKind::Asymmetric => 2 * m,
        BlockKind::SymmetricEvenP => m,
    }
}

/// Lays the instance out as a block-diagonal matrix stream.
///
/// Block `j` occupies indices `[j·s, (j+1)·s)` with `s` its side. For the
/// asymmetric kind the clique is the top-left `m × m` all-ones square and the
/// `r`-th coordinate of hyperedge `j`, when set, adds `√γ` at row `m + r`,
/// column `r` (tentacles attach to the first `t` clique vertices). For the
/// symmetric kind the clique is `1 1ᵀ − I` and a set coordinate adds a 1 on
/// the diagonal. Each part is shuffled by `order_seed`.
pub fn emit_stream(inst: &BhhInstance, m: usize, gamma: f64, kind: BlockKind, order_seed: u64) -> Result<HardStream> {
    inst.validate()?;
    if m < inst.t {
        return invalid(format!("clique size m = {m} must be at least t = {}", inst.t));
    }
    let side = block_side(kind, m);
    let dim = side.checked_mul(inst.matching.len()).ok_or_else(|| Error::Overflow("stream dimension".into()))?;
    match kind {
        BlockKind::Asymmetric if !(gamma > 0.0 && gamma.is_finite()) => return invalid(format!("gamma = {gamma} must be positive")),
        BlockKind::SymmetricEvenP if gamma != 1.0 => return invalid("symmetric blocks take gamma = 1"),
        _ => {}
    }
    let (mut alice, mut bob, mut blocks) = (Vec::new(), Vec::new(), Vec::new());
    for (j, edge) in inst.matching.iter().enumerate() {
        let base = j * side;
        for a in 0..m {
            for b in 0..m {
                if kind == BlockKind::Asymmetric || a != b {
                    bob.push(MatrixUpdate::new(base + a, base + b, 1.0));
                }
            }
        }
        for (r, &i) in edge.iter().enumerate() {
            if inst.x[i] {
                alice.push(match kind {
                    BlockKind::Asymmetric => MatrixUpdate::new(base + m + r, base + r, gamma.sqrt()),
                    BlockKind::SymmetricEvenP => MatrixUpdate::new(base + r, base + r, 1.0),
                });
            }
        }
        blocks.push(BlockDescriptor { block: j, q: edge.iter().filter(|&&i| inst.x[i]).count() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(order_seed, &[0x0D]));
    alice.shuffle(&mut rng);
    bob.shuffle(&mut rng);
    Ok(HardStream { dim, t: inst.t, n: inst.n, m, gamma, kind, case: inst.case, seed: inst.seed, alice_part: alice, bob_part: bob, blocks })
}

impl HardStream {
    pub fn updates(&self) -> impl Iterator<Item = &MatrixUpdate> {
        self.alice_part.iter().chain(&self.bob_part)
    }

    pub fn sum_q(&self) -> usize {
        self.blocks.iter().map(|b| b.q).sum()
    }

    pub fn block_params(&self) -> Result<Vec<BlockParams>> {
        self.blocks
            .iter()
            .map(|b| match self.kind {
                BlockKind::Asymmetric => BlockParams::asymmetric(self.m, b.q, self.gamma),
                BlockKind::SymmetricEvenP => BlockParams::symmetric(self.m, b.q),
            })
            .collect()
    }

    /// Text stream: `# key=value` header, then one `i j delta` line per
    /// update, Alice's part first.
    pub fn to_stream_text(&self) -> String {
        let mut out = String::new();
        let qs: Vec<String> = self.blocks.iter().map(|b| b.q.to_string()).collect();
        for (k, v) in [
            ("dim", self.dim.to_string()),
            ("source", "bhh".to_string()),
            ("t", self.t.to_string()),
            ("bhh_n", self.n.to_string()),
            ("m", self.m.to_string()),
            ("gamma", self.gamma.to_string()),
            ("kind", self.kind.to_string()),
            ("case", self.case.name().to_string()),
            ("seed", self.seed.to_string()),
            ("blocks", self.blocks.len().to_string()),
            ("sum_q", self.sum_q().to_string()),
            ("q", qs.join(",")),
            ("alice_updates", self.alice_part.len().to_string()),
            ("bob_updates", self.bob_part.len().to_string()),
        ] {
            let _ = writeln!(out, "# {k}={v}");
        }
        for u in self.updates() {
            let _ = writeln!(out, "{} {} {}", u.row, u.col, u.delta);
        }
        out
    }
}

/// Rayon pool sized by [`THREADS_ENV`] when it holds a positive integer.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => b = b.num_threads(k),
            _ => return invalid(format!("{THREADS_ENV} = '{v}' is not a positive integer")),
        }
    }
    b.build().map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Summary of one case of a distinguishing experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case: BhhCase,
    pub exact: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(n/2t)·A` for the even case and `(n/2t)·B` for the odd one.
    pub predicted_mean: f64,
    pub relative_mean_error: f64,
    /// Estimator outputs, when an estimator was supplied.
    pub estimates: Option<Vec<f64>>,
    pub max_estimate_relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub f: SpectralFunction,
    pub t: usize,
    pub m: usize,
    pub gamma: f64,
    pub kind: BlockKind,
    pub n: usize,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    /// Gap of the block-additive function the precondition was checked on.
    pub gap: GapReport,
    /// `A = E_{q∼𝓔(t)}(F_q + F_{t−q})`, per group.
    pub a: f64,
    /// `B = E_{q∼𝓞(t)}(F_q + F_{t−q})`, per group.
    pub b: f64,
    pub even: CaseSummary,
    pub odd: CaseSummary,
    /// Distance between the two exact-value ranges; positive iff disjoint.
    pub margin: f64,
    pub separated: bool,
}

/// Value estimator run on the stream of a trial; gets the trial seed.
pub type StreamEstimator<'a> = dyn Fn(&HardStream, u64) -> Result<f64> + Sync + 'a;

/// How `f(𝓜)` is obtained from the per-block data.
#[derive(Debug, Clone, Copy)]
enum Aggregate {
    /// `Σ F_{q_i}`.
    Additive,
    /// `s · (R/F − ln F)` with `R = Σ σ² ln σ²` and `F = ‖𝓜‖_F²`.
    NormalizedEntropy(f64),
}

struct BlockTable {
    /// `F_q` (or `σ² ln σ²` sums for the entropies) for `q = 0..=t`.
    value: Vec<f64>,
    frobenius: Vec<f64>,
    aggregate: Aggregate,
}

impl BlockTable {
    fn new(f: &SpectralFunction, t: usize, m: usize, gamma: f64, kind: BlockKind) -> Result<(Self, SpectralFunction)> {
        let (additive, aggregate) = match f {
            SpectralFunction::EntropyH => (SpectralFunction::EntropyRaw, Aggregate::NormalizedEntropy(1.0)),
            SpectralFunction::ShannonEntropy => (SpectralFunction::EntropyRaw, Aggregate::NormalizedEntropy(-1.0)),
            SpectralFunction::KyFan { .. } => {
                return invalid("Ky-Fan norms are not block-additive; use the Ky-Fan experiment");
            }
            other => (other.clone(), Aggregate::Additive),
        };
        let (mut value, mut frobenius) = (Vec::new(), Vec::new());
        for q in 0..=t {
            let params = match kind {
                BlockKind::Asymmetric => BlockParams::asymmetric(m, q, gamma)?,
                BlockKind::SymmetricEvenP => BlockParams::symmetric(m, q)?,
            };
            let s = spectrum_block(&params)?;
            value.push(eval_function(&additive, &s)?);
            frobenius.push(s.frobenius_sq());
        }
        Ok((Self { value, frobenius, aggregate }, additive))
    }

    fn total(&self, qs: impl Iterator<Item = usize> + Clone) -> f64 {
        let raw: f64 = qs.clone().map(|q| self.value[q]).sum();
        match self.aggregate {
            Aggregate::Additive => raw,
            Aggregate::NormalizedEntropy(sign) => {
                let fro: f64 = qs.map(|q| self.frobenius[q]).sum();
                sign * (raw / fro - fro.ln())
            }
        }
    }

    /// Maps a total of the additive proxy to the reported scale, for a
    /// matrix whose Frobenius norm is `fro`.
    fn map_total(&self, raw: f64, fro: f64) -> f64 {
        match self.aggregate {
            Aggregate::Additive => raw,
            Aggregate::NormalizedEntropy(sign) => sign * (raw / fro - fro.ln()),
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn distinguish_experiment(
    f: &SpectralFunction,
    t: usize,
    m: usize,
    gamma: f64,
    kind: BlockKind,
    n: usize,
    trials: usize,
    seed: u64,
    estimator: Option<&StreamEstimator<'_>>,
) -> Result<SeparationReport> {
    if trials == 0 {
        return invalid("trials must be positive");
    }
    check_t(t)?;
    if n == 0 || n % (4 * t) != 0 {
        return invalid(format!("n = {n} must be a positive multiple of 4t = {}", 4 * t));
    }
    let (table, additive) = BlockTable::new(f, t, m, gamma, kind)?;
    let gap = gap_expectation(&additive, t, m, gamma, kind, GAP_TOLERANCE)?;
    if let Verdict::Zero(tol) = gap.verdict {
        return Err(Error::ZeroGap { gap: gap.gap, tolerance: tol });
    }
    // q and t − q share a parity class and its law is symmetric, so each
    // group contributes twice the single-block expectation
    let (a, b) = (2.0 * gap.even_expectation, 2.0 * gap.odd_expectation);
    let groups = (n / (2 * t)) as f64;
    // ‖𝓜‖_F² is Σ(c + γ'q_i) with Σq_i = n/2, the same in both cases
    let fro = table.frobenius[0] * (n / t) as f64 + (table.frobenius[t] - table.frobenius[0]) / t as f64 * (n / 2) as f64;
    let pool = worker_pool()?;
    let run_case = |case: BhhCase| -> Result<CaseSummary> {
        let rows: Vec<(f64, Option<f64>)> = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let trial_seed = derive_seed(seed, &[case.bit() as u64, trial as u64]);
                    let inst = sample_instance(t, n, case, trial_seed)?;
                    let exact = table.total(inst.block_weights().into_iter());
                    let est = match estimator {
                        Some(e) => Some(e(&emit_stream(&inst, m, gamma, kind, trial_seed)?, trial_seed)?),
                        None => None,
                    };
                    Ok((exact, est))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let exact: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mean = exact.iter().sum::<f64>() / trials as f64;
        let per_group = if case == BhhCase::AllZero { a } else { b };
        let predicted_mean = table.map_total(groups * per_group, fro);
        let estimates: Option<Vec<f64>> = rows.iter().map(|r| r.1).collect();
        let max_estimate_relative_error = estimates
            .as_ref()
            .map(|es| es.iter().zip(&exact).map(|(e, x)| (e - x).abs() / x.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max));
        Ok(CaseSummary {
            case,
            min: exact.iter().copied().fold(f64::INFINITY, f64::min),
            max: exact.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            relative_mean_error: (mean - predicted_mean).abs() / predicted_mean.abs().max(f64::MIN_POSITIVE),
            mean,
            predicted_mean,
            exact,
            estimates,
            max_estimate_relative_error,
        })
    };
    let even = run_case(BhhCase::AllZero)?;
    let odd = run_case(BhhCase::AllOne)?;
    let margin = (even.min - odd.max).max(odd.min - even.max);
    Ok(SeparationReport {
        f: f.clone(),
        t,
        m,
        gamma,
        kind,
        n,
        dim: block_side(kind, m) * (n / t),
        trials,
        seed,
        gap,
        a,
        b,
        separated: margin > 0.0,
        margin,
        even,
        odd,
    })
}

/// Largest `t` with `1/(t·2ᵗ) ≥ α`.
pub fn kyfan_t(alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return invalid(format!("alpha = {alpha} must lie in (0, 1/2)"));
    }
    let mut t = 1;
    while 1.0 / ((t + 1) as f64 * 2f64.powi(t as i32 + 1)) >= alpha {
        t += 1;
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KyFanCase {
    pub case: BhhCase,
    /// Blocks holding the case's top weight (`m` even, `m − 1` odd), per trial.
    pub top_blocks: Vec<usize>,
    /// `Σ` of the `k` largest singular values, per trial.
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KyFanReport {
    pub alpha: f64,
    pub t: usize,
    pub m: usize,
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    /// Expected top-weight blocks, `(N/2m)/2^{m−2}` even and `(N/2m)·m/2^{m−2}` odd.
    pub predicted_top_even: f64,
    pub predicted_top_odd: f64,
    pub even: KyFanCase,
    pub odd: KyFanCase,
    pub margin: f64,
    pub separated: bool,
}

/// Ky-Fan `k`-norm on the symmetric instances with `m = t` the largest even
/// integer with `1/(t2ᵗ) ≥ α` and `k = ⌊αN⌋`: the even case has about
/// `N/(m2^{m−1})` blocks with `q = m`, whose top singular value `r₁(m)`
/// exceeds every value the odd case can produce.
pub fn kyfan_experiment(alpha: f64, n: usize, trials: usize, seed: u64) -> Result<KyFanReport> {
    let mut t = kyfan_t(alpha)?;
    if t % 2 == 1 {
        t -= 1;
    }
    check_t(t)?;
    if trials == 0 || n == 0 || n % (4 * t) != 0 {
        return invalid(format!("need trials > 0 and n a positive multiple of {}", 4 * t));
    }
    let m = t;
    let dim = m * (n / t);
    let k = ((alpha * dim as f64).floor() as usize).max(1);
    let spectra: Vec<Vec<f64>> =
        (0..=t).map(|q| Ok(spectrum_block(&BlockParams::symmetric(m, q)?)?.values().to_vec())).collect::<Result<_>>()?;
    let pool = worker_pool()?;
    let run_case = |case: BhhCase| -> Result<KyFanCase> {
        let top = if case == BhhCase::AllZero { m } else { m - 1 };
        let rows: Vec<(usize, f64)> = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let inst = sample_instance(t, n, case, derive_seed(seed, &[0xF, case.bit() as u64, trial as u64]))?;
                    let qs = inst.block_weights();
                    let mut all: Vec<f64> = qs.iter().flat_map(|&q| spectra[q].iter().copied()).collect();
                    all.sort_by(|x, y| y.total_cmp(x));
                    Ok((qs.iter().filter(|&&q| q == top).count(), all.iter().take(k).sum()))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
        Ok(KyFanCase {
            case,
            top_blocks: rows.iter().map(|r| r.0).collect(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            values,
        })
    };
    let even = run_case(BhhCase::AllZero)?;
    let odd = run_case(BhhCase::AllOne)?;
    let groups = dim as f64 / (2 * m) as f64;
    let scale = 2f64.powi(m as i32 - 2);
    let margin = (even.min - odd.max).max(odd.min - even.max);
    Ok(KyFanReport {
        alpha,
        t,
        m,
        n,
        dim,
        k,
        predicted_top_even: groups / scale,
        predicted_top_odd: groups * m as f64 / scale,
        even,
        odd,
        separated: margin > 0.0,
        margin,
    })
}
