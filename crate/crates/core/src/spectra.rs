//! Closed-form spectra of the hard-instance blocks, a dense SVD oracle and
//! the spectral functions evaluated on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Largest square matrix accepted by [`svd_oracle`].
pub const ORACLE_MAX_DIM: usize = 512;
const ORACLE_TOL: f64 = 1e-12;
const ORACLE_MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    /// `[[1 1ᵀ, 0], [√γ D, 0]]`, dimension 2m.
    Asymmetric,
    /// `1 1ᵀ − I + D`, dimension m.
    SymmetricEvenP,
}

impl FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asym" | "asymmetric" => Ok(BlockKind::Asymmetric),
            "sym" | "symmetric" | "symmetric-even-p" => Ok(BlockKind::SymmetricEvenP),
            other => invalid(format!("unknown block kind '{other}'")),
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockKind::Asymmetric => f.write_str("asymmetric"),
            BlockKind::SymmetricEvenP => f.write_str("symmetric"),
        }
    }
}

/// Parameters of one block `M_{m,k}`. `k` counts the tentacles attached to
/// the clique; `gamma` is the squared tentacle weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub m: usize,
    pub k: usize,
    pub gamma: f64,
    pub kind: BlockKind,
}

impl BlockParams {
    pub fn asymmetric(m: usize, k: usize, gamma: f64) -> Result<Self> {
        let p = BlockParams { m, k, gamma, kind: BlockKind::Asymmetric };
        p.validate()?;
        Ok(p)
    }

    pub fn symmetric(m: usize, k: usize) -> Result<Self> {
        let p = BlockParams { m, k, gamma: 1.0, kind: BlockKind::SymmetricEvenP };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return invalid(format!("block dimension m = {} must be at least 2", self.m));
        }
        if self.k > self.m {
            return invalid(format!("tentacle count k = {} exceeds m = {}", self.k, self.m));
        }
        match self.kind {
            BlockKind::Asymmetric => {
                if !(self.gamma > 0.0 && self.gamma.is_finite()) {
                    return invalid(format!("gamma = {} must be positive", self.gamma));
                }
            }
            BlockKind::SymmetricEvenP => {
                if self.gamma != 1.0 {
                    return invalid("symmetric blocks take no tentacle weight (gamma must be 1)");
                }
            }
        }
        Ok(())
    }

    /// Side length of the explicit block.
    pub fn dim(&self) -> usize {
        match self.kind {
            BlockKind::Asymmetric => 2 * self.m,
            BlockKind::SymmetricEvenP => self.m,
        }
    }
}

/// Singular values in nonincreasing order, padded with zeros up to `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    dim: usize,
}

impl Spectrum {
    /// Builds a spectrum from arbitrary nonnegative values; sorts them and
    /// pads with zeros.
    pub fn new(mut values: Vec<f64>, dim: usize) -> Result<Self> {
        if values.len() > dim {
            return Err(Error::ShapeMismatch(format!(
                "{} singular values exceed dimension {dim}",
                values.len()
            )));
        }
        for v in values.iter_mut() {
            if !v.is_finite() || *v < -1e-12 {
                return invalid(format!("singular value {v} is not a finite nonnegative number"));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        values.resize(dim, 0.0);
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Spectrum { values, dim })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The strictly positive part of the spectrum.
    pub fn nonzero(&self) -> &[f64] {
        let end = self.values.iter().position(|&v| v == 0.0).unwrap_or(self.values.len());
        &self.values[..end]
    }

    /// Number of values above `tol` times the largest one.
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().filter(|&&v| v > tol * top.max(f64::MIN_POSITIVE)).count()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Roots `r₁ ≥ r₂` of `x² − (m²+γ)x + (m²−km)γ`, the eigenvalues of `MᵀM`
/// restricted to the span of the clique indicator.
pub fn asymmetric_roots(m: usize, k: f64, gamma: f64) -> (f64, f64) {
    let m = m as f64;
    let sum = m * m + gamma;
    let diff = m * m - gamma;
    let disc = (diff * diff + 4.0 * gamma * k * m).max(0.0).sqrt();
    let r1 = 0.5 * (sum + disc);
    // r₂ from the product avoids cancellation when γ ≪ m².
    let product = (m * m - k * m) * gamma;
    let r2 = if r1 > 0.0 { product / r1 } else { 0.0 };
    (r1, r2.max(0.0))
}

/// `r₁,₂ = (√((m−1)²+4k) ± (m−1))/2`.
pub fn symmetric_roots(m: usize, k: f64) -> (f64, f64) {
    let a = (m as f64) - 1.0;
    let root = (a * a + 4.0 * k).sqrt();
    let r1 = 0.5 * (root + a);
    // r₁r₂ = k
    let r2 = if r1 > 0.0 { k / r1 } else { 0.0 };
    (r1, r2)
}

pub fn spectrum_asymmetric(params: &BlockParams) -> Result<Spectrum> {
    params.validate()?;
    if params.kind != BlockKind::Asymmetric {
        return invalid("spectrum_asymmetric needs an asymmetric block");
    }
    let BlockParams { m, k, gamma, .. } = *params;
    let mut vals = Vec::with_capacity(m + 1);
    if k == 0 {
        vals.push(m as f64);
    } else if k == m {
        vals.push(((m * m) as f64 + gamma).sqrt());
        vals.extend(std::iter::repeat(gamma.sqrt()).take(m - 1));
    } else {
        let (r1, r2) = asymmetric_roots(m, k as f64, gamma);
        vals.push(r1.sqrt());
        vals.push(r2.sqrt());
        vals.extend(std::iter::repeat(gamma.sqrt()).take(k - 1));
    }
    Spectrum::new(vals, 2 * m)
}

pub fn spectrum_symmetric(params: &BlockParams) -> Result<Spectrum> {
    params.validate()?;
    if params.kind != BlockKind::SymmetricEvenP {
        return invalid("spectrum_symmetric needs a symmetric block");
    }
    let BlockParams { m, k, .. } = *params;
    let mut vals = Vec::with_capacity(m);
    if k == m {
        vals.push(m as f64);
    } else if k == 0 {
        vals.push((m - 1) as f64);
        vals.extend(std::iter::repeat(1.0).take(m - 1));
    } else {
        let (r1, r2) = symmetric_roots(m, k as f64);
        vals.push(r1);
        vals.push(r2);
        vals.extend(std::iter::repeat(1.0).take(m - k - 1));
    }
    Spectrum::new(vals, m)
}

pub fn spectrum_block(params: &BlockParams) -> Result<Spectrum> {
    match params.kind {
        BlockKind::Asymmetric => spectrum_asymmetric(params),
        BlockKind::SymmetricEvenP => spectrum_symmetric(params),
    }
}

/// Multiset union of the block spectra.
pub fn spectrum_block_diagonal(blocks: &[BlockParams]) -> Result<Spectrum> {
    if blocks.is_empty() {
        return invalid("block list is empty");
    }
    let mut vals = Vec::new();
    let mut dim = 0;
    for b in blocks {
        let s = spectrum_block(b)?;
        vals.extend_from_slice(s.nonzero());
        dim += s.dim();
    }
    Spectrum::new(vals, dim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix { n_rows, n_cols, entries: vec![0.0; n_rows * n_cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    r.len()
                )));
            }
            entries.extend_from_slice(r);
        }
        Self::from_vec(n_rows, n_cols, entries)
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {n_rows}x{n_cols} matrix",
                entries.len()
            )));
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite()) {
            return invalid(format!("matrix entry {v} is not finite"));
        }
        Ok(DenseMatrix { n_rows, n_cols, entries })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n_cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n_cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// `selfᵀ · self`.
    pub fn gram_cols(&self) -> DenseMatrix {
        let n = self.n_cols;
        let mut g = DenseMatrix::zeros(n, n);
        for i in 0..self.n_rows {
            let r = self.row(i);
            for a in 0..n {
                if r[a] == 0.0 {
                    continue;
                }
                let ra = r[a];
                let out = &mut g.entries[a * n..(a + 1) * n];
                for (o, &rb) in out.iter_mut().zip(r) {
                    *o += ra * rb;
                }
            }
        }
        g
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for l in 0..self.n_cols {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.entries[i * other.n_cols..(i + 1) * other.n_cols];
                for (d, &b) in dst.iter_mut().zip(other.row(l)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).sum()
    }

    /// Parses the text format: a header line `n_rows n_cols` followed by one
    /// whitespace-separated row per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) =
            lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::Parse { line: hl, message: "header must be 'n_rows n_cols'".into() });
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse { line: hl, message: format!("{s}: {e}") })
        };
        let (n_rows, n_cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        let mut seen = 0;
        for (ln, l) in lines {
            if seen == n_rows {
                return Err(Error::Parse { line: ln, message: "more rows than declared".into() });
            }
            let before = entries.len();
            for tok in l.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|e| Error::Parse { line: ln, message: format!("{tok}: {e}") })?;
                if !v.is_finite() {
                    return Err(Error::Parse { line: ln, message: format!("{tok} is not finite") });
                }
                entries.push(v);
            }
            if entries.len() - before != n_cols {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("expected {n_cols} entries, found {}", entries.len() - before),
                });
            }
            seen += 1;
        }
        if seen != n_rows {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("expected {n_rows} rows, found {seen}"),
            });
        }
        Self::from_vec(n_rows, n_cols, entries)
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.n_rows, self.n_cols)?;
        for i in 0..self.n_rows {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Explicit dense block.
pub fn build_block(params: &BlockParams) -> Result<DenseMatrix> {
    params.validate()?;
    let m = params.m;
    match params.kind {
        BlockKind::Asymmetric => {
            let mut a = DenseMatrix::zeros(2 * m, 2 * m);
            for i in 0..m {
                for j in 0..m {
                    a.set(i, j, 1.0);
                }
            }
            let w = params.gamma.sqrt();
            for r in 0..params.k {
                a.set(m + r, r, w);
            }
            Ok(a)
        }
        BlockKind::SymmetricEvenP => {
            let mut a = DenseMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    a.set(i, j, if i == j { 0.0 } else { 1.0 });
                }
            }
            for r in 0..params.k {
                a.set(r, r, 1.0);
            }
            Ok(a)
        }
    }
}

/// Singular values of a square matrix by one-sided Jacobi rotations.
pub fn svd_oracle(a: &DenseMatrix) -> Result<Spectrum> {
    let n = a.n_rows;
    if a.n_cols != n {
        return Err(Error::ShapeMismatch(format!("oracle needs a square matrix, got {}x{}", n, a.n_cols)));
    }
    if n > ORACLE_MAX_DIM {
        return invalid(format!("oracle accepts at most {ORACLE_MAX_DIM}x{ORACLE_MAX_DIM}, got {n}x{n}"));
    }
    // Columns stored contiguously.
    let mut cols = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cols[j * n + i] = a.get(i, j);
        }
    }
    let mut norms: Vec<f64> = (0..n).map(|j| dot(&cols[j * n..(j + 1) * n], &cols[j * n..(j + 1) * n])).collect();
    // Columns this small are rounding residue of a rank deficiency.
    let floor = 1e-28 * norms.iter().sum::<f64>();
    let mut converged = n < 2;
    for _ in 0..ORACLE_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let (head, tail) = cols.split_at_mut(q * n);
                let cp = &mut head[p * n..(p + 1) * n];
                let cq = &mut tail[..n];
                let g = dot(cp, cq);
                let rel = g.abs() / (alpha * beta).sqrt();
                if rel <= ORACLE_TOL {
                    continue;
                }
                off = off.max(rel);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
                norms[p] = dot(cp, cp);
                norms[q] = dot(cq, cq);
            }
        }
        converged = off <= ORACLE_TOL;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: ORACLE_MAX_SWEEPS });
    }
    Spectrum::new(norms.iter().map(|v| v.sqrt()).collect(), n)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MEstimatorKind {
    L1L2,
    GemanMcClure,
    Fair,
    Welsch,
    Huber,
    Tukey,
    Cauchy,
}

impl MEstimatorKind {
    const ALL: [(MEstimatorKind, &'static str); 7] = [
        (MEstimatorKind::L1L2, "l1l2"),
        (MEstimatorKind::GemanMcClure, "geman-mcclure"),
        (MEstimatorKind::Fair, "fair"),
        (MEstimatorKind::Welsch, "welsch"),
        (MEstimatorKind::Huber, "huber"),
        (MEstimatorKind::Tukey, "tukey"),
        (MEstimatorKind::Cauchy, "cauchy"),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(k, _)| *k == self).map(|(_, n)| *n).unwrap_or("?")
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(_, n)| *n == s).map(|(k, _)| *k)
    }

    /// `ρ(x)` with tuning constant `c` (called `k` for Huber).
    pub fn rho(self, x: f64, c: f64) -> f64 {
        match self {
            MEstimatorKind::L1L2 => 2.0 * ((1.0 + 0.5 * x * x).sqrt() - 1.0),
            MEstimatorKind::GemanMcClure => 0.5 * x * x / (1.0 + x * x),
            MEstimatorKind::Fair => c * c * (x / c - (x / c).ln_1p()),
            MEstimatorKind::Welsch => 0.5 * c * c * (1.0 - (-(x * x) / (c * c)).exp()),
            MEstimatorKind::Huber => {
                if x <= c {
                    0.5 * x * x
                } else {
                    c * (x - 0.5 * c)
                }
            }
            MEstimatorKind::Tukey => {
                if x <= c {
                    let u = 1.0 - x * x / (c * c);
                    c * c / 6.0 * (1.0 - u * u * u)
                } else {
                    c * c / 6.0
                }
            }
            MEstimatorKind::Cauchy => 0.5 * c * c * (x * x / (c * c)).ln_1p(),
        }
    }
}

/// Functions of the singular values.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralFunction {
    /// `Σ σᵖ`.
    PowerP(f64),
    /// `Σ h(σ/‖σ‖₂)` with `h(x) = x² ln x²`.
    EntropyH,
    /// `Σ σ² ln σ²`, the unnormalised form. Block-diagonal additive, so it is
    /// the one the gap calculus works with.
    EntropyRaw,
    /// `−Σ q ln q` with `q = σ²/‖σ‖₂²`.
    ShannonEntropy,
    /// Sum of `inner(σᵢ)` over the `k` largest values.
    KyFan { k: usize, inner: Box<SpectralFunction> },
    Shrinker { variant: u8, alpha: f64 },
    MEstimator { kind: MEstimatorKind, param: f64 },
}

impl SpectralFunction {
    pub fn identity() -> Self {
        SpectralFunction::PowerP(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralFunction::PowerP(p) if !(*p > 0.0 && p.is_finite()) => {
                invalid(format!("power p = {p} must be positive"))
            }
            SpectralFunction::KyFan { k, inner } => {
                if *k < 1 {
                    return invalid("Ky-Fan index k must be at least 1");
                }
                if !inner.is_pointwise() {
                    return invalid("Ky-Fan inner function must act on single values");
                }
                inner.validate()
            }
            SpectralFunction::Shrinker { variant, alpha } => {
                if !(1..=3).contains(variant) {
                    return invalid(format!("shrinker variant {variant} must be 1, 2 or 3"));
                }
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return invalid(format!("shrinker alpha = {alpha} must be positive"));
                }
                Ok(())
            }
            SpectralFunction::MEstimator { param, .. } if !(*param > 0.0 && param.is_finite()) => {
                invalid(format!("M-estimator constant {param} must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// True when the function is `Σ φ(σᵢ)` for a scalar `φ`.
    pub fn is_pointwise(&self) -> bool {
        matches!(
            self,
            SpectralFunction::PowerP(_)
                | SpectralFunction::EntropyRaw
                | SpectralFunction::Shrinker { .. }
                | SpectralFunction::MEstimator { .. }
        )
    }

    /// The scalar `φ` of a pointwise function.
    pub fn scalar(&self, x: f64) -> Option<f64> {
        let v = match self {
            SpectralFunction::PowerP(p) => {
                if x == 0.0 {
                    0.0
                } else {
                    x.powf(*p)
                }
            }
            SpectralFunction::EntropyRaw => h(x),
            SpectralFunction::Shrinker { variant, alpha } => shrinker(*variant, *alpha, x),
            SpectralFunction::MEstimator { kind, param } => kind.rho(x, *param),
            _ => return None,
        };
        Some(v)
    }
}

/// `h(x) = x² ln x²`, continuous at 0.
pub fn h(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        let x2 = x * x;
        x2 * x2.ln()
    }
}

/// The optimal shrinkers; zero below the bulk edge `1 + √α`.
pub fn shrinker(variant: u8, alpha: f64, x: f64) -> f64 {
    if x < 1.0 + alpha.sqrt() {
        return 0.0;
    }
    let a = x * x - alpha - 1.0;
    // (x²−α−1)² − 4α factored so that it vanishes exactly at the edge.
    let sa = alpha.sqrt();
    let lo = 1.0 - sa;
    let disc = ((x - 1.0 - sa) * (x + 1.0 + sa) * (x * x - lo * lo)).max(0.0).sqrt();
    let eta2 = || ((a + disc) / 2.0).sqrt();
    match variant {
        1 => disc / x,
        2 => eta2(),
        _ => {
            let e = eta2();
            if e == 0.0 {
                return 0.0;
            }
            let e2 = e * e;
            (e2 * e2 - alpha - alpha * x * e).max(0.0) / (x * e2)
        }
    }
}

pub fn eval_function(f: &SpectralFunction, s: &Spectrum) -> Result<f64> {
    f.validate()?;
    let vals = s.values();
    match f {
        SpectralFunction::EntropyH | SpectralFunction::ShannonEntropy => {
            let norm_sq = s.frobenius_sq();
            if norm_sq == 0.0 {
                return invalid("entropy of an all-zero spectrum is undefined");
            }
            let neg: f64 = vals
                .iter()
                .map(|&v| {
                    let q = v * v / norm_sq;
                    if q == 0.0 {
                        0.0
                    } else {
                        q * q.ln()
                    }
                })
                .sum();
            Ok(if matches!(f, SpectralFunction::EntropyH) { neg } else { -neg })
        }
        SpectralFunction::KyFan { k, inner } => {
            Ok(vals.iter().take(*k).map(|&v| inner.scalar(v).unwrap_or(0.0)).sum())
        }
        _ => Ok(vals.iter().map(|&v| f.scalar(v).unwrap_or(0.0)).sum()),
    }
}

impl fmt::Display for SpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralFunction::PowerP(p) => write!(f, "power:{p}"),
            SpectralFunction::EntropyH => f.write_str("entropy"),
            SpectralFunction::EntropyRaw => f.write_str("entropy-raw"),
            SpectralFunction::ShannonEntropy => f.write_str("shannon"),
            SpectralFunction::KyFan { k, inner } => {
                if **inner == SpectralFunction::identity() {
                    write!(f, "kyfan:{k}")
                } else {
                    write!(f, "kyfan:{k}:{inner}")
                }
            }
            SpectralFunction::Shrinker { variant, alpha } => write!(f, "shrinker:{variant}:{alpha}"),
            SpectralFunction::MEstimator { kind, param } => write!(f, "mest:{}:{param}", kind.name()),
        }
    }
}

impl FromStr for SpectralFunction {
    type Err = Error;

    /// Accepts `power:P`, `entropy`, `entropy-raw`, `shannon`, `kyfan:K`,
    /// `kyfan:K:<inner>`, `shrinker:V:ALPHA`, `mest:NAME` and `mest:NAME:C`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidParameter(format!("spectral function '{s}': {why}"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad("expected a number"));
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let f = match (head.to_ascii_lowercase().as_str(), rest) {
            ("power", Some(p)) => SpectralFunction::PowerP(num(p)?),
            ("entropy", None) => SpectralFunction::EntropyH,
            ("entropy-raw", None) => SpectralFunction::EntropyRaw,
            ("shannon", None) => SpectralFunction::ShannonEntropy,
            ("kyfan", Some(r)) => {
                let (k, inner) = match r.split_once(':') {
                    Some((k, inner)) => (k, inner.parse()?),
                    None => (r, SpectralFunction::identity()),
                };
                let k = k.parse::<usize>().map_err(|_| bad("expected an integer k"))?;
                SpectralFunction::KyFan { k, inner: Box::new(inner) }
            }
            ("shrinker", Some(r)) => {
                let (v, a) = r.split_once(':').ok_or_else(|| bad("expected shrinker:V:ALPHA"))?;
                let variant = v.parse::<u8>().map_err(|_| bad("expected variant 1, 2 or 3"))?;
                SpectralFunction::Shrinker { variant, alpha: num(a)? }
            }
            ("mest", Some(r)) => {
                let (name, c) = match r.split_once(':') {
                    Some((n, c)) => (n, num(c)?),
                    None => (r, 1.0),
                };
                let kind = MEstimatorKind::from_name(&name.to_ascii_lowercase())
                    .ok_or_else(|| bad("unknown M-estimator"))?;
                SpectralFunction::MEstimator { kind, param: c }
            }
            _ => return Err(bad("unrecognised form")),
        };
        f.validate()?;
        Ok(f)
    }
}

impl Serialize for SpectralFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpectralFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
