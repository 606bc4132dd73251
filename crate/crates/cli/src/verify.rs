//! Numerical identity suites run by `schatten verify`.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use schatten_core::gaplab::{
    alternating_moment, entropy_gap, g_sums_direct, gap_expectation, hyp2f1_series, hyp2f1_terminating,
    hyp2f1_terminating_exact, series_coefficients, series_g_sums, stirling2, Verdict, ENTROPY_TOLERANCE,
};
use schatten_core::spectra::{asymmetric_roots, BlockKind, SpectralFunction};
use schatten_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SERIES_S_MAX: usize = 60;
pub const COEFFICIENT_TOLERANCE: f64 = 1e-9;
pub const PARTIAL_SUM_TOLERANCE: f64 = 1e-8;
pub const G_SUM_TOLERANCE: f64 = 1e-6;
pub const EULER_TOLERANCE: f64 = 1e-10;
pub const STIRLING_MAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Series,
    Hypergeom,
    Stirling,
    Entropy,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "series" => Suite::Series,
            "hypergeom" => Suite::Hypergeom,
            "stirling" => Suite::Stirling,
            "entropy" => Suite::Entropy,
            "all" => Suite::All,
            other => return Err(Error::InvalidParameter(format!("unknown suite '{other}'"))),
        })
    }
}

/// One identity at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: Suite,
    pub identity: String,
    pub params: String,
    /// Largest deviation observed; counts for the exact identities.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(suite: Suite, identity: &str, params: String, max_deviation: f64, tolerance: f64) -> Self {
        let passed = max_deviation <= tolerance;
        Self { suite, identity: identity.into(), params, max_deviation, tolerance, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Parameter grid of the series suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesGrid {
    pub ps: Vec<f64>,
    pub ms: Vec<usize>,
    pub gamma: f64,
}

impl Default for SeriesGrid {
    fn default() -> Self {
        Self { ps: vec![0.5, 1.0], ms: vec![4, 6], gamma: 0.5 }
    }
}

/// Grid of the entropy suite.
pub const ENTROPY_MS: [usize; 5] = [4, 6, 8, 10, 12];

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn series_suite(grid: &SeriesGrid) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &p in &grid.ps {
        for &m in &grid.ms {
            let c = series_coefficients(p, m, grid.gamma, SERIES_S_MAX)?;
            let params = format!("p={p} m={m} gamma={} s_max={SERIES_S_MAX}", grid.gamma);
            out.push(Check::new(Suite::Series, "A_s/B_s dual formulas", params.clone(), c.formula_discrepancy(), COEFFICIENT_TOLERANCE));
            let (mut dev_a, mut dev_b) = (0.0f64, 0.0f64);
            for k in 0..=m {
                let (r1, r2) = asymmetric_roots(m, k as f64, grid.gamma);
                // relative above 1, absolute below, so r₂(m) = 0 is measurable
                dev_a = dev_a.max((c.partial_sum_a(k as f64) - r1.powf(p)).abs() / r1.powf(p).max(1.0));
                dev_b = dev_b.max((c.partial_sum_b(k as f64) - r2.powf(p)).abs() / r2.powf(p).max(1.0));
            }
            out.push(Check::new(Suite::Series, "partial sums of A_s k^s reproduce r1^p, k <= m", params.clone(), dev_a, PARTIAL_SUM_TOLERANCE));
            out.push(Check::new(Suite::Series, "partial sums of B_s k^s reproduce r2^p, k <= m", params.clone(), dev_b, PARTIAL_SUM_TOLERANCE));
            let (s1, s2) = series_g_sums(&c);
            let (d1, d2) = g_sums_direct(p, m, grid.gamma)?;
            out.push(Check::new(Suite::Series, "series G1, G2 match direct sums", params, rel(s1, d1).max(rel(s2, d2)), G_SUM_TOLERANCE));
        }
    }
    let (p, m, gamma) = (0.5, 8, 0.01);
    let c = series_coefficients(p, m, gamma, 40)?;
    let first = c.b[m] > 0.0;
    let flips = c.b[m..=40].iter().filter(|v| (**v > 0.0) != first).count();
    out.push(Check::new(Suite::Series, "B_s sign constant for s in [m, 40]", format!("p={p} m={m} gamma={gamma}"), flips as f64, 0.0));
    Ok(out)
}

pub fn hypergeom_suite() -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    let mut points = 0;
    for p in [0.5, 1.5, 2.5, 0.25] {
        for (s, x) in [(3usize, 0.01), (4, 0.05), (6, 0.05), (7, 0.1), (9, 0.2)] {
            let sf = s as f64;
            let lhs = hyp2f1_terminating(1.0 - sf, 1.0 + p - 2.0 * sf, 1.0 + p - sf, x)?;
            let rhs = (1.0 - x).powi(2 * s as i32 - 1) * hyp2f1_series(p, sf, 1.0 + p - sf, x)?;
            worst = worst.max(rel(lhs, rhs));
            points += 1;
        }
    }
    let q = |v: i64| BigRational::from_integer(BigInt::from(v));
    let (mut nonzero, mut cases) = (0usize, 0usize);
    for s in 2i64..=12 {
        for j in 0..s {
            for k in 1..=(s - j - 1) {
                let p = 2 * s - k;
                let v = hyp2f1_terminating_exact(&q(1 + j - p), &q(1 + j - s), &q(2 + j - 2 * s), &BigRational::one())?;
                nonzero += usize::from(!v.is_zero());
                cases += 1;
            }
        }
    }
    Ok(vec![
        Check::new(Suite::Hypergeom, "Euler transformation", format!("{points} grid points"), worst, EULER_TOLERANCE),
        Check::new(
            Suite::Hypergeom,
            "Chu-Vandermonde zeros 2F1(1+j-p, 1+j-s; 2+j-2s; 1) = 0",
            format!("{cases} cases, s in [2, 12], p = 2s - k"),
            nonzero as f64,
            0.0,
        ),
    ])
}

pub fn stirling_suite() -> Result<Vec<Check>> {
    let mut mismatches = 0usize;
    for m in 0..=STIRLING_MAX {
        let fact: BigInt = (1..=m).map(BigInt::from).product();
        let sign = if m % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        for s in 0..=STIRLING_MAX {
            let rhs = &sign * &fact * BigInt::from(stirling2(s, m)?);
            mismatches += usize::from(alternating_moment(m, s)? != rhs);
        }
    }
    Ok(vec![Check::new(
        Suite::Stirling,
        "sum_k (-1)^k C(m,k) k^s = (-1)^m m! S(s,m)",
        format!("0 <= m, s <= {STIRLING_MAX}"),
        mismatches as f64,
        0.0,
    )])
}

pub fn entropy_suite(ms: &[usize]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &m in ms {
        let e = entropy_gap(m)?;
        let nonzero = matches!(e.verdict, Some(Verdict::NonZero));
        out.push(Check::new(
            Suite::Entropy,
            "G1 + G2 nonzero",
            format!("m={m} G1+G2={:e}", e.total),
            if nonzero { 0.0 } else { 1.0 },
            0.0,
        ));
        let r = gap_expectation(&SpectralFunction::EntropyRaw, m, m, 1.0, BlockKind::Asymmetric, 1e-10)?;
        let scaled = e.total / 2f64.powi(m as i32 - 1);
        let scale = r.per_k.values().fold(1.0f64, |a, v| a.max(v.abs()));
        out.push(Check::new(
            Suite::Entropy,
            "G1 + G2 equals 2^(m-1) times the block-enumeration gap",
            format!("m={m}"),
            (r.gap - scaled).abs() / scale,
            ENTROPY_TOLERANCE,
        ));
    }
    Ok(out)
}

pub fn run_suite(suite: Suite, grid: &SeriesGrid, entropy_ms: &[usize]) -> Result<VerifyReport> {
    let checks = match suite {
        Suite::Series => series_suite(grid)?,
        Suite::Hypergeom => hypergeom_suite()?,
        Suite::Stirling => stirling_suite()?,
        Suite::Entropy => entropy_suite(entropy_ms)?,
        Suite::All => {
            let mut all = series_suite(grid)?;
            all.extend(hypergeom_suite()?);
            all.extend(stirling_suite()?);
            all.extend(entropy_suite(entropy_ms)?);
            all
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { suite, checks, passed })
}
