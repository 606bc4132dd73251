//! The block-additive gap calculus: exact enumeration of the even/odd gap,
//! the power-series coefficients of `r₁(k)ᵖ` and `r₂(k)ᵖ`, and the
//! combinatorial and hypergeometric identities they rest on.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{invalid, Error, Result};
use crate::spectra::{
    asymmetric_roots, eval_function, spectrum_block, symmetric_roots, BlockKind, BlockParams,
    SpectralFunction,
};

pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-10;
pub const MAX_SERIES_ORDER: usize = 60;
const MAX_GAP_M: usize = 12;
const FORMULA_AGREEMENT: f64 = 1e-9;

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn binomial_f64(n: u64, k: u64) -> f64 {
    binomial(n, k).to_f64().unwrap_or(f64::INFINITY)
}

/// A big integer rounded to double-double (exact below 2^106).
fn big_to_dd(v: &BigUint) -> TwoFloat {
    let hi = v.to_f64().unwrap_or(f64::INFINITY);
    if !hi.is_finite() || hi < 9.007_199_254_740_992e15 {
        return TwoFloat::from(hi);
    }
    let hi_big = BigInt::from_f64(hi).expect("finite");
    let lo = (BigInt::from(v.clone()) - hi_big).to_f64().unwrap_or(0.0);
    TwoFloat::new_add(hi, lo)
}

fn binomial_dd(n: u64, k: u64) -> TwoFloat {
    big_to_dd(&binomial(n, k))
}

/// Stirling number of the second kind `S(s, m)`.
pub fn stirling2(s: usize, m: usize) -> Result<BigUint> {
    if s > 64 {
        return Err(Error::Overflow(format!("stirling2({s}, {m}) is outside the supported range s ≤ 64")));
    }
    Ok(stirling2_unchecked(s, m))
}

fn stirling2_unchecked(s: usize, m: usize) -> BigUint {
    if m > s {
        return BigUint::zero();
    }
    // Row recurrence S(n, j) = j S(n−1, j) + S(n−1, j−1).
    let mut row = vec![BigUint::zero(); m + 1];
    row[0] = BigUint::one();
    for n in 1..=s {
        for j in (1..=m.min(n)).rev() {
            row[j] = &row[j] * BigUint::from(j) + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    row[m].clone()
}

/// `n`-th Catalan number.
pub fn catalan(n: usize) -> Result<u64> {
    if n > 32 {
        return Err(Error::Overflow(format!("catalan({n}) is outside the supported range n ≤ 32")));
    }
    let mut c = vec![0u64; n + 1];
    c[0] = 1;
    for i in 1..=n {
        c[i] = (0..i).map(|j| c[j] * c[i - 1 - j]).sum();
    }
    Ok(c[n])
}

/// `Σ_k C(m,k) kˢ (−1)ᵏ` by direct summation.
pub fn alternating_moment(m: usize, s: usize) -> Result<BigInt> {
    if m > 20 || s > 20 {
        return invalid(format!("alternating_moment({m}, {s}) needs m, s ≤ 20"));
    }
    let mut acc = BigInt::zero();
    for k in 0..=m {
        let term = BigInt::from(binomial(m as u64, k as u64)) * BigInt::from(k).pow(s as u32);
        if k % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(k: usize) -> Self {
        if k % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// `p_m(k) = C(m,k)/2^{m−1}` on one parity class.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityDistribution {
    m: usize,
    parity: Parity,
    weights: Vec<(usize, Ratio<u128>)>,
}

impl ParityDistribution {
    pub fn new(m: usize, parity: Parity) -> Result<Self> {
        if m == 0 || m > 100 {
            return invalid(format!("parity distribution needs 1 ≤ m ≤ 100, got {m}"));
        }
        let denom = 1u128 << (m - 1);
        let weights = (0..=m)
            .filter(|&k| Parity::of(k) == parity)
            .map(|k| {
                let c = binomial(m as u64, k as u64).to_u128().expect("C(m,k) < 2^100");
                (k, Ratio::new(c, denom))
            })
            .collect();
        Ok(ParityDistribution { m, parity, weights })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn weights(&self) -> &[(usize, Ratio<u128>)] {
        &self.weights
    }

    pub fn total(&self) -> Ratio<u128> {
        self.weights.iter().map(|(_, w)| *w).sum()
    }

    pub fn weight_f64(&self, k: usize) -> f64 {
        self.weights
            .iter()
            .find(|(j, _)| *j == k)
            .map_or(0.0, |(_, w)| *w.numer() as f64 / *w.denom() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    NonZero,
    Zero(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub f: SpectralFunction,
    pub t: usize,
    pub m: usize,
    pub gamma: f64,
    pub kind: BlockKind,
    pub per_k: BTreeMap<usize, f64>,
    pub even_expectation: f64,
    pub odd_expectation: f64,
    pub gap: f64,
    pub verdict: Verdict,
    /// Relative tolerance; the verdict compares `|gap|` with
    /// `tolerance · max(1, max_k |f(M_{m,k})|)`.
    pub tolerance: f64,
}

/// Exact enumeration of `E_{q∼𝓔(t)} f(M_{m,q}) − E_{q∼𝓞(t)} f(M_{m,q})`.
pub fn gap_expectation(
    f: &SpectralFunction,
    t: usize,
    m: usize,
    gamma: f64,
    kind: BlockKind,
    tolerance: f64,
) -> Result<GapReport> {
    if t % 2 == 1 {
        return invalid(format!("t = {t} must be even"));
    }
    if !(2 <= t && t <= m && m <= MAX_GAP_M) {
        return invalid(format!("need 2 ≤ t ≤ m ≤ {MAX_GAP_M}, got t = {t}, m = {m}"));
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return invalid("tolerance must be nonnegative");
    }
    f.validate()?;
    let mut per_k = BTreeMap::new();
    for k in 0..=t {
        let params = match kind {
            BlockKind::Asymmetric => BlockParams::asymmetric(m, k, gamma)?,
            BlockKind::SymmetricEvenP => BlockParams::symmetric(m, k)?,
        };
        per_k.insert(k, eval_function(f, &spectrum_block(&params)?)?);
    }
    let expectation = |parity| -> Result<f64> {
        let d = ParityDistribution::new(t, parity)?;
        Ok(d.weights().iter().map(|(k, _)| d.weight_f64(*k) * per_k[k]).sum())
    };
    let even_expectation = expectation(Parity::Even)?;
    let odd_expectation = expectation(Parity::Odd)?;
    // Alternating sum in double-double; the two means agree to many digits.
    let mut gap = TwoFloat::from(0.0);
    for (&k, &v) in &per_k {
        let w = binomial_f64(t as u64, k as u64) / (1u64 << (t - 1)) as f64;
        let term = TwoFloat::from(w) * TwoFloat::from(v);
        gap = if k % 2 == 0 { gap + term } else { gap - term };
    }
    let gap = f64::from(gap);
    let scale = per_k.values().fold(1.0f64, |a, v| a.max(v.abs()));
    let verdict = if gap.abs() > tolerance * scale { Verdict::NonZero } else { Verdict::Zero(tolerance) };
    Ok(GapReport {
        f: f.clone(),
        t,
        m,
        gamma,
        kind,
        per_k,
        even_expectation,
        odd_expectation,
        gap,
        verdict,
        tolerance,
    })
}

fn tf(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

// ln 2 to double-double precision. The transcendental functions shipped with
// twofloat are only good to about 1e-12, which is not enough once the
// alternating sums cancel.
const LN2_HI: f64 = std::f64::consts::LN_2;
const LN2_LO: f64 = 2.319_046_813_846_299_6e-17;

fn dd_exp(x: TwoFloat) -> TwoFloat {
    let xf: f64 = x.hi();
    if xf > 709.0 {
        return tf(f64::INFINITY);
    }
    if xf < -745.0 {
        return tf(0.0);
    }
    let k = (xf / LN2_HI).round();
    let r = x - tf(k) * TwoFloat::new_add(LN2_HI, LN2_LO);
    // exp(r) = exp(r / 2^10)^(2^10), Taylor series on the tiny argument.
    let r = r * tf(1.0 / 1024.0);
    let mut term = tf(1.0);
    let mut sum = tf(1.0);
    for n in 1..=20 {
        term = dd_div(term * r, tf(n as f64));
        sum += term;
        if term.hi().abs() < 1e-36 {
            break;
        }
    }
    for _ in 0..10 {
        sum = sum * sum;
    }
    sum * tf(2f64.powi(k as i32))
}

/// Double-double quotient. The `/` operator in twofloat only delivers about
/// 53 bits, so refine with two correction steps.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * tf(q1);
    let q2 = r.hi() / b.hi();
    let r = r - b * tf(q2);
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + tf(q3)
}

fn dd_ln(x: TwoFloat) -> TwoFloat {
    let y = tf(x.hi().ln());
    // One Newton step on exp(y) = x doubles the 53 correct bits.
    y + x * dd_exp(-y) - tf(1.0)
}

/// `xᵖ` in double-double, exact-ish for integer and half-integer `p`.
fn dd_pow(x: TwoFloat, p: f64) -> TwoFloat {
    if x == tf(0.0) {
        return tf(0.0);
    }
    if p.fract() == 0.0 && p.abs() < 1e6 {
        return x.powi(p as i32);
    }
    if (2.0 * p).fract() == 0.0 && p.abs() < 1e6 {
        return x.sqrt().powi((2.0 * p) as i32);
    }
    dd_exp(dd_ln(x) * tf(p))
}

/// Roots of the asymmetric quadratic in double-double.
fn dd_roots(m: usize, k: usize, gamma: f64) -> (TwoFloat, TwoFloat) {
    let mm = tf((m * m) as f64);
    let g = tf(gamma);
    let d = mm - g;
    let disc = (d * d + tf(4.0 * (k * m) as f64) * g).sqrt();
    let r1 = (mm + g + disc) * tf(0.5);
    let r2 = dd_div((mm - tf((k * m) as f64)) * g, r1);
    (r1, r2)
}

fn check_g_params(p: f64, m: usize, gamma: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return invalid(format!("p = {p} must be positive"));
    }
    if !(2..=MAX_GAP_M).contains(&m) {
        return invalid(format!("m = {m} must lie in [2, {MAX_GAP_M}]"));
    }
    if !(gamma > 0.0 && gamma < (m * m) as f64) {
        return invalid(format!("gamma = {gamma} must lie in (0, m²)"));
    }
    Ok(())
}

/// `G_i = Σ_k (−1)ᵏ C(m,k) r_i(k)ᵖ` with `r_i` the roots of the asymmetric
/// quadratic (eigenvalues of `MᵀM`, so `p` here is half the Schatten index).
pub fn g_sums_direct(p: f64, m: usize, gamma: f64) -> Result<(f64, f64)> {
    check_g_params(p, m, gamma)?;
    let (mut g1, mut g2) = (tf(0.0), tf(0.0));
    for k in 0..=m {
        let (r1, r2) = dd_roots(m, k, gamma);
        let c = binomial_dd(m as u64, k as u64);
        let (t1, t2) = (c * dd_pow(r1, p), c * dd_pow(r2, p));
        if k % 2 == 0 {
            g1 += t1;
            g2 += t2;
        } else {
            g1 -= t1;
            g2 -= t2;
        }
    }
    Ok((g1.into(), g2.into()))
}

/// The single-root sums for the symmetric block with the formal roots
/// `(√((m−1)²+4k) ± (m−1))/2` at every `k`, Schatten exponent `p`.
pub fn symmetric_g_sums(p: f64, m: usize) -> Result<(f64, f64)> {
    check_g_params(p, m, 1.0)?;
    let a = tf((m - 1) as f64);
    let (mut g1, mut g2) = (tf(0.0), tf(0.0));
    for k in 0..=m {
        let root = (a * a + tf(4.0 * k as f64)).sqrt();
        let r1 = (root + a) * tf(0.5);
        let r2 = dd_div(tf(k as f64), r1);
        let c = binomial_dd(m as u64, k as u64);
        let (t1, t2) = (c * dd_pow(r1, p), c * dd_pow(r2, p));
        if k % 2 == 0 {
            g1 += t1;
            g2 += t2;
        } else {
            g1 -= t1;
            g2 -= t2;
        }
    }
    Ok((g1.into(), g2.into()))
}

/// Largest `γ/m²` for which `4γkm/(m²−γ)² ≤ 1` at every `k ≤ m`.
pub fn gamma_window_ratio() -> f64 {
    3.0 - 2.0 * 2f64.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoefficients {
    pub p: f64,
    pub m: usize,
    pub gamma: f64,
    pub s_max: usize,
    /// `A_s` for `s = 0..=s_max` from the falling-product formula.
    pub a: Vec<f64>,
    /// `B_s` for `s = 0..=s_max` from the falling-product formula.
    pub b: Vec<f64>,
    /// The same coefficients from the Catalan-composition formula.
    pub a_catalan: Vec<f64>,
    pub b_catalan: Vec<f64>,
}

impl SeriesCoefficients {
    /// Largest relative disagreement between the two formulas.
    pub fn formula_discrepancy(&self) -> f64 {
        let pairs = self.a.iter().zip(&self.a_catalan).chain(self.b.iter().zip(&self.b_catalan));
        pairs.map(|(x, y)| rel_diff(*x, *y)).fold(0.0, f64::max)
    }

    /// `Σ_{s ≤ s_max} A_s kˢ`.
    pub fn partial_sum_a(&self, k: f64) -> f64 {
        horner(&self.a, k)
    }

    /// `Σ_{s ≤ s_max} B_s kˢ`.
    pub fn partial_sum_b(&self, k: f64) -> f64 {
        horner(&self.b, k)
    }
}

fn horner(c: &[f64], k: f64) -> f64 {
    let mut acc = tf(0.0);
    for &v in c.iter().rev() {
        acc = acc * tf(k) + tf(v);
    }
    acc.into()
}

fn rel_diff(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale < 1e-280 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

/// Generalised binomial `C(p, j)`.
fn gen_binomial(p: f64, j: usize) -> TwoFloat {
    let mut acc = tf(1.0);
    for i in 0..j {
        acc = dd_div(acc * (tf(p) - tf(i as f64)), tf((i + 1) as f64));
    }
    acc
}

/// `F_{p,s,i} = Π_{j<s−i}(p−j) · Π_{1≤j≤i}(p−2s+j)`, divided by `s!` to keep
/// the magnitude in range.
fn falling_f_over_factorial(p: f64, s: usize, i: usize) -> TwoFloat {
    let mut acc = tf(1.0);
    let mut div = 1usize;
    for j in 0..(s - i) {
        acc = dd_div(acc * (tf(p) - tf(j as f64)), tf(div as f64));
        div += 1;
    }
    for j in 1..=i {
        acc = dd_div(acc * (tf(p) - tf((2 * s) as f64) + tf(j as f64)), tf(div as f64));
        div += 1;
    }
    acc
}

/// `A_s` via the falling-product formula.
fn a_falling(p: f64, m: usize, gamma: f64, s: usize) -> TwoFloat {
    let mm = tf((m * m) as f64);
    if s == 0 {
        return dd_pow(mm, p);
    }
    let g = tf(gamma);
    let d = mm - g;
    let x = dd_div(g, mm);
    let y = dd_div(g * tf(m as f64), d * d);
    let mut sum = tf(0.0);
    for i in 0..s {
        let term = binomial_dd((s - 1) as u64, i as u64) * falling_f_over_factorial(p, s, i) * x.powi((s - 1 - i) as i32);
        sum = if i % 2 == 0 { sum + term } else { sum - term };
    }
    let pre = y.powi(s as i32) * d * dd_pow(mm, p - 1.0);
    let v = pre * sum;
    if s % 2 == 1 {
        v
    } else {
        -v
    }
}

/// `B_s` via the falling-product formula.
fn b_falling(p: f64, m: usize, gamma: f64, s: usize) -> TwoFloat {
    let g = tf(gamma);
    if s == 0 {
        return dd_pow(g, p);
    }
    let mm = tf((m * m) as f64);
    let d = mm - g;
    let x = dd_div(g, mm);
    let z = dd_div(mm * tf(m as f64), d * d);
    let mut sum = tf(0.0);
    for i in 0..s {
        let term = binomial_dd((s - 1) as u64, i as u64) * falling_f_over_factorial(p, s, i) * x.powi(i as i32);
        sum = if i % 2 == 0 { sum + term } else { sum - term };
    }
    let v = dd_div(dd_pow(g, p) * z.powi(s as i32) * d, mm) * sum;
    if s % 2 == 0 {
        v
    } else {
        -v
    }
}

/// `C(p,i+1) (i+1)/s C(2s−i−2, s−1)`, the weight of the `(i+1)`-fold
/// Catalan composition of `s`.
fn composition_weight(p: f64, s: usize, i: usize) -> TwoFloat {
    dd_div(gen_binomial(p, i + 1) * tf((i + 1) as f64), tf(s as f64))
        * binomial_dd((2 * s - i - 2) as u64, (s - 1) as u64)
}

/// `A_s` via the Catalan-composition formula.
fn a_catalan(p: f64, m: usize, gamma: f64, s: usize) -> TwoFloat {
    let mm = tf((m * m) as f64);
    if s == 0 {
        return dd_pow(mm, p);
    }
    let g = tf(gamma);
    let d = mm - g;
    let y = dd_div(g * tf(m as f64), d * d);
    let ratio = dd_div(d, mm);
    let mut sum = tf(0.0);
    for i in 0..s {
        let term = composition_weight(p, s, i) * ratio.powi((i + 1) as i32);
        sum = if i % 2 == 0 { sum + term } else { sum - term };
    }
    let v = dd_pow(mm, p) * y.powi(s as i32) * sum;
    if s % 2 == 1 {
        v
    } else {
        -v
    }
}

/// `B_s` via the Catalan-composition formula. Unlike the `r₁` case the
/// composition terms carry no alternating sign, because `r₂ = γ + (m²−γ)ψ`
/// enters with a plus.
fn b_catalan(p: f64, m: usize, gamma: f64, s: usize) -> TwoFloat {
    let g = tf(gamma);
    if s == 0 {
        return dd_pow(g, p);
    }
    let mm = tf((m * m) as f64);
    let d = mm - g;
    let y = dd_div(g * tf(m as f64), d * d);
    let u = dd_div(tf(m as f64), d);
    let mut sum = tf(0.0);
    for i in 0..s {
        sum += composition_weight(p, s, i) * u.powi((i + 1) as i32) * y.powi((s - 1 - i) as i32);
    }
    let v = dd_pow(g, p) * sum;
    if s % 2 == 0 {
        v
    } else {
        -v
    }
}

/// `B_s mˢ = (−1)ˢ γᵖ C(p,s) ₂F₁(p, s; p−s+1; γ/m²)`, valid for non-integer
/// `p`.
pub fn b_times_m_pow_hypergeometric(p: f64, m: usize, gamma: f64, s: usize) -> Result<f64> {
    if p.fract() == 0.0 && (s as f64) > p {
        return invalid("the hypergeometric form of B_s is singular for integer p < s");
    }
    let x = gamma / (m * m) as f64;
    let f = hyp2f1_series(p, s as f64, p - s as f64 + 1.0, x)?;
    let v = gamma.powf(p) * f64::from(gen_binomial(p, s)) * f;
    Ok(if s % 2 == 0 { v } else { -v })
}

/// Coefficients of `r₁(k)ᵖ = Σ A_s kˢ` and `r₂(k)ᵖ = Σ B_s kˢ`, by both
/// closed forms.
pub fn series_coefficients(p: f64, m: usize, gamma: f64, s_max: usize) -> Result<SeriesCoefficients> {
    if !(p > 0.0 && p.is_finite()) {
        return invalid(format!("p = {p} must be positive"));
    }
    if !(2..=MAX_GAP_M).contains(&m) {
        return invalid(format!("m = {m} must lie in [2, {MAX_GAP_M}]"));
    }
    if s_max > MAX_SERIES_ORDER || s_max < m {
        return invalid(format!("s_max = {s_max} must lie in [m, {MAX_SERIES_ORDER}]"));
    }
    let mm = (m * m) as f64;
    if !(gamma > 0.0 && gamma < gamma_window_ratio() * mm) {
        return invalid(format!(
            "gamma = {gamma} is outside the convergence window (0, {:.6}·m²) where 4γm²/(m²−γ)² < 1",
            gamma_window_ratio()
        ));
    }
    let mut c = SeriesCoefficients {
        p,
        m,
        gamma,
        s_max,
        a: Vec::with_capacity(s_max + 1),
        b: Vec::with_capacity(s_max + 1),
        a_catalan: Vec::with_capacity(s_max + 1),
        b_catalan: Vec::with_capacity(s_max + 1),
    };
    for s in 0..=s_max {
        c.a.push(a_falling(p, m, gamma, s).into());
        c.b.push(b_falling(p, m, gamma, s).into());
        c.a_catalan.push(a_catalan(p, m, gamma, s).into());
        c.b_catalan.push(b_catalan(p, m, gamma, s).into());
    }
    if let Some(v) = c.a.iter().chain(&c.b).find(|v| !v.is_finite()) {
        return invalid(format!("non-finite coefficient {v}"));
    }
    let disc = c.formula_discrepancy();
    if disc > FORMULA_AGREEMENT {
        return invalid(format!("coefficient formulas disagree by {disc:e}"));
    }
    Ok(c)
}

/// `m! S(s,m)` in double-double.
fn surjections(s: usize, m: usize) -> TwoFloat {
    let mut fact = BigUint::one();
    for i in 2..=m {
        fact *= i;
    }
    big_to_dd(&(stirling2_unchecked(s, m) * fact))
}

/// Truncated `G_i = (−1)ᵐ m! Σ_{s=m}^{s_max} S(s,m) {A_s, B_s}`.
pub fn series_g_sums(c: &SeriesCoefficients) -> (f64, f64) {
    let (mut g1, mut g2) = (tf(0.0), tf(0.0));
    for s in c.m..=c.s_max {
        let w = surjections(s, c.m);
        g1 += w * tf(c.a[s]);
        g2 += w * tf(c.b[s]);
    }
    if c.m % 2 == 1 {
        (-f64::from(g1), -f64::from(g2))
    } else {
        (g1.into(), g2.into())
    }
}

/// Estimate of `Σ_{s > s_max} mˢ (|A_s| + |B_s|)`, which bounds the
/// truncation error of [`series_g_sums`] since `m! S(s,m) ≤ mˢ`.
pub fn truncation_tail(c: &SeriesCoefficients) -> f64 {
    let m = c.m as f64;
    let extra_geometric = 120;
    let mut tail = 0.0;
    for s in c.s_max + 1..=c.s_max + extra_geometric {
        tail += m.powi(s as i32) * f64::from(a_catalan(c.p, c.m, c.gamma, s)).abs();
    }
    if c.p.fract() == 0.0 {
        for s in c.s_max + 1..=c.s_max + extra_geometric {
            tail += m.powi(s as i32) * f64::from(b_catalan(c.p, c.m, c.gamma, s)).abs();
        }
        return tail;
    }
    // Non-integer p: r₂ᵖ is singular at k = m, so mˢ|B_s| decays only like a
    // power of s. Sum a long stretch and extrapolate the power law.
    let end = c.s_max + 4000;
    let mut last = 0.0;
    let mut mid = 0.0;
    for s in c.s_max + 1..=end {
        let v = b_times_m_pow_hypergeometric(c.p, c.m, c.gamma, s).map(f64::abs).unwrap_or(0.0);
        tail += v;
        if s == (c.s_max + end) / 2 {
            mid = v;
        }
        last = v;
    }
    let (s_mid, s_end) = (((c.s_max + end) / 2) as f64, end as f64);
    if mid > 0.0 && last > 0.0 {
        // Locally the fitted exponent overshoots the asymptotic 1 + p set by
        // the (m − k)ᵖ branch point, which would understate the remainder.
        let decay = ((mid / last).ln() / (s_end / s_mid).ln()).min(1.0 + c.p);
        tail += if decay > 1.0 { last * s_end / (decay - 1.0) } else { f64::INFINITY };
    }
    tail
}

/// Terminating `₂F₁(a, b; c; x)`: `a` or `b` must be a nonpositive integer.
pub fn hyp2f1_terminating(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    let n = terminating_order(a, b)?;
    if c <= 0.0 && c.fract() == 0.0 && (-c as u64) < n {
        return invalid(format!("c = {c} hits a zero denominator before the series terminates"));
    }
    let mut term = tf(1.0);
    let mut sum = tf(1.0);
    for k in 0..n {
        let kf = k as f64;
        term = dd_div(term * tf(a + kf) * tf(b + kf), tf(c + kf) * tf(kf + 1.0)) * tf(x);
        sum += term;
    }
    Ok(sum.into())
}

fn terminating_order(a: f64, b: f64) -> Result<u64> {
    let order = |v: f64| (v <= 0.0 && v.fract() == 0.0).then(|| (-v) as u64);
    match (order(a), order(b)) {
        (Some(x), Some(y)) => Ok(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Ok(x),
        (None, None) => invalid(format!("₂F₁({a}, {b}; ·; ·) does not terminate")),
    }
}

/// Terminating `₂F₁` over exact rationals.
pub fn hyp2f1_terminating_exact(
    a: &BigRational,
    b: &BigRational,
    c: &BigRational,
    x: &BigRational,
) -> Result<BigRational> {
    let order = |v: &BigRational| {
        (v.is_integer() && !v.is_positive()).then(|| (-v.to_integer()).to_u64()).flatten()
    };
    let n = match (order(a), order(b)) {
        (Some(p), Some(q)) => p.min(q),
        (Some(p), None) | (None, Some(p)) => p,
        (None, None) => return invalid("series does not terminate"),
    };
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for k in 0..n {
        let kq = BigRational::from_integer(BigInt::from(k));
        let den = (c + &kq) * (&kq + BigRational::one());
        if den.is_zero() {
            return invalid("zero denominator before termination");
        }
        term = term * (a + &kq) * (b + &kq) / den * x;
        sum += &term;
    }
    Ok(sum)
}

/// `₂F₁(a, b; c; x)` by direct summation for `|x| < 1`.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    if c <= 0.0 && c.fract() == 0.0 && terminating_order(a, b).map_or(true, |n| n > (-c) as u64) {
        return invalid(format!("c = {c} is a nonpositive integer"));
    }
    if let Ok(n) = terminating_order(a, b) {
        return hyp2f1_terminating(a, b, c, x).or_else(|_| {
            invalid(format!("terminating series of order {n} is singular"))
        });
    }
    if x.abs() >= 1.0 {
        return invalid(format!("|x| = {} must be below 1", x.abs()));
    }
    let mut term = tf(1.0);
    let mut sum = tf(1.0);
    // Terms may grow while c + k < 0, so only stop once past that region.
    let settle = (a.abs() + b.abs() + c.abs()) as usize + 10;
    let mut quiet = 0;
    for k in 0..200_000usize {
        let kf = k as f64;
        term = dd_div(term * tf(a + kf) * tf(b + kf), tf(c + kf) * tf(kf + 1.0)) * tf(x);
        sum += term;
        if k > settle && f64::from(term).abs() <= 1e-30 * f64::from(sum).abs().max(1e-300) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(sum.into());
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NoConvergence { sweeps: 200_000 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyGap {
    pub m: usize,
    pub g1: f64,
    pub g2: f64,
    pub total: f64,
    /// Absent below `m = 4`, where no separation is claimed.
    pub verdict: Option<Verdict>,
}

pub const ENTROPY_TOLERANCE: f64 = 1e-12;

/// `G_i = Σ_k (−1)ᵏ C(m,k) r_i(k) ln r_i(k)` at `γ = 1`.
pub fn entropy_gap(m: usize) -> Result<EntropyGap> {
    if m % 2 == 1 || !(2..=MAX_GAP_M).contains(&m) {
        return invalid(format!("m = {m} must be even and in [2, {MAX_GAP_M}]"));
    }
    let xlnx = |r: TwoFloat| if r == tf(0.0) { tf(0.0) } else { r * dd_ln(r) };
    let (mut g1, mut g2) = (tf(0.0), tf(0.0));
    for k in 0..=m {
        let (r1, r2) = dd_roots(m, k, 1.0);
        let c = binomial_dd(m as u64, k as u64);
        let (t1, t2) = (c * xlnx(r1), c * xlnx(r2));
        if k % 2 == 0 {
            g1 += t1;
            g2 += t2;
        } else {
            g1 -= t1;
            g2 -= t2;
        }
    }
    let (g1, g2): (f64, f64) = (g1.into(), g2.into());
    let total = g1 + g2;
    let verdict = (m >= 4).then(|| {
        if total.abs() > ENTROPY_TOLERANCE {
            Verdict::NonZero
        } else {
            Verdict::Zero(ENTROPY_TOLERANCE)
        }
    });
    Ok(EntropyGap { m, g1, g2, total, verdict })
}

/// `r_i(k)` in plain double precision, for callers outside this module.
pub fn roots(kind: BlockKind, m: usize, k: usize, gamma: f64) -> (f64, f64) {
    match kind {
        BlockKind::Asymmetric => asymmetric_roots(m, k as f64, gamma),
        BlockKind::SymmetricEvenP => symmetric_roots(m, k as f64),
    }
}
