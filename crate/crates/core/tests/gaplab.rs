use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use schatten_core::gaplab::*;
use schatten_core::spectra::{BlockKind, SpectralFunction};

fn power(p: f64) -> SpectralFunction {
    SpectralFunction::PowerP(p)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn combinatorics_examples() {
    assert_eq!(stirling2(4, 4).unwrap(), BigUint::one());
    assert_eq!(stirling2(1, 2).unwrap(), BigUint::zero());
    assert_eq!(catalan(3).unwrap(), 5);
    assert!(stirling2(65, 3).is_err());
    assert!(catalan(33).is_err());
    // largest supported values still exact
    assert_eq!(catalan(32).unwrap(), 55534064877048198);
    assert_eq!(stirling2(64, 63).unwrap(), binomial(64, 2));
}

#[test]
fn catalan_recurrence() {
    for n in 1..=32 {
        let sum: u128 = (0..n).map(|i| catalan(i).unwrap() as u128 * catalan(n - 1 - i).unwrap() as u128).sum();
        assert_eq!(sum, catalan(n).unwrap() as u128);
    }
}

#[test]
fn alternating_moment_examples() {
    assert_eq!(alternating_moment(2, 2).unwrap(), BigInt::from(2));
    assert_eq!(alternating_moment(2, 1).unwrap(), BigInt::zero());
    assert_eq!(alternating_moment(4, 4).unwrap(), BigInt::from(24));
    assert!(alternating_moment(21, 3).is_err());
}

#[test]
fn stirling_identity_and_degree_annihilation() {
    for m in 0..=20usize {
        let fact: BigInt = (1..=m).map(BigInt::from).product();
        for s in 0..=20usize {
            let lhs = alternating_moment(m, s).unwrap();
            let sign = if m % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            let rhs = sign * &fact * BigInt::from(stirling2(s, m).unwrap());
            assert_eq!(lhs, rhs, "m={m} s={s}");
            if s < m {
                assert!(lhs.is_zero());
            }
        }
    }
}

#[test]
fn parity_distribution_is_exact() {
    for m in 1..=64 {
        for parity in [Parity::Even, Parity::Odd] {
            let d = ParityDistribution::new(m, parity).unwrap();
            assert_eq!(d.total(), Ratio::one(), "m={m}");
            assert!(d.weights().iter().all(|(k, _)| Parity::of(*k) == parity && *k <= m));
        }
    }
}

#[test]
fn gap_examples() {
    let r = gap_expectation(&power(1.0), 2, 2, 1.0, BlockKind::Asymmetric, DEFAULT_GAP_TOLERANCE).unwrap();
    // mpmath, 40 digits
    assert!((r.gap + 0.17989866318191856).abs() < 1e-14);
    assert!((r.even_expectation - (2.0 + 5f64.sqrt() + 1.0) / 2.0).abs() < 1e-14);
    let odd = ((5.0 + 17f64.sqrt()) / 2.0).sqrt() + ((5.0 - 17f64.sqrt()) / 2.0).sqrt();
    assert!((r.odd_expectation - odd).abs() < 1e-14);
    assert_eq!(r.verdict, Verdict::NonZero);
    assert!((r.gap - (r.even_expectation - r.odd_expectation)).abs() < 1e-14);

    let r = gap_expectation(&power(2.0), 2, 2, 1.0, BlockKind::Asymmetric, DEFAULT_GAP_TOLERANCE).unwrap();
    assert!(matches!(r.verdict, Verdict::Zero(_)));
    assert!(r.gap.abs() < 1e-14);

    let r = gap_expectation(&power(4.0), 2, 2, 1.0, BlockKind::SymmetricEvenP, DEFAULT_GAP_TOLERANCE).unwrap();
    assert!((r.gap - 2.0).abs() < 1e-12);
    assert!((r.even_expectation - 9.0).abs() < 1e-12);
    assert!((r.odd_expectation - 7.0).abs() < 1e-12);

    let r = gap_expectation(&power(4.0), 4, 4, 1.0, BlockKind::SymmetricEvenP, DEFAULT_GAP_TOLERANCE).unwrap();
    assert!(matches!(r.verdict, Verdict::Zero(_)));
}

#[test]
fn gap_rejects_bad_input() {
    let f = power(1.0);
    assert!(gap_expectation(&f, 3, 4, 1.0, BlockKind::Asymmetric, 1e-10).is_err());
    assert!(gap_expectation(&f, 4, 2, 1.0, BlockKind::Asymmetric, 1e-10).is_err());
    assert!(gap_expectation(&f, 2, 13, 1.0, BlockKind::Asymmetric, 1e-10).is_err());
    assert!(gap_expectation(&f, 2, 4, 0.0, BlockKind::Asymmetric, 1e-10).is_err());
}

#[test]
fn gap_report_json_fields() {
    let r = gap_expectation(&power(1.0), 2, 2, 1.0, BlockKind::Asymmetric, DEFAULT_GAP_TOLERANCE).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in ["f", "t", "m", "gamma", "kind", "per_k", "even_expectation", "odd_expectation", "gap", "verdict", "tolerance"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["f"], "power:1");
    let back: GapReport = serde_json::from_value(v).unwrap();
    assert_eq!(back, r);
}

#[test]
fn even_power_threshold_on_symmetric_instance() {
    // nonzero exactly when t ≤ p/2; mpmath gives 2, 15, 82 and 6 for those cells
    let nonzero = [((4, 2), 2.0), ((6, 2), 15.0), ((8, 2), 82.0), ((8, 4), 6.0)];
    for p in [4usize, 6, 8] {
        for t in [2usize, 4, 6, 8] {
            let r = gap_expectation(&power(p as f64), t, t, 1.0, BlockKind::SymmetricEvenP, 1e-10).unwrap();
            let expect_nonzero = t <= p / 2;
            assert_eq!(r.verdict == Verdict::NonZero, expect_nonzero, "p={p} t={t} gap={}", r.gap);
            if let Some((_, g)) = nonzero.iter().find(|(k, _)| *k == (p, t)) {
                assert!(rel(r.gap, *g) < 1e-12);
            }
        }
    }
}

#[test]
fn non_even_powers_have_a_gap() {
    // mpmath values at γ = 0.5, m = t
    let want = [
        ((0.5, 2), -0.277165336521),
        ((0.5, 4), -0.0527057242205),
        ((1.0, 2), -0.135296194423),
        ((1.0, 4), -0.0192467296332),
        ((1.5, 2), -0.0486985062788),
        ((1.5, 4), -0.00508678247313),
        ((3.0, 2), 0.0264633195185),
        ((3.0, 4), 0.000959467110295),
        ((2.5, 2), 0.0224489698885),
        ((2.5, 4), 0.00118603346983),
    ];
    for ((p, t), g) in want {
        let r = gap_expectation(&power(p), t, t, 0.5, BlockKind::Asymmetric, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::NonZero, "p={p} t={t}");
        assert!(rel(r.gap, g) < 1e-10, "p={p} t={t}: {} vs {g}", r.gap);
    }
    for t in [2, 4] {
        let r = gap_expectation(&power(2.0), t, t, 0.5, BlockKind::Asymmetric, 1e-10).unwrap();
        assert!(matches!(r.verdict, Verdict::Zero(_)));
    }
}

#[test]
fn g_sums_examples() {
    let (g1, g2) = g_sums_direct(2.0, 2, 1.0).unwrap();
    assert!((g1 + g2).abs() < 1e-12);
    let (g1, g2) = g_sums_direct(0.5, 4, 0.01).unwrap();
    assert!((g1 + g2).abs() > 1e-3);
    assert!(g1.abs() < g2.abs());
    // mpmath
    assert!(rel(g1, -1.917280e-13) < 1e-5, "{g1}");
    assert!(rel(g2, -2.213845e-02) < 1e-6, "{g2}");
    let (g1, g2) = g_sums_direct(1.0, 4, 0.5).unwrap();
    assert!(rel(g1, -7.146449e-06) < 1e-6);
    assert!(rel(g2, 7.146449e-06) < 1e-6);
    assert!(g_sums_direct(0.5, 13, 0.1).is_err());
    assert!(g_sums_direct(0.5, 4, 16.0).is_err());
}

#[test]
fn single_root_sums_on_symmetric_instance() {
    // mpmath, 40 digits
    let want = [
        ((4.0, 8), 5.702e-05),
        ((4.0, 10), 4.892e-07),
        ((4.0, 12), 2.292e-09),
        ((6.0, 8), 2.654e-04),
        ((6.0, 10), 6.930e-06),
        ((6.0, 12), 6.106e-08),
    ];
    for ((p, m), g) in want {
        let (g1, g2) = symmetric_g_sums(p, m).unwrap();
        assert!(g2 != 0.0 && rel(g2, g) < 1e-3, "p={p} m={m}: {g2}");
        assert!(rel(g1, -g2) < 1e-6, "even p: G1 = −G2");
    }
}

#[test]
fn series_examples() {
    let c = series_coefficients(1.0, 4, 0.5, 40).unwrap();
    let (r1, _) = schatten_core::spectra::asymmetric_roots(4, 2.0, 0.5);
    assert!((c.partial_sum_a(2.0) - r1).abs() < 1e-8);
    assert_eq!(c.a[0], 16.0);
    assert_eq!(c.b[0], 0.5);
    let c = series_coefficients(0.5, 4, 0.5, 40).unwrap();
    assert!((c.a[0] - 4.0).abs() < 1e-15);
    assert!((c.b[0] - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn series_rejects_bad_input() {
    assert!(series_coefficients(0.5, 4, 0.5, 61).is_err());
    assert!(series_coefficients(0.5, 4, 0.5, 3).is_err());
    assert!(series_coefficients(0.5, 4, 0.0, 40).is_err());
    // γ = 1 at m = 2 lies outside the convergence disc: 4γm²/(m²−γ)² = 16/9
    assert!(series_coefficients(2.0, 2, 1.0, 40).is_err());
    assert!(series_coefficients(0.5, 4, 3.0, 40).is_err());
    assert!(series_coefficients(-1.0, 4, 0.5, 40).is_err());
}

#[test]
fn coefficient_formulas_agree() {
    for p in [0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.7] {
        for m in [2usize, 4, 6, 8, 12] {
            let w = gamma_window_ratio() * (m * m) as f64;
            for g in [0.01, 0.5, 0.9 * w] {
                if g >= w {
                    continue;
                }
                let c = series_coefficients(p, m, g, 60).unwrap();
                assert!(c.formula_discrepancy() <= 1e-9, "p={p} m={m} g={g}: {}", c.formula_discrepancy());
            }
        }
    }
}

#[test]
fn b_coefficients_match_hypergeometric_form() {
    for p in [0.5, 1.5, 2.5] {
        for m in [4usize, 8] {
            let c = series_coefficients(p, m, 0.01, 40).unwrap();
            for s in 1..=40 {
                let h = b_times_m_pow_hypergeometric(p, m, 0.01, s).unwrap();
                let direct = c.b[s] * (m as f64).powi(s as i32);
                assert!(rel(h, direct) < 1e-9, "p={p} m={m} s={s}: {h} vs {direct}");
            }
        }
    }
    assert!(b_times_m_pow_hypergeometric(1.0, 4, 0.5, 3).is_err());
}

#[test]
fn b_sign_is_constant_for_large_s() {
    let c = series_coefficients(0.5, 8, 0.01, 40).unwrap();
    let signs: Vec<bool> = c.b[8..=40].iter().map(|v| *v > 0.0).collect();
    assert!(signs.iter().all(|s| *s == signs[0]));
}

#[test]
fn series_g_sums_examples() {
    let c = series_coefficients(1.0, 4, 0.5, 40).unwrap();
    let (s1, s2) = series_g_sums(&c);
    let (d1, d2) = g_sums_direct(1.0, 4, 0.5).unwrap();
    assert!(rel(s1, d1) < 1e-6 && rel(s2, d2) < 1e-6);

    // p = 2 at a γ inside the convergence window
    for (m, g) in [(2usize, 0.5), (4, 0.5), (6, 1.0)] {
        let c = series_coefficients(2.0, m, g, 60).unwrap();
        let (s1, s2) = series_g_sums(&c);
        assert!((s1 + s2).abs() < 1e-9 * s1.abs().max(1.0), "m={m}: {s1} {s2}");
    }

    let signs: Vec<bool> = (12..=60)
        .map(|s_max| series_g_sums(&series_coefficients(0.5, 6, 0.01, s_max).unwrap()).1 < 0.0)
        .collect();
    assert!(signs.iter().all(|s| *s == signs[0]));
}

#[test]
fn series_and_direct_sums_agree_within_tail() {
    for p in [0.5, 1.0, 1.5, 2.0] {
        for m in [4usize, 6] {
            for g in [0.01, 0.5] {
                let c = series_coefficients(p, m, g, 60).unwrap();
                let (s1, s2) = series_g_sums(&c);
                let (d1, d2) = g_sums_direct(p, m, g).unwrap();
                let tail = truncation_tail(&c);
                let err = (s1 - d1).abs() + (s2 - d2).abs();
                let noise = 1e-13 * (m * m) as f64 * 2f64.powi(m as i32);
                assert!(err <= tail + noise, "p={p} m={m} g={g}: err {err:e} tail {tail:e}");
            }
        }
    }
}

#[test]
fn hypergeometric_examples() {
    assert_eq!(hyp2f1_terminating(0.0, 3.3, 1.7, 0.4).unwrap(), 1.0);
    assert!(hyp2f1_terminating(0.5, 1.5, 2.0, 0.1).is_err());
    // c = −1 is hit at the second term of a series of order 3
    assert!(hyp2f1_terminating(-3.0, 1.0, -1.0, 0.1).is_err());
    // (1 − x)^n for a = −n, b = c
    let v = hyp2f1_terminating(-5.0, 2.5, 2.5, 0.3).unwrap();
    assert!((v - 0.7f64.powi(5)).abs() < 1e-15);
}

#[test]
fn euler_transformation() {
    let mut count = 0;
    for p in [0.5, 1.5, 2.5, 0.25] {
        for (s, x) in [(3usize, 0.01), (4, 0.05), (6, 0.05), (7, 0.1), (9, 0.2)] {
            let s_f = s as f64;
            let lhs = hyp2f1_terminating(1.0 - s_f, 1.0 + p - 2.0 * s_f, 1.0 + p - s_f, x).unwrap();
            let rhs = (1.0 - x).powi(2 * s as i32 - 1) * hyp2f1_series(p, s_f, 1.0 + p - s_f, x).unwrap();
            assert!(rel(lhs, rhs) < 1e-10, "p={p} s={s} x={x}: {lhs} vs {rhs}");
            count += 1;
        }
    }
    assert_eq!(count, 20);
}

#[test]
fn chu_vandermonde_zeros() {
    let q = |v: i64| BigRational::from_integer(BigInt::from(v));
    let mut checked = 0;
    for s in 2i64..=12 {
        for j in 0..s {
            for k in 1..=(s - j - 1) {
                let p = 2 * s - k;
                let v = hyp2f1_terminating_exact(&q(1 + j - p), &q(1 + j - s), &q(2 + j - 2 * s), &BigRational::one()).unwrap();
                assert!(v.is_zero(), "s={s} j={j} k={k}: {v}");
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
    // the named instance
    let v = hyp2f1_terminating_exact(&q(1 + 1 - 8), &q(1 + 1 - 5), &q(2 + 1 - 10), &BigRational::one()).unwrap();
    assert!(v.is_zero());
    // and the float evaluator agrees
    assert!(hyp2f1_terminating(-6.0, -3.0, -7.0, 1.0).unwrap().abs() < 1e-15);
}

#[test]
fn entropy_gap_values() {
    // mpmath: Σ(−1)ᵏC(m,k) Σσ² ln σ²
    let want = [(2usize, 0.469579656428973), (4, 0.157725091972474), (6, 0.0845179461052476), (8, 0.0552450826564689), (12, 0.0310562812778348)];
    for (m, v) in want {
        let e = entropy_gap(m).unwrap();
        assert!(rel(e.total, v) < 1e-12, "m={m}: {}", e.total);
        if m >= 4 {
            assert_eq!(e.verdict, Some(Verdict::NonZero));
        } else {
            assert_eq!(e.verdict, None);
        }
    }
    assert!(entropy_gap(5).is_err());
    assert!(entropy_gap(14).is_err());
}

#[test]
fn entropy_gap_matches_block_enumeration() {
    for m in [2usize, 4, 6, 8, 10, 12] {
        let e = entropy_gap(m).unwrap();
        let r = gap_expectation(&SpectralFunction::EntropyRaw, m, m, 1.0, BlockKind::Asymmetric, 1e-10).unwrap();
        let scaled = e.total / 2f64.powi(m as i32 - 1);
        assert!((r.gap - scaled).abs() < 1e-12 * r.per_k[&m].abs(), "m={m}: {} vs {scaled}", r.gap);
    }
}

proptest! {
    #[test]
    fn gap_is_scaled_g_sum(p in 0.2f64..3.0, half_m in 1usize..6, g in 0.05f64..3.0) {
        let m = 2 * half_m;
        let (g1, g2) = g_sums_direct(p, m, g).unwrap();
        let r = gap_expectation(&power(2.0 * p), m, m, g, BlockKind::Asymmetric, 1e-10).unwrap();
        let scale = r.per_k.values().fold(1.0f64, |a, v| a.max(v.abs()));
        let want = (g1 + g2) / 2f64.powi(m as i32 - 1);
        prop_assert!((r.gap - want).abs() <= 1e-12 * scale * 2f64.powi(m as i32), "{} vs {}", r.gap, want);
    }

    #[test]
    fn gap_equals_difference_of_means(p in 0.2f64..5.0, t in prop::sample::select(vec![2usize, 4, 6]), extra in 0usize..3, g in 0.1f64..4.0) {
        let m = t + extra;
        let r = gap_expectation(&power(p), t, m, g, BlockKind::Asymmetric, 1e-10).unwrap();
        let scale = r.per_k.values().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!((r.gap - (r.even_expectation - r.odd_expectation)).abs() <= 1e-13 * scale);
    }

    #[test]
    fn partial_sums_converge_away_from_the_branch_point(p in 0.2f64..3.0, m in 4usize..9, g in 0.01f64..1.0) {
        let c = series_coefficients(p, m, g, 60).unwrap();
        for k in 0..=(m / 2) {
            let (r1, r2) = schatten_core::spectra::asymmetric_roots(m, k as f64, g);
            prop_assert!(rel(c.partial_sum_a(k as f64), r1.powf(p)) < 1e-10);
            prop_assert!(rel(c.partial_sum_b(k as f64), r2.powf(p)) < 1e-8);
        }
    }

    #[test]
    fn surjection_counts_fit_in_ratio(s in 0usize..=20, m in 0usize..=20) {
        let st = stirling2(s, m).unwrap().to_f64().unwrap();
        prop_assert!(st >= 0.0);
        if m <= s && m > 0 {
            prop_assert!(st >= 1.0);
        }
    }
}
