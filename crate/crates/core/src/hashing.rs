//! Seeded hash families and the seed-splitting scheme.
//!
//! Every random choice in the crate flows from a 64-bit master seed. A child
//! seed is obtained with [`derive_seed`], which folds a path of component ids
//! through splitmix64, so `derive_seed(s, &[a, b])` names substream `b` of
//! component `a`. Hash functions are polynomials over GF(2⁶¹ − 1) whose
//! coefficients are drawn from a splitmix64 stream; a degree-(k−1) polynomial
//! is k-wise independent over the field.

use serde::{Deserialize, Serialize};

pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// One step of the splitmix64 generator, used as a 64-bit mixing function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the component path `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c.wrapping_add(0x632B_E59B_D9B4_E019))))
}

/// Uniform draw in the open interval (0, 1), a pure function of `(seed, i)`.
pub fn unit_uniform(seed: u64, i: u64) -> f64 {
    let bits = splitmix64(splitmix64(seed ^ 0xA076_1D64_78BD_642F) ^ i) >> 11;
    (bits as f64 + 0.5) / (1u64 << 53) as f64
}

fn reduce(x: u128) -> u64 {
    let lo = (x as u64) & MERSENNE_61;
    let hi = (x >> 61) as u64;
    let s = lo + (hi & MERSENNE_61) + (hi >> 61);
    let s = (s & MERSENNE_61) + (s >> 61);
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

fn mulmod(a: u64, b: u64) -> u64 {
    reduce(a as u128 * b as u128)
}

/// A polynomial hash `h(x) = Σ cⱼ xʲ mod (2⁶¹ − 1)` with `k` coefficients,
/// hence k-wise independent on keys below 2⁶¹ − 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyHash {
    coeffs: Vec<u64>,
}

impl PolyHash {
    pub fn new(seed: u64, independence: usize) -> Self {
        assert!(independence >= 1);
        let mut state = seed;
        let coeffs = (0..independence)
            .map(|j| {
                state = splitmix64(state ^ j as u64);
                let c = state % MERSENNE_61;
                // keep the leading coefficient nonzero so the degree is exact
                if j + 1 == independence && c == 0 {
                    1
                } else {
                    c
                }
            })
            .collect();
        Self { coeffs }
    }

    pub fn independence(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: u64) -> u64 {
        let x = x % MERSENNE_61;
        self.coeffs.iter().rev().fold(0u64, |acc, &c| {
            let v = mulmod(acc, x) + c;
            if v >= MERSENNE_61 {
                v - MERSENNE_61
            } else {
                v
            }
        })
    }

    /// `⌊h(x) · width / 2⁶¹⌋`, a near-uniform bucket in `0..width`.
    pub fn bucket(&self, x: u64, width: usize) -> usize {
        ((self.eval(x) as u128 * width as u128) >> 61) as usize
    }

    /// ±1 from the low bit of `h(x)`.
    pub fn sign(&self, x: u64) -> i64 {
        if self.eval(x) & 1 == 0 {
            1
        } else {
            -1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_matches_u128_remainder() {
        let mut s = 7u64;
        for _ in 0..10_000 {
            s = splitmix64(s);
            let a = s % MERSENNE_61;
            s = splitmix64(s);
            let b = s % MERSENNE_61;
            let want = ((a as u128 * b as u128) % MERSENNE_61 as u128) as u64;
            assert_eq!(mulmod(a, b), want);
        }
    }

    #[test]
    fn eval_matches_horner_in_u128() {
        let h = PolyHash::new(42, 4);
        for x in [0u64, 1, 2, 1000, MERSENNE_61 - 1, u64::MAX] {
            let xr = (x % MERSENNE_61) as u128;
            let p = MERSENNE_61 as u128;
            let want = h.coeffs.iter().rev().fold(0u128, |acc, &c| (acc * xr + c as u128) % p);
            assert_eq!(h.eval(x) as u128, want);
        }
    }

    #[test]
    fn seeds_split_apart() {
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(9, &[3, 4]), derive_seed(9, &[3, 4]));
        let u = unit_uniform(5, 17);
        assert!(u > 0.0 && u < 1.0);
    }
}
