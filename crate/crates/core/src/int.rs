//! Integer helpers: exact roots, binomials, and the floor-quotient table.

use crate::error::{Error, Result};

/// `⌊√n⌋` by Newton iteration on integers.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    // the float guess can be off by one in either direction
    while r > 0 && (r as u128) * (r as u128) > n as u128 {
        r -= 1;
    }
    while ((r + 1) as u128) * ((r + 1) as u128) <= n as u128 {
        r += 1;
    }
    r
}

/// `⌊n^(1/k)⌋` for k ≥ 1, exact at perfect powers.
///
/// Newton iteration with a final correction loop; never goes through
/// floating-point exponentiation.
pub fn ikroot(n: u64, k: u32) -> u64 {
    assert!(k >= 1);
    if k == 1 || n <= 1 {
        return n;
    }
    if k == 2 {
        return isqrt(n);
    }
    if k >= 64 {
        return 1;
    }
    let pow_leq = |r: u64| -> bool {
        // r^k <= n without overflow
        let mut acc: u128 = 1;
        for _ in 0..k {
            acc = acc.saturating_mul(r as u128);
            if acc > n as u128 {
                return false;
            }
        }
        acc <= n as u128
    };
    let mut r = (n as f64).powf(1.0 / k as f64).round() as u64 + 1;
    while r > 1 && !pow_leq(r) {
        r -= 1;
    }
    while pow_leq(r + 1) {
        r += 1;
    }
    r
}

/// Binomial coefficient `C(n, k)` with explicit overflow detection.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul((n - k + i) as u128)
            .ok_or(Error::Overflow("binomial"))?;
        acc /= i as u128; // exact: C(n-k+i, i) is an integer
    }
    u64::try_from(acc).map_err(|_| Error::Overflow("binomial"))
}

/// One run of constant floor quotient: `⌊x/a⌋ = q` for all `a` in `[a_lo, a_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuotientRun {
    pub a_lo: u64,
    pub a_hi: u64,
    pub q: u64,
}

/// The distinct values of `⌊x/a⌋` together with the `a`-interval producing each.
///
/// Runs cover `[1, x]` exactly once and there are at most `2⌊√x⌋` of them.
#[derive(Debug, Clone)]
pub struct QuotientTable {
    pub x: u64,
    pub runs: Vec<QuotientRun>,
}

impl QuotientTable {
    pub fn new(x: u64) -> Self {
        Self::up_to(x, x)
    }

    /// Only the runs with `a_lo <= a_max` (the last run is clipped).
    pub fn up_to(x: u64, a_max: u64) -> Self {
        let a_max = a_max.min(x);
        let mut runs = Vec::new();
        let mut a = 1u64;
        while a <= a_max {
            let q = x / a;
            let a_hi = (x / q).min(a_max);
            runs.push(QuotientRun { a_lo: a, a_hi, q });
            a = a_hi + 1;
        }
        QuotientTable { x, runs }
    }

    /// Distinct quotient values, largest first.
    pub fn quotients(&self) -> impl Iterator<Item = u64> + '_ {
        self.runs.iter().map(|r| r.q)
    }
}
