//! Euler–Stieltjes constants `γ_r` by Euler–Maclaurin acceleration of
//! `Σ_{n≤N} log^r n / n − log^{r+1} N/(r+1)`, with an explicit remainder
//! bound folded into each radius.

use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};


use crate::approx::ApproxReal;
use crate::error::{Error, Result};

/// Default guaranteed radius for table entries.
pub const DEFAULT_TARGET_RADIUS: f64 = 1e-40;

/// `B_{2j}` for j = 1..=5 as exact rationals, and `(2j)!`.
const BERNOULLI: [(i64, i64, u64); 5] = [
    (1, 6, 2),
    (-1, 30, 24),
    (1, 42, 720),
    (-1, 30, 40_320),
    (5, 66, 3_628_800),
];

/// Coefficient rows of `Q_j` where `d^j/dt^j (log^r t / t) = Q_j(log t)/t^(j+1)`.
///
/// `Q_0 = L^r` and `Q_{j+1} = Q_j' − (j+1) Q_j`; all coefficients stay integers.
fn derivative_polys(r: usize, max_j: usize) -> Vec<Vec<i128>> {
    let mut q0 = vec![0i128; r + 1];
    q0[r] = 1;
    let mut out = vec![q0];
    for j in 0..max_j {
        let prev = &out[j];
        let mut next = vec![0i128; r + 1];
        for i in 0..=r {
            let mut c = -((j as i128) + 1) * prev[i];
            if i + 1 <= r {
                c += (i as i128 + 1) * prev[i + 1];
            }
            next[i] = c;
        }
        out.push(next);
    }
    out
}

/// Evaluate an integer-coefficient polynomial at an enclosure.
fn eval_int_poly(coeffs: &[i128], x: &ApproxReal) -> ApproxReal {
    let mut acc = ApproxReal::zero();
    for &c in coeffs.iter().rev() {
        acc = acc.mul(x).add(&ApproxReal::from_ratio(c, 1));
    }
    acc
}

/// Sum of |coeffs| · ∫_N^∞ log^i t / t^{s+1} dt, an upper bound used by the
/// Euler–Maclaurin remainder. The integral has the closed form
/// `(1/N^s) Σ_{j≤i} i!/(i−j)! · log^{i−j} N / s^{j+1}`.
fn tail_integral_bound(coeffs: &[i128], ln_n: &ApproxReal, n: u64, s: u32) -> ApproxReal {
    let n_pow_s = ApproxReal::from_bigint(&BigInt::from(n).pow(s));
    let mut total = ApproxReal::zero();
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let mut term = ApproxReal::zero();
        let mut falling = 1i128; // i!/(i-j)!
        for j in 0..=i {
            if j > 0 {
                falling *= (i - j + 1) as i128;
            }
            let lp = ln_n.powi((i - j) as u32);
            let sp = (s as i128).pow(j as u32 + 1);
            term = term.add(&lp.mul(&ApproxReal::from_ratio(falling, sp)));
        }
        total = total.add(&term.mul(&ApproxReal::from_ratio(c.unsigned_abs() as i128, 1)));
    }
    total.div(&n_pow_s).expect("N^s is positive")
}

/// One Euler–Maclaurin evaluation of `γ_0..γ_max_r` at a fixed `N`.
/// Returns enclosures whose radii include the full remainder bound.
pub fn stieltjes_at_n(max_r: usize, n: u64) -> Result<Vec<ApproxReal>> {
    assert!(n >= 64);
    // one pass: Σ_{m≤N} ln^r m / m for every r, with incremental logarithms
    let mut acc = vec![ApproxReal::zero(); max_r + 1];
    acc[0] = ApproxReal::one(); // m = 1 contributes 1 to r = 0 only
    let mut ln_m = ApproxReal::zero();
    for m in 2..=n {
        ln_m = if m <= 64 {
            ApproxReal::from_u64(m).ln()?
        } else {
            ln_m.add(&ApproxReal::from_ratio(1, (m - 1) as i128).ln_1p()?)
        };
        let mut pw = ApproxReal::one();
        for r in 0..=max_r {
            if r > 0 {
                pw = pw.mul(&ln_m);
            }
            acc[r] = acc[r].add(&pw.div_u64(m));
        }
    }
    let ln_n = ln_m;

    let mut out = Vec::with_capacity(max_r + 1);
    for r in 0..=max_r {
        let polys = derivative_polys(r, 10);
        // Σ − log^{r+1}N/(r+1) − f(N)/2 − Σ_j B_{2j}/(2j)! · f^{(2j-1)}(N)
        let mut g = acc[r].sub(&ln_n.powi(r as u32 + 1).div_u64(r as u64 + 1));
        g = g.sub(&ln_n.powi(r as u32).div_u64(2 * n));
        for (j, &(bp, bq, fact)) in BERNOULLI.iter().enumerate() {
            let deriv = eval_int_poly(&polys[2 * j + 1], &ln_n)
                .div(&ApproxReal::from_bigint(&BigInt::from(n).pow(2 * (j as u32 + 1))))?;
            g = g.sub(&deriv.mul(&ApproxReal::from_ratio(bp as i128, bq as i128 * fact as i128)));
        }
        // remainder: |R| ≤ |B_10|/10! · ∫_N^∞ |f^{(10)}|
        let rem = tail_integral_bound(&polys[10], &ln_n, n, 10)
            .mul(&ApproxReal::from_ratio(5, 66 * 3_628_800));
        let rem_ulps = rem.hi().magnitude() + BigUint::from(1u32);
        out.push(ApproxReal::from_raw(
            g.mantissa().clone(),
            g.radius() + rem_ulps,
        ));
    }
    Ok(out)
}

fn f64_radius(x: &ApproxReal) -> f64 {
    x.radius_f64_upper()
}

/// `γ_r` with a guaranteed radius at most `target_radius`.
///
/// Starts at `N = 10^4` and doubles `N` until the rigorous radius meets the
/// target.
pub fn stieltjes(r: usize, target_radius: f64) -> Result<ApproxReal> {
    Ok(build_table(r, target_radius)?.pop().unwrap())
}

fn build_table(max_r: usize, target_radius: f64) -> Result<Vec<ApproxReal>> {
    if target_radius < 1e-60 {
        return Err(Error::Precision(format!(
            "stieltjes target radius {target_radius:e} below what the working precision supports"
        )));
    }
    let mut n: u64 = 10_000;
    loop {
        let vals = stieltjes_at_n(max_r, n)?;
        if vals.iter().all(|v| f64_radius(v) <= target_radius) {
            return Ok(vals);
        }
        n *= 2;
        if n > 100_000_000 {
            return Err(Error::Precision(format!(
                "stieltjes: radius target {target_radius:e} not reached by N = 5e7"
            )));
        }
    }
}

/// High-precision Euler–Stieltjes constants `γ_0..γ_max_r`, built once and
/// shared read-only.
#[derive(Debug)]
pub struct StieltjesTable {
    gammas: Vec<ApproxReal>,
}

impl StieltjesTable {
    pub fn new(max_r: usize) -> Result<Self> {
        Ok(StieltjesTable {
            gammas: build_table(max_r, DEFAULT_TARGET_RADIUS)?,
        })
    }

    /// Process-wide shared table covering at least `max_r`.
    pub fn shared(max_r: usize) -> Arc<StieltjesTable> {
        static CACHE: OnceLock<Mutex<Option<Arc<StieltjesTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(None));
        let mut guard = cache.lock().unwrap();
        if let Some(t) = guard.as_ref() {
            if t.max_r() >= max_r {
                return Arc::clone(t);
            }
        }
        let t = Arc::new(StieltjesTable::new(max_r).expect("stieltjes table construction"));
        *guard = Some(Arc::clone(&t));
        t
    }

    pub fn max_r(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn gamma(&self, r: usize) -> &ApproxReal {
        &self.gammas[r]
    }

    /// Euler's constant `γ = γ_0`.
    pub fn euler(&self) -> &ApproxReal {
        &self.gammas[0]
    }

    /// CSV export for audit: `r,value,radius_le`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value,radius_le\n");
        for (r, g) in self.gammas.iter().enumerate() {
            s.push_str(&format!(
                "{r},{},{:.2e}\n",
                g.to_decimal(45),
                g.radius_f64_upper()
            ));
        }
        s
    }
}
