//! Fixed-point extended-precision reals with a guaranteed error radius.
//!
//! An [`ApproxReal`] is a pair `(m, r)` representing every real in
//! `[(m-r)/2^F, (m+r)/2^F]` where `F` is the process-wide fractional scale
//! (default 256 bits, ~77 decimal digits; override with `PDL_PRECISION`
//! decimal digits). Every operation keeps the enclosure valid: mantissas are
//! truncated, all rounding and truncation slack is added to the radius, and
//! radius arithmetic always rounds up.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Fractional bits of the global fixed-point scale.
pub fn frac_bits() -> u64 {
    static BITS: OnceLock<u64> = OnceLock::new();
    *BITS.get_or_init(|| {
        let digits = std::env::var("PDL_PRECISION")
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .unwrap_or(50)
            .clamp(30, 1200);
        // digits * log2(10), plus guard bits, rounded up to a limb
        let bits = (digits * 3322 + 999) / 1000 + 80;
        bits.div_ceil(64) * 64
    })
}

/// Working precision in decimal digits (for manifests).
pub fn precision_digits() -> u64 {
    (frac_bits() - 80) * 1000 / 3322
}

fn ceil_div(n: &BigUint, d: &BigUint) -> BigUint {
    let (q, r) = n.div_rem(d);
    if r.is_zero() {
        q
    } else {
        q + 1u32
    }
}

/// An extended-precision value with a guaranteed bound on its distance from
/// the true real it stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxReal {
    /// value ≈ m / 2^F
    m: BigInt,
    /// |value - true| ≤ r / 2^F
    r: BigUint,
}

impl ApproxReal {
    pub fn zero() -> Self {
        ApproxReal {
            m: BigInt::zero(),
            r: BigUint::zero(),
        }
    }

    pub fn one() -> Self {
        Self::from_u64(1)
    }

    pub fn from_u64(n: u64) -> Self {
        ApproxReal {
            m: BigInt::from(n) << frac_bits(),
            r: BigUint::zero(),
        }
    }

    pub fn from_i64(n: i64) -> Self {
        ApproxReal {
            m: BigInt::from(n) << frac_bits(),
            r: BigUint::zero(),
        }
    }

    pub fn from_u128(n: u128) -> Self {
        ApproxReal {
            m: BigInt::from(n) << frac_bits(),
            r: BigUint::zero(),
        }
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        ApproxReal {
            m: n.clone() << frac_bits(),
            r: BigUint::zero(),
        }
    }

    /// Exact rational `p/q`, rounded to at most one ulp.
    pub fn from_ratio(p: i128, q: i128) -> Self {
        assert!(q != 0);
        Self::from_ratio_big(&BigInt::from(p), &BigInt::from(q))
    }

    pub fn from_ratio_big(p: &BigInt, q: &BigInt) -> Self {
        assert!(!q.is_zero());
        let num = p << frac_bits();
        let (m, rem) = num.div_rem(q);
        let r = if rem.is_zero() {
            BigUint::zero()
        } else {
            BigUint::one()
        };
        ApproxReal { m, r }
    }

    /// Parse a plain decimal literal like `-0.0728158454` exactly (one ulp).
    pub fn from_decimal_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (neg, s) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::Domain(format!("bad decimal literal: {s:?}")));
        }
        let digits: String = format!("{int_part}{frac_part}");
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Domain(format!("bad decimal literal: {s:?}")));
        }
        let p: BigInt = digits.parse().unwrap();
        let q = BigInt::from(10u32).pow(frac_part.len() as u32);
        let v = Self::from_ratio_big(&p, &q);
        Ok(if neg { v.neg() } else { v })
    }

    /// Construct from raw fixed-point mantissa and radius (internal scale).
    pub fn from_raw(m: BigInt, r: BigUint) -> Self {
        ApproxReal { m, r }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.m
    }

    pub fn radius(&self) -> &BigUint {
        &self.r
    }

    pub fn is_exact(&self) -> bool {
        self.r.is_zero()
    }

    /// Mantissa of a certified lower bound of the enclosure.
    pub fn lo(&self) -> BigInt {
        &self.m - BigInt::from(self.r.clone())
    }

    /// Mantissa of a certified upper bound of the enclosure.
    pub fn hi(&self) -> BigInt {
        &self.m + BigInt::from(self.r.clone())
    }

    pub fn definitely_positive(&self) -> bool {
        self.lo().is_positive()
    }

    pub fn definitely_le(&self, other: &ApproxReal) -> bool {
        self.hi() <= other.lo()
    }

    pub fn definitely_lt(&self, other: &ApproxReal) -> bool {
        self.hi() < other.lo()
    }

    /// True when the enclosures intersect.
    pub fn overlaps(&self, other: &ApproxReal) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }

    /// Compare by central value (deterministic; ignores radii).
    pub fn cmp_value(&self, other: &ApproxReal) -> Ordering {
        self.m.cmp(&other.m)
    }

    pub fn abs(&self) -> Self {
        ApproxReal {
            m: self.m.abs(),
            r: self.r.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        ApproxReal {
            m: -&self.m,
            r: self.r.clone(),
        }
    }

    pub fn add(&self, o: &ApproxReal) -> Self {
        ApproxReal {
            m: &self.m + &o.m,
            r: &self.r + &o.r,
        }
    }

    pub fn sub(&self, o: &ApproxReal) -> Self {
        ApproxReal {
            m: &self.m - &o.m,
            r: &self.r + &o.r,
        }
    }

    pub fn mul(&self, o: &ApproxReal) -> Self {
        let f = frac_bits();
        let m = (&self.m * &o.m) >> f;
        let err = self.m.magnitude() * &o.r + o.m.magnitude() * &self.r + &self.r * &o.r;
        let r = ceil_div(&err, &(BigUint::one() << f)) + 2u32;
        ApproxReal { m, r }
    }

    pub fn mul_i64(&self, n: i64) -> Self {
        ApproxReal {
            m: &self.m * n,
            r: &self.r * n.unsigned_abs(),
        }
    }

    /// Division; the divisor's enclosure must exclude zero.
    pub fn div(&self, o: &ApproxReal) -> Result<Self> {
        let f = frac_bits();
        let ob = o.m.magnitude();
        if *ob <= o.r {
            return Err(Error::Domain(
                "division by an enclosure containing zero".into(),
            ));
        }
        let m = (&self.m << f) / &o.m;
        let denom = ob * (ob - &o.r);
        let err = (self.m.magnitude() * &o.r + ob * &self.r) << f;
        let r = ceil_div(&err, &denom) + 2u32;
        Ok(ApproxReal { m, r })
    }

    pub fn div_u64(&self, n: u64) -> Self {
        assert!(n > 0);
        let m = &self.m / n;
        let r = ceil_div(&self.r, &BigUint::from(n)) + 1u32;
        ApproxReal { m, r }
    }

    pub fn recip(&self) -> Result<Self> {
        Self::one().div(self)
    }

    pub fn powi(&self, e: u32) -> Self {
        if e == 0 {
            return Self::one();
        }
        let mut base = self.clone();
        let mut e = e;
        let mut acc: Option<ApproxReal> = None;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base);
        }
        acc.unwrap()
    }

    /// `x^{1/q}` for `x` with a positive (or exactly zero) enclosure.
    pub fn nth_root(&self, q: u32) -> Result<Self> {
        assert!(q >= 1);
        if q == 1 {
            return Ok(self.clone());
        }
        if self.m.is_zero() && self.r.is_zero() {
            return Ok(Self::zero());
        }
        let f = frac_bits();
        let lo = self.lo();
        if !lo.is_positive() {
            return Err(Error::Domain(format!(
                "{q}-th root of an enclosure not strictly positive"
            )));
        }
        let shifted: BigUint = (self.m.magnitude() << (f * (q as u64 - 1))).clone();
        let y = shifted.nth_root(q);
        // derivative of v^{1/q} on [lo, hi] is at most (y+1) / (q * lo)
        let y_up = &y + BigUint::one();
        let err = ceil_div(&(&self.r * &y_up), &(lo.magnitude() * q)) + 2u32;
        Ok(ApproxReal {
            m: BigInt::from_biguint(Sign::Plus, y),
            r: err,
        })
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.nth_root(2)
    }

    /// `x^{p/q}` via the exact integer `q`-th root, never through `exp`.
    pub fn pow_frac(&self, p: i64, q: u32) -> Result<Self> {
        if p == 0 {
            return Ok(Self::one());
        }
        let root = self.nth_root(q)?;
        let pos = root.powi(p.unsigned_abs().try_into().expect("exponent too large"));
        if p < 0 {
            pos.recip()
        } else {
            Ok(pos)
        }
    }

    /// `ln(1 + self)` for a small enclosure, `|self| ≤ 1/2`. Alternating
    /// series; the first omitted term bounds the truncation, and the input
    /// radius propagates with derivative at most 2.
    pub fn ln_1p(&self) -> Result<Self> {
        let f = frac_bits();
        if (self.m.magnitude() + &self.r) > (BigUint::one() << (f - 1)) {
            return Err(Error::Domain("ln_1p requires |x| <= 1/2".into()));
        }
        let exact = ApproxReal {
            m: self.m.clone(),
            r: BigUint::zero(),
        };
        let mut acc = exact.clone();
        let mut pw = exact.clone();
        let mut j = 1u64;
        loop {
            pw = pw.mul(&exact);
            j += 1;
            let term = pw.div_u64(j);
            if term.m.is_zero() && term.r <= BigUint::from(8u32) {
                acc.r += &term.r + BigUint::from(8u32);
                break;
            }
            acc = if j % 2 == 0 { acc.sub(&term) } else { acc.add(&term) };
            if j > 16 * f {
                acc.r += pw.m.magnitude() + &pw.r;
                break;
            }
        }
        acc.r += &self.r * 2u32 + BigUint::one();
        Ok(acc)
    }

    /// Natural logarithm; the enclosure must be strictly positive.
    pub fn ln(&self) -> Result<Self> {
        let f = frac_bits();
        let lo = self.lo();
        if !lo.is_positive() {
            return Err(Error::Domain("ln of an enclosure not strictly positive".into()));
        }
        // reduce to t in [1, 2): v = 2^e2 * t
        let bits = self.m.magnitude().bits() as i64;
        let e2 = bits - 1 - f as i64;
        let (t_m, t_extra_ulp) = if e2 >= 0 {
            ((&self.m >> e2 as u64).clone(), 1u32)
        } else {
            ((&self.m << (-e2) as u64).clone(), 0u32)
        };
        let t_r = if e2 >= 0 {
            ceil_div(&self.r, &(BigUint::one() << e2 as u64)) + t_extra_ulp
        } else {
            &self.r << (-e2) as u64
        };
        let t = ApproxReal { m: t_m, r: t_r };
        let series = atanh_series(&t.sub(&Self::one()).div(&t.add(&Self::one()))?);
        let ln2 = ln2();
        let mut out = series.mul_i64(2);
        if e2 != 0 {
            out = out.add(&ln2.mul_i64(e2));
        }
        // input radius was already propagated through t; that propagation is
        // exact in value terms since v = 2^e2 * t is a rigid rescale.
        Ok(out)
    }

    /// `e^x`. The input radius must be at most 1.
    pub fn exp(&self) -> Result<Self> {
        let f = frac_bits();
        let one_ulp = BigUint::one() << f;
        if self.r > one_ulp {
            return Err(Error::Precision("exp of an enclosure wider than 1".into()));
        }
        // v = n + w with n integer, |w| <= 1/2
        let half = BigInt::one() << (f - 1);
        let n_big: BigInt = (&self.m + &half).div_floor(&(BigInt::one() << f));
        let n = n_big
            .to_i64()
            .ok_or_else(|| Error::Domain("exp argument too large".into()))?;
        if n.abs() > 100_000 {
            return Err(Error::Domain(format!("exp argument too large: {n}")));
        }
        let w = ApproxReal {
            m: &self.m - (BigInt::from(n) << f),
            r: BigUint::zero(),
        };
        let mut acc = Self::one();
        let mut term = Self::one();
        let mut j = 1u64;
        loop {
            term = term.mul(&w).div_u64(j);
            if term.m.is_zero() && term.r <= BigUint::from(4u32) {
                // remaining tail is at most the next term ratio sum: |w|/(j+1) <= 1/2
                acc.r += &term.r + BigUint::from(4u32);
                break;
            }
            acc = acc.add(&term);
            j += 1;
            if j > 4 * f {
                acc.r += term.m.magnitude() + &term.r;
                break;
            }
        }
        let mut out = acc;
        if n != 0 {
            let e = euler_e();
            let pn = e.powi(n.unsigned_abs() as u32);
            let pn = if n < 0 { pn.recip()? } else { pn };
            out = out.mul(&pn);
        }
        // propagate the input radius: |e^{v±r} - e^v| <= e^v (e^r - 1) <= e^v r (1 + r)
        if !self.r.is_zero() {
            let up = out.m.magnitude() + &out.r;
            let first = ceil_div(&(&up * &self.r), &(BigUint::one() << f));
            let second = ceil_div(&(&first * &self.r), &(BigUint::one() << f));
            out.r += first + second + 1u32;
        }
        Ok(out)
    }

    /// `x^y = exp(y ln x)` for real exponents.
    pub fn pow(&self, y: &ApproxReal) -> Result<Self> {
        y.mul(&self.ln()?).exp()
    }

    /// Approximate f64 view (display and heuristics only, never for proofs).
    pub fn to_f64(&self) -> f64 {
        let f = frac_bits();
        // keep 80 significant bits
        let bits = self.m.magnitude().bits();
        if bits == 0 {
            return 0.0;
        }
        if bits > 100 {
            let shift = bits - 80;
            let top = (&self.m >> shift).to_f64().unwrap_or(0.0);
            top * 2f64.powi(shift as i32 - f as i32)
        } else {
            self.m.to_f64().unwrap_or(0.0) * 2f64.powi(-(f as i32))
        }
    }

    /// Upper bound on the radius as an f64 (display only).
    pub fn radius_f64_upper(&self) -> f64 {
        let f = frac_bits();
        let bits = self.r.bits();
        if bits == 0 {
            return 0.0;
        }
        if bits > 100 {
            let shift = bits - 80;
            let top = (&self.r >> shift).to_f64().unwrap_or(f64::MAX) + 1.0;
            top * 2f64.powi(shift as i32 - f as i32)
        } else {
            (self.r.to_f64().unwrap_or(f64::MAX) + 1.0) * 2f64.powi(-(f as i32))
        }
    }

    /// Deterministic decimal rendering of the central value, truncated toward
    /// zero at `sig` significant digits.
    pub fn to_decimal(&self, sig: usize) -> String {
        assert!(sig >= 1);
        let f = frac_bits();
        if self.m.is_zero() {
            return "0".into();
        }
        let neg = self.m.is_negative();
        let mag = self.m.magnitude().clone();
        // decimal exponent: number of digits in front of the point, minus one
        let approx_e10 = ((mag.bits() as i64 - f as i64) as f64 * std::f64::consts::LOG10_2)
            .floor() as i64;
        // compute digits = floor(mag * 10^(sig-1-e10) / 2^F), adjusting e10
        let mut e10 = approx_e10;
        loop {
            let shift = sig as i64 - 1 - e10;
            let scaled: BigUint = if shift >= 0 {
                (&mag * BigUint::from(10u32).pow(shift as u32)) >> f
            } else {
                (&mag >> f) / BigUint::from(10u32).pow((-shift) as u32)
            };
            let ds = scaled.to_string();
            if ds.len() > sig {
                e10 += 1;
                continue;
            }
            if ds.len() < sig && !scaled.is_zero() {
                e10 -= 1;
                continue;
            }
            if scaled.is_zero() {
                return "0".into();
            }
            return format_decimal(neg, &ds, e10);
        }
    }
}

fn format_decimal(neg: bool, digits: &str, e10: i64) -> String {
    let sign = if neg { "-" } else { "" };
    let n = digits.len() as i64;
    if e10 >= 0 && e10 < 30 {
        if e10 + 1 >= n {
            let zeros = "0".repeat((e10 + 1 - n) as usize);
            format!("{sign}{digits}{zeros}")
        } else {
            let (a, b) = digits.split_at((e10 + 1) as usize);
            format!("{sign}{a}.{b}")
        }
    } else if e10 < 0 && e10 > -8 {
        let zeros = "0".repeat((-e10 - 1) as usize);
        format!("{sign}0.{zeros}{digits}")
    } else {
        let (a, b) = digits.split_at(1);
        if b.is_empty() {
            format!("{sign}{a}e{e10}")
        } else {
            format!("{sign}{a}.{b}e{e10}")
        }
    }
}

/// atanh series: z + z^3/3 + z^5/5 + …, valid for |z| ≤ 0.34; the series
/// truncation bound is folded into the radius.
fn atanh_series(z: &ApproxReal) -> ApproxReal {
    let z2 = z.mul(z);
    let mut acc = z.clone();
    let mut pw = z.clone();
    let mut j = 1u64;
    loop {
        pw = pw.mul(&z2);
        j += 2;
        let term = pw.div_u64(j);
        if term.mantissa().is_zero() && *term.radius() <= BigUint::from(8u32) {
            // tail <= |z|^(j+2)/( (j+2)(1-z^2) ) <= previous power (z ≤ 0.34)
            acc.r += pw.m.magnitude() + &pw.r + BigUint::from(8u32);
            break;
        }
        acc = acc.add(&term);
        if j > 16 * frac_bits() {
            acc.r += pw.m.magnitude() + &pw.r;
            break;
        }
    }
    acc
}

/// ln 2 = 2 atanh(1/3), cached at the working precision.
pub fn ln2() -> &'static ApproxReal {
    static LN2: OnceLock<ApproxReal> = OnceLock::new();
    LN2.get_or_init(|| atanh_series(&ApproxReal::from_ratio(1, 3)).mul_i64(2))
}

/// e = Σ 1/j!, cached.
pub fn euler_e() -> &'static ApproxReal {
    static E: OnceLock<ApproxReal> = OnceLock::new();
    E.get_or_init(|| {
        let mut acc = ApproxReal::from_u64(2);
        let mut term = ApproxReal::one();
        let mut j = 2u64;
        loop {
            term = term.div_u64(j);
            if term.mantissa().is_zero() {
                acc.r += term.radius() + BigUint::from(4u32);
                break;
            }
            acc = acc.add(&term);
            j += 1;
        }
        acc
    })
}

impl Add for &ApproxReal {
    type Output = ApproxReal;
    fn add(self, rhs: &ApproxReal) -> ApproxReal {
        ApproxReal::add(self, rhs)
    }
}

impl Sub for &ApproxReal {
    type Output = ApproxReal;
    fn sub(self, rhs: &ApproxReal) -> ApproxReal {
        ApproxReal::sub(self, rhs)
    }
}

impl Mul for &ApproxReal {
    type Output = ApproxReal;
    fn mul(self, rhs: &ApproxReal) -> ApproxReal {
        ApproxReal::mul(self, rhs)
    }
}

impl Div for &ApproxReal {
    type Output = ApproxReal;
    fn div(self, rhs: &ApproxReal) -> ApproxReal {
        ApproxReal::div(self, rhs).expect("division by enclosure containing zero")
    }
}

impl Neg for &ApproxReal {
    type Output = ApproxReal;
    fn neg(self) -> ApproxReal {
        ApproxReal::neg(self)
    }
}

impl serde::Serialize for ApproxReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ApproxReal", 2)?;
        st.serialize_field("value", &self.to_decimal(30))?;
        st.serialize_field("radius_le", &format!("{:.2e}", self.radius_f64_upper()))?;
        st.end()
    }
}
