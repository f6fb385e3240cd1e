//! Named explicit envelopes: the piecewise `Δ₂` bounds, the order-3 and
//! general-order theorem envelopes, comparator bounds, the proof-term bounds
//! E₂–E₇, the hyperbola remainders R₁–R₄, and the two integral-majorant
//! lemmas. Every evaluator is guarded by its printed validity range;
//! evaluation outside it requires the explicit extrapolation opt-in and is
//! flagged in the result.

use serde::Serialize;

use crate::approx::ApproxReal;
use crate::error::{Error, Result};
use crate::gamma::StieltjesTable;
use crate::mainterm;

/// A pure-power envelope `c · x^(xp) · (log x)^(lp)` with exact rational
/// constant and exponents. This is the form the block verifier can compare
/// against in exact integer arithmetic.
#[derive(Debug, Clone, Serialize)]
pub struct PowerPiece {
    pub c_num: u64,
    pub c_den: u64,
    pub x_num: u32,
    pub x_den: u32,
    pub l_num: u32,
    pub l_den: u32,
}

impl PowerPiece {
    pub fn new(c_num: u64, c_den: u64, x: (u32, u32), l: (u32, u32)) -> Self {
        PowerPiece {
            c_num,
            c_den,
            x_num: x.0,
            x_den: x.1,
            l_num: l.0,
            l_den: l.1,
        }
    }

    pub fn eval(&self, x: &ApproxReal) -> Result<ApproxReal> {
        let c = ApproxReal::from_ratio(self.c_num as i128, self.c_den as i128);
        let mut v = c.mul(&x.pow_frac(self.x_num as i64, self.x_den)?);
        if self.l_num > 0 {
            v = v.mul(&x.ln()?.pow_frac(self.l_num as i64, self.l_den)?);
        }
        Ok(v)
    }

    pub fn formula(&self) -> String {
        let mut s = format!("{}/{}", self.c_num, self.c_den);
        if self.x_num > 0 {
            s.push_str(&format!(" * x^({}/{})", self.x_num, self.x_den));
        }
        if self.l_num > 0 {
            s.push_str(&format!(" * (log x)^({}/{})", self.l_num, self.l_den));
        }
        s
    }
}

/// A named envelope with inclusive lower validity threshold per piece.
/// At any admissible `x` the selected piece is the last whose threshold ≤ x.
#[derive(Debug, Clone, Serialize)]
pub struct ScanBound {
    pub id: String,
    pub provenance: &'static str,
    /// (threshold, piece); thresholds strictly increasing
    pub pieces: Vec<(u64, PowerPiece)>,
}

impl ScanBound {
    pub fn validity_lo(&self) -> u64 {
        self.pieces[0].0
    }

    pub fn piece_at(&self, x: u64) -> Result<&PowerPiece> {
        let mut chosen = None;
        for (thr, p) in &self.pieces {
            if *thr <= x {
                chosen = Some(p);
            }
        }
        chosen.ok_or_else(|| {
            Error::Domain(format!(
                "bound {} not valid below x = {}",
                self.id,
                self.validity_lo()
            ))
        })
    }

    pub fn eval_u64(&self, x: u64) -> Result<ApproxReal> {
        self.piece_at(x)?.eval(&ApproxReal::from_u64(x))
    }
}

/// Named bounds the verifier accepts. `thm2` takes its order and constant as
/// parameters; `xpowlog` is the free-form single-piece family for probing.
pub fn scan_bound(id: &str) -> Result<ScanBound> {
    match id {
        "delta2" => Ok(ScanBound {
            id: id.into(),
            provenance: "dirichlet-remainder-piecewise-sqrt",
            pieces: vec![
                (1, PowerPiece::new(961, 1000, (1, 2), (0, 1))),
                (1981, PowerPiece::new(482, 1000, (1, 2), (0, 1))),
                (5560, PowerPiece::new(397, 1000, (1, 2), (0, 1))),
            ],
        }),
        "delta2-voronoi" => Ok(ScanBound {
            id: id.into(),
            provenance: "dirichlet-remainder-cbrt-log",
            pieces: vec![(9995, PowerPiece::new(764, 1000, (1, 3), (1, 1)))],
        }),
        "thm1" => Ok(ScanBound {
            id: id.into(),
            provenance: "t3-explicit-envelope",
            pieces: vec![(2, PowerPiece::new(3369, 1000, (2, 3), (1, 3)))],
        }),
        "bordelles-t3" => Ok(ScanBound {
            id: id.into(),
            provenance: "t3-comparator",
            pieces: vec![(671, PowerPiece::new(236, 100, (2, 3), (1, 1)))],
        }),
        "cully-trudgian-t4" => Ok(ScanBound {
            id: id.into(),
            provenance: "t4-comparator",
            pieces: vec![(2, PowerPiece::new(448, 100, (3, 4), (1, 1)))],
        }),
        _ => Err(Error::Domain(format!("unknown bound id: {id}"))),
    }
}

/// The general-order envelope `λ_k · x^((k-1)/k) · (log x)^((k-1)(k-2)/(2k))`
/// as a scan bound, with the constant given as an exact decimal string.
pub fn thm2_scan_bound(k: u32, lambda: &str, valid_from: u64) -> Result<ScanBound> {
    if k < 3 {
        return Err(Error::Domain("thm2 bound requires k >= 3".into()));
    }
    let (c_num, c_den) = parse_decimal_ratio(lambda)?;
    Ok(ScanBound {
        id: format!("thm2-k{k}-{lambda}"),
        provenance: "tk-explicit-envelope",
        pieces: vec![(
            valid_from.max(2),
            PowerPiece::new(c_num, c_den, (k - 1, k), ((k - 1) * (k - 2), 2 * k)),
        )],
    })
}

/// Free-form `c · x^(xn/xd) · (log x)^(ln/ld)`, `c` a decimal string.
pub fn custom_scan_bound(c: &str, x: (u32, u32), l: (u32, u32), valid_from: u64) -> Result<ScanBound> {
    let (c_num, c_den) = parse_decimal_ratio(c)?;
    Ok(ScanBound {
        id: format!("xpowlog-{c}-x{}d{}-l{}d{}", x.0, x.1, l.0, l.1),
        provenance: "ad-hoc-probe-envelope",
        pieces: vec![(valid_from.max(1), PowerPiece::new(c_num, c_den, x, l))],
    })
}

fn parse_decimal_ratio(s: &str) -> Result<(u64, u64)> {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let num: u64 = digits
        .parse()
        .map_err(|_| Error::Domain(format!("bad decimal constant: {s:?}")))?;
    let den = 10u64
        .checked_pow(frac_part.len() as u32)
        .ok_or_else(|| Error::Domain("constant has too many decimals".into()))?;
    Ok((num, den))
}

/// An evaluated bound plus whether the input was outside the printed
/// validity range (extrapolation must be requested explicitly).
#[derive(Debug, Clone)]
pub struct BoundEval {
    pub value: ApproxReal,
    pub extrapolated: bool,
}

fn require_ge(x: &ApproxReal, lo: u64, what: &str) -> Result<()> {
    if x.lo() < ApproxReal::from_u64(lo).lo() {
        return Err(Error::Domain(format!("{what} requires x >= {lo}")));
    }
    Ok(())
}

/// Piecewise `|Δ₂|` envelope: 0.961√x (x≥1), 0.482√x (x≥1981), 0.397√x (x≥5560).
pub fn delta2_bound(x: &ApproxReal) -> Result<ApproxReal> {
    require_ge(x, 1, "delta2_bound")?;
    let b = scan_bound("delta2").unwrap();
    let xv = x.lo().magnitude().clone() >> crate::approx::frac_bits();
    let xv: u64 = u64::try_from(&xv).map_err(|_| Error::Domain("x too large".into()))?;
    b.piece_at(xv.max(1))?.eval(x)
}

/// `0.764 · x^(1/3) · log x` for x ≥ 9995.
pub fn delta2_voronoi_bound(x: &ApproxReal) -> Result<ApproxReal> {
    require_ge(x, 9995, "delta2_voronoi_bound")?;
    scan_bound("delta2-voronoi").unwrap().pieces[0].1.eval(x)
}

/// `3.369 · x^(2/3) · (log x)^(1/3)` for x ≥ 2.
pub fn thm1_bound(x: &ApproxReal) -> Result<ApproxReal> {
    require_ge(x, 2, "thm1_bound")?;
    scan_bound("thm1").unwrap().pieces[0].1.eval(x)
}

/// `λ_k · x^((k-1)/k) · (log x)^((k-1)(k-2)/(2k))` for k ≥ 3, x > 1.
pub fn thm2_bound(k: u32, lambda: &ApproxReal, x: &ApproxReal) -> Result<ApproxReal> {
    if k < 3 {
        return Err(Error::Domain("thm2_bound requires k >= 3".into()));
    }
    if !x.sub(&ApproxReal::one()).definitely_positive() {
        return Err(Error::Domain("thm2_bound requires x > 1".into()));
    }
    let xp = x.pow_frac(k as i64 - 1, k)?;
    let lp = x.ln()?.pow_frac(((k - 1) * (k - 2)) as i64, 2 * k)?;
    Ok(lambda.mul(&xp).mul(&lp))
}

/// `2.36 · x^(2/3) · log x` for x > 670.
pub fn bordelles_t3(x: &ApproxReal) -> Result<ApproxReal> {
    if !x.sub(&ApproxReal::from_u64(670)).definitely_positive() {
        return Err(Error::Domain("bordelles_t3 requires x > 670".into()));
    }
    scan_bound("bordelles-t3").unwrap().pieces[0].1.eval(x)
}

/// `4.48 · x^(3/4) · log x` for x ≥ 2.
pub fn cully_trudgian_t4(x: &ApproxReal) -> Result<ApproxReal> {
    require_ge(x, 2, "cully_trudgian_t4")?;
    scan_bound("cully-trudgian-t4").unwrap().pieces[0].1.eval(x)
}

/// The explicit bounds on the proof terms of the order-3 argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorTermBound {
    /// bound on the hyperbola overlap sum: `v log v + (2γ−1)v + 0.173√v`, v ≥ 6e5
    DivisorSumCrude,
    /// weighted harmonic remainder: `log(x/u)/(2u) + log x/(4u²)`, e^{3/2} ≤ u ≤ x
    HarmonicLogRemainder,
    /// plain harmonic remainder: `0.501/u`, u ≥ 84
    HarmonicRemainder,
    /// remainder of `Σ d(b)/b`: `1.001·v^{-1/2}`, v ≥ 6e5
    DivisorRatioRemainder,
    /// remainder of `Σ d(b)`: `0.173·√v`, v ≥ 6e5
    DivisorSumRemainder,
    /// majorant of `Σ_{a≤u} |Δ(x/a)|`: `0.794√(xu) + 53.394√x`, 1 ≤ u ≤ x
    DeltaSumMajorant,
}

const V_FLOOR: u64 = 600_000;

/// Evaluate a proof-term bound; `args` are positional per the variant
/// (one of `v`, `(x, u)`, or `u`).
pub fn e_term_bound(which: ErrorTermBound, args: &[&ApproxReal]) -> Result<ApproxReal> {
    use ErrorTermBound::*;
    match which {
        DivisorSumCrude => {
            let v = args[0];
            require_ge(v, V_FLOOR, "divisor-sum-crude")?;
            let g = StieltjesTable::shared(2);
            let two_g_m1 = g.euler().mul_i64(2).sub(&ApproxReal::one());
            Ok(v
                .mul(&v.ln()?)
                .add(&two_g_m1.mul(v))
                .add(&ApproxReal::from_ratio(173, 1000).mul(&v.sqrt()?)))
        }
        HarmonicLogRemainder => {
            let (x, u) = (args[0], args[1]);
            // e^{3/2} <= u <= x
            let e32 = crate::approx::euler_e().pow_frac(3, 2)?;
            if u.lo() < e32.hi() || u.hi() > x.lo() {
                return Err(Error::Domain(
                    "harmonic-log-remainder requires e^{3/2} <= u <= x".into(),
                ));
            }
            let a = x.div(u)?.ln()?.div(&u.mul_i64(2))?;
            let b = x.ln()?.div(&u.mul(u).mul_i64(4))?;
            Ok(a.add(&b))
        }
        HarmonicRemainder => {
            let u = args[0];
            require_ge(u, 84, "harmonic-remainder")?;
            ApproxReal::from_ratio(501, 1000).div(u)
        }
        DivisorRatioRemainder => {
            let v = args[0];
            require_ge(v, V_FLOOR, "divisor-ratio-remainder")?;
            ApproxReal::from_ratio(1001, 1000).div(&v.sqrt()?)
        }
        DivisorSumRemainder => {
            let v = args[0];
            require_ge(v, V_FLOOR, "divisor-sum-remainder")?;
            Ok(ApproxReal::from_ratio(173, 1000).mul(&v.sqrt()?))
        }
        DeltaSumMajorant => {
            let (x, u) = (args[0], args[1]);
            if !u.definitely_positive() || u.hi() > x.lo() {
                return Err(Error::Domain("delta-sum-majorant requires 1 <= u <= x".into()));
            }
            let a = ApproxReal::from_ratio(794, 1000).mul(&x.mul(u).sqrt()?);
            let b = ApproxReal::from_ratio(53_394, 1000).mul(&x.sqrt()?);
            Ok(a.add(&b))
        }
    }
}

/// Exact-sum audit mode for the Δ-sum majorant: `Σ_{a≤u} |Δ(⌊x/a⌋ at x/a)|`
/// computed from exact `T₂` values. Catches transcription errors in the
/// majorant; much slower.
pub fn delta_sum_exact(x: u64, u: u64) -> Result<ApproxReal> {
    let mut calc = crate::divisor::HyperbolaCalculator::new(2);
    let mut total = ApproxReal::zero();
    for a in 1..=u {
        let q = x / a;
        let t = calc.summatory(q)?;
        // Δ(x/a) = T(⌊x/a⌋) − (x/a)(log(x/a) + 2γ − 1)
        let xa = ApproxReal::from_ratio(x as i128, a as i128);
        let g = StieltjesTable::shared(2);
        let main = xa.mul(&xa.ln()?.add(&g.euler().mul_i64(2)).sub(&ApproxReal::one()));
        total = total.add(&ApproxReal::from_u128(t).sub(&main).abs());
    }
    Ok(total)
}

/// Default scale factor in `u = A · x^(1/3) · (log x)^(2/3)`.
pub const COMPOSITE_SCALE_A: &str = "1.297";

#[derive(Debug, Clone)]
pub struct CompositeEval {
    /// the six summands, in display order
    pub terms: [ApproxReal; 6],
    pub value: ApproxReal,
    pub u: ApproxReal,
    pub v: ApproxReal,
    pub extrapolated: bool,
}

/// The six-term composite bound on `|Δ₃(x)|` at `u = A·x^(1/3)(log x)^(2/3)`:
///
/// `3x·log(x/u)/(2u) + x·log x/(4u²) + 1.501(2γ−1)x/u + 1.968√(xu)
///  + 53.394√x + 0.173√(x/u)`
///
/// Strict validity needs `u ≥ 84` and `x/u ≥ 6·10⁵` (the ranges of the
/// constituent term bounds); set `extrapolate` to evaluate outside that.
pub fn composite_delta3_bound(x: &ApproxReal, a: &ApproxReal, extrapolate: bool) -> Result<CompositeEval> {
    let l = x.ln()?;
    let u = a.mul(&x.pow_frac(1, 3)?).mul(&l.pow_frac(2, 3)?);
    let v = x.div(&u)?;
    let in_range = u.lo() >= ApproxReal::from_u64(84).lo()
        && v.lo() >= ApproxReal::from_u64(V_FLOOR).lo()
        && u.hi() <= x.lo();
    if !in_range && !extrapolate {
        return Err(Error::Domain(format!(
            "composite bound outside validity (u = {}, x/u = {}); pass extrapolate to evaluate anyway",
            u.to_decimal(6),
            v.to_decimal(6)
        )));
    }
    let g = StieltjesTable::shared(2);
    let two_g_m1 = g.euler().mul_i64(2).sub(&ApproxReal::one());
    let lv = v.ln()?;
    let terms = [
        x.mul_i64(3).mul(&lv).div(&u.mul_i64(2))?,
        x.mul(&l).div(&u.mul(&u).mul_i64(4))?,
        ApproxReal::from_ratio(1501, 1000).mul(&two_g_m1).mul(x).div(&u)?,
        ApproxReal::from_ratio(1968, 1000).mul(&x.mul(&u).sqrt()?),
        ApproxReal::from_ratio(53_394, 1000).mul(&x.sqrt()?),
        ApproxReal::from_ratio(173, 1000).mul(&v.sqrt()?),
    ];
    let mut value = ApproxReal::zero();
    for t in &terms {
        value = value.add(t);
    }
    Ok(CompositeEval {
        terms,
        value,
        u,
        v,
        extrapolated: !in_range,
    })
}

/// Objectives for re-deriving the scale factor `A` (report-only study).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleObjective {
    /// `1/A + 1.968·√A` (the two x^{2/3}-scale leaders with log(x/u) ≈ (2/3)log x)
    DominantPair,
    /// `3/(2A) + 1.968·√A` (same pair, coefficient not reduced)
    DominantPairUnreduced,
    /// the full six-term composite at a given x
    FullComposite(u64),
}

/// Golden-section minimizer over A ∈ [0.2, 5]; f64 precision (this study
/// reports candidates, it proves nothing).
pub fn optimal_scale_factor(objective: ScaleObjective) -> f64 {
    let f = |a: f64| -> f64 {
        match objective {
            ScaleObjective::DominantPair => 1.0 / a + 1.968 * a.sqrt(),
            ScaleObjective::DominantPairUnreduced => 1.5 / a + 1.968 * a.sqrt(),
            ScaleObjective::FullComposite(x) => {
                let xa = ApproxReal::from_u64(x);
                let av = ApproxReal::from_ratio((a * 1e9) as i128, 1_000_000_000);
                match composite_delta3_bound(&xa, &av, true) {
                    Ok(c) => c.value.to_f64(),
                    Err(_) => f64::INFINITY,
                }
            }
        }
    };
    let (mut lo, mut hi) = (0.2f64, 5.0f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) / 2.0
}

/// Right-hand sides of the supporting integral majorants and the hyperbola remainders.
#[derive(Debug, Clone)]
pub enum LemmaRhs<'a> {
    /// `(U^{1-β}-1)·(log x)^α / (1-β)` — majorant of ∫₁^U log^α(x/a)/a^β da
    LogPowerIntegral {
        alpha: &'a ApproxReal,
        beta: &'a ApproxReal,
        u: &'a ApproxReal,
        x: &'a ApproxReal,
    },
    /// `(k-1)·t^{-1/(k-1)}·(log t)^c·(1 + (k²-3k+4)/(2 log t))` with
    /// `c = (k-2)(k-3)/(2(k-1))` and `t = x/U` — majorant of the tail integral
    TailIntegral { k: u32, t: &'a ApproxReal },
    /// overlap-count remainder: `(x/U)·P_{k-1}(log(x/U)) + λ_{k-1}·(x/U)^{(k-2)/(k-1)}·(log(x/U))^{(k-2)(k-3)/(2(k-1))}`
    R1 {
        k: u32,
        lambda_prev: &'a ApproxReal,
        x: &'a ApproxReal,
        u: &'a ApproxReal,
    },
    /// head-sum remainder (two summands, see formula string in the registry)
    R2 {
        k: u32,
        lambda_prev: &'a ApproxReal,
        x: &'a ApproxReal,
        u: &'a ApproxReal,
    },
    /// ratio-sum remainder (three summands)
    R3 {
        k: u32,
        lambda_prev: &'a ApproxReal,
        x: &'a ApproxReal,
        u: &'a ApproxReal,
    },
    /// single-term remainder: `λ_{k-1}·(x/U)^{(k-2)/(k-1)}·(log(x/U))^{(k-2)(k-3)/(2(k-1))}`
    R4 {
        k: u32,
        lambda_prev: &'a ApproxReal,
        x: &'a ApproxReal,
        u: &'a ApproxReal,
    },
}

pub fn lemma_rhs(which: LemmaRhs<'_>) -> Result<ApproxReal> {
    match which {
        LemmaRhs::LogPowerIntegral { alpha, beta, u, x } => {
            let one = ApproxReal::one();
            if !beta.definitely_positive() || !one.sub(beta).definitely_positive() {
                return Err(Error::Domain("log-power-integral requires 0 < beta < 1".into()));
            }
            if !alpha.definitely_positive() {
                return Err(Error::Domain("log-power-integral requires alpha > 0".into()));
            }
            if !u.sub(&one).definitely_positive() || !x.sub(u).definitely_positive() {
                return Err(Error::Domain("log-power-integral requires 1 < U < x".into()));
            }
            let one_m_beta = one.sub(beta);
            let u_pow = u.pow(&one_m_beta)?;
            let lx_pow = x.ln()?.pow(alpha)?;
            u_pow.sub(&one).mul(&lx_pow).div(&one_m_beta)
        }
        LemmaRhs::TailIntegral { k, t } => {
            if k <= 2 {
                return Err(Error::Domain("tail-integral requires k > 2".into()));
            }
            if !t.sub(&ApproxReal::one()).definitely_positive() {
                return Err(Error::Domain("tail-integral requires x/U > 1".into()));
            }
            let lt = t.ln()?;
            let c_num = ((k - 2) * (k - 3)) as i64;
            let lead = ApproxReal::from_u64((k - 1) as u64)
                .mul(&t.pow_frac(-1, k - 1)?)
                .mul(&lt.pow_frac(c_num, 2 * (k - 1))?);
            let corr = ApproxReal::from_u64((k * k - 3 * k + 4) as u64).div(&lt.mul_i64(2))?;
            Ok(lead.mul(&ApproxReal::one().add(&corr)))
        }
        LemmaRhs::R1 { k, lambda_prev, x, u } => {
            check_r_args(k, x, u)?;
            let t = x.div(u)?;
            let lt = t.ln()?;
            let table = StieltjesTable::shared(k as usize);
            let p = mainterm::main_term_poly(k - 1, &table)?;
            let main = t.mul(&p.eval(&lt));
            Ok(main.add(&r4_term(k, lambda_prev, &t, &lt)?))
        }
        LemmaRhs::R2 { k, lambda_prev, x, u } => {
            check_r_args(k, x, u)?;
            let lx = x.ln()?;
            let c_num = ((k - 2) * (k - 3)) as i64;
            let first = lambda_prev
                .mul_i64(k as i64 - 1)
                .mul(&x.pow_frac(k as i64 - 2, k - 1)?)
                .mul(&u.pow_frac(1, k - 1)?.sub(&ApproxReal::one()))
                .mul(&lx.pow_frac(c_num, 2 * (k - 1))?);
            let lu = u.ln()?;
            let inner = ApproxReal::one()
                .div(&u.mul_i64(2))?
                .add(&ApproxReal::from_u64(k as u64 - 2).div(&u.mul(u).mul(&lu).mul_i64(8))?);
            let second = ApproxReal::from_u64(k as u64 - 1)
                .mul(&lx.powi(k - 2))
                .mul(&inner);
            Ok(first.add(&second))
        }
        LemmaRhs::R3 { k, lambda_prev, x, u } => {
            check_r_args(k, x, u)?;
            let t = x.div(u)?;
            let lt = t.ln()?;
            let ki = k as i64;
            let coef = ApproxReal::from_ratio((ki * ki * ki - 4 * ki * ki + 7 * ki - 4) as i128, 2);
            let u_pow = u.pow_frac(1, k - 1)?;
            let x_pow = x.pow_frac(1, k - 1)?;
            // exponent (k²-7k+8)/(2(k-1)) can be negative
            let e_num = ki * ki - 7 * ki + 8;
            let first = coef
                .mul(lambda_prev)
                .mul(&u_pow)
                .mul(&lt.pow_frac(e_num, 2 * (k - 1))?)
                .div(&x_pow)?;
            let second = x.ln()?.powi(k - 2).div(u)?;
            let third = ApproxReal::from_u64(k as u64)
                .mul(lambda_prev)
                .mul(&u_pow)
                .mul(&lt.pow_frac(((k - 2) * (k - 3)) as i64, 2 * (k - 1))?)
                .div(&x_pow)?;
            Ok(first.add(&second).add(&third))
        }
        LemmaRhs::R4 { k, lambda_prev, x, u } => {
            check_r_args(k, x, u)?;
            let t = x.div(u)?;
            let lt = t.ln()?;
            r4_term(k, lambda_prev, &t, &lt)
        }
    }
}

fn check_r_args(k: u32, x: &ApproxReal, u: &ApproxReal) -> Result<()> {
    if k < 3 {
        return Err(Error::Domain("hyperbola remainders require k >= 3".into()));
    }
    if !u.sub(&ApproxReal::one()).definitely_positive() || !x.sub(u).definitely_positive() {
        return Err(Error::Domain("hyperbola remainders require x > U > 1".into()));
    }
    Ok(())
}

fn r4_term(k: u32, lambda_prev: &ApproxReal, t: &ApproxReal, lt: &ApproxReal) -> Result<ApproxReal> {
    Ok(lambda_prev
        .mul(&t.pow_frac(k as i64 - 2, k - 1)?)
        .mul(&lt.pow_frac(((k - 2) * (k - 3)) as i64, 2 * (k - 1))?))
}

/// One registry entry for the JSON dump.
#[derive(Debug, Serialize)]
pub struct BoundDescriptor {
    pub id: String,
    pub formula: String,
    pub validity: String,
    pub params: Vec<(String, String)>,
    pub provenance: &'static str,
}

/// Every named bound, dumpable as JSON for audit.
pub fn registry() -> Vec<BoundDescriptor> {
    let mut out = Vec::new();
    for id in ["delta2", "delta2-voronoi", "thm1", "bordelles-t3", "cully-trudgian-t4"] {
        let b = scan_bound(id).unwrap();
        for (thr, p) in &b.pieces {
            out.push(BoundDescriptor {
                id: if b.pieces.len() == 1 {
                    id.to_string()
                } else {
                    format!("{id}@{thr}")
                },
                formula: p.formula(),
                validity: format!("x >= {thr}"),
                params: vec![("c".into(), format!("{}/{}", p.c_num, p.c_den))],
                provenance: b.provenance,
            });
        }
    }
    out.push(BoundDescriptor {
        id: "thm2".into(),
        formula: "lambda_k * x^((k-1)/k) * (log x)^((k-1)(k-2)/(2k))".into(),
        validity: "x >= x0(k)".into(),
        params: vec![("lambda_k".into(), "per order; see the lambda tables".into())],
        provenance: "tk-explicit-envelope",
    });
    out.push(BoundDescriptor {
        id: "composite-delta3".into(),
        formula: "3x log(x/u)/(2u) + x log x/(4u^2) + 1.501(2g-1)x/u + 1.968 sqrt(xu) + 53.394 sqrt(x) + 0.173 sqrt(x/u), u = A x^(1/3) (log x)^(2/3)".into(),
        validity: "u >= 84 and x/u >= 6e5".into(),
        params: vec![("A".into(), COMPOSITE_SCALE_A.into())],
        provenance: "t3-proof-composite",
    });
    for (id, formula, validity) in [
        ("divisor-sum-crude", "v log v + (2g-1)v + 0.173 sqrt(v)", "v >= 6e5"),
        ("harmonic-log-remainder", "log(x/u)/(2u) + log(x)/(4u^2)", "e^(3/2) <= u <= x"),
        ("harmonic-remainder", "0.501/u", "u >= 84"),
        ("divisor-ratio-remainder", "1.001 v^(-1/2)", "v >= 6e5"),
        ("divisor-sum-remainder", "0.173 sqrt(v)", "v >= 6e5"),
        ("delta-sum-majorant", "0.794 sqrt(xu) + 53.394 sqrt(x)", "1 <= u <= x"),
        (
            "log-power-integral",
            "(U^(1-b)-1) (log x)^a / (1-b)",
            "a > 0, 0 < b < 1, 1 < U < x",
        ),
        (
            "tail-integral",
            "(k-1) t^(-1/(k-1)) (log t)^((k-2)(k-3)/(2(k-1))) (1 + (k^2-3k+4)/(2 log t))",
            "k > 2, t = x/U > 1",
        ),
        (
            "hyperbola-r1",
            "(x/U) P_{k-1}(log(x/U)) + lambda_{k-1} (x/U)^((k-2)/(k-1)) (log(x/U))^((k-2)(k-3)/(2(k-1)))",
            "k >= 3, x > U > 1",
        ),
        (
            "hyperbola-r2",
            "lambda_{k-1}(k-1) x^((k-2)/(k-1)) (U^(1/(k-1))-1)(log x)^((k-2)(k-3)/(2(k-1))) + (k-1)(log x)^(k-2)(1/(2U) + (k-2)/(8U^2 log U))",
            "k >= 3, x > U > 1",
        ),
        (
            "hyperbola-r3",
            "(k^3-4k^2+7k-4)/2 lambda_{k-1} U^(1/(k-1)) (log(x/U))^((k^2-7k+8)/(2(k-1))) / x^(1/(k-1)) + (log x)^(k-2)/U + k lambda_{k-1} U^(1/(k-1)) (log(x/U))^((k-2)(k-3)/(2(k-1))) / x^(1/(k-1))",
            "k >= 3, x > U > 1",
        ),
        (
            "hyperbola-r4",
            "lambda_{k-1} (x/U)^((k-2)/(k-1)) (log(x/U))^((k-2)(k-3)/(2(k-1)))",
            "k >= 3, x > U > 1",
        ),
    ] {
        out.push(BoundDescriptor {
            id: id.into(),
            formula: formula.into(),
            validity: validity.into(),
            params: vec![],
            provenance: "proof-term-bound",
        });
    }
    out
}

pub fn registry_json() -> String {
    serde_json::to_string_pretty(&registry()).unwrap()
}
