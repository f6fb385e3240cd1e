//! Numerical property suites for the supporting inequalities: certified quadrature
//! checks of the two integral majorants, the exact-rational telescoping
//! identity, and the divisor-sum ground-truth checks of the proof-term
//! bounds. Failures are report entries, never panics: each sample is
//! certified as holding (with a positive margin), violated (the bracketed
//! lower bound alone exceeds the claimed majorant), or inconclusive (budget
//! exhausted before certification).

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::ApproxReal;
use crate::bounds::{lemma_rhs, LemmaRhs};
use crate::divisor::Siever;
use crate::error::Result;
use crate::gamma::StieltjesTable;
use crate::quad::{DecreasingIntegrator, Split};

/// Eval budget per quadrature sample.
pub const DEFAULT_MAX_EVALS: usize = 40_000;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SampleOutcome {
    Holds { margin: String },
    Violated { excess: String },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleResult {
    pub params: String,
    pub outcome: SampleOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub samples: u32,
    pub holds: u32,
    pub violated: u32,
    pub inconclusive: u32,
    /// smallest certified margin among holding samples (decimal)
    pub min_margin: Option<String>,
    /// every non-holding sample, plus the min-margin holder
    pub notable: Vec<SampleResult>,
}

fn summarize(name: &'static str, results: Vec<(String, SampleOutcome, f64)>) -> SuiteReport {
    let mut holds = 0;
    let mut violated = 0;
    let mut inconclusive = 0;
    let mut min_margin: Option<(f64, usize)> = None;
    for (i, (_, outcome, margin)) in results.iter().enumerate() {
        match outcome {
            SampleOutcome::Holds { .. } => {
                holds += 1;
                if min_margin.map_or(true, |(m, _)| *margin < m) {
                    min_margin = Some((*margin, i));
                }
            }
            SampleOutcome::Violated { .. } => violated += 1,
            SampleOutcome::Inconclusive { .. } => inconclusive += 1,
        }
    }
    let mut notable: Vec<SampleResult> = results
        .iter()
        .filter(|(_, o, _)| !matches!(o, SampleOutcome::Holds { .. }))
        .take(200)
        .map(|(p, o, _)| SampleResult {
            params: p.clone(),
            outcome: o.clone(),
        })
        .collect();
    if let Some((_, i)) = min_margin {
        notable.push(SampleResult {
            params: results[i].0.clone(),
            outcome: results[i].1.clone(),
        });
    }
    SuiteReport {
        name,
        samples: results.len() as u32,
        holds,
        violated,
        inconclusive,
        min_margin: min_margin.map(|(m, _)| format!("{m:.3e}")),
        notable,
    }
}

fn rng_for(seed: u64, salt: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ index.wrapping_mul(0xBF58_476D_1CE4_E5B9),
    )
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: u64, hi: u64) -> u64 {
    let u = (rng.random::<u64>() >> 11) as f64 / (1u64 << 53) as f64;
    let v = ((hi as f64 / lo as f64).powf(u) * lo as f64) as u64;
    v.clamp(lo, hi)
}

fn raw(m: BigInt) -> ApproxReal {
    ApproxReal::from_raw(m, BigUint::zero())
}

/// Certify one sample of the log-power integral majorant:
/// `∫₁^U (log(x/a))^α / a^β da  <  (U^{1-β}-1)(log x)^α/(1-β)`.
///
/// The integrand is a product of positive non-increasing factors, so it is
/// non-increasing and bracketing is sound with no further certificate.
fn check_log_power_sample(alpha16: u32, beta16: u32, x: u64, u: u64, max_evals: usize) -> Result<(SampleOutcome, f64)> {
    let alpha = ApproxReal::from_ratio(alpha16 as i128, 16);
    let beta = ApproxReal::from_ratio(beta16 as i128, 16);
    let xa = ApproxReal::from_u64(x);
    let ua = ApproxReal::from_u64(u);
    let rhs = lemma_rhs(LemmaRhs::LogPowerIntegral {
        alpha: &alpha,
        beta: &beta,
        u: &ua,
        x: &xa,
    })?;
    let lx = xa.ln()?;
    let f = |a: &ApproxReal| -> Result<ApproxReal> {
        let la = a.ln()?;
        let lxa = lx.sub(&la);
        let num = lxa.pow(&alpha)?;
        let den = la.mul(&beta).exp()?;
        num.div(&den)
    };
    let mut it = DecreasingIntegrator::new(&f, &ApproxReal::one(), &ua, 16, Split::Geometric)?;
    loop {
        let (lo, hi) = it.bounds();
        if hi.hi() < rhs.lo() {
            let margin = raw(rhs.lo() - hi.hi());
            return Ok((
                SampleOutcome::Holds {
                    margin: margin.to_decimal(6),
                },
                margin.to_f64(),
            ));
        }
        if lo.lo() > rhs.hi() {
            let excess = raw(lo.lo() - rhs.hi());
            return Ok((
                SampleOutcome::Violated {
                    excess: excess.to_decimal(6),
                },
                0.0,
            ));
        }
        if it.evals() > max_evals {
            return Ok((
                SampleOutcome::Inconclusive {
                    reason: format!("budget {max_evals} evals exhausted"),
                },
                0.0,
            ));
        }
        it.refine(64)?;
    }
}

/// log-power-integral suite: seeded samples of (α, β, U, x) with
/// α ∈ (0,5] and β ∈ (0,1) on 1/16 grids, 1 < U < x ≤ 10⁶.
pub fn log_power_integral_suite(seed: u64, samples: u32, max_evals: usize) -> SuiteReport {
    let results: Vec<(String, SampleOutcome, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, 0x11, i);
            let alpha16 = rng.random_range(1..=80u32);
            let beta16 = rng.random_range(1..=15u32);
            let x = log_uniform(&mut rng, 100, 1_000_000);
            let u = log_uniform(&mut rng, 2, x - 1);
            let params = format!("alpha={}/16 beta={}/16 U={} x={}", alpha16, beta16, u, x);
            match check_log_power_sample(alpha16, beta16, x, u, max_evals) {
                Ok((o, m)) => (params, o, m),
                Err(e) => (
                    params,
                    SampleOutcome::Inconclusive {
                        reason: e.to_string(),
                    },
                    0.0,
                ),
            }
        })
        .collect();
    summarize("log-power-integral", results)
}

/// Certify one sample of the tail-integral majorant:
/// `∫_T^∞ (log t)^c / (t^{1/(k-1)}(t+1)) dt ≤ RHS(k, T)`, `c = (k-2)(k-3)/(2(k-1))`.
///
/// The integrand is certified non-increasing on `[T, ∞)` by the sufficient
/// condition `c/log T ≤ 1/(k-1) + T/(T+1)` (left side decreasing in t, right
/// side increasing). The far tail beyond `t_far = e^{m}` with
/// `m ≥ (k-2)(k-3)` is majorized by
/// `(k-1)^{c+1} · 2 z^c e^{-z}`, `z = m/(k-1) ≥ 2c`, from
/// `∫ u^c e^{-su} du = s^{-c-1} Γ(c+1, z)` and
/// `Γ(a, z) ≤ z^{a-1} e^{-z}/(1-(a-1)/z) ≤ 2 z^{a-1} e^{-z}` for `z ≥ 2(a-1)`.
fn check_tail_sample(k: u32, t: u64, max_evals: usize) -> Result<(SampleOutcome, f64)> {
    let ta = ApproxReal::from_u64(t);
    let rhs = lemma_rhs(LemmaRhs::TailIntegral { k, t: &ta })?;
    let c_num = ((k - 2) * (k - 3)) as i64;
    let c_den = 2 * (k - 1);
    // monotonicity certificate at t = T
    let lt = ta.ln()?;
    let lhs_mono = ApproxReal::from_ratio(c_num as i128, c_den as i128).div(&lt)?;
    let rhs_mono = ApproxReal::from_ratio(1, (k - 1) as i128)
        .add(&ta.div(&ta.add(&ApproxReal::one()))?);
    if !lhs_mono.definitely_le(&rhs_mono) {
        return Ok((
            SampleOutcome::Inconclusive {
                reason: "monotonicity certificate failed".into(),
            },
            0.0,
        ));
    }
    let g = |tv: &ApproxReal| -> Result<ApproxReal> {
        let num = tv.ln()?.pow_frac(c_num, c_den)?;
        let den = tv.pow_frac(1, k - 1)?.mul(&tv.add(&ApproxReal::one()));
        num.div(&den)
    };
    // far cutoff: at least (k-2)(k-3) e-folds (so z ≥ 2c holds), pushed 80
    // further so the tail majorant sits far below certification margins even
    // for samples near the majorant's crossover
    let m_far = (((k - 2) * (k - 3)) as u64).max((t as f64).ln().ceil() as u64) + 80;
    let t_far = ApproxReal::from_u64(m_far).exp()?;
    let z = ApproxReal::from_ratio(m_far as i128, (k - 1) as i128);
    let tail_hi = ApproxReal::from_u64((k - 1) as u64)
        .pow_frac((k * k - 3 * k + 4) as i64, c_den)?
        .mul_i64(2)
        .mul(&z.pow_frac(c_num, c_den)?)
        .mul(&z.neg().exp()?);
    let mut it = DecreasingIntegrator::new(&g, &ta, &t_far, 48, Split::Geometric)?;
    loop {
        let (lo, hi) = it.bounds();
        let hi_total = hi.add(&tail_hi);
        if hi_total.hi() < rhs.lo() {
            let margin = raw(rhs.lo() - hi_total.hi());
            return Ok((
                SampleOutcome::Holds {
                    margin: margin.to_decimal(6),
                },
                margin.to_f64(),
            ));
        }
        if lo.lo() > rhs.hi() {
            let excess = raw(lo.lo() - rhs.hi());
            return Ok((
                SampleOutcome::Violated {
                    excess: excess.to_decimal(6),
                },
                0.0,
            ));
        }
        if it.evals() > max_evals {
            return Ok((
                SampleOutcome::Inconclusive {
                    reason: format!("budget {max_evals} evals exhausted"),
                },
                0.0,
            ));
        }
        it.refine(64)?;
    }
}

/// tail-integral suite: seeded samples of (k ∈ {3..8}, x/U ∈ [10, 10⁶]).
pub fn tail_integral_suite(seed: u64, samples: u32, max_evals: usize) -> SuiteReport {
    let results: Vec<(String, SampleOutcome, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, 0x22, i);
            let k = rng.random_range(3..=8u32);
            let t = log_uniform(&mut rng, 10, 1_000_000);
            let params = format!("k={k} x/U={t}");
            match check_tail_sample(k, t, max_evals) {
                Ok((o, m)) => (params, o, m),
                Err(e) => (
                    params,
                    SampleOutcome::Inconclusive {
                        reason: e.to_string(),
                    },
                    0.0,
                ),
            }
        })
        .collect();
    summarize("tail-integral", results)
}

/// Exact-rational telescoping identity:
/// `Σ_{n≤N} d_{k-1}(n)/n = Σ_{n≤N} T_{k-1}(n)/(n(n+1)) + T_{k-1}(N)/(N+1)`.
pub fn telescoping_suite(seed: u64, samples: u32) -> SuiteReport {
    // d_{k-1} prefix values up to the largest possible N = 5000
    let max_n = 5000u64;
    let d_tables: Vec<Vec<u64>> = (1..=5u32)
        .map(|j| Siever::new(j).block(1, max_n).unwrap().values)
        .collect();

    let results: Vec<(String, SampleOutcome, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, 0x33, i);
            let k = rng.random_range(2..=6u32);
            let x = rng.random_range(3..=10_000u64);
            let u = rng.random_range(2..=x - 1);
            let n_cap = x / u;
            let params = format!("k={k} x={x} U={u} N={n_cap}");
            let d = &d_tables[(k - 2) as usize];
            let mut lhs = BigRational::zero();
            let mut rhs = BigRational::zero();
            let mut t_acc = BigInt::zero();
            for n in 1..=n_cap {
                let dn = BigInt::from(d[(n - 1) as usize]);
                t_acc += &dn;
                lhs += BigRational::new(dn, BigInt::from(n));
                rhs += BigRational::new(t_acc.clone(), BigInt::from(n) * BigInt::from(n + 1));
            }
            rhs += BigRational::new(t_acc, BigInt::from(n_cap + 1));
            if lhs == rhs {
                (
                    params,
                    SampleOutcome::Holds {
                        margin: "exact".into(),
                    },
                    f64::INFINITY,
                )
            } else {
                (
                    params,
                    SampleOutcome::Violated {
                        excess: (lhs - rhs).to_string(),
                    },
                    0.0,
                )
            }
        })
        .collect();
    let mut rep = summarize("telescoping", results);
    rep.min_margin = Some("exact".into());
    rep
}

/// Ground truth for the two divisor-sum remainder bounds at sampled integer
/// v ∈ [6·10⁵, 10⁷] (endpoints always included):
///
/// * `|Σ_{b≤v} d(b) − (v log v + (2γ−1)v)| ≤ 0.173 √v`
/// * `|Σ_{b≤v} d(b)/b − (log²v/2 + 2γ log v + γ² − 2γ₁)| ≤ 1.001 v^{-1/2}`
///
/// Sums are exact (the ratio sum is tracked in 2⁻⁶⁴ fixed point with a
/// one-sided error below v·2⁻⁶⁴, folded into the margin).
pub fn divisor_error_term_suite(seed: u64, samples: u32) -> Result<SuiteReport> {
    const LO: u64 = 600_000;
    const HI: u64 = 10_000_000;
    let mut vs: Vec<u64> = vec![LO, HI];
    let mut rng = rng_for(seed, 0x44, 0);
    while vs.len() < samples.max(2) as usize {
        vs.push(log_uniform(&mut rng, LO, HI));
    }
    vs.sort_unstable();
    vs.dedup();

    // one naive pass collecting both sums at the checkpoints
    let mut siever = Siever::new(2);
    let mut t_acc: u128 = 0;
    let mut s_fix: u128 = 0; // Σ d(b)/b in 2^-64 fixed point, floor per term
    let mut idx = 0usize;
    let mut t_at = vec![0u128; vs.len()];
    let mut s_at = vec![0u128; vs.len()];
    let mut lo = 1u64;
    while lo <= HI && idx < vs.len() {
        let hi = (lo + (1 << 20) - 1).min(HI);
        let block = siever.block(lo, hi)?;
        for n in lo..=hi {
            let d = block.value(n);
            t_acc += d as u128;
            s_fix += ((d as u128) << 64) / n as u128;
            while idx < vs.len() && vs[idx] == n {
                t_at[idx] = t_acc;
                s_at[idx] = s_fix;
                idx += 1;
            }
        }
        lo = hi + 1;
    }

    let table = StieltjesTable::shared(2);
    let g = table.euler();
    let g1 = table.gamma(1);
    let two_g_m1 = g.mul_i64(2).sub(&ApproxReal::one());
    let f = crate::approx::frac_bits();

    let mut results = Vec::new();
    for (i, &v) in vs.iter().enumerate() {
        let va = ApproxReal::from_u64(v);
        let lv = va.ln()?;
        let sqrt_v = va.sqrt()?;

        // divisor-sum remainder
        let main6 = va.mul(&lv).add(&two_g_m1.mul(&va));
        let delta6 = ApproxReal::from_u128(t_at[i]).sub(&main6).abs();
        let bound6 = ApproxReal::from_ratio(173, 1000).mul(&sqrt_v);
        let m6 = raw(bound6.lo() - delta6.hi());
        results.push((
            format!("divisor-sum v={v}"),
            if m6.definitely_positive() {
                SampleOutcome::Holds {
                    margin: m6.to_decimal(6),
                }
            } else {
                SampleOutcome::Violated {
                    excess: m6.neg().to_decimal(6),
                }
            },
            m6.to_f64(),
        ));

        // divisor-ratio remainder
        let s_m: BigInt = (BigInt::from(s_at[i]) << f) >> 64u32;
        let s_r: BigUint = ((BigUint::from(v) << f) >> 64u32) + BigUint::from(2u32);
        let s = ApproxReal::from_raw(s_m, s_r);
        let main5 = lv
            .mul(&lv)
            .div_u64(2)
            .add(&g.mul_i64(2).mul(&lv))
            .add(&g.mul(g))
            .sub(&g1.mul_i64(2));
        let delta5 = s.sub(&main5).abs();
        let bound5 = ApproxReal::from_ratio(1001, 1000).div(&sqrt_v)?;
        let m5 = raw(bound5.lo() - delta5.hi());
        results.push((
            format!("divisor-ratio v={v}"),
            if m5.definitely_positive() {
                SampleOutcome::Holds {
                    margin: m5.to_decimal(6),
                }
            } else {
                SampleOutcome::Violated {
                    excess: m5.neg().to_decimal(6),
                }
            },
            m5.to_f64(),
        ));
    }
    Ok(summarize("divisor-error-terms", results))
}

/// Aggregate report of every suite, as the verifier exposes it.
#[derive(Debug, Clone, Serialize)]
pub struct FullSuiteReport {
    pub seed: u64,
    pub samples: u32,
    pub suites: Vec<SuiteReport>,
}

impl FullSuiteReport {
    pub fn all_hold(&self) -> bool {
        self.suites.iter().all(|s| s.violated == 0 && s.inconclusive == 0)
    }
}

/// Run the quadrature checks, the telescoping identity, and the divisor-sum
/// ground truth with a seeded generator.
pub fn lemma_property_suite(seed: u64, samples: u32) -> Result<FullSuiteReport> {
    let telescoping_samples = samples.min(200);
    let eterm_samples = samples.min(50);
    Ok(FullSuiteReport {
        seed,
        samples,
        suites: vec![
            log_power_integral_suite(seed, samples, DEFAULT_MAX_EVALS),
            tail_integral_suite(seed, samples, DEFAULT_MAX_EVALS),
            telescoping_suite(seed, telescoping_samples),
            divisor_error_term_suite(seed, eterm_samples)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_power_small_run_all_hold() {
        let rep = log_power_integral_suite(42, 25, DEFAULT_MAX_EVALS);
        assert_eq!(rep.holds, 25, "{:?}", rep.notable);
        assert_eq!(rep.violated, 0);
        assert_eq!(rep.inconclusive, 0);
    }

    #[test]
    fn tail_integral_small_orders_hold() {
        // k <= 6 holds everywhere in the sampled region
        for t in [10u64, 1000, 1_000_000] {
            for k in 3..=6u32 {
                let (o, _) = check_tail_sample(k, t, DEFAULT_MAX_EVALS).unwrap();
                assert!(
                    matches!(o, SampleOutcome::Holds { .. }),
                    "k={k} t={t}: {o:?}"
                );
            }
        }
    }

    #[test]
    fn tail_integral_known_violations_are_certified() {
        // the majorant is genuinely false at small x/U for k = 7 and
        // throughout the sampled range for k = 8
        let (o, _) = check_tail_sample(7, 10, DEFAULT_MAX_EVALS).unwrap();
        assert!(matches!(o, SampleOutcome::Violated { .. }), "{o:?}");
        let (o, _) = check_tail_sample(8, 1_000_000, DEFAULT_MAX_EVALS).unwrap();
        assert!(matches!(o, SampleOutcome::Violated { .. }), "{o:?}");
        // ... and genuinely true for k = 7 once x/U is large
        let (o, _) = check_tail_sample(7, 10_000, DEFAULT_MAX_EVALS).unwrap();
        assert!(matches!(o, SampleOutcome::Holds { .. }), "{o:?}");
    }

    #[test]
    fn telescoping_exact() {
        let rep = telescoping_suite(7, 40);
        assert_eq!(rep.holds, 40);
        assert_eq!(rep.violated, 0);
    }

    #[test]
    fn divisor_error_terms_hold_with_margin() {
        let rep = divisor_error_term_suite(42, 6).unwrap();
        assert_eq!(rep.violated, 0, "{:?}", rep.notable);
        assert_eq!(rep.inconclusive, 0);
        assert!(rep.holds >= 12); // two inequalities per sampled v
    }

    #[test]
    fn suite_is_deterministic() {
        let a = log_power_integral_suite(5, 10, DEFAULT_MAX_EVALS);
        let b = log_power_integral_suite(5, 10, DEFAULT_MAX_EVALS);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
