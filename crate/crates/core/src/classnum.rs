//! Class-number application: an upper bound on `h_K` from the field degree
//! and Minkowski bound via `h_K ≤ Σ_{m≤b} d_{n_K}(m) = T_{n_K}(⌊b⌋)`,
//! either as the exact integer sum or as a main-term-plus-envelope bound.

use serde::Serialize;

use crate::approx::ApproxReal;
use crate::bounds;
use crate::divisor;
use crate::error::{Error, Result};
use crate::gamma::StieltjesTable;
use crate::mainterm;

/// Largest Minkowski bound the exact-sum mode will attempt.
pub const MAX_EXACT_BOUND: u64 = 100_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassNumberMode {
    ExactSum,
    Envelope,
}

#[derive(Debug, Clone)]
pub struct ClassNumberQuery {
    /// field degree `n_K ≥ 2`
    pub degree: u32,
    /// Minkowski bound, accepted as a real and floored internally
    pub minkowski_bound: ApproxReal,
    pub mode: ClassNumberMode,
    /// when an envelope is requested below its validity threshold, fall back
    /// to the exact sum (with a notice) instead of erroring
    pub fallback: bool,
}

#[derive(Debug, Clone, Serialize)]
pub enum ClassNumberValue {
    Exact(u128),
    /// certified upper bound (the enclosure's upper end), 30 digits
    Upper(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassNumberCertificate {
    pub degree: u32,
    pub minkowski_bound: String,
    pub floored_bound: u64,
    pub mode_requested: ClassNumberMode,
    pub mode_used: ClassNumberMode,
    pub bound: ClassNumberValue,
    pub library_version: &'static str,
    /// which envelope supplied the error-term constant, when one did
    pub envelope_provenance: Option<String>,
    pub notice: Option<String>,
}

/// The envelope rows usable per degree: `(λ_k as decimal, x₀ threshold)`.
/// Degree 2 uses the piecewise square-root envelope instead.
fn envelope_row(degree: u32) -> Option<(&'static str, u64, &'static str)> {
    match degree {
        3 => Some(("4.662", 100_000_000, "order-3 recursion row (x0 = 1e8)")),
        4 => Some(("33.480", 78_962_960_182_680, "order-4 table row (x0 = e^32)")),
        // e^57 and e^93 exceed u64; the row is unusable for representable b,
        // which the validity check below reports faithfully
        5 => Some(("219.057", u64::MAX, "order-5 table row (x0 = e^57)")),
        6 => Some(("1576.988", u64::MAX, "order-6 table row (x0 = e^93)")),
        _ => None,
    }
}

pub fn class_number_bound(q: &ClassNumberQuery) -> Result<ClassNumberCertificate> {
    if q.degree < 2 {
        return Err(Error::Domain("class_number_bound requires degree >= 2".into()));
    }
    if q.minkowski_bound.lo() < ApproxReal::one().lo() {
        return Err(Error::Domain("class_number_bound requires b >= 1".into()));
    }
    let b_floor: u64 = {
        let f = crate::approx::frac_bits();
        let m = q.minkowski_bound.lo();
        u64::try_from(&(m.magnitude() >> f).clone())
            .map_err(|_| Error::Domain("Minkowski bound too large".into()))?
    };

    let exact = |notice: Option<String>| -> Result<ClassNumberCertificate> {
        if b_floor > MAX_EXACT_BOUND {
            return Err(Error::Domain(format!(
                "exact sum not attempted above b = {MAX_EXACT_BOUND}"
            )));
        }
        let t = divisor::summatory_hyperbola(q.degree, b_floor)?.value;
        Ok(ClassNumberCertificate {
            degree: q.degree,
            minkowski_bound: q.minkowski_bound.to_decimal(20),
            floored_bound: b_floor,
            mode_requested: q.mode,
            mode_used: ClassNumberMode::ExactSum,
            bound: ClassNumberValue::Exact(t),
            library_version: env!("CARGO_PKG_VERSION"),
            envelope_provenance: None,
            notice,
        })
    };

    match q.mode {
        ClassNumberMode::ExactSum => exact(None),
        ClassNumberMode::Envelope => {
            let xa = ApproxReal::from_u64(b_floor);
            let (delta_env, provenance, valid) = if q.degree == 2 {
                let env = bounds::delta2_bound(&xa)?;
                (env, "piecewise sqrt envelope".to_string(), true)
            } else {
                match envelope_row(q.degree) {
                    Some((lambda, x0, provenance)) => {
                        if b_floor >= x0 {
                            let lam = ApproxReal::from_decimal_str(lambda)?;
                            let env = bounds::thm2_bound(q.degree, &lam, &xa)?;
                            (env, provenance.to_string(), true)
                        } else {
                            (ApproxReal::zero(), provenance.to_string(), false)
                        }
                    }
                    None => (ApproxReal::zero(), "no envelope row for this degree".into(), false),
                }
            };
            if !valid {
                if q.fallback {
                    return exact(Some(format!(
                        "envelope not valid at b = {b_floor} ({provenance}); fell back to the exact sum"
                    )));
                }
                return Err(Error::Domain(format!(
                    "envelope not valid at b = {b_floor} ({provenance}) and fallback disabled"
                )));
            }
            let table = StieltjesTable::shared((q.degree as usize).saturating_sub(2).max(2));
            let poly = mainterm::main_term_poly(q.degree, &table)?;
            let main = mainterm::eval_main_poly(&poly, &xa)?;
            let total = main.add(&delta_env);
            let upper = ApproxReal::from_raw(total.hi(), num_bigint::BigUint::ZERO);
            Ok(ClassNumberCertificate {
                degree: q.degree,
                minkowski_bound: q.minkowski_bound.to_decimal(20),
                floored_bound: b_floor,
                mode_requested: q.mode,
                mode_used: ClassNumberMode::Envelope,
                bound: ClassNumberValue::Upper(upper.to_decimal(30)),
                library_version: env!("CARGO_PKG_VERSION"),
                envelope_provenance: Some(provenance),
                notice: None,
            })
        }
    }
}

/// Re-run a certificate's recorded inputs; byte-identical bound expected.
pub fn replay(cert: &ClassNumberCertificate) -> Result<ClassNumberCertificate> {
    class_number_bound(&ClassNumberQuery {
        degree: cert.degree,
        minkowski_bound: ApproxReal::from_decimal_str(&cert.minkowski_bound)?,
        mode: cert.mode_requested,
        fallback: cert.notice.is_some(),
    })
}
