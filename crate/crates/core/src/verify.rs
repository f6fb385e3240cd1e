//! Checkpointed, block-parallel range verification: scan every integer jump
//! of `T_k` on a range, evaluate both one-sided `Δ_k` values with exact `T_k`
//! and a radius-accounted main term, and certify each point against a chosen
//! envelope. A PASS means `|Δ| + radius ≤ bound` at every scanned point; a
//! violation means `|Δ| − radius > bound`; anything in between is counted as
//! indeterminate (and prevents a PASS).

use std::collections::BTreeMap;
use std::io::{BufRead, Write as IoWrite};
use std::path::PathBuf;
use std::sync::mpsc;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::approx::{frac_bits, ApproxReal};
use crate::bounds::{PowerPiece, ScanBound};
use crate::divisor::{summatory_hyperbola, Siever};
use crate::error::{Error, Result};
use crate::mainterm::{shared_main_term, JumpSide, MainTermPolynomial};

/// Versioned checkpoint header tag.
pub const CHECKPOINT_MAGIC: &str = "PDLV1";

const MILESTONE_BITS: u32 = 14;

/// Scan configuration. `worker_count` and `stop_after_blocks` are execution
/// details and are excluded from the config hash, so a checkpointed run can
/// be resumed with different parallelism.
#[derive(Debug, Clone)]
pub struct VerificationConfig {
    pub k: u32,
    pub x_lo: u64,
    pub x_hi: u64,
    pub bound: ScanBound,
    pub block_size: u64,
    pub worker_count: usize,
    pub checkpoint_path: Option<PathBuf>,
    pub sample_stride: u64,
    pub stop_after_blocks: Option<u64>,
    /// force exact integer comparisons at every point (no f64 fast path)
    pub exact_compare: bool,
}

impl VerificationConfig {
    pub fn new(k: u32, x_lo: u64, x_hi: u64, bound: ScanBound) -> Self {
        VerificationConfig {
            k,
            x_lo,
            x_hi,
            bound,
            block_size: 1_000_000,
            worker_count: 1,
            checkpoint_path: None,
            sample_stride: 1,
            stop_after_blocks: None,
            exact_compare: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_lo < 1 || self.x_lo > self.x_hi {
            return Err(Error::Domain("need 1 <= x_lo <= x_hi".into()));
        }
        if self.block_size < 1 || self.sample_stride < 1 {
            return Err(Error::Domain("block_size and sample_stride must be >= 1".into()));
        }
        if self.bound.validity_lo() > self.x_lo {
            return Err(Error::Domain(format!(
                "bound {} is only valid from x = {}, scan starts at {}",
                self.bound.id,
                self.bound.validity_lo(),
                self.x_lo
            )));
        }
        Ok(())
    }

    /// Hash of everything that determines the scan's mathematical content.
    pub fn config_hash(&self) -> String {
        let mut canon = format!(
            "{CHECKPOINT_MAGIC};k={};x_lo={};x_hi={};block_size={};stride={};bound={}",
            self.k, self.x_lo, self.x_hi, self.block_size, self.sample_stride, self.bound.id
        );
        for (thr, p) in &self.bound.pieces {
            canon.push_str(&format!(
                ";{thr}:{}/{}:x{}/{}:l{}/{}",
                p.c_num, p.c_den, p.x_num, p.x_den, p.l_num, p.l_den
            ));
        }
        let digest = Sha256::digest(canon.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn block_count(&self) -> u64 {
        (self.x_hi - self.x_lo) / self.block_size + 1
    }

    fn block_range(&self, index: u64) -> (u64, u64) {
        let s = self.x_lo + index * self.block_size;
        let e = (s + self.block_size - 1).min(self.x_hi);
        (s, e)
    }
}

/// One violation, with the offending values rendered at 30 digits.
#[derive(Debug, Clone, Serialize)]
pub struct ViolationEntry {
    pub x: u64,
    pub side: JumpSide,
    pub delta: String,
    pub bound: String,
}

/// Per-block scan outcome (internal; serialized to a digest line).
#[derive(Debug, Clone)]
pub struct BlockOutcome {
    pub index: u64,
    pub x_start: u64,
    pub x_end: u64,
    pub t_end: u128,
    pub max_ratio: ApproxReal,
    pub argmax: u64,
    pub side: JumpSide,
    pub points_checked: u64,
    pub violations: Vec<ViolationEntry>,
    pub violations_truncated: u64,
    pub indeterminate: u64,
}

/// The audit digest of a completed block — exactly one checkpoint line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDigest {
    pub index: u64,
    pub x_start: u64,
    pub x_end: u64,
    pub t_end: u128,
    pub max_ratio: String,
    pub argmax: u64,
    pub side: String,
    pub violation_count: u64,
}

impl BlockDigest {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.index,
            self.x_start,
            self.x_end,
            self.t_end,
            self.max_ratio,
            self.argmax,
            self.side,
            self.violation_count
        )
    }

    pub fn parse(line: &str) -> Result<BlockDigest> {
        let parts: Vec<&str> = line.trim_end().split(',').collect();
        if parts.len() != 8 {
            return Err(Error::CheckpointCorrupt(format!("bad line: {line:?}")));
        }
        Ok(BlockDigest {
            index: parts[0].parse().map_err(|_| bad(line))?,
            x_start: parts[1].parse().map_err(|_| bad(line))?,
            x_end: parts[2].parse().map_err(|_| bad(line))?,
            t_end: parts[3].parse().map_err(|_| bad(line))?,
            max_ratio: parts[4].to_string(),
            argmax: parts[5].parse().map_err(|_| bad(line))?,
            side: parts[6].to_string(),
            violation_count: parts[7].parse().map_err(|_| bad(line))?,
        })
    }
}

fn bad(line: &str) -> Error {
    Error::CheckpointCorrupt(format!("bad line: {line:?}"))
}

impl BlockOutcome {
    fn digest(&self) -> BlockDigest {
        BlockDigest {
            index: self.index,
            x_start: self.x_start,
            x_end: self.x_end,
            t_end: self.t_end,
            max_ratio: self.max_ratio.to_decimal(30),
            argmax: self.argmax,
            side: match self.side {
                JumpSide::AtPoint => "at".into(),
                JumpSide::LeftLimit => "left".into(),
            },
            violation_count: self.violations.len() as u64 + self.violations_truncated,
        }
    }
}

/// A parsed checkpoint file.
pub struct Checkpoint {
    pub config_hash: String,
    pub digests: Vec<BlockDigest>,
}

impl Checkpoint {
    pub fn read(path: &std::path::Path) -> Result<Checkpoint> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::CheckpointCorrupt("empty file".into()))??;
        let mut it = header.split_whitespace();
        if it.next() != Some(CHECKPOINT_MAGIC) {
            return Err(Error::CheckpointCorrupt("missing header magic".into()));
        }
        let config_hash = it
            .next()
            .ok_or_else(|| Error::CheckpointCorrupt("missing config hash".into()))?
            .to_string();
        let mut digests = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            digests.push(BlockDigest::parse(&line)?);
        }
        for (i, d) in digests.iter().enumerate() {
            if d.index != i as u64 {
                return Err(Error::CheckpointCorrupt(format!(
                    "non-contiguous block index {} at position {i}",
                    d.index
                )));
            }
        }
        Ok(Checkpoint {
            config_hash,
            digests,
        })
    }
}

/// Incremental natural-log tracker with block-partition-independent values:
/// the enclosure for `ln n` is always "full evaluation at the last multiple
/// of 2^14, then one small-step per integer", whatever order points are
/// visited in.
struct LnTracker {
    cur_n: u64,
    cur: ApproxReal,
}

impl LnTracker {
    fn new() -> LnTracker {
        LnTracker {
            cur_n: 0,
            cur: ApproxReal::zero(),
        }
    }

    fn get(&mut self, n: u64) -> Result<ApproxReal> {
        debug_assert!(n >= 1);
        let milestone = (n >> MILESTONE_BITS) << MILESTONE_BITS;
        if n < (1 << MILESTONE_BITS) || n == milestone {
            self.cur = ApproxReal::from_u64(n).ln()?;
            self.cur_n = n;
            return Ok(self.cur.clone());
        }
        if !(self.cur_n >= milestone && self.cur_n < n) {
            // canonical re-seed: full log at the milestone
            self.cur = ApproxReal::from_u64(milestone).ln()?;
            self.cur_n = milestone;
        }
        while self.cur_n < n {
            let step = ApproxReal::from_ratio(1, self.cur_n as i128).ln_1p()?;
            self.cur = self.cur.add(&step);
            self.cur_n += 1;
        }
        Ok(self.cur.clone())
    }
}

/// Result of certifying one point against one envelope piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PointStatus {
    CertifiedBelow,
    Violation,
    Indeterminate,
}

/// Exact integer certification of `|Δ| ± r` against
/// `c·x^(xn/xd)·(log x)^(ln/ld)`. Raising both (positive) sides to the
/// `lcm(xd, ld)`-th power turns the comparison into one between integers.
fn certify_exact(
    piece: &PowerPiece,
    x: u64,
    d_abs: &BigUint,
    r: &BigUint,
    l: &ApproxReal,
) -> PointStatus {
    let f = frac_bits();
    let m_pow = (piece.x_den as u64).lcm(&(piece.l_den as u64)) as u32;
    let ex = m_pow / piece.x_den * piece.x_num;
    let el = if piece.l_num == 0 {
        0
    } else {
        m_pow / piece.l_den * piece.l_num
    };
    let cn = BigUint::from(piece.c_num).pow(m_pow);
    let cd = BigUint::from(piece.c_den).pow(m_pow);
    let x_pow = BigUint::from(x).pow(ex);

    let compare = |d_side: &BigUint, l_side: &BigInt| -> std::cmp::Ordering {
        // (d/2^F)^M · 1 vs (cn/cd)^M · x^ex · (l/2^F)^el
        let lhs = d_side.pow(m_pow) * &cd;
        let l_mag = l_side.max(&BigInt::zero()).magnitude().clone();
        let rhs = &cn * &x_pow * l_mag.pow(el);
        // scale: lhs/2^{F·M} vs rhs/2^{F·el}
        let (lhs, rhs) = if m_pow as u64 >= el as u64 {
            (lhs, rhs << (f * (m_pow as u64 - el as u64)))
        } else {
            (lhs << (f * (el as u64 - m_pow as u64)), rhs)
        };
        lhs.cmp(&rhs)
    };

    // pass: (|Δ|+r) ≤ bound evaluated with the log's lower bound
    let d_hi = d_abs + r;
    let l_lo = l.lo();
    if compare(&d_hi, &l_lo) != std::cmp::Ordering::Greater {
        return PointStatus::CertifiedBelow;
    }
    // violation: (|Δ|−r) > bound evaluated with the log's upper bound
    if d_abs > r {
        let d_lo = d_abs - r;
        let l_hi = l.hi();
        if compare(&d_lo, &l_hi) == std::cmp::Ordering::Greater {
            return PointStatus::Violation;
        }
    }
    PointStatus::Indeterminate
}

/// f64 fast path: certify `|Δ|+r ≤ bound` when it holds with at least a
/// 1e-6 relative margin. The f64 evaluation of both sides is accurate to a
/// few units in the last place (inputs convert exactly up to 0.5 ulp; ln and
/// powf on IEEE doubles stay far below 1e-12 relative error), so the 1e-6
/// slack leaves six orders of magnitude of headroom. Anything closer falls
/// back to the exact integer comparison.
fn certify(
    piece: &PowerPiece,
    x: u64,
    d_abs: &BigUint,
    r: &BigUint,
    l: &ApproxReal,
    l_f64: f64,
    exact_only: bool,
) -> PointStatus {
    if !exact_only {
        let f = frac_bits() as i32;
        let d_hi = (d_abs + r).to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-f);
        let c = piece.c_num as f64 / piece.c_den as f64;
        let bound = c
            * (x as f64).powf(piece.x_num as f64 / piece.x_den as f64)
            * if piece.l_num == 0 {
                1.0
            } else {
                l_f64.powf(piece.l_num as f64 / piece.l_den as f64)
            };
        if d_hi < bound * (1.0 - 1e-6) {
            return PointStatus::CertifiedBelow;
        }
    }
    certify_exact(piece, x, d_abs, r, l)
}

struct MaxTracker {
    best: Option<(ApproxReal, u64, JumpSide)>,
    best_f: f64,
}

impl MaxTracker {
    fn new() -> Self {
        MaxTracker {
            best: None,
            best_f: -1.0,
        }
    }

    /// `ratio_f` must be accurate to much better than 1e-9 relative; only
    /// candidates within that slack of the running best pay for an exact
    /// ratio evaluation.
    fn offer(
        &mut self,
        ratio_f: f64,
        x: u64,
        side: JumpSide,
        exact_ratio: impl FnOnce() -> Result<ApproxReal>,
    ) -> Result<()> {
        if self.best.is_some() && ratio_f < self.best_f * (1.0 - 1e-9) - 1e-300 {
            return Ok(());
        }
        let exact = exact_ratio()?;
        match &self.best {
            Some((b, bx, bs)) => {
                let ord = exact.cmp_value(b);
                let better = match ord {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => {
                        (x, side_rank(side)) < (*bx, side_rank(*bs))
                    }
                };
                if better {
                    self.best = Some((exact.clone(), x, side));
                    self.best_f = exact.to_f64();
                }
            }
            None => {
                self.best_f = exact.to_f64();
                self.best = Some((exact, x, side));
            }
        }
        Ok(())
    }
}

fn side_rank(s: JumpSide) -> u8 {
    match s {
        JumpSide::LeftLimit => 0,
        JumpSide::AtPoint => 1,
    }
}

const VIOLATION_CAP: usize = 10_000;

/// Certify that `x·P_k(log x)` is increasing on the block: all coefficients
/// of `P + P'` positive (fast path), else interval-Horner positivity over a
/// subdivided log-range.
fn monotonicity_guard(
    poly: &MainTermPolynomial,
    l_lo: &ApproxReal,
    l_hi: &ApproxReal,
) -> Result<()> {
    let g = poly.derivative_plus();
    if g.iter().all(|c| c.definitely_positive()) && !l_lo.mantissa().is_negative() {
        return Ok(());
    }
    let pieces = 64;
    let width = l_hi.sub(l_lo);
    for i in 0..pieces {
        let a = l_lo.add(&width.mul_i64(i).div_u64(pieces as u64));
        let b = l_lo.add(&width.mul_i64(i + 1).div_u64(pieces as u64));
        let center = a.add(&b).div_u64(2);
        let half = b.sub(&a).div_u64(2);
        let arg = ApproxReal::from_raw(
            center.mantissa().clone(),
            center.radius() + half.hi().magnitude(),
        );
        let mut acc = ApproxReal::zero();
        for c in g.iter().rev() {
            acc = acc.mul(&arg).add(c);
        }
        if !acc.definitely_positive() {
            return Err(Error::Domain(format!(
                "main-term monotonicity guard failed for k={} on log-range [{}, {}]",
                poly.k,
                a.to_decimal(8),
                b.to_decimal(8)
            )));
        }
    }
    Ok(())
}

fn run_block(config: &VerificationConfig, poly: &MainTermPolynomial, index: u64) -> Result<BlockOutcome> {
    let (x_start, x_end) = config.block_range(index);
    let k = config.k;
    let f = frac_bits();

    let mut t_prev: u128 = if x_start == 1 {
        0
    } else {
        summatory_hyperbola(k, x_start - 1)?.value
    };

    let mut ln = LnTracker::new();
    monotonicity_guard(poly, &ln.get(x_start)?, &ApproxReal::from_u64(x_end).ln()?)?;

    let mut siever = Siever::new(k);
    let mut max = MaxTracker::new();
    let mut violations: Vec<ViolationEntry> = Vec::new();
    let mut violations_truncated = 0u64;
    let mut indeterminate = 0u64;
    let mut points_checked = 0u64;

    let mut lo = x_start;
    let mut t = t_prev;
    while lo <= x_end {
        let hi = (lo + (1 << 18) - 1).min(x_end);
        let block = siever.block(lo, hi)?;
        for n in lo..=hi {
            t_prev = t;
            t = t
                .checked_add(block.value(n) as u128)
                .ok_or(Error::Overflow("verify accumulation"))?;
            if (n - config.x_lo) % config.sample_stride != 0 {
                continue;
            }
            let piece = config.bound.piece_at(n)?;
            let l = ln.get(n)?;
            let l_f = l.to_f64();
            let main = poly.eval(&l).mul_i64(n as i64);
            let r = main.radius().clone();
            let bound_f = (piece.c_num as f64 / piece.c_den as f64)
                * (n as f64).powf(piece.x_num as f64 / piece.x_den as f64)
                * if piece.l_num == 0 {
                    1.0
                } else {
                    l_f.powf(piece.l_num as f64 / piece.l_den as f64)
                };
            for (side, t_used) in [(JumpSide::LeftLimit, t_prev), (JumpSide::AtPoint, t)] {
                if side == JumpSide::LeftLimit && n < 2 {
                    continue;
                }
                points_checked += 1;
                let d: BigInt = (BigInt::from(t_used) << f) - main.mantissa();
                let d_abs = d.magnitude().clone();
                match certify(piece, n, &d_abs, &r, &l, l_f, config.exact_compare) {
                    PointStatus::CertifiedBelow => {}
                    PointStatus::Violation => {
                        if violations.len() < VIOLATION_CAP {
                            violations.push(ViolationEntry {
                                x: n,
                                side,
                                delta: ApproxReal::from_raw(d.clone(), r.clone()).to_decimal(30),
                                bound: piece.eval(&ApproxReal::from_u64(n))?.to_decimal(30),
                            });
                        } else {
                            violations_truncated += 1;
                        }
                    }
                    PointStatus::Indeterminate => indeterminate += 1,
                }
                let ratio_f = (d_abs.to_f64().unwrap_or(f64::INFINITY)
                    * 2f64.powi(-(f as i32)))
                    / bound_f;
                max.offer(ratio_f, n, side, || {
                    let bound = piece.eval(&ApproxReal::from_u64(n))?;
                    ApproxReal::from_raw(d.magnitude().clone().into(), r.clone()).div(&bound)
                })?;
            }
        }
        lo = hi + 1;
    }
    let (max_ratio, argmax, side) = max
        .best
        .ok_or_else(|| Error::Domain("block contained no checked points".into()))?;
    Ok(BlockOutcome {
        index,
        x_start,
        x_end,
        t_end: t,
        max_ratio,
        argmax,
        side,
        points_checked,
        violations,
        violations_truncated,
        indeterminate,
    })
}

/// Scan outcome; everything in here is deterministic for a given config
/// (worker count, checkpoint interruption, and block assignment cannot
/// change a byte).
#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub status: String,
    pub blocks_completed: u64,
    pub blocks_total: u64,
    pub points_checked: u64,
    pub violation_count: u64,
    pub violations_truncated: u64,
    pub indeterminate_count: u64,
    pub max_ratio: String,
    pub argmax: u64,
    pub argmax_side: String,
    /// violations found by blocks computed in this process (restored blocks
    /// contribute only their counts; see the checkpoint line format)
    pub violations: Vec<ViolationEntry>,
    /// one audit line per block — exactly the checkpoint representation
    pub block_digests: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub k: u32,
    pub x_lo: u64,
    pub x_hi: u64,
    pub bound_id: String,
    pub block_size: u64,
    pub sample_stride: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub config: ConfigEcho,
    pub result: ScanResult,
    /// timing only; excluded from determinism comparisons
    pub wall_time_ms: u128,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.result.status == "PASS"
    }

    /// Per-block CSV (the same fields as the checkpoint lines, with header).
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "block_index,x_start,x_end,t_k_at_end,max_ratio,argmax,side,violation_count\n",
        );
        for line in &self.result.block_digests {
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    /// The deterministic part, serialized (manifest/timing excluded).
    pub fn comparable_json(&self) -> String {
        serde_json::json!({
            "config": self.config,
            "result": self.result,
        })
        .to_string()
    }
}

fn parse_decimal_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    let pa = ApproxReal::from_decimal_str(a).unwrap_or_else(|_| ApproxReal::zero());
    let pb = ApproxReal::from_decimal_str(b).unwrap_or_else(|_| ApproxReal::zero());
    pa.cmp_value(&pb)
}

/// Number of (point, side) checks a block contributes, in closed form so
/// restored and freshly computed blocks count identically.
fn points_in_block(config: &VerificationConfig, x_start: u64, x_end: u64) -> u64 {
    let first = x_start + (config.sample_stride - (x_start - config.x_lo) % config.sample_stride)
        % config.sample_stride;
    if first > x_end {
        return 0;
    }
    let count = (x_end - first) / config.sample_stride + 1;
    // two sides per point, except no left-limit at n = 1
    2 * count - u64::from(first == 1)
}

fn fold_report(
    config: &VerificationConfig,
    digests: &[BlockDigest],
    fresh: &BTreeMap<u64, BlockOutcome>,
    wall_time_ms: u128,
) -> VerificationReport {
    let mut violation_count = 0u64;
    let mut violations_truncated = 0u64;
    let mut indeterminate = 0u64;
    let mut points = 0u64;
    let mut best: Option<(&BlockDigest, u8)> = None;
    for d in digests {
        violation_count += d.violation_count;
        points += points_in_block(config, d.x_start, d.x_end);
        if let Some(o) = fresh.get(&d.index) {
            violations_truncated += o.violations_truncated;
            indeterminate += o.indeterminate;
            debug_assert_eq!(o.points_checked, points_in_block(config, d.x_start, d.x_end));
        }
        let rank = if d.side == "left" { 0 } else { 1 };
        let better = match &best {
            None => true,
            Some((b, brank)) => match parse_decimal_cmp(&d.max_ratio, &b.max_ratio) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => (d.argmax, rank) < (b.argmax, *brank),
            },
        };
        if better {
            best = Some((d, rank));
        }
    }
    let mut violations: Vec<ViolationEntry> = Vec::new();
    for o in fresh.values() {
        for v in &o.violations {
            if violations.len() < VIOLATION_CAP {
                violations.push(v.clone());
            } else {
                violations_truncated += 1;
            }
        }
    }
    let complete = digests.len() as u64 == config.block_count();
    let status = if violation_count > 0 {
        "FAIL"
    } else if indeterminate > 0 {
        "INDETERMINATE"
    } else if !complete {
        "PARTIAL"
    } else {
        "PASS"
    };
    let (max_ratio, argmax, argmax_side) = match best {
        Some((d, _)) => (d.max_ratio.clone(), d.argmax, d.side.clone()),
        None => ("0".into(), 0, "at".into()),
    };
    VerificationReport {
        config: ConfigEcho {
            k: config.k,
            x_lo: config.x_lo,
            x_hi: config.x_hi,
            bound_id: config.bound.id.clone(),
            block_size: config.block_size,
            sample_stride: config.sample_stride,
            config_hash: config.config_hash(),
        },
        result: ScanResult {
            status: status.into(),
            blocks_completed: digests.len() as u64,
            blocks_total: config.block_count(),
            points_checked: points,
            violation_count,
            violations_truncated,
            indeterminate_count: indeterminate,
            max_ratio,
            argmax,
            argmax_side,
            violations,
            block_digests: digests.iter().map(|d| d.to_line()).collect(),
        },
        wall_time_ms,
    }
}

/// Scan all integer jump points of `T_k` on the configured range against the
/// configured envelope, resuming from (and extending) the checkpoint when
/// one is configured.
pub fn verify_range(config: &VerificationConfig) -> Result<VerificationReport> {
    let start = std::time::Instant::now();
    config.validate()?;
    let hash = config.config_hash();
    let poly = shared_main_term(config.k)?;

    // resume
    let mut restored: Vec<BlockDigest> = Vec::new();
    if let Some(path) = &config.checkpoint_path {
        if path.exists() {
            let cp = Checkpoint::read(path)?;
            if cp.config_hash != hash {
                return Err(Error::CheckpointConfig {
                    found: cp.config_hash,
                    expected: hash,
                });
            }
            restored = cp.digests;
            if let Some(last) = restored.last() {
                let recomputed = summatory_hyperbola(config.k, last.x_end)?.value;
                if recomputed != last.t_end {
                    return Err(Error::CheckpointSeed {
                        x: last.x_end,
                        stored: last.t_end,
                        recomputed,
                    });
                }
            }
        }
    }

    let first_new = restored.len() as u64;
    let total = config.block_count();
    let last_new = match config.stop_after_blocks {
        Some(n) => (first_new + n).min(total),
        None => total,
    };

    let fresh: BTreeMap<u64, BlockOutcome> = if first_new < last_new {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.worker_count.max(1))
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
        let (tx, rx) = mpsc::channel::<Result<BlockOutcome>>();

        // single ordered writer: appends contiguous digest lines as soon as
        // they are available so an interrupted run loses at most the
        // in-flight blocks
        let writer_path = config.checkpoint_path.clone();
        let header_needed = restored.is_empty();
        let hash_for_writer = hash.clone();
        let next_expected = first_new;
        let writer = std::thread::spawn(move || -> Result<BTreeMap<u64, BlockOutcome>> {
            let mut file = match &writer_path {
                Some(p) => {
                    let f = std::fs::OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(p)?;
                    Some(f)
                }
                None => None,
            };
            if header_needed {
                if let Some(f) = file.as_mut() {
                    writeln!(f, "{CHECKPOINT_MAGIC} {hash_for_writer}")?;
                    f.flush()?;
                }
            }
            let mut buffer: BTreeMap<u64, BlockOutcome> = BTreeMap::new();
            let mut done: BTreeMap<u64, BlockOutcome> = BTreeMap::new();
            let mut next = next_expected;
            for msg in rx {
                let outcome = msg?;
                buffer.insert(outcome.index, outcome);
                while let Some(o) = buffer.remove(&next) {
                    if let Some(f) = file.as_mut() {
                        writeln!(f, "{}", o.digest().to_line())?;
                        f.flush()?;
                    }
                    done.insert(o.index, o);
                    next += 1;
                }
            }
            if !buffer.is_empty() {
                return Err(Error::CheckpointCorrupt(
                    "block results arrived out of contiguous order".into(),
                ));
            }
            Ok(done)
        });

        let cfg = config.clone();
        let poly_ref = Arc::clone(&poly);
        pool.install(|| {
            (first_new..last_new)
                .into_par_iter()
                .for_each_with(tx, |tx, i| {
                    let r = run_block(&cfg, &poly_ref, i);
                    let _ = tx.send(r);
                });
        });
        writer
            .join()
            .map_err(|_| Error::Domain("checkpoint writer panicked".into()))??
    } else {
        BTreeMap::new()
    };

    let mut digests = restored;
    for o in fresh.values() {
        digests.push(o.digest());
    }
    Ok(fold_report(
        config,
        &digests,
        &fresh,
        start.elapsed().as_millis(),
    ))
}

/// Supremum statistics only: `(max |Δ|/bound, argmax, side)`.
pub fn max_ratio_scan(config: &VerificationConfig) -> Result<(ApproxReal, u64, JumpSide)> {
    let report = verify_range(config)?;
    let ratio = ApproxReal::from_decimal_str(&report.result.max_ratio)?;
    let side = if report.result.argmax_side == "left" {
        JumpSide::LeftLimit
    } else {
        JumpSide::AtPoint
    };
    Ok((ratio, report.result.argmax, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{custom_scan_bound, scan_bound};

    fn small_config(k: u32, x_lo: u64, x_hi: u64, bound: ScanBound) -> VerificationConfig {
        let mut c = VerificationConfig::new(k, x_lo, x_hi, bound);
        c.block_size = 1000;
        c
    }

    #[test]
    fn thm1_small_range_passes() {
        let report =
            verify_range(&small_config(3, 2, 5000, scan_bound("thm1").unwrap())).unwrap();
        assert_eq!(report.result.status, "PASS");
        assert_eq!(report.result.violation_count, 0);
        // global max over [2, 5000] occurs at x = 12 at-point, 1.309755/3.369
        assert_eq!(report.result.argmax, 12);
        assert_eq!(report.result.argmax_side, "at");
        let r: f64 = report.result.max_ratio.parse().unwrap();
        assert!((r - 0.388766).abs() < 1e-5, "max ratio {r}");
    }

    #[test]
    fn exact_compare_agrees_with_fast_path() {
        let mut cfg = small_config(3, 2, 800, scan_bound("thm1").unwrap());
        let fast = verify_range(&cfg).unwrap();
        cfg.exact_compare = true;
        let exact = verify_range(&cfg).unwrap();
        assert_eq!(fast.comparable_json(), exact.comparable_json());
    }

    #[test]
    fn artificially_small_envelope_reports_violations() {
        // 0.5·x^{2/3}(log x)^{1/3}: |Δ₃(2)| ≈ 1.533 > 0.5·1.405
        let bound = custom_scan_bound("0.5", (2, 3), (1, 3), 2).unwrap();
        let report = verify_range(&small_config(3, 2, 100, bound)).unwrap();
        assert_eq!(report.result.status, "FAIL");
        assert!(report.result.violation_count > 0);
        let first = &report.result.violations[0];
        assert_eq!(first.x, 2);
        assert!(first.delta.starts_with("1.5326") || first.delta.starts_with("-1.4673"));
    }

    #[test]
    fn delta2_small_range_two_sided() {
        let report =
            verify_range(&small_config(2, 1, 3000, scan_bound("delta2").unwrap())).unwrap();
        assert_eq!(report.result.status, "PASS", "{:?}", report.result.violations);
        // the 0.961-piece is nearly saturated at x = 12 at-point
        assert_eq!(report.result.argmax, 12);
        let r: f64 = report.result.max_ratio.parse().unwrap();
        assert!((r - 0.9606937 / 0.961).abs() < 1e-5);
    }

    #[test]
    fn delta2_left_limit_violations_above_5560() {
        // the printed 0.397-piece fails two-sided at exactly three left-limits
        let report =
            verify_range(&small_config(2, 5560, 8000, scan_bound("delta2").unwrap())).unwrap();
        assert_eq!(report.result.status, "FAIL");
        let xs: Vec<(u64, JumpSide)> = report
            .result
            .violations
            .iter()
            .map(|v| (v.x, v.side))
            .collect();
        assert_eq!(
            xs,
            vec![
                (5760, JumpSide::LeftLimit),
                (6720, JumpSide::LeftLimit),
                (7560, JumpSide::LeftLimit)
            ]
        );
    }

    #[test]
    fn stride_checks_fewer_points() {
        let mut cfg = small_config(3, 2, 2000, scan_bound("thm1").unwrap());
        cfg.sample_stride = 10;
        let report = verify_range(&cfg).unwrap();
        assert_eq!(report.result.status, "PASS");
        assert!(report.result.points_checked < 450);
    }

    #[test]
    fn worker_count_does_not_change_bytes() {
        let mut cfg = small_config(3, 2, 6000, scan_bound("thm1").unwrap());
        cfg.block_size = 700;
        let a = verify_range(&cfg).unwrap();
        cfg.worker_count = 4;
        let b = verify_range(&cfg).unwrap();
        assert_eq!(a.comparable_json(), b.comparable_json());
    }

    #[test]
    fn checkpoint_resume_equals_uninterrupted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ck");
        let mut cfg = small_config(3, 2, 4000, scan_bound("thm1").unwrap());
        cfg.block_size = 500;
        let uninterrupted = verify_range(&cfg).unwrap();

        cfg.checkpoint_path = Some(path.clone());
        cfg.stop_after_blocks = Some(3);
        let partial = verify_range(&cfg).unwrap();
        assert_eq!(partial.result.status, "PARTIAL");
        assert_eq!(partial.result.blocks_completed, 3);

        cfg.stop_after_blocks = None;
        let resumed = verify_range(&cfg).unwrap();
        assert_eq!(resumed.comparable_json(), uninterrupted.comparable_json());
    }

    #[test]
    fn tampered_checkpoint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ck");
        let mut cfg = small_config(3, 2, 4000, scan_bound("thm1").unwrap());
        cfg.block_size = 500;
        cfg.checkpoint_path = Some(path.clone());
        cfg.stop_after_blocks = Some(2);
        verify_range(&cfg).unwrap();

        // corrupt the stored T value on the last line
        let content = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = content.lines().map(String::from).collect();
        let mut parts: Vec<String> = lines.last().unwrap().split(',').map(String::from).collect();
        parts[3] = (parts[3].parse::<u128>().unwrap() + 1).to_string();
        *lines.last_mut().unwrap() = parts.join(",");
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();

        cfg.stop_after_blocks = None;
        match verify_range(&cfg) {
            Err(Error::CheckpointSeed { .. }) => {}
            other => panic!("expected seed mismatch, got {other:?}"),
        }
    }

    #[test]
    fn changed_block_size_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ck");
        let mut cfg = small_config(3, 2, 4000, scan_bound("thm1").unwrap());
        cfg.block_size = 500;
        cfg.checkpoint_path = Some(path.clone());
        cfg.stop_after_blocks = Some(2);
        verify_range(&cfg).unwrap();

        cfg.block_size = 800;
        match verify_range(&cfg) {
            Err(Error::CheckpointConfig { .. }) => {}
            other => panic!("expected config-hash mismatch, got {other:?}"),
        }
    }

    #[test]
    fn bound_validity_guard() {
        // thm1 is valid from 2; starting at 1 must be rejected
        let cfg = small_config(3, 1, 100, scan_bound("thm1").unwrap());
        assert!(verify_range(&cfg).is_err());
    }

    #[test]
    fn ln_tracker_partition_independent() {
        let mut a = LnTracker::new();
        let mut b = LnTracker::new();
        // walk a continuously; jump b straight to the probe points
        let probes = [16_390u64, 16_400, 17_000, 32_768, 40_001];
        let mut walked = std::collections::HashMap::new();
        for n in 16_384..=40_001u64 {
            let v = a.get(n).unwrap();
            if probes.contains(&n) {
                walked.insert(n, v);
            }
        }
        for &n in &probes {
            let direct = b.get(n).unwrap();
            assert_eq!(direct.mantissa(), walked[&n].mantissa(), "n={n}");
        }
    }
}
