//! Continued fractions and the search for denominators `q` that make both
//! `q ||q alpha||` and `||q beta - beta||` small.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd;
use crate::error::{Error, Result};

pub const MAX_DEPTH: usize = 40;
pub const Q_MAX_CAP: u64 = 1_000_000_000_000;
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;
/// Multiples `k q_n` tried for every convergent regardless of its score.
pub const MIN_MULTIPLES: u64 = 8;
/// `q = 1` is never reported: its hl score vanishes identically.
pub const MIN_Q: u64 = 2;

const RESIDUAL_EPS: f64 = 1e-14;
const Q_EXACT: i128 = 1 << 53;
const SHARD: u64 = 1 << 14;

/// Distance from `x` to the nearest integer.
pub fn frac_dist(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

/// `||q x||` with the product carried in double-double.
pub fn frac_dist_mul(q: u64, x: f64) -> f64 {
    dd::mul_mod_one(q as f64, x).abs()
}

/// `q ||q alpha||`.
pub fn kh_score(q: u64, alpha: f64) -> f64 {
    q as f64 * frac_dist_mul(q, alpha)
}

/// `||{q beta} - beta||`, i.e. `||(q - 1) beta||`.
pub fn hl_score(q: u64, beta: f64) -> f64 {
    frac_dist_mul(q - 1, beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub value: f64,
    /// Partial quotients `a_1, a_2, ...` of `value = [0; a_1, a_2, ...]`.
    pub quotients: Vec<u64>,
    /// Convergents `p_n / q_n`, one per quotient.
    pub convergents: Vec<(i128, i128)>,
}

impl ContinuedFraction {
    pub fn denominators(&self) -> impl Iterator<Item = i128> + '_ {
        self.convergents.iter().map(|&(_, q)| q)
    }
}

fn residual(p: i128, q: i128, x: f64) -> f64 {
    (q as f64).mul_add(x, -(p as f64))
}

/// Expansion of `x` in `(0, 1)`, at most `depth` quotients (capped at 40).
///
/// Quotients come from the ratios of the residuals `e_n = q_n x - p_n`,
/// each computed with a single rounding, which is the Gauss map run
/// without accumulating error. The expansion stops once the residual is
/// below `max(1e-14, q_n ulp(x))`, i.e. once `p_n / q_n` matches `x` to
/// working precision, or when the next denominator would exceed `2^53`.
pub fn continued_fraction(x: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidInput(format!("continued fraction needs x in (0, 1), got {x}")));
    }
    let depth = depth.min(MAX_DEPTH);
    let ulp = f64::EPSILON * x;
    let (mut p0, mut q0, mut e0) = (1i128, 0i128, -1.0f64);
    let (mut p1, mut q1, mut e1) = (0i128, 1i128, x);
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    while quotients.len() < depth {
        let r = e0.abs() / e1.abs();
        let mut a = r.floor() as i128;
        // r can land a hair below an exact integer
        let up = residual((a + 1) * p1 + p0, (a + 1) * q1 + q0, x);
        if up.abs() <= RESIDUAL_EPS.max(((a + 1) * q1 + q0) as f64 * ulp) {
            a += 1;
        }
        if a < 1 {
            break;
        }
        let (p, q) = (a * p1 + p0, a * q1 + q0);
        if q > Q_EXACT {
            break;
        }
        let e = residual(p, q, x);
        quotients.push(a as u64);
        convergents.push((p, q));
        if e.abs() <= RESIDUAL_EPS.max(q as f64 * ulp) {
            break;
        }
        (p0, q0, e0) = (p1, q1, e1);
        (p1, q1, e1) = (p, q, e);
    }
    Ok(ContinuedFraction { value: x, quotients, convergents })
}

/// Value of `[0; a_1, ..., a_n]`, evaluated from the tail.
pub fn from_quotients(quotients: &[u64]) -> Result<f64> {
    if quotients.is_empty() || quotients.len() > MAX_DEPTH {
        return Err(Error::InvalidInput(format!("need between 1 and {MAX_DEPTH} quotients, got {}", quotients.len())));
    }
    if quotients.contains(&0) {
        return Err(Error::InvalidInput("quotients must be positive".into()));
    }
    let mut v = 0.0;
    for &a in quotients.iter().rev() {
        v = 1.0 / (a as f64 + v);
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxEntry {
    pub q: u64,
    pub kh_score: f64,
    pub hl_score: f64,
}

impl ApproxEntry {
    pub fn new(q: u64, alpha: f64, beta: f64) -> Self {
        Self { q, kh_score: kh_score(q, alpha), hl_score: hl_score(q, beta) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub q_max: u64,
    pub kh_threshold: f64,
    pub hl_threshold: f64,
    /// Also scan every `q <= min(q_max, 10^6)`.
    pub exhaustive: bool,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self { q_max: 10_000_000, kh_threshold: 0.05, hl_threshold: 0.05, exhaustive: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxSequence {
    pub alpha: f64,
    pub beta: f64,
    pub entries: Vec<ApproxEntry>,
    /// Number of distinct denominators examined.
    pub candidates: usize,
    /// Smallest kh score over all candidates.
    pub kh_floor: f64,
    /// Smallest hl score over the candidates passing the kh threshold.
    pub hl_floor: Option<f64>,
}

impl ApproxSequence {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["q", "kh_score", "hl_score"])?;
        for e in &self.entries {
            w.serialize((e.q, e.kh_score, e.hl_score))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Denominators `k q_n` for the convergents `q_n <= q_max` of `alpha`.
///
/// For `q = k q_n` with `k ||q_n alpha|| <= 1/2` the score is
/// `k^2 q_n ||q_n alpha||`, so the multiples are taken up to
/// `sqrt(kh_threshold / score_n)` (and at least 8). Every `q` with
/// `q ||q alpha|| < 1/2` is such a multiple, so below that threshold the
/// candidate set misses nothing.
pub fn candidate_denominators(alpha: f64, q_max: u64, kh_threshold: f64) -> Result<BTreeSet<u64>> {
    let cf = continued_fraction(alpha, MAX_DEPTH)?;
    let mut out = BTreeSet::new();
    for q in std::iter::once(1).chain(cf.denominators()) {
        let q = q as u64;
        if q > q_max {
            break;
        }
        let score = kh_score(q, alpha);
        let by_score = if score > 0.0 { (kh_threshold / score).sqrt().floor() } else { f64::INFINITY };
        let kmax = (by_score.min(1e9) as u64).max(MIN_MULTIPLES).min(q_max / q);
        out.extend((1..=kmax).map(|k| k * q).filter(|&m| m >= MIN_Q));
    }
    Ok(out)
}

/// Every `2 <= q <= q_max` passing both thresholds, scanned in parallel shards
/// and merged in increasing `q`.
pub fn exhaustive_scan(alpha: f64, beta: f64, q_max: u64, kh_threshold: f64, hl_threshold: f64) -> Vec<ApproxEntry> {
    let shards = q_max.div_ceil(SHARD);
    (0..shards)
        .into_par_iter()
        .flat_map_iter(|s| {
            let lo = (s * SHARD + 1).max(MIN_Q);
            let hi = ((s + 1) * SHARD).min(q_max);
            (lo..=hi)
                .filter(move |&q| kh_score(q, alpha) <= kh_threshold)
                .map(move |q| ApproxEntry::new(q, alpha, beta))
                .filter(move |e| e.hl_score <= hl_threshold)
        })
        .collect()
}

/// Smallest `q ||q alpha||` over `2 <= q <= q_max`, with its `q`.
pub fn min_kh_score(alpha: f64, q_max: u64) -> (u64, f64) {
    (MIN_Q..=q_max)
        .into_par_iter()
        .map(|q| (q, kh_score(q, alpha)))
        .reduce(|| (0, f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
}

pub fn find_approx_sequence(alpha: f64, beta: f64, cfg: &ApproxConfig) -> Result<ApproxSequence> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    if cfg.q_max < 1 || cfg.q_max > Q_MAX_CAP {
        return Err(Error::InvalidInput(format!("q_max must lie in [1, {Q_MAX_CAP}], got {}", cfg.q_max)));
    }
    let mut qs = candidate_denominators(alpha, cfg.q_max, cfg.kh_threshold)?;
    let mut kh_floor = f64::INFINITY;
    let mut hl_floor: Option<f64> = None;
    let mut entries = Vec::new();
    if cfg.exhaustive {
        let limit = cfg.q_max.min(EXHAUSTIVE_LIMIT);
        let (_, floor) = min_kh_score(alpha, limit);
        kh_floor = floor;
        let extra = exhaustive_scan(alpha, beta, limit, cfg.kh_threshold, f64::INFINITY);
        qs.extend(extra.iter().map(|e| e.q));
    }
    let candidates = qs.len();
    for q in qs {
        let e = ApproxEntry::new(q, alpha, beta);
        kh_floor = kh_floor.min(e.kh_score);
        if e.kh_score <= cfg.kh_threshold {
            hl_floor = Some(hl_floor.map_or(e.hl_score, |h| h.min(e.hl_score)));
            if e.hl_score <= cfg.hl_threshold {
                entries.push(e);
            }
        }
    }
    Ok(ApproxSequence { alpha, beta, entries, candidates, kh_floor, hl_floor })
}
