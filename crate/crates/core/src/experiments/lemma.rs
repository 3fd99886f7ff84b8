//! Convergence of `tau_gamma^q tau_delta^-q . rho` to `tau_gamma . rho`
//! along denominators that make `q alpha` and `(q - 1) beta` small.
//!
//! On characters every twist flow has period 2, so `tau_delta^-q` is close
//! to the identity when `q alpha` is close to an even integer. The
//! Diophantine search therefore runs on `alpha / 2` and `beta / 2`, and the
//! scores in the report refer to those halved angles.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dd;
use crate::diophantine::{find_approx_sequence, ApproxConfig};
use crate::error::{Error, Result};
use crate::flow::{f_function, f_map, twist_power, CurveHandle, FLOW_PERIOD};
use crate::mapping_class::{apply, MappingClass};
use crate::surface::{char_distance, is_irreducible, SurfaceRep};

/// Irreducibility tolerance used for the precondition.
pub const IRREDUCIBLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaConfig {
    pub q_max: u64,
    pub kh_threshold: f64,
    pub hl_threshold: f64,
    /// Rows with `q` up to this bound are recomputed through `F`.
    pub fmap_check_max_q: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self { q_max: 10_000_000, kh_threshold: 0.05, hl_threshold: 0.05, fmap_check_max_q: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub q: u64,
    pub kh_score: f64,
    pub hl_score: f64,
    pub s: f64,
    pub d: f64,
    pub taylor_diag: f64,
}

/// Constants `C` with `d <= C s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    /// Smallest `C` with `d_i <= C s_i` on every row.
    pub envelope: f64,
    /// Least-squares slope through the origin.
    pub least_squares: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub rep_seed: Option<u64>,
    pub gamma: String,
    pub phi: String,
    pub delta: String,
    pub delta_word: String,
    pub alpha: f64,
    pub beta: f64,
    pub period: f64,
    pub degenerate: bool,
    pub candidates: usize,
    pub kh_floor: f64,
    pub hl_floor: Option<f64>,
    /// Rows in increasing `q`.
    pub rows: Vec<LemmaRow>,
    /// Largest gap between the direct and the `F`-map value of `d`.
    pub fmap_max_gap: Option<f64>,
}

impl LemmaReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["q", "kh_score", "hl_score", "s", "d", "taylor_diag"])?;
        for r in &self.rows {
            w.serialize((r.q, r.kh_score, r.hl_score, r.s, r.d, r.taylor_diag))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `d` on the row with the smallest `s`, the end of the
    /// decreasing-`s` ordering.
    pub fn final_d(&self) -> Option<f64> {
        self.rows_by_s().last().map(|r| r.d)
    }

    /// Rows ordered by decreasing `s`.
    pub fn rows_by_s(&self) -> Vec<LemmaRow> {
        let mut v = self.rows.clone();
        v.sort_by(|a, b| b.s.total_cmp(&a.s).then(a.q.cmp(&b.q)));
        v
    }

    /// Whether `d` strictly decreases as `s` decreases.
    pub fn monotone_in_s(&self) -> bool {
        self.rows_by_s().windows(2).all(|w| w[1].d < w[0].d)
    }

    pub fn fit(&self) -> Option<BoundFit> {
        let rows: Vec<&LemmaRow> = self.rows.iter().filter(|r| r.s > 0.0).collect();
        if rows.is_empty() {
            return None;
        }
        let envelope = rows.iter().map(|r| r.d / r.s).fold(0.0, f64::max);
        let num: f64 = rows.iter().map(|r| r.d * r.s).sum();
        let den: f64 = rows.iter().map(|r| r.s * r.s).sum();
        Some(BoundFit { envelope, least_squares: num / den })
    }

    /// `d <= C s` (with a relative slack of 1e-12) on every row.
    pub fn bound_holds(&self, c: f64) -> bool {
        self.rows.iter().all(|r| r.d <= c * r.s * (1.0 + 1e-12))
    }
}

/// `2 * (q x / 2 mod 1)`, i.e. `q x` reduced into `[-1, 1]` modulo the flow
/// period, in compensated arithmetic.
fn reduce_time(q: u64, x: f64) -> f64 {
    FLOW_PERIOD * dd::mul_mod_one(q as f64, x / FLOW_PERIOD)
}

/// Runs the experiment for `gamma` and `delta = phi(gamma)`.
pub fn lemma_experiment(
    rep: &SurfaceRep,
    gamma: &CurveHandle,
    phi: &MappingClass,
    cfg: &LemmaConfig,
) -> Result<LemmaReport> {
    if !is_irreducible(rep, IRREDUCIBLE_TOL) {
        return Err(Error::Domain("the representation is reducible".into()));
    }
    let genus = rep.genus();
    let delta = gamma.pushed_by(phi);
    let gamma_word = gamma.word(genus)?;
    let delta_word = delta.word(genus)?;
    let beta = gamma.theta(rep)?;
    let alpha = delta.theta(rep)?;
    for (c, t) in [(gamma.to_string(), beta), (delta.to_string(), alpha)] {
        if !(t > 0.0 && t < 1.0) || rep_curve_central(t) {
            return Err(Error::SingularFlow { curve: c, theta: t });
        }
    }
    let seq = find_approx_sequence(
        alpha / FLOW_PERIOD,
        beta / FLOW_PERIOD,
        &ApproxConfig {
            q_max: cfg.q_max,
            kh_threshold: cfg.kh_threshold,
            hl_threshold: cfg.hl_threshold,
            exhaustive: false,
        },
    )?;
    let target = apply(&gamma.twist(genus)?, rep)?;
    let f0 = f_function(gamma, &delta, rep, 0.0)?;
    let mut rows = Vec::with_capacity(seq.entries.len());
    let mut gap: Option<f64> = None;
    for e in &seq.entries {
        let q = e.q as i64;
        let moved = twist_power(gamma, q, &twist_power(&delta, -q, rep)?)?;
        let d = char_distance(&moved, &target)?;
        let t = reduce_time(e.q, alpha);
        let f = f_function(gamma, &delta, rep, t)?;
        if e.q <= cfg.fmap_check_max_q {
            let s = reduce_time(e.q, f);
            let via_f = char_distance(&f_map(gamma, &delta, rep, t, s)?, &target)?;
            let g = (via_f - d).abs();
            gap = Some(gap.map_or(g, |x| x.max(g)));
        }
        rows.push(LemmaRow {
            q: e.q,
            kh_score: e.kh_score,
            hl_score: e.hl_score,
            s: e.kh_score + e.hl_score,
            d,
            taylor_diag: e.q as f64 * (f - f0).abs(),
        });
    }
    Ok(LemmaReport {
        rep_seed: None,
        gamma: gamma.to_string(),
        phi: phi.to_string(),
        delta: delta.to_string(),
        delta_word: delta_word.to_string(),
        alpha,
        beta,
        period: FLOW_PERIOD,
        degenerate: delta_word.same_free_curve(&gamma_word),
        candidates: seq.candidates,
        kh_floor: seq.kh_floor,
        hl_floor: seq.hl_floor,
        rows,
        fmap_max_gap: gap,
    })
}

/// Samples genus-`genus` representations from `seed`, `seed + 1`, ... until
/// the report has at least `min_rows` rows. Returns the report and the
/// number of seeds skipped.
pub fn lemma_with_retry(
    genus: usize,
    seed: u64,
    gamma: &CurveHandle,
    phi: &MappingClass,
    cfg: &LemmaConfig,
    min_rows: usize,
    max_retries: u64,
) -> Result<(LemmaReport, u64)> {
    for retry in 0..=max_retries {
        let s = seed.wrapping_add(retry);
        let rep = crate::surface::sample_seeded(genus, s)?;
        let mut report = match lemma_experiment(&rep, gamma, phi, cfg) {
            Ok(r) => r,
            Err(Error::Domain(_) | Error::SingularFlow { .. }) => continue,
            Err(e) => return Err(e),
        };
        if report.rows.len() >= min_rows {
            report.rep_seed = Some(s);
            return Ok((report, retry));
        }
    }
    Err(Error::Domain(format!("no seed in {seed}..={} gave {min_rows} rows", seed.wrapping_add(max_retries))))
}

fn rep_curve_central(theta: f64) -> bool {
    !(1e-12..=1.0 - 1e-12).contains(&theta)
}
