//! The invariant suite: every identity the library relies on, evaluated on
//! sampled representations, with the worst deviation per check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{f_function, f_map, twist_flow, twist_power, BaseCurve, CurveHandle, FLOW_PERIOD};
use crate::mapping_class::{act_on_curve_with, apply_with, MappingClass, StandardTwists, TwistCurve, TwistModel};
use crate::su2::UnitQuaternion;
use crate::surface::{self, char_distance, evaluate, sample, theta_of, SurfaceRep, Word};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub su2: f64,
    pub flow: f64,
    pub disjoint: f64,
    pub crucial: f64,
    pub relation: f64,
    pub power: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { su2: 1e-12, flow: 1e-12, disjoint: 1e-10, crucial: 1e-9, relation: 1e-9, power: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub genus: usize,
    pub trials: usize,
    /// Smallest `t` in `{1, 2}` whose flow returns every sampled character
    /// to itself.
    pub measured_period: Option<f64>,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Default)]
struct Acc {
    dev: Vec<(String, f64, f64)>,
}

impl Acc {
    fn record(&mut self, name: &str, tol: f64, dev: f64) {
        // NaN deviations count as failures
        let dev = if dev.is_nan() { f64::INFINITY } else { dev };
        match self.dev.iter_mut().find(|(n, _, _)| n == name) {
            Some(e) => e.1 = e.1.max(dev),
            None => self.dev.push((name.to_string(), dev, tol)),
        }
    }

    fn finish(self) -> Vec<CheckResult> {
        self.dev
            .into_iter()
            .map(|(name, d, tol)| CheckResult { pass: d <= tol, name, max_deviation: d, tolerance: tol })
            .collect()
    }
}

/// Base curves and a few conjugated handles, all supported for `genus`.
pub fn curve_handles(genus: usize) -> Result<Vec<CurveHandle>> {
    let mut v = Vec::new();
    for i in 1..=genus {
        v.push(CurveHandle::base(BaseCurve::A(i)));
        v.push(CurveHandle::base(BaseCurve::B(i)));
    }
    for s in ["Tb1(a1)", "Tb1*Tc1(b1)", "Tc1(a2)", "Ta1*Tb2^-1(b1)"] {
        v.push(CurveHandle::parse(s, genus)?);
    }
    if genus >= 3 {
        v.push(CurveHandle::parse("Tc2*Tb3(a3)", genus)?);
    }
    Ok(v)
}

fn mc(s: &str, genus: usize) -> Result<MappingClass> {
    MappingClass::parse(s, genus)
}

pub type CurvePair = (TwistCurve, TwistCurve);

/// Pairs of twist curves that braid, and pairs that commute.
pub fn relation_pairs(genus: usize) -> (Vec<CurvePair>, Vec<CurvePair>) {
    let all = TwistCurve::all(genus);
    let meets = |x: TwistCurve, y: TwistCurve| -> bool {
        use TwistCurve::*;
        matches!(
            (x, y),
            (A(i), B(j)) | (B(j), A(i)) if i == j
        ) || matches!((x, y), (B(i), C(j)) | (C(j), B(i)) if i == j || i == j + 1)
            || matches!((x, y), (C(i), C(j)) if i.abs_diff(j) == 1)
    };
    let mut braid = Vec::new();
    let mut commute = Vec::new();
    for (k, &x) in all.iter().enumerate() {
        for &y in &all[k + 1..] {
            if meets(x, y) {
                // consecutive chain curves meet twice; they satisfy neither relation
                if !matches!((x, y), (TwistCurve::C(_), TwistCurve::C(_))) {
                    braid.push((x, y));
                }
            } else {
                commute.push((x, y));
            }
        }
    }
    (braid, commute)
}

fn word_mc(genus: usize, curves: &[TwistCurve]) -> Result<MappingClass> {
    MappingClass::new(genus, curves.iter().map(|&c| crate::mapping_class::TwistGen::new(c)).collect())
}

pub fn check_suite(genus: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    check_suite_with(&StandardTwists, genus, trials, seed, &Tolerances::default())
}

/// Runs every check on `trials` representations sampled from `seed`, using
/// `model` for the twist automorphisms.
pub fn check_suite_with(
    model: &dyn TwistModel,
    genus: usize,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<CheckReport> {
    surface::check_genus(genus)?;
    if trials == 0 {
        return Err(Error::InvalidInput("the check suite needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::default();
    let handles = curve_handles(genus)?;
    let (braid, commute) = relation_pairs(genus);
    let relator = surface::relator(genus)?;
    let apply = |m: &MappingClass, r: &SurfaceRep| apply_with(model, m, r);
    let mut period_one = f64::INFINITY;
    let mut period_two = 0.0f64;

    for _ in 0..trials {
        let rep = sample(genus, &mut rng)?;

        // su2
        let q = UnitQuaternion::haar(&mut rng);
        let g = UnitQuaternion::haar(&mut rng);
        let mut prod = UnitQuaternion::IDENTITY;
        for _ in 0..17 {
            prod = prod * q;
        }
        acc.record("su2_power_vs_product", tol.su2 * 10.0, q.power(17).dist(prod));
        acc.record("su2_theta_conjugation", tol.su2, (q.conj_by(g).theta() - q.theta()).abs());
        acc.record("sampler_relator_defect", 1e-11, rep.relator_defect());

        // flows
        for c in &handles {
            let t = rng.random_range(-1.5..1.5);
            let s = rng.random_range(-1.5..1.5);
            let th = c.theta(&rep)?;
            let moved = twist_flow(c, t, &rep)?;
            let two_step = twist_flow(c, s, &moved)?;
            let one_step = twist_flow(c, s + t, &rep)?;
            let additivity = char_distance(&two_step, &one_step)?;
            let conservation = (c.theta(&moved)? - th).abs();
            if c.conjugator.is_none() {
                acc.record("flow_conservation", tol.flow, conservation);
                acc.record("flow_additivity", tol.flow * 10.0, additivity);
            } else {
                acc.record("flow_conservation_conjugated", tol.disjoint, conservation);
                acc.record("flow_additivity_conjugated", tol.disjoint, additivity);
            }
            acc.record("flow_relator_defect", 1e-10, moved.relator_defect());
            let tw = apply(&c.twist(genus)?, &rep)?;
            acc.record("crucial_identity", tol.crucial, char_distance(&twist_flow(c, th, &rep)?, &tw)?);
            period_one = period_one.min(char_distance(&twist_flow(c, 1.0, &rep)?, &rep)?);
            period_two = period_two.max(char_distance(&twist_flow(c, FLOW_PERIOD, &rep)?, &rep)?);
        }

        // disjoint flows
        for i in 1..genus {
            let x = CurveHandle::base(BaseCurve::A(i));
            let y = CurveHandle::base(BaseCurve::B(i + 1));
            let (t, s) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let xy = twist_flow(&x, t, &twist_flow(&y, s, &rep)?)?;
            let yx = twist_flow(&y, s, &twist_flow(&x, t, &rep)?)?;
            acc.record("disjoint_flows_commute", tol.disjoint, char_distance(&xy, &yx)?);
            let dev = (y.theta(&twist_flow(&x, t, &rep)?)? - y.theta(&rep)?).abs();
            acc.record("disjoint_flows_conserve", tol.disjoint, dev);
        }

        // relator preservation and group action
        for c in TwistCurve::all(genus) {
            let m = word_mc(genus, &[c])?;
            for m in [m.clone(), m.inverse()] {
                let img = act_on_curve_with(model, &m, &relator)?;
                acc.record("relator_preservation", tol.relation, evaluate(&img, &rep)?.dist(UnitQuaternion::IDENTITY));
                acc.record("relator_defect_after_twist", tol.relation, apply(&m, &rep)?.relator_defect());
            }
        }
        let m1 = MappingClass::random(genus, 20, &mut rng);
        let m2 = MappingClass::random(genus, 20, &mut rng);
        let img = act_on_curve_with(model, &m1, &relator)?;
        acc.record("relator_preservation", tol.relation, evaluate(&img, &rep)?.dist(UnitQuaternion::IDENTITY));
        let moved = apply(&m1, &rep)?;
        acc.record("relator_defect_after_twist", tol.relation, moved.relator_defect());
        let composed = apply(&m1.then_after(&m2), &rep)?;
        acc.record("group_action", tol.relation, char_distance(&composed, &apply(&m1, &apply(&m2, &rep)?)?)?);
        acc.record("inverse_round_trip", tol.relation, char_distance(&apply(&m1.inverse(), &moved)?, &rep)?);

        // theta naturality
        let w = Word::new(vec![1, -4, 3, 2])?;
        let lhs = theta_of(&w, &moved)?;
        let rhs = theta_of(&act_on_curve_with(model, &m1.inverse(), &w)?, &rep)?;
        acc.record("theta_naturality", tol.disjoint, (lhs - rhs).abs());

        // braid and commutation relations
        for &(x, y) in &braid {
            let xyx = apply(&word_mc(genus, &[x, y, x])?, &rep)?;
            let yxy = apply(&word_mc(genus, &[y, x, y])?, &rep)?;
            acc.record("braid_relations", tol.relation, char_distance(&xyx, &yxy)?);
        }
        for &(x, y) in &commute {
            let xy = apply(&word_mc(genus, &[x, y])?, &rep)?;
            let yx = apply(&word_mc(genus, &[y, x])?, &rep)?;
            acc.record("commutation_relations", tol.relation, char_distance(&xy, &yx)?);
        }

        // twist powers and F
        let gamma = CurveHandle::base(BaseCurve::A(1));
        let phi = mc("Tb1", genus)?;
        let delta = gamma.pushed_by(&phi);
        let n = rng.random_range(1..=20i64);
        let t_gamma = gamma.twist(genus)?;
        let t_delta = delta.twist(genus)?;
        let iterated = apply(&t_gamma.pow(n), &apply(&t_delta.pow(-n), &rep)?)?;
        let fast = twist_power(&gamma, n, &twist_power(&delta, -n, &rep)?)?;
        acc.record("twist_power_vs_iteration", tol.power, char_distance(&fast, &iterated)?);
        let alpha = delta.theta(&rep)?;
        let t = n as f64 * alpha;
        let s = n as f64 * f_function(&gamma, &delta, &rep, t)?;
        acc.record("fmap_consistency", tol.power, char_distance(&f_map(&gamma, &delta, &rep, t, s)?, &iterated)?);
    }

    let measured_period = if period_one > 1e-6 && period_two <= tol.crucial {
        Some(FLOW_PERIOD)
    } else if period_one <= tol.crucial {
        Some(1.0)
    } else {
        None
    };
    acc.record("flow_period_two", tol.crucial, period_two);
    Ok(CheckReport { genus, trials, measured_period, checks: acc.finish() })
}
