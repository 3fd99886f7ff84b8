//! Twist flows along curves and the maps built from them.
//!
//! The flow along `a_i` right-multiplies `rho(b_i)` by `exp(-pi t u)`, `u`
//! the axis of `rho(a_i)`; along `b_i` it right-multiplies `rho(a_i)` by
//! `exp(pi t u)`, `u` the axis of `rho(b_i)`. Both leave every commutator
//! `[a_i, b_i]` unchanged, conserve the angle of the flowing curve, and
//! satisfy `flow(theta) = twist`. They have period 2 in `t`; the time-1 map
//! negates the crossing generator.
//!
//! Any other curve is a handle `phi(base)`; its flow is
//! `phi o flow_base o phi^-1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mapping_class::{self, act_on_curve, MappingClass, TwistCurve};
use crate::su2::UnitQuaternion;
use crate::surface::{self, SurfaceRep, Word};

/// Period of every twist flow on characters under the adopted convention.
pub const FLOW_PERIOD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseCurve {
    A(usize),
    B(usize),
}

impl BaseCurve {
    pub fn index(self) -> usize {
        match self {
            BaseCurve::A(i) | BaseCurve::B(i) => i,
        }
    }

    pub fn twist_curve(self) -> TwistCurve {
        match self {
            BaseCurve::A(i) => TwistCurve::A(i),
            BaseCurve::B(i) => TwistCurve::B(i),
        }
    }

    pub fn word(self) -> Word {
        match self {
            BaseCurve::A(i) => Word::generator(surface::gen_a(i)),
            BaseCurve::B(i) => Word::generator(surface::gen_b(i)),
        }
    }
}

impl fmt::Display for BaseCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseCurve::A(i) => write!(f, "a{i}"),
            BaseCurve::B(i) => write!(f, "b{i}"),
        }
    }
}

impl FromStr for BaseCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let idx = |r: &str| -> Result<usize> {
            match r.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i),
                _ => Err(Error::Parse(format!("bad curve index in '{s}'"))),
            }
        };
        if let Some(r) = s.strip_prefix('a') {
            Ok(BaseCurve::A(idx(r)?))
        } else if let Some(r) = s.strip_prefix('b') {
            Ok(BaseCurve::B(idx(r)?))
        } else {
            Err(Error::Parse(format!("unknown base curve '{s}'")))
        }
    }
}

/// The curve `conjugator(base)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveHandle {
    pub base: BaseCurve,
    pub conjugator: Option<MappingClass>,
}

impl CurveHandle {
    pub fn base(base: BaseCurve) -> Self {
        Self { base, conjugator: None }
    }

    pub fn conjugated(base: BaseCurve, phi: MappingClass) -> Self {
        if phi.is_identity_word() {
            Self::base(base)
        } else {
            Self { base, conjugator: Some(phi) }
        }
    }

    /// `phi(self)`.
    pub fn pushed_by(&self, phi: &MappingClass) -> Self {
        let c = match &self.conjugator {
            Some(psi) => phi.then_after(psi),
            None => phi.clone(),
        };
        Self::conjugated(self.base, c)
    }

    /// Parses `a1`, `b2`, or `<mapping class>(<base>)` such as `Tb1*Tc1(b1)`.
    pub fn parse(s: &str, genus: usize) -> Result<Self> {
        let s = s.trim();
        let h = if let Some(body) = s.strip_suffix(')') {
            let open = body.rfind('(').ok_or_else(|| Error::Parse(format!("unbalanced curve '{s}'")))?;
            let phi = MappingClass::parse(&body[..open], genus)?;
            Self::conjugated(body[open + 1..].parse()?, phi)
        } else {
            Self::base(s.parse()?)
        };
        if h.base.index() > genus {
            return Err(Error::Parse(format!("curve '{s}' outside genus {genus}")));
        }
        Ok(h)
    }

    /// Representative word in `pi_1`.
    pub fn word(&self, genus: usize) -> Result<Word> {
        match &self.conjugator {
            None => Ok(self.base.word()),
            Some(phi) => {
                check_genus(phi, genus)?;
                act_on_curve(phi, &self.base.word())
            }
        }
    }

    pub fn theta(&self, rep: &SurfaceRep) -> Result<f64> {
        Ok(surface::evaluate(&self.word(rep.genus())?, rep)?.theta())
    }

    /// The Dehn twist along this curve as a mapping class.
    pub fn twist(&self, genus: usize) -> Result<MappingClass> {
        let t = MappingClass::twist(genus, self.base.twist_curve())?;
        Ok(match &self.conjugator {
            None => t,
            Some(phi) => t.conjugate_by(phi),
        })
    }
}

impl fmt::Display for CurveHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.conjugator {
            None => write!(f, "{}", self.base),
            Some(phi) => write!(f, "{phi}({})", self.base),
        }
    }
}

fn check_genus(phi: &MappingClass, genus: usize) -> Result<()> {
    if phi.genus() != genus {
        return Err(Error::GenusMismatch { expected: genus, found: phi.genus() });
    }
    Ok(())
}

/// Flow factor source for one base curve: which generator moves and which
/// quaternion supplies the axis.
fn base_parts(base: BaseCurve, rep: &SurfaceRep) -> Result<(usize, UnitQuaternion)> {
    let i = base.index();
    if i > rep.genus() {
        return Err(Error::InvalidInput(format!("curve {base} outside genus {}", rep.genus())));
    }
    Ok(match base {
        BaseCurve::A(i) => (2 * i, rep.a(i)),
        BaseCurve::B(i) => (2 * i - 1, rep.b(i)),
    })
}

fn singular(curve: impl fmt::Display, q: UnitQuaternion) -> Error {
    Error::SingularFlow { curve: curve.to_string(), theta: q.theta() }
}

fn base_move(
    base: BaseCurve,
    rep: &SurfaceRep,
    factor: impl Fn(UnitQuaternion) -> Option<UnitQuaternion>,
) -> Result<SurfaceRep> {
    let (moved, curve_image) = base_parts(base, rep)?;
    let f = factor(curve_image).ok_or_else(|| singular(base, curve_image))?;
    let mut out = rep.clone();
    let slot = &mut out.images_mut()[moved - 1];
    *slot = (*slot * f).renormalized();
    Ok(out)
}

fn through_conjugator(
    c: &CurveHandle,
    rep: &SurfaceRep,
    base_op: impl FnOnce(&SurfaceRep) -> Result<SurfaceRep>,
) -> Result<SurfaceRep> {
    match &c.conjugator {
        None => base_op(rep),
        Some(phi) => {
            check_genus(phi, rep.genus())?;
            let pulled = mapping_class::apply(&phi.inverse(), rep)?;
            let flowed = base_op(&pulled).map_err(|e| match e {
                Error::SingularFlow { theta, .. } => Error::SingularFlow { curve: c.to_string(), theta },
                e => e,
            })?;
            mapping_class::apply(phi, &flowed)
        }
    }
}

/// `Phi_c^t(rho)`.
pub fn twist_flow(c: &CurveHandle, t: f64, rep: &SurfaceRep) -> Result<SurfaceRep> {
    through_conjugator(c, rep, |r| {
        base_move(c.base, r, |q| {
            let s = match c.base {
                BaseCurve::A(_) => -t,
                BaseCurve::B(_) => t,
            };
            q.flow_factor(s).ok()
        })
    })
}

/// `tau_c^n(rho) = Phi_c^{n theta_c}(rho)`, with the angle `n theta` reduced
/// in compensated arithmetic.
pub fn twist_power(c: &CurveHandle, n: i64, rep: &SurfaceRep) -> Result<SurfaceRep> {
    through_conjugator(c, rep, |r| {
        base_move(c.base, r, |q| {
            if q.is_central() {
                return None;
            }
            Some(match c.base {
                BaseCurve::A(_) => q.power(-n),
                BaseCurve::B(_) => q.power(n),
            })
        })
    })
}

/// `f(t) = theta_gamma(Phi_delta^{-t}(rho))`.
pub fn f_function(gamma: &CurveHandle, delta: &CurveHandle, rep: &SurfaceRep, t: f64) -> Result<f64> {
    gamma.theta(&twist_flow(delta, -t, rep)?)
}

/// `F(t, s) = Phi_gamma^s Phi_delta^{-t}(rho)`.
pub fn f_map(gamma: &CurveHandle, delta: &CurveHandle, rep: &SurfaceRep, t: f64, s: f64) -> Result<SurfaceRep> {
    twist_flow(gamma, s, &twist_flow(delta, -t, rep)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping_class::apply;
    use crate::surface::{char_distance, sample_seeded};

    fn h(s: &str, g: usize) -> CurveHandle {
        CurveHandle::parse(s, g).unwrap()
    }

    #[test]
    fn handle_parsing() {
        assert_eq!(h("a1", 2), CurveHandle::base(BaseCurve::A(1)));
        let c = h("Tb1*Tc1(b1)", 2);
        assert_eq!(c.base, BaseCurve::B(1));
        assert_eq!(c.to_string(), "Tb1*Tc1(b1)");
        assert!(CurveHandle::parse("a3", 2).is_err());
        assert!(CurveHandle::parse("c1", 2).is_err());
        assert!(CurveHandle::parse("Tb1(a1", 2).is_err());
    }

    #[test]
    fn flow_examples() {
        let rep = sample_seeded(2, 21).unwrap();
        for s in ["a1", "b1", "a2", "b2", "Tb1(a1)", "Tb1*Tc1(b1)"] {
            let c = h(s, 2);
            assert!(char_distance(&twist_flow(&c, 0.0, &rep).unwrap(), &rep).unwrap() <= 1e-12, "{s}");
            assert!(char_distance(&twist_flow(&c, 2.0, &rep).unwrap(), &rep).unwrap() <= 1e-12, "{s}");
            let theta = c.theta(&rep).unwrap();
            let flowed = twist_flow(&c, theta, &rep).unwrap();
            let twisted = apply(&c.twist(2).unwrap(), &rep).unwrap();
            assert!(char_distance(&flowed, &twisted).unwrap() <= 1e-9, "{s}");
            assert!(flowed.relator_defect() <= 1e-10);
        }
    }

    #[test]
    fn time_one_is_not_the_identity() {
        let rep = sample_seeded(2, 22).unwrap();
        let c = h("a1", 2);
        let d = char_distance(&twist_flow(&c, 1.0, &rep).unwrap(), &rep).unwrap();
        // b1 is negated
        assert!(d >= rep.b(1).trace().abs());
    }

    #[test]
    fn singular_curve_is_an_error() {
        use crate::su2::UnitQuaternion as Q;
        let rep = SurfaceRep::new(2, vec![Q::IDENTITY, Q::J, Q::I, Q::I]).unwrap();
        let err = twist_flow(&h("a1", 2), 0.3, &rep).unwrap_err();
        assert!(matches!(err, Error::SingularFlow { ref curve, .. } if curve == "a1"));
        assert!(twist_power(&h("a1", 2), 3, &rep).is_err());
        assert!(twist_flow(&h("b1", 2), 0.3, &rep).is_ok());
    }

    #[test]
    fn twist_power_matches_iteration() {
        let rep = sample_seeded(3, 23).unwrap();
        for s in ["a2", "b3", "Tc1(a1)", "Ta1*Tb2^-1(b1)"] {
            let c = h(s, 3);
            let t = c.twist(3).unwrap();
            let mut it = rep.clone();
            for n in 1..=20 {
                it = apply(&t, &it).unwrap();
                let fast = twist_power(&c, n, &rep).unwrap();
                assert!(char_distance(&fast, &it).unwrap() <= 1e-8, "{s} n={n}");
            }
            assert!(char_distance(&twist_power(&c, 0, &rep).unwrap(), &rep).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn f_and_big_f_basics() {
        let rep = sample_seeded(2, 24).unwrap();
        let (g, d) = (h("a1", 2), h("Tb1(a1)", 2));
        assert!((f_function(&g, &d, &rep, 0.0).unwrap() - g.theta(&rep).unwrap()).abs() < 1e-14);
        let a2 = h("a2", 2);
        for t in [0.1, 0.7, 1.3] {
            assert!((f_function(&g, &a2, &rep, t).unwrap() - g.theta(&rep).unwrap()).abs() < 1e-12);
        }
        assert!(char_distance(&f_map(&g, &d, &rep, 0.0, 0.0).unwrap(), &rep).unwrap() < 1e-12);
        let t = 0.37;
        assert!(
            char_distance(&f_map(&g, &d, &rep, t, 0.0).unwrap(), &twist_flow(&d, -t, &rep).unwrap()).unwrap() < 1e-12
        );
    }
}
