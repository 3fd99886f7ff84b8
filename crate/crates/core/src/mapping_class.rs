//! Mapping classes as words in Dehn twists, acting on the surface group and
//! on representations.
//!
//! Twist generators and their automorphisms of `pi_1`:
//!
//! * `A(i)`, the twist about `a_i`: `b_i -> b_i a_i`.
//! * `B(i)`, the twist about `b_i`: `a_i -> a_i b_i^-1`.
//! * `C(i)`, the twist about the chain curve in homology class
//!   `a_i + a_{i+1}`, crossing `b_i` and `b_{i+1}` once each. With
//!   `w = a_i a_{i+1}` it is, up to conjugating handles `i, i+1` by `w`,
//!   `b_i -> a_{i+1} a_i b_i` and `b_{i+1} -> a_i a_{i+1} b_{i+1}`; the
//!   conjugated form below fixes the relator letter for letter.
//!
//! All three fix every commutator block they do not touch, so each one maps
//! the relator to itself exactly. `A(i), B(i)` braid; `C(i)` braids with
//! `B(i)` and `B(i+1)` and commutes with `A(i)`, `A(i+1)`.
//!
//! A [`MappingClass`] is a composition of signed generators, leftmost acting
//! last. It acts on representations by `m . rho = rho o m^-1`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::surface::{self, check_genus, evaluate_unchecked, gen_a, gen_b, SurfaceRep, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwistCurve {
    A(usize),
    B(usize),
    C(usize),
}

impl TwistCurve {
    pub fn validate(self, genus: usize) -> Result<()> {
        let ok = match self {
            TwistCurve::A(i) | TwistCurve::B(i) => (1..=genus).contains(&i),
            TwistCurve::C(i) => i >= 1 && i < genus,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("twist curve {self} out of range for genus {genus}")))
        }
    }

    /// All twist curves for a genus: `A(i), B(i)` for every handle and
    /// `C(i)` between consecutive handles.
    pub fn all(genus: usize) -> Vec<TwistCurve> {
        let mut v = Vec::with_capacity(3 * genus);
        for i in 1..=genus {
            v.push(TwistCurve::A(i));
            v.push(TwistCurve::B(i));
            if i < genus {
                v.push(TwistCurve::C(i));
            }
        }
        v
    }
}

impl fmt::Display for TwistCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwistCurve::A(i) => write!(f, "a{i}"),
            TwistCurve::B(i) => write!(f, "b{i}"),
            TwistCurve::C(i) => write!(f, "c{i}"),
        }
    }
}

/// A Dehn twist generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TwistGen {
    pub curve: TwistCurve,
    pub inverse: bool,
}

impl TwistGen {
    pub fn new(curve: TwistCurve) -> Self {
        Self { curve, inverse: false }
    }

    pub fn inv(self) -> Self {
        Self { curve: self.curve, inverse: !self.inverse }
    }
}

/// Generator images of an endomorphism of the free group on `2g` letters;
/// entry `k - 1` is the image of generator `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automorphism {
    images: Vec<Word>,
}

impl Automorphism {
    pub fn identity(genus: usize) -> Self {
        Self { images: (1..=2 * genus as i32).map(Word::generator).collect() }
    }

    pub fn from_images(images: Vec<Word>) -> Self {
        Self { images }
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image(&self, k: usize) -> &Word {
        &self.images[k - 1]
    }

    fn set(&mut self, k: i32, w: &[i32]) {
        self.images[k as usize - 1] = Word::reduced(w.iter().copied());
    }

    /// Substitutes generator images into `w` and freely reduces.
    pub fn apply(&self, w: &Word) -> Word {
        Word::reduced(w.letters().iter().flat_map(|&l| {
            let img = &self.images[l.unsigned_abs() as usize - 1];
            if l > 0 {
                img.letters().to_vec()
            } else {
                img.inverse().letters().to_vec()
            }
        }))
    }

    /// `self o other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self { images: other.images.iter().map(|w| self.apply(w)).collect() }
    }

    /// The representation `rho o self`.
    pub fn pull_back(&self, rep: &SurfaceRep) -> SurfaceRep {
        let images = self.images.iter().map(|w| evaluate_unchecked(w, rep)).collect();
        SurfaceRep::from_images(rep.genus(), images).expect("shape preserved")
    }
}

/// Source of generator automorphisms. The standard formulas live in
/// [`StandardTwists`]; alternatives exist so relation checks can be run
/// against deliberately wrong conventions.
pub trait TwistModel: Sync {
    fn automorphism(&self, gen: TwistGen, genus: usize) -> Result<Automorphism>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StandardTwists;

impl TwistModel for StandardTwists {
    fn automorphism(&self, gen: TwistGen, genus: usize) -> Result<Automorphism> {
        automorphism(gen, genus)
    }
}

/// Generator images of a signed twist.
pub fn automorphism(gen: TwistGen, genus: usize) -> Result<Automorphism> {
    check_genus(genus)?;
    gen.curve.validate(genus)?;
    let mut m = Automorphism::identity(genus);
    let inv = gen.inverse;
    match gen.curve {
        TwistCurve::A(i) => {
            let (a, b) = (gen_a(i), gen_b(i));
            m.set(b, &[b, if inv { -a } else { a }]);
        }
        TwistCurve::B(i) => {
            let (a, b) = (gen_a(i), gen_b(i));
            m.set(a, &[a, if inv { b } else { -b }]);
        }
        TwistCurve::C(i) => {
            let (a1, b1, a2, b2) = (gen_a(i), gen_b(i), gen_a(i + 1), gen_b(i + 1));
            if inv {
                m.set(a1, &[a1, a2, a1, -a2, -a1]);
                m.set(b1, &[a1, a2, -a1, -a2, b1, -a2, -a1]);
                m.set(a2, &[a1, a2, -a1]);
                m.set(b2, &[b2, -a2, -a1]);
            } else {
                m.set(a1, &[-a2, a1, a2]);
                m.set(b1, &[-a2, -a1, a2, a1, b1, a1, a2]);
                m.set(a2, &[-a2, -a1, a2, a1, a2]);
                m.set(b2, &[b2, a1, a2]);
            }
        }
    }
    Ok(m)
}

/// A word in twist generators; `twists[0]` acts last.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MappingClass {
    genus: usize,
    twists: Vec<TwistGen>,
}

impl MappingClass {
    pub fn identity(genus: usize) -> Self {
        Self { genus, twists: Vec::new() }
    }

    pub fn new(genus: usize, twists: Vec<TwistGen>) -> Result<Self> {
        check_genus(genus)?;
        for t in &twists {
            t.curve.validate(genus)?;
        }
        Ok(Self { genus, twists })
    }

    pub fn twist(genus: usize, curve: TwistCurve) -> Result<Self> {
        Self::new(genus, vec![TwistGen::new(curve)])
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn twists(&self) -> &[TwistGen] {
        &self.twists
    }

    pub fn is_identity_word(&self) -> bool {
        self.twists.is_empty()
    }

    /// Reverses the word and flips every sign.
    pub fn inverse(&self) -> Self {
        Self { genus: self.genus, twists: self.twists.iter().rev().map(|t| t.inv()).collect() }
    }

    /// `self o other`.
    pub fn then_after(&self, other: &Self) -> Self {
        let mut twists = self.twists.clone();
        twists.extend_from_slice(&other.twists);
        Self { genus: self.genus, twists }
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut twists = Vec::with_capacity(base.twists.len() * n.unsigned_abs() as usize);
        for _ in 0..n.unsigned_abs() {
            twists.extend_from_slice(&base.twists);
        }
        Self { genus: self.genus, twists }
    }

    /// `g self g^-1`.
    pub fn conjugate_by(&self, g: &Self) -> Self {
        g.then_after(self).then_after(&g.inverse())
    }

    /// Uniformly random signed twist word of the given length.
    pub fn random<R: Rng + ?Sized>(genus: usize, len: usize, rng: &mut R) -> Self {
        let curves = TwistCurve::all(genus);
        let twists = (0..len)
            .map(|_| TwistGen { curve: curves[rng.random_range(0..curves.len())], inverse: rng.random() })
            .collect();
        Self { genus, twists }
    }

    /// Parses `Ta1*Tb1^-1*Tc1` (case-insensitive); `1`, `id` or the empty
    /// string is the identity.
    pub fn parse(s: &str, genus: usize) -> Result<Self> {
        check_genus(genus)?;
        let s = s.trim();
        if s.is_empty() || s == "1" || s.eq_ignore_ascii_case("id") {
            return Ok(Self::identity(genus));
        }
        let mut twists = Vec::new();
        for tok in s.split('*') {
            let tok = tok.trim().to_ascii_lowercase();
            let (body, pow) = match tok.split_once('^') {
                Some((b, p)) => (
                    b.trim().to_string(),
                    p.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad exponent in '{tok}'")))?,
                ),
                None => (tok.clone(), 1),
            };
            let rest =
                body.strip_prefix('t').ok_or_else(|| Error::Parse(format!("twist '{tok}' must start with T")))?;
            let mut chars = rest.chars();
            let kind = chars.next().ok_or_else(|| Error::Parse(format!("empty twist '{tok}'")))?;
            let idx: usize = chars.as_str().parse().map_err(|_| Error::Parse(format!("bad twist index in '{tok}'")))?;
            let curve = match kind {
                'a' => TwistCurve::A(idx),
                'b' => TwistCurve::B(idx),
                'c' => TwistCurve::C(idx),
                _ => return Err(Error::Parse(format!("unknown twist curve in '{tok}'"))),
            };
            curve.validate(genus).map_err(|e| Error::Parse(e.to_string()))?;
            let g = TwistGen { curve, inverse: pow < 0 };
            twists.extend(std::iter::repeat_n(g, pow.unsigned_abs() as usize));
        }
        Ok(Self { genus, twists })
    }

    fn check_rep(&self, rep: &SurfaceRep) -> Result<()> {
        if rep.genus() != self.genus {
            return Err(Error::GenusMismatch { expected: self.genus, found: rep.genus() });
        }
        Ok(())
    }
}

impl fmt::Display for MappingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twists.is_empty() {
            return write!(f, "1");
        }
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < self.twists.len() {
            let t = self.twists[i];
            let mut n = 1;
            while i + n < self.twists.len() && self.twists[i + n] == t {
                n += 1;
            }
            let name = format!("T{}", t.curve);
            parts.push(match (t.inverse, n) {
                (false, 1) => name,
                (false, n) => format!("{name}^{n}"),
                (true, n) => format!("{name}^-{n}"),
            });
            i += n;
        }
        write!(f, "{}", parts.join("*"))
    }
}

/// `m . rho = rho o m^-1`, applied one twist at a time on the numbers.
pub fn apply(m: &MappingClass, rep: &SurfaceRep) -> Result<SurfaceRep> {
    apply_with(&StandardTwists, m, rep)
}

pub fn apply_with(model: &dyn TwistModel, m: &MappingClass, rep: &SurfaceRep) -> Result<SurfaceRep> {
    m.check_rep(rep)?;
    let mut cur = rep.clone();
    for t in m.twists.iter().rev() {
        cur = model.automorphism(t.inv(), m.genus)?.pull_back(&cur);
    }
    Ok(cur)
}

/// Image of a word under the automorphism of `m`, freely reduced.
pub fn act_on_curve(m: &MappingClass, w: &Word) -> Result<Word> {
    act_on_curve_with(&StandardTwists, m, w)
}

pub fn act_on_curve_with(model: &dyn TwistModel, m: &MappingClass, w: &Word) -> Result<Word> {
    if w.max_generator() > 2 * m.genus {
        return Err(Error::InvalidInput(format!("word {w} outside genus {}", m.genus)));
    }
    let mut cur = w.clone();
    for t in m.twists.iter().rev() {
        cur = model.automorphism(*t, m.genus)?.apply(&cur);
    }
    Ok(cur)
}

/// Symbolic automorphism of `m` (composed, reduced after every step).
pub fn automorphism_of(m: &MappingClass) -> Result<Automorphism> {
    let mut acc = Automorphism::identity(m.genus);
    for t in m.twists.iter().rev() {
        acc = automorphism(*t, m.genus)?.compose(&acc);
    }
    Ok(acc)
}

/// `tau_gamma^n phi tau_gamma^-n phi^-1`, a member of the normal closure of
/// `phi`. Equals `tau_gamma^n tau_delta^-n` with `delta = phi(gamma)`.
pub fn commutator_element(phi: &MappingClass, gamma: TwistCurve, n: u32) -> Result<MappingClass> {
    let t = MappingClass::twist(phi.genus, gamma)?;
    let tn = t.pow(n as i64);
    Ok(tn.then_after(phi).then_after(&tn.inverse()).then_after(&phi.inverse()))
}

pub const CHECK_RELATOR_TOL: f64 = 1e-9;

/// Evaluates the image of the relator under `m` on `trials` sampled
/// representations; a genuine mapping class sends it into the normal
/// closure of the relator, so every evaluation is the identity.
pub fn check_relator<R: Rng + ?Sized>(m: &MappingClass, trials: usize, rng: &mut R) -> Result<bool> {
    let img = act_on_curve(m, &surface::relator(m.genus)?)?;
    relator_image_vanishes(&img, m.genus, trials, rng)
}

/// [`check_relator`] for an explicit generator table.
pub fn check_relator_table<R: Rng + ?Sized>(
    auto: &Automorphism,
    genus: usize,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    let img = auto.apply(&surface::relator(genus)?);
    relator_image_vanishes(&img, genus, trials, rng)
}

fn relator_image_vanishes<R: Rng + ?Sized>(img: &Word, genus: usize, trials: usize, rng: &mut R) -> Result<bool> {
    if trials == 0 {
        return Err(Error::InvalidInput("check_relator needs at least one trial".into()));
    }
    for _ in 0..trials {
        let rep = surface::sample(genus, rng)?;
        if evaluate_unchecked(img, &rep).dist(crate::su2::UnitQuaternion::IDENTITY) > CHECK_RELATOR_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}
