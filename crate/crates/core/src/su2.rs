//! SU(2) as unit quaternions.
//!
//! A unit quaternion `q = w + x i + y j + z k` stands for the matrix
//! `w I + x (i sigma_1) + ...`, so its trace is `2w`. Every non-central element
//! factors as `cos(a) + sin(a) u` with `a` in `(0, pi)` and `u` a unit
//! imaginary axis; the normalized angle `theta = a / pi` lies in `[0, 1]` and
//! is a class function.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Mul, Neg};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dd;
use crate::error::{Error, Result};

/// Below this `sin(angle)` an element is treated as central (`±1`).
pub const AXIS_EPS: f64 = 1e-12;

const UNIT_AXIS_TOL: f64 = 1e-9;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Axis-angle decomposition `q = cos(angle) + sin(angle) axis`.
///
/// For the central elements `±1` there is no axis; `valid` is false and
/// `axis` is set to `[0, 0, 1]` as a placeholder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle: f64,
    pub valid: bool,
}

impl UnitQuaternion {
    pub const IDENTITY: Self = Self { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const MINUS_ONE: Self = Self { w: -1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const I: Self = Self { w: 0.0, x: 1.0, y: 0.0, z: 0.0 };
    pub const J: Self = Self { w: 0.0, x: 0.0, y: 1.0, z: 0.0 };
    pub const K: Self = Self { w: 0.0, x: 0.0, y: 0.0, z: 1.0 };

    /// Builds a quaternion and rescales it onto the unit sphere.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::InvalidInput(format!("cannot normalize quaternion ({w}, {x}, {y}, {z})")));
        }
        Ok(Self { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    /// Components taken as-is. Callers guarantee (near) unit norm.
    pub const fn from_raw(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn vector(self) -> Vec3 {
        [self.x, self.y, self.z]
    }

    /// `cos(angle) + sin(angle) axis`; the axis must be unit length.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let n = norm3(axis);
        if (n - 1.0).abs() > UNIT_AXIS_TOL {
            return Err(Error::InvalidInput(format!("axis {axis:?} is not a unit vector (|axis| = {n})")));
        }
        Ok(Self::exp_unchecked(axis, angle))
    }

    pub(crate) fn exp_unchecked(axis: Vec3, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { w: c, x: s * axis[0], y: s * axis[1], z: s * axis[2] }
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn renormalized(self) -> Self {
        let n = self.norm();
        Self { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn trace(self) -> f64 {
        2.0 * self.w
    }

    /// Inverse of a unit quaternion: its conjugate.
    pub fn inverse(self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// `g q g^-1`.
    pub fn conj_by(self, g: Self) -> Self {
        (g * self * g.inverse()).renormalized()
    }

    /// `p q p^-1 q^-1`.
    pub fn commutator(self, other: Self) -> Self {
        self * other * self.inverse() * other.inverse()
    }

    /// Euclidean distance in R^4.
    pub fn dist(self, other: Self) -> f64 {
        let d = [self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]).sqrt()
    }

    /// Rotation half-angle in `[0, pi]`.
    pub fn angle(self) -> f64 {
        norm3(self.vector()).atan2(self.w)
    }

    /// `(1/pi) arccos(tr/2)`, in `[0, 1]`.
    pub fn theta(self) -> f64 {
        self.angle() / PI
    }

    pub fn axis_angle(self) -> AxisAngle {
        let v = self.vector();
        let s = norm3(v);
        let n = self.norm();
        let angle = s.atan2(self.w);
        if s / n < AXIS_EPS {
            AxisAngle { axis: [0.0, 0.0, 1.0], angle, valid: false }
        } else {
            AxisAngle { axis: [v[0] / s, v[1] / s, v[2] / s], angle, valid: true }
        }
    }

    pub fn axis(self) -> Result<Vec3> {
        let aa = self.axis_angle();
        if aa.valid {
            Ok(aa.axis)
        } else {
            Err(Error::SingularAxis { sin: norm3(self.vector()) })
        }
    }

    pub fn is_central(self) -> bool {
        !self.axis_angle().valid
    }

    /// `q^n` in closed form; the angle `n * a` is reduced modulo `2 pi` with
    /// compensated arithmetic.
    pub fn power(self, n: i64) -> Self {
        let aa = self.axis_angle();
        if !aa.valid {
            return if self.w < 0.0 && n.rem_euclid(2) == 1 { Self::MINUS_ONE } else { Self::IDENTITY };
        }
        Self::exp_unchecked(aa.axis, dd::mul_mod_two_pi(n, aa.angle))
    }

    /// `exp(pi t u)` for the axis `u` of `self`. `flow_factor(theta(q)) = q`,
    /// and the factor has period 2 in `t`.
    pub fn flow_factor(self, t: f64) -> Result<Self> {
        let axis = self.axis()?;
        let t = t % 2.0;
        Ok(Self::exp_unchecked(axis, PI * t))
    }

    /// Uniform (Haar) sample: four standard normals, normalized.
    pub fn haar<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 4] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            if let Ok(q) = Self::from_array(v) {
                return q;
            }
        }
    }

    /// Rotation of R^3 induced by conjugation, applied to `v`.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        let p = Self { w: 0.0, x: v[0], y: v[1], z: v[2] };
        (self * p * self.inverse()).vector()
    }

    /// The shortest-arc element `g` with `g from g^-1 = to` (unit vectors).
    /// Fails when the vectors are (nearly) antipodal.
    pub(crate) fn shortest_arc(from: Vec3, to: Vec3) -> Option<Self> {
        let d = dot3(from, to);
        if d < -1.0 + 1e-8 {
            return None;
        }
        let c = cross3(from, to);
        Self::new(1.0 + d, c[0], c[1], c[2]).ok()
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for UnitQuaternion {
    type Output = Self;

    fn mul(self, q: Self) -> Self {
        let p = self;
        Self {
            w: p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
            x: p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
            y: p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
            z: p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
        }
    }
}

impl Neg for UnitQuaternion {
    type Output = Self;

    fn neg(self) -> Self {
        Self { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
    }
}

impl fmt::Display for UnitQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.w, self.x, self.y, self.z)
    }
}

impl Serialize for UnitQuaternion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitQuaternion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = <[f64; 4]>::deserialize(d)?;
        let q = Self::from_raw(a[0], a[1], a[2], a[3]);
        if (q.norm() - 1.0).abs() <= 1e-12 {
            return Ok(q);
        }
        Self::from_array(a).map_err(serde::de::Error::custom)
    }
}

pub fn theta(q: UnitQuaternion) -> f64 {
    q.theta()
}

pub(crate) fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Some unit vector orthogonal to `v` (unit).
pub(crate) fn orthogonal(v: Vec3) -> Vec3 {
    let e = if v[0].abs() < 0.6 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c = cross3(v, e);
    let n = norm3(c);
    [c[0] / n, c[1] / n, c[2] / n]
}

/// Uniform unit vector in R^3.
pub(crate) fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v: Vec3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = norm3(v);
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(p: UnitQuaternion, q: UnitQuaternion, tol: f64) -> bool {
        p.dist(q) <= tol
    }

    #[test]
    fn axis_angle_examples() {
        let q = UnitQuaternion::from_axis_angle([0.6, 0.8, 0.0], 0.0).unwrap();
        assert_eq!(q, UnitQuaternion::IDENTITY);
        let q = UnitQuaternion::from_axis_angle([0.0, 0.0, 1.0], PI).unwrap();
        assert!(close(q, UnitQuaternion::MINUS_ONE, 1e-15));
        let q = UnitQuaternion::from_axis_angle([1.0, 0.0, 0.0], PI / 2.0).unwrap();
        assert!(close(q, UnitQuaternion::I, 1e-15));
        assert!(UnitQuaternion::from_axis_angle([1.0, 1.0, 0.0], 0.3).is_err());
    }

    #[test]
    fn theta_examples() {
        assert_eq!(UnitQuaternion::IDENTITY.theta(), 0.0);
        assert_eq!(UnitQuaternion::MINUS_ONE.theta(), 1.0);
        assert_eq!(UnitQuaternion::I.theta(), 0.5);
        let q = UnitQuaternion::from_axis_angle([0.0, 0.0, 1.0], 0.3 * PI).unwrap();
        assert!((q.theta() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn power_examples() {
        assert!(close(UnitQuaternion::I.power(2), UnitQuaternion::MINUS_ONE, 1e-15));
        let q = UnitQuaternion::from_axis_angle([0.0, 0.6, 0.8], 0.3 * PI).unwrap();
        assert!(close(q.power(10), UnitQuaternion::MINUS_ONE, 1e-14));
        assert_eq!(UnitQuaternion::MINUS_ONE.power(3), UnitQuaternion::MINUS_ONE);
        assert_eq!(UnitQuaternion::MINUS_ONE.power(-4), UnitQuaternion::IDENTITY);
    }

    #[test]
    fn power_matches_iterated_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let q = UnitQuaternion::haar(&mut rng);
            let mut acc = UnitQuaternion::IDENTITY;
            for _ in 0..17 {
                acc = acc * q;
            }
            assert!(close(q.power(17), acc, 1e-12));
            assert!(close(q.power(-17), acc.inverse(), 1e-12));
        }
    }

    #[test]
    fn group_operations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = UnitQuaternion::haar(&mut rng);
        let g = UnitQuaternion::haar(&mut rng);
        assert!(close((q * q.inverse()).renormalized(), UnitQuaternion::IDENTITY, 1e-15));
        assert!(close(UnitQuaternion::IDENTITY.conj_by(g), UnitQuaternion::IDENTITY, 1e-15));
        assert!((q.conj_by(g).theta() - q.theta()).abs() < 1e-12);
        assert_eq!(q.inverse().theta(), q.theta());
        assert!(close(UnitQuaternion::I.commutator(UnitQuaternion::J), UnitQuaternion::MINUS_ONE, 1e-15));
    }

    #[test]
    fn flow_factor_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = UnitQuaternion::haar(&mut rng);
        assert!(close(q.flow_factor(0.0).unwrap(), UnitQuaternion::IDENTITY, 1e-15));
        assert!(close(q.flow_factor(q.theta()).unwrap(), q, 1e-14));
        assert!(close(q.flow_factor(2.0).unwrap(), UnitQuaternion::IDENTITY, 1e-15));
        assert!(matches!(UnitQuaternion::MINUS_ONE.flow_factor(0.5), Err(Error::SingularAxis { .. })));
    }

    #[test]
    fn haar_samples_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            assert!((UnitQuaternion::haar(&mut rng).norm() - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn json_is_a_plain_array() {
        let q = UnitQuaternion::from_raw(0.5, 0.5, -0.5, 0.5);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, "[0.5,0.5,-0.5,0.5]");
        let back: UnitQuaternion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
