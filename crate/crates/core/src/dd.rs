//! Small compensated-arithmetic helpers (double-double products and
//! reductions). Only what the angle and score computations need.

pub(crate) const TWO_PI_HI: f64 = std::f64::consts::TAU;
pub(crate) const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

/// Exact product `a * b = hi + lo`.
#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    (hi, lo)
}

/// `n * angle` reduced into `(-pi, pi]`.
///
/// The product is carried as a double-double and `2 pi` as a two-term
/// constant, so the absolute error stays near `|n| * ulp(angle)` rather
/// than growing with the size of the unreduced product.
pub(crate) fn mul_mod_two_pi(n: i64, angle: f64) -> f64 {
    let nf = n as f64;
    let (p, e) = two_prod(nf, angle);
    let k = (p / TWO_PI_HI).round();
    let (kh, kl) = two_prod(k, TWO_PI_HI);
    let mut r = ((p - kh) - kl) + e - k * TWO_PI_LO;
    if r > std::f64::consts::PI {
        r -= TWO_PI_HI;
    } else if r <= -std::f64::consts::PI {
        r += TWO_PI_HI;
    }
    r
}

/// Signed residue of `n * x` modulo 1, in `[-1/2, 1/2]`.
pub(crate) fn mul_mod_one(n: f64, x: f64) -> f64 {
    let (hi, lo) = two_prod(n, x);
    let r = (hi - hi.round()) + lo;
    r - r.round()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_of_large_multiples() {
        // 10^9 * (pi/3) = 333333333 pi + pi/3 ≡ pi + pi/3 ≡ -2pi/3
        let r = mul_mod_two_pi(1_000_000_000, std::f64::consts::FRAC_PI_3);
        let exact = -2.0 * std::f64::consts::FRAC_PI_3;
        // the input pi/3 itself carries ~1e-16 relative error, amplified by 1e9
        assert!((r - exact).abs() < 1e-6, "{r} vs {exact}");
    }

    #[test]
    fn mod_one_small_values() {
        assert!((mul_mod_one(3.0, 0.4) - 0.2).abs() < 1e-15);
        assert!((mul_mod_one(7.0, 2.0 / 7.0)).abs() < 1e-15);
    }
}
