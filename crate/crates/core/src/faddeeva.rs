//! The Faddeeva function `w(z) = exp(-z²) erfc(-iz)` and a few relatives.
//!
//! Upper half plane: Weideman's rational expansion for moderate `|z|`,
//! a Laplace continued fraction for large `|z|`. The lower half plane
//! is reached through `w(z) = 2 exp(-z²) - w(-z)`.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

const N_TERMS: usize = 40;
const CF_RADIUS: f64 = 12.0;
const CF_DEPTH: usize = 48;

struct Weideman {
    l: f64,
    coeffs: [f64; N_TERMS],
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = N_TERMS;
        let m = 2 * n;
        let l = (n as f64 / 2f64.sqrt()).sqrt();
        // a_k = (1/2M) sum_j f(theta_j) cos(k theta_j), theta_j = j pi / M
        let samples: Vec<(f64, f64)> = ((1 - m as isize)..(m as isize))
            .map(|j| {
                let theta = j as f64 * PI / m as f64;
                let t = l * (theta / 2.0).tan();
                (theta, (-t * t).exp() * (l * l + t * t))
            })
            .collect();
        let mut coeffs = [0.0; N_TERMS];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let order = (k + 1) as f64;
            let s: f64 = samples.iter().map(|(th, f)| f * (order * th).cos()).sum();
            *c = s / (2 * m) as f64;
        }
        Weideman { l, coeffs }
    })
}

fn w_rational(z: Complex64) -> Complex64 {
    let tab = weideman();
    let i = Complex64::i();
    let denom = tab.l - i * z;
    let zz = (tab.l + i * z) / denom;
    let mut p = Complex64::new(0.0, 0.0);
    for &c in tab.coeffs.iter().rev() {
        p = p * zz + c;
    }
    2.0 * p / (denom * denom) + 1.0 / (PI.sqrt() * denom)
}

fn w_continued_fraction(z: Complex64) -> Complex64 {
    // w(z) = (i/√π) / (z - (1/2)/(z - 1/(z - (3/2)/(z - ...))))
    let mut tail = z;
    for k in (1..=CF_DEPTH).rev() {
        tail = z - (k as f64 / 2.0) / tail;
    }
    Complex64::new(0.0, 1.0 / PI.sqrt()) / tail
}

fn w_upper(z: Complex64) -> Complex64 {
    if z.norm() > CF_RADIUS {
        w_continued_fraction(z)
    } else {
        w_rational(z)
    }
}

/// Faddeeva function on the whole complex plane.
pub fn w(z: Complex64) -> Complex64 {
    if z.im >= 0.0 {
        w_upper(z)
    } else {
        2.0 * (-z * z).exp() - w_upper(-z)
    }
}

/// `exp(phase) * w(z)`, with the Gaussian factor of the lower-half-plane
/// reflection folded into `phase` before exponentiating. Useful when `w`
/// alone would overflow but the product is bounded.
pub fn w_scaled(z: Complex64, phase: Complex64) -> Complex64 {
    if z.im >= 0.0 {
        phase.exp() * w_upper(z)
    } else {
        2.0 * (phase - z * z).exp() - phase.exp() * w_upper(-z)
    }
}

/// Derivative `w'(z) = -2 z w(z) + 2i/√π`.
pub fn w_prime(z: Complex64) -> Complex64 {
    -2.0 * z * w(z) + Complex64::new(0.0, 2.0 / PI.sqrt())
}

/// `exp(phase) * w'(z)` with the same overflow care as [`w_scaled`].
pub fn w_prime_scaled(z: Complex64, phase: Complex64) -> Complex64 {
    let c = Complex64::new(0.0, 2.0 / PI.sqrt());
    if z.im >= 0.0 {
        phase.exp() * (-2.0 * z * w_upper(z) + c)
    } else {
        // w(z) = 2e^{-z²} - w(-z)  ⇒  w'(z) = -4z e^{-z²} + w'(-z)
        let mz = -z;
        -4.0 * z * (phase - z * z).exp() + phase.exp() * (-2.0 * mz * w_upper(mz) + c)
    }
}

/// Complementary error function of a complex argument.
pub fn erfc(z: Complex64) -> Complex64 {
    let iz = Complex64::i() * z;
    if z.re >= 0.0 {
        (-z * z).exp() * w(iz)
    } else {
        2.0 - (-z * z).exp() * w(-iz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn known_values() {
        // w(0) = 1, w(i) = e erfc(1)
        assert!((w(c(0.0, 0.0)) - 1.0).norm() < 1e-14);
        let e_erfc1 = 1f64.exp() * 0.157_299_207_050_285_13;
        assert!((w(c(0.0, 1.0)) - e_erfc1).norm() < 1e-14);
    }

    #[test]
    fn erfc_real_axis() {
        let v = erfc(c(0.5, 0.0));
        assert!((v.re - 0.479_500_122_186_953_5).abs() < 1e-14);
        assert!(v.im.abs() < 1e-15);
        let v = erfc(c(-1.0, 0.0));
        assert!((v.re - 1.842_700_792_949_715).abs() < 1e-14);
    }

    #[test]
    fn reflection_consistent() {
        let z = c(0.7, -0.3);
        let lhs = w(z) + w(-z);
        let rhs = 2.0 * (-z * z).exp();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn derivative_matches_difference() {
        let z = c(1.3, 0.4);
        let h = 1e-6;
        let fd = (w(z + h) - w(z - h)) / (2.0 * h);
        assert!((fd - w_prime(z)).norm() < 1e-8);
    }
}
