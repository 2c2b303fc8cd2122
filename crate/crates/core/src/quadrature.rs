//! Gauss–Legendre rules and small interpolation helpers.

use num_complex::Complex64;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (z * p - p0) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// The 16-point rule, cached.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Value at `s` of the interpolant through samples `f_j = f(j·dt)`: cubic
/// Lagrange on the four nearest nodes, linear on the first few intervals
/// where the samples may carry a `√s` singularity.
pub fn interpolate_uniform(f: &[Complex64], dt: f64, s: f64) -> Complex64 {
    let n = f.len();
    let r = (s / dt).clamp(0.0, (n - 1) as f64);
    let j = (r.floor() as usize).min(n.saturating_sub(2));
    if n < 4 || j < 4 {
        let th = r - j as f64;
        return f[j] * (1.0 - th) + f[(j + 1).min(n - 1)] * th;
    }
    let j0 = (j - 1).min(n - 4);
    let u = r - j0 as f64;
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    f[j0] * l0 + f[j0 + 1] * l1 + f[j0 + 2] * l2 + f[j0 + 3] * l3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        for deg in 0..32 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let want = if deg % 2 == 0 { 2.0 / (deg + 1) as f64 } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let dt = 0.1;
        let f: Vec<Complex64> = (0..40)
            .map(|j| {
                let s = j as f64 * dt;
                Complex64::new(s * s * s - s, 2.0 * s * s)
            })
            .collect();
        let s = 2.345;
        let got = interpolate_uniform(&f, dt, s);
        assert!((got - Complex64::new(s * s * s - s, 2.0 * s * s)).norm() < 1e-12);
    }
}
