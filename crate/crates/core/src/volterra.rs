//! Origin-value Volterra equations with the Abel kernel of the free group.
//!
//! Every evolution in this crate reduces to
//!
//! ```text
//! U(t) = Fr(t) + i ∫₀ᵗ K_ν(t-s) Σ(U(s)) ds,    K_ν(τ) = e^{iντ} / √(4πiτ),
//! ```
//!
//! where `ν` is a gauge frequency chosen so that `U` varies slowly, `Fr` is
//! the (gauged) free flow at the origin and `Σ` the point source. The
//! integral is discretized by product integration: `Σ` is interpolated by
//! hat functions on a uniform grid and integrated exactly against the kernel.
//! Off the origin the same source is integrated against
//! `K_ν(x, τ) = e^{iντ} e^{ix²/4τ} / √(4πiτ)`.

use crate::error::{Result, SolwaveError};
use crate::faddeeva::w;
use crate::grid::FieldState;
use rayon::prelude::*;
use crate::model::NonlinearCoupling;
use crate::quadrature::{gl16, interpolate_uniform};
use num_complex::Complex64 as C;
use rustfft::FftPlanner;
use std::f64::consts::{PI, SQRT_2};

/// Largest time step accepted by the product-integration solvers.
pub const MAX_DT: f64 = 1e-2;

/// `-ζ(-½)`, the limit of `∫₀ᴺ√s ds` minus its trapezoid sum.
const ZETA_DEFECT: f64 = 0.207_886_224_977_354_6;
/// The same defect when only the first [`MIN_EXACT`] intervals are hats and
/// the rest is cubic interpolation.
const MIXED_DEFECT: f64 = 0.193_125_862_940_622_1;

fn inv_sqrt_4pii() -> C {
    C::new(0.0, 4.0 * PI).sqrt().inv()
}

/// Product-integration weights of `K_ν` against hat functions, per
/// interval `[p·dt, (p+1)·dt]` of the lag `τ`.
#[derive(Debug, Clone)]
pub struct AbelWeights {
    pub dt: f64,
    pub nu: f64,
    /// weight of the node at the small-lag end of interval `p`
    near: Vec<C>,
    /// weight of the node at the large-lag end of interval `p`
    far: Vec<C>,
    /// defect of the hat rule on `√s` at each `t_n`
    start: Vec<C>,
}

impl AbelWeights {
    pub fn new(dt: f64, nu: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt <= MAX_DT) {
            return Err(SolwaveError::StepSize(format!(
                "dt = {dt} outside (0, {MAX_DT}]"
            )));
        }
        let (gx, gw) = gl16();
        let k = inv_sqrt_4pii();
        let mut near = Vec::with_capacity(n_steps);
        let mut far = Vec::with_capacity(n_steps);
        for p in 0..n_steps {
            let (mut wn, mut wf) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
            if p == 0 {
                // τ = v², removing the inverse square root
                let r = dt.sqrt();
                for (x, wt) in gx.iter().zip(gw) {
                    let v = 0.5 * r * (x + 1.0);
                    let tau = v * v;
                    // dτ/√τ = 2 dv
                    let f = C::from_polar(r * wt, nu * tau);
                    wn += f * (dt - tau) / dt;
                    wf += f * tau / dt;
                }
            } else {
                let lo = p as f64 * dt;
                for (x, wt) in gx.iter().zip(gw) {
                    let tau = lo + 0.5 * dt * (x + 1.0);
                    let f = C::from_polar(0.5 * dt * wt / tau.sqrt(), nu * tau);
                    let th = (tau - lo) / dt;
                    wn += f * (1.0 - th);
                    wf += f * th;
                }
            }
            near.push(wn * k);
            far.push(wf * k);
        }
        let mut weights = AbelWeights {
            dt,
            nu,
            near,
            far,
            start: Vec::new(),
        };
        weights.check_positivity()?;
        weights.start = weights.sqrt_defects(n_steps);
        Ok(weights)
    }

    /// `∫₀^{t_n} K_ν(t_n - s) √s ds` minus its hat-rule value, for `n ≤ n_steps`.
    /// The hat sums are one linear convolution, done by FFT.
    fn sqrt_defects(&self, n_steps: usize) -> Vec<C> {
        let len = n_steps + 1;
        let size = (2 * len).next_power_of_two();
        let mut coeffs: Vec<C> = (0..size)
            .map(|m| {
                let mut c = C::new(0.0, 0.0);
                if m < len && m < n_steps {
                    c += self.near[m];
                }
                if m >= 1 && m <= n_steps {
                    c += self.far[m - 1];
                }
                c
            })
            .collect();
        let mut roots: Vec<C> = (0..size)
            .map(|j| C::new(if j < len { (j as f64 * self.dt).sqrt() } else { 0.0 }, 0.0))
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        fwd.process(&mut coeffs);
        fwd.process(&mut roots);
        let mut conv: Vec<C> = coeffs.iter().zip(&roots).map(|(a, b)| a * b).collect();
        inv.process(&mut conv);
        let k = inv_sqrt_4pii();
        (0..len)
            .map(|n| {
                if n == 0 {
                    return C::new(0.0, 0.0);
                }
                // the m = n term carries √t₀ = 0, so the extra near[n] is harmless
                let hat = conv[n] / size as f64;
                k * sqrt_moment(self.nu, n as f64 * self.dt) - hat
            })
            .collect()
    }

    /// Weights on `(Σ₀, Σ₁, Σ₂)` that make the rule exact for `√s` at `t_n`
    /// while keeping it exact for `1` and `s` (only `1` when `n = 1`).
    fn start_coeffs(&self, n: usize) -> [C; 3] {
        let zero = C::new(0.0, 0.0);
        if n == 0 || n >= self.start.len() {
            return [zero; 3];
        }
        let e = self.start[n] / self.dt.sqrt();
        if n == 1 {
            return [-e, e, zero];
        }
        let s2 = e / (SQRT_2 - 2.0);
        [s2, -2.0 * s2, s2]
    }

    /// With the gauge phase and the constant `1/√(4πi)` removed, the weights
    /// must be positive reals up to the phase variation over one interval.
    fn check_positivity(&self) -> Result<()> {
        let k = inv_sqrt_4pii().inv();
        for (p, (n, f)) in self.near.iter().zip(&self.far).enumerate() {
            let mid = (p as f64 + 0.5) * self.dt;
            let rot = C::from_polar(1.0, -self.nu * mid) * k;
            if (n * rot).re <= 0.0 || (f * rot).re <= 0.0 {
                return Err(SolwaveError::StepSize(format!(
                    "product-integration weight {p} lost positivity (ν·dt = {})",
                    self.nu * self.dt
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.near.len()
    }

    pub fn is_empty(&self) -> bool {
        self.near.is_empty()
    }

    /// Coefficient of `Σ(s_{n-m})` in `∫₀^{t_n} K_ν(t_n - s) Σ(s) ds`.
    fn coeff(&self, m: usize, n: usize) -> C {
        let mut c = C::new(0.0, 0.0);
        if m < n {
            c += self.near[m];
        }
        if m > 0 {
            c += self.far[m - 1];
        }
        c
    }

    /// `∫₀^{t_n} K_ν(t_n - s) Σ(s) ds` for samples `sigma[0..=n]`.
    pub fn convolve(&self, sigma: &[C], n: usize) -> C {
        let hats: C = (0..=n).map(|m| self.coeff(m, n) * sigma[n - m]).sum();
        let st = self.start_coeffs(n);
        hats + (0..3.min(n + 1)).map(|j| st[j] * sigma[j]).sum::<C>()
    }

    /// Same sum without the `s = t_n` node, plus the total weight of that node.
    fn history(&self, sigma: &[C], n: usize) -> (C, C) {
        let mut acc = self.far[n - 1] * sigma[0];
        for m in 1..n {
            acc += (self.near[m] + self.far[m - 1]) * sigma[n - m];
        }
        let st = self.start_coeffs(n);
        let mut implicit = self.near[0];
        for (j, c) in st.iter().enumerate() {
            if j < n {
                acc += c * sigma[j];
            } else if j == n {
                implicit += c;
            }
        }
        (acc, implicit)
    }
}

/// The point source `Σ(U)`.
#[derive(Debug, Clone, Copy)]
pub enum PointSource<'a> {
    /// `a U + b Re U` (linearization at a solitary wave, rotating frame).
    Linear { a: f64, b: f64 },
    /// `a(|U|²) U`.
    Nonlinear(&'a NonlinearCoupling),
    /// No coupling: pure free flow.
    Free,
}

impl PointSource<'_> {
    pub fn eval(&self, u: C) -> Result<C> {
        match *self {
            PointSource::Linear { a, b } => Ok(a * u + b * u.re),
            PointSource::Nonlinear(cpl) => cpl.force(u),
            PointSource::Free => Ok(C::new(0.0, 0.0)),
        }
    }
}

/// Solution of the origin equation on `t_n = n·dt`.
#[derive(Debug, Clone)]
pub struct OriginSolution {
    pub weights: AbelWeights,
    pub u: Vec<C>,
    pub sigma: Vec<C>,
}

impl OriginSolution {
    pub fn dt(&self) -> f64 {
        self.weights.dt
    }

    pub fn n_steps(&self) -> usize {
        self.u.len() - 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.u.len()).map(|n| n as f64 * self.dt()).collect()
    }
}

/// Solves the origin equation with `free[n] = Fr(t_n)`. The linear source
/// is treated implicitly (an exact 2×2 real solve per step); the nonlinear
/// one by extrapolated prediction followed by `corrections` passes through
/// the product-integration sum.
pub fn solve_origin(free: &[C], dt: f64, nu: f64, source: PointSource<'_>, corrections: usize) -> Result<OriginSolution> {
    if free.is_empty() {
        return Err(SolwaveError::TooFewPoints(0));
    }
    let n_steps = free.len() - 1;
    let weights = AbelWeights::new(dt, nu, n_steps.max(1))?;
    let i = C::i();
    let mut u = Vec::with_capacity(free.len());
    let mut sigma = Vec::with_capacity(free.len());
    u.push(free[0]);
    sigma.push(source.eval(free[0])?);
    for n in 1..=n_steps {
        let (hist, w0) = weights.history(&sigma, n);
        let r = free[n] + i * hist;
        let g = i * w0;
        let un = match source {
            PointSource::Free => r,
            PointSource::Linear { a, b } => solve_real_linear(r, g * a, g * b),
            PointSource::Nonlinear(_) => {
                let mut guess = if n >= 2 { 2.0 * u[n - 1] - u[n - 2] } else { u[n - 1] };
                for _ in 0..corrections.max(1) {
                    guess = r + g * source.eval(guess)?;
                }
                guess
            }
        };
        if !(un.re.is_finite() && un.im.is_finite()) {
            return Err(SolwaveError::Domain(format!("origin value diverged at step {n}")));
        }
        u.push(un);
        sigma.push(source.eval(un)?);
    }
    Ok(OriginSolution { weights, u, sigma })
}

/// `∫₀^t e^{iν(t-s)} (t-s)^{-1/2} √s ds`, by `s = t sin²φ`.
fn sqrt_moment(nu: f64, t: f64) -> C {
    let (gx, gw) = gl16();
    let panels = 1 + (nu.abs() * t / 2.0).ceil() as usize;
    let width = 0.5 * PI / panels as f64;
    let mut acc = C::new(0.0, 0.0);
    for p in 0..panels {
        let lo = p as f64 * width;
        for (x, wt) in gx.iter().zip(gw) {
            let phi = lo + 0.5 * width * (x + 1.0);
            let (s, c) = phi.sin_cos();
            acc += C::from_polar(0.5 * width * wt * 2.0 * t * s * s, nu * t * c * c);
        }
    }
    acc
}

/// Solves `U - p U - q Re U = r` for complex `U` (real-linear in `U`).
fn solve_real_linear(r: C, p: C, q: C) -> C {
    // U = x + iy:  x (1 - p - q) + y (i - i p) = r
    let cx = 1.0 - p - q;
    let cy = C::i() * (1.0 - p);
    let det = cx.re * cy.im - cy.re * cx.im;
    let x = (r.re * cy.im - cy.re * r.im) / det;
    let y = (cx.re * r.im - r.re * cx.im) / det;
    C::new(x, y)
}

/// `1 + i√π z w(z)` and `1 + 2z²(1 + i√π z w(z))`, accurate also where
/// the leading terms cancel.
fn fresnel_remainders(z: C) -> (C, C) {
    let z2 = z * z;
    if z2.norm() < 50.0 {
        let r = 1.0 + C::i() * PI.sqrt() * z * w(z);
        return (r, 1.0 + 2.0 * z2 * r);
    }
    // asymptotic series: i√π z w(z) = -Σ (2k-1)!! / (2z²)^k
    let q = (2.0 * z2).inv();
    let (mut r, mut r2) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
    let mut term = q; // (2k-1)!! q^k at k = 1
    let mut k = 1.0;
    loop {
        r -= term;
        let next = term * (2.0 * k + 1.0) * q;
        // 1 + 2z²R = -Σ_{k≥1} (2k+1)!! q^k
        r2 -= next / q;
        if next.norm() < 1e-18 * r.norm() || k > 60.0 {
            break;
        }
        term = next;
        k += 1.0;
    }
    (r, r2)
}

/// Primitives `G₀(τ) = ∫₀^τ e^{ic/s} s^{-1/2} ds` and `G₁(τ) = ∫₀^τ e^{ic/s} s^{1/2} ds`.
pub(crate) fn fresnel_primitives(c: f64, tau: f64) -> (C, C) {
    if tau <= 0.0 {
        return (C::new(0.0, 0.0), C::new(0.0, 0.0));
    }
    let z = C::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2) * (c / tau).sqrt();
    let (r, r2) = fresnel_remainders(z);
    let e = C::from_polar(1.0, c / tau);
    (2.0 * tau.sqrt() * e * r, (2.0 / 3.0) * tau * tau.sqrt() * e * r2)
}

/// Longest far-field panel in the lag variable.
const MAX_PANEL: f64 = 0.5;
/// Minimum number of hat intervals handled with exact weights near `τ = 0`
/// and near `s = 0`.
const MIN_EXACT: usize = 8;

/// `i ∫₀^{t_n} K_ν(x, t_n - s) Σ(s) ds` with `Σ` given by `sol.sigma`.
/// At `x = 0` this uses the solver's own weights, so
/// `Fr(t_n) + duhamel_at(sol, 0, n) == sol.u[n]` up to rounding.
pub fn duhamel_at(sol: &OriginSolution, x: f64, n: usize) -> C {
    let i = C::i();
    if n == 0 {
        return C::new(0.0, 0.0);
    }
    let wts = &sol.weights;
    if x == 0.0 {
        return i * wts.convolve(&sol.sigma, n);
    }
    let dt = wts.dt;
    let nu = wts.nu;
    let c = 0.25 * x * x;
    let t = n as f64 * dt;
    let m_near = (((c * dt).sqrt() / 2.0 / dt).ceil() as usize).max(MIN_EXACT);
    // lag-node value g_m = e^{iν m dt} Σ(t_n - m dt)
    let node = |m: usize| C::from_polar(1.0, nu * m as f64 * dt) * sol.sigma[n - m];
    let mut acc = C::new(0.0, 0.0);
    let exact_range = |lo: usize, hi: usize| -> C {
        let mut s = C::new(0.0, 0.0);
        let (mut g0a, mut g1a) = fresnel_primitives(c, lo as f64 * dt);
        for m in lo..hi {
            let (ta, tb) = (m as f64 * dt, (m + 1) as f64 * dt);
            let (g0b, g1b) = fresnel_primitives(c, tb);
            let i0 = g0b - g0a;
            let i1 = g1b - g1a;
            s += node(m) * (tb * i0 - i1) / dt + node(m + 1) * (i1 - ta * i0) / dt;
            g0a = g0b;
            g1a = g1b;
        }
        s
    };
    let defect = if m_near + MIN_EXACT >= n { ZETA_DEFECT } else { MIXED_DEFECT };
    if m_near + MIN_EXACT >= n {
        acc += exact_range(0, n);
    } else {
        acc += exact_range(0, m_near);
        // far panels on [m_near dt, t - MIN_EXACT dt], then exact hats to s = 0
        let tail_start = n - MIN_EXACT;
        let (gx, gw) = gl16();
        let end = tail_start as f64 * dt;
        let mut a = m_near as f64 * dt;
        while a < end {
            let len = MAX_PANEL.min(4.0 * a * a / c).min(a).min(end - a);
            for (xg, wg) in gx.iter().zip(gw) {
                let tau = a + 0.5 * len * (xg + 1.0);
                let sig = interpolate_uniform(&sol.sigma, dt, t - tau);
                acc += sig * C::from_polar(0.5 * len * wg / tau.sqrt(), nu * tau + c / tau);
            }
            a += len;
        }
        // hats on the last MIN_EXACT intervals, integrated by GL per interval
        for m in tail_start..n {
            let lo = m as f64 * dt;
            for (xg, wg) in gx.iter().zip(gw) {
                let th = 0.5 * (xg + 1.0);
                let tau = lo + dt * th;
                let g = node(m) * (1.0 - th) + node(m + 1) * th;
                acc += g * C::from_polar(0.5 * dt * wg / tau.sqrt(), c / tau);
            }
        }
    }
    if n >= 2 {
        // the interpolants miss ∫(√s - interpolant)·K ≈ K(x, t)·defect·dt^{3/2} per unit √s coefficient
        let sqrt_coeff = (sol.sigma[0] - 2.0 * sol.sigma[1] + sol.sigma[2]) / (dt.sqrt() * (SQRT_2 - 2.0));
        acc += C::from_polar(defect * dt.powf(1.5) / t.sqrt(), nu * t + c / t) * sqrt_coeff;
    }
    i * inv_sqrt_4pii() * acc
}

/// `U(·, t_n) = e^{iν t_n} free + i ∫ K_ν(x, t_n - s) Σ(s) ds` on the grid
/// of `free`, which must hold `W(t_n)ψ₀`.
pub fn field_at(sol: &OriginSolution, free: &FieldState, n: usize) -> FieldState {
    let g = free.grid;
    let phase = C::from_polar(1.0, sol.weights.nu * n as f64 * sol.dt());
    let values = (0..g.n_points)
        .into_par_iter()
        .map(|k| phase * free.values[k] + duhamel_at(sol, g.x(k), n))
        .collect();
    FieldState { grid: g, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_kernel_integral() {
        let dt = 1e-3;
        let w = AbelWeights::new(dt, 0.0, 1000).unwrap();
        let ones = vec![C::new(1.0, 0.0); 1001];
        // ∫₀¹ (4πiτ)^{-1/2} dτ = 2 / √(4πi)
        let got = w.convolve(&ones, 1000);
        assert!((got - 2.0 * inv_sqrt_4pii()).norm() < 1e-13);
        let lin: Vec<C> = (0..=1000).map(|j| C::new(j as f64 * dt, 0.0)).collect();
        // ∫₀¹ s (1-s)^{-1/2} ds = 4/3
        let got = w.convolve(&lin, 1000);
        assert!((got - 4.0 / 3.0 * inv_sqrt_4pii()).norm() < 1e-13);
    }

    #[test]
    fn gauged_weights_match_quadrature() {
        let (dt, nu) = (2e-3, -1.3);
        let w = AbelWeights::new(dt, nu, 500).unwrap();
        let ones = vec![C::new(1.0, 0.0); 501];
        // ∫₀¹ e^{iντ} τ^{-1/2} dτ by substitution τ = v² and a fine rule
        let (gx, gw) = crate::quadrature::gauss_legendre(60);
        let want: C = gx
            .iter()
            .zip(&gw)
            .map(|(x, wt)| {
                let v = 0.5 * (x + 1.0);
                C::from_polar(*wt, nu * v * v)
            })
            .sum::<C>()
            * inv_sqrt_4pii();
        assert!((w.convolve(&ones, 500) - want).norm() < 1e-13);
    }

    #[test]
    fn start_correction_handles_square_root() {
        let (dt, nu, n) = (1e-2, -0.7, 400);
        let w = AbelWeights::new(dt, nu, n).unwrap();
        let k = inv_sqrt_4pii();
        let root: Vec<C> = (0..=n).map(|j| C::new((j as f64 * dt).sqrt(), 0.0)).collect();
        for m in [1, 2, 3, 50, 400] {
            let want = k * sqrt_moment(nu, m as f64 * dt);
            assert!((w.convolve(&root, m) - want).norm() < 1e-12, "{m}");
        }
        // ν = 0: ∫₀ᵗ (t-s)^{-1/2} √s ds = πt/2
        assert!((sqrt_moment(0.0, 3.0) - C::new(1.5 * PI, 0.0)).norm() < 1e-13);
        // s^{3/2} is left to the hats: error of order dt^{5/2}
        let err = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let w = AbelWeights::new(dt, 0.0, n).unwrap();
            let f: Vec<C> = (0..=n).map(|j| C::new((j as f64 * dt).powf(1.5), 0.0)).collect();
            // ∫₀¹ (1-s)^{-1/2} s^{3/2} ds = B(1/2, 5/2) = 3π/8
            (w.convolve(&f, n) - k * 3.0 * PI / 8.0).norm()
        };
        let order = (err(1e-2) / err(5e-3)).log2();
        assert!(order > 1.9, "{order}");
    }

    #[test]
    fn off_origin_sum_is_second_order() {
        let value = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let sigma: Vec<C> = (0..=n)
                .map(|j| {
                    let s = j as f64 * dt;
                    C::new(1.0 + s.sqrt(), s)
                })
                .collect();
            let sol = OriginSolution {
                weights: AbelWeights::new(dt, -0.5, n).unwrap(),
                u: sigma.clone(),
                sigma,
            };
            duhamel_at(&sol, 1.3, n)
        };
        let (a, b, c) = (value(1e-2), value(5e-3), value(2.5e-3));
        let order = ((a - b).norm() / (b - c).norm()).log2();
        assert!(order > 1.8, "{order}");
    }

    #[test]
    fn large_step_rejected() {
        assert!(matches!(AbelWeights::new(0.02, 0.0, 10), Err(SolwaveError::StepSize(_))));
    }

    #[test]
    fn fresnel_primitives_match_quadrature() {
        for &(c, tau) in &[(0.01, 0.3), (0.5, 0.2), (4.0, 0.05), (30.0, 0.01), (2.0, 2.0)] {
            // ∫₀^τ e^{ic/s} s^{k-1/2} ds with u = s^{-1/2}: 2∫_{τ^{-1/2}}^∞ e^{icu²} u^{-2-2k} du,
            // checked against the closed forms by differentiating in τ instead
            let e = 1e-6 * tau;
            let (a0, a1) = fresnel_primitives(c, tau + e);
            let (b0, b1) = fresnel_primitives(c, tau - e);
            let d0 = (a0 - b0) / (2.0 * e);
            let d1 = (a1 - b1) / (2.0 * e);
            let f = C::from_polar(1.0, c / tau);
            assert!((d0 - f / tau.sqrt()).norm() < 1e-6 * (1.0 + c / tau), "{c} {tau}");
            assert!((d1 - f * tau.sqrt()).norm() < 1e-6 * (1.0 + c / tau), "{c} {tau}");
        }
        // small-τ limit vanishes, large-|z| branch agrees with the direct one
        let (g0, _) = fresnel_primitives(1.0, 1e-8);
        assert!(g0.norm() < 1e-10);
        let z = C::new(5.1, 5.1);
        let direct = 1.0 + C::i() * PI.sqrt() * z * w(z);
        let (r, r2) = fresnel_remainders(z);
        assert!((r - direct).norm() < 1e-12);
        assert!((r2 - (1.0 + 2.0 * z * z * direct)).norm() < 1e-9);
    }

    #[test]
    fn real_linear_solve() {
        let (p, q) = (C::new(0.1, -0.3), C::new(-0.2, 0.05));
        let u = C::new(0.7, -1.1);
        let r = u - p * u - q * u.re;
        assert!((solve_real_linear(r, p, q) - u).norm() < 1e-14);
    }
}
