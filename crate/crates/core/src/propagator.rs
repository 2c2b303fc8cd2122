//! The free Schrödinger group `W(t) = e^{i t ∂ₓₓ}`.
//!
//! Initial data built from exponential cusps, Gaussians and odd bumps is
//! propagated in closed form ([`Profile`]); arbitrary grid fields go through
//! a zero-padded discrete Fourier transform or direct kernel quadrature.

use crate::error::{Result, SolwaveError};
use crate::faddeeva::{w_prime_scaled, w_scaled};
use crate::grid::{FieldState, Grid};
use crate::model::SolitaryWave;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Shapes with a closed-form free evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `e^{-κ|x|}`
    Cusp { kappa: f64 },
    /// `|x| e^{-κ|x|}`
    CuspLinear { kappa: f64 },
    /// `e^{-(x-x₀)²/w²}`
    Gaussian { center: f64, width: f64 },
    /// `x e^{-x²/w²}`
    OddBump { width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTerm {
    pub coeff: Complex64,
    pub shape: Shape,
}

/// A finite sum of complex multiples of [`Shape`]s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile {
    pub terms: Vec<ProfileTerm>,
}

fn e34() -> Complex64 {
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2)
}

fn e14() -> Complex64 {
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
}

impl Shape {
    /// Initial value at `x`.
    pub fn initial(&self, x: f64) -> f64 {
        match *self {
            Shape::Cusp { kappa } => (-kappa * x.abs()).exp(),
            Shape::CuspLinear { kappa } => x.abs() * (-kappa * x.abs()).exp(),
            Shape::Gaussian { center, width } => (-((x - center) / width).powi(2)).exp(),
            Shape::OddBump { width } => x * (-(x / width).powi(2)).exp(),
        }
    }

    /// `(W(t) shape)(x)` for `t > 0`.
    fn forward(&self, x: f64, t: f64) -> Complex64 {
        let i = Complex64::i();
        match *self {
            Shape::Cusp { kappa } | Shape::CuspLinear { kappa } => {
                let rt = t.sqrt();
                let phase = i * (x * x / (4.0 * t));
                let a = kappa * rt * e34();
                let s = x * e14() / (2.0 * rt);
                if matches!(self, Shape::Cusp { .. }) {
                    0.5 * (w_scaled(a + s, phase) + w_scaled(a - s, phase))
                } else {
                    // |x|e^{-κ|x|} = -∂_κ e^{-κ|x|}
                    -0.5 * rt * e34() * (w_prime_scaled(a + s, phase) + w_prime_scaled(a - s, phase))
                }
            }
            Shape::Gaussian { center, width } => {
                let w2 = width * width;
                let q = Complex64::new(w2, 4.0 * t);
                let y = x - center;
                (Complex64::new(1.0, 4.0 * t / w2)).sqrt().inv() * (-(y * y) / q).exp()
            }
            Shape::OddBump { width } => {
                let w2 = width * width;
                let q = Complex64::new(w2, 4.0 * t);
                let f = Complex64::new(1.0, 4.0 * t / w2);
                x * (f * f.sqrt()).inv() * (-(x * x) / q).exp()
            }
        }
    }

    /// `(W(t) shape)(x)` for any real `t`; real shapes satisfy
    /// `W(-t) f = conj(W(t) f)`.
    pub fn evolve(&self, x: f64, t: f64) -> Complex64 {
        if t == 0.0 {
            Complex64::new(self.initial(x), 0.0)
        } else if t > 0.0 {
            self.forward(x, t)
        } else {
            self.forward(x, -t).conj()
        }
    }
}

impl Profile {
    pub fn new() -> Self {
        Profile { terms: Vec::new() }
    }

    pub fn term(coeff: Complex64, shape: Shape) -> Self {
        Profile {
            terms: vec![ProfileTerm { coeff, shape }],
        }
    }

    pub fn plus(mut self, coeff: Complex64, shape: Shape) -> Self {
        self.terms.push(ProfileTerm { coeff, shape });
        self
    }

    pub fn add(&self, other: &Profile) -> Profile {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Profile { terms }
    }

    pub fn scale(&self, c: Complex64) -> Profile {
        Profile {
            terms: self
                .terms
                .iter()
                .map(|t| ProfileTerm {
                    coeff: t.coeff * c,
                    shape: t.shape,
                })
                .collect(),
        }
    }

    /// `e^{iθ} ψ_ω` of a solitary wave.
    pub fn solitary(wave: &SolitaryWave) -> Profile {
        Profile::term(
            Complex64::from_polar(wave.c, wave.theta),
            Shape::Cusp { kappa: wave.kappa },
        )
    }

    /// `T0 = iψ_ω` and `T1 = ∂_ωψ_ω` as profiles.
    pub fn tangent_frame(wave: &SolitaryWave) -> Result<(Profile, Profile)> {
        let dc = wave.dc_domega()?;
        let k = wave.kappa;
        let t0 = Profile::term(Complex64::new(0.0, wave.c), Shape::Cusp { kappa: k });
        let t1 = Profile::term(Complex64::new(dc, 0.0), Shape::Cusp { kappa: k }).plus(
            Complex64::new(-wave.c / (2.0 * k), 0.0),
            Shape::CuspLinear { kappa: k },
        );
        Ok((t0, t1))
    }

    pub fn value(&self, x: f64, t: f64) -> Complex64 {
        self.terms.iter().map(|p| p.coeff * p.shape.evolve(x, t)).sum()
    }

    pub fn at_origin(&self, t: f64) -> Complex64 {
        self.value(0.0, t)
    }

    /// `W(t)ψ₀` sampled on a grid.
    pub fn sample(&self, grid: Grid, t: f64) -> FieldState {
        FieldState::from_fn(grid, |x| self.value(x, t))
    }
}

/// How [`free_propagate`] evaluates `W(t)` on a grid field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeMode {
    /// Fourier multiplier `e^{-ik²t}` on a zero-padded periodic extension.
    Fourier,
    /// Quadrature against `e^{i(x-y)²/4t}/√(4πit)`.
    Kernel,
}

/// Minimum zero-padding factor of the Fourier mode.
pub const PADDING: usize = 4;

pub fn free_propagate(psi0: &FieldState, t: f64) -> Result<FieldState> {
    free_propagate_with(psi0, t, FreeMode::Fourier)
}

pub fn free_propagate_with(psi0: &FieldState, t: f64, mode: FreeMode) -> Result<FieldState> {
    match mode {
        FreeMode::Fourier => Ok(fourier(psi0, t)),
        FreeMode::Kernel => kernel_quadrature(psi0, t),
    }
}

fn fourier(psi0: &FieldState, t: f64) -> FieldState {
    let g = psi0.grid;
    let n = g.n_points;
    let m = (PADDING * n).next_power_of_two();
    let h = g.h();
    let c = g.center();
    // periodic layout with the origin at index 0
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (k, v) in psi0.values.iter().enumerate() {
        let idx = (k as isize - c as isize).rem_euclid(m as isize) as usize;
        buf[idx] = *v;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let peak = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let nyquist = buf[m / 2].norm().max(buf[m / 2 - 1].norm());
    if peak > 0.0 && nyquist > 1e-10 * peak {
        log::warn!("free propagation: spectrum at Nyquist is {:e} of its peak, aliasing likely", nyquist / peak);
    }
    let dk = 2.0 * PI / (m as f64 * h);
    for (j, v) in buf.iter_mut().enumerate() {
        let kj = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 } * dk;
        *v *= Complex64::from_polar(1.0 / m as f64, -kj * kj * t);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let values = (0..n)
        .map(|k| buf[(k as isize - c as isize).rem_euclid(m as isize) as usize])
        .collect();
    FieldState { grid: g, values }
}

fn kernel_quadrature(psi0: &FieldState, t: f64) -> Result<FieldState> {
    if t == 0.0 {
        return Err(SolwaveError::Precondition(
            "kernel mode of the free propagator needs t ≠ 0".into(),
        ));
    }
    let g = psi0.grid;
    let wts = g.weights();
    let nodes = g.nodes();
    let pref = (Complex64::new(0.0, 4.0 * PI * t)).sqrt().inv();
    let total = psi0.max_norm();
    let reach = nodes
        .iter()
        .zip(&psi0.values)
        .filter(|(_, v)| v.norm() > 1e-12 * total)
        .map(|(y, _)| y.abs())
        .fold(0.0, f64::max);
    // local frequency of the kernel in y must stay below the grid's Nyquist
    if (g.half_length + reach) / (2.0 * t.abs()) > 0.5 * PI / g.h() {
        log::warn!("kernel quadrature at t = {t} does not resolve the kernel's oscillation near the walls");
    }
    let src: Vec<(f64, Complex64)> = nodes
        .iter()
        .zip(&psi0.values)
        .zip(&wts)
        .filter(|((_, v), _)| v.norm() > 0.0)
        .map(|((y, v), w)| (*y, v * *w))
        .collect();
    let values = nodes
        .iter()
        .map(|&x| {
            let s: Complex64 = src
                .iter()
                .map(|(y, v)| v * Complex64::from_polar(1.0, (x - y) * (x - y) / (4.0 * t)))
                .sum();
            pref * s
        })
        .collect();
    Ok(FieldState { grid: g, values })
}

/// Initial data for an evolution: a closed-form profile or a grid field.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Profile(Profile),
    Field(FieldState),
}

impl InitialData {
    pub fn at_origin(&self) -> Complex64 {
        match self {
            InitialData::Profile(p) => p.at_origin(0.0),
            InitialData::Field(f) => f.at_origin(),
        }
    }

    /// `(W(t_n)ψ₀)(0)` for `t_n = n·dt`, `n = 0..=n_steps`.
    pub fn free_at_origin(&self, dt: f64, n_steps: usize) -> Vec<Complex64> {
        match self {
            InitialData::Profile(p) => (0..=n_steps).map(|n| p.at_origin(n as f64 * dt)).collect(),
            InitialData::Field(f) => origin_series(f, dt, n_steps),
        }
    }

    /// `W(t)ψ₀` on `grid`. Grid fields can only be propagated on their own grid.
    pub fn free_field(&self, grid: Grid, t: f64) -> Result<FieldState> {
        match self {
            InitialData::Profile(p) => Ok(p.sample(grid, t)),
            InitialData::Field(f) if f.grid == grid => free_propagate(f, t),
            InitialData::Field(_) => Err(SolwaveError::GridMismatch),
        }
    }

    pub fn sample(&self, grid: Grid) -> Result<FieldState> {
        self.free_field(grid, 0.0)
    }

    pub fn scale(&self, c: Complex64) -> InitialData {
        match self {
            InitialData::Profile(p) => InitialData::Profile(p.scale(c)),
            InitialData::Field(f) => InitialData::Field(f.scale(c)),
        }
    }
}

/// Origin values of the Fourier-mode free flow at equally spaced times,
/// advancing each mode's phase by a fixed rotation per step.
fn origin_series(psi0: &FieldState, dt: f64, n_steps: usize) -> Vec<Complex64> {
    let g = psi0.grid;
    let n = g.n_points;
    let m = (PADDING * n).next_power_of_two();
    let c = g.center();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (k, v) in psi0.values.iter().enumerate() {
        buf[(k as isize - c as isize).rem_euclid(m as isize) as usize] = *v;
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dk = 2.0 * PI / (m as f64 * g.h());
    let mut modes: Vec<Complex64> = buf.iter().map(|v| v / m as f64).collect();
    let rot: Vec<Complex64> = (0..m)
        .map(|j| {
            let kj = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 } * dk;
            Complex64::from_polar(1.0, -kj * kj * dt)
        })
        .collect();
    let mut out = Vec::with_capacity(n_steps + 1);
    for _ in 0..=n_steps {
        out.push(modes.iter().sum());
        for (a, r) in modes.iter_mut().zip(&rot) {
            *a *= r;
        }
    }
    out
}
