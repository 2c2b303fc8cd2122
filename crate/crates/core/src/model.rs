//! Couplings, solitary waves and their tangent frame.

use crate::error::{Result, SolwaveError};
use crate::grid::{FieldState, Grid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The radial coupling `a(s)`, with `F(ψ) = a(|ψ|²) ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NonlinearCoupling {
    /// `a(s) = Σ c_k s^k`, lowest degree first.
    Polynomial { coeffs: Vec<f64> },
    /// Natural cubic spline through `(s_k, a_k)`.
    Tabulated { s: Vec<f64>, a: Vec<f64> },
}

impl NonlinearCoupling {
    pub fn polynomial(coeffs: &[f64]) -> Self {
        NonlinearCoupling::Polynomial {
            coeffs: coeffs.to_vec(),
        }
    }

    pub fn tabulated(s: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if s.len() != a.len() || s.len() < 2 {
            return Err(SolwaveError::Domain(
                "tabulated coupling needs matching s and a columns with at least two rows".into(),
            ));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) || s[0] < 0.0 {
            return Err(SolwaveError::Domain(
                "tabulated s values must be non-negative and increasing".into(),
            ));
        }
        Ok(NonlinearCoupling::Tabulated { s, a })
    }

    /// True when `a' ≡ 0`.
    pub fn is_constant(&self) -> bool {
        match self {
            NonlinearCoupling::Polynomial { coeffs } => coeffs.iter().skip(1).all(|&c| c == 0.0),
            NonlinearCoupling::Tabulated { a, .. } => a.iter().all(|&v| v == a[0]),
        }
    }

    /// `(a(s), a'(s))`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        if !s.is_finite() || s < 0.0 {
            return Err(SolwaveError::Domain(format!(
                "coupling argument must be finite and non-negative, got {s}"
            )));
        }
        match self {
            NonlinearCoupling::Polynomial { coeffs } => {
                let mut a = 0.0;
                let mut da = 0.0;
                for &c in coeffs.iter().rev() {
                    da = da * s + a;
                    a = a * s + c;
                }
                Ok((a, da))
            }
            NonlinearCoupling::Tabulated { s: xs, a: ys } => {
                let last = *xs.last().unwrap();
                if s < xs[0] || s > last {
                    return Err(SolwaveError::Domain(format!(
                        "s = {s} outside the tabulated range [{}, {last}]",
                        xs[0]
                    )));
                }
                Ok(spline_eval(xs, ys, s))
            }
        }
    }

    pub fn a(&self, s: f64) -> Result<f64> {
        self.eval(s).map(|v| v.0)
    }

    /// `F(ψ) = a(|ψ|²) ψ`.
    pub fn force(&self, psi: Complex64) -> Result<Complex64> {
        Ok(psi * self.a(psi.norm_sqr())?)
    }

    /// `∫₀ˢ a(r) dr` by composite Simpson on 256 panels.
    pub fn antiderivative(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let n = 256;
        let h = s / n as f64;
        let mut acc = self.a(0.0)? + self.a(s)?;
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.a(k as f64 * h)?;
        }
        Ok(acc * h / 3.0)
    }

    /// Oscillator potential `u(s) = -½ ∫₀ˢ a`, normalised by `u(0) = 0`.
    pub fn potential(&self, s: f64) -> Result<f64> {
        Ok(-0.5 * self.antiderivative(s)?)
    }

    /// Whether `u(s) ≥ A - B s` for some constants, the growth condition
    /// under which global well-posedness is known. `None` for tabulated
    /// couplings, whose behaviour past the table is not known.
    pub fn potential_bounded_below(&self) -> Option<bool> {
        match self {
            NonlinearCoupling::Polynomial { coeffs } => {
                // u = -½ Σ c_k s^{k+1}/(k+1); only the top nonzero term matters beyond degree one
                match coeffs.iter().rposition(|c| *c != 0.0) {
                    None | Some(0) => Some(true),
                    Some(k) => Some(coeffs[k] < 0.0),
                }
            }
            NonlinearCoupling::Tabulated { .. } => None,
        }
    }
}

fn spline_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let diag = 2.0 * (h0 + h1);
        let rhs = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        let denom = diag - h0 * c[i - 1];
        c[i] = h1 / denom;
        d[i] = (rhs - h0 * d[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}

fn spline_eval(xs: &[f64], ys: &[f64], s: f64) -> (f64, f64) {
    let m = spline_second_derivatives(xs, ys);
    let i = match xs.iter().position(|&x| x > s) {
        Some(0) => 0,
        Some(p) => p - 1,
        None => xs.len() - 2,
    };
    let h = xs[i + 1] - xs[i];
    let t1 = (xs[i + 1] - s) / h;
    let t0 = (s - xs[i]) / h;
    let a = t1 * ys[i] + t0 * ys[i + 1] + ((t1.powi(3) - t1) * m[i] + (t0.powi(3) - t0) * m[i + 1]) * h * h / 6.0;
    let da = (ys[i + 1] - ys[i]) / h - (3.0 * t1 * t1 - 1.0) * h * m[i] / 6.0
        + (3.0 * t0 * t0 - 1.0) * h * m[i + 1] / 6.0;
    (a, da)
}

/// A point `(C, κ, ω, θ)` on the solitary manifold: `ψ(x) = C e^{-κ|x|} e^{iθ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitaryWave {
    pub c: f64,
    pub kappa: f64,
    pub omega: f64,
    pub theta: f64,
    #[serde(skip)]
    pub coupling: NonlinearCoupling,
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Outcome of solving `a(C²) = 2√ω` for `C`.
#[derive(Debug, Clone, PartialEq)]
pub enum OmegaRoots {
    Roots(Vec<SolitaryWave>),
    /// `a' ≡ 0`: every amplitude (or none) gives this frequency.
    Degenerate,
}

/// Stability class read off from `a'(C²)` against the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectralCondition {
    StableI,
    OscillatoryModesII,
    DegenerateIII,
    UnstableIV,
    ZeroPrime,
}

/// Relative tolerance for the `a' = a/C²` boundary.
pub const THRESHOLD_TOL: f64 = 1e-10;

pub fn coupling_eval(coupling: &NonlinearCoupling, s: f64) -> Result<(f64, f64)> {
    coupling.eval(s)
}

pub fn solitary_from_c(coupling: &NonlinearCoupling, c: f64, theta: f64) -> Result<SolitaryWave> {
    if !(c.is_finite() && c > 0.0) {
        return Err(SolwaveError::Domain(format!("amplitude must be positive, got {c}")));
    }
    let (a, a_prime) = coupling.eval(c * c)?;
    if !(a > 0.0) {
        return Err(SolwaveError::NoSolitaryWave { c, a });
    }
    let kappa = a / 2.0;
    let b = 2.0 * a_prime * c * c;
    Ok(SolitaryWave {
        c,
        kappa,
        omega: kappa * kappa,
        theta,
        coupling: coupling.clone(),
        a,
        a_prime,
        b,
        alpha: a + b / 2.0,
        beta: b / 2.0,
    })
}

pub fn solitary_from_omega(
    coupling: &NonlinearCoupling,
    omega: f64,
    bracket: (f64, f64),
    theta: f64,
) -> Result<OmegaRoots> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(SolwaveError::Precondition(format!("ω must be positive, got {omega}")));
    }
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(SolwaveError::Precondition(format!(
            "bracket must satisfy 0 < C_min < C_max, got ({lo}, {hi})"
        )));
    }
    if coupling.is_constant() {
        return Ok(OmegaRoots::Degenerate);
    }
    let target = 2.0 * omega.sqrt();
    let g = |c: f64| -> Result<f64> { Ok(coupling.a(c * c)? - target) };
    let n = 1024;
    let step = (hi - lo) / (n - 1) as f64;
    let lattice: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
    let vals: Vec<f64> = lattice.iter().map(|&c| g(c)).collect::<Result<_>>()?;
    let mut roots: Vec<f64> = Vec::new();
    for k in 0..n {
        if vals[k] == 0.0 {
            roots.push(lattice[k]);
        } else if k + 1 < n && vals[k + 1] != 0.0 && vals[k].signum() != vals[k + 1].signum() {
            roots.push(bisect(&g, lattice[k], lattice[k + 1])?);
        }
    }
    let mut waves = Vec::new();
    for c in roots {
        let c = newton_polish(coupling, c, target)?;
        let w = solitary_from_c(coupling, c, theta)?;
        if waves.last().map_or(true, |p: &SolitaryWave| (p.c - w.c).abs() > 1e-12 * w.c) {
            waves.push(w);
        }
    }
    Ok(OmegaRoots::Roots(waves))
}

fn bisect(g: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let mut ga = g(a)?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn newton_polish(coupling: &NonlinearCoupling, mut c: f64, target: f64) -> Result<f64> {
    for _ in 0..8 {
        let (a, da) = coupling.eval(c * c)?;
        let slope = 2.0 * c * da;
        if slope == 0.0 {
            break;
        }
        let next = c - (a - target) / slope;
        if !(next > 0.0) || (next - c).abs() > 0.01 * c {
            break;
        }
        let done = (next - c).abs() <= 1e-16 * c;
        c = next;
        if done {
            break;
        }
    }
    Ok(c)
}

impl SolitaryWave {
    /// Profile `C e^{-κ|x|}` (without the phase).
    pub fn profile(&self, x: f64) -> f64 {
        self.c * (-self.kappa * x.abs()).exp()
    }

    /// `ω'(C) = a a' C`.
    pub fn omega_prime(&self) -> f64 {
        self.a * self.a_prime * self.c
    }

    /// `dC/dω`.
    pub fn dc_domega(&self) -> Result<f64> {
        if self.a_prime == 0.0 {
            return Err(SolwaveError::DegenerateParametrization);
        }
        Ok(1.0 / self.omega_prime())
    }

    /// `∂_ω ψ_ω(x)`.
    pub fn d_omega_profile(&self, x: f64) -> Result<f64> {
        let dc = self.dc_domega()?;
        let dk = 1.0 / (2.0 * self.kappa);
        Ok((dc - self.c * x.abs() * dk) * (-self.kappa * x.abs()).exp())
    }

    /// The wave on the same branch at a nearby frequency, by Newton on `C`.
    pub fn at_omega(&self, omega: f64) -> Result<SolitaryWave> {
        if !(omega > 0.0) {
            return Err(SolwaveError::Domain(format!("ω must be positive, got {omega}")));
        }
        if self.a_prime == 0.0 {
            return Err(SolwaveError::DegenerateParametrization);
        }
        let target = 2.0 * omega.sqrt();
        let mut c = self.c;
        for _ in 0..60 {
            let (a, da) = self.coupling.eval(c * c)?;
            let slope = 2.0 * c * da;
            if slope == 0.0 {
                return Err(SolwaveError::DegenerateParametrization);
            }
            let step = (a - target) / slope;
            let mut next = c - step;
            if !(next > 0.0) {
                next = 0.5 * c;
            }
            let done = (next - c).abs() <= 4.0 * f64::EPSILON * c;
            c = next;
            if done {
                break;
            }
        }
        let mut w = solitary_from_c(&self.coupling, c, self.theta)?;
        // pin κ, ω to the requested frequency; C carries the residual
        w.kappa = omega.sqrt();
        w.omega = omega;
        Ok(w)
    }

    pub fn with_theta(&self, theta: f64) -> SolitaryWave {
        SolitaryWave { theta, ..self.clone() }
    }

    /// `ψ_ω e^{iθ}` on a grid.
    pub fn field(&self, grid: Grid) -> FieldState {
        let ph = Complex64::from_polar(1.0, self.theta);
        FieldState::from_fn(grid, |x| ph * self.profile(x))
    }

    /// Relative residual of the jump condition `-2κC + a(C²)C`.
    pub fn jump_residual(&self) -> f64 {
        (-2.0 * self.kappa * self.c + self.a * self.c).abs() / (self.a * self.c)
    }

    pub fn thresholds(&self) -> (f64, f64) {
        let c2 = self.c * self.c;
        (self.a / (std::f64::consts::SQRT_2 * c2), self.a / c2)
    }

    /// `|a' - a/C²| ≤ tol · a/C²`.
    pub fn is_threshold_degenerate(&self) -> bool {
        let (_, t2) = self.thresholds();
        (self.a_prime - t2).abs() <= THRESHOLD_TOL * t2
    }
}

pub fn mu_omega(wave: &SolitaryWave) -> Result<f64> {
    if wave.a_prime == 0.0 {
        return Err(SolwaveError::DegenerateParametrization);
    }
    if wave.is_threshold_degenerate() {
        return Err(SolwaveError::ZeroMu);
    }
    let c2 = wave.c * wave.c;
    let n_prime = 2.0 * wave.c / wave.kappa * (1.0 - wave.a_prime * c2 / wave.a);
    Ok(0.5 * n_prime / wave.omega_prime())
}

/// `T0 = jΦ = (0, ψ_ω)` and `T1 = ∂_ωΦ = (∂_ωψ_ω, 0)`.
pub fn tangent_frame(wave: &SolitaryWave, grid: Grid) -> Result<(FieldState, FieldState)> {
    wave.dc_domega()?;
    let t0 = FieldState::from_pair(grid, |_| 0.0, |x| wave.profile(x));
    let t1 = FieldState::from_pair(grid, |x| wave.d_omega_profile(x).unwrap_or(0.0), |_| 0.0);
    Ok((t0, t1))
}

pub fn check_spectral_condition(wave: &SolitaryWave) -> SpectralCondition {
    let (t1, t2) = wave.thresholds();
    if wave.a_prime == 0.0 {
        SpectralCondition::ZeroPrime
    } else if wave.is_threshold_degenerate() {
        SpectralCondition::DegenerateIII
    } else if wave.a_prime > t2 {
        SpectralCondition::UnstableIV
    } else if wave.a_prime >= t1 * (1.0 - THRESHOLD_TOL) {
        SpectralCondition::OscillatoryModesII
    } else {
        SpectralCondition::StableI
    }
}
