//! Modulation parameters `(ω(t), θ(t))` of a trajectory near the solitary
//! manifold, the modulation equations and the majorant.
//!
//! A field is split as `ψ = e^{iθ}(Φ_ω + χ)` with `χ` symplectically
//! orthogonal to the tangent frame at `ω`:
//! `Ω(χ, T₀(ω)) = 0 = Ω(χ, T₁(ω))`.

use crate::diagnostics::{decay_exponent, weighted_norm, DecayFit, NormKind};
use crate::error::{Result, SolwaveError};
use crate::evolve::{InitialData, Trajectory};
use crate::grid::{FieldState, Grid};
use crate::linops::{Distribution, Projector};
use crate::model::SolitaryWave;
use crate::propagator::free_propagate;
use num_complex::Complex64 as C;
use serde::Serialize;

/// Newton iteration cap of [`extract_parameters`].
pub const MAX_NEWTON: usize = 50;
/// Scaled residual at which [`extract_parameters`] stops.
pub const NEWTON_TOL: f64 = 1e-12;
/// Largest admissible `‖χ‖_{L∞₋₂}` relative to the amplitude `C`.
pub const MANIFOLD_RADIUS: f64 = 0.3;
/// Step of the centred difference of `P⁰` in `ω`.
pub const PROJECTOR_STEP: f64 = 1e-5;

/// Result of [`extract_parameters`].
#[derive(Debug, Clone)]
pub struct Extraction {
    pub omega: f64,
    pub theta: f64,
    /// The wave at `ω` with phase `θ`.
    pub wave: SolitaryWave,
    /// `χ = e^{-iθ}ψ - Φ_ω`.
    pub chi: FieldState,
    pub iterations: usize,
    /// `|Ω(χ, Tᵢ)| / (‖ψ‖ ‖Tᵢ‖)`, `i = 0, 1`.
    pub residuals: [f64; 2],
}

struct Frame {
    phi: Vec<f64>,
    t1: Vec<f64>,
    dt1: Vec<f64>,
}

fn frame(wave: &SolitaryWave, grid: Grid) -> Result<Frame> {
    let xs = grid.nodes();
    let phi = xs.iter().map(|&x| wave.profile(x)).collect();
    let t1 = xs.iter().map(|&x| wave.d_omega_profile(x)).collect::<Result<Vec<_>>>()?;
    let h = 1e-4 * wave.omega;
    let (up, down) = (wave.at_omega(wave.omega + h)?, wave.at_omega(wave.omega - h)?);
    let dt1 = xs
        .iter()
        .map(|&x| Ok((up.d_omega_profile(x)? - down.d_omega_profile(x)?) / (2.0 * h)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Frame { phi, t1, dt1 })
}

fn integral(grid: Grid, f: impl Fn(usize) -> f64) -> f64 {
    let v: Vec<f64> = (0..grid.n_points).map(f).collect();
    grid.integrate(&v)
}

fn l2(grid: Grid, v: &[f64]) -> f64 {
    integral(grid, |k| v[k] * v[k]).sqrt()
}

/// Solves `Ω(e^{-iθ}ψ - Φ_ω, T₀(ω)) = 0 = Ω(e^{-iθ}ψ - Φ_ω, T₁(ω))` for
/// `(ω, θ)` by Newton's method from `guess`. `branch` selects the coupling
/// and the branch of the amplitude map `ω ↦ C`. The first step uses the
/// diagonal Jacobian `diag(-μ, μ)` of the exact soliton; later steps the
/// full one.
pub fn extract_parameters(psi: &FieldState, branch: &SolitaryWave, guess: (f64, f64)) -> Result<Extraction> {
    let grid = psi.grid;
    let (mut omega, mut theta) = guess;
    let psi_norm = psi.l2_norm();
    let mut last = [f64::INFINITY; 2];
    for it in 0..=MAX_NEWTON {
        let wave = branch.at_omega(omega)?.with_theta(theta);
        let f = frame(&wave, grid)?;
        let rot = C::from_polar(1.0, -theta);
        let rho: Vec<C> = psi.values.iter().map(|v| rot * v).collect();
        // Ω(χ, T₀) = ∫ Re χ Φ and Ω(χ, T₁) = -∫ Im χ T₁
        let g0 = integral(grid, |k| (rho[k].re - f.phi[k]) * f.phi[k]);
        let g1 = -integral(grid, |k| rho[k].im * f.t1[k]);
        let scale0 = psi_norm * l2(grid, &f.phi);
        let scale1 = psi_norm * l2(grid, &f.t1);
        let res = [g0.abs() / scale0, g1.abs() / scale1];
        let converged = res[0] <= NEWTON_TOL && res[1] <= NEWTON_TOL;
        // past the tolerance, keep polishing only while it pays
        let stalled = res[0].max(res[1]) >= 0.5 * last[0].max(last[1]);
        if converged && (stalled || res[0].max(res[1]) <= 1e-15) {
            return finish(psi, wave, it, res);
        }
        if it == MAX_NEWTON {
            break;
        }
        if stalled && last[0].max(last[1]) <= NEWTON_TOL {
            let w = branch.at_omega(omega)?.with_theta(theta);
            return finish(psi, w, it, res);
        }
        last = res;
        let mu = integral(grid, |k| f.phi[k] * f.t1[k]);
        let (j00, j01, j10, j11) = if it == 0 {
            (-mu, 0.0, 0.0, mu)
        } else {
            (
                integral(grid, |k| (rho[k].re - 2.0 * f.phi[k]) * f.t1[k]),
                integral(grid, |k| rho[k].im * f.phi[k]),
                -integral(grid, |k| rho[k].im * f.dt1[k]),
                integral(grid, |k| rho[k].re * f.t1[k]),
            )
        };
        let det = j00 * j11 - j01 * j10;
        if det == 0.0 || !det.is_finite() {
            return Err(SolwaveError::ZeroMu);
        }
        let mut d_omega = -(j11 * g0 - j01 * g1) / det;
        let d_theta = -(j00 * g1 - j10 * g0) / det;
        if d_omega.abs() > 0.5 * omega {
            d_omega = 0.5 * omega * d_omega.signum();
        }
        omega += d_omega;
        theta += d_theta;
        if !(omega.is_finite() && theta.is_finite()) {
            break;
        }
    }
    Err(SolwaveError::NewtonNonConvergence {
        iterations: MAX_NEWTON,
        residual: last[0].max(last[1]),
    })
}

fn finish(psi: &FieldState, wave: SolitaryWave, iterations: usize, residuals: [f64; 2]) -> Result<Extraction> {
    let rot = C::from_polar(1.0, -wave.theta);
    let chi = FieldState::new(
        psi.grid,
        psi.grid
            .nodes()
            .iter()
            .zip(&psi.values)
            .map(|(&x, v)| rot * v - wave.profile(x))
            .collect(),
    )?;
    let distance = weighted_norm(&chi, NormKind::Inf, -2.0);
    let limit = MANIFOLD_RADIUS * wave.c;
    if distance > limit {
        return Err(SolwaveError::FarFromManifold { distance, limit });
    }
    Ok(Extraction {
        omega: wave.omega,
        theta: wave.theta,
        wave,
        chi,
        iterations,
        residuals,
    })
}

/// Right-hand sides of the modulation equations at `(χ, ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulationRates {
    pub dot_omega: f64,
    pub dot_gamma: f64,
    /// `⟨∂_ωΦ - ∂_ωP⁰χ, Φ + χ⟩`.
    pub denominator: f64,
    /// `(|γ̇| + |ω̇|) / |χ(0)|²`, zero when `χ(0) = 0`.
    pub remainder_constant: f64,
}

/// `ω̇ = ⟨P⁰Q, Ψ⟩ / ⟨D, Ψ⟩` and `γ̇ = ⟨jP⁰D, P⁰Q⟩ / ⟨D, Ψ⟩`, where
/// `Ψ = Φ_ω + χ`, `D = ∂_ωΦ_ω - ∂_ωP⁰χ` and `Q = iδ(x)N` carries the
/// nonlinear remainder `N = F(Φ + χ) - F(Φ) - F'(Φ)χ` at the origin.
/// `χ` is taken in the frame of the wave (phase removed).
pub fn modulation_rhs(chi: &FieldState, wave: &SolitaryWave) -> Result<ModulationRates> {
    let grid = chi.grid;
    let proj = Projector::new(wave, grid)?;
    let phi = FieldState::from_fn(grid, |x| C::new(wave.profile(x), 0.0));
    let psi = phi.add(chi)?;

    let c0 = chi.at_origin();
    let base = C::new(wave.c, 0.0);
    let cpl = &wave.coupling;
    let remainder = cpl.force(base + c0)? - cpl.force(base)? - (wave.a * c0 + wave.b * c0.re);
    let q = Distribution::delta(grid, C::i() * remainder);
    let pq = proj.project(&q)?.tangential;

    let h = PROJECTOR_STEP * wave.omega;
    let up = Projector::new(&wave.at_omega(wave.omega + h)?, grid)?;
    let down = Projector::new(&wave.at_omega(wave.omega - h)?, grid)?;
    let chi_d = Distribution::regular(chi.clone());
    let dp = up
        .project(&chi_d)?
        .tangential
        .sub(&down.project(&chi_d)?.tangential)?
        .scale_real(0.5 / h);
    let d = proj.t1.sub(&dp)?;

    let denominator = d.inner(&psi)?;
    let threshold = 0.1 * proj.mu.abs();
    if !(denominator.abs() > threshold) {
        return Err(SolwaveError::SmallDenominator {
            value: denominator,
            threshold,
        });
    }
    let dot_omega = pq.inner(&psi)? / denominator;
    let jpd = proj.project(&Distribution::regular(d))?.tangential.rotate_j();
    let dot_gamma = jpd.inner(&pq)? / denominator;
    let s = c0.norm_sqr();
    Ok(ModulationRates {
        dot_omega,
        dot_gamma,
        denominator,
        remainder_constant: if s > 0.0 { (dot_omega.abs() + dot_gamma.abs()) / s } else { 0.0 },
    })
}

/// `(ω̇, γ̇)` from differentiating the orthogonality conditions in time: the
/// 2×2 system
/// `[-μ + ∫Re χ T₁, ∫Im χ Φ; -∫Im χ ∂_ωT₁, μ + ∫Re χ T₁]·(ω̇, γ̇) = (C Im N, T₁(0) Re N)`.
pub fn modulation_rhs_direct(chi: &FieldState, wave: &SolitaryWave) -> Result<(f64, f64)> {
    let grid = chi.grid;
    let f = frame(wave, grid)?;
    let c0 = chi.at_origin();
    let base = C::new(wave.c, 0.0);
    let cpl = &wave.coupling;
    let n = cpl.force(base + c0)? - cpl.force(base)? - (wave.a * c0 + wave.b * c0.re);
    let v = &chi.values;
    let mu = integral(grid, |k| f.phi[k] * f.t1[k]);
    let rt = integral(grid, |k| v[k].re * f.t1[k]);
    let m = [
        [-mu + rt, integral(grid, |k| v[k].im * f.phi[k])],
        [-integral(grid, |k| v[k].im * f.dt1[k]), mu + rt],
    ];
    let r = [wave.c * n.im, wave.d_omega_profile(0.0)? * n.re];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Ok(((r[0] * m[1][1] - m[0][1] * r[1]) / det, (m[0][0] * r[1] - m[1][0] * r[0]) / det))
}

/// Modulation parameters along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct ModulationTrace {
    pub times: Vec<f64>,
    pub omega: Vec<f64>,
    /// Continuous (unwrapped) phase.
    pub theta: Vec<f64>,
    /// `θ(t) - ∫₀ᵗ ω`.
    pub gamma: Vec<f64>,
    /// `‖χ(t)‖_{L∞₋β}`.
    pub norm_chi: Vec<f64>,
    pub beta: f64,
    /// Finite-difference rates of the extracted series.
    pub dot_omega: Vec<f64>,
    pub dot_gamma: Vec<f64>,
    /// The modulation equations evaluated along the extracted path.
    pub rhs_omega: Vec<f64>,
    pub rhs_gamma: Vec<f64>,
    /// Largest scaled orthogonality residual at each time.
    pub orthogonality: Vec<f64>,
    #[serde(skip)]
    pub chi: Vec<FieldState>,
    #[serde(skip)]
    pub waves: Vec<SolitaryWave>,
}

/// Derivative of uniformly sampled data: five-point centred stencil inside,
/// five-point one-sided stencils at the two first and last samples.
pub fn fourth_order_rate(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 5 {
        return Err(SolwaveError::TooFewPoints(n));
    }
    let f = values;
    let fwd = |k: usize| (-25.0 * f[k] + 48.0 * f[k + 1] - 36.0 * f[k + 2] + 16.0 * f[k + 3] - 3.0 * f[k + 4]) / (12.0 * h);
    let bwd = |k: usize| (25.0 * f[k] - 48.0 * f[k - 1] + 36.0 * f[k - 2] - 16.0 * f[k - 3] + 3.0 * f[k - 4]) / (12.0 * h);
    Ok((0..n)
        .map(|k| {
            if k < 2 {
                fwd(k)
            } else if k + 2 >= n {
                bwd(k)
            } else {
                (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h)
            }
        })
        .collect())
}

impl ModulationTrace {
    /// Extracts parameters from fields at uniformly spaced `times`, seeding
    /// each Newton solve with the previous result.
    pub fn from_fields(
        times: &[f64],
        fields: &[FieldState],
        branch: &SolitaryWave,
        guess: (f64, f64),
        beta: f64,
    ) -> Result<ModulationTrace> {
        if times.len() != fields.len() {
            return Err(SolwaveError::Precondition("one field per time is required".into()));
        }
        if times.len() < 5 {
            return Err(SolwaveError::TooFewPoints(times.len()));
        }
        let h = times[1] - times[0];
        if times.windows(2).any(|p| ((p[1] - p[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) || !(h > 0.0) {
            return Err(SolwaveError::Precondition("extraction times must be uniformly spaced".into()));
        }
        let mut seed = guess;
        let mut prev_t = times[0];
        let mut out = ModulationTrace {
            times: times.to_vec(),
            omega: Vec::new(),
            theta: Vec::new(),
            gamma: Vec::new(),
            norm_chi: Vec::new(),
            beta,
            dot_omega: Vec::new(),
            dot_gamma: Vec::new(),
            rhs_omega: Vec::new(),
            rhs_gamma: Vec::new(),
            orthogonality: Vec::new(),
            chi: Vec::new(),
            waves: Vec::new(),
        };
        for (&t, field) in times.iter().zip(fields) {
            // advance the phase guess with the current frequency
            let predicted = (seed.0, seed.1 + seed.0 * (t - prev_t));
            let ex = extract_parameters(field, branch, predicted)?;
            // keep θ continuous
            let turns = ((predicted.1 - ex.theta) / std::f64::consts::TAU).round();
            let theta = ex.theta + turns * std::f64::consts::TAU;
            let rates = modulation_rhs(&ex.chi, &ex.wave)?;
            out.omega.push(ex.omega);
            out.theta.push(theta);
            out.norm_chi.push(weighted_norm(&ex.chi, NormKind::Inf, -beta));
            out.rhs_omega.push(rates.dot_omega);
            out.rhs_gamma.push(rates.dot_gamma);
            out.orthogonality.push(ex.residuals[0].max(ex.residuals[1]));
            out.chi.push(ex.chi);
            out.waves.push(ex.wave);
            seed = (ex.omega, theta);
            prev_t = t;
        }
        // γ = θ - ∫ω, with the integral by the trapezoid rule
        let mut acc = 0.0;
        for k in 0..times.len() {
            if k > 0 {
                acc += 0.5 * h * (out.omega[k] + out.omega[k - 1]);
            }
            out.gamma.push(out.theta[k] - out.theta[0] - acc + out.theta[0]);
        }
        out.dot_omega = fourth_order_rate(&out.omega, h)?;
        let dtheta = fourth_order_rate(&out.theta, h)?;
        out.dot_gamma = dtheta.iter().zip(&out.omega).map(|(d, w)| d - w).collect();
        Ok(out)
    }

    /// Reconstructs the fields of a Volterra trajectory on `grid` at
    /// `times` and extracts parameters from them.
    pub fn from_trajectory(
        traj: &Trajectory,
        psi0: &InitialData,
        grid: Grid,
        times: &[f64],
        branch: &SolitaryWave,
        beta: f64,
    ) -> Result<ModulationTrace> {
        let fields = times
            .iter()
            .map(|&t| traj.field_at(psi0, grid, t))
            .collect::<Result<Vec<_>>>()?;
        let guess = (branch.omega, branch.theta);
        ModulationTrace::from_fields(times, &fields, branch, guess, beta)
    }

    /// Total variation of `ω` over the times inside `window`.
    pub fn omega_variation(&self, window: (f64, f64)) -> f64 {
        let idx: Vec<usize> = (0..self.times.len())
            .filter(|&k| self.times[k] >= window.0 && self.times[k] <= window.1)
            .collect();
        idx.windows(2).map(|p| (self.omega[p[1]] - self.omega[p[0]]).abs()).sum()
    }
}

/// `M(T) = sup_{t ≤ T} [(1+t)^{3/2} ‖χ(t)‖_{L∞₋β} + (1+t)³ (|γ̇| + |ω̇|)]`.
#[derive(Debug, Clone, Serialize)]
pub struct Majorant {
    pub times: Vec<f64>,
    pub chi_term: Vec<f64>,
    pub rate_term: Vec<f64>,
    /// `M(T)` at each trace time.
    pub running: Vec<f64>,
    pub sup: f64,
}

impl Majorant {
    /// `ln M(T₂) - ln M(T₁)` over `ln(1+T₂) - ln(1+T₁)`, from the trace
    /// times nearest to the window ends. Zero when `M` vanishes.
    pub fn log_slope(&self, window: (f64, f64)) -> Result<f64> {
        let a = self.running[nearest(&self.times, window.0)?];
        let b = self.running[nearest(&self.times, window.1)?];
        if a == 0.0 && b == 0.0 {
            return Ok(0.0);
        }
        Ok((b / a).ln() / ((1.0 + window.1) / (1.0 + window.0)).ln())
    }
}

/// Majorant from the fields and finite-difference rates of a trace.
pub fn majorant(trace: &ModulationTrace, beta: f64) -> Majorant {
    majorant_from_series(&trace.times, &trace_norms(trace, beta), &trace.dot_omega, &trace.dot_gamma)
}

fn trace_norms(trace: &ModulationTrace, beta: f64) -> Vec<f64> {
    if trace.chi.len() == trace.times.len() {
        trace.chi.iter().map(|c| weighted_norm(c, NormKind::Inf, -beta)).collect()
    } else {
        trace.norm_chi.clone()
    }
}

/// Majorant from raw series of `‖χ‖_{L∞₋β}`, `ω̇` and `γ̇`.
pub fn majorant_from_series(times: &[f64], norm_chi: &[f64], dot_omega: &[f64], dot_gamma: &[f64]) -> Majorant {
    let chi_term: Vec<f64> = times.iter().zip(norm_chi).map(|(t, n)| (1.0 + t).powf(1.5) * n).collect();
    let rate_term: Vec<f64> = (0..times.len())
        .map(|k| (1.0 + times[k]).powi(3) * (dot_gamma[k].abs() + dot_omega[k].abs()))
        .collect();
    let mut running = Vec::with_capacity(times.len());
    let mut m = 0.0f64;
    for k in 0..times.len() {
        m = m.max(chi_term[k] + rate_term[k]);
        running.push(m);
    }
    Majorant {
        times: times.to_vec(),
        chi_term,
        rate_term,
        running,
        sup: m,
    }
}

/// Splitting `z(t) = ψ(t) - e^{iθ(t)}ψ_{ω(t)} = W(t)Φ₊ + r₊(t)`.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticSplit {
    pub t_ref: f64,
    #[serde(skip)]
    pub phi_plus: FieldState,
    #[serde(skip)]
    pub phi2: FieldState,
    pub times: Vec<f64>,
    /// `‖r₊(t)‖_{C_b}`.
    pub remainder_sup: Vec<f64>,
    /// `‖r₊(t)‖_{L²}`.
    pub remainder_l2: Vec<f64>,
    /// `‖Φ₊‖_{L²}`.
    pub phi_plus_l2: f64,
    /// Fit of `‖r₊‖_{C_b} + ‖r₊‖_{L²}`, when the window allows one.
    pub fit: Option<DecayFit>,
}

/// `z(t)` on `grid` from a Volterra trajectory and the parameters of the
/// trace at the trace time nearest to `t`.
pub fn soliton_defect(traj: &Trajectory, psi0: &InitialData, trace: &ModulationTrace, t: f64, grid: Grid) -> Result<FieldState> {
    let k = nearest(&trace.times, t)?;
    let psi = traj.field_at(psi0, grid, trace.times[k])?;
    let w = &trace.waves[k];
    let ph = C::from_polar(1.0, trace.theta[k]);
    Ok(FieldState::from_fn(grid, |x| ph * w.profile(x)).scale_real(-1.0).add(&psi)?)
}

fn nearest(times: &[f64], t: f64) -> Result<usize> {
    let k = (0..times.len())
        .min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()))
        .ok_or(SolwaveError::TooFewPoints(0))?;
    let spacing = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
    if (times[k] - t).abs() > 0.5 * spacing + 1e-12 {
        return Err(SolwaveError::TimeOutOfRange {
            t,
            t_max: *times.last().unwrap_or(&0.0),
        });
    }
    Ok(k)
}

/// `W(-T) z(T)` on `grid`, the scattering-state estimate from time `T`.
pub fn scattering_state(traj: &Trajectory, psi0: &InitialData, trace: &ModulationTrace, t: f64, grid: Grid) -> Result<FieldState> {
    free_propagate(&soliton_defect(traj, psi0, trace, t, grid)?, -t)
}

/// Estimates `Φ₊ ≈ W(-T_ref) z(T_ref)` on the wide `grid` and reports
/// `‖z(t) - W(t)Φ₊‖` at `n_samples` log-uniform trace times in `window`.
/// `φ₂` is the quadrature of `∫ W(-τ)δ h(τ) dτ` at the grid nodes, with
/// `h(τ) = F(ψ(0,τ)) - F(s(0,τ))` zero beyond the last trace time.
pub fn asymptotic_split(
    traj: &Trajectory,
    psi0: &InitialData,
    trace: &ModulationTrace,
    t_ref: f64,
    window: (f64, f64),
    n_samples: usize,
    grid: Grid,
) -> Result<AsymptoticSplit> {
    if t_ref < 10.0 {
        log::warn!("asymptotic split: T_ref = {t_ref} < 10 is too early for the asymptotic regime");
    }
    let phi_plus = scattering_state(traj, psi0, trace, t_ref, grid)?;
    let mut times: Vec<f64> = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let target = window.0.max(1e-3) * (window.1 / window.0.max(1e-3)).powf(k as f64 / (n_samples.max(2) - 1) as f64);
        let t = trace.times[nearest(&trace.times, target)?];
        if t >= window.0 && t <= window.1 && t > 0.0 && times.last() != Some(&t) {
            times.push(t);
        }
    }
    let mut remainder_sup = Vec::with_capacity(times.len());
    let mut remainder_l2 = Vec::with_capacity(times.len());
    for &t in &times {
        let z = soliton_defect(traj, psi0, trace, t, grid)?;
        let r = z.sub(&free_propagate(&phi_plus, t)?)?;
        remainder_sup.push(r.max_norm());
        remainder_l2.push(r.l2_norm());
    }
    let combined: Vec<f64> = remainder_sup.iter().zip(&remainder_l2).map(|(a, b)| a + b).collect();
    let fit = decay_exponent(&times, &combined, window).ok();
    let phi2 = phi2_quadrature(traj, trace, grid)?;
    Ok(AsymptoticSplit {
        t_ref,
        phi_plus_l2: phi_plus.l2_norm(),
        phi_plus,
        phi2,
        times,
        remainder_sup,
        remainder_l2,
        fit,
    })
}

/// `φ₂(x) = ∫₀^T e^{-ix²/4τ} (-4πiτ)^{-1/2} h(τ) dτ` over the trace times,
/// with `h` interpolated linearly and zero beyond the last time. The
/// endpoint singularity is removed by `τ = v²`.
fn phi2_quadrature(traj: &Trajectory, trace: &ModulationTrace, grid: Grid) -> Result<FieldState> {
    let cpl = trace
        .waves
        .first()
        .map(|w| w.coupling.clone())
        .ok_or(SolwaveError::TooFewPoints(0))?;
    let hs: Vec<C> = (0..trace.times.len())
        .map(|k| {
            let t = trace.times[k];
            let n = traj.boundary.index_of(t)?;
            let psi0 = traj.boundary.values[n];
            let s0 = C::from_polar(trace.waves[k].c, trace.theta[k]);
            Ok(cpl.force(psi0)? - cpl.force(s0)?)
        })
        .collect::<Result<_>>()?;
    let times = &trace.times;
    let t_max = *times.last().unwrap_or(&0.0);
    let h_at = |tau: f64| -> C {
        if tau <= times[0] {
            return hs[0];
        }
        let dt = times[1] - times[0];
        let j = (((tau - times[0]) / dt).floor() as usize).min(times.len() - 2);
        let th = (tau - times[j]) / dt;
        hs[j] * (1.0 - th) + hs[j + 1] * th
    };
    let pref = C::new(0.0, -4.0 * std::f64::consts::PI).sqrt().inv();
    let (gx, gw) = crate::quadrature::gl16();
    let v_max = t_max.sqrt();
    let values = grid
        .nodes()
        .iter()
        .map(|&x| {
            let c = x * x / 4.0;
            // panels in v short enough to resolve the phase c / v²
            let mut acc = C::new(0.0, 0.0);
            let mut lo = 0.0f64;
            while lo < v_max {
                let step = if c > 0.0 { (0.5 * lo.max(0.05).powi(3) / c).max(1e-3) } else { v_max };
                let hi = (lo + step.min(0.25)).min(v_max);
                for (xi, wi) in gx.iter().zip(gw) {
                    let v = lo + 0.5 * (hi - lo) * (xi + 1.0);
                    if v <= 0.0 {
                        continue;
                    }
                    let tau = v * v;
                    // dτ / √τ = 2 dv
                    acc += C::from_polar(0.5 * (hi - lo) * wi * 2.0, -c / tau) * h_at(tau);
                }
                lo = hi;
            }
            pref * acc
        })
        .collect();
    FieldState::new(grid, values)
}

/// Perturbed solitary wave run through evolution, extraction, majorant and
/// asymptotic splitting.
#[derive(Debug, Clone)]
pub struct StabilityExperiment {
    pub wave: SolitaryWave,
    /// Added to the wave profile at `t = 0`.
    pub perturbation: crate::propagator::Profile,
    pub t_end: f64,
    pub dt: f64,
    /// Spacing of the extraction times.
    pub extract_step: f64,
    pub extract_grid: Grid,
    /// Grid for `z(t)` and `W(-T)z(T)`; must hold the radiation up to `t_end`.
    pub wide_grid: Grid,
    pub beta: f64,
    pub chi_window: (f64, f64),
    pub remainder_window: (f64, f64),
    pub remainder_samples: usize,
    /// `(T₁, T₂)` of the Cauchy check on `W(-T)z(T)`.
    pub cauchy_times: (f64, f64),
}

impl StabilityExperiment {
    /// The stable run: `d·e^{-x²}` added to `wave`, evolved to `t = 60`.
    pub fn new(wave: SolitaryWave, d: f64) -> Self {
        use crate::propagator::{Profile, Shape};
        StabilityExperiment {
            perturbation: Profile::term(C::new(d, 0.0), Shape::Gaussian { center: 0.0, width: 1.0 }),
            wave,
            t_end: 60.0,
            dt: 1e-3,
            extract_step: 0.1,
            extract_grid: Grid { half_length: 20.0, n_points: 801 },
            wide_grid: Grid { half_length: 500.0, n_points: 5001 },
            beta: 2.0,
            chi_window: (5.0, 50.0),
            remainder_window: (10.0, 50.0),
            remainder_samples: 16,
            cauchy_times: (30.0, 50.0),
        }
    }

    pub fn initial_data(&self) -> InitialData {
        InitialData::Profile(crate::propagator::Profile::solitary(&self.wave).add(&self.perturbation))
    }

    pub fn run(&self) -> Result<StabilityReport> {
        use crate::evolve::{evolve_nonlinear, EvolveOptions, Scheme};
        let psi0 = self.initial_data();
        let opts = EvolveOptions::new(self.t_end, self.dt, Scheme::Volterra, self.extract_grid);
        let traj = evolve_nonlinear(&psi0, &self.wave.coupling, &opts)?;
        let n = (self.t_end / self.extract_step).round() as usize;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * self.extract_step).collect();
        let trace = ModulationTrace::from_trajectory(&traj, &psi0, self.extract_grid, &times, &self.wave, self.beta)?;
        let chi_fit = decay_exponent(&trace.times, &trace.norm_chi, self.chi_window)?;
        let maj = majorant(&trace, self.beta);
        let split = asymptotic_split(
            &traj,
            &psi0,
            &trace,
            self.t_end,
            self.remainder_window,
            self.remainder_samples,
            self.wide_grid,
        )?;
        let (t1, t2) = self.cauchy_times;
        let cauchy = scattering_state(&traj, &psi0, &trace, t2, self.wide_grid)?
            .sub(&scattering_state(&traj, &psi0, &trace, t1, self.wide_grid)?)?
            .l2_norm();
        let (lo, hi) = self.remainder_window;
        let tail_scale = maj.sup * 0.5 * ((1.0 + lo).powi(-2) - (1.0 + hi).powi(-2));
        let span = hi - lo;
        Ok(StabilityReport {
            fit_exponent_chi: chi_fit.exponent,
            fit_exponent_remainder: split.fit.map(|f| f.exponent),
            omega_infinity_estimate: *trace.omega.last().unwrap_or(&self.wave.omega),
            m_sup: maj.sup,
            majorant_slope_early: maj.log_slope((lo, lo + 0.25 * span))?,
            majorant_slope_late: maj.log_slope((hi - 0.25 * span, hi))?,
            omega_variation: trace.omega_variation(self.remainder_window),
            omega_tail_scale: tail_scale,
            cauchy_ratio: if split.phi_plus_l2 > 0.0 { cauchy / split.phi_plus_l2 } else { 0.0 },
            chi_fit,
            trace,
            majorant: maj,
            split,
        })
    }
}

/// Outcome of [`StabilityExperiment::run`].
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub fit_exponent_chi: f64,
    pub fit_exponent_remainder: Option<f64>,
    pub omega_infinity_estimate: f64,
    #[serde(rename = "M_sup")]
    pub m_sup: f64,
    /// Log-log slope of `M(T)` over the first and last quarter of the
    /// remainder window; a saturating majorant has the late slope well
    /// below the early one.
    pub majorant_slope_early: f64,
    pub majorant_slope_late: f64,
    /// Total variation of `ω` over the remainder window.
    pub omega_variation: f64,
    /// `M_sup ∫(1+t)^{-3} dt` over the same window.
    pub omega_tail_scale: f64,
    /// `‖W(-T₂)z(T₂) - W(-T₁)z(T₁)‖_{L²} / ‖Φ₊‖_{L²}`.
    pub cauchy_ratio: f64,
    pub chi_fit: DecayFit,
    #[serde(skip)]
    pub trace: ModulationTrace,
    #[serde(skip)]
    pub majorant: Majorant,
    #[serde(skip)]
    pub split: AsymptoticSplit,
}
