//! Linearized evolution `χ̇ = Cχ` at a solitary wave, in the frame rotating
//! with the wave.
//!
//! Off the origin the linearized equation is free up to the phase
//! `e^{-iωt}`, so everything is carried by the origin value:
//!
//! ```text
//! χ(0,t) = e^{-iωt}(W(t)χ₀)(0) + i ∫₀ᵗ e^{-iω(t-s)} (4πi(t-s))^{-1/2} [a χ(0,s) + b Re χ(0,s)] ds.
//! ```

use crate::diagnostics::{growth_exponent, DecayFit};
use crate::error::{Result, SolwaveError};
use crate::grid::{FieldState, Grid};
use crate::linops::BoundaryTrace;
use crate::model::SolitaryWave;
use crate::propagator::{InitialData, Profile, Shape};
use crate::quadrature::{gl16, interpolate_uniform};
use crate::spectrum::{classify, SpectralCase};
use crate::volterra::{field_at, fresnel_primitives, solve_origin, OriginSolution, PointSource};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Result of [`evolve_linear`]: the origin trace (rotating frame) and the
/// requested snapshots.
#[derive(Debug, Clone)]
pub struct LinearEvolution {
    pub trace: BoundaryTrace,
    pub snapshots: Vec<(f64, FieldState)>,
    pub solution: OriginSolution,
}

impl LinearEvolution {
    /// Reconstructs `χ(·, t)` on `grid` at the step nearest to `t`.
    pub fn field(&self, chi0: &InitialData, grid: Grid, t: f64) -> Result<FieldState> {
        let (tn, field) = self.field_unchecked(chi0, grid, t)?;
        if field.boundary_mass(WALL_FRACTION) > WALL_MASS {
            log::warn!("linear evolution: field within 5% of the walls exceeds 1e-8 at t = {tn}");
        }
        Ok(field)
    }

    fn field_unchecked(&self, chi0: &InitialData, grid: Grid, t: f64) -> Result<(f64, FieldState)> {
        let n = self.trace.index_of(t)?;
        let tn = n as f64 * self.solution.dt();
        Ok((tn, field_at(&self.solution, &chi0.free_field(grid, tn)?, n)))
    }
}

const WALL_FRACTION: f64 = 0.05;
const WALL_MASS: f64 = 1e-8;

fn steps(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(SolwaveError::Precondition(format!("t_end must be finite and ≥ 0, got {t_end}")));
    }
    Ok((t_end / dt).round() as usize)
}

/// `e^{Ct}χ₀` for `t ∈ [0, t_end]`, with snapshots reconstructed on `grid`
/// at the steps nearest to `snapshot_times`.
pub fn evolve_linear(
    chi0: &InitialData,
    wave: &SolitaryWave,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
    grid: Grid,
) -> Result<LinearEvolution> {
    let n_steps = steps(t_end, dt)?;
    let nu = -wave.omega;
    let free: Vec<C> = chi0
        .free_at_origin(dt, n_steps)
        .into_iter()
        .enumerate()
        .map(|(n, f)| C::from_polar(1.0, nu * n as f64 * dt) * f)
        .collect();
    let solution = solve_origin(&free, dt, nu, PointSource::Linear { a: wave.a, b: wave.b }, 1)?;
    let trace = BoundaryTrace {
        times: solution.times(),
        values: solution.u.clone(),
        gauge: 0.0,
    };
    let mut run = LinearEvolution {
        trace,
        snapshots: Vec::new(),
        solution,
    };
    let mut at_walls = Vec::new();
    for &t in snapshot_times {
        let (tn, f) = run.field_unchecked(chi0, grid, t)?;
        if f.boundary_mass(WALL_FRACTION) > WALL_MASS {
            at_walls.push(tn);
        }
        run.snapshots.push((tn, f));
    }
    if let Some(first) = at_walls.first() {
        log::warn!(
            "linear evolution: field within 5% of the walls exceeds 1e-8 in {} of {} snapshots, first at t = {first}",
            at_walls.len(),
            snapshot_times.len()
        );
    }
    Ok(run)
}

/// Measured exponential growth of a generic perturbation against the
/// largest real root of the determinant.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthRate {
    pub fit: DecayFit,
    pub predicted: Option<f64>,
}

/// Growth rate of `|χ(0,t)|` for a generic `χ₀`, fitted on `[t_end/2, t_end]`.
pub fn growth_rate(wave: &SolitaryWave, t_end: f64, dt: f64) -> Result<GrowthRate> {
    let chi0 = InitialData::Profile(
        Profile::term(C::new(1.0, 0.4), Shape::Gaussian { center: 0.2, width: 1.0 })
            .plus(C::new(0.3, -0.2), Shape::OddBump { width: 0.8 }),
    );
    let n_steps = steps(t_end, dt)?;
    let run = evolve_linear(&chi0, wave, t_end, dt, &[], Grid::default_for(wave.kappa))?;
    let stride = (n_steps / 64).max(1);
    let (ts, vs): (Vec<f64>, Vec<f64>) = (0..=n_steps)
        .step_by(stride)
        .map(|n| (run.trace.times[n], run.trace.values[n].norm()))
        .unzip();
    let fit = growth_exponent(&ts, &vs, (0.5 * t_end, t_end))?;
    let report = classify(wave);
    let predicted = match report.case {
        SpectralCase::IV => report.nonzero_roots.iter().map(|r| r.re).fold(None, |m: Option<f64>, v| {
            Some(m.map_or(v, |m| m.max(v)))
        }),
        _ => None,
    };
    Ok(GrowthRate { fit, predicted })
}

/// `√t e^{Ct}δ·v` at the origin and its supremum over `x`.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaResponse {
    pub times: Vec<f64>,
    /// `ς(0,t) = √t χ_δ(0,t)` at every step
    pub origin: Vec<C>,
    /// sample times for the supremum
    pub sup_times: Vec<f64>,
    /// `sup_x |ς(x,t)|`
    pub sup_values: Vec<f64>,
    /// `(2√π)^{-1} / (1 - ½√(πt)(|a|+|b|))`
    pub bound: Vec<f64>,
}

/// Scaled response `ς = √t e^{Ct}(δ v)` on `(0, t_max]` with `n_steps`
/// uniform steps; the supremum over `x` is sampled at `n_sup` log-uniform
/// times on `[t_max/100, t_max]` over `ξ = x/√t ∈ [0, 12]`.
pub fn delta_response(wave: &SolitaryWave, direction: C, t_max: f64, n_steps: usize, n_sup: usize) -> Result<DeltaResponse> {
    let strength = wave.a.abs() + wave.b.abs();
    if !(t_max > 0.0) || 0.5 * (PI * t_max).sqrt() * strength >= 0.9 {
        return Err(SolwaveError::Precondition(format!(
            "½√(π t_max)(|a|+|b|) must be < 0.9, got {}",
            0.5 * (PI * t_max).sqrt() * strength
        )));
    }
    if n_steps < 8 {
        return Err(SolwaveError::TooFewPoints(n_steps));
    }
    let dt = t_max / n_steps as f64;
    let k = C::new(0.0, 4.0 * PI).sqrt().inv();
    let om = wave.omega;
    let src = PointSource::Linear { a: wave.a, b: wave.b };
    let mut vs: Vec<C> = vec![direction * k];
    let mut sig: Vec<C> = vec![src.eval(vs[0])?];
    let i = C::i();
    for n in 1..=n_steps {
        let t = n as f64 * dt;
        let w = arcsine_weights(t, dt, n);
        let rot = |j: usize| C::from_polar(1.0, -om * (t - j as f64 * dt));
        let hist: C = (0..n).map(|j| w[j] * rot(j) * sig[j]).sum();
        let r = C::from_polar(1.0, -om * t) * direction * k + i * t.sqrt() * k * hist;
        let g = i * t.sqrt() * k * w[n];
        let u = solve_linear_2x2(r, g * wave.a, g * wave.b);
        vs.push(u);
        sig.push(src.eval(u)?);
    }
    let times: Vec<f64> = (0..=n_steps).map(|n| n as f64 * dt).collect();
    let mut sup_idx: Vec<usize> = (0..n_sup)
        .map(|j| {
            let t = t_max * 0.01f64.powf(1.0 - j as f64 / (n_sup.max(2) - 1) as f64);
            ((t / dt).round() as usize).clamp(1, n_steps)
        })
        .collect();
    sup_idx.dedup();
    let xis: Vec<f64> = (0..=240).map(|j| j as f64 * 0.05).collect();
    let sup_values: Vec<f64> = sup_idx
        .par_iter()
        .map(|&n| {
            xis.iter()
                .map(|&xi| scaled_field(wave, direction, &vs, &sig, dt, n, xi * (n as f64 * dt).sqrt()).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let sup_times: Vec<f64> = sup_idx.iter().map(|&n| times[n]).collect();
    let bound = sup_times
        .iter()
        .map(|t| (0.5 / PI.sqrt()) / (1.0 - 0.5 * (PI * t).sqrt() * strength))
        .collect();
    Ok(DeltaResponse {
        times,
        origin: vs,
        sup_times,
        sup_values,
        bound,
    })
}

fn solve_linear_2x2(r: C, p: C, q: C) -> C {
    // U - p U - q Re U = r, with U = x + iy
    let cx = 1.0 - p - q;
    let cy = C::i() * (1.0 - p);
    let det = cx.re * cy.im - cy.re * cx.im;
    C::new((r.re * cy.im - cy.re * r.im) / det, (cx.re * r.im - r.re * cx.im) / det)
}

/// Hat-function weights of `1/√((t-s)s)` on `s_j = j·dt`, `j = 0..=n`, `t = n·dt`.
fn arcsine_weights(t: f64, dt: f64, n: usize) -> Vec<f64> {
    let prim = |s: f64| {
        let s = s.clamp(0.0, t);
        let th = (s / t).sqrt().min(1.0).asin();
        (2.0 * th, t * th - (s * (t - s)).max(0.0).sqrt())
    };
    let mut w = vec![0.0; n + 1];
    let mut pa = prim(0.0);
    for j in 0..n {
        let (sa, sb) = (j as f64 * dt, (j + 1) as f64 * dt);
        let pb = prim(sb);
        let (d0, d1) = (pb.0 - pa.0, pb.1 - pa.1);
        w[j] += (sb * d0 - d1) / dt;
        w[j + 1] += (d1 - sa * d0) / dt;
        pa = pb;
    }
    w
}

/// `ς(x, t_n)` from the origin solution.
fn scaled_field(wave: &SolitaryWave, v: C, vs: &[C], sig: &[C], dt: f64, n: usize, x: f64) -> C {
    let k = C::new(0.0, 4.0 * PI).sqrt().inv();
    let t = n as f64 * dt;
    let om = wave.omega;
    let c = 0.25 * x * x;
    let free = C::from_polar(1.0, -om * t + c / t) * v * k;
    if x == 0.0 {
        return vs[n];
    }
    // s ∈ [0, s_split] with s = w², then s ∈ [s_split, t] by exact hats in the lag
    let half = n / 2;
    let s_split = (n - half) as f64 * dt;
    let (gx, gw) = gl16();
    let panels = 1 + (c / t / 2.0).ceil() as usize;
    let wmax = s_split.sqrt();
    let mut acc = C::new(0.0, 0.0);
    for p in 0..panels {
        let (a, b) = (wmax * p as f64 / panels as f64, wmax * (p + 1) as f64 / panels as f64);
        for (xg, wg) in gx.iter().zip(gw) {
            let ww = a + 0.5 * (b - a) * (xg + 1.0);
            let s = ww * ww;
            let tau = t - s;
            let g = interpolate_uniform(sig, dt, s);
            acc += 2.0 * 0.5 * (b - a) * wg * g * C::from_polar(1.0 / tau.sqrt(), -om * tau + c / tau);
        }
    }
    // lag nodes τ_m = m dt, m = 0..=half, values e^{-iωτ} Σ(t-τ) / √(t-τ)
    let node = |m: usize| C::from_polar(1.0 / ((n - m) as f64 * dt).sqrt(), -om * m as f64 * dt) * sig[n - m];
    let (mut g0a, mut g1a) = fresnel_primitives(c, 0.0);
    for m in 0..half {
        let (ta, tb) = (m as f64 * dt, (m + 1) as f64 * dt);
        let (g0b, g1b) = fresnel_primitives(c, tb);
        let (i0, i1) = (g0b - g0a, g1b - g1a);
        acc += node(m) * (tb * i0 - i1) / dt + node(m + 1) * (i1 - ta * i0) / dt;
        g0a = g0b;
        g1a = g1b;
    }
    free + C::i() * t.sqrt() * k * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{solitary_from_c, NonlinearCoupling};

    #[test]
    fn arcsine_weights_integrate_exactly() {
        let (t, n) = (0.3, 30);
        let w = arcsine_weights(t, t / n as f64, n);
        let total: f64 = w.iter().sum();
        assert!((total - PI).abs() < 1e-13);
        let lin: f64 = w.iter().enumerate().map(|(j, w)| w * j as f64 * t / n as f64).sum();
        assert!((lin - PI * t / 2.0).abs() < 1e-13);
    }

    #[test]
    fn tangent_vectors_evolve_as_jordan_block() {
        let w = solitary_from_c(&NonlinearCoupling::polynomial(&[1.0, 1.0]), 1.0, 0.0).unwrap();
        let (t0, t1) = Profile::tangent_frame(&w).unwrap();
        let run = evolve_linear(&InitialData::Profile(t1.clone()), &w, 1.0, 1e-3, &[], Grid::default_for(1.0)).unwrap();
        let want = t1.at_origin(0.0) + t0.at_origin(0.0);
        let got = *run.trace.values.last().unwrap();
        assert!((got - want).norm() < 1e-4 * want.norm(), "{got} {want}");
        let run = evolve_linear(&InitialData::Profile(t0.clone()), &w, 1.0, 1e-3, &[], Grid::default_for(1.0)).unwrap();
        let got = *run.trace.values.last().unwrap();
        assert!((got - t0.at_origin(0.0)).norm() < 1e-5);
    }
}
