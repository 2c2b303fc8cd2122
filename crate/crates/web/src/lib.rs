//! Browser bindings: wave and spectrum summary, the origin trace of a
//! perturbed wave, and the linear decay curve. Each binding wraps a plain
//! function that can be tested natively.

use num_complex::Complex64 as C;
use serde::Serialize;
use solwave::diagnostics::{decay_exponent, log_uniform_times, weighted_norm, NormKind};
use solwave::evolve::{evolve_nonlinear, EvolveOptions, InitialData, Profile, Scheme, Shape};
use solwave::linops::{evolve_linear, Distribution, Projector};
use solwave::model::{mu_omega, solitary_from_c, NonlinearCoupling, SolitaryWave};
use solwave::spectrum::classify;
use solwave::Grid;
use wasm_bindgen::prelude::*;

/// Longest run the page will start; keeps the O(N²) origin solver interactive.
pub const MAX_STEPS: usize = 20_000;

fn wave(coeffs: &[f64], c: f64) -> Result<SolitaryWave, String> {
    if coeffs.is_empty() {
        return Err("give at least one coefficient".into());
    }
    solitary_from_c(&NonlinearCoupling::polynomial(coeffs), c, 0.0).map_err(|e| e.to_string())
}

fn steps(t_end: f64, dt: f64) -> Result<usize, String> {
    if !(t_end > 0.0 && dt > 0.0 && t_end.is_finite()) {
        return Err("t_end and dt must be positive".into());
    }
    let n = (t_end / dt).round() as usize;
    if n > MAX_STEPS {
        return Err(format!("{n} steps requested, the demo allows {MAX_STEPS}"));
    }
    Ok(n)
}

#[derive(Serialize)]
struct Root {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct Summary {
    c: f64,
    kappa: f64,
    omega: f64,
    mu_omega: Option<f64>,
    case: String,
    roots: Vec<Root>,
    thresholds: [f64; 2],
    a_prime: f64,
}

pub fn summary_json(coeffs: &[f64], c: f64) -> Result<String, String> {
    let w = wave(coeffs, c)?;
    let r = classify(&w);
    let s = Summary {
        c: w.c,
        kappa: w.kappa,
        omega: w.omega,
        mu_omega: mu_omega(&w).ok(),
        case: format!("{:?}", r.case),
        roots: r.nonzero_roots.iter().map(|z| Root { re: z.re, im: z.im }).collect(),
        thresholds: [r.thresholds.0, r.thresholds.1],
        a_prime: w.a_prime,
    };
    serde_json::to_string(&s).map_err(|e| e.to_string())
}

/// `[t, |ψ(0,t)|, ...]` for the wave plus `d·e^{-x²}`, every `stride` steps.
pub fn trace(coeffs: &[f64], c: f64, d: f64, t_end: f64, dt: f64) -> Result<Vec<f64>, String> {
    let n = steps(t_end, dt)?;
    let w = wave(coeffs, c)?;
    let psi0 = InitialData::Profile(
        Profile::solitary(&w).plus(C::new(d, 0.0), Shape::Gaussian { center: 0.0, width: 1.0 }),
    );
    let opts = EvolveOptions::new(t_end, dt, Scheme::Volterra, Grid::new(10.0, 101).map_err(|e| e.to_string())?);
    let traj = evolve_nonlinear(&psi0, &w.coupling, &opts).map_err(|e| e.to_string())?;
    let stride = (n / 1000).max(1);
    Ok(traj
        .boundary
        .times
        .iter()
        .zip(&traj.boundary.values)
        .step_by(stride)
        .flat_map(|(t, z)| [*t, z.norm()])
        .collect())
}

#[derive(Serialize)]
struct Decay {
    times: Vec<f64>,
    norms: Vec<f64>,
    exponent: Option<f64>,
}

/// `‖e^{Ct}Pᶜχ₀‖_{L∞₋₂}` for `χ₀ = e^{-x²}` projected onto the continuous
/// subspace, with the power-law fit over `[0.4 t_end, t_end]`.
pub fn decay_json(coeffs: &[f64], c: f64, t_end: f64, dt: f64) -> Result<String, String> {
    steps(t_end, dt)?;
    let w = wave(coeffs, c)?;
    let g = Grid::new(20.0, 401).map_err(|e| e.to_string())?;
    let raw = Profile::term(C::new(1.0, 0.0), Shape::Gaussian { center: 0.0, width: 1.0 });
    let err = |e: solwave::SolwaveError| e.to_string();
    let (b0, b1) = Projector::new(&w, g)
        .map_err(err)?
        .coefficients(&Distribution::regular(raw.sample(g, 0.0)))
        .map_err(err)?;
    let (t0, t1) = Profile::tangent_frame(&w).map_err(err)?;
    let chi0 = InitialData::Profile(raw.add(&t0.scale(C::new(-b0, 0.0))).add(&t1.scale(C::new(-b1, 0.0))));
    let times = log_uniform_times((0.02 * t_end).max(dt), t_end, 48, dt);
    let run = evolve_linear(&chi0, &w, t_end, dt, &times, g).map_err(err)?;
    let ts: Vec<f64> = run.snapshots.iter().map(|(t, _)| *t).collect();
    let norms: Vec<f64> = run.snapshots.iter().map(|(_, f)| weighted_norm(f, NormKind::Inf, -2.0)).collect();
    let exponent = decay_exponent(&ts, &norms, (0.4 * t_end, t_end)).ok().map(|f| f.exponent);
    serde_json::to_string(&Decay {
        times: ts,
        norms,
        exponent,
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn wave_summary(coeffs: &[f64], c: f64) -> Result<String, JsError> {
    summary_json(coeffs, c).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn origin_trace(coeffs: &[f64], c: f64, d: f64, t_end: f64, dt: f64) -> Result<Vec<f64>, JsError> {
    trace(coeffs, c, d, t_end, dt).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn decay_curve(coeffs: &[f64], c: f64, t_end: f64, dt: f64) -> Result<String, JsError> {
    decay_json(coeffs, c, t_end, dt).map_err(|e| JsError::new(&e))
}
