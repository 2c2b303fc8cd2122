//! Nonlinear evolution of `iψ̇ = -ψ'' - δ(x) a(|ψ(0)|²) ψ(0)`.
//!
//! The primary scheme solves the origin Volterra equation
//! `ψ(0,t) = (W(t)ψ₀)(0) + i ∫₀ᵗ (4πi(t-s))^{-1/2} F(ψ(0,s)) ds` and rebuilds
//! fields from it; it needs no artificial boundary. The Crank–Nicolson
//! scheme on a grid with Dirichlet walls is an independent oracle.

use crate::diagnostics::{charge, energy};
use crate::error::{Result, SolwaveError};
use crate::grid::{FieldState, Grid};
use crate::linops::BoundaryTrace;
use crate::model::NonlinearCoupling;
use crate::quadrature::gauss_legendre;
use crate::volterra::{field_at, solve_origin, AbelWeights, OriginSolution, PointSource};
use num_complex::Complex64 as C;
use serde::Serialize;

pub use crate::propagator::{free_propagate, free_propagate_with, FreeMode, InitialData, Profile, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Volterra,
    CrankNicolson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    #[serde(skip)]
    pub field: FieldState,
    pub charge: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub boundary: BoundaryTrace,
    pub snapshots: Vec<Snapshot>,
    /// `Some(false)` when the coupling violates the growth condition on
    /// its potential, so global existence is not guaranteed.
    pub well_posedness: Option<bool>,
    /// The origin solution of the Volterra scheme, kept for further
    /// reconstruction.
    pub origin: Option<OriginSolution>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub t_end: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub snapshot_times: Vec<f64>,
    /// Snapshot grid; for Crank–Nicolson also the computational grid.
    pub grid: Grid,
    /// Gauge frequency `ω₀` of the Volterra scheme, `U = e^{-iω₀t} ψ(0,t)`.
    /// Defaults to the solitary-wave frequency matching `|ψ₀(0)|`.
    pub gauge_frequency: Option<f64>,
    /// Corrector passes per Volterra step.
    pub corrections: usize,
}

impl EvolveOptions {
    pub fn new(t_end: f64, dt: f64, scheme: Scheme, grid: Grid) -> Self {
        EvolveOptions {
            t_end,
            dt,
            scheme,
            snapshot_times: Vec::new(),
            grid,
            gauge_frequency: None,
            corrections: 1,
        }
    }

    pub fn with_snapshots(mut self, times: &[f64]) -> Self {
        self.snapshot_times = times.to_vec();
        self
    }
}

/// `(a(|ψ₀(0)|²)/2)²` when positive, else zero.
pub fn default_gauge(psi0: &InitialData, coupling: &NonlinearCoupling) -> Result<f64> {
    let a = coupling.a(psi0.at_origin().norm_sqr())?;
    Ok(if a > 0.0 { 0.25 * a * a } else { 0.0 })
}

pub fn evolve_nonlinear(psi0: &InitialData, coupling: &NonlinearCoupling, opts: &EvolveOptions) -> Result<Trajectory> {
    if !(opts.dt > 0.0) || !(opts.t_end >= 0.0) {
        return Err(SolwaveError::Precondition(format!(
            "need dt > 0 and t_end ≥ 0, got dt = {}, t_end = {}",
            opts.dt, opts.t_end
        )));
    }
    let well_posedness = coupling.potential_bounded_below();
    if well_posedness == Some(false) {
        log::warn!("well-posedness not guaranteed: the oscillator potential is not bounded below by A - B|ψ|²");
    }
    let start = psi0.sample(opts.grid)?;
    let peak = start.max_norm();
    if peak > 0.0 && start.values[0].norm().max(start.values[opts.grid.n_points - 1].norm()) > 1e-10 * peak {
        log::warn!("initial data is not negligible at the walls");
    }
    let mut traj = match opts.scheme {
        Scheme::Volterra => volterra(psi0, coupling, opts)?,
        Scheme::CrankNicolson => crank_nicolson(&start, coupling, opts)?,
    };
    traj.well_posedness = well_posedness;
    for s in &traj.snapshots {
        if s.field.boundary_mass(0.05) > 1e-8 {
            log::warn!("field mass near the walls exceeds 1e-8 at t = {}", s.t);
        }
    }
    Ok(traj)
}

fn snapshot(field: FieldState, t: f64, coupling: &NonlinearCoupling) -> Result<Snapshot> {
    Ok(Snapshot {
        t,
        charge: charge(&field),
        energy: energy(&field, coupling)?,
        field,
    })
}

fn snapshot_steps(times: &[f64], dt: f64, n_steps: usize) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let n = (t / dt).round();
            if t < 0.0 || n as usize > n_steps {
                Err(SolwaveError::TimeOutOfRange {
                    t,
                    t_max: n_steps as f64 * dt,
                })
            } else {
                Ok(n as usize)
            }
        })
        .collect()
}

fn volterra(psi0: &InitialData, coupling: &NonlinearCoupling, opts: &EvolveOptions) -> Result<Trajectory> {
    let dt = opts.dt;
    let n_steps = (opts.t_end / dt).round() as usize;
    let nu = -opts.gauge_frequency.map_or_else(|| default_gauge(psi0, coupling), Ok)?;
    let free: Vec<C> = psi0
        .free_at_origin(dt, n_steps)
        .into_iter()
        .enumerate()
        .map(|(n, f)| C::from_polar(1.0, nu * n as f64 * dt) * f)
        .collect();
    let sol = solve_origin(&free, dt, nu, PointSource::Nonlinear(coupling), opts.corrections)?;
    let boundary = BoundaryTrace {
        times: sol.times(),
        values: sol
            .u
            .iter()
            .enumerate()
            .map(|(n, u)| C::from_polar(1.0, -nu * n as f64 * dt) * u)
            .collect(),
        gauge: nu,
    };
    let mut snapshots = Vec::new();
    for n in snapshot_steps(&opts.snapshot_times, dt, n_steps)? {
        let t = n as f64 * dt;
        let field = physical_field(&sol, psi0, opts.grid, n)?;
        snapshots.push(snapshot(field, t, coupling)?);
    }
    Ok(Trajectory {
        scheme: Scheme::Volterra,
        boundary,
        snapshots,
        well_posedness: None,
        origin: Some(sol),
    })
}

fn physical_field(sol: &OriginSolution, psi0: &InitialData, grid: Grid, n: usize) -> Result<FieldState> {
    let t = n as f64 * sol.dt();
    let u = field_at(sol, &psi0.free_field(grid, t)?, n);
    Ok(u.scale(C::from_polar(1.0, -sol.weights.nu * t)))
}

impl Trajectory {
    /// Field at the step nearest to `t`, from the kept Volterra solution.
    pub fn field_at(&self, psi0: &InitialData, grid: Grid, t: f64) -> Result<FieldState> {
        let sol = self.origin.as_ref().ok_or_else(|| {
            SolwaveError::Precondition("field reconstruction needs a Volterra trajectory".into())
        })?;
        let n = self.boundary.index_of(t)?;
        physical_field(sol, psi0, grid, n)
    }
}

/// `ψ(·, t)` from an origin trace: `(W(t)ψ₀)(x) + i ∫₀ᵗ K(x, t-s) F(ψ(0,s)) ds`,
/// integrated with the same weights (and gauge) as the solver that produced
/// the trace.
pub fn reconstruct_field(
    boundary: &BoundaryTrace,
    psi0: &InitialData,
    t: f64,
    grid: Grid,
    coupling: &NonlinearCoupling,
) -> Result<FieldState> {
    let n = boundary.index_of(t)?;
    if n == 0 {
        return psi0.sample(grid);
    }
    let dt = boundary.dt();
    let nu = boundary.gauge;
    let u: Vec<C> = boundary.values[..=n]
        .iter()
        .enumerate()
        .map(|(j, v)| C::from_polar(1.0, nu * j as f64 * dt) * v)
        .collect();
    let sigma = u.iter().map(|v| coupling.force(*v)).collect::<Result<Vec<C>>>()?;
    let sol = OriginSolution {
        weights: AbelWeights::new(dt, nu, n)?,
        u,
        sigma,
    };
    physical_field(&sol, psi0, grid, n)
}

/// Constant-coefficient tridiagonal solver for `(I - i dt/2 Δ_h)`.
struct Implicit {
    off: C,
    diag: C,
    cprime: Vec<C>,
    minv: Vec<C>,
}

impl Implicit {
    fn new(n: usize, h: f64, dt: f64) -> Self {
        let off = C::new(0.0, -dt / (2.0 * h * h));
        let diag = C::new(1.0, dt / (h * h));
        let mut cprime = vec![C::new(0.0, 0.0); n];
        let mut minv = vec![C::new(0.0, 0.0); n];
        minv[0] = diag.inv();
        cprime[0] = off * minv[0];
        for k in 1..n {
            minv[k] = (diag - off * cprime[k - 1]).inv();
            cprime[k] = off * minv[k];
        }
        Implicit { off, diag, cprime, minv }
    }

    fn solve(&self, r: &[C]) -> Vec<C> {
        let n = r.len();
        let mut y = vec![C::new(0.0, 0.0); n];
        y[0] = r[0] * self.minv[0];
        for k in 1..n {
            y[k] = (r[k] - self.off * y[k - 1]) * self.minv[k];
        }
        for k in (0..n - 1).rev() {
            y[k] = y[k] - self.cprime[k] * y[k + 1];
        }
        y
    }

    /// `(I + i dt/2 Δ_h) ψ` with zero values beyond the walls.
    fn explicit(&self, psi: &[C]) -> Vec<C> {
        let n = psi.len();
        // I + i dt/2 Δ has diagonal 2 - diag and off-diagonal -off
        let d = 2.0 - self.diag;
        (0..n)
            .map(|k| {
                let l = if k > 0 { psi[k - 1] } else { C::new(0.0, 0.0) };
                let r = if k + 1 < n { psi[k + 1] } else { C::new(0.0, 0.0) };
                d * psi[k] - self.off * (l + r)
            })
            .collect()
    }
}

/// Mean of `a` over `[s0, s1]`; with it the scheme conserves
/// `½ h Σ|D₊ψ|² + u(|ψ(0)|²)` exactly.
fn mean_a(coupling: &NonlinearCoupling, s0: f64, s1: f64, rule: &(Vec<f64>, Vec<f64>)) -> Result<f64> {
    if (s1 - s0).abs() <= 1e-14 * (1.0 + s0.abs()) {
        return coupling.a(0.5 * (s0 + s1));
    }
    let (mid, half) = (0.5 * (s0 + s1), 0.5 * (s1 - s0));
    let mut acc = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        acc += w * coupling.a(mid + half * x)?;
    }
    Ok(0.5 * acc)
}

const CN_MAX_ITER: usize = 20;
const CN_TOL: f64 = 1e-12;

fn crank_nicolson(start: &FieldState, coupling: &NonlinearCoupling, opts: &EvolveOptions) -> Result<Trajectory> {
    let g = opts.grid;
    let (h, dt) = (g.h(), opts.dt);
    let n_steps = (opts.t_end / dt).round() as usize;
    let c = g.center();
    let imp = Implicit::new(g.n_points, h, dt);
    let mut e0 = vec![C::new(0.0, 0.0); g.n_points];
    e0[c] = C::new(1.0, 0.0);
    let green = imp.solve(&e0);
    let beta = C::new(0.0, dt / h);
    let rule = gauss_legendre(8);
    let snaps = snapshot_steps(&opts.snapshot_times, dt, n_steps)?;
    let mut psi = start.values.clone();
    let mut times = vec![0.0];
    let mut values = vec![psi[c]];
    let mut snapshots = Vec::new();
    let take = |n: usize, psi: &[C], out: &mut Vec<Snapshot>| -> Result<()> {
        for _ in snaps.iter().filter(|&&m| m == n) {
            out.push(snapshot(FieldState { grid: g, values: psi.to_vec() }, n as f64 * dt, coupling)?);
        }
        Ok(())
    };
    take(0, &psi, &mut snapshots)?;
    for n in 1..=n_steps {
        let y = imp.solve(&imp.explicit(&psi));
        let old = psi[c];
        let s0 = old.norm_sqr();
        let mut z = y[c];
        let mut abar = coupling.a(s0)?;
        let mut converged = false;
        let mut resid = f64::INFINITY;
        for _ in 0..CN_MAX_ITER {
            abar = mean_a(coupling, s0, z.norm_sqr(), &rule)?;
            let next = y[c] + beta * abar * 0.5 * (old + z) * green[c];
            resid = (next - z).norm();
            z = next;
            if resid <= CN_TOL * (1.0 + z.norm()) {
                converged = true;
                break;
            }
        }
        if !converged || !resid.is_finite() {
            return Err(SolwaveError::FixedPointDivergence { step: n, residual: resid });
        }
        let kick = beta * abar * 0.5 * (old + z);
        for k in 0..g.n_points {
            psi[k] = y[k] + kick * green[k];
        }
        times.push(n as f64 * dt);
        values.push(psi[c]);
        take(n, &psi, &mut snapshots)?;
    }
    Ok(Trajectory {
        scheme: Scheme::CrankNicolson,
        boundary: BoundaryTrace {
            times,
            values,
            gauge: 0.0,
        },
        snapshots,
        well_posedness: None,
        origin: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::solitary_from_c;

    #[test]
    fn implicit_solver_inverts() {
        let imp = Implicit::new(9, 0.1, 0.01);
        let x: Vec<C> = (0..9).map(|k| C::new(k as f64, 1.0 - k as f64 * 0.3)).collect();
        // A x with A = 2I - explicit
        let ex = imp.explicit(&x);
        let ax: Vec<C> = x.iter().zip(&ex).map(|(a, b)| 2.0 * a - b).collect();
        let back = imp.solve(&ax);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn short_soliton_run_both_schemes() {
        let cpl = NonlinearCoupling::polynomial(&[1.0, 1.0]);
        let w = solitary_from_c(&cpl, 1.0, 0.0).unwrap();
        let psi0 = InitialData::Profile(Profile::solitary(&w));
        let g = Grid::new(40.0, 8001).unwrap();
        for scheme in [Scheme::Volterra, Scheme::CrankNicolson] {
            let opts = EvolveOptions::new(1.0, 1e-3, scheme, g).with_snapshots(&[0.0, 1.0]);
            let tr = evolve_nonlinear(&psi0, &cpl, &opts).unwrap();
            let last = *tr.boundary.values.last().unwrap();
            assert!((last - C::from_polar(1.0, 1.0)).norm() < 1e-4, "{scheme:?} {last}");
            assert_eq!(tr.well_posedness, Some(false));
        }
    }
}
