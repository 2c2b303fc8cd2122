//! Weighted norms, power-law fits and conserved quantities.

use crate::error::{Result, SolwaveError};
use crate::grid::FieldState;
use crate::linops::Distribution;
use crate::model::NonlinearCoupling;
use serde::Serialize;

/// Exponent `p` of a weighted Lebesgue norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormKind {
    L1,
    L2,
    Inf,
}

/// `‖(1+|x|)^β ψ‖_{L^p}`.
pub fn weighted_norm(psi: &FieldState, p: NormKind, beta: f64) -> f64 {
    let g = psi.grid;
    let weighted: Vec<f64> = (0..g.n_points)
        .map(|k| (1.0 + g.x(k).abs()).powf(beta) * psi.values[k].norm())
        .collect();
    let peak = weighted.iter().cloned().fold(0.0, f64::max);
    let edge = weighted[0].max(weighted[g.n_points - 1]);
    if p != NormKind::Inf && peak > 0.0 && edge > 1e-8 * peak {
        log::warn!("weighted norm: integrand at the walls is {:e} of its maximum", edge / peak);
    }
    match p {
        NormKind::Inf => peak,
        NormKind::L1 => g.integrate(&weighted),
        NormKind::L2 => {
            let sq: Vec<f64> = weighted.iter().map(|v| v * v).collect();
            g.integrate(&sq).max(0.0).sqrt()
        }
    }
}

/// `‖ψ + Cδ‖_{ℳ_β} = ‖ψ‖_{L¹_β} + |C|`.
pub fn measure_norm(d: &Distribution, beta: f64) -> f64 {
    weighted_norm(&d.field, NormKind::L1, beta) + d.point_mass.norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ c + m x` with the slope's standard error and `R²`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let stderr = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    (slope, stderr, r2)
}

fn windowed(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(SolwaveError::Precondition(format!("empty fit window [{lo}, {hi}]")));
    }
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= lo && t <= hi {
            if !(v > 0.0) {
                return Err(SolwaveError::NonPositiveValue { t, value: v });
            }
            ts.push(t);
            vs.push(v);
        }
    }
    if ts.len() < 8 {
        return Err(SolwaveError::TooFewPoints(ts.len()));
    }
    Ok((ts, vs))
}

/// Slope of `log v` against `log(1+t)` over the window, so that
/// `(1+t)^p` is fitted exactly.
pub fn decay_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (ts, vs) = windowed(times, values, window)?;
    if ts[0] < 0.0 {
        return Err(SolwaveError::Precondition("power-law fit needs t ≥ 0".into()));
    }
    let x: Vec<f64> = ts.iter().map(|t| t.ln_1p()).collect();
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (exponent, stderr, r_squared) = ols(&x, &y);
    Ok(DecayFit {
        exponent,
        stderr,
        window,
        n_points: ts.len(),
        r_squared,
    })
}

/// Slope of `log v` against `t` (an exponential rate), in the same format.
pub fn growth_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (ts, vs) = windowed(times, values, window)?;
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (exponent, stderr, r_squared) = ols(&ts, &y);
    Ok(DecayFit {
        exponent,
        stderr,
        window,
        n_points: ts.len(),
        r_squared,
    })
}

/// `n` log-uniform times in `[lo, hi]`, each rounded to a multiple of `dt`
/// and deduplicated.
pub fn log_uniform_times(lo: f64, hi: f64, n: usize, dt: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (0..n)
        .map(|k| {
            let t = lo * (hi / lo).powf(k as f64 / (n.max(2) - 1) as f64);
            (t / dt).round() * dt
        })
        .collect();
    out.dedup_by(|a, b| (*a - *b).abs() < 0.5 * dt);
    out
}

/// Default fit window `[5, min(50, t_end)]`.
pub fn default_window(t_end: f64) -> (f64, f64) {
    (5.0, t_end.min(50.0))
}

/// Charge `∫|ψ|²`.
pub fn charge(psi: &FieldState) -> f64 {
    let sq: Vec<f64> = psi.values.iter().map(|v| v.norm_sqr()).collect();
    psi.grid.integrate(&sq)
}

/// Energy `½∫|ψ'|² + U(ψ(0))`, with forward differences for `ψ'` (the
/// kink at the origin sits on a node) and `U(s) = -½∫₀^s a`.
pub fn energy(psi: &FieldState, coupling: &NonlinearCoupling) -> Result<f64> {
    let h = psi.grid.h();
    let kinetic: f64 = psi
        .values
        .windows(2)
        .map(|p| (p[1] - p[0]).norm_sqr())
        .sum::<f64>()
        / h;
    Ok(0.5 * kinetic + coupling.potential(psi.at_origin().norm_sqr())?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub charge_drift_rel: f64,
    pub energy_drift_rel: f64,
    pub times: Vec<f64>,
    pub charges: Vec<f64>,
    pub energies: Vec<f64>,
}

/// Largest relative drift of charge and energy from their initial values.
pub fn conservation_report(traj: &crate::evolve::Trajectory) -> Result<ConservationReport> {
    if traj.snapshots.len() < 2 {
        return Err(SolwaveError::TooFewPoints(traj.snapshots.len()));
    }
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let charges: Vec<f64> = traj.snapshots.iter().map(|s| s.charge).collect();
    let energies: Vec<f64> = traj.snapshots.iter().map(|s| s.energy).collect();
    let drift = |v: &[f64]| {
        let scale = if v[0].abs() > 1e-12 { v[0].abs() } else { 1.0 };
        v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max) / scale
    };
    Ok(ConservationReport {
        charge_drift_rel: drift(&charges),
        energy_drift_rel: drift(&energies),
        times,
        charges,
        energies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use num_complex::Complex64;

    #[test]
    fn weighted_norm_examples() {
        let g = Grid::new(50.0, 4001).unwrap();
        let psi = FieldState::from_pair(g, |x| (-x.abs()).exp(), |_| 0.0);
        assert!((weighted_norm(&psi, NormKind::L1, 2.0) - 10.0).abs() < 1e-9);
        assert!((weighted_norm(&psi, NormKind::Inf, -2.0) - 1.0).abs() < 1e-15);
        let d = Distribution::delta(g, Complex64::new(3.0, 0.0));
        assert_eq!(measure_norm(&d, 2.0), 3.0);
    }

    #[test]
    fn power_law_fits() {
        let ts: Vec<f64> = (0..40).map(|k| 5.0 * 10f64.powf(k as f64 / 39.0)).collect();
        let v: Vec<f64> = ts.iter().map(|t| (1.0 + t).powf(-1.5)).collect();
        let f = decay_exponent(&ts, &v, (5.0, 50.0)).unwrap();
        assert!(f.exponent >= -1.52 && f.exponent <= -1.48, "{}", f.exponent);
        let v: Vec<f64> = ts.iter().map(|t| t.powf(-0.5) * (1.0 + 0.1 * t.sin())).collect();
        let f = decay_exponent(&ts, &v, (5.0, 50.0)).unwrap();
        assert!(f.exponent >= -0.6 && f.exponent <= -0.4);
        let v = vec![3.0; ts.len()];
        let f = decay_exponent(&ts, &v, (5.0, 50.0)).unwrap();
        assert!(f.exponent.abs() <= 0.02);
    }

    #[test]
    fn fit_errors() {
        let ts: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let mut v = vec![1.0; 20];
        v[3] = 0.0;
        assert!(matches!(decay_exponent(&ts, &v, (1.0, 20.0)), Err(SolwaveError::NonPositiveValue { .. })));
        assert!(matches!(decay_exponent(&ts, &[1.0; 20], (1.0, 5.0)), Err(SolwaveError::TooFewPoints(5))));
    }

    #[test]
    fn soliton_energy() {
        let cpl = NonlinearCoupling::polynomial(&[1.0, 1.0]);
        let g = Grid::new(50.0, 20001).unwrap();
        let psi = FieldState::from_pair(g, |x| (-x.abs()).exp(), |_| 0.0);
        assert!((charge(&psi) - 1.0).abs() < 1e-10);
        // ½κC² - ½(C² + C⁴/2) = 0.5 - 0.75
        assert!((energy(&psi, &cpl).unwrap() + 0.25).abs() < 1e-5);
    }
}
