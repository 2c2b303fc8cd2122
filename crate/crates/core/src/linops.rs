//! Symplectic form, the linearized generator and the projectors `P⁰`, `Pᶜ`.
//!
//! Linear time evolution lives in [`crate::linear`] and is re-exported here.

use crate::error::{Result, SolwaveError};
use crate::grid::FieldState;
use crate::model::{tangent_frame, SolitaryWave};
use num_complex::Complex64;
use serde::Serialize;

pub use crate::linear::{delta_response, evolve_linear, growth_rate, DeltaResponse, LinearEvolution};

/// Values at the origin on a uniform time grid starting at `t = 0`.
/// `gauge` is the frequency `ν` of the frame the values were computed in
/// (`U = e^{iνt} ψ(0,t)`); values are stored in the physical frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryTrace {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub gauge: f64,
}

impl BoundaryTrace {
    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    /// Index of the step closest to `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let last = *self.times.last().ok_or(SolwaveError::TooFewPoints(0))?;
        if t < -1e-12 || t > last * (1.0 + 1e-12) + 1e-12 {
            return Err(SolwaveError::TimeOutOfRange { t, t_max: last });
        }
        let dt = self.dt();
        Ok(if dt > 0.0 { ((t / dt).round() as usize).min(self.times.len() - 1) } else { 0 })
    }
}

/// A grid field plus a point mass at the origin, `ψ + C δ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub field: FieldState,
    pub point_mass: Complex64,
}

impl Distribution {
    pub fn regular(field: FieldState) -> Self {
        Distribution {
            field,
            point_mass: Complex64::new(0.0, 0.0),
        }
    }

    pub fn delta(grid: crate::grid::Grid, mass: Complex64) -> Self {
        Distribution {
            field: FieldState::zeros(grid),
            point_mass: mass,
        }
    }
}

/// `Ω(ψ, η) = ∫ (ψ₁η₂ - ψ₂η₁) dx = ∫ Im(ψ̄ η) dx`.
pub fn symplectic_form(psi: &FieldState, eta: &FieldState) -> Result<f64> {
    if psi.grid != eta.grid {
        return Err(SolwaveError::GridMismatch);
    }
    let f: Vec<f64> = psi
        .values
        .iter()
        .zip(&eta.values)
        .map(|(a, b)| (a.conj() * b).im)
        .collect();
    Ok(psi.grid.integrate(&f))
}

/// As [`symplectic_form`], adding `f(±L)/rate` for integrands with
/// exponential tails of the given decay `rate`.
pub fn symplectic_form_with_tails(psi: &FieldState, eta: &FieldState, rate: f64) -> Result<f64> {
    let base = symplectic_form(psi, eta)?;
    let n = psi.grid.n_points;
    let end = |k: usize| (psi.values[k].conj() * eta.values[k]).im;
    Ok(base + (end(0) + end(n - 1)) / rate)
}

/// `Ω(ψ + Cδ, η)`, with the point mass paired pointwise at `x = 0`.
pub fn symplectic_form_dist(psi: &Distribution, eta: &FieldState) -> Result<f64> {
    let regular = symplectic_form(&psi.field, eta)?;
    Ok(regular + (psi.point_mass.conj() * eta.at_origin()).im)
}

/// Action of `C = j⁻¹B` split into its regular part on the grid and the
/// coefficients of `δ(x)`: the one produced by the derivative jump of `χ`
/// and the one from the point interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorAction {
    pub smooth: FieldState,
    pub kink_coeff: Complex64,
    pub point_coeff: Complex64,
}

impl GeneratorAction {
    pub fn total_delta(&self) -> Complex64 {
        self.kink_coeff + self.point_coeff
    }
}

/// One-sided fourth-order derivative estimates at the centre node.
fn one_sided_derivatives(v: &[Complex64], c: usize, h: f64) -> (Complex64, Complex64) {
    let st = [-25.0, 48.0, -36.0, 16.0, -3.0];
    let mut right = Complex64::new(0.0, 0.0);
    let mut left = Complex64::new(0.0, 0.0);
    for (m, w) in st.iter().enumerate() {
        right += *w * v[c + m];
        left -= *w * v[c - m];
    }
    (right / (12.0 * h), left / (12.0 * h))
}

pub fn apply_generator(chi: &FieldState, wave: &SolitaryWave) -> GeneratorAction {
    let g = chi.grid;
    let h = g.h();
    let n = g.n_points;
    let c = g.center();
    let v = &chi.values;
    let minus_i = Complex64::new(0.0, -1.0);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let reg = |j: usize, d2: Complex64| minus_i * (-d2 + wave.omega * v[j]);
    for j in 1..n - 1 {
        if j == c {
            continue;
        }
        let d2 = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h);
        out[j] = reg(j, d2);
    }
    // one-sided second differences at the walls and at the origin
    let d2_fwd = |j: usize| (2.0 * v[j] - 5.0 * v[j + 1] + 4.0 * v[j + 2] - v[j + 3]) / (h * h);
    let d2_bwd = |j: usize| (2.0 * v[j] - 5.0 * v[j - 1] + 4.0 * v[j - 2] - v[j - 3]) / (h * h);
    out[0] = reg(0, d2_fwd(0));
    out[n - 1] = reg(n - 1, d2_bwd(n - 1));
    out[c] = 0.5 * (reg(c, d2_fwd(c)) + reg(c, d2_bwd(c)));
    let (dr, dl) = one_sided_derivatives(v, c, h);
    let i = Complex64::i();
    let z0 = v[c];
    GeneratorAction {
        smooth: FieldState {
            grid: g,
            values: out,
        },
        kink_coeff: i * (dr - dl),
        point_coeff: i * (wave.a * z0 + wave.b * z0.re),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub b0: f64,
    pub b1: f64,
    pub tangential: FieldState,
    pub transversal: Distribution,
}

/// Tangent frame and `μ` as seen by grid quadrature, cached for repeated projections.
#[derive(Debug, Clone)]
pub struct Projector {
    pub t0: FieldState,
    pub t1: FieldState,
    pub mu: f64,
}

impl Projector {
    pub fn new(wave: &SolitaryWave, grid: crate::grid::Grid) -> Result<Self> {
        crate::model::mu_omega(wave)?;
        let (t0, t1) = tangent_frame(wave, grid)?;
        let mu = -symplectic_form(&t0, &t1)?;
        Ok(Projector { t0, t1, mu })
    }

    pub fn coefficients(&self, chi: &Distribution) -> Result<(f64, f64)> {
        let b0 = -symplectic_form_dist(chi, &self.t1)? / self.mu;
        let b1 = symplectic_form_dist(chi, &self.t0)? / self.mu;
        Ok((b0, b1))
    }

    pub fn project(&self, chi: &Distribution) -> Result<ProjectionResult> {
        let (b0, b1) = self.coefficients(chi)?;
        let tangential = self.t0.scale_real(b0).axpy(b1, &self.t1)?;
        let transversal = Distribution {
            field: chi.field.sub(&tangential)?,
            point_mass: chi.point_mass,
        };
        Ok(ProjectionResult {
            b0,
            b1,
            tangential,
            transversal,
        })
    }

    /// `Pᶜχ` for a regular field.
    pub fn transversal(&self, chi: &FieldState) -> Result<FieldState> {
        Ok(self.project(&Distribution::regular(chi.clone()))?.transversal.field)
    }
}

pub fn project_p0(chi: &FieldState, wave: &SolitaryWave) -> Result<ProjectionResult> {
    Projector::new(wave, chi.grid)?.project(&Distribution::regular(chi.clone()))
}

pub fn project_p0_distribution(chi: &Distribution, wave: &SolitaryWave) -> Result<ProjectionResult> {
    Projector::new(wave, chi.field.grid)?.project(chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::model::{mu_omega, solitary_from_c, NonlinearCoupling};

    fn wave1() -> SolitaryWave {
        solitary_from_c(&NonlinearCoupling::polynomial(&[1.0, 1.0]), 1.0, 0.0).unwrap()
    }

    #[test]
    fn pairing_of_frame_is_minus_mu() {
        let w = wave1();
        let g = Grid::default_for(w.kappa);
        let (t0, t1) = tangent_frame(&w, g).unwrap();
        assert!((symplectic_form(&t0, &t1).unwrap() + 0.25).abs() < 1e-8);
        assert_eq!(symplectic_form(&t0, &t0).unwrap(), 0.0);
        assert!((symplectic_form(&t0, &t1).unwrap() + mu_omega(&w).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn generator_on_frame() {
        let w = wave1();
        let g = Grid::default_for(w.kappa);
        let (t0, t1) = tangent_frame(&w, g).unwrap();
        let h = g.h();
        let a0 = apply_generator(&t0, &w);
        assert!(a0.smooth.max_norm() < 10.0 * h * h);
        assert!(a0.total_delta().norm() < 1e-6);
        let a1 = apply_generator(&t1, &w);
        let diff = a1.smooth.sub(&t0).unwrap();
        assert!(diff.max_norm() < 10.0 * h * h, "{}", diff.max_norm());
        assert!(a1.total_delta().norm() < 1e-6);
        // the two delta contributions cancel, each is O(1)
        assert!(a1.point_coeff.norm() > 0.1);
    }

    #[test]
    fn generator_on_gaussian() {
        let w = wave1();
        let g = Grid::new(20.0, 2001).unwrap();
        let chi = FieldState::from_pair(g, |x| (-x * x).exp(), |_| 0.0);
        let act = apply_generator(&chi, &w);
        // j⁻¹(-∂ₓₓ + ω)(e^{-x²}, 0) = (0, -(-(4x²-2) + 1) e^{-x²})
        let err = (0..g.n_points)
            .filter(|&k| k != g.center())
            .map(|k| {
                let x = g.x(k);
                let want = Complex64::new(0.0, -(-(4.0 * x * x - 2.0) + w.omega) * (-x * x).exp());
                (act.smooth.values[k] - want).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 5.0 * g.h() * g.h(), "{err}");
        assert!(act.kink_coeff.norm() < 1e-6);
    }

    #[test]
    fn projection_examples() {
        let w = wave1();
        let g = Grid::default_for(w.kappa);
        let p = Projector::new(&w, g).unwrap();
        let r = p.project(&Distribution::regular(p.t0.clone())).unwrap();
        assert!((r.b0 - 1.0).abs() < 1e-12 && r.b1.abs() < 1e-12);
        assert!(r.transversal.field.max_norm() < 1e-12);
        let r = p.project(&Distribution::regular(p.t1.clone())).unwrap();
        assert!(r.b0.abs() < 1e-12 && (r.b1 - 1.0).abs() < 1e-12);
        let odd = FieldState::from_pair(g, |x| x * (-x * x).exp(), |x| x.powi(3) * (-x * x).exp());
        let r = p.project(&Distribution::regular(odd.clone())).unwrap();
        assert!(r.b0.abs() < 1e-14 && r.b1.abs() < 1e-14);
        assert!(r.transversal.field.sub(&odd).unwrap().max_norm() < 1e-14);
    }

    #[test]
    fn delta_input_is_paired_pointwise() {
        let w = wave1();
        let g = Grid::default_for(w.kappa);
        let p = Projector::new(&w, g).unwrap();
        let d = Distribution::delta(g, Complex64::new(1.0, 0.0));
        let (b0, b1) = p.coefficients(&d).unwrap();
        // Ω(δ e₁, T1) = 0 and Ω(δ e₁, T0) = ψ(0)
        assert!(b0.abs() < 1e-15);
        assert!((b1 - w.c / p.mu).abs() < 1e-12);
    }
}
