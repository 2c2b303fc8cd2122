//! Property checks shared by the proptest suites and the acceptance target.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use solwave::evolve::{evolve_nonlinear, free_propagate, EvolveOptions, InitialData, Profile, Scheme, Shape};
use solwave::grid::{FieldState, Grid};
use solwave::linops::symplectic_form;
use solwave::model::{mu_omega, solitary_from_c, tangent_frame, NonlinearCoupling, SolitaryWave};
use solwave::modulation::{extract_parameters, modulation_rhs};

pub type Check = std::result::Result<(), TestCaseError>;

pub fn stable_wave() -> SolitaryWave {
    solitary_from_c(&NonlinearCoupling::polynomial(&[1.0, 1.0]), 1.0, 0.0).unwrap()
}

/// Three stable waves with different couplings and amplitudes.
pub fn sample_waves() -> Vec<SolitaryWave> {
    vec![
        stable_wave(),
        solitary_from_c(&NonlinearCoupling::polynomial(&[1.0, 1.0]), 0.7, 0.0).unwrap(),
        solitary_from_c(&NonlinearCoupling::polynomial(&[2.0, -0.3]), 1.1, 0.0).unwrap(),
    ]
}

/// Two Gaussian bumps with complex weights.
#[derive(Debug, Clone, Copy)]
pub struct Bumps {
    pub w: [C; 2],
    pub center: [f64; 2],
    pub width: [f64; 2],
}

impl Bumps {
    pub fn field(&self, g: Grid) -> FieldState {
        FieldState::from_fn(g, |x| {
            (0..2)
                .map(|k| self.w[k] * (-((x - self.center[k]) / self.width[k]).powi(2)).exp())
                .sum()
        })
    }

    pub fn profile(&self) -> Profile {
        Profile::term(self.w[0], Shape::Gaussian { center: self.center[0], width: self.width[0] })
            .plus(self.w[1], Shape::Gaussian { center: self.center[1], width: self.width[1] })
    }
}

pub fn bumps() -> impl Strategy<Value = Bumps> {
    let c = || (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C::new(a, b));
    (c(), c(), -2.0f64..2.0, -2.0f64..2.0, 0.5f64..2.0, 0.5f64..2.0).prop_map(|(w0, w1, c0, c1, s0, s1)| Bumps {
        w: [w0, w1],
        center: [c0, c1],
        width: [s0, s1],
    })
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg))
    }
}

pub fn symplectic_antisymmetry(u: Bumps, v: Bumps) -> Check {
    let g = Grid::new(20.0, 2001).unwrap();
    let (a, b) = (u.field(g), v.field(g));
    let s = symplectic_form(&a, &b).unwrap() + symplectic_form(&b, &a).unwrap();
    ensure(s.abs() <= 1e-12 * (1.0 + a.l2_norm() * b.l2_norm()), format!("Ω(u,v) + Ω(v,u) = {s:e}"))
}

/// Waves `a(s) = a₀ + a₁s` at amplitude `c`, kept away from `μ = 0`.
pub fn frame_pairing(a0: f64, a1: f64, c: f64) -> Check {
    let Ok(w) = solitary_from_c(&NonlinearCoupling::polynomial(&[a0, a1]), c, 0.0) else {
        return Ok(());
    };
    let Ok(mu) = mu_omega(&w) else { return Ok(()) };
    let g = Grid::new(40.0 / w.kappa, 8001).unwrap();
    let (t0, t1) = tangent_frame(&w, g).unwrap();
    let pairing = symplectic_form(&t0, &t1).unwrap();
    ensure((pairing + mu).abs() <= 1e-8 * mu.abs().max(1.0), format!("Ω(T₀,T₁) = {pairing}, μ = {mu}"))
}

/// The flow commutes with `ψ ↦ e^{iα}ψ`.
pub fn gauge_covariance(u: Bumps, alpha: f64) -> Check {
    let w = stable_wave();
    let p = Profile::solitary(&w).add(&u.profile().scale(C::new(0.05, 0.0)));
    let g = Grid::new(10.0, 201).unwrap();
    let opts = EvolveOptions::new(0.5, 5e-3, Scheme::Volterra, g);
    let a = evolve_nonlinear(&InitialData::Profile(p.clone()), &w.coupling, &opts).unwrap();
    let rot = C::from_polar(1.0, alpha);
    let b = evolve_nonlinear(&InitialData::Profile(p.scale(rot)), &w.coupling, &opts).unwrap();
    let err = a
        .boundary
        .values
        .iter()
        .zip(&b.boundary.values)
        .map(|(x, y)| (rot * x - y).norm())
        .fold(0.0, f64::max);
    ensure(err <= 1e-12, format!("gauge defect {err:e}"))
}

/// `t` is kept small enough (|t| ≤ 2) that the spread field stays inside the box.
pub fn free_unitarity(u: Bumps, t: f64) -> Check {
    let g = Grid::new(60.0, 6001).unwrap();
    let f = u.field(g);
    let n0 = f.l2_norm();
    let n1 = free_propagate(&f, t).unwrap().l2_norm();
    ensure((n1 - n0).abs() <= 1e-10 * n0.max(1e-300), format!("‖W(t)u‖ - ‖u‖ = {:e}", n1 - n0))
}

/// `(ω̇, γ̇)` scales like `ε²` under `χ ↦ εχ` for every sample wave.
pub fn quadratic_smallness(u: Bumps) -> Check {
    for w in sample_waves() {
        let g = Grid::new(30.0 / w.kappa, 2001).unwrap();
        let chi = u.field(g);
        if chi.at_origin().norm() < 1e-2 {
            continue;
        }
        let size = |e: f64| {
            let r = modulation_rhs(&chi.scale_real(e), &w).unwrap();
            r.dot_omega.abs() + r.dot_gamma.abs()
        };
        let order = (size(1e-2) / size(1e-3)).log10();
        ensure((1.9..=2.1).contains(&order), format!("order {order} at C = {}", w.c))?;
    }
    Ok(())
}

/// Identical inputs give bit-identical trajectories and extractions.
pub fn determinism(u: Bumps) -> Check {
    let w = stable_wave();
    let p = InitialData::Profile(Profile::solitary(&w).add(&u.profile().scale(C::new(0.02, 0.0))));
    let g = Grid::new(10.0, 201).unwrap();
    let run = || {
        let opts = EvolveOptions::new(0.3, 1e-2, Scheme::Volterra, g).with_snapshots(&[0.3]);
        let tr = evolve_nonlinear(&p, &w.coupling, &opts).unwrap();
        let ex = extract_parameters(&tr.snapshots[0].field, &w, (w.omega, 0.0)).unwrap();
        (tr.boundary.values, ex.omega.to_bits(), ex.theta.to_bits())
    };
    let (a, b) = (run(), run());
    let same = a.1 == b.1
        && a.2 == b.2
        && a.0.iter().zip(&b.0).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
    ensure(same, "reruns differ".into())
}

/// Runs `check` over `cases` generated inputs with a fixed seed.
pub fn run_property<S: Strategy>(cases: u32, strategy: S, check: impl Fn(S::Value) -> Check) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, check).map_err(|e| e.to_string())
}
