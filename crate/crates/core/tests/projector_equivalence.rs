use num_complex::Complex64;
use solwave::grid::{FieldState, Grid};
use solwave::linops::{Distribution, Projector};
use solwave::model::{solitary_from_c, NonlinearCoupling, SolitaryWave};
use solwave::resolvent::riesz_p0_contour;

fn wave1() -> SolitaryWave {
    solitary_from_c(&NonlinearCoupling::polynomial(&[1.0, 1.0]), 1.0, 0.0).unwrap()
}

fn test_fields(g: Grid, p: &Projector) -> Vec<FieldState> {
    vec![
        p.t0.clone(),
        FieldState::from_pair(g, |x| (-x * x).exp(), |_| 0.0),
        FieldState::from_pair(g, |x| (-(x - 1.0).powi(2)).exp(), |x| 0.5 * (-(x + 0.5).powi(2) / 2.0).exp()),
        FieldState::from_pair(g, |x| x * (-x * x).exp(), |x| -x * (-x * x / 3.0).exp()),
        FieldState::from_pair(g, |x| (-2.0 * x.abs()).exp(), |x| x.abs() * (-x.abs()).exp()),
    ]
}

#[test]
fn contour_matches_symplectic_formula() {
    let w = wave1();
    let g = Grid::default_for(w.kappa);
    let p = Projector::new(&w, g).unwrap();
    for (k, f) in test_fields(g, &p).iter().enumerate() {
        let contour = riesz_p0_contour(&w, 0.5 * w.omega, 256, f).unwrap();
        let sympl = p.project(&Distribution::regular(f.clone())).unwrap().tangential;
        let err = contour.field.sub(&sympl).unwrap().max_norm();
        println!("field {k}: err {err:e} imag {:e} doubling {:e}", contour.imaginary_residue, contour.doubling_change);
        assert!(err <= 1e-8);
        let again = riesz_p0_contour(&w, 0.5 * w.omega, 256, &contour.field).unwrap();
        assert!(again.field.sub(&contour.field).unwrap().max_norm() <= 1e-7);
    }
}

#[test]
fn contour_independent_of_radius() {
    let w = wave1();
    let g = Grid::default_for(w.kappa);
    let f = FieldState::from_fn(g, |x| Complex64::new((-x * x).exp(), 0.3 * (-(x - 0.4).powi(2)).exp()));
    let a = riesz_p0_contour(&w, 0.3 * w.omega, 256, &f).unwrap();
    let b = riesz_p0_contour(&w, 0.6 * w.omega, 256, &f).unwrap();
    assert!(a.field.sub(&b.field).unwrap().max_norm() <= 1e-8);
}
