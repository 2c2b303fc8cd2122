//! The explicit resolvent kernel `R(λ,x,y) = Γ + P` of the linearized
//! generator and the Riesz projector onto its generalized null space.

use crate::error::{Result, SolwaveError};
use crate::grid::{FieldState, Grid};
use crate::model::SolitaryWave;
use crate::spectrum::{determinant_from_k, k_pair, BranchPoint};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// `|D(λ)|` below this is treated as a pole.
pub const SINGULAR_DET: f64 = 1e-12;

type C = Complex64;
type Mat2 = [[C; 2]; 2];

/// `matrix[row][col]`; column 0 is the response to a unit source in the
/// first real component, column 1 to the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub lambda: BranchPoint,
    pub x: f64,
    pub y: f64,
    pub matrix: Mat2,
}

/// Spectral data shared by all kernel evaluations at one `λ`.
#[derive(Debug, Clone, Copy)]
pub struct KernelConstants {
    pub kp: C,
    pub km: C,
    pub det: C,
    pub alpha: f64,
    pub beta: f64,
}

impl KernelConstants {
    pub fn new(lambda: BranchPoint, wave: &SolitaryWave) -> Result<Self> {
        let (kp, km) = k_pair(lambda, wave.omega);
        let det = determinant_from_k(kp, km, wave.alpha, wave.beta);
        if det.norm() <= SINGULAR_DET {
            return Err(SolwaveError::SingularDeterminant(det.norm()));
        }
        Ok(KernelConstants {
            kp,
            km,
            det,
            alpha: wave.alpha,
            beta: wave.beta,
        })
    }
}

/// Coefficients of `v₊ = (1, i)` and `v₋ = (1, -i)` for both columns,
/// together with their x-derivatives. `sx` and `sxy` are the signs used for
/// `d|x|/dx` and `d|x-y|/dx`, which matters only for one-sided limits.
struct ColumnCoeffs {
    // [column][0: v₊, 1: v₋]
    value: [[C; 2]; 2],
    dx: [[C; 2]; 2],
}

fn column_coeffs(k: &KernelConstants, x: f64, y: f64, sx: f64, sxy: f64) -> ColumnCoeffs {
    let i = C::i();
    let (kp, km) = (k.kp, k.km);
    let (ax, ay, axy) = (x.abs(), y.abs(), (x - y).abs());
    let e = |kk: C, r: f64| (i * kk * r).exp();
    // Γ pieces G± = e^{ik|x-y|} - e^{ik(|x|+|y|)} and their x-derivatives
    let gp = e(kp, axy) - e(kp, ax + ay);
    let gm = e(km, axy) - e(km, ax + ay);
    let dgp = i * kp * (sxy * e(kp, axy) - sx * e(kp, ax + ay));
    let dgm = i * km * (sxy * e(km, axy) - sx * e(km, ax + ay));
    let (epx, emx, epy, emy) = (e(kp, ax), e(km, ax), e(kp, ay), e(km, ay));
    let (depx, demx) = (i * kp * sx * epx, i * km * sx * emx);
    let ia2m = i * k.alpha - 2.0 * km;
    let ia2p = i * k.alpha - 2.0 * kp;
    let ib = i * k.beta;
    let half_d = 0.5 / k.det;

    // column I
    let p1_plus = ia2m * epy + ib * emy; // multiplies e₊(x)
    let p1_minus = -(ib * epy + ia2p * emy); // multiplies e₋(x)
    // column II
    let p2_plus = -i * ia2m * epy - k.beta * emy;
    let p2_minus = -k.beta * epy - i * ia2p * emy;

    let g1p = 1.0 / (4.0 * kp);
    let g1m = -1.0 / (4.0 * km);
    let g2p = -i / (4.0 * kp);
    let g2m = -i / (4.0 * km);

    ColumnCoeffs {
        value: [
            [g1p * gp + half_d * p1_plus * epx, g1m * gm + half_d * p1_minus * emx],
            [g2p * gp + half_d * p2_plus * epx, g2m * gm + half_d * p2_minus * emx],
        ],
        dx: [
            [g1p * dgp + half_d * p1_plus * depx, g1m * dgm + half_d * p1_minus * demx],
            [g2p * dgp + half_d * p2_plus * depx, g2m * dgm + half_d * p2_minus * demx],
        ],
    }
}

fn to_matrix(coeffs: &[[C; 2]; 2]) -> Mat2 {
    let i = C::i();
    let mut m = [[C::new(0.0, 0.0); 2]; 2];
    for col in 0..2 {
        let (cp, cm) = (coeffs[col][0], coeffs[col][1]);
        m[0][col] = cp + cm;
        m[1][col] = i * (cp - cm);
    }
    m
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn kernel(lambda: BranchPoint, x: f64, y: f64, wave: &SolitaryWave) -> Result<KernelValue> {
    let k = KernelConstants::new(lambda, wave)?;
    Ok(kernel_with(&k, lambda, x, y))
}

pub fn kernel_with(k: &KernelConstants, lambda: BranchPoint, x: f64, y: f64) -> KernelValue {
    let c = column_coeffs(k, x, y, sgn(x), sgn(x - y));
    KernelValue {
        lambda,
        x,
        y,
        matrix: to_matrix(&c.value),
    }
}

/// `∂ₓR(x,y)` with explicit one-sided conventions for `|x|` and `|x-y|`.
pub fn kernel_dx(k: &KernelConstants, x: f64, y: f64, sx: f64, sxy: f64) -> Mat2 {
    to_matrix(&column_coeffs(k, x, y, sx, sxy).dx)
}

/// Analytic jump residuals: at `x = y` against `(0,-1)ᵀ` and `(1,0)ᵀ`, and
/// at `x = 0` against `-M R(0,y)`, `M = diag(a+b, a)`.
pub fn jump_residuals(k: &KernelConstants, y: f64, wave: &SolitaryWave) -> (f64, f64) {
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    let sy = sgn(y);
    let above = kernel_dx(k, y, y, sy, 1.0);
    let below = kernel_dx(k, y, y, sy, -1.0);
    let expected = [[zero, one], [-one, zero]];
    let mut jxy: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            jxy = jxy.max((above[r][c] - below[r][c] - expected[r][c]).norm());
        }
    }
    let sxy0 = -sy; // sign of (0 - y)
    let right = kernel_dx(k, 0.0, y, 1.0, sxy0);
    let left = kernel_dx(k, 0.0, y, -1.0, sxy0);
    let r0 = to_matrix(&column_coeffs(k, 0.0, y, 0.0, sxy0).value);
    let m = [wave.a + wave.b, wave.a];
    let mut j0: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            j0 = j0.max((right[r][c] - left[r][c] + m[r] * r0[r][c]).norm());
        }
    }
    (jxy, j0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelResidualReport {
    pub interior_residual: f64,
    pub interior_residual_refined: f64,
    pub h: f64,
    pub max_kernel: f64,
    pub order: f64,
    pub jump_xy: f64,
    pub jump_x0: f64,
}

fn fd_residual(k: &KernelConstants, lambda: C, y: f64, grid: Grid, omega: f64) -> Result<(f64, f64)> {
    let h = grid.h();
    let n = grid.n_points;
    let ky = ((y + grid.half_length) / h).round() as usize;
    if ky >= n || (grid.x(ky) - y).abs() > 1e-9 * h.max(1.0) {
        return Err(SolwaveError::Precondition(format!("y = {y} is not a grid node")));
    }
    let k0 = grid.center();
    let bp = BranchPoint::off_cut(lambda);
    let vals: Vec<Mat2> = (0..n).map(|j| kernel_with(k, bp, grid.x(j), y).matrix).collect();
    let mut max_res: f64 = 0.0;
    let mut max_r: f64 = 0.0;
    for v in &vals {
        for row in v {
            for e in row {
                max_r = max_r.max(e.norm());
            }
        }
    }
    for j in 1..n - 1 {
        if j.abs_diff(k0) <= 1 || j.abs_diff(ky) <= 1 {
            continue;
        }
        for col in 0..2 {
            let r1 = |m: usize| vals[m][0][col];
            let r2 = |m: usize| vals[m][1][col];
            let d2 = |f: &dyn Fn(usize) -> C| (f(j + 1) - 2.0 * f(j) + f(j - 1)) / (h * h);
            let e1 = -d2(&r2) + omega * r2(j) - lambda * r1(j);
            let e2 = d2(&r1) - omega * r1(j) - lambda * r2(j);
            max_res = max_res.max(e1.norm()).max(e2.norm());
        }
    }
    Ok((max_res, max_r))
}

/// Finite-difference check of `(C - λ)R = δ(x-y)I` on `grid` and its refinement.
pub fn verify_kernel(lambda: BranchPoint, y: f64, grid: Grid, wave: &SolitaryWave) -> Result<KernelResidualReport> {
    if y == 0.0 {
        return Err(SolwaveError::Precondition("y must differ from 0".into()));
    }
    let k = KernelConstants::new(lambda, wave)?;
    let (res_h, max_r) = fd_residual(&k, lambda.lambda, y, grid, wave.omega)?;
    let (res_h2, _) = fd_residual(&k, lambda.lambda, y, grid.refined(), wave.omega)?;
    let (jump_xy, jump_x0) = jump_residuals(&k, y, wave);
    Ok(KernelResidualReport {
        interior_residual: res_h,
        interior_residual_refined: res_h2,
        h: grid.h(),
        max_kernel: max_r,
        order: (res_h / res_h2).log2(),
        jump_xy,
        jump_x0,
    })
}

/// `∫ e^{ik|x-y|} f(y) dy` at every node, trapezoid rule, O(n).
fn exp_convolution(k: C, f: &[C], h: f64) -> Vec<C> {
    let n = f.len();
    let q = (C::i() * k * h).exp();
    let mut out = vec![C::new(0.0, 0.0); n];
    let mut acc = C::new(0.0, 0.0);
    for j in 0..n {
        acc = if j == 0 { 0.5 * f[0] } else { q * acc + f[j] };
        out[j] = h * (acc - 0.5 * f[j]);
    }
    let mut acc = C::new(0.0, 0.0);
    for j in (0..n).rev() {
        acc = if j == n - 1 { 0.5 * f[n - 1] } else { q * acc + f[j] };
        out[j] += h * (acc - 0.5 * f[j]);
    }
    out
}

/// `R(λ)ψ` on the grid, returned as the two complex components.
pub fn apply_resolvent(lambda: BranchPoint, wave: &SolitaryWave, psi: &FieldState) -> Result<(Vec<C>, Vec<C>)> {
    let k = KernelConstants::new(lambda, wave)?;
    let grid = psi.grid;
    let h = grid.h();
    let w = grid.weights();
    let xs = grid.nodes();
    let i = C::i();
    let z: Vec<C> = psi.values.clone();
    let zb: Vec<C> = z.iter().map(|v| v.conj()).collect();
    let ep: Vec<C> = xs.iter().map(|x| (i * k.kp * x.abs()).exp()).collect();
    let em: Vec<C> = xs.iter().map(|x| (i * k.km * x.abs()).exp()).collect();
    let moment = |e: &[C], f: &[C]| -> C { e.iter().zip(f).zip(&w).map(|((a, b), c)| a * b * *c).sum() };
    let sp_zb = moment(&ep, &zb);
    let sm_z = moment(&em, &z);
    let conv_p = exp_convolution(k.kp, &zb, h);
    let conv_m = exp_convolution(k.km, &z, h);
    let half_d = 0.5 / k.det;
    let ia2m = i * k.alpha - 2.0 * k.km;
    let ia2p = i * k.alpha - 2.0 * k.kp;
    let ib = i * k.beta;
    let pp = half_d * (ia2m * sp_zb + ib * sm_z);
    let pm = half_d * (-ib * sp_zb - ia2p * sm_z);
    let mut c1 = Vec::with_capacity(xs.len());
    let mut c2 = Vec::with_capacity(xs.len());
    for j in 0..xs.len() {
        let gp = conv_p[j] - ep[j] * sp_zb;
        let gm = conv_m[j] - em[j] * sm_z;
        let cp = gp / (4.0 * k.kp) + pp * ep[j];
        let cm = -gm / (4.0 * k.km) + pm * em[j];
        c1.push(cp + cm);
        c2.push(i * (cp - cm));
    }
    Ok((c1, c2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourProjection {
    pub field: FieldState,
    /// Largest imaginary residue of the two components (should vanish).
    pub imaginary_residue: f64,
    /// Max-norm change when the node count is doubled.
    pub doubling_change: f64,
    pub warnings: Vec<String>,
}

fn contour_sum(wave: &SolitaryWave, r: f64, n: usize, psi: &FieldState) -> Result<(FieldState, f64)> {
    let parts: Vec<(Vec<C>, Vec<C>, C)> = (0..n)
        .into_par_iter()
        .map(|m| {
            let phi = 2.0 * std::f64::consts::PI * (m as f64 + 0.5) / n as f64;
            let lam = C::from_polar(r, phi);
            apply_resolvent(BranchPoint::off_cut(lam), wave, psi).map(|(a, b)| (a, b, lam))
        })
        .collect::<Result<_>>()?;
    let len = psi.grid.n_points;
    let mut s1 = vec![C::new(0.0, 0.0); len];
    let mut s2 = vec![C::new(0.0, 0.0); len];
    // fixed summation order for reproducibility
    for (a, b, lam) in &parts {
        for j in 0..len {
            s1[j] += lam * a[j];
            s2[j] += lam * b[j];
        }
    }
    let scale = -1.0 / n as f64;
    let mut imag: f64 = 0.0;
    let values = s1
        .iter()
        .zip(&s2)
        .map(|(a, b)| {
            let (a, b) = (a * scale, b * scale);
            imag = imag.max(a.im.abs()).max(b.im.abs());
            C::new(a.re, b.re)
        })
        .collect();
    Ok((FieldState { grid: psi.grid, values }, imag))
}

/// `-(1/2πi) ∮_{|λ|=r} R(λ)ψ dλ` by the trapezoid rule on the circle.
pub fn riesz_p0_contour(wave: &SolitaryWave, r: f64, n_nodes: usize, psi: &FieldState) -> Result<ContourProjection> {
    if !(r > 0.0 && r < wave.omega) {
        return Err(SolwaveError::Precondition(format!(
            "contour radius must lie in (0, ω) = (0, {}), got {r}",
            wave.omega
        )));
    }
    if n_nodes < 64 {
        return Err(SolwaveError::Precondition(format!("need at least 64 nodes, got {n_nodes}")));
    }
    let (field, imag) = contour_sum(wave, r, n_nodes, psi)?;
    let (doubled, _) = contour_sum(wave, r, 2 * n_nodes, psi)?;
    let change = field.sub(&doubled)?.max_norm();
    let mut warnings = Vec::new();
    if change > 1e-8 {
        let msg = format!("contour quadrature not converged: doubling nodes changes result by {change:e}");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(ContourProjection {
        field,
        imaginary_residue: imag,
        doubling_change: change,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{solitary_from_c, NonlinearCoupling};

    fn wave1() -> SolitaryWave {
        solitary_from_c(&NonlinearCoupling::polynomial(&[1.0, 1.0]), 1.0, 0.0).unwrap()
    }

    fn bp(re: f64, im: f64) -> BranchPoint {
        BranchPoint::off_cut(C::new(re, im))
    }

    /// Three-factor matrix form of the kernel, written out independently.
    fn kernel_three_factor(lambda: BranchPoint, x: f64, y: f64, wave: &SolitaryWave) -> Mat2 {
        let (kp, km) = k_pair(lambda, wave.omega);
        let i = C::i();
        let d = determinant_from_k(kp, km, wave.alpha, wave.beta);
        let (a, b) = (wave.alpha, wave.beta);
        let e = |k: C, r: f64| (i * k * r).exp();
        let gp = e(kp, (x - y).abs()) - e(kp, x.abs() + y.abs());
        let gm = e(km, (x - y).abs()) - e(km, x.abs() + y.abs());
        let left_g = [[1.0 / (4.0 * kp), -1.0 / (4.0 * km)], [i / (4.0 * kp), i / (4.0 * km)]];
        let right_g = [[gp, -i * gp], [gm, i * gm]];
        let x_mat = [[e(kp, x.abs()), e(km, x.abs())], [i * e(kp, x.abs()), -i * e(km, x.abs())]];
        let mid = [[i * a - 2.0 * km, i * b], [-i * b, -i * a + 2.0 * kp]];
        let y_mat = [[e(kp, y.abs()), -i * e(kp, y.abs())], [e(km, y.abs()), i * e(km, y.abs())]];
        let mul = |p: [[C; 2]; 2], q: [[C; 2]; 2]| {
            let mut r = [[C::new(0.0, 0.0); 2]; 2];
            for ii in 0..2 {
                for jj in 0..2 {
                    r[ii][jj] = p[ii][0] * q[0][jj] + p[ii][1] * q[1][jj];
                }
            }
            r
        };
        let g = mul(left_g, right_g);
        let p = mul(mul(x_mat, mid), y_mat);
        let mut out = g;
        for ii in 0..2 {
            for jj in 0..2 {
                out[ii][jj] += p[ii][jj] / (2.0 * d);
            }
        }
        out
    }

    #[test]
    fn column_form_matches_matrix_form() {
        let w = wave1();
        for &(lr, li, x, y) in &[(1.0, 0.0, 0.7, -1.3), (2.0, 3.0, -2.0, 0.5), (0.3, -0.4, 1.1, 1.9)] {
            let lam = bp(lr, li);
            let a = kernel(lam, x, y, &w).unwrap().matrix;
            let b = kernel_three_factor(lam, x, y, &w);
            for r in 0..2 {
                for c in 0..2 {
                    assert!((a[r][c] - b[r][c]).norm() < 1e-13, "{r}{c}: {} vs {}", a[r][c], b[r][c]);
                }
            }
        }
    }

    #[test]
    fn jumps_hold_analytically() {
        let w = wave1();
        for lam in [bp(1.0, 0.0), bp(2.0, 3.0), bp(-0.5, 0.2)] {
            let k = KernelConstants::new(lam, &w).unwrap();
            for y in [2.0, -1.5, 0.3] {
                let (jxy, j0) = jump_residuals(&k, y, &w);
                assert!(jxy < 1e-10 && j0 < 1e-10, "λ={:?} y={y}: {jxy:e} {j0:e}", lam.lambda);
            }
        }
    }

    #[test]
    fn singular_at_discrete_spectrum() {
        let w = solitary_from_c(&NonlinearCoupling::polynomial(&[1.0, 1.0]), 2.0, 0.0).unwrap();
        assert!(matches!(kernel(bp(0.0, 6.0), 1.0, 2.0, &w), Err(SolwaveError::SingularDeterminant(_))));
    }

    #[test]
    fn kernel_decays_along_ray() {
        let w = wave1();
        let mags: Vec<f64> = (0..5)
            .map(|m| {
                let x = 3.0 + 4.0 * m as f64;
                let v = kernel(bp(2.0, 0.0), x, -4.0, &w).unwrap().matrix;
                v.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
            })
            .collect();
        assert!(mags.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn convolution_of_constant_is_exact_enough() {
        let g = Grid::new(40.0, 1601).unwrap();
        let k = C::new(0.3, 1.0);
        let f: Vec<C> = g.nodes().iter().map(|x| C::new((-x * x).exp(), 0.0)).collect();
        let conv = exp_convolution(k, &f, g.h());
        // compare at x = 0 with direct quadrature
        let direct: C = g
            .nodes()
            .iter()
            .zip(&f)
            .zip(g.weights())
            .map(|((x, v), wt)| (C::i() * k * x.abs()).exp() * v * wt)
            .sum();
        assert!((conv[g.center()] - direct).norm() < 1e-3);
    }
}
