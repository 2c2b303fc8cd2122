//! Branch-aware `k±(λ)`, the determinant `D(λ)` and discrete-spectrum classification.

use crate::error::{Result, SolwaveError};
use crate::model::SolitaryWave;
use num_complex::Complex64;
use serde::Serialize;

/// Which one-sided limit is meant when `λ` sits on a cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CutSide {
    /// Limit from `Re λ > 0`.
    Plus,
    /// Limit from `Re λ < 0`.
    Minus,
    OffCut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub lambda: Complex64,
    pub cut_side: CutSide,
}

impl BranchPoint {
    pub fn off_cut(lambda: Complex64) -> Self {
        BranchPoint {
            lambda,
            cut_side: CutSide::OffCut,
        }
    }

    /// A point on `𝒞±` with an explicit side. Fails unless `Re λ = 0` and `|Im λ| ≥ ω`.
    pub fn on_cut(lambda: Complex64, side: CutSide, omega: f64) -> Result<Self> {
        let tol = 1e-14 * (1.0 + omega);
        if side != CutSide::OffCut && !(lambda.re.abs() <= tol && lambda.im.abs() >= omega - tol) {
            return Err(SolwaveError::Precondition(format!(
                "λ = {lambda} is not on a cut for ω = {omega}"
            )));
        }
        Ok(BranchPoint {
            lambda,
            cut_side: side,
        })
    }

    pub fn real(x: f64) -> Self {
        Self::off_cut(Complex64::new(x, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KSign {
    Plus,
    Minus,
}

/// `k±(λ) = √(-ω ∓ iλ)` on the physical sheet (`Im k > 0` off the cut).
pub fn k_branch(lambda: BranchPoint, omega: f64, sign: KSign) -> Complex64 {
    let i = Complex64::i();
    let lam = lambda.lambda;
    let z = match sign {
        KSign::Plus => -omega - i * lam,
        KSign::Minus => -omega + i * lam,
    };
    let on_this_cut = lambda.cut_side != CutSide::OffCut
        && lam.re.abs() <= 1e-14 * (1.0 + omega)
        && match sign {
            KSign::Plus => lam.im >= omega,
            KSign::Minus => lam.im <= -omega,
        };
    if on_this_cut {
        // z is real and ≥ 0 here; the side decides the sign.
        let r = z.re.max(0.0).sqrt();
        // λ + ε: for k₊, Im z = -ε < 0 ⇒ k = -√z;  for k₋, Im z = +ε ⇒ k = +√z.
        let plus_limit = match sign {
            KSign::Plus => -r,
            KSign::Minus => r,
        };
        let v = match lambda.cut_side {
            CutSide::Plus => plus_limit,
            _ => -plus_limit,
        };
        return Complex64::new(v, 0.0);
    }
    let k = z.sqrt();
    if k.im < 0.0 {
        -k
    } else {
        k
    }
}

pub fn k_pair(lambda: BranchPoint, omega: f64) -> (Complex64, Complex64) {
    (
        k_branch(lambda, omega, KSign::Plus),
        k_branch(lambda, omega, KSign::Minus),
    )
}

/// `D(λ) = (2ik₊ + α)(2ik₋ + α) - β²`.
pub fn determinant(lambda: BranchPoint, wave: &SolitaryWave) -> Complex64 {
    let (kp, km) = k_pair(lambda, wave.omega);
    determinant_from_k(kp, km, wave.alpha, wave.beta)
}

pub fn determinant_from_k(kp: Complex64, km: Complex64, alpha: f64, beta: f64) -> Complex64 {
    let i = Complex64::i();
    (2.0 * i * kp + alpha) * (2.0 * i * km + alpha) - beta * beta
}

/// The expanded form `α² + 2iα(k₊+k₋) - 4k₊k₋ - β²`.
pub fn determinant_expanded(lambda: BranchPoint, wave: &SolitaryWave) -> Complex64 {
    let (kp, km) = k_pair(lambda, wave.omega);
    let i = Complex64::i();
    let (a, b) = (wave.alpha, wave.beta);
    a * a + 2.0 * i * a * (kp + km) - 4.0 * kp * km - b * b
}

/// `dD/dλ` off the cuts, from `dk±/dλ = ∓i/(2k±)`.
pub fn determinant_derivative(lambda: Complex64, wave: &SolitaryWave) -> Complex64 {
    let (kp, km) = k_pair(BranchPoint::off_cut(lambda), wave.omega);
    let i = Complex64::i();
    let dkp = -i / (2.0 * kp);
    let dkm = i / (2.0 * km);
    2.0 * i * dkp * (2.0 * i * km + wave.alpha) + (2.0 * i * kp + wave.alpha) * 2.0 * i * dkm
}

/// `1/ω - b/(4ω^{3/2})`, the `λ²` coefficient of `D` at the origin.
pub fn taylor_coeff_zero(wave: &SolitaryWave) -> f64 {
    if wave.is_threshold_degenerate() {
        return 0.0;
    }
    1.0 / wave.omega - wave.b / (4.0 * wave.omega.powf(1.5))
}

/// Second derivative of `D` at 0 along the real axis, Richardson-extrapolated
/// from steps `1e-3` and `5e-4`.
pub fn second_derivative_at_zero(wave: &SolitaryWave) -> Complex64 {
    let d = |h: f64| {
        let f = |x: f64| determinant(BranchPoint::real(x), wave);
        (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
    };
    let (d1, d2) = (d(1e-3), d(5e-4));
    (4.0 * d2 - d1) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectralCase {
    I,
    II,
    III,
    IV,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub case: SpectralCase,
    pub zero_multiplicity: u32,
    pub nonzero_roots: Vec<Complex64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub thresholds: (f64, f64),
    pub taylor_coeff: f64,
}

pub fn classify(wave: &SolitaryWave) -> SpectrumReport {
    let (t1, t2) = wave.thresholds();
    let gamma1 = wave.a;
    let gamma2 = wave.b / 2.0;
    let taylor = taylor_coeff_zero(wave);
    let omega = wave.omega;
    let (case, roots) = if wave.is_threshold_degenerate() {
        (SpectralCase::III, vec![])
    } else if wave.a_prime > t2 {
        let r = 0.5 * gamma2 * (gamma2 * gamma2 - 4.0 * omega).max(0.0).sqrt();
        (
            SpectralCase::IV,
            vec![Complex64::new(r, 0.0), Complex64::new(-r, 0.0)],
        )
    } else if wave.a_prime != 0.0 && wave.a_prime >= t1 * (1.0 - crate::model::THRESHOLD_TOL) {
        let r = 0.5 * gamma2 * (4.0 * omega - gamma2 * gamma2).max(0.0).sqrt();
        (
            SpectralCase::II,
            vec![Complex64::new(0.0, r), Complex64::new(0.0, -r)],
        )
    } else {
        (SpectralCase::I, vec![])
    };
    SpectrumReport {
        case,
        zero_multiplicity: if case == SpectralCase::III { 4 } else { 2 },
        nonzero_roots: roots,
        gamma1,
        gamma2,
        thresholds: (t1, t2),
        taylor_coeff: taylor,
    }
}

/// Axis-aligned rectangle `[re_min, re_max] × [im_min, im_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Region {
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re.0 - slack
            && z.re <= self.re.1 + slack
            && z.im >= self.im.0 - slack
            && z.im <= self.im.1 + slack
    }

    /// Distance from the rectangle to the cuts `𝒞±`, or 0 if they intersect it.
    fn cut_margin(&self, omega: f64) -> f64 {
        let dx = if self.re.0 <= 0.0 && self.re.1 >= 0.0 {
            0.0
        } else {
            self.re.0.abs().min(self.re.1.abs())
        };
        // vertical distance to [ω, ∞) and (-∞, -ω]
        let dy_plus = (omega - self.im.1).max(0.0);
        let dy_minus = (self.im.0 + omega).max(0.0);
        let d_plus = (dx * dx + dy_plus * dy_plus).sqrt();
        let d_minus = (dx * dx + dy_minus * dy_minus).sqrt();
        d_plus.min(d_minus)
    }
}

/// Rectangles tiling `[-R, R]²` minus a `margin`-neighbourhood of the cuts.
pub fn cover_without_cuts(radius: f64, omega: f64, margin: f64) -> Vec<Region> {
    vec![
        Region {
            re: (-radius, -margin),
            im: (-radius, radius),
        },
        Region {
            re: (margin, radius),
            im: (-radius, radius),
        },
        Region {
            re: (-margin, margin),
            im: (-(omega - margin), omega - margin),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSearch {
    pub roots: Vec<Complex64>,
    pub warnings: Vec<String>,
}

const EXCLUSION_RADIUS: f64 = 1e-3;

/// Zeros of `D` inside `region` from local minima of `|D|` on a lattice,
/// polished by complex Newton (equivalently 2D Newton on `(Re D, Im D)`,
/// since `D` is analytic off the cuts).
pub fn rootfind_physical(wave: &SolitaryWave, region: Region, density: usize) -> Result<RootSearch> {
    let omega = wave.omega;
    if region.cut_margin(omega) < 1e-3 * (1.0 - 1e-9) {
        return Err(SolwaveError::Precondition(
            "search region must stay at least 1e-3 away from the cuts".into(),
        ));
    }
    let nx = density.max(3);
    let ny = density.max(3);
    let dx = (region.re.1 - region.re.0) / (nx - 1) as f64;
    let dy = (region.im.1 - region.im.0) / (ny - 1) as f64;
    let point = |i: usize, j: usize| Complex64::new(region.re.0 + i as f64 * dx, region.im.0 + j as f64 * dy);
    let mag: Vec<f64> = (0..nx * ny)
        .map(|idx| determinant(BranchPoint::off_cut(point(idx % nx, idx / nx)), wave).norm())
        .collect();
    let at = |i: usize, j: usize| mag[j * nx + i];
    let excluded = |z: Complex64| {
        z.norm() < EXCLUSION_RADIUS
            || (z - Complex64::new(0.0, omega)).norm() < EXCLUSION_RADIUS
            || (z + Complex64::new(0.0, omega)).norm() < EXCLUSION_RADIUS
    };
    let mut candidates = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = at(i, j);
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    if at(ii as usize, jj as usize) < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                candidates.push(point(i, j));
            }
        }
    }
    let scale = wave.alpha.abs().max(1.0).powi(2);
    let mut roots: Vec<Complex64> = Vec::new();
    let mut warnings = Vec::new();
    for z0 in candidates {
        let mut z = z0;
        let mut converged = false;
        for _ in 0..50 {
            let d = determinant(BranchPoint::off_cut(z), wave);
            let dd = determinant_derivative(z, wave);
            if dd.norm() == 0.0 {
                break;
            }
            let step = d / dd;
            z -= step;
            if step.norm() <= 1e-15 * z.norm().max(1.0) {
                converged = true;
                break;
            }
            if !z.re.is_finite() || !z.im.is_finite() {
                break;
            }
        }
        let dz = determinant(BranchPoint::off_cut(z), wave).norm();
        if !converged && dz > 1e-10 {
            // only a warning if the lattice point was itself a plausible zero
            if at_lattice_small(z0, wave, scale) {
                warnings.push(format!("Newton did not converge from lattice candidate {z0}"));
            }
            continue;
        }
        if dz > 1e-10 || !region.contains(z, 1e-9) || excluded(z) {
            continue;
        }
        if region.cut_margin_point(z, omega) < 1e-9 {
            continue;
        }
        if roots.iter().all(|r| (r - z).norm() > 1e-8) {
            roots.push(z);
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(RootSearch { roots, warnings })
}

fn at_lattice_small(z: Complex64, wave: &SolitaryWave, scale: f64) -> bool {
    determinant(BranchPoint::off_cut(z), wave).norm() < 1e-3 * scale
}

impl Region {
    fn cut_margin_point(&self, z: Complex64, omega: f64) -> f64 {
        Region {
            re: (z.re, z.re),
            im: (z.im, z.im),
        }
        .cut_margin(omega)
    }
}

/// Collect roots over several regions, de-duplicating shared edges.
pub fn rootfind_regions(wave: &SolitaryWave, regions: &[Region], density: usize) -> Result<RootSearch> {
    let mut all = RootSearch {
        roots: vec![],
        warnings: vec![],
    };
    for r in regions {
        let found = rootfind_physical(wave, *r, density)?;
        for z in found.roots {
            if all.roots.iter().all(|q| (q - z).norm() > 1e-8) {
                all.roots.push(z);
            }
        }
        all.warnings.extend(found.warnings);
    }
    all.roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{solitary_from_c, NonlinearCoupling};

    fn wave(coeffs: &[f64], c: f64) -> SolitaryWave {
        solitary_from_c(&NonlinearCoupling::polynomial(coeffs), c, 0.0).unwrap()
    }

    fn cplx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn k_examples() {
        let (kp, km) = k_pair(BranchPoint::off_cut(cplx(0.0, 0.0)), 1.0);
        assert!((kp - cplx(0.0, 1.0)).norm() < 1e-15 && (km - cplx(0.0, 1.0)).norm() < 1e-15);
        let (kp, km) = k_pair(BranchPoint::off_cut(cplx(0.0, 6.0)), 6.25);
        assert!((kp - cplx(0.0, 0.5)).norm() < 1e-14);
        assert!((km - cplx(0.0, 3.5)).norm() < 1e-14);
        let lam = cplx(0.0, 2.0);
        let p = BranchPoint::on_cut(lam, CutSide::Plus, 1.0).unwrap();
        let m = BranchPoint::on_cut(lam, CutSide::Minus, 1.0).unwrap();
        let (kpp, kmp) = k_pair(p, 1.0);
        let (kpm, kmm) = k_pair(m, 1.0);
        assert!((kpp - cplx(-1.0, 0.0)).norm() < 1e-15);
        assert!((kpm - cplx(1.0, 0.0)).norm() < 1e-15);
        assert!((kmp - cplx(0.0, 3f64.sqrt())).norm() < 1e-14);
        assert!((kmm - kmp).norm() < 1e-15);
        assert!(BranchPoint::on_cut(cplx(0.0, 0.5), CutSide::Plus, 1.0).is_err());
    }

    #[test]
    fn one_sided_limits_agree_with_nearby_values() {
        let lam = cplx(0.0, 2.0);
        let eps = 1e-10;
        let near_plus = k_branch(BranchPoint::off_cut(lam + eps), 1.0, KSign::Plus);
        let near_minus = k_branch(BranchPoint::off_cut(lam - eps), 1.0, KSign::Plus);
        let p = k_branch(BranchPoint::on_cut(lam, CutSide::Plus, 1.0).unwrap(), 1.0, KSign::Plus);
        let m = k_branch(BranchPoint::on_cut(lam, CutSide::Minus, 1.0).unwrap(), 1.0, KSign::Plus);
        assert!((near_plus - p).norm() < 1e-8);
        assert!((near_minus - m).norm() < 1e-8);
        let lam = cplx(0.0, -3.0);
        let near_plus = k_branch(BranchPoint::off_cut(lam + eps), 1.0, KSign::Minus);
        let p = k_branch(BranchPoint::on_cut(lam, CutSide::Plus, 1.0).unwrap(), 1.0, KSign::Minus);
        assert!((near_plus - p).norm() < 1e-8);
    }

    #[test]
    fn determinant_examples() {
        let w1 = wave(&[1.0, 1.0], 1.0);
        let d0 = determinant(BranchPoint::real(0.0), &w1);
        assert!(d0.norm() <= 1e-13 * w1.alpha * w1.alpha);
        let w2 = wave(&[1.0, 1.0], 2.0);
        assert!(determinant(BranchPoint::off_cut(cplx(0.0, 6.0)), &w2).norm() < 1e-12);
        let d = determinant(BranchPoint::off_cut(cplx(0.0, 3f64.sqrt() / 2.0)), &w1);
        assert!((d - cplx(10.0 - 6.0 * 3f64.sqrt(), 0.0)).norm() < 1e-12);
        for lam in [cplx(0.3, 0.1), cplx(-2.0, 4.0), cplx(0.0, 0.5)] {
            let a = determinant(BranchPoint::off_cut(lam), &w1);
            let b = determinant_expanded(BranchPoint::off_cut(lam), &w1);
            assert!((a - b).norm() <= 1e-13 * a.norm().max(w1.alpha * w1.alpha));
        }
    }

    #[test]
    fn taylor_examples() {
        let w = wave(&[1.0, 1.0], 1.0);
        assert!((taylor_coeff_zero(&w) - 0.5).abs() < 1e-15);
        let fd = second_derivative_at_zero(&w);
        assert!((fd.re - 1.0).abs() < 1e-6 && fd.im.abs() < 1e-6);
        assert_eq!(taylor_coeff_zero(&wave(&[0.0, 1.0], 2f64.sqrt())), 0.0);
        assert!((taylor_coeff_zero(&wave(&[2.0], 1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let r = classify(&wave(&[1.0, 1.0], 1.0));
        assert_eq!(r.case, SpectralCase::I);
        assert!(r.nonzero_roots.is_empty());
        let r = classify(&wave(&[1.0, 1.0], 2.0));
        assert_eq!(r.case, SpectralCase::II);
        assert!((r.nonzero_roots[0] - cplx(0.0, 6.0)).norm() < 1e-12);
        let r = classify(&wave(&[-1.0, 2.0], 1.2));
        assert_eq!(r.case, SpectralCase::IV);
        assert!((r.nonzero_roots[0].re - 3.1417).abs() < 1e-4);
        let r = classify(&wave(&[0.0, 1.0], 2f64.sqrt()));
        assert_eq!((r.case, r.zero_multiplicity), (SpectralCase::III, 4));
    }

    #[test]
    fn rootfind_examples() {
        let w1 = wave(&[1.0, 1.0], 1.0);
        let region = Region {
            re: (-5.0, 5.0),
            im: (-0.9, 0.9),
        };
        assert!(rootfind_physical(&w1, region, 101).unwrap().roots.is_empty());
        let w2 = wave(&[1.0, 1.0], 2.0);
        let region = Region {
            re: (-0.2, 0.2),
            im: (5.5, 6.2),
        };
        let r = rootfind_physical(&w2, region, 41).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0] - cplx(0.0, 6.0)).norm() < 1e-10);
        let w4 = wave(&[-1.0, 2.0], 1.2);
        let region = Region {
            re: (2.5, 3.5),
            im: (-0.5, 0.5),
        };
        let r = rootfind_physical(&w4, region, 41).unwrap();
        assert_eq!(r.roots.len(), 1);
        let closed = classify(&w4).nonzero_roots[0];
        assert!((r.roots[0] - closed).norm() < 1e-8);
    }
}
