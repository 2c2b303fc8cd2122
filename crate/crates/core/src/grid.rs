//! Uniform symmetric grids, sampled fields and end-corrected quadrature.

use crate::error::{Result, SolwaveError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Gregory correction coefficients (differences of order 1..=6).
const GREGORY: [f64; 6] = [
    1.0 / 12.0,
    1.0 / 24.0,
    19.0 / 720.0,
    3.0 / 160.0,
    863.0 / 60480.0,
    275.0 / 24192.0,
];

/// Uniform grid on `[-L, L]` with an odd number of nodes, so `x = 0` is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_length: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(SolwaveError::InvalidGrid(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        if n_points % 2 == 0 {
            return Err(SolwaveError::InvalidGrid(format!(
                "n must be odd so that x = 0 is a node, got {n_points}"
            )));
        }
        if n_points < 15 {
            return Err(SolwaveError::InvalidGrid(format!(
                "n must be at least 15, got {n_points}"
            )));
        }
        Ok(Grid {
            half_length,
            n_points,
        })
    }

    /// Default grid for a wave of decay rate `kappa`: `L = max(30/κ, 50)`, 4001 nodes.
    pub fn default_for(kappa: f64) -> Self {
        let l = (30.0 / kappa).max(50.0);
        Grid {
            half_length: l,
            n_points: 4001,
        }
    }

    /// Same as [`Grid::new`] but warns if `e^{-κL}` exceeds `1e-12`.
    pub fn checked(half_length: f64, n_points: usize, kappa: f64) -> Result<Self> {
        let g = Grid::new(half_length, n_points)?;
        if (-kappa * half_length).exp() > 1e-12 {
            log::warn!(
                "grid half length {half_length} leaves e^(-κL) = {:e} > 1e-12",
                (-kappa * half_length).exp()
            );
        }
        Ok(g)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_length / (self.n_points - 1) as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        // symmetric evaluation keeps x(center) == 0 and x(n-1-k) == -x(k) exactly
        let c = self.center() as isize;
        (k as isize - c) as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.x(k)).collect()
    }

    /// Index of the node `x = 0`.
    pub fn center(&self) -> usize {
        self.n_points / 2
    }

    /// Grid with the same half length and spacing halved.
    pub fn refined(&self) -> Self {
        Grid {
            half_length: self.half_length,
            n_points: 2 * self.n_points - 1,
        }
    }

    /// Quadrature weights: trapezoid on each half line with Gregory end
    /// corrections at `-L`, `0` and `L`. Exact for polynomials of degree
    /// up to six on each half, so a kink at the origin costs nothing.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_points];
        let c = self.center();
        add_gregory(&mut w[..=c], self.h());
        add_gregory(&mut w[c..], self.h());
        w
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_points);
        self.weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Adds Gregory weights for one segment to `w` (which may already hold
/// contributions from a neighbouring segment sharing an endpoint).
fn add_gregory(w: &mut [f64], h: f64) {
    let m = w.len();
    let last = m - 1;
    for (j, wj) in w.iter_mut().enumerate() {
        *wj += if j == 0 || j == last { 0.5 * h } else { h };
    }
    let order = GREGORY.len().min((m - 1) / 2);
    for (k, &g) in GREGORY.iter().enumerate().take(order) {
        let k = k + 1;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..=k {
            let b = binomial(k, j);
            // forward difference at the left end: sum (-1)^{k-j} C(k,j) f_j
            let fwd = if (k - j) % 2 == 0 { b } else { -b };
            // backward difference at the right end: sum (-1)^j C(k,j) f_{n-j}
            let bwd = if j % 2 == 0 { b } else { -b };
            w[j] -= h * g * sign * fwd;
            w[last - j] -= h * g * bwd;
        }
    }
}

/// A complex field sampled on a grid. The real pair `(ψ₁, ψ₂)` is stored as
/// `ψ₁ + iψ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl FieldState {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(SolwaveError::GridMismatch);
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(SolwaveError::Domain("non-finite field value".into()));
        }
        Ok(FieldState { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        FieldState {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n_points],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n_points).map(|k| f(grid.x(k))).collect();
        FieldState { grid, values }
    }

    /// Real pair `(f1(x), f2(x))`.
    pub fn from_pair(grid: Grid, f1: impl Fn(f64) -> f64, f2: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f1(x), f2(x)))
    }

    pub fn at_origin(&self) -> Complex64 {
        self.values[self.grid.center()]
    }

    pub fn scale(&self, c: Complex64) -> Self {
        FieldState {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + c * b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(SolwaveError::GridMismatch);
        }
        Ok(FieldState {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        self.grid.integrate(&sq).max(0.0).sqrt()
    }

    /// Real inner product `∫ (u₁v₁ + u₂v₂) dx`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(SolwaveError::GridMismatch);
        }
        let f: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a.conj() * b).re)
            .collect();
        Ok(self.grid.integrate(&f))
    }

    /// Multiplication by `j` (rotation by `i`).
    pub fn rotate_j(&self) -> Self {
        self.scale(Complex64::i())
    }

    pub fn conj(&self) -> Self {
        FieldState {
            grid: self.grid,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Largest modulus within `fraction` of the boundary, relative to nothing.
    pub fn boundary_mass(&self, fraction: f64) -> f64 {
        let n = self.grid.n_points;
        let band = ((n as f64) * fraction / 2.0).ceil() as usize;
        let band = band.max(1).min(n / 2);
        self.values[..band]
            .iter()
            .chain(&self.values[n - band..])
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_node() {
        let g = Grid::new(50.0, 4001).unwrap();
        assert_eq!(g.x(g.center()), 0.0);
        assert_eq!(g.x(0), -50.0);
        assert_eq!(g.x(4000), 50.0);
        assert!(Grid::new(50.0, 400).is_err());
    }

    #[test]
    fn gregory_exact_for_polynomials() {
        let g = Grid::new(3.0, 31).unwrap();
        for deg in 0..=6 {
            let f: Vec<f64> = g.nodes().iter().map(|x| x.abs().powi(deg)).collect();
            let exact = 2.0 * 3f64.powi(deg + 1) / (deg + 1) as f64;
            let got = g.integrate(&f);
            assert!((got - exact).abs() < 1e-10 * exact, "deg {deg}: {got} vs {exact}");
        }
    }

    #[test]
    fn kinked_exponential_is_accurate() {
        let g = Grid::new(50.0, 4001).unwrap();
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| (1.0 + x.abs()).powi(2) * (-x.abs()).exp())
            .collect();
        assert!((g.integrate(&f) - 10.0).abs() < 1e-10);
    }
}
