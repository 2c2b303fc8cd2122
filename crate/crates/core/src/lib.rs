//! Numerical laboratory for solitary waves of the one-dimensional
//! Schrödinger equation coupled to a nonlinear oscillator at the origin,
//!
//! ```text
//! i ψ̇ = -ψ'' - δ(x) F(ψ(0)),    F(ψ) = a(|ψ|²) ψ.
//! ```
//!
//! Solitary waves `C e^{-κ|x|} e^{iωt}`, the spectrum of the linearization,
//! its resolvent kernel, symplectic projections, linear and nonlinear
//! evolution, modulation tracking and decay diagnostics.

pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod faddeeva;
pub mod grid;
pub mod linear;
pub mod linops;
pub mod modulation;
pub mod model;
pub mod propagator;
pub mod quadrature;
pub mod resolvent;
pub mod spectrum;
pub mod volterra;

pub use error::{Result, SolwaveError};
pub use grid::{FieldState, Grid};
pub use model::{NonlinearCoupling, SolitaryWave};
