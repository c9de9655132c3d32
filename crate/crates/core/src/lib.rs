//! Numerical study of points with prescribed iterated derivative for complex
//! polynomial dynamics.
//!
//! In phase space, the solutions of `(f^n)^(k)(z) = λ` are found with
//! multiplicity and compared with the equilibrium measure of `f` through
//! logarithmic potentials and weak pairings. In the quadratic family the
//! solutions of `(p_c^n)'(c) = λ(c)` are compared with the Green function of
//! the Mandelbrot set.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod measures;
pub mod param;
pub mod poly;
pub mod roots;
pub mod scaled;

pub use error::{Error, Result};
pub use grid::{GridField, GridSpec, Rect};
pub use poly::Poly;
pub use roots::{DerivativeProblem, RootCloud, Square};
pub use scaled::ScaledComplex;
