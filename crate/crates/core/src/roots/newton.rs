//! Damped Newton refinement inside an isolating box.

use num_complex::Complex64;

use super::{DerivativeProblem, Square};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 80;
const STEP_TOL: f64 = 1e-13;

/// `|G/G'| / (1 + |z|)`; zero at an exact zero, infinite where `G' = 0 != G`.
pub fn normalized_residual(p: &DerivativeProblem, z: Complex64) -> f64 {
    let ev = p.eval(z);
    if ev.value.is_zero() {
        return 0.0;
    }
    if ev.derivative.is_zero() {
        return f64::INFINITY;
    }
    (ev.value / ev.derivative).abs() / (1.0 + z.norm())
}

/// Newton iteration from `start`, each step clipped to the box half width.
///
/// Fails with [`Error::NewtonEscape`] once an iterate leaves the box doubled
/// about its center, and with [`Error::RootSolve`] if the steps do not settle.
/// Returns the limit and its normalized residual.
pub fn polish_newton(p: &DerivativeProblem, start: Complex64, bx: &Square) -> Result<(Complex64, f64)> {
    let mut z = start;
    for _ in 0..MAX_ITERATIONS {
        let ev = p.eval(z);
        if ev.value.is_zero() {
            return Ok((z, 0.0));
        }
        if ev.derivative.is_zero() {
            return Err(Error::NewtonEscape {
                center: bx.center,
                last: z,
            });
        }
        let mut step = (ev.value / ev.derivative).to_complex();
        if !step.is_finite() {
            return Err(Error::NewtonEscape {
                center: bx.center,
                last: z,
            });
        }
        let len = step.norm();
        if len > bx.half_width {
            step *= bx.half_width / len;
        }
        z -= step;
        if !bx.scaled(2.0).contains(z) {
            return Err(Error::NewtonEscape {
                center: bx.center,
                last: z,
            });
        }
        if step.norm() < STEP_TOL * (1.0 + z.norm()) {
            return Ok((z, normalized_residual(p, z)));
        }
    }
    Err(Error::RootSolve(format!(
        "Newton did not settle within {MAX_ITERATIONS} steps from {start}"
    )))
}
