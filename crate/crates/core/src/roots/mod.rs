//! Solutions of `G(z) = 0` with multiplicity for the two derivative problems:
//! `(f^n)^(k)(z) - λ` in phase space and `(p_c^n)'(c) - λ(c)` in the
//! quadratic family. `G` is only ever evaluated implicitly along orbits; its
//! expanded coefficients are never formed.

mod isolate;
mod newton;
mod solve;
pub mod winding;

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{iterate_taylor_with_spread, ln_add, ln_one_plus_abs, MAX_JET_ORDER};
use crate::error::{Error, Result};
use crate::grid::Rect;
use crate::poly::Poly;
use crate::scaled::ScaledComplex;

pub use isolate::{isolate_roots, Isolation, IsolateOptions};
pub use newton::{normalized_residual, polish_newton};
pub use solve::{default_search_box, solve, solve_all};
pub use winding::{winding_number, WindingOptions};

/// Axis-aligned square search region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Square {
    pub center: Complex64,
    pub half_width: f64,
}

impl Square {
    pub fn new(center: Complex64, half_width: f64) -> Self {
        assert!(half_width > 0.0, "half width must be positive");
        Square { center, half_width }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z.re - self.center.re).abs() <= self.half_width
            && (z.im - self.center.im).abs() <= self.half_width
    }

    pub fn rect(&self) -> Rect {
        Rect::square(self.center, self.half_width)
    }

    /// Smallest square containing `r` with the same center.
    pub fn enclosing(r: &Rect) -> Self {
        Square {
            center: r.center(),
            half_width: r.half_width(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Square::new(self.center, self.half_width * factor)
    }
}

/// The analytic function whose zeros are sought.
#[derive(Clone, Debug)]
pub enum DerivativeProblem {
    /// `(f^n)^(k)(z) - λ`.
    Phase {
        f: Poly,
        n: u32,
        k: u32,
        lambda: Complex64,
    },
    /// `(p_c^n)'(c) - λ(c)` for `p_c(z) = z^2 + c`.
    Param { n: u32, lambda: Poly },
}

/// Value and derivative of `G`, plus what is needed to judge rounding.
#[derive(Clone, Copy, Debug)]
pub struct Evaluation {
    pub value: ScaledComplex,
    pub derivative: ScaledComplex,
    /// `G + λ`, i.e. the iterated derivative before the target is subtracted.
    pub main: ScaledComplex,
    pub lambda: ScaledComplex,
    /// `λ` was below the resolution of `main` and vanished in the subtraction.
    pub absorbed: bool,
    /// Log of the summed relative orbit derivatives `|w_j'| / (1 + |w_j|)` along
    /// the orbit; `G` cannot be resolved on scales much above its reciprocal.
    pub ln_spread: f64,
}

const ULP: f64 = f64::EPSILON;

impl Evaluation {
    /// Log of the rounding-noise level `60 ulp n (|main| + |λ|)`.
    pub fn ln_noise_floor(&self, n: u32) -> f64 {
        let a = self.main.ln_abs();
        let b = self.lambda.ln_abs();
        (60.0 * ULP * n.max(1) as f64).ln() + ln_add(a, b)
    }

    /// `|G|` clears the noise floor.
    pub fn is_certified(&self, n: u32) -> bool {
        !self.value.is_zero() && self.value.ln_abs() > self.ln_noise_floor(n)
    }
}

impl DerivativeProblem {
    pub fn phase(f: Poly, n: u32, k: u32, lambda: Complex64) -> Result<Self> {
        f.require_dynamical()?;
        if k == 0 || k as usize >= MAX_JET_ORDER {
            return Err(Error::InvalidInput(format!(
                "derivative order k must be in 1..={}, got {k}",
                MAX_JET_ORDER - 1
            )));
        }
        let d = f.degree() as u64;
        match d.checked_pow(n) {
            Some(dn) if dn > k as u64 && dn <= 1 << 40 => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "d^n = {d}^{n} must exceed k = {k} and stay below 2^40"
                )))
            }
        }
        Ok(DerivativeProblem::Phase { f, n, k, lambda })
    }

    /// Rejects `λ` whose leading term cancels that of `(p_c^n)'(c)`, since the
    /// count would then drop below `2^n - 1`.
    pub fn param(n: u32, lambda: Poly) -> Result<Self> {
        if n == 0 || n > 40 {
            return Err(Error::InvalidInput(format!("n must be in 1..=40, got {n}")));
        }
        let big_n = (1u64 << n) - 1;
        if !lambda.is_zero()
            && lambda.degree() as u64 == big_n
            && lambda.leading() == Complex64::new(2f64.powi(n as i32), 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "λ has leading term 2^{n} c^{big_n}, which cancels the leading term of the derivative"
            )));
        }
        Ok(DerivativeProblem::Param { n, lambda })
    }

    pub fn n(&self) -> u32 {
        match self {
            DerivativeProblem::Phase { n, .. } | DerivativeProblem::Param { n, .. } => *n,
        }
    }

    /// Number of solutions counted with multiplicity: `d^n - k` or `max(2^n - 1, deg λ)`.
    pub fn expected_count(&self) -> u64 {
        match self {
            DerivativeProblem::Phase { f, n, k, .. } => (f.degree() as u64).pow(*n) - *k as u64,
            DerivativeProblem::Param { n, lambda } => {
                let main = (1u64 << n) - 1;
                if lambda.is_zero() {
                    main
                } else {
                    main.max(lambda.degree() as u64)
                }
            }
        }
    }

    /// Denominator of the counting measure: `d^n - k` or `2^n`.
    pub fn normalization(&self) -> u64 {
        match self {
            DerivativeProblem::Phase { .. } => self.expected_count(),
            DerivativeProblem::Param { n, .. } => 1u64 << n,
        }
    }

    /// `log |L|` for the leading coefficient `L` of the iterated derivative.
    ///
    /// Phase: `(f^n)^(k)` has leading coefficient
    /// `a_d^((d^n-1)/(d-1)) d^n (d^n-1) ... (d^n-k+1)`. Parameter: `(p_c^n)'(c)`
    /// as a polynomial in `c` has leading coefficient `2^n`.
    pub fn ln_leading_coefficient(&self) -> f64 {
        match self {
            DerivativeProblem::Phase { f, n, k, .. } => {
                let d = f.degree() as f64;
                let dn = d.powi(*n as i32);
                let lead = (dn - 1.0) / (d - 1.0) * f.leading().norm().ln();
                lead + (0..*k).map(|i| (dn - i as f64).ln()).sum::<f64>()
            }
            DerivativeProblem::Param { n, .. } => *n as f64 * std::f64::consts::LN_2,
        }
    }

    /// `G(z)` and `G'(z)`.
    pub fn eval(&self, z: Complex64) -> Evaluation {
        match self {
            DerivativeProblem::Phase { f, n, k, lambda } => {
                let k = *k as usize;
                let (t, ln_spread) = iterate_taylor_with_spread(f, z, *n as usize, k + 1);
                let kf: f64 = (1..=k).map(|x| x as f64).product();
                let main = t[k].scale(kf);
                let derivative = t[k + 1].scale(kf * (k + 1) as f64);
                let lam = ScaledComplex::new(*lambda);
                let (value, absorbed) = main.add_checked(&(-lam));
                Evaluation {
                    value,
                    derivative,
                    main,
                    lambda: lam,
                    absorbed,
                    ln_spread,
                }
            }
            DerivativeProblem::Param { n, lambda } => {
                let (main, dmain, ln_spread) = param_derivative_with_c_derivative(z, *n);
                let (lam, dlam) = lambda.eval_scaled_with_derivative(ScaledComplex::new(z));
                let (value, absorbed) = main.add_checked(&(-lam));
                Evaluation {
                    value,
                    derivative: dmain - dlam,
                    main,
                    lambda: lam,
                    absorbed,
                    ln_spread,
                }
            }
        }
    }
}

/// `(p_c^n)'(c)`, its derivative in `c`, and the log orbit spread
/// `log sum_j |dw_j/dc| / (1 + |w_j|)` over the `j` before `|w_j| > max(2, |c|)`, via `w_0 = c, w_{j+1} = w_j^2 + c`,
/// `P_{j+1} = 2 P_j w_j`.
pub(crate) fn param_derivative_with_c_derivative(c: Complex64, n: u32) -> (ScaledComplex, ScaledComplex, f64) {
    let cs = ScaledComplex::new(c);
    let mut w = cs;
    let mut dw = ScaledComplex::ONE;
    let mut p = ScaledComplex::ONE;
    let mut dp = ScaledComplex::ZERO;
    let mut spread = f64::NEG_INFINITY;
    let ln_radius = c.norm().max(2.0).ln();
    let mut bounded = true;
    for _ in 0..n {
        let np = (p * w).mul_pow2(1);
        let ndp = (dp * w + p * dw).mul_pow2(1);
        let nw = w * w + cs;
        let ndw = (w * dw).mul_pow2(1) + ScaledComplex::ONE;
        p = np;
        dp = ndp;
        w = nw;
        dw = ndw;
        bounded = bounded && w.ln_abs() <= ln_radius;
        if bounded {
            spread = ln_add(spread, dw.ln_abs() - ln_one_plus_abs(&w));
        }
    }
    (p, dp, spread)
}

/// One point of a [`RootCloud`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RootPoint {
    pub location: Complex64,
    pub multiplicity: u64,
    /// Relative Newton correction `|G/G'| / (1 + |z|)`; for clusters the box half width.
    pub residual: f64,
}

/// Weighted point measure `weight_per_unit * sum multiplicity * δ_location`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootCloud {
    pub points: Vec<RootPoint>,
    /// Denominator of the weights; `weight_per_unit = 1 / normalization`.
    pub normalization: u64,
    pub weight_per_unit: f64,
    pub total_multiplicity: u64,
    pub total_mass: f64,
}

impl RootCloud {
    pub fn new(points: Vec<RootPoint>, normalization: u64) -> Self {
        let total_multiplicity = points.iter().map(|p| p.multiplicity).sum();
        RootCloud {
            points,
            normalization,
            weight_per_unit: 1.0 / normalization as f64,
            total_multiplicity,
            total_mass: total_multiplicity as f64 / normalization as f64,
        }
    }

    /// Unit-multiplicity cloud of `points` with weight `1 / points.len()`.
    pub fn uniform(points: Vec<Complex64>) -> Self {
        let n = points.len() as u64;
        Self::new(
            points
                .into_iter()
                .map(|location| RootPoint {
                    location,
                    multiplicity: 1,
                    residual: 0.0,
                })
                .collect(),
            n.max(1),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(location, weight)` pairs.
    pub fn atoms(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.points
            .iter()
            .map(move |p| (p.location, p.multiplicity as f64 * self.weight_per_unit))
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// Record of one step of the subdivision, kept for diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditEntry {
    pub rect: Rect,
    pub depth: u32,
    pub count: Option<u64>,
    pub note: String,
}

impl Poly {
    pub fn eval_scaled_with_derivative(&self, z: ScaledComplex) -> (ScaledComplex, ScaledComplex) {
        let mut p = ScaledComplex::ZERO;
        let mut dp = ScaledComplex::ZERO;
        for &a in self.coeffs().iter().rev() {
            dp = dp * z + p;
            p = p * z + ScaledComplex::new(a);
        }
        (p, dp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let p = DerivativeProblem::phase(Poly::power(2), 3, 1, c(8.0, 0.0)).unwrap();
        assert!(p.eval(c(1.0, 0.0)).value.is_zero());

        let p = DerivativeProblem::param(2, Poly::constant(c(0.0, 0.0))).unwrap();
        assert!(p.eval(c(-1.0, 0.0)).value.is_zero());

        let p = DerivativeProblem::param(1, Poly::constant(c(3.0, 0.0))).unwrap();
        assert!(p.eval(c(1.5, 0.0)).value.is_zero());
    }

    #[test]
    fn eval_derivative_matches_finite_difference() {
        let problems = [
            DerivativeProblem::phase(Poly::quadratic(c(-1.0, 0.0)), 5, 1, c(1.0, 0.0)).unwrap(),
            DerivativeProblem::phase(Poly::from_real(&[0.0, -1.0, 0.0, 1.0]), 3, 2, c(2.0, 1.0)).unwrap(),
            DerivativeProblem::param(6, Poly::from_real(&[1.0, 2.0])).unwrap(),
        ];
        for p in &problems {
            for &z in &[c(0.3, 0.4), c(-0.7, 0.1), c(0.05, -0.6)] {
                let h = 1e-6;
                let gp = p.eval(z + h).value.to_complex();
                let gm = p.eval(z - h).value.to_complex();
                let fd = (gp - gm) / (2.0 * h);
                let an = p.eval(z).derivative.to_complex();
                assert!((fd - an).norm() <= 1e-5 * an.norm().max(1.0), "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn expected_counts() {
        let p = DerivativeProblem::phase(Poly::quadratic(c(-1.0, 0.0)), 4, 1, c(1.0, 0.0)).unwrap();
        assert_eq!(p.expected_count(), 15);
        let p = DerivativeProblem::phase(Poly::power(3), 2, 2, c(1.0, 0.0)).unwrap();
        assert_eq!(p.expected_count(), 7);
        let p = DerivativeProblem::param(3, Poly::from_real(&[1.0, 1.0])).unwrap();
        assert_eq!(p.expected_count(), 7);
        assert_eq!(p.normalization(), 8);
        let p = DerivativeProblem::param(1, Poly::from_real(&[0.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(p.expected_count(), 3);
    }

    #[test]
    fn invalid_problems() {
        assert!(DerivativeProblem::phase(Poly::from_real(&[0.0, 1.0]), 2, 1, c(1.0, 0.0)).is_err());
        assert!(DerivativeProblem::phase(Poly::power(2), 1, 2, c(1.0, 0.0)).is_err());
        assert!(DerivativeProblem::phase(Poly::power(2), 3, 0, c(1.0, 0.0)).is_err());
        assert!(DerivativeProblem::param(0, Poly::constant(c(1.0, 0.0))).is_err());
        assert!(DerivativeProblem::param(2, Poly::from_real(&[0.0, 0.0, 0.0, 4.0])).is_err());
    }

    #[test]
    fn lambda_absorption_far_out() {
        let p = DerivativeProblem::phase(Poly::quadratic(c(-1.0, 0.0)), 12, 1, c(1.0, 0.0)).unwrap();
        let ev = p.eval(c(3.0, 0.0));
        assert!(ev.absorbed);
        assert_eq!(ev.value, ev.main);
        let ev = p.eval(c(0.1, 0.0));
        assert!(!ev.absorbed);
    }

    #[test]
    fn cloud_mass_bookkeeping() {
        let pts = vec![
            RootPoint { location: c(0.0, 0.0), multiplicity: 2, residual: 0.0 },
            RootPoint { location: c(-1.0, 0.0), multiplicity: 1, residual: 0.0 },
        ];
        let cloud = RootCloud::new(pts, 4);
        assert_eq!(cloud.total_multiplicity, 3);
        assert_eq!(cloud.total_mass, 0.75);
        assert_eq!(cloud.total_mass, cloud.weight_per_unit * 3.0);
    }
}
