//! Complex polynomials, their dynamical metadata, and a small all-roots solver.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaled::ScaledComplex;

/// Affine change of coordinates `w = scale * z + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conjugacy {
    pub scale: Complex64,
    pub translation: Complex64,
}

impl Conjugacy {
    pub const IDENTITY: Conjugacy = Conjugacy {
        scale: Complex64::new(1.0, 0.0),
        translation: Complex64::new(0.0, 0.0),
    };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Maps a point of the original coordinate into the conjugate coordinate.
    pub fn forward(&self, z: Complex64) -> Complex64 {
        self.scale * z + self.translation
    }

    pub fn backward(&self, w: Complex64) -> Complex64 {
        (w - self.translation) / self.scale
    }
}

/// Polynomial with ascending complex coefficients `a_0 .. a_d`.
///
/// `monic_conjugacy` is the identity unless the polynomial was produced by
/// [`Poly::normalize_monic`], in which case it maps the source coordinate to this one.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
    escape_radius: f64,
    monic_conjugacy: Conjugacy,
}

impl Poly {
    /// Trailing zero coefficients are dropped; the empty list is the zero polynomial.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == Complex64::new(0.0, 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        let escape_radius = escape_radius(&coeffs);
        Poly {
            coeffs,
            escape_radius,
            monic_conjugacy: Conjugacy::IDENTITY,
        }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `z^2 + c`.
    pub fn quadratic(c: Complex64) -> Self {
        Self::new(vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    /// `z^d`.
    pub fn power(d: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d + 1];
        coeffs[d] = Complex64::new(1.0, 0.0);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == Complex64::new(0.0, 0.0)
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == Complex64::new(1.0, 0.0)
    }

    /// Radius outside of which `|f(z)| > 2|z|`; infinite for degree < 2.
    pub fn escape_radius(&self) -> f64 {
        self.escape_radius
    }

    pub fn monic_conjugacy(&self) -> Conjugacy {
        self.monic_conjugacy
    }

    /// Fails unless the polynomial has degree at least 2.
    pub fn require_dynamical(&self) -> Result<()> {
        if self.degree() < 2 {
            return Err(Error::InvalidInput(format!(
                "dynamics needs degree >= 2, got {}",
                self.degree()
            )));
        }
        Ok(())
    }

    /// `sum_{i<d} |a_i|`.
    pub fn lower_coeff_mass(&self) -> f64 {
        self.coeffs[..self.degree()].iter().map(|a| a.norm()).sum()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }

    /// Value and first derivative.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &a in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    }

    pub fn eval_scaled(&self, z: ScaledComplex) -> ScaledComplex {
        self.coeffs
            .iter()
            .rev()
            .fold(ScaledComplex::ZERO, |acc, &a| acc * z + ScaledComplex::new(a))
    }

    /// `sum |a_i| |z|^i`, the scale against which a residual `|f(z)|` is judged.
    pub fn abs_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * r + a.norm())
    }

    pub fn derivative(&self) -> Poly {
        if self.degree() == 0 {
            return Poly::constant(Complex64::new(0.0, 0.0));
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| a * i as f64)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, k: usize) -> Poly {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        Poly::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(zero)
                        + other.coeffs.get(i).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&a| a * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// `self(inner(z))` with expanded coefficients.
    pub fn compose(&self, inner: &Poly) -> Poly {
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::constant(Complex64::new(0.0, 0.0)), |acc, &a| {
                acc.mul(inner).add(&Poly::constant(a))
            })
    }

    /// Expanded coefficients of the `n`-th iterate. Only sensible for small `d^n`.
    pub fn iterate_expanded(&self, n: u32) -> Poly {
        let mut out = Poly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        for _ in 0..n {
            out = self.compose(&out);
        }
        out
    }

    /// Taylor coefficients of `self(t + x)` in `x` up to order `order`, in scaled arithmetic.
    pub(crate) fn taylor_at(&self, t: ScaledComplex, order: usize, out: &mut [ScaledComplex]) {
        let d = self.degree();
        let mut work: [ScaledComplex; 32] = [ScaledComplex::ZERO; 32];
        let mut heap;
        let buf: &mut [ScaledComplex] = if d < 32 {
            &mut work[..=d]
        } else {
            heap = vec![ScaledComplex::ZERO; d + 1];
            &mut heap[..]
        };
        for (b, &a) in buf.iter_mut().zip(&self.coeffs) {
            *b = ScaledComplex::new(a);
        }
        // Repeated synthetic division by (x - t): each remainder is the next Taylor coefficient.
        let mut len = d + 1;
        for slot in out.iter_mut().take(order + 1) {
            if len == 0 {
                *slot = ScaledComplex::ZERO;
                continue;
            }
            for i in (0..len - 1).rev() {
                buf[i] = buf[i] + buf[i + 1] * t;
            }
            *slot = buf[0];
            buf.copy_within(1..len, 0);
            len -= 1;
        }
    }

    /// Returns the conjugate monic polynomial `g(w) = s f((w - t)/s) + t` with `s^(d-1) = a_d`, `t = 0`.
    pub fn normalize_monic(&self) -> Result<Poly> {
        self.require_dynamical()?;
        let d = self.degree();
        let s = self.leading().powf(1.0 / (d as f64 - 1.0));
        let mut coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &a)| a * s.powi(1 - i as i32))
            .collect();
        coeffs[d] = Complex64::new(1.0, 0.0);
        let mut g = Poly::new(coeffs);
        let conj = Conjugacy {
            scale: s,
            translation: Complex64::new(0.0, 0.0),
        };
        // compose with whatever conjugacy produced self
        let prev = self.monic_conjugacy;
        g.monic_conjugacy = Conjugacy {
            scale: conj.scale * prev.scale,
            translation: conj.scale * prev.translation + conj.translation,
        };
        Ok(g)
    }

    /// All roots by Aberth–Ehrlich iteration, each listed once per multiplicity.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        aberth(&self.coeffs)
    }

    /// Roots grouped by multiplicity, clusters refined on the appropriate derivative.
    pub fn roots_with_multiplicity(&self) -> Result<Vec<(Complex64, usize)>> {
        let raw = self.roots()?;
        Ok(group_roots(self, raw))
    }

    /// Critical points of a degree `d >= 2` polynomial with multiplicity; they sum to `d - 1`.
    pub fn critical_points(&self) -> Result<Vec<(Complex64, usize)>> {
        self.require_dynamical()?;
        self.derivative().roots_with_multiplicity()
    }
}

fn escape_radius(coeffs: &[Complex64]) -> f64 {
    let d = coeffs.len() - 1;
    if d < 2 {
        return f64::INFINITY;
    }
    let lead = coeffs[d].norm();
    let mass: f64 = coeffs[..d].iter().map(|a| a.norm()).sum();
    1f64.max((2.0 + mass) / lead).max(2.0 * mass / lead)
}

const ABERTH_MAX_ITER: usize = 2000;

fn aberth(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = coeffs.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[d];
    if lead == Complex64::new(0.0, 0.0) {
        return Err(Error::RootSolve("zero leading coefficient".into()));
    }
    let p = Poly::new(coeffs.to_vec());
    // zero roots are exact
    let zeros = coeffs.iter().take_while(|a| a.norm() == 0.0).count();
    if zeros > 0 {
        let mut rest = aberth(&coeffs[zeros..])?;
        rest.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), zeros));
        return Ok(rest);
    }
    if d == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }
    // Cauchy-type radius for the starting circle
    let radius = coeffs[..d]
        .iter()
        .enumerate()
        .map(|(i, a)| (a.norm() / lead.norm()).powf(1.0 / (d - i) as f64))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..d)
        .map(|j| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / d as f64 + 0.4))
        .collect();
    let mut converged = vec![false; d];
    for _ in 0..ABERTH_MAX_ITER {
        let mut all = true;
        for i in 0..d {
            if converged[i] {
                continue;
            }
            let (pv, dpv) = p.eval_with_derivative(z[i]);
            if pv.norm() == 0.0 {
                converged[i] = true;
                continue;
            }
            let ratio = pv / dpv;
            let sum: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let mut step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !step.re.is_finite() || !step.im.is_finite() {
                step = ratio;
            }
            if !step.re.is_finite() || !step.im.is_finite() {
                // flat spot; nudge
                step = Complex64::new(1e-8 * (1.0 + z[i].norm()), 0.0);
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z[i].norm()) {
                converged[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    for &r in &z {
        let res = p.eval(r).norm();
        let scale = p.abs_scale(r);
        if !res.is_finite() || res > 1e-6 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::RootSolve(format!(
                "degree {d}: residual {res:e} at {r} (scale {scale:e}) after {ABERTH_MAX_ITER} iterations"
            )));
        }
    }
    Ok(z)
}

/// Newton iterations on `q` from `z`.
fn newton_refine(q: &Poly, mut z: Complex64, iters: usize) -> Complex64 {
    for _ in 0..iters {
        let (v, dv) = q.eval_with_derivative(z);
        if v.norm() == 0.0 || dv.norm() == 0.0 {
            break;
        }
        let step = v / dv;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= f64::EPSILON * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

fn group_roots(p: &Poly, raw: Vec<Complex64>) -> Vec<(Complex64, usize)> {
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for r in raw {
        match groups
            .iter_mut()
            .find(|g| (g[0] - r).norm() <= 1e-2 * (1.0 + r.norm()))
        {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    let mut out = Vec::new();
    for g in groups {
        let m = g.len();
        let mean = g.iter().sum::<Complex64>() / m as f64;
        if m == 1 {
            out.push((newton_refine(p, mean, 8), 1));
            continue;
        }
        let c = newton_refine(&p.nth_derivative(m - 1), mean, 50);
        let ok = (1..m).all(|j| {
            let q = p.nth_derivative(j - 1);
            q.eval(c).norm() <= 1e-10 * q.abs_scale(c).max(1.0)
        });
        if ok {
            out.push((c, m));
        } else {
            out.extend(g.into_iter().map(|r| (newton_refine(p, r, 8), 1)));
        }
    }
    out
}
