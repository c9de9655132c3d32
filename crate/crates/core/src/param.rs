//! Parameter space of `p_c(z) = z^2 + c`: the Green function of the Mandelbrot
//! set, parameter clouds of `(p_c^n)'(c) = λ(c)`, their potentials, the escape
//! estimate, and a one-dimensional slice of the cubic family.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{green_value, iterate_taylor, GreenValue, DEFAULT_GREEN_BUDGET};
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec, Rect};
use crate::measures::u_n_field;
use crate::poly::Poly;
use crate::roots::{default_search_box, solve_all, DerivativeProblem, RootCloud, Square};
use crate::scaled::ScaledComplex;

/// `g_M(c) = g_{p_c}(c)`.
pub fn mandelbrot_green(c: Complex64, tol: f64, budget: usize) -> GreenValue {
    green_value(&Poly::quadratic(c), c, tol, budget)
}

/// [`mandelbrot_green`] on a grid; the mask records certified escape.
pub fn mandelbrot_green_grid(grid: &GridSpec, tol: f64, budget: usize) -> GridField {
    let samples: Vec<GreenValue> = (0..grid.len())
        .into_par_iter()
        .map(|i| mandelbrot_green(grid.point_at(i), tol, budget))
        .collect();
    GridField {
        spec: *grid,
        values: samples.iter().map(|g| g.value).collect(),
        mask: samples.iter().map(|g| g.certified).collect(),
    }
}

/// `2^n prod_{k<n} p_c^k(c)`, the critical-value derivative `(p_c^n)'(c)` by the
/// product formula.
pub fn param_chain_product(c: Complex64, n: u32) -> ScaledComplex {
    let cs = ScaledComplex::new(c);
    let mut w = cs;
    let mut prod = ScaledComplex::ONE.mul_pow2(n as i64);
    for _ in 0..n {
        prod = prod * w;
        w = w * w + cs;
    }
    prod
}

/// Parameter cloud for `(p_c^n)'(c) = λ(c)` with `deg λ < 2^n - 1`: weight
/// `2^-n`, total mass `(2^n - 1) / 2^n`.
pub fn param_solve(n: u32, lambda: &Poly, search: Option<Square>) -> Result<RootCloud> {
    if n == 0 || n > 40 {
        return Err(Error::InvalidInput(format!("n must be in 1..=40, got {n}")));
    }
    if !lambda.is_zero() && lambda.degree() as u64 >= (1u64 << n) - 1 {
        return Err(Error::InvalidInput(format!(
            "deg λ = {} must be below 2^n - 1 = {}",
            lambda.degree(),
            (1u64 << n) - 1
        )));
    }
    let p = DerivativeProblem::param(n, lambda.clone())?;
    let search = search.unwrap_or_else(|| default_search_box(&p));
    solve_all(&p, &search)
}

/// `2^-n log|(p_c^n)'(c) - λ(c)|`; zeros masked.
pub fn param_potential_field(n: u32, lambda: &Poly, grid: &GridSpec) -> Result<GridField> {
    let p = DerivativeProblem::param(n, lambda.clone())?;
    Ok(u_n_field(&p, grid))
}

/// `2^-n log 2^n`: the gap between [`param_potential_field`] and the logarithmic
/// potential of the parameter cloud, which vanishes as `n` grows.
pub fn leading_coefficient_shift(n: u32) -> f64 {
    n as f64 * std::f64::consts::LN_2 / 2f64.powi(n as i32)
}

/// `|2^-n log|p_c^n(c)| - g_M(c)|`, summed exactly as the tail
/// `sum_{j>=n} 2^-(j+1) log|1 + c / w_j^2|` with `w_j = p_c^j(c)`.
pub fn escape_error(c: Complex64, n: u32) -> f64 {
    let cs = ScaledComplex::new(c);
    let mut w = cs;
    for _ in 0..n {
        w = w * w + cs;
    }
    let mut sum = 0.0;
    let mut j = n;
    loop {
        let w2 = w * w;
        let ratio = cs / w2;
        let ln_term = if ratio.ln_abs() < -1.0 {
            let u = ratio.to_complex();
            0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p()
        } else {
            (w2 + cs).ln_abs() - w2.ln_abs()
        };
        let term = ln_term * 2f64.powi(-(j as i32) - 1);
        sum += term;
        if ratio.ln_abs() < -700.0 || term.abs() <= 1e-17 * sum.abs() || j > n + 4000 {
            break;
        }
        w = w2 + cs;
        j += 1;
    }
    sum.abs()
}

/// Escape-rate constant per `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscapeEstimateReport {
    pub n_values: Vec<u32>,
    /// Largest `|2^-n log|p_c^n(c)| - g_M(c)|` over the samples, per `n`.
    pub max_error: Vec<f64>,
    /// `max_error * 2^n / n`.
    pub c_hat: Vec<f64>,
    /// `c_hat` at the largest `n` over `c_hat` at the smallest.
    pub growth_ratio: f64,
    pub samples: usize,
}

impl EscapeEstimateReport {
    /// No growth: the last constant is at most `limit` times the first.
    pub fn bounded(&self, limit: f64) -> bool {
        self.growth_ratio <= limit
    }
}

/// Empirical constant in `|2^-n log|p_c^n(c)| - g_M(c)| <= C n / 2^n`.
/// Every sample must have a certified `g_M >= min_green`.
pub fn escape_estimate_check(
    samples: &[Complex64],
    n_values: &[u32],
    min_green: f64,
    tol: f64,
) -> Result<EscapeEstimateReport> {
    if samples.is_empty() || n_values.is_empty() {
        return Err(Error::InvalidInput("need at least one sample and one n".into()));
    }
    for &c in samples {
        let g = mandelbrot_green(c, tol, DEFAULT_GREEN_BUDGET);
        if !g.certified || g.value < min_green {
            return Err(Error::InvalidInput(format!(
                "parameter {c} has g_M = {} below {min_green}",
                g.value
            )));
        }
    }
    let mut n_sorted = n_values.to_vec();
    n_sorted.sort_unstable();
    n_sorted.dedup();
    let max_error: Vec<f64> = n_sorted
        .iter()
        .map(|&n| samples.iter().map(|&c| escape_error(c, n)).fold(0.0, f64::max))
        .collect();
    let c_hat: Vec<f64> = n_sorted
        .iter()
        .zip(&max_error)
        .map(|(&n, e)| e * 2f64.powi(n as i32) / n as f64)
        .collect();
    let growth_ratio = c_hat[c_hat.len() - 1] / c_hat[0];
    Ok(EscapeEstimateReport {
        n_values: n_sorted,
        max_error,
        c_hat,
        growth_ratio,
        samples: samples.len(),
    })
}

/// Uniform draws from `rect` kept only when `g_M >= min_green` is certified.
pub fn sample_escaped_parameters(rect: Rect, count: usize, min_green: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c = Complex64::new(
            rng.random_range(rect.re_min..=rect.re_max),
            rng.random_range(rect.im_min..=rect.im_max),
        );
        let g = mandelbrot_green(c, 1e-12, DEFAULT_GREEN_BUDGET);
        if g.certified && g.value >= min_green {
            out.push(c);
        }
    }
    out
}

/// Complex line `(c, a) = base + t * direction` in the cubic family
/// `P_{c,a}(z) = z^3/3 - (c/2) z^2 + a^3`, whose critical points are `0` and `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CubicSliceSpec {
    pub base: [Complex64; 2],
    pub direction: [Complex64; 2],
    /// 0 marks the critical point `0`, 1 marks `c`.
    pub critical_index: usize,
    pub n: u32,
    pub lambda: Complex64,
}

impl CubicSliceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.direction.iter().all(|d| d.norm() == 0.0) {
            return Err(Error::InvalidInput("slice direction must be nonzero".into()));
        }
        if self.critical_index > 1 {
            return Err(Error::InvalidInput(format!(
                "critical index must be 0 or 1, got {}",
                self.critical_index
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        Ok(())
    }

    pub fn parameters(&self, t: Complex64) -> (Complex64, Complex64) {
        (self.base[0] + t * self.direction[0], self.base[1] + t * self.direction[1])
    }
}

pub fn cubic_family(c: Complex64, a: Complex64) -> Poly {
    Poly::new(vec![a * a * a, Complex64::new(0.0, 0.0), -0.5 * c, Complex64::new(1.0 / 3.0, 0.0)])
}

/// Result of a cubic slice run; distances are `None` when nothing escapes.
#[derive(Clone, Debug)]
pub struct CubicSliceReport {
    /// `3^-n log|(P^n)'(P(c_i)) - λ|` over the slice grid.
    pub field: GridField,
    /// `g(c_i)` where the marked critical orbit certifiably escapes.
    pub critical_green: GridField,
    pub escaped_points: usize,
    /// Sup distance to `g(c_i)`.
    pub sup_to_critical: Option<f64>,
    /// Sup distance to `g(P(c_i)) = 3 g(c_i)`.
    pub sup_to_critical_value: Option<f64>,
    /// `"critical"` or `"critical_value"`, whichever candidate is closer.
    pub closer: Option<&'static str>,
}

/// Field of the marked critical value on a slice and its distance to both
/// candidate limit potentials, over points where `g(c_i) >= escape_threshold`.
pub fn cubic_slice_experiment(
    spec: &CubicSliceSpec,
    grid: &GridSpec,
    escape_threshold: f64,
    tol: f64,
) -> Result<CubicSliceReport> {
    spec.validate()?;
    let n = spec.n as usize;
    let ln3 = 3f64.ln();
    let rows: Vec<(Option<f64>, Option<f64>)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (c, a) = spec.parameters(grid.point_at(i));
            let f = cubic_family(c, a);
            let crit = if spec.critical_index == 0 { Complex64::new(0.0, 0.0) } else { c };
            let v = f.eval(crit);
            let main = iterate_taylor(&f, v, n, 1)[1];
            let g = main - ScaledComplex::new(spec.lambda);
            let field = (!g.is_zero()).then(|| g.ln_abs() * (-(n as f64) * ln3).exp());
            let green = green_value(&f, crit, tol, DEFAULT_GREEN_BUDGET);
            let green = (green.certified && green.value >= escape_threshold).then_some(green.value);
            (field, green)
        })
        .collect();
    let to_field = |vals: Vec<Option<f64>>| {
        let mask: Vec<bool> = vals.iter().map(|v| v.is_some_and(f64::is_finite)).collect();
        let values = vals.iter().zip(&mask).map(|(v, &m)| if m { v.unwrap() } else { f64::NAN }).collect();
        GridField { spec: *grid, values, mask }
    };
    let field = to_field(rows.iter().map(|r| r.0).collect());
    let critical_green = to_field(rows.iter().map(|r| r.1).collect());
    let mut escaped = 0;
    let mut sup_c: f64 = 0.0;
    let mut sup_v: f64 = 0.0;
    for i in 0..grid.len() {
        if field.mask[i] && critical_green.mask[i] {
            escaped += 1;
            let g = critical_green.values[i];
            sup_c = sup_c.max((field.values[i] - g).abs());
            sup_v = sup_v.max((field.values[i] - 3.0 * g).abs());
        }
    }
    let (sup_to_critical, sup_to_critical_value, closer) = if escaped == 0 {
        (None, None, None)
    } else {
        let closer = if sup_v <= sup_c { "critical_value" } else { "critical" };
        (Some(sup_c), Some(sup_v), Some(closer))
    };
    Ok(CubicSliceReport {
        field,
        critical_green,
        escaped_points: escaped,
        sup_to_critical,
        sup_to_critical_value,
        closer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::orbit_jet;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn green_examples() {
        let g = mandelbrot_green(c(0.0, 0.0), 1e-12, 2000);
        assert!(!g.certified && g.value == 0.0);
        let a = mandelbrot_green(c(-3.0, 0.0), 1e-9, 2000);
        assert!(a.certified && a.value > 0.0);
        let c10 = Complex64::from_polar(10.0, 0.7);
        let g10 = mandelbrot_green(c10, 1e-12, 2000);
        assert!((g10.value - 10f64.ln()).abs() <= 2.0 / 10.0);
    }

    #[test]
    fn green_budget_self_consistency() {
        // read the value off four iterates later by hand
        let cc = c(-3.0, 0.0);
        let g = mandelbrot_green(cc, 1e-9, 2000);
        let f = Poly::quadratic(cc);
        let mut w = ScaledComplex::new(cc);
        for _ in 0..g.iterations + 4 {
            w = f.eval_scaled(w);
        }
        // g_M(c) = g(c), and w is f^(N+4)(c)
        let later = w.ln_abs() * 2f64.powi(-(g.iterations as i32) - 4);
        assert!((g.value - later).abs() <= 1e-9);
    }

    #[test]
    fn chain_product_examples() {
        assert_eq!(param_chain_product(c(1.0, 0.0), 2).to_complex(), c(8.0, 0.0));
        assert_eq!(param_chain_product(c(0.0, 1.0), 1).to_complex(), c(0.0, 2.0));
        assert!(param_chain_product(c(-1.0, 0.0), 3).is_zero());
    }

    #[test]
    fn chain_product_matches_phase_jet() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let cc = Complex64::from_polar(2.0 * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>());
            for n in [1u32, 5, 12, 20] {
                let product = param_chain_product(cc, n);
                let jet = orbit_jet(&Poly::quadratic(cc), cc, n as usize, 1).entry(n as usize, 1);
                assert!(product.relative_distance(&jet) <= 1e-10, "c = {cc}, n = {n}");
            }
        }
    }

    #[test]
    fn param_solve_examples() {
        let cloud = param_solve(1, &Poly::constant(c(3.0, 0.0)), None).unwrap();
        assert_eq!(cloud.points.len(), 1);
        assert!((cloud.points[0].location - 1.5).norm() < 1e-14);
        assert_eq!(cloud.total_mass, 0.5);
        assert!(param_solve(2, &Poly::from_real(&[0.0, 0.0, 0.0, 1.0]), None).is_err());
    }

    #[test]
    fn potential_examples() {
        let field = param_potential_field(1, &Poly::constant(c(0.0, 0.0)), &GridSpec::new(Rect::square(c(2.0, 0.0), 0.0), 1, 1)).unwrap();
        assert!((field.values[0] - 2f64.ln()).abs() < 1e-15);
        let lam = Poly::constant(c(1.0, 0.0));
        let at = GridSpec::new(Rect::square(c(-3.0, 0.0), 0.0), 1, 1);
        let u = param_potential_field(14, &lam, &at).unwrap().values[0];
        let g = mandelbrot_green(c(-3.0, 0.0), 1e-12, 2000).value;
        assert!((u - g).abs() <= 0.01);
    }

    #[test]
    fn escape_error_matches_direct_difference() {
        for &(cc, n) in &[(c(-3.0, 0.0), 3u32), (c(0.5, 0.6), 6), (c(1.0, 1.0), 4)] {
            let f = Poly::quadratic(cc);
            let mut w = ScaledComplex::new(cc);
            for _ in 0..n {
                w = f.eval_scaled(w);
            }
            let direct = (w.ln_abs() * 2f64.powi(-(n as i32)) - mandelbrot_green(cc, 1e-15, 5000).value).abs();
            let tail = escape_error(cc, n);
            assert!((direct - tail).abs() <= 1e-12 * (1.0 + direct), "{cc} {n}: {direct} vs {tail}");
        }
    }

    #[test]
    fn escape_estimate_examples() {
        let r = escape_estimate_check(&[c(-3.0, 0.0)], &(5..=12).collect::<Vec<_>>(), 0.05, 1e-12).unwrap();
        assert!(r.c_hat.iter().all(|x| x.is_finite()));
        assert!(r.c_hat.windows(2).skip(3).all(|w| w[1] <= w[0]));
        assert!(escape_error(Complex64::from_polar(10.0, 1.0), 3) <= 1e-2);
        assert!(escape_estimate_check(&[c(0.0, 0.0)], &[5], 0.05, 1e-12).is_err());
    }

    #[test]
    fn escaped_parameter_sampler() {
        let s = sample_escaped_parameters(Rect::new(-2.5, 1.5, -2.0, 2.0), 20, 0.05, 4);
        assert_eq!(s.len(), 20);
        assert_eq!(s, sample_escaped_parameters(Rect::new(-2.5, 1.5, -2.0, 2.0), 20, 0.05, 4));
        assert!(s.iter().all(|&cc| mandelbrot_green(cc, 1e-12, 2000).value >= 0.05));
    }

    #[test]
    fn cubic_family_has_marked_critical_points() {
        let f = cubic_family(c(0.7, -0.2), c(0.3, 0.4));
        let fp = f.derivative();
        assert!(fp.eval(c(0.0, 0.0)).norm() < 1e-15);
        assert!(fp.eval(c(0.7, -0.2)).norm() < 1e-15);
    }

    #[test]
    fn cubic_slice_n1_by_hand() {
        let spec = CubicSliceSpec {
            base: [c(2.0, 0.0), c(1.5, 0.0)],
            direction: [c(1.0, 0.0), c(0.0, 0.0)],
            critical_index: 1,
            n: 1,
            lambda: c(0.0, 0.0),
        };
        let grid = GridSpec::new(Rect::square(c(0.0, 0.0), 0.0), 1, 1);
        let r = cubic_slice_experiment(&spec, &grid, 0.0, 1e-12).unwrap();
        let f = cubic_family(c(2.0, 0.0), c(1.5, 0.0));
        let expected = f.derivative().eval(f.eval(c(2.0, 0.0))).norm().ln() / 3.0;
        assert!((r.field.values[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn cubic_slice_inside_connectedness_locus_is_empty() {
        // tiny parameters: both critical orbits stay near 0
        let spec = CubicSliceSpec {
            base: [c(0.0, 0.0), c(0.0, 0.0)],
            direction: [c(0.01, 0.0), c(0.01, 0.0)],
            critical_index: 0,
            n: 6,
            lambda: c(1.0, 0.0),
        };
        let grid = GridSpec::new(Rect::new(-1.0, 1.0, -1.0, 1.0), 5, 5);
        let r = cubic_slice_experiment(&spec, &grid, 0.05, 1e-10).unwrap();
        assert_eq!(r.escaped_points, 0);
        assert!(r.closer.is_none() && r.sup_to_critical.is_none());
    }

    #[test]
    fn cubic_slice_prefers_critical_value() {
        let spec = CubicSliceSpec {
            base: [c(3.0, 0.0), c(1.2, 0.3)],
            direction: [c(0.5, 0.0), c(0.0, 0.2)],
            critical_index: 1,
            n: 10,
            lambda: c(1.0, 0.0),
        };
        let grid = GridSpec::new(Rect::new(-1.0, 1.0, -1.0, 1.0), 9, 9);
        let r = cubic_slice_experiment(&spec, &grid, 0.05, 1e-12).unwrap();
        assert!(r.escaped_points > 0);
        assert_eq!(r.closer, Some("critical_value"));
        let (a, b) = (r.sup_to_critical.unwrap(), r.sup_to_critical_value.unwrap());
        assert!(a > 10.0 * b, "{a} vs {b}");
    }
}
