//! Empirical measures and their potentials: root clouds, Brolin backward-orbit
//! samples, PB-averaged potentials, and the discrepancies used to compare them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::iterate_taylor;
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec, Rect};
use crate::poly::Poly;
use crate::roots::{DerivativeProblem, RootCloud};
use crate::scaled::ScaledComplex;

/// `sum weight * multiplicity * log|w - z_i|`; `-inf` if `w` is an atom.
pub fn log_potential(m: &RootCloud, w: Complex64) -> f64 {
    let mut total = 0.0;
    for (z, weight) in m.atoms() {
        let dist = (w - z).norm();
        if dist == 0.0 {
            return f64::NEG_INFINITY;
        }
        total += weight * dist.ln();
    }
    total
}

/// Logarithmic potential of a cloud sampled on a grid; atoms are masked.
pub fn log_potential_grid(m: &RootCloud, grid: &GridSpec) -> GridField {
    grid.evaluate(|w| Some(log_potential(m, w)))
}

/// Potential of the normalized counting measure on the zeros of `G`, from `G` alone.
///
/// Phase: `(log|G| - log|L|) / (d^n - k)` with `L` the leading coefficient of
/// `(f^n)^(k)`. Parameter: `2^-n log|G|` with no leading-coefficient shift.
/// `None` at zeros of `G`.
pub fn potential_value(p: &DerivativeProblem, z: Complex64) -> Option<f64> {
    let g = p.eval(z).value;
    if g.is_zero() {
        return None;
    }
    let v = match p {
        DerivativeProblem::Phase { .. } => {
            (g.ln_abs() - p.ln_leading_coefficient()) / p.expected_count() as f64
        }
        DerivativeProblem::Param { .. } => g.ln_abs() / p.normalization() as f64,
    };
    Some(v)
}

/// [`potential_value`] on every grid point.
pub fn u_n_field(p: &DerivativeProblem, grid: &GridSpec) -> GridField {
    grid.evaluate(|z| potential_value(p, z))
}

/// Uniform sampling of `λ` on the disk `|λ| <= radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiskSampler {
    pub radius: f64,
    pub count: usize,
    pub seed: u64,
}

impl DiskSampler {
    pub fn samples(&self) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                let r = self.radius * rng.random::<f64>().sqrt();
                let t = 2.0 * PI * rng.random::<f64>();
                Complex64::from_polar(r, t)
            })
            .collect()
    }
}

/// Monte Carlo average of `λ`-potentials with its per-point standard error.
#[derive(Clone, Debug)]
pub struct PbAverage {
    pub mean: GridField,
    /// Sample standard deviation over `λ` divided by `sqrt(M)`.
    pub std_error: GridField,
    pub lambdas: Vec<Complex64>,
}

impl PbAverage {
    /// Largest standard error over valid points where `threshold_field >= threshold`.
    pub fn max_std_error(&self, threshold_field: &GridField, threshold: f64) -> f64 {
        (0..self.std_error.values.len())
            .filter(|&i| {
                self.std_error.mask[i] && threshold_field.mask[i] && threshold_field.values[i] >= threshold
            })
            .map(|i| self.std_error.values[i])
            .fold(0.0, f64::max)
    }
}

/// Average over `λ` drawn from `sampler` of the first-derivative potential
/// `(log|(f^n)' - λ| - log|L|) / (d^n - 1)`, normalized as in [`u_n_field`].
pub fn pb_average_field(f: &Poly, n: u32, sampler: &DiskSampler, grid: &GridSpec) -> Result<PbAverage> {
    if sampler.radius.is_nan() || sampler.radius <= 0.0 || sampler.count == 0 {
        return Err(Error::InvalidInput(
            "λ sampler needs a positive radius and at least one sample".into(),
        ));
    }
    let shape = DerivativeProblem::phase(f.clone(), n, 1, Complex64::new(0.0, 0.0))?;
    let ln_lead = shape.ln_leading_coefficient();
    let divisor = shape.expected_count() as f64;
    let lambdas = sampler.samples();
    let m = lambdas.len() as f64;
    let stats: Vec<Option<(f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let z = grid.point_at(idx);
            let main = iterate_taylor(f, z, n as usize, 1)[1];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for &lam in &lambdas {
                let g = main - ScaledComplex::new(lam);
                if g.is_zero() {
                    return None;
                }
                let v = (g.ln_abs() - ln_lead) / divisor;
                sum += v;
                sum_sq += v * v;
            }
            let mean = sum / m;
            let se = if lambdas.len() > 1 {
                let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
                (var / m).sqrt()
            } else {
                0.0
            };
            Some((mean, se))
        })
        .collect();
    let mask: Vec<bool> = stats.iter().map(|s| s.is_some_and(|(v, e)| v.is_finite() && e.is_finite())).collect();
    let pick = |sel: fn(&(f64, f64)) -> f64| -> Vec<f64> {
        stats
            .iter()
            .zip(&mask)
            .map(|(s, &ok)| if ok { sel(s.as_ref().unwrap()) } else { f64::NAN })
            .collect()
    };
    Ok(PbAverage {
        mean: GridField::new(*grid, pick(|s| s.0), mask.clone())?,
        std_error: GridField::new(*grid, pick(|s| s.1), mask)?,
        lambdas,
    })
}

const BROLIN_RETRIES: u64 = 4;

/// The finite totally invariant point of `f`, if `f` is affinely conjugate to `z^d`.
fn exceptional_point(f: &Poly) -> Result<Option<Complex64>> {
    let crit = f.critical_points()?;
    if crit.len() != 1 {
        return Ok(None);
    }
    let c = crit[0].0;
    Ok(((f.eval(c) - c).norm() <= 1e-12 * (1.0 + c.norm())).then_some(c))
}

fn preimages(f: &Poly, x: Complex64) -> Result<Vec<Complex64>> {
    let a = f.coeffs();
    if f.degree() == 2 {
        let disc = (a[1] * a[1] - 4.0 * a[2] * (a[0] - x)).sqrt();
        let q = if (a[1].conj() * disc).re >= 0.0 {
            -0.5 * (a[1] + disc)
        } else {
            -0.5 * (a[1] - disc)
        };
        // q = 0 only if b = disc = 0, i.e. x is the critical value of a z^2 + c
        if q == Complex64::new(0.0, 0.0) {
            let w = -a[1] / (2.0 * a[2]);
            return Ok(vec![w, w]);
        }
        return Ok(vec![q / a[2], (a[0] - x) / q]);
    }
    let mut shifted = a.to_vec();
    shifted[0] -= x;
    Poly::new(shifted).roots()
}

/// Endpoints of `count` random backward orbits of length `depth`, each step
/// choosing one of the `d` preimages uniformly. Unit-weight cloud of mass 1.
///
/// Orbit `i` draws from its own ChaCha stream, so the sample does not depend
/// on scheduling. Starting points far outside the escape disk and the
/// exceptional point of a conjugate of `z^d` are rejected.
pub fn brolin_sample(f: &Poly, z_start: Complex64, depth: usize, count: usize, seed: u64) -> Result<RootCloud> {
    f.require_dynamical()?;
    if z_start.norm() > 4.0 * f.escape_radius() {
        return Err(Error::InvalidInput(format!(
            "start point {z_start} lies beyond four escape radii ({})",
            4.0 * f.escape_radius()
        )));
    }
    if let Some(e) = exceptional_point(f)? {
        if (z_start - e).norm() <= 1e-12 * (1.0 + e.norm()) {
            return Err(Error::InvalidInput(format!(
                "start point {z_start} is the exceptional point of the map"
            )));
        }
    }
    let d = f.degree();
    let points: Vec<Complex64> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut last = None;
            for attempt in 0..BROLIN_RETRIES {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i + (attempt << 40));
                let mut z = z_start;
                let mut ok = true;
                for _ in 0..depth {
                    match preimages(f, z) {
                        Ok(pre) if pre.len() == d => z = pre[rng.random_range(0..d)],
                        Ok(_) => {
                            ok = false;
                            break;
                        }
                        Err(e) => {
                            last = Some(e);
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && z.is_finite() {
                    return Ok(z);
                }
            }
            Err(last.unwrap_or_else(|| Error::RootSolve(format!("backward orbit {i} failed"))))
        })
        .collect::<Result<_>>()?;
    Ok(RootCloud::uniform(points))
}

/// Sup and mean absolute difference of two fields over a thresholded region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Discrepancy {
    pub sup: f64,
    pub l1: f64,
    /// Number of grid points compared.
    pub count: usize,
}

/// Compares `a` and `b` where `threshold_field >= threshold` and both are valid.
pub fn discrepancy_potential(
    a: &GridField,
    b: &GridField,
    threshold_field: &GridField,
    threshold: f64,
) -> Result<Discrepancy> {
    if a.spec != b.spec || a.spec != threshold_field.spec {
        return Err(Error::GridMismatch(format!(
            "fields on {:?}, {:?} and {:?}",
            a.spec, b.spec, threshold_field.spec
        )));
    }
    let mut sup: f64 = 0.0;
    let mut sum = 0.0;
    let mut count = 0;
    for i in 0..a.values.len() {
        if a.mask[i] && b.mask[i] && threshold_field.mask[i] && threshold_field.values[i] >= threshold {
            let diff = (a.values[i] - b.values[i]).abs();
            sup = sup.max(diff);
            sum += diff;
            count += 1;
        }
    }
    Ok(Discrepancy {
        sup,
        l1: if count > 0 { sum / count as f64 } else { 0.0 },
        count,
    })
}

/// Gaussian bump `exp(-|z - center|^2 / width^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bump {
    pub center: Complex64,
    pub width: f64,
}

impl Bump {
    pub fn eval(&self, z: Complex64) -> f64 {
        (-(z - self.center).norm_sqr() / (self.width * self.width)).exp()
    }
}

/// Smooth test functions probing weak convergence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunctionSet {
    pub bumps: Vec<Bump>,
}

impl TestFunctionSet {
    pub fn new(bumps: Vec<Bump>) -> Result<Self> {
        if bumps.iter().any(|b| b.width.is_nan() || b.width <= 0.0) {
            return Err(Error::InvalidInput("bump widths must be positive".into()));
        }
        Ok(TestFunctionSet { bumps })
    }

    /// Bumps centered on an `nx x ny` grid over `rect`, width twice the larger spacing.
    pub fn grid(rect: Rect, nx: usize, ny: usize) -> Self {
        let spec = GridSpec::new(rect, nx, ny);
        let (sx, sy) = spec.spacing();
        let width = 2.0 * sx.max(sy);
        let width = if width > 0.0 { width } else { rect.half_width().max(1.0) };
        TestFunctionSet {
            bumps: (0..spec.len())
                .map(|i| Bump {
                    center: spec.point_at(i),
                    width,
                })
                .collect(),
        }
    }

    pub fn grid_5x5(rect: Rect) -> Self {
        Self::grid(rect, 5, 5)
    }

    /// `<m, φ>` for every bump.
    pub fn pair(&self, m: &RootCloud) -> Vec<f64> {
        self.bumps
            .iter()
            .map(|b| m.atoms().map(|(z, w)| w * b.eval(z)).sum())
            .collect()
    }

    /// Pairing of a unit-weight sample with its Monte Carlo standard error.
    pub fn pair_with_error(&self, m: &RootCloud) -> Vec<(f64, f64)> {
        let count = m.points.len() as f64;
        self.bumps
            .iter()
            .map(|b| {
                let values: Vec<f64> = m.points.iter().map(|p| b.eval(p.location)).collect();
                let mean = values.iter().sum::<f64>() / count;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
                (mean * m.total_mass, (var / count).sqrt() * m.total_mass)
            })
            .collect()
    }
}

/// `|<a - b, φ>|` for every test function.
pub fn weak_pairing(a: &RootCloud, b: &RootCloud, t: &TestFunctionSet) -> Vec<f64> {
    t.pair(a)
        .into_iter()
        .zip(t.pair(b))
        .map(|(x, y)| (x - y).abs())
        .collect()
}

/// Star discrepancy of the angles of `m` about `center`, weighted by mass,
/// against the uniform law on `[0, 2π)`.
pub fn angular_discrepancy(m: &RootCloud, center: Complex64) -> Result<f64> {
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(m.points.len());
    for (z, w) in m.atoms() {
        if z == center {
            return Err(Error::InvalidInput("a point coincides with the center".into()));
        }
        let t = (z - center).arg().rem_euclid(2.0 * PI) / (2.0 * PI);
        atoms.push((if t >= 1.0 { 0.0 } else { t }, w));
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    if atoms.is_empty() || total <= 0.0 {
        return Ok(0.0);
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut before = 0.0;
    let mut worst: f64 = 0.0;
    for (x, w) in atoms {
        let after = before + w / total;
        worst = worst.max(after - x).max(x - before);
        before = after;
    }
    Ok(worst)
}

fn stencil(field: &GridField, combine: impl Fn(&dyn Fn(i64, i64) -> f64) -> f64) -> GridField {
    let spec = field.spec;
    let (nx, ny) = (spec.nx as i64, spec.ny as i64);
    let mut values = vec![f64::NAN; spec.len()];
    let mut mask = vec![false; spec.len()];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let ok = (-1..=1).all(|dj| (-1..=1).all(|di| field.mask[((j + dj) * nx + i + di) as usize]));
            if !ok {
                continue;
            }
            let at = |di: i64, dj: i64| field.values[((j + dj) * nx + i + di) as usize];
            let idx = (j * nx + i) as usize;
            values[idx] = combine(&at);
            mask[idx] = true;
        }
    }
    GridField { spec, values, mask }
}

/// Five-point Laplacian in grid units (not divided by the squared spacing),
/// valid where the full 3x3 neighborhood is valid.
pub fn discrete_laplacian(field: &GridField) -> GridField {
    stencil(field, |u| u(1, 0) + u(-1, 0) + u(0, 1) + u(0, -1) - 4.0 * u(0, 0))
}

/// Nine-point mean `(4 * orthogonal + diagonal) / 20` minus the center value.
/// Nonnegative up to rounding for subharmonic fields on square grids.
pub fn mean_value_defect(field: &GridField) -> GridField {
    stencil(field, |u| {
        let orth = u(1, 0) + u(-1, 0) + u(0, 1) + u(0, -1);
        let diag = u(1, 1) + u(-1, 1) + u(1, -1) + u(-1, -1);
        (4.0 * orth + diag) / 20.0 - u(0, 0)
    })
}
