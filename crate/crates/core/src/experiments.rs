//! Verification experiments. Each returns a self-contained report: the
//! parameter block re-runs it, and every verdict names a declared threshold.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::{
    classify_critical_orbits, green_grid, orbit_jet, CriticalFate, DEFAULT_GREEN_BUDGET,
};
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec, Rect};
use crate::measures::{
    angular_discrepancy, brolin_sample, discrepancy_potential, pb_average_field, u_n_field,
    DiskSampler, TestFunctionSet,
};
use crate::param::{
    cubic_slice_experiment, escape_estimate_check, leading_coefficient_shift, mandelbrot_green_grid,
    param_potential_field, param_solve, sample_escaped_parameters, CubicSliceSpec,
};
use crate::poly::Poly;
use crate::roots::{solve, solve_all, DerivativeProblem, RootCloud, Square};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Equal,
}

/// A metric checked against a named threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub metric: String,
    pub comparison: Comparison,
    pub threshold: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    /// False when a precondition of the experiment does not hold.
    pub applicable: bool,
    pub parameters: Value,
    pub thresholds: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub details: Value,
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    /// Starts a report with `defaults` as thresholds, then applies
    /// `overrides`; an override for an undeclared threshold is rejected.
    pub fn new(
        id: &str,
        parameters: Value,
        defaults: &[(&str, f64)],
        overrides: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let mut thresholds: BTreeMap<String, f64> =
            defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in overrides {
            match thresholds.get_mut(k) {
                Some(slot) => *slot = *v,
                None => {
                    return Err(Error::InvalidInput(format!(
                        "unknown threshold `{k}` for {id}; declared: {:?}",
                        thresholds.keys().collect::<Vec<_>>()
                    )))
                }
            }
        }
        Ok(ExperimentReport {
            id: id.to_string(),
            applicable: true,
            parameters,
            thresholds,
            metrics: BTreeMap::new(),
            verdicts: Vec::new(),
            series: BTreeMap::new(),
            details: Value::Null,
            artifacts: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    /// Records a verdict on an existing metric. Panics if the metric or the
    /// threshold is missing: that is a bug in the experiment, not in the data.
    pub fn check(&mut self, metric: &str, comparison: Comparison, threshold: &str) {
        let value = self.metrics[metric];
        let bound = self.thresholds[threshold];
        let passed = match comparison {
            Comparison::AtMost => value <= bound,
            Comparison::AtLeast => value >= bound,
            Comparison::Equal => value == bound,
        };
        self.verdicts.push(Verdict {
            metric: metric.to_string(),
            comparison,
            threshold: threshold.to_string(),
            passed,
        });
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failed_verdicts(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.passed).collect()
    }
}

/// A report plus the point clouds and fields it was computed from.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub clouds: Vec<(String, RootCloud)>,
    pub fields: Vec<(String, GridField)>,
}

impl Outcome {
    fn report_only(report: ExperimentReport) -> Self {
        Outcome {
            report,
            clouds: Vec::new(),
            fields: Vec::new(),
        }
    }
}

fn c(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn poly_json(f: &Poly) -> Value {
    Value::Array(f.coeffs().iter().map(|&z| c(z)).collect())
}

fn rect_json(r: &Rect) -> Value {
    json!([r.re_min, r.re_max, r.im_min, r.im_max])
}

fn grid_json(g: &GridSpec) -> Value {
    json!({ "rect": rect_json(&g.rect), "nx": g.nx, "ny": g.ny })
}

/// `(f^n)'` at `z0`, nudged off a critical orbit if it vanishes there.
fn generic_derivative(f: &Poly, n: u32, z0: Complex64) -> (Complex64, Complex64, usize) {
    let mut z = z0;
    for attempt in 0..16 {
        let d = orbit_jet(f, z, n as usize, 1).entry(n as usize, 1).to_complex();
        if d.norm() > 0.0 && d.is_finite() {
            return (z, d, attempt);
        }
        z = z0 + Complex64::from_polar(1e-6 * (1.0 + z0.norm()), 2.399963 * (attempt + 1) as f64);
    }
    (z, Complex64::new(0.0, 0.0), 16)
}

/// Intersection counts behind the tangent-map degree identity
/// `(F^n)^*[u = const] = (d^n - 1)[critical fiber] + [u = const]`: the fiber
/// over a generic `z0` meets `{(f^n)'(z) u = u0}` once, and the line
/// `{u = u1}` meets it in `d^n - 1` points counted with multiplicity.
pub fn cohomology_count(
    f: &Poly,
    n: u32,
    u0: Complex64,
    z0: Complex64,
    u1: Complex64,
    overrides: &BTreeMap<String, f64>,
) -> Result<ExperimentReport> {
    f.require_dynamical()?;
    if u0.norm() == 0.0 || u1.norm() == 0.0 {
        return Err(Error::InvalidInput("u0 and u1 must be nonzero".into()));
    }
    let d = f.degree() as u64;
    let expected = d.pow(n) - 1;
    let mut report = ExperimentReport::new(
        "cohomology",
        json!({ "poly": poly_json(f), "n": n, "u0": c(u0), "z0": c(z0), "u1": c(u1) }),
        &[("fiber_count", 1.0), ("hypersurface_count", expected as f64)],
        overrides,
    )?;

    let (z_used, deriv, jitters) = generic_derivative(f, n, z0);
    if jitters > 0 {
        report.notes.push(format!("z0 moved to {z_used} after {jitters} jitter(s)"));
    }
    // (f^n)'(z0) u - u0 as a polynomial in u
    let fiber = Poly::new(vec![-u0, deriv]);
    let fiber_count = if deriv.norm() > 0.0 {
        fiber.roots_with_multiplicity()?.iter().map(|r| r.1).sum::<usize>()
    } else {
        0
    };
    report.metric("fiber_count", fiber_count as f64);
    report.metric("fiber_derivative_abs", deriv.norm());
    if fiber_count == 1 {
        let u = u0 / deriv;
        report.details = json!({ "fiber_solution": c(u), "z0_used": c(z_used) });
    }
    report.check("fiber_count", Comparison::Equal, "fiber_count");

    let p = DerivativeProblem::phase(f.clone(), n, 1, u0 / u1)?;
    let cloud = solve(&p)?;
    report.metric("hypersurface_count", cloud.total_multiplicity as f64);
    report.metric("hypersurface_distinct", cloud.points.len() as f64);
    report.metric("max_residual", cloud.max_residual());
    report.check("hypersurface_count", Comparison::Equal, "hypersurface_count");
    Ok(report)
}

/// Leading factor `D` of `(f^n)'(z) = D z^(d^n - 1)` for `f = z^d`.
pub fn power_map_factor(d: u32, n: u32) -> f64 {
    (d as f64).powi(n as i32)
}

/// Checks [`power_map_factor`] against the expanded iterate: the derivative
/// must be the single monomial `D z^(d^n - 1)`.
pub fn power_map_factor_matches_expansion(d: u32, n: u32) -> bool {
    let deriv = Poly::power(d as usize).iterate_expanded(n).derivative();
    let top = deriv.degree();
    top == (d as usize).pow(n) - 1
        && deriv.coeffs()[..top].iter().all(|a| a.norm() == 0.0)
        && (deriv.leading() - power_map_factor(d, n)).norm() == 0.0
}

/// `(f^n)'(z) = λ` for `f = z^d`: all roots on the circle
/// `|z| = (|λ| / d^n)^(1 / (d^n - 1))`, equally spaced.
pub fn power_map_check(d: u32, n: u32, lambda: Complex64, overrides: &BTreeMap<String, f64>) -> Result<Outcome> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("degree must be at least 2, got {d}")));
    }
    if lambda.norm() == 0.0 {
        return Err(Error::InvalidInput("λ must be nonzero".into()));
    }
    let count = (d as u64).pow(n) - 1;
    let mut report = ExperimentReport::new(
        "power-check",
        json!({ "d": d, "n": n, "lambda": c(lambda) }),
        &[
            ("count", count as f64),
            ("max_radial_deviation", 1e-9),
            ("max_angular_discrepancy", 1.0 / count as f64 + 1e-9),
        ],
        overrides,
    )?;
    let oracle_ok = (1..=n.min(3)).all(|m| power_map_factor_matches_expansion(d, m));
    report.metric("factor_matches_expansion", if oracle_ok { 1.0 } else { 0.0 });
    report.thresholds.insert("factor_matches_expansion".into(), 1.0);
    report.check("factor_matches_expansion", Comparison::Equal, "factor_matches_expansion");
    if !oracle_ok {
        return Ok(Outcome::report_only(report));
    }
    let radius = (lambda.norm() / power_map_factor(d, n)).powf(1.0 / count as f64);
    report.metric("radius", radius);

    let p = DerivativeProblem::phase(Poly::power(d as usize), n, 1, lambda)?;
    let cloud = solve(&p)?;
    let deviation = cloud
        .points
        .iter()
        .map(|pt| (pt.location.norm() - radius).abs())
        .fold(0.0, f64::max);
    report.metric("count", cloud.total_multiplicity as f64);
    report.metric("max_radial_deviation", deviation);
    report.metric("max_angular_discrepancy", angular_discrepancy(&cloud, Complex64::new(0.0, 0.0))?);
    report.metric("max_residual", cloud.max_residual());
    report.check("count", Comparison::Equal, "count");
    report.check("max_radial_deviation", Comparison::AtMost, "max_radial_deviation");
    report.check("max_angular_discrepancy", Comparison::AtMost, "max_angular_discrepancy");
    Ok(Outcome {
        report,
        clouds: vec![("roots".into(), cloud)],
        fields: Vec::new(),
    })
}

/// Bin edges in `log10` distance for [`root_orbit_profile`].
pub const DISTANCE_BIN_MIN: f64 = -12.0;
pub const DISTANCE_BIN_MAX: f64 = 2.0;
pub const DISTANCE_BIN_WIDTH: f64 = 0.5;

/// Closest approach of each root's forward orbit to the critical set, and
/// when it happens. Descriptive; requires a hyperbolic map.
pub fn root_orbit_profile(f: &Poly, cloud: &RootCloud, horizon: usize) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "orbit-profile",
        json!({ "poly": poly_json(f), "horizon": horizon, "roots": cloud.points.len() }),
        &[],
        &BTreeMap::new(),
    )?;
    let class = classify_critical_orbits(f, DEFAULT_GREEN_BUDGET)?;
    report.details = json!({ "classification": class });
    if !class.hyperbolic {
        report.applicable = false;
        report.notes.push("map not certified hyperbolic; profile not computed".into());
        return Ok(report);
    }
    let critical: Vec<Complex64> = class
        .critical
        .iter()
        .map(|o| Complex64::new(o.point[0], o.point[1]))
        .collect();
    if cloud.is_empty() {
        report.series.insert("argmin_histogram".into(), Vec::new());
        report.series.insert("min_distance_histogram".into(), Vec::new());
        report.metric("roots", 0.0);
        return Ok(report);
    }
    let bins = ((DISTANCE_BIN_MAX - DISTANCE_BIN_MIN) / DISTANCE_BIN_WIDTH).round() as usize;
    let mut argmin_hist = vec![0.0; horizon + 1];
    let mut dist_hist = vec![0.0; bins];
    let mut minima = Vec::with_capacity(cloud.points.len());
    let ln_escape = (f.escape_radius() * 1e3).ln();
    for pt in &cloud.points {
        let mut z = pt.location;
        let mut best = f64::INFINITY;
        let mut best_k = 0;
        for k in 0..=horizon {
            let dist = critical.iter().map(|&w| (z - w).norm()).fold(f64::INFINITY, f64::min);
            if dist < best {
                best = dist;
                best_k = k;
            }
            if z.norm().ln() > ln_escape {
                break;
            }
            z = f.eval(z);
        }
        let weight = pt.multiplicity as f64;
        argmin_hist[best_k] += weight;
        let bin = ((best.max(1e-300).log10() - DISTANCE_BIN_MIN) / DISTANCE_BIN_WIDTH).floor();
        dist_hist[(bin.max(0.0) as usize).min(bins - 1)] += weight;
        minima.push(best);
    }
    minima.sort_by(f64::total_cmp);
    report.metric("roots", cloud.points.len() as f64);
    report.metric("min_distance_min", minima[0]);
    report.metric("min_distance_median", minima[minima.len() / 2]);
    report.metric("min_distance_max", minima[minima.len() - 1]);
    report.series.insert("argmin_histogram".into(), argmin_hist);
    report.series.insert("min_distance_histogram".into(), dist_hist);
    report.series.insert(
        "min_distance_bin_edges_log10".into(),
        (0..=bins).map(|i| DISTANCE_BIN_MIN + i as f64 * DISTANCE_BIN_WIDTH).collect(),
    );
    Ok(report)
}

/// Solves the phase problem and runs [`root_orbit_profile`] on its roots.
pub fn orbit_profile(f: &Poly, n: u32, k: u32, lambda: Complex64, horizon: usize) -> Result<Outcome> {
    let p = DerivativeProblem::phase(f.clone(), n, k, lambda)?;
    let cloud = solve(&p)?;
    let mut report = root_orbit_profile(f, &cloud, horizon)?;
    report.parameters = json!({
        "poly": poly_json(f), "n": n, "k": k, "lambda": c(lambda), "horizon": horizon,
    });
    Ok(Outcome {
        report,
        clouds: vec![("roots".into(), cloud)],
        fields: Vec::new(),
    })
}

/// Roots of `(f^n)^(k) = λ` with the multiplicity identity checked.
pub fn phase_roots(
    f: &Poly,
    n: u32,
    k: u32,
    lambda: Complex64,
    search: Option<Square>,
    overrides: &BTreeMap<String, f64>,
) -> Result<Outcome> {
    let p = DerivativeProblem::phase(f.clone(), n, k, lambda)?;
    let mut report = ExperimentReport::new(
        "phase-roots",
        json!({
            "poly": poly_json(f), "n": n, "k": k, "lambda": c(lambda),
            "search": search.map(|s| json!({ "center": c(s.center), "half_width": s.half_width })),
        }),
        &[("total_multiplicity", p.expected_count() as f64), ("max_residual", 1e-10)],
        overrides,
    )?;
    let cloud = match search {
        Some(s) => solve_all(&p, &s)?,
        None => solve(&p)?,
    };
    report.metric("total_multiplicity", cloud.total_multiplicity as f64);
    report.metric("distinct", cloud.points.len() as f64);
    report.metric("total_mass", cloud.total_mass);
    report.metric("max_residual", cloud.max_residual());
    report.check("total_multiplicity", Comparison::Equal, "total_multiplicity");
    report.check("max_residual", Comparison::AtMost, "max_residual");
    Ok(Outcome {
        report,
        clouds: vec![("roots".into(), cloud)],
        fields: Vec::new(),
    })
}

/// `sup |u_n - g_f|` over `{g_f >= mask}` for each `n`, with the rate
/// constant `sup * d^n / n`.
pub fn potential_convergence(
    f: &Poly,
    k: u32,
    lambda: Complex64,
    ns: &[u32],
    grid: &GridSpec,
    mask: f64,
    overrides: &BTreeMap<String, f64>,
) -> Result<Outcome> {
    if ns.is_empty() {
        return Err(Error::InvalidInput("need at least one n".into()));
    }
    let mut report = ExperimentReport::new(
        "phase-potential",
        json!({
            "poly": poly_json(f), "k": k, "lambda": c(lambda), "n": ns,
            "grid": grid_json(grid), "mask_green": mask,
        }),
        &[
            ("final_sup", 0.02),
            ("rate_constant_spread", 2.0),
            ("increases", 0.0),
        ],
        overrides,
    )?;
    let green = green_grid(f, grid, 1e-12);
    let d = f.degree() as f64;
    let mut sups = Vec::new();
    let mut rates = Vec::new();
    let mut scaled = Vec::new();
    let mut fields = vec![("green".to_string(), green.clone())];
    for &n in ns {
        let p = DerivativeProblem::phase(f.clone(), n, k, lambda)?;
        let u = u_n_field(&p, grid);
        let disc = discrepancy_potential(&u, &green, &green, mask)?;
        if disc.count == 0 {
            return Err(Error::InvalidInput(format!("no grid point has g >= {mask}")));
        }
        sups.push(disc.sup);
        rates.push(disc.sup * d.powi(n as i32) / n as f64);
        scaled.push(disc.sup * d.powi(n as i32));
        fields.push((format!("u_n{n}"), u));
    }
    let increases = sups.windows(2).filter(|w| w[1] >= w[0]).count();
    let spread = rates.iter().cloned().fold(0.0, f64::max) / rates.iter().cloned().fold(f64::INFINITY, f64::min);
    report.series.insert("n".into(), ns.iter().map(|&n| n as f64).collect());
    report.series.insert("sup".into(), sups.clone());
    report.series.insert("rate_constant".into(), rates);
    report.series.insert("sup_times_dn".into(), scaled);
    report.metric("final_sup", *sups.last().unwrap());
    report.metric("rate_constant_spread", spread);
    report.metric("increases", increases as f64);
    report.check("final_sup", Comparison::AtMost, "final_sup");
    report.check("increases", Comparison::AtMost, "increases");
    report.check("rate_constant_spread", Comparison::AtMost, "rate_constant_spread");
    Ok(Outcome {
        report,
        clouds: Vec::new(),
        fields,
    })
}

/// Monte Carlo average over `λ` in a disk against `g_f`.
pub fn pb_average_check(
    f: &Poly,
    n: u32,
    sampler: &DiskSampler,
    grid: &GridSpec,
    mask: f64,
    overrides: &BTreeMap<String, f64>,
) -> Result<Outcome> {
    let mut report = ExperimentReport::new(
        "pb-average",
        json!({
            "poly": poly_json(f), "n": n, "radius": sampler.radius, "samples": sampler.count,
            "seed": sampler.seed, "grid": grid_json(grid), "mask_green": mask,
        }),
        &[("sup", 0.03)],
        overrides,
    )?;
    let avg = pb_average_field(f, n, sampler, grid)?;
    let green = green_grid(f, grid, 1e-12);
    let disc = discrepancy_potential(&avg.mean, &green, &green, mask)?;
    report.metric("sup", disc.sup);
    report.metric("mean_abs", disc.l1);
    report.metric("compared_points", disc.count as f64);
    report.metric("max_std_error", avg.max_std_error(&green, mask));
    report.check("sup", Comparison::AtMost, "sup");
    Ok(Outcome {
        report,
        clouds: Vec::new(),
        fields: vec![("mean".into(), avg.mean), ("std_error".into(), avg.std_error), ("green".into(), green)],
    })
}

/// Pairings of the root measure and an inverse-iteration sample against a
/// 5x5 family of bumps over `rect`.
#[allow(clippy::too_many_arguments)]
pub fn brolin_comparison(
    f: &Poly,
    n: u32,
    k: u32,
    lambda: Complex64,
    depth: usize,
    count: usize,
    seed: u64,
    rect: Rect,
    overrides: &BTreeMap<String, f64>,
) -> Result<Outcome> {
    let mut report = ExperimentReport::new(
        "brolin",
        json!({
            "poly": poly_json(f), "n": n, "k": k, "lambda": c(lambda), "depth": depth,
            "count": count, "seed": seed, "rect": rect_json(&rect),
        }),
        &[("max_pairing_difference", 0.05)],
        overrides,
    )?;
    let p = DerivativeProblem::phase(f.clone(), n, k, lambda)?;
    let roots = solve(&p)?;
    let start = roots.points.first().map_or(Complex64::new(0.0, 0.0), |pt| pt.location);
    let sample = brolin_sample(f, start, depth, count, seed)?;
    let bumps = TestFunctionSet::grid_5x5(rect);
    let a = bumps.pair(&roots);
    let b = bumps.pair(&sample);
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect();
    report.metric("max_pairing_difference", diffs.iter().cloned().fold(0.0, f64::max));
    report.series.insert("roots_pairing".into(), a);
    report.series.insert("sample_pairing".into(), b);
    report.series.insert("pairing_difference".into(), diffs);
    report.check("max_pairing_difference", Comparison::AtMost, "max_pairing_difference");
    Ok(Outcome {
        report,
        clouds: vec![("roots".into(), roots), ("sample".into(), sample)],
        fields: Vec::new(),
    })
}

/// Fate of each critical point; `expect_hyperbolic` (0 or 1), when given,
/// becomes a verdict.
pub fn classify_experiment(f: &Poly, budget: usize, overrides: &BTreeMap<String, f64>) -> Result<ExperimentReport> {
    let declared: Vec<(&str, f64)> = overrides
        .get("expect_hyperbolic")
        .map(|&v| vec![("expect_hyperbolic", v)])
        .unwrap_or_default();
    let mut report = ExperimentReport::new(
        "classify",
        json!({ "poly": poly_json(f), "budget": budget }),
        &declared,
        overrides,
    )?;
    let class = classify_critical_orbits(f, budget)?;
    let tally = |pred: fn(&CriticalFate) -> bool| class.critical.iter().filter(|o| pred(&o.fate)).count() as f64;
    report.metric("hyperbolic", if class.hyperbolic { 1.0 } else { 0.0 });
    report.metric("escaping", tally(|f| matches!(f, CriticalFate::Escaping { .. })));
    report.metric("attracted", tally(|f| matches!(f, CriticalFate::Attracted { .. })));
    report.metric("undetermined", tally(|f| matches!(f, CriticalFate::Undetermined { .. })));
    report.details = json!(class);
    if !declared.is_empty() {
        report.check("hyperbolic", Comparison::Equal, "expect_hyperbolic");
    }
    Ok(report)
}

/// Parameter roots of `(p_c^n)'(c) = λ(c)` with the mass identity checked.
pub fn param_roots(n: u32, lambda: &Poly, overrides: &BTreeMap<String, f64>) -> Result<Outcome> {
    let expected_mass = ((1u64 << n) - 1) as f64 / (1u64 << n) as f64;
    let mut report = ExperimentReport::new(
        "param-roots",
        json!({ "n": n, "lambda": poly_json(lambda) }),
        &[("total_mass", expected_mass), ("max_residual", 1e-10)],
        overrides,
    )?;
    let cloud = param_solve(n, lambda, None)?;
    report.metric("total_mass", cloud.total_mass);
    report.metric("total_multiplicity", cloud.total_multiplicity as f64);
    report.metric("distinct", cloud.points.len() as f64);
    report.metric("max_residual", cloud.max_residual());
    report.check("total_mass", Comparison::Equal, "total_mass");
    report.check("max_residual", Comparison::AtMost, "max_residual");
    Ok(Outcome {
        report,
        clouds: vec![("roots".into(), cloud)],
        fields: Vec::new(),
    })
}

/// `sup |2^-n log|(p_c^n)'(c) - λ(c)| - g_M(c)|` over `{g_M >= mask}`.
pub fn param_potential_check(
    n: u32,
    lambda: &Poly,
    grid: &GridSpec,
    mask: f64,
    overrides: &BTreeMap<String, f64>,
) -> Result<Outcome> {
    let mut report = ExperimentReport::new(
        "param-potential",
        json!({ "n": n, "lambda": poly_json(lambda), "grid": grid_json(grid), "mask_green": mask }),
        &[("sup", 0.03)],
        overrides,
    )?;
    let u = param_potential_field(n, lambda, grid)?;
    let green = mandelbrot_green_grid(grid, 1e-12, DEFAULT_GREEN_BUDGET);
    let disc = discrepancy_potential(&u, &green, &green, mask)?;
    report.metric("sup", disc.sup);
    report.metric("mean_abs", disc.l1);
    report.metric("compared_points", disc.count as f64);
    report.metric("leading_coefficient_shift", leading_coefficient_shift(n));
    report.check("sup", Comparison::AtMost, "sup");
    Ok(Outcome {
        report,
        clouds: Vec::new(),
        fields: vec![("potential".into(), u), ("green".into(), green)],
    })
}

/// Escape-rate constant over sampled escaped parameters.
pub fn escape_estimate(
    count: usize,
    seed: u64,
    rect: Rect,
    ns: &[u32],
    min_green: f64,
    overrides: &BTreeMap<String, f64>,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "escape-estimate",
        json!({
            "samples": count, "seed": seed, "rect": rect_json(&rect), "n": ns, "min_green": min_green,
        }),
        &[("growth_ratio", 1.5)],
        overrides,
    )?;
    let samples = sample_escaped_parameters(rect, count, min_green, seed);
    let est = escape_estimate_check(&samples, ns, min_green, 1e-14)?;
    report.series.insert("n".into(), est.n_values.iter().map(|&n| n as f64).collect());
    report.series.insert("max_error".into(), est.max_error.clone());
    report.series.insert("rate_constant".into(), est.c_hat.clone());
    report.metric("growth_ratio", est.growth_ratio);
    report.metric("max_rate_constant", est.c_hat.iter().cloned().fold(0.0, f64::max));
    report.details = json!({ "samples": samples.iter().map(|&z| c(z)).collect::<Vec<_>>() });
    report.check("growth_ratio", Comparison::AtMost, "growth_ratio");
    Ok(report)
}

/// Distance of the slice field to both candidate limits. Descriptive.
pub fn cubic_slice(spec: &CubicSliceSpec, grid: &GridSpec, escape_threshold: f64) -> Result<Outcome> {
    let mut report = ExperimentReport::new(
        "cubic-slice",
        json!({
            "base": [c(spec.base[0]), c(spec.base[1])],
            "direction": [c(spec.direction[0]), c(spec.direction[1])],
            "critical_index": spec.critical_index, "n": spec.n, "lambda": c(spec.lambda),
            "grid": grid_json(grid), "escape_threshold": escape_threshold,
        }),
        &[],
        &BTreeMap::new(),
    )?;
    let r = cubic_slice_experiment(spec, grid, escape_threshold, 1e-12)?;
    report.metric("escaped_points", r.escaped_points as f64);
    if let (Some(a), Some(b)) = (r.sup_to_critical, r.sup_to_critical_value) {
        report.metric("sup_to_critical", a);
        report.metric("sup_to_critical_value", b);
    }
    report.details = json!({ "closer": r.closer });
    if r.escaped_points == 0 {
        report.notes.push("no grid point has an escaping marked critical orbit".into());
    }
    Ok(Outcome {
        report,
        clouds: Vec::new(),
        fields: vec![("field".into(), r.field), ("critical_green".into(), r.critical_green)],
    })
}
