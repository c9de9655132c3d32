//! Iterated evaluation with derivative jets, Green functions, and critical-orbit fates.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{GridField, GridSpec};
use crate::poly::Poly;
use crate::scaled::ScaledComplex;

/// Highest derivative order an [`OrbitJet`] may carry.
pub const MAX_JET_ORDER: usize = 9;

/// Default iteration budget for Green function evaluation.
pub const DEFAULT_GREEN_BUDGET: usize = 5000;

/// Table of `(f^j)^(i)(z0)` for `j <= n`, `i <= k`.
#[derive(Clone, Debug)]
pub struct OrbitJet {
    pub z0: Complex64,
    pub n: usize,
    pub k: usize,
    table: Vec<ScaledComplex>,
}

impl OrbitJet {
    /// `(f^j)^(i)(z0)`.
    pub fn entry(&self, j: usize, i: usize) -> ScaledComplex {
        self.table[j * (self.k + 1) + i]
    }

    pub fn row(&self, j: usize) -> &[ScaledComplex] {
        &self.table[j * (self.k + 1)..(j + 1) * (self.k + 1)]
    }
}

fn factorial(i: usize) -> f64 {
    (1..=i).map(|x| x as f64).product()
}

/// One composition step: `taylor` holds the Taylor coefficients of `f^j` at `z0`
/// up to `order`; on return it holds those of `f^{j+1}`.
#[inline]
pub(crate) fn jet_step(f: &Poly, taylor: &mut [ScaledComplex], order: usize) {
    let mut outer = [ScaledComplex::ZERO; MAX_JET_ORDER + 1];
    f.taylor_at(taylor[0], order, &mut outer);
    if order == 0 {
        taylor[0] = outer[0];
        return;
    }
    // Horner in the truncated series ring: r = sum_m outer[m] * delta^m, delta = taylor - taylor[0].
    let mut r = [ScaledComplex::ZERO; MAX_JET_ORDER + 1];
    r[0] = outer[order];
    for m in (0..order).rev() {
        let mut next = [ScaledComplex::ZERO; MAX_JET_ORDER + 1];
        for p in 1..=order {
            let mut acc = ScaledComplex::ZERO;
            for q in 1..=p {
                if !r[p - q].is_zero() {
                    acc = acc + taylor[q] * r[p - q];
                }
            }
            next[p] = acc;
        }
        next[0] = outer[m];
        r = next;
    }
    taylor[..=order].copy_from_slice(&r[..=order]);
}

/// Taylor coefficients of `f^n` at `z0` up to `order`, without storing the table.
pub(crate) fn iterate_taylor(f: &Poly, z0: Complex64, n: usize, order: usize) -> [ScaledComplex; MAX_JET_ORDER + 1] {
    iterate_taylor_with_spread(f, z0, n, order).0
}

/// [`iterate_taylor`] plus `log sum_j |(f^j)'(z0)| / (1 + |f^j(z0)|)` over the
/// `1 <= j <= n` before the orbit leaves the escape disk: the rate at which the
/// bounded part of the orbit separates under a perturbation of `z0`.
/// Requires `order >= 1`.
pub(crate) fn iterate_taylor_with_spread(
    f: &Poly,
    z0: Complex64,
    n: usize,
    order: usize,
) -> ([ScaledComplex; MAX_JET_ORDER + 1], f64) {
    debug_assert!(order >= 1);
    let mut t = [ScaledComplex::ZERO; MAX_JET_ORDER + 1];
    t[0] = ScaledComplex::new(z0);
    t[1] = ScaledComplex::ONE;
    let mut spread = f64::NEG_INFINITY;
    let ln_radius = f.escape_radius().ln();
    let mut bounded = z0.norm().ln() <= ln_radius;
    for _ in 0..n {
        jet_step(f, &mut t, order);
        bounded = bounded && t[0].ln_abs() <= ln_radius;
        if bounded {
            spread = ln_add(spread, t[1].ln_abs() - ln_one_plus_abs(&t[0]));
        }
    }
    (t, spread)
}

/// `log(e^a + e^b)`.
pub(crate) fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `log(1 + |w|)` without overflow.
pub(crate) fn ln_one_plus_abs(w: &ScaledComplex) -> f64 {
    let l = w.ln_abs();
    if l <= 0.0 {
        l.exp().ln_1p()
    } else {
        l + (-l).exp().ln_1p()
    }
}

/// Derivative jet along the orbit of `z0` by truncated power-series composition.
pub fn orbit_jet(f: &Poly, z0: Complex64, n: usize, k: usize) -> OrbitJet {
    assert!(k <= MAX_JET_ORDER, "jet order {k} exceeds {MAX_JET_ORDER}");
    let mut table = Vec::with_capacity((n + 1) * (k + 1));
    let factorials: Vec<f64> = (0..=k).map(factorial).collect();
    let mut t = [ScaledComplex::ZERO; MAX_JET_ORDER + 1];
    t[0] = ScaledComplex::new(z0);
    if k >= 1 {
        t[1] = ScaledComplex::ONE;
    }
    for j in 0..=n {
        if j > 0 {
            jet_step(f, &mut t, k);
        }
        table.extend((0..=k).map(|i| t[i].scale(factorials[i])));
    }
    OrbitJet { z0, n, k, table }
}

/// Green function value with its certification status.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub certified: bool,
    /// Iterate count at which the value was read off (or the budget when uncertified).
    pub iterations: usize,
}

/// Green function of `f` at `z`.
///
/// Non-monic input is conjugated to monic form first (the Green function is
/// invariant under that conjugacy). Once the orbit leaves the escape radius,
/// iteration continues in scaled arithmetic until the remaining tail
/// `d^-N * 4A / ((2d-1)|f^N(z)|)` drops below `tol`.
pub fn green_value(f: &Poly, z: Complex64, tol: f64, budget: usize) -> GreenValue {
    if f.is_monic() {
        green_monic(f, z, tol, budget)
    } else {
        let g = f.normalize_monic().expect("green_value needs degree >= 2");
        let conj = g.monic_conjugacy();
        green_monic(&g, conj.forward(z), tol, budget)
    }
}

pub(crate) fn green_monic(f: &Poly, z: Complex64, tol: f64, budget: usize) -> GreenValue {
    let d = f.degree();
    let radius = f.escape_radius();
    let mass = f.lower_coeff_mass();
    let ln_d = (d as f64).ln();
    let ln_tail_const = if mass > 0.0 {
        (4.0 * mass / (2.0 * d as f64 - 1.0)).ln()
    } else {
        f64::NEG_INFINITY
    };
    let ln_tol = tol.ln();

    let mut w = z;
    let mut m = 0;
    while w.norm() <= radius {
        if m >= budget {
            return GreenValue {
                value: 0.0,
                certified: false,
                iterations: budget,
            };
        }
        w = f.eval(w);
        m += 1;
    }
    let mut ws = ScaledComplex::new(w);
    let mut n = m;
    loop {
        let ln_abs = ws.ln_abs();
        let ln_tail = -(n as f64) * ln_d + ln_tail_const - ln_abs;
        if ln_tail <= ln_tol || n >= m + budget {
            return GreenValue {
                value: ln_abs * (-(n as f64) * ln_d).exp(),
                certified: true,
                iterations: n,
            };
        }
        ws = f.eval_scaled(ws);
        n += 1;
    }
}

/// Green function sampled on a grid; the mask records certified escape.
pub fn green_grid(f: &Poly, grid: &GridSpec, tol: f64) -> GridField {
    green_grid_with_budget(f, grid, tol, DEFAULT_GREEN_BUDGET)
}

pub fn green_grid_with_budget(f: &Poly, grid: &GridSpec, tol: f64, budget: usize) -> GridField {
    let g = if f.is_monic() {
        f.clone()
    } else {
        f.normalize_monic().expect("green_grid needs degree >= 2")
    };
    let conj = g.monic_conjugacy();
    let samples: Vec<GreenValue> = {
        use rayon::prelude::*;
        (0..grid.len())
            .into_par_iter()
            .map(|idx| green_monic(&g, conj.forward(grid.point_at(idx)), tol, budget))
            .collect()
    };
    GridField {
        spec: *grid,
        values: samples.iter().map(|s| s.value).collect(),
        mask: samples.iter().map(|s| s.certified).collect(),
    }
}

/// What happens to one critical point under iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "fate", rename_all = "snake_case")]
pub enum CriticalFate {
    Escaping {
        green: f64,
    },
    Attracted {
        cycle: Vec<[f64; 2]>,
        period: usize,
        multiplier: [f64; 2],
    },
    Undetermined {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalOrbit {
    pub point: [f64; 2],
    pub multiplicity: usize,
    #[serde(flatten)]
    pub fate: CriticalFate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalClassification {
    pub critical: Vec<CriticalOrbit>,
    pub hyperbolic: bool,
    pub has_escaping_critical: bool,
}

/// Snap tolerance for cycle detection.
pub const CYCLE_SNAP_TOL: f64 = 1e-9;
/// Required margin below 1 for an attracting multiplier.
pub const MULTIPLIER_MARGIN: f64 = 1e-6;

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= CYCLE_SNAP_TOL * a.norm().max(1.0)
}

fn iterate(f: &Poly, mut z: Complex64, p: usize) -> Complex64 {
    for _ in 0..p {
        z = f.eval(z);
    }
    z
}

/// `(f^p)(z)` and `(f^p)'(z)`.
fn iterate_with_derivative(f: &Poly, mut z: Complex64, p: usize) -> (Complex64, Complex64) {
    let mut dz = Complex64::new(1.0, 0.0);
    for _ in 0..p {
        let (v, dv) = f.eval_with_derivative(z);
        dz *= dv;
        z = v;
    }
    (z, dz)
}

/// Brent cycle detection with a snap tolerance; returns a point near the cycle and its period.
fn brent_cycle(f: &Poly, x0: Complex64, budget: usize) -> Option<(Complex64, usize)> {
    let mut power = 1usize;
    let mut lam = 1usize;
    let mut tortoise = x0;
    let mut hare = f.eval(x0);
    let mut steps = 1usize;
    while !close(tortoise, hare) {
        if steps >= budget || !hare.norm().is_finite() {
            return None;
        }
        if power == lam {
            tortoise = hare;
            power *= 2;
            lam = 0;
        }
        hare = f.eval(hare);
        lam += 1;
        steps += 1;
    }
    // reduce to the minimal period
    let period = (1..=lam)
        .filter(|&q| lam.is_multiple_of(q))
        .find(|&q| close(iterate(f, hare, q), hare))
        .unwrap_or(lam);
    Some((hare, period))
}

fn classify_one(f: &Poly, c: Complex64, budget: usize) -> CriticalFate {
    let gv = green_value(f, c, 1e-12, budget);
    if gv.certified {
        return CriticalFate::Escaping { green: gv.value };
    }
    let Some((candidate, period)) = brent_cycle(f, c, budget) else {
        return CriticalFate::Undetermined {
            reason: format!("no cycle within {budget} iterations"),
        };
    };
    // Newton on f^p(x) - x to pin the periodic point itself.
    let mut x = candidate;
    for _ in 0..200 {
        let (v, dv) = iterate_with_derivative(f, x, period);
        let h = v - x;
        let dh = dv - 1.0;
        if h.norm() == 0.0 || dh.norm() == 0.0 {
            break;
        }
        let step = h / dh;
        x -= step;
        if step.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    if !x.norm().is_finite() || (x - candidate).norm() > 1e-3 * candidate.norm().max(1.0) {
        return CriticalFate::Undetermined {
            reason: "periodic point refinement wandered off the detected cycle".into(),
        };
    }
    let (_, multiplier) = iterate_with_derivative(f, x, period);
    if multiplier.norm() < 1.0 - MULTIPLIER_MARGIN {
        let mut cycle = Vec::with_capacity(period);
        let mut y = x;
        for _ in 0..period {
            cycle.push([y.re, y.im]);
            y = f.eval(y);
        }
        CriticalFate::Attracted {
            cycle,
            period,
            multiplier: [multiplier.re, multiplier.im],
        }
    } else {
        CriticalFate::Undetermined {
            reason: format!(
                "cycle of period {period} has |multiplier| = {} within {MULTIPLIER_MARGIN:e} of 1",
                multiplier.norm()
            ),
        }
    }
}

/// Escaping / attracted / undetermined verdict for each critical point.
///
/// Siegel disks and other neutral behaviour are never decided; they come back
/// as `Undetermined` and make the hyperbolicity verdict false.
pub fn classify_critical_orbits(f: &Poly, budget: usize) -> Result<CriticalClassification> {
    let critical_points = f.critical_points()?;
    let critical: Vec<CriticalOrbit> = critical_points
        .into_iter()
        .map(|(c, multiplicity)| CriticalOrbit {
            point: [c.re, c.im],
            multiplicity,
            fate: classify_one(f, c, budget),
        })
        .collect();
    let hyperbolic = critical.iter().all(|o| match &o.fate {
        CriticalFate::Escaping { .. } => true,
        CriticalFate::Attracted { multiplier, .. } => {
            Complex64::new(multiplier[0], multiplier[1]).norm() < 1.0
        }
        CriticalFate::Undetermined { .. } => false,
    });
    let has_escaping_critical = critical
        .iter()
        .any(|o| matches!(o.fate, CriticalFate::Escaping { .. }));
    Ok(CriticalClassification {
        critical,
        hyperbolic,
        has_escaping_critical,
    })
}
