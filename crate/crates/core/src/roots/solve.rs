//! Full solve: certified global count, isolation, polishing.

use num_complex::Complex64;
use rayon::prelude::*;

use super::isolate::{isolate_with_count, IsolateOptions};
use super::newton::polish_newton;
use super::winding::winding_number;
use super::{AuditEntry, DerivativeProblem, RootCloud, RootPoint, Square};
use crate::error::{Error, Result};
use crate::grid::Rect;
use crate::poly::Poly;

/// Safety factor on the analytic enclosure radius.
const SEARCH_MARGIN: f64 = 1.0731;
const MAX_SEARCH_RETRIES: u32 = 8;
/// Rounds of local re-isolation after Newton leaves its box.
const MAX_POLISH_ROUNDS: u32 = 4;

/// Square centered at the origin that provably contains every zero of `G`.
pub fn default_search_box(p: &DerivativeProblem) -> Square {
    let radius = match p {
        DerivativeProblem::Phase { f, lambda, .. } => {
            // zeros of (f^n)^(k) lie in the hull of the zeros of f^n, all within
            // the escape radius; outside R + rho, |(f^n)^(k)| > |L| rho^N >= |λ|
            let n_roots = p.expected_count() as f64;
            let rho = if lambda.norm() == 0.0 {
                0.0
            } else {
                ((lambda.norm().ln() - p.ln_leading_coefficient()) / n_roots).exp()
            };
            f.escape_radius() + rho
        }
        DerivativeProblem::Param { n, lambda } => param_radius(*n, lambda),
    };
    Square::new(Complex64::new(0.0, 0.0), SEARCH_MARGIN * radius + 1e-3)
}

/// Radius enclosing every zero of `(p_c^n)'(c) - λ(c)`.
///
/// The derivative is `2^n prod (c - r_i)` over `N = 2^n - 1` zeros `r_i` in
/// `|c| <= 2`. If `deg λ < N`, then `|derivative| >= 2^n (r - 2)^N` beats
/// `sum |λ_i| r^i` for all radii beyond the first crossing. Otherwise Rouché's
/// theorem on `|c| = r` against the dominant leading term, using
/// `|derivative - 2^n c^N| <= 2^n ((r + 2)^N - r^N)` and `|derivative| <= 2^n (r + 2)^N`.
fn param_radius(n: u32, lambda: &Poly) -> f64 {
    let big_n = ((1u64 << n) - 1) as f64;
    let ln_2n = n as f64 * std::f64::consts::LN_2;
    let weights: Vec<f64> = if lambda.is_zero() {
        Vec::new()
    } else {
        lambda.coeffs().iter().map(|a| a.norm()).collect()
    };
    if weights.is_empty() {
        return 2.0;
    }
    let m = (weights.len() - 1) as f64;
    let ln_poly = |w: &[f64], r: f64| w.iter().rev().fold(0.0, |acc, x| acc * r + x).ln();
    let holds = |r: f64| {
        if m < big_n {
            return ln_2n + big_n * (r - 2.0).ln() > ln_poly(&weights, r);
        }
        let (lead, ln_main) = if m > big_n {
            (lambda.leading().norm(), ln_2n + big_n * (r + 2.0).ln())
        } else {
            (
                (lambda.leading() - 2f64.powi(n as i32)).norm(),
                ln_2n + big_n * r.ln() + (big_n * (2.0 / r).ln_1p()).exp_m1().ln(),
            )
        };
        let below = ln_poly(&weights[..weights.len() - 1], r);
        lead.ln() + m * r.ln() > crate::dynamics::ln_add(ln_main, below)
    };
    let mut lo = 2.0;
    let mut hi = 3.0;
    while !holds(hi) {
        lo = hi;
        hi = 2.0 + 2.0 * (hi - 2.0);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Solves with the default search box.
pub fn solve(p: &DerivativeProblem) -> Result<RootCloud> {
    solve_all(p, &default_search_box(p))
}

/// Every zero of `G` in `search`, with multiplicity.
///
/// The certified count in `search` must equal [`DerivativeProblem::expected_count`];
/// otherwise [`Error::CountMismatch`] is returned with the audit trail. If the
/// contour of `search` cannot be certified, it is enlarged and shifted slightly
/// and retried.
pub fn solve_all(p: &DerivativeProblem, search: &Square) -> Result<RootCloud> {
    let opts = IsolateOptions::default();
    let expected = p.expected_count();
    let mut audit = Vec::new();
    let mut region = *search;
    let mut count = None;
    for attempt in 0..=MAX_SEARCH_RETRIES {
        match winding_number(p, &region.rect(), &opts.winding) {
            Ok(c) => {
                count = Some(c);
                break;
            }
            Err(e) => {
                audit.push(AuditEntry {
                    rect: region.rect(),
                    depth: 0,
                    count: None,
                    note: format!("search contour attempt {attempt}: {e}"),
                });
                let h = mix(opts.seed ^ attempt as u64);
                let shift = search.half_width * 1e-3 * ((h >> 11) as f64 * 2f64.powi(-53) - 0.5);
                region = Square::new(
                    search.center + Complex64::new(shift, -0.5 * shift),
                    search.half_width * (1.0 + 0.01 * (attempt + 1) as f64),
                );
            }
        }
    }
    let Some(count) = count else {
        return Err(Error::NotCertified(format!(
            "search contour around {} could not be certified",
            search.center
        )));
    };
    audit.push(AuditEntry {
        rect: region.rect(),
        depth: 0,
        count: Some(count),
        note: "search contour".into(),
    });
    if count != expected {
        return Err(Error::CountMismatch {
            found: count,
            expected,
            audit,
        });
    }
    let iso = isolate_with_count(p, &region.rect(), count, &opts)?;
    let found = iso.total();
    audit.extend(iso.audit);
    if found != expected {
        return Err(Error::CountMismatch {
            found,
            expected,
            audit,
        });
    }
    let mut points: Vec<RootPoint> = iso
        .boxes
        .par_iter()
        .map(|&(rect, m)| polish_box(p, &rect, m, &opts, false))
        .collect::<Result<_>>()?;
    // Newton may land on a neighbor's zero inside the inflated acceptance box
    for i in duplicated(&points) {
        let (rect, m) = iso.boxes[i];
        points[i] = polish_box(p, &rect, m, &opts, true)?;
    }
    if !duplicated(&points).is_empty() {
        return Err(Error::RootSolve("polished zeros coincide".into()));
    }
    let total: u64 = points.iter().map(|p| p.multiplicity).sum();
    if total != expected {
        return Err(Error::CountMismatch {
            found: total,
            expected,
            audit,
        });
    }
    Ok(RootCloud::new(points, p.normalization()))
}

/// Indices of simple zeros that coincide with another zero.
fn duplicated(points: &[RootPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].location.re.total_cmp(&points[b].location.re));
    let mut out = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        let zi = points[i].location;
        let tol = 1e-12 * (1.0 + zi.norm());
        for &j in &order[pos + 1..] {
            let zj = points[j].location;
            if zj.re - zi.re > tol {
                break;
            }
            if (zj - zi).norm() <= tol {
                out.extend([i, j].into_iter().filter(|&x| points[x].multiplicity == 1));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Polishes a terminal box; re-isolates inside it when Newton leaves the box or
/// stalls, or immediately when `strict`. Strict results must land in the final box.
/// Multiplicity-weighted Newton `z - m G/G'` from the box center, keeping the
/// iterate of least `|G|` inside the box. Exact for an `m`-fold zero.
fn cluster_center(p: &DerivativeProblem, bx: &Square, m: u64) -> Complex64 {
    let mut z = bx.center;
    let mut best = (p.eval(z).value.ln_abs(), z);
    for _ in 0..40 {
        let ev = p.eval(z);
        if ev.value.is_zero() {
            return z;
        }
        let step = (ev.value / ev.derivative).to_complex() * m as f64;
        if !step.is_finite() {
            break;
        }
        let len = step.norm();
        z -= if len > bx.half_width { step * (bx.half_width / len) } else { step };
        if !bx.contains(z) {
            break;
        }
        let ln_g = p.eval(z).value.ln_abs();
        if ln_g < best.0 {
            best = (ln_g, z);
        }
        if len < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    best.1
}

fn polish_box(p: &DerivativeProblem, rect: &Rect, m: u64, opts: &IsolateOptions, strict: bool) -> Result<RootPoint> {
    let bx = &Square::enclosing(rect);
    if m >= 2 {
        return Ok(RootPoint {
            location: cluster_center(p, bx, m),
            multiplicity: m,
            residual: bx.half_width,
        });
    }
    let inflation = if strict { 1.0 } else { 1.01 };
    if !strict {
        if let Ok((z, residual)) = polish_newton(p, bx.center, bx) {
            if bx.scaled(inflation).contains(z) {
                return Ok(RootPoint {
                    location: z,
                    multiplicity: 1,
                    residual,
                });
            }
        }
    }
    let mut current_rect = *rect;
    let mut current = *bx;
    for round in 1..=MAX_POLISH_ROUNDS {
        let local = IsolateOptions {
            simple_width: current.half_width / 16.0,
            seed: opts.seed ^ round as u64,
            ..*opts
        };
        let iso = isolate_with_count(p, &current_rect, 1, &local)?;
        current_rect = iso.boxes[0].0;
        current = Square::enclosing(&current_rect);
        if let Ok((z, residual)) = polish_newton(p, current.center, &current) {
            let inside = if strict {
                current_rect.contains(z)
            } else {
                current.scaled(inflation).contains(z)
            };
            if inside {
                return Ok(RootPoint {
                    location: z,
                    multiplicity: 1,
                    residual,
                });
            }
        }
    }
    Err(Error::NewtonEscape {
        center: bx.center,
        last: current.center,
    })
}
