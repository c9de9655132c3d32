//! Argument-principle zero counting along rectangle boundaries.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::DerivativeProblem;
use crate::error::{Error, Result};
use crate::grid::Rect;

/// Controls the adaptive contour sampling.
#[derive(Clone, Copy, Debug)]
pub struct WindingOptions {
    /// Equal pieces each edge is cut into before adaptive refinement.
    pub initial_segments: usize,
    /// Largest accepted phase change between consecutive samples.
    pub max_phase_step: f64,
    /// Largest accepted `h |G'/G|` at either end of a segment of length `h`.
    pub max_log_step: f64,
    /// Largest accepted `h` times the orbit spread rate at either end.
    pub max_orbit_step: f64,
    /// Segments shorter than this fraction of the region's half width are not refined further.
    pub min_segment_fraction: f64,
    /// Sample budget for one contour.
    pub max_samples: usize,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions {
            initial_segments: 4,
            max_phase_step: PI / 4.0,
            max_log_step: 1.0,
            max_orbit_step: 0.5,
            min_segment_fraction: 2f64.powi(-26),
            max_samples: 1 << 22,
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Sample {
    z: Complex64,
    arg: f64,
    /// `|G'/G|`
    log_derivative: f64,
    spread: f64,
}

pub(crate) fn sample(p: &DerivativeProblem, z: Complex64) -> Result<Sample> {
    let ev = p.eval(z);
    if !ev.is_certified(p.n()) {
        return Err(Error::NotCertified(format!(
            "|G({z})| below the rounding floor"
        )));
    }
    let ratio = ev.derivative / ev.value;
    let log_derivative = if ratio.is_zero() {
        0.0
    } else {
        ratio.ln_abs().exp()
    };
    Ok(Sample {
        z,
        arg: ev.value.arg(),
        log_derivative,
        spread: ev.ln_spread.exp(),
    })
}

fn wrap(mut a: f64) -> f64 {
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Phase increment of `G` along the straight segment from `a` to `b`.
pub fn edge_phase(
    p: &DerivativeProblem,
    a: Complex64,
    b: Complex64,
    scale: f64,
    opts: &WindingOptions,
    samples: &mut usize,
) -> Result<f64> {
    let pieces = opts.initial_segments.max(1);
    let mut points = Vec::with_capacity(pieces + 1);
    for i in 0..=pieces {
        let t = i as f64 / pieces as f64;
        points.push(sample(p, a + (b - a) * t)?);
    }
    *samples += points.len();
    let min_len = (opts.min_segment_fraction * scale).max(1e-15 * (1.0 + a.norm().max(b.norm())));
    let mut total = 0.0;
    for w in points.windows(2) {
        let mut stack = vec![(w[0], w[1])];
        while let Some((sa, sb)) = stack.pop() {
            let h = (sb.z - sa.z).norm();
            let dphi = wrap(sb.arg - sa.arg);
            let smooth = h * sa.log_derivative.max(sb.log_derivative) <= opts.max_log_step
                && h * sa.spread.max(sb.spread) <= opts.max_orbit_step;
            if dphi.abs() <= opts.max_phase_step && smooth {
                total += dphi;
                continue;
            }
            if h < min_len {
                return Err(Error::NotCertified(format!(
                    "contour refinement below {min_len:e} near {}",
                    sa.z
                )));
            }
            if *samples >= opts.max_samples {
                return Err(Error::NotCertified(format!(
                    "contour sample budget {} exhausted",
                    opts.max_samples
                )));
            }
            let mid = sample(p, 0.5 * (sa.z + sb.z))?;
            *samples += 1;
            stack.push((mid, sb));
            stack.push((sa, mid));
        }
    }
    Ok(total)
}

/// Converts an accumulated phase into a zero count.
pub(crate) fn phase_to_count(total: f64) -> Result<u64> {
    let turns = total / (2.0 * PI);
    let count = turns.round();
    if (turns - count).abs() > 1e-3 || count < 0.0 {
        return Err(Error::NotCertified(format!(
            "accumulated phase is {turns} turns"
        )));
    }
    Ok(count as u64)
}

/// Number of zeros of `G` inside `rect`, counted with multiplicity.
pub fn winding_number(p: &DerivativeProblem, rect: &Rect, opts: &WindingOptions) -> Result<u64> {
    let corners = rect.corners();
    let scale = rect.half_width();
    let mut samples = 0;
    let mut total = 0.0;
    for i in 0..4 {
        total += edge_phase(p, corners[i], corners[(i + 1) % 4], scale, opts, &mut samples)?;
    }
    phase_to_count(total)
}
