//! Quadtree subdivision driven by certified winding numbers.

use num_complex::Complex64;
use rayon::prelude::*;

use super::winding::{edge_phase, phase_to_count, winding_number, WindingOptions};
use super::{AuditEntry, DerivativeProblem, Square};
use crate::error::{Error, Result};
use crate::grid::Rect;

/// Terminal sizes and retry limits for [`isolate_roots`].
#[derive(Clone, Copy, Debug)]
pub struct IsolateOptions {
    /// A box holding one simple zero stops splitting at this half width.
    pub simple_width: f64,
    /// A box holding several zeros is reported as a cluster at this half width.
    pub cluster_width: f64,
    pub max_depth: u32,
    /// Jittered re-splits tried after a failed split.
    pub max_retries: u32,
    /// Largest split offset as a fraction of the box half width.
    pub jitter: f64,
    pub seed: u64,
    pub winding: WindingOptions,
}

impl Default for IsolateOptions {
    fn default() -> Self {
        IsolateOptions {
            simple_width: 1e-3,
            cluster_width: 1e-8,
            max_depth: 60,
            max_retries: 8,
            jitter: 1e-2,
            seed: 0x5eed,
            winding: WindingOptions::default(),
        }
    }
}

/// Disjoint boxes with zero counts, plus the audit trail of the subdivision.
#[derive(Clone, Debug)]
pub struct Isolation {
    /// Terminal rectangles with their certified counts, in a deterministic order.
    pub boxes: Vec<(Rect, u64)>,
    pub audit: Vec<AuditEntry>,
}

impl Isolation {
    pub fn squares(&self) -> Vec<(Square, u64)> {
        self.boxes.iter().map(|(r, m)| (Square::enclosing(r), *m)).collect()
    }

    pub fn total(&self) -> u64 {
        self.boxes.iter().map(|(_, m)| m).sum()
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    rect: Rect,
    count: u64,
    depth: u32,
    /// Path hash; seeds the jitter so retries do not depend on scheduling.
    id: u64,
}

enum Outcome {
    Terminal(Rect, u64),
    Split(Vec<Node>),
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn unit(h: u64) -> f64 {
    // uniform in [-1, 1)
    (h >> 11) as f64 * 2f64.powi(-52) - 1.0
}

/// Counts in the four children of `rect` split at `s`, sharing internal edges.
fn split_counts(
    p: &DerivativeProblem,
    rect: &Rect,
    s: Complex64,
    opts: &WindingOptions,
) -> Result<[(Rect, u64); 4]> {
    let (x0, x1, y0, y1) = (rect.re_min, rect.re_max, rect.im_min, rect.im_max);
    let pt = Complex64::new;
    let p00 = pt(x0, y0);
    let p20 = pt(x1, y0);
    let p22 = pt(x1, y1);
    let p02 = pt(x0, y1);
    let mb = pt(s.re, y0);
    let mr = pt(x1, s.im);
    let mt = pt(s.re, y1);
    let ml = pt(x0, s.im);
    let scale = 0.5 * rect.half_width();
    let mut samples = 0;
    let mut e = |a, b| edge_phase(p, a, b, scale, opts, &mut samples);
    let b_left = e(p00, mb)?;
    let b_right = e(mb, p20)?;
    let r_low = e(p20, mr)?;
    let r_high = e(mr, p22)?;
    let t_right = e(p22, mt)?;
    let t_left = e(mt, p02)?;
    let l_high = e(p02, ml)?;
    let l_low = e(ml, p00)?;
    let v_low = e(mb, s)?;
    let v_high = e(s, mt)?;
    let h_left = e(ml, s)?;
    let h_right = e(s, mr)?;

    let ll = phase_to_count(b_left + v_low - h_left + l_low)?;
    let lr = phase_to_count(b_right + r_low - h_right - v_low)?;
    let ur = phase_to_count(h_right + r_high + t_right - v_high)?;
    let ul = phase_to_count(h_left + v_high + t_left + l_high)?;
    Ok([
        (Rect::new(x0, s.re, y0, s.im), ll),
        (Rect::new(s.re, x1, y0, s.im), lr),
        (Rect::new(s.re, x1, s.im, y1), ur),
        (Rect::new(x0, s.re, s.im, y1), ul),
    ])
}

fn process(
    p: &DerivativeProblem,
    node: &Node,
    opts: &IsolateOptions,
    audit: &mut Vec<AuditEntry>,
) -> Result<Outcome> {
    let hw = node.rect.half_width();
    if (node.count == 1 && hw <= opts.simple_width) || (node.count >= 2 && hw <= opts.cluster_width) {
        return Ok(Outcome::Terminal(node.rect, node.count));
    }
    if node.depth >= opts.max_depth {
        return Err(Error::SubdivisionFailure(format!(
            "depth {} reached with {} zeros in {:?}",
            node.depth, node.count, node.rect
        )));
    }
    let center = node.rect.center();
    let wx = 0.5 * (node.rect.re_max - node.rect.re_min);
    let wy = 0.5 * (node.rect.im_max - node.rect.im_min);
    let mut last_note = String::new();
    let mut only_floor = true;
    for attempt in 0..=opts.max_retries {
        let s = if attempt == 0 {
            center
        } else {
            let h = mix(opts.seed ^ mix(node.id ^ mix(((node.depth as u64) << 32) | attempt as u64)));
            Complex64::new(
                center.re + opts.jitter * wx * unit(h),
                center.im + opts.jitter * wy * unit(mix(h)),
            )
        };
        match split_counts(p, &node.rect, s, &opts.winding) {
            Ok(children) => {
                let total: u64 = children.iter().map(|c| c.1).sum();
                if total == node.count {
                    let nodes = children
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| c.1 > 0)
                        .map(|(i, &(rect, count))| Node {
                            rect,
                            count,
                            depth: node.depth + 1,
                            id: mix(node.id.wrapping_mul(5).wrapping_add(i as u64 + 1)),
                        })
                        .collect();
                    return Ok(Outcome::Split(nodes));
                }
                only_floor = false;
                last_note = format!("children sum to {total}, parent holds {}", node.count);
            }
            Err(e) => {
                only_floor &= matches!(e, Error::NotCertified(_));
                last_note = e.to_string();
            }
        }
        audit.push(AuditEntry {
            rect: node.rect,
            depth: node.depth,
            count: Some(node.count),
            note: format!("split attempt {attempt} rejected: {last_note}"),
        });
    }
    if node.count >= 2 && only_floor {
        // the cluster is as tight as the arithmetic can resolve
        audit.push(AuditEntry {
            rect: node.rect,
            depth: node.depth,
            count: Some(node.count),
            note: "cluster kept at the rounding floor".into(),
        });
        return Ok(Outcome::Terminal(node.rect, node.count));
    }
    Err(Error::SubdivisionFailure(format!(
        "no certified split of {:?} after {} attempts: {last_note}",
        node.rect,
        opts.max_retries + 1
    )))
}

/// Splits `region` until every zero of `G` inside it sits in a terminal box.
///
/// Breadth-first; each level is processed in parallel and reassembled in
/// order, so the output does not depend on the thread count.
pub fn isolate_roots(p: &DerivativeProblem, region: &Rect, opts: &IsolateOptions) -> Result<Isolation> {
    let count = winding_number(p, region, &opts.winding)?;
    isolate_with_count(p, region, count, opts)
}

pub(crate) fn isolate_with_count(
    p: &DerivativeProblem,
    region: &Rect,
    count: u64,
    opts: &IsolateOptions,
) -> Result<Isolation> {
    let mut audit = vec![AuditEntry {
        rect: *region,
        depth: 0,
        count: Some(count),
        note: "root region".into(),
    }];
    let mut boxes = Vec::new();
    let mut level = if count > 0 {
        vec![Node {
            rect: *region,
            count,
            depth: 0,
            id: mix(opts.seed),
        }]
    } else {
        Vec::new()
    };
    while !level.is_empty() {
        let results: Vec<(Result<Outcome>, Vec<AuditEntry>)> = level
            .par_iter()
            .map(|node| {
                let mut local = Vec::new();
                let r = process(p, node, opts, &mut local);
                (r, local)
            })
            .collect();
        let mut next = Vec::new();
        for (r, local) in results {
            audit.extend(local);
            match r? {
                Outcome::Terminal(rect, m) => boxes.push((rect, m)),
                Outcome::Split(children) => next.extend(children),
            }
        }
        level = next;
    }
    Ok(Isolation { boxes, audit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn isolates_simple_zeros() {
        // G = (z^4)' - 4 = 4z^3 - 4
        let p = DerivativeProblem::phase(Poly::power(2), 2, 1, c(4.0, 0.0)).unwrap();
        let iso = isolate_roots(&p, &Rect::new(-2.0, 2.1, -2.0, 2.1), &IsolateOptions::default()).unwrap();
        assert_eq!(iso.boxes.len(), 3);
        assert!(iso.boxes.iter().all(|b| b.1 == 1 && b.0.half_width() <= 1e-3));
        for k in 0..3 {
            let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0);
            assert!(iso.boxes.iter().any(|b| b.0.contains(w)));
        }
    }

    #[test]
    fn triple_zero_becomes_cluster() {
        let p = DerivativeProblem::phase(Poly::power(2), 2, 1, c(0.0, 0.0)).unwrap();
        let iso = isolate_roots(&p, &Rect::new(-1.0, 1.3, -1.0, 1.3), &IsolateOptions::default()).unwrap();
        assert_eq!(iso.boxes.len(), 1);
        assert_eq!(iso.boxes[0].1, 3);
        assert!(iso.boxes[0].0.contains(c(0.0, 0.0)));
        assert!(iso.boxes[0].0.half_width() <= 1e-8);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let p = DerivativeProblem::phase(Poly::quadratic(c(-1.0, 0.0)), 5, 1, c(1.0, 0.0)).unwrap();
        let region = Rect::new(-2.0, 2.0, -2.0, 2.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| isolate_roots(&p, &region, &IsolateOptions::default()).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.boxes, b.boxes);
        assert_eq!(a.total(), 31);
    }
}
