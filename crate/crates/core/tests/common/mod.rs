//! Oracles shared by the integration tests.
#![allow(dead_code)]

use derivdist::{Poly, RootCloud};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Roots of `p` as eigenvalues of a companion matrix. The variable is
/// translated first: symmetric root sets can stall the shifted QR iteration.
pub fn companion_roots(p: &Poly) -> Vec<Complex64> {
    for shift in [Complex64::new(0.1234, 0.0567), Complex64::new(-0.0711, 0.1513)] {
        let moved = p.compose(&Poly::new(vec![shift, Complex64::new(1.0, 0.0)]));
        if let Some(eigs) = companion_eigenvalues(&moved) {
            return eigs.into_iter().map(|w| w + shift).collect();
        }
    }
    panic!("companion eigenvalues did not converge");
}

fn companion_eigenvalues(p: &Poly) -> Option<Vec<Complex64>> {
    let c = p.coeffs();
    let n = p.degree();
    let lead = c[n];
    let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -c[i] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let schur = m.try_schur(1e-14, 20_000)?;
    Some(schur.eigenvalues()?.iter().copied().collect())
}

/// `(f^n)^(k) - λ` by coefficient expansion.
pub fn expanded_phase(f: &Poly, n: u32, k: u32, lambda: Complex64) -> Poly {
    let mut g = f.iterate_expanded(n).nth_derivative(k as usize);
    let mut coeffs = g.coeffs().to_vec();
    coeffs[0] -= lambda;
    g = Poly::new(coeffs);
    g
}

/// `(p_c^n)'(c) - λ(c)` by recurrence on polynomials in `c`.
pub fn expanded_param(n: u32, lambda: &Poly) -> Poly {
    let c = Poly::from_real(&[0.0, 1.0]);
    let mut w = c.clone();
    let mut prod = Poly::from_real(&[2f64.powi(n as i32)]);
    for _ in 0..n {
        prod = prod.mul(&w);
        w = w.mul(&w).add(&c);
    }
    prod.sub(lambda)
}

/// `(p_c^n)'(c)` and its `c`-derivative by the orbit recurrence.
pub fn param_derivative(c: Complex64, n: u32) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let (mut w, mut dw) = (c, one);
    let (mut prod, mut dprod) = (Complex64::new(2f64.powi(n as i32), 0.0), Complex64::new(0.0, 0.0));
    for _ in 0..n {
        dprod = dprod * w + prod * dw;
        prod *= w;
        dw = 2.0 * w * dw + one;
        w = w * w + c;
    }
    (prod, dprod)
}

/// Newton refinement of approximate zeros of `g` (value and derivative).
pub fn refine(zs: &[Complex64], g: impl Fn(Complex64) -> (Complex64, Complex64)) -> Vec<Complex64> {
    zs.iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..60 {
                let (v, dv) = g(z);
                let step = v / dv;
                if !step.is_finite() {
                    break;
                }
                z -= step;
                if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                    break;
                }
            }
            z
        })
        .collect()
}

/// Roots of a cloud repeated by multiplicity.
pub fn expand_multiset(cloud: &RootCloud) -> Vec<Complex64> {
    cloud
        .points
        .iter()
        .flat_map(|p| std::iter::repeat_n(p.location, p.multiplicity as usize))
        .collect()
}

pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_way = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|&p| y.iter().map(|&q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Largest distance in a greedy nearest matching of two equal-size multisets.
pub fn matched_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &p in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, &q)| (j, (p - q).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}
