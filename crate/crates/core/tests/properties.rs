//! Invariants checked on random inputs.

mod common;

use common::{expand_multiset, matched_distance};
use derivdist::dynamics::{green_grid, green_value, orbit_jet};
use derivdist::experiments::cohomology_count;
use derivdist::measures::{angular_discrepancy, log_potential, potential_value};
use derivdist::param::{leading_coefficient_shift, param_solve};
use derivdist::roots::solve;
use derivdist::{DerivativeProblem, GridSpec, Poly, Rect, ScaledComplex};
use num_complex::Complex64;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

fn quadratic() -> impl Strategy<Value = Poly> {
    complex(1.0).prop_map(|c| Poly::new(vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]))
}

fn cubic() -> impl Strategy<Value = Poly> {
    (complex(0.8), complex(0.8), complex(0.8))
        .prop_map(|(a, b, c)| Poly::new(vec![a, b, c, Complex64::new(1.0, 0.0)]))
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaled_arithmetic_agrees_with_f64(a in complex(1e6), b in complex(1e6)) {
        let (sa, sb) = (ScaledComplex::new(a), ScaledComplex::new(b));
        prop_assert!(close((sa * sb).to_complex(), a * b, 1e-15 * (1.0 + (a * b).norm())));
        prop_assert!(close((sa + sb).to_complex(), a + b, 1e-15 * (1.0 + a.norm() + b.norm())));
        if b.norm() > 1e-3 {
            prop_assert!(close((sa / sb).to_complex(), a / b, 1e-14 * (1.0 + (a / b).norm())));
        }
    }

    #[test]
    fn jet_chain_rule(f in cubic(), z in complex(0.7), m in 1usize..4, n in 1usize..4) {
        // (f^(m+n))'(z) = (f^m)'(f^n(z)) (f^n)'(z)
        let inner = orbit_jet(&f, z, n, 1);
        let w = inner.entry(n, 0).to_complex();
        let outer = orbit_jet(&f, w, m, 1);
        let whole = orbit_jet(&f, z, m + n, 1);
        let product = outer.entry(m, 1) * inner.entry(n, 1);
        prop_assert!(whole.entry(m + n, 1).relative_distance(&product) <= 1e-9);
    }

    #[test]
    fn green_functional_equation(f in cubic(), z in complex(3.0)) {
        let g = green_value(&f, z, 1e-13, 5000);
        prop_assume!(g.certified && g.value > 0.05);
        let gf = green_value(&f, f.eval(z), 1e-13, 5000);
        prop_assert!((gf.value - 3.0 * g.value).abs() <= 1e-9 * (1.0 + gf.value));
    }

    #[test]
    fn green_conjugation_invariance(f in quadratic(), a in complex(2.0), b in complex(1.0), z in complex(3.0)) {
        prop_assume!(a.norm() > 0.3);
        // h = phi f phi^-1 with phi(z) = a z + b
        let one = Complex64::new(1.0, 0.0);
        let inv = Poly::new(vec![-b / a, one / a]);
        let h = Poly::new(vec![b, a]).compose(&f.compose(&inv));
        let gf = green_value(&f, z, 1e-13, 5000);
        let gh = green_value(&h, a * z + b, 1e-13, 5000);
        prop_assert!((gf.value - gh.value).abs() <= 1e-9 * (1.0 + gf.value));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn count_is_degree_for_every_lambda(f in quadratic(), lambda in complex(3.0), n in 1u32..6, k in 1u32..3) {
        prop_assume!(2u64.pow(n) > k as u64);
        let p = DerivativeProblem::phase(f, n, k, lambda).unwrap();
        let cloud = solve(&p).unwrap();
        prop_assert_eq!(cloud.total_multiplicity, 2u64.pow(n) - k as u64);
        prop_assert!((cloud.total_mass - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn roots_move_with_conjugation(f in quadratic(), a in complex(2.0), b in complex(1.0), lambda in complex(3.0)) {
        prop_assume!(a.norm() > 0.3);
        let one = Complex64::new(1.0, 0.0);
        let inv = Poly::new(vec![-b / a, one / a]);
        let h = Poly::new(vec![b, a]).compose(&f.compose(&inv));
        // (h^n)' at phi(z) equals (f^n)' at z
        let rf = solve(&DerivativeProblem::phase(f, 3, 1, lambda).unwrap()).unwrap();
        let rh = solve(&DerivativeProblem::phase(h, 3, 1, lambda).unwrap()).unwrap();
        let moved: Vec<Complex64> = expand_multiset(&rf).iter().map(|&z| a * z + b).collect();
        prop_assert!(matched_distance(&moved, &expand_multiset(&rh)) <= 1e-8 * (1.0 + a.norm()));
    }

    #[test]
    fn potential_is_log_potential_of_roots(f in quadratic(), lambda in complex(3.0), w in complex(2.5)) {
        let p = DerivativeProblem::phase(f, 4, 1, lambda).unwrap();
        let cloud = solve(&p).unwrap();
        prop_assume!(cloud.points.iter().all(|pt| (pt.location - w).norm() > 1e-3));
        let u = potential_value(&p, w).unwrap();
        prop_assert!((u - log_potential(&cloud, w)).abs() <= 1e-9);
    }

    #[test]
    fn parameter_potential_gap(lambda in complex(3.0), w in complex(2.5), n in 1u32..6) {
        let lam = Poly::new(vec![lambda]);
        let cloud = param_solve(n, &lam, None).unwrap();
        prop_assume!(cloud.points.iter().all(|pt| (pt.location - w).norm() > 1e-3));
        let p = DerivativeProblem::param(n, lam).unwrap();
        let u = potential_value(&p, w).unwrap();
        let gap = u - log_potential(&cloud, w);
        prop_assert!((gap - leading_coefficient_shift(n)).abs() <= 1e-9);
        prop_assert_eq!(cloud.total_mass, ((1u64 << n) - 1) as f64 / (1u64 << n) as f64);
    }

    #[test]
    fn power_map_roots_equidistribute_on_circle(lambda in complex(50.0), n in 1u32..6) {
        prop_assume!(lambda.norm() > 1e-3);
        let p = DerivativeProblem::phase(Poly::power(2), n, 1, lambda).unwrap();
        let cloud = solve(&p).unwrap();
        let count = (1u64 << n) - 1;
        let radius = (lambda.norm() / 2f64.powi(n as i32)).powf(1.0 / count as f64);
        for pt in &cloud.points {
            prop_assert!((pt.location.norm() - radius).abs() <= 1e-9 * (1.0 + radius));
        }
        let disc = angular_discrepancy(&cloud, Complex64::new(0.0, 0.0)).unwrap();
        prop_assert!(disc <= 1.0 / count as f64 + 1e-9);
    }

    #[test]
    fn cohomology_counts_ignore_rescaling(f in quadratic(), t in complex(3.0), n in 1u32..5) {
        prop_assume!(t.norm() > 1e-2);
        let none = BTreeMap::new();
        let one = Complex64::new(1.0, 0.0);
        let z0 = Complex64::new(0.31, -0.17);
        let a = cohomology_count(&f, n, one, z0, 2.0 * one, &none).unwrap();
        let b = cohomology_count(&f, n, t, z0, 2.0 * t, &none).unwrap();
        prop_assert!(a.passed() && b.passed());
        prop_assert_eq!(a.metrics["hypersurface_count"], b.metrics["hypersurface_count"]);
    }
}

#[test]
fn grid_evaluation_is_thread_independent() {
    let f = Poly::from_real(&[-1.0, 0.0, 1.0]);
    let spec = GridSpec::new(Rect::new(-2.0, 2.0, -2.0, 2.0), 37, 29);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| green_grid(&f, &spec, 1e-12))
    };
    let (a, b) = (run(1), run(5));
    assert_eq!(a.mask, b.mask);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.values), bits(&b.values));
}

#[test]
fn solve_is_thread_independent() {
    let p = DerivativeProblem::phase(Poly::from_real(&[-1.0, 0.0, 1.0]), 7, 1, Complex64::new(1.0, 0.0)).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| solve(&p).unwrap())
    };
    assert_eq!(run(1), run(6));
}
