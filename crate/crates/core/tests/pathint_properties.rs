use hkpath::integrate::IntegratorConfig;
use hkpath::pathint::{
    chapman_kolmogorov_residual, psi0_closed, psi0_sliced, psi_r, psi_sliced, Potential, PropagatorQuery, Sampling, SliceGrid,
};
use hkpath::Complex64;
use proptest::prelude::*;

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn semigroup_for_random_steps(a in -1.5f64..1.5, b in -1.5f64..1.5, s in 0.2f64..2.0, t in 0.2f64..2.0) {
        let r = chapman_kolmogorov_residual(a, b, s, t, 1e-7, &IntegratorConfig::default()).unwrap();
        prop_assert!(r <= 1e-4, "residual {}", r);
    }

    #[test]
    fn free_slicing_does_not_depend_on_n(xi in -2.0f64..2.0, tau in 0.3f64..3.0, n in 2usize..10) {
        let q = PropagatorQuery::new((0.0, 0.0), (xi, tau), n, Potential::zero()).unwrap();
        let sliced = psi0_sliced(&q, &SliceGrid::default()).unwrap().value;
        prop_assert!(rel(sliced, psi0_closed(&q).unwrap()) < 1e-3);
    }

    #[test]
    fn constant_potential_terms_are_exponential_series(c in -2.0f64..2.0, tau in 0.2f64..1.0, r in 0usize..=6) {
        let q = PropagatorQuery::new((0.3, 0.0), (-0.2, tau), 3, Potential::constant(c)).unwrap();
        let term = psi_r(r, &q, &SliceGrid::default()).unwrap().value;
        let fact: f64 = (1..=r).map(|k| k as f64).product();
        let want = Complex64::new(0.0, -c * tau).powu(r as u32) / fact * psi0_closed(&q).unwrap();
        prop_assume!(want.norm() > 1e-12);
        prop_assert!(rel(term, want) < 1e-5);
    }

    #[test]
    fn reflected_reversed_query_is_transposed(x0 in -1.0f64..1.0, x1 in -1.0f64..1.0, omega in 0.1f64..0.8) {
        // Real even V: K(x1, t; x0, 0) = K(-x0, t; -x1, 0). Left-endpoint
        // sampling breaks the reversal at O(Δt); midpoint sampling keeps it.
        let grid = SliceGrid { sampling: Sampling::Midpoint, ..SliceGrid::default() };
        let fwd = PropagatorQuery::new((x0, 0.0), (x1, 1.0), 4, Potential::harmonic(omega)).unwrap();
        let back = PropagatorQuery::new((-x1, 0.0), (-x0, 1.0), 4, Potential::harmonic(omega)).unwrap();
        let a = psi_sliced(&fwd, &grid).unwrap().value;
        let b = psi_sliced(&back, &grid).unwrap().value;
        prop_assert!(rel(a, b) < 1e-6, "{} vs {}", a, b);
    }
}
