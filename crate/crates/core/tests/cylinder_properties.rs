use hkpath::cylinder::{
    is_gamma_fine, reduce_cylinder_integral, reduce_cylinder_integral_adaptive, CylinderCell, GaugeRT, PathSample,
    TimeSet,
};
use hkpath::fresnel::IncrementSchedule;
use hkpath::gauge::{Cell1D, CellNd, ExtReal};
use hkpath::integrate::IntegratorConfig;
use hkpath::Complex64;
use proptest::prelude::*;

fn schedule(steps: &[f64], origin: f64, x0: f64) -> (TimeSet, IncrementSchedule) {
    let mut t = origin;
    let times: Vec<f64> = steps.iter().map(|d| { t += d; t }).collect();
    (TimeSet::new(times.clone()).unwrap(), IncrementSchedule::new(times, origin, x0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn constants_integrate_to_one(steps in prop::collection::vec(0.1f64..2.0, 1..=3), origin in 0.0f64..1.0, x0 in -1.0f64..1.0) {
        let (n, sched) = schedule(&steps, origin, x0);
        let r = reduce_cylinder_integral(|_| Complex64::new(1.0, 0.0), &n, &sched, 1e-6, &IntegratorConfig::default()).unwrap();
        prop_assert!((r.value - 1.0).norm() < 1e-6);
    }

    #[test]
    fn last_time_integrates_out(steps in prop::collection::vec(0.2f64..1.5, 2), a in -1.0f64..1.0, x0 in -0.5f64..0.5) {
        let cfg = IntegratorConfig::default();
        let k = steps.len() - 1;
        let f = |x: &[f64]| Complex64::from_polar(1.0, a * x[..k].iter().sum::<f64>()) + (a * x[0]).cos();
        let (n, sched) = schedule(&steps, 0.0, x0);
        let (m, short) = schedule(&steps[..k], 0.0, x0);
        let full = reduce_cylinder_integral(f, &n, &sched, 1e-6, &cfg).unwrap();
        let trunc = reduce_cylinder_integral(f, &m, &short, 1e-6, &cfg).unwrap();
        prop_assert!((full.value - trunc.value).norm() < 1e-5, "{} vs {}", full.value, trunc.value);
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn box_indicator_is_bounded_by_the_modulus(steps in prop::collection::vec(0.3f64..1.5, 1..=2), half in 0.2f64..1.5, x0 in -0.5f64..0.5) {
        let (n, sched) = schedule(&steps, 0.0, x0);
        let inside = |x: &[f64]| Complex64::new(if x.iter().all(|v| v.abs() <= half) { 1.0 } else { 0.0 }, 0.0);
        let r = reduce_cylinder_integral_adaptive(inside, &n, &sched, 1e-5, &IntegratorConfig::default()).unwrap();
        let modulus: f64 = steps.iter().map(|dt| (2.0 * std::f64::consts::PI * dt).powf(-0.5)).product();
        let bound = modulus * (2.0 * half).powi(steps.len() as i32);
        prop_assert!(r.value.norm() <= bound + 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn enlarging_the_time_set_keeps_fineness(
        base in prop::collection::btree_set(1u32..40, 1..4),
        extra in prop::collection::btree_set(1u32..40, 1..4),
        vals in prop::collection::vec((-5.0f64..5.0, 0.01f64..1.0), 4),
        delta in 0.05f64..1.2,
        required in 1u32..40,
    ) {
        let to_times = |s: &std::collections::BTreeSet<u32>| s.iter().map(|&k| f64::from(k) * 0.05).collect::<Vec<_>>();
        let n = TimeSet::new(to_times(&base)).unwrap();
        let m = n.union(&TimeSet::new(to_times(&extra)).unwrap());
        let req = TimeSet::new(vec![f64::from(required) * 0.05]).unwrap();
        let gauge = GaugeRT::new(move |_| req.clone(), move |_, _| delta);
        let cells: Vec<Cell1D> = vals[..n.len()].iter().map(|&(u, l)| Cell1D::Bounded(u, u + l)).collect();
        let x = PathSample::new(n.clone(), vals[..n.len()].iter().map(|&(u, _)| ExtReal::Finite(u)).collect()).unwrap();
        let cell = CylinderCell::new(n.clone(), CellNd::new(cells).unwrap()).unwrap();
        let big_cell = cell.padded_to(&m).unwrap();
        let big_x = x.padded_to(&m).unwrap();
        if is_gamma_fine(&x, &cell, &gauge).unwrap() {
            prop_assert!(is_gamma_fine(&big_x, &big_cell, &gauge).unwrap());
        }
    }
}
