use hkpath::fresnel::{
    g1_distribution, g1_distribution_signed, g_n_mass, incremental_distribution, FigureNd, IncrementSchedule,
    PhaseSign, G_n_distribution,
};
use hkpath::gauge::{Cell1D, CellNd, ExtReal, TaggedCellNd};
use proptest::prelude::*;

/// Any of the four cell shapes with endpoints in `[-8, 8]`.
fn cell() -> impl Strategy<Value = Cell1D> {
    prop_oneof![
        (-8.0f64..8.0).prop_map(Cell1D::NegTail),
        (-8.0f64..8.0).prop_map(Cell1D::PosTail),
        (-8.0f64..8.0, 0.01f64..6.0).prop_map(|(u, l)| Cell1D::Bounded(u, u + l)),
        Just(Cell1D::FullLine),
    ]
}

/// Splits a cell at a point strictly inside it.
fn split(c: Cell1D, frac: f64) -> (Cell1D, Cell1D) {
    match c {
        Cell1D::Bounded(u, v) => {
            let w = u + frac * (v - u);
            (Cell1D::Bounded(u, w), Cell1D::Bounded(w, v))
        }
        Cell1D::NegTail(a) => (Cell1D::NegTail(a - 1.0 - 5.0 * frac), Cell1D::Bounded(a - 1.0 - 5.0 * frac, a)),
        Cell1D::PosTail(b) => (Cell1D::Bounded(b, b + 1.0 + 5.0 * frac), Cell1D::PosTail(b + 1.0 + 5.0 * frac)),
        Cell1D::FullLine => {
            let w = 10.0 * frac - 5.0;
            (Cell1D::NegTail(w), Cell1D::PosTail(w))
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn distribution_is_finitely_additive(cells in prop::collection::vec(cell(), 1..4), axis in 0usize..3, frac in 0.05f64..0.95) {
        let axis = axis % cells.len();
        let (a, b) = split(cells[axis], frac);
        let mut left = cells.clone();
        left[axis] = a;
        let mut right = cells.clone();
        right[axis] = b;
        let whole = G_n_distribution(&FigureNd::new(vec![CellNd::new(cells).unwrap()]).unwrap());
        let parts = G_n_distribution(
            &FigureNd::new(vec![CellNd::new(left).unwrap(), CellNd::new(right).unwrap()]).unwrap(),
        );
        prop_assert!((whole - parts).norm() < 1e-10, "{} vs {}", whole, parts);
    }

    #[test]
    fn finite_branch_modulus_is_a_volume(tags in prop::collection::vec((-20.0f64..20.0, 0.001f64..3.0), 1..5)) {
        let n = tags.len();
        let point = TaggedCellNd::new(
            tags.iter().map(|&(u, _)| ExtReal::Finite(u)).collect(),
            CellNd::new(tags.iter().map(|&(u, l)| Cell1D::Bounded(u, u + l)).collect()).unwrap(),
        )
        .unwrap();
        let vol: f64 = tags.iter().map(|&(_, l)| l).product();
        let expected = (2.0 * std::f64::consts::PI).powf(-0.5 * n as f64) * vol;
        prop_assert!((g_n_mass(&point).unwrap().norm() - expected).abs() <= 1e-13 * expected);
    }

    #[test]
    fn incremental_full_cells_have_unit_mass(steps in prop::collection::vec(0.1f64..2.0, 5), origin in 0.0f64..3.0, x0 in -2.0f64..2.0) {
        let mut t = origin;
        let times = steps.iter().map(|d| { t += d; t }).collect();
        let sched = IncrementSchedule::new(times, origin, x0).unwrap();
        let g = incremental_distribution(&CellNd::full_space(5), &sched).unwrap();
        prop_assert!((g - 1.0).norm() < 1e-8);
    }

    #[test]
    fn conjugate_flips_the_sign_of_i(c in cell()) {
        let fwd = g1_distribution(&c);
        let back = g1_distribution_signed(&c, PhaseSign::Backward);
        prop_assert!((fwd.conj() - back).norm() < 1e-14);
    }

    #[test]
    fn scaling_time_scales_increment_cells(steps in prop::collection::vec(0.1f64..2.0, 1..4), lambda in 0.2f64..5.0, u in -3.0f64..3.0, l in 0.1f64..3.0) {
        let mut t = 0.0;
        let times = steps.iter().map(|d| { t += d; t }).collect();
        let sched = IncrementSchedule::new(times, 0.0, 0.0).unwrap();
        let n = steps.len();
        let cell = CellNd::new(vec![Cell1D::Bounded(u, u + l); n]).unwrap();
        let r = lambda.sqrt();
        let scaled = CellNd::new(vec![Cell1D::Bounded(r * u, r * (u + l)); n]).unwrap();
        let a = incremental_distribution(&cell, &sched).unwrap();
        let b = incremental_distribution(&scaled, &sched.scaled(lambda).unwrap()).unwrap();
        prop_assert!((a - b).norm() < 1e-10);
    }
}
