use hkpath::integrate::{hk_integrate_1d, oscillatory_full_line, oscillatory_improper, IntegratorConfig, OscillatoryTailSpec};
use hkpath::Complex64;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Smooth {
    poly: Vec<(f64, f64)>,
    amp: (f64, f64),
    omega: f64,
}

impl Smooth {
    fn eval(&self, x: f64) -> Complex64 {
        let p = self.poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &(re, im)| acc * x + Complex64::new(re, im));
        p + Complex64::new(self.amp.0, self.amp.1) * Complex64::new(0.0, self.omega * x).exp()
    }
}

fn smooth() -> impl Strategy<Value = Smooth> {
    (
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..5),
        (-1.0f64..1.0, -1.0f64..1.0),
        -8.0f64..8.0,
    )
        .prop_map(|(poly, amp, omega)| Smooth { poly, amp, omega })
}

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linearity(f in smooth(), g in smooth(), a in (-3.0f64..3.0, -3.0f64..3.0), b in -3.0f64..3.0, lo in -2.0f64..0.0, len in 0.1f64..4.0) {
        let alpha = Complex64::new(a.0, a.1);
        let w = (lo, lo + len);
        let fi = hk_integrate_1d(|x| f.eval(x), w, TOL).unwrap();
        let gi = hk_integrate_1d(|x| g.eval(x), w, TOL).unwrap();
        let li = hk_integrate_1d(|x| alpha * f.eval(x) + b * g.eval(x), w, TOL).unwrap();
        let budget = li.abs_error_estimate + alpha.norm() * fi.abs_error_estimate + b.abs() * gi.abs_error_estimate + 4.0 * TOL;
        prop_assert!((li.value - alpha * fi.value - b * gi.value).norm() <= budget);
    }

    #[test]
    fn conjugation(f in smooth(), lo in -2.0f64..0.0, len in 0.1f64..4.0) {
        let w = (lo, lo + len);
        let fi = hk_integrate_1d(|x| f.eval(x), w, TOL).unwrap();
        let ci = hk_integrate_1d(|x| f.eval(x).conj(), w, TOL).unwrap();
        // Same nodes and the same summation order: conjugation is exact.
        prop_assert_eq!(ci.value, fi.value.conj());
    }

    #[test]
    fn interval_additivity(f in smooth(), a in -3.0f64..0.0, l1 in 0.05f64..2.0, l2 in 0.05f64..2.0) {
        let (b, c) = (a + l1, a + l1 + l2);
        let whole = hk_integrate_1d(|x| f.eval(x), (a, c), TOL).unwrap();
        let left = hk_integrate_1d(|x| f.eval(x), (a, b), TOL).unwrap();
        let right = hk_integrate_1d(|x| f.eval(x), (b, c), TOL).unwrap();
        let budget = whole.abs_error_estimate + left.abs_error_estimate + right.abs_error_estimate + 3.0 * TOL;
        prop_assert!((whole.value - left.value - right.value).norm() <= budget);
    }

    #[test]
    fn damping_agrees_with_direct_integration(decay in 0.5f64..3.0, phase in -2.0f64..2.0, start in -1.0f64..1.0) {
        let c = Complex64::new(-decay, phase);
        let cfg = IntegratorConfig::default();
        let damped = oscillatory_improper(&OscillatoryTailSpec::new(c, start, 1).unwrap(), 1e-8, &cfg).unwrap();
        let end = (start.abs().powi(2) + 84.0 / decay).sqrt();
        let direct = hk_integrate_1d(|x| (0.5 * c * x * x).exp(), (start, end), 1e-10).unwrap();
        prop_assert!((damped - direct.value).norm() < 1e-8, "{} vs {}", damped, direct.value);
    }
}

#[test]
fn unit_phase_full_line_modulus_and_argument() {
    let v = oscillatory_full_line(Complex64::new(0.0, 1.0), 1e-9, &IntegratorConfig::default()).unwrap();
    assert!((v.norm() - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6);
    assert!((v.arg() - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
}
