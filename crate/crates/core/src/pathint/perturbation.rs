//! Terms of the expansion of the sliced kernel in powers of the potential.
//!
//! With `λ` multiplying the potential, the sliced kernel is
//! `∫ g₀ e^{-iλΣV(x_{j-1})Δt_j}`; the coefficient of `λ^r` is
//!
//! ```text
//! ψ_r = ∫ g₀ (1/r!) (-i Σ_j V(x_{j-1}) Δt_j)^r,
//! ```
//!
//! the left-endpoint time quadrature of the `r`-vertex term with free
//! propagation between vertices. All coefficients up to `m` come out of a
//! single slice recursion that carries a polynomial in `λ`.

use num_complex::Complex64;

use super::sliced::{run_envelope, EnvelopeRun, SlicedReport};
use super::{psi0_closed, PropagatorQuery, SliceGrid};
use crate::error::{Error, Result};

fn checked_run(q: &PropagatorQuery, grid: &SliceGrid, m: usize) -> Result<(EnvelopeRun, Complex64)> {
    let run = run_envelope(q, grid, Some(m))?;
    let e = psi0_closed(q)?;
    let scale: f64 = run.coeffs.iter().map(|c| c.norm()).sum::<f64>().max(1e-300);
    let worst = run.spread.iter().cloned().fold(0.0, f64::max);
    if worst > grid.rel_tol * scale {
        return Err(Error::NoConvergence {
            value: e * run.coeffs.iter().sum::<Complex64>(),
            abs_error_estimate: e.norm() * worst,
            refinements: run.levels,
        });
    }
    Ok((run, e))
}

/// `ψ_0, …, ψ_m` from one recursion.
pub fn perturbation_terms(m: usize, q: &PropagatorQuery, grid: &SliceGrid) -> Result<Vec<SlicedReport>> {
    let (run, e) = checked_run(q, grid, m)?;
    Ok(run
        .coeffs
        .iter()
        .zip(&run.spread)
        .map(|(c, s)| SlicedReport {
            value: e * c,
            abs_error_estimate: e.norm() * s,
            slices: q.slices,
            damping_levels: run.levels,
        })
        .collect())
}

/// The `r`-th term alone.
pub fn psi_r(r: usize, q: &PropagatorQuery, grid: &SliceGrid) -> Result<SlicedReport> {
    Ok(perturbation_terms(r, q, grid)?[r])
}

/// `S_m = ψ_0 + … + ψ_m`.
pub fn perturbation_partial_sum(m: usize, q: &PropagatorQuery, grid: &SliceGrid) -> Result<SlicedReport> {
    let terms = perturbation_terms(m, q, grid)?;
    Ok(SlicedReport {
        value: terms.iter().map(|t| t.value).sum(),
        abs_error_estimate: terms.iter().map(|t| t.abs_error_estimate).sum(),
        slices: q.slices,
        damping_levels: terms[0].damping_levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathint::{psi_sliced, Potential};

    fn factorial(r: usize) -> f64 {
        (1..=r).map(|k| k as f64).product()
    }

    #[test]
    fn constant_potential_terms() {
        let c = 1.3;
        let q = PropagatorQuery::new((0.0, 0.0), (0.5, 1.0), 4, Potential::constant(c)).unwrap();
        let g = SliceGrid::default();
        let p0 = psi0_closed(&q).unwrap();
        let terms = perturbation_terms(6, &q, &g).unwrap();
        for (r, t) in terms.iter().enumerate() {
            let expected = Complex64::new(0.0, -c * q.duration()).powu(r as u32) / factorial(r);
            assert!((t.value / p0 - expected).norm() <= 1e-5 * expected.norm(), "r={r}");
        }
        assert_eq!(psi_r(0, &q, &g).unwrap().value, terms[0].value);
    }

    #[test]
    fn partial_sums_approach_the_sliced_kernel() {
        let q = PropagatorQuery::new((0.1, 0.0), (0.4, 0.5), 8, Potential::harmonic(0.5)).unwrap();
        let g = SliceGrid::default();
        let full = psi_sliced(&q, &g).unwrap().value;
        let terms = perturbation_terms(4, &q, &g).unwrap();
        let mut last = f64::INFINITY;
        let mut sum = Complex64::new(0.0, 0.0);
        for (m, t) in terms.iter().enumerate() {
            sum += t.value;
            let d = (sum - full).norm();
            assert!(d < last, "m={m}");
            last = d;
        }
        let direct = perturbation_partial_sum(4, &q, &g).unwrap().value;
        assert!((direct - sum).norm() < 1e-14);
        assert!(last < 1e-2 * full.norm());
    }

    #[test]
    fn zero_potential_has_only_the_free_term() {
        let q = PropagatorQuery::new((0.0, 0.0), (1.0, 1.0), 3, Potential::zero()).unwrap();
        let terms = perturbation_terms(2, &q, &SliceGrid::default()).unwrap();
        assert!((terms[0].value - psi0_closed(&q).unwrap()).norm() < 1e-10);
        assert_eq!(terms[1].value, Complex64::new(0.0, 0.0));
    }
}
