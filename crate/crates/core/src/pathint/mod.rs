//! Propagators of `∂ψ/∂t = i[(1/2m)∂² - V]ψ` (units with `ħ = 1`): the
//! free closed form, time-sliced kernels, perturbation terms, and the
//! reference solutions used to check them.

mod perturbation;
mod potential;
mod schrodinger;
mod sliced;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrate::DampingSchedule;

pub use perturbation::{perturbation_partial_sum, perturbation_terms, psi_r};
pub use potential::{AnalyticTag, Potential};
pub use schrodinger::{gaussian_packet, l2_distance, l2_norm, schrodinger_reference, WaveGrid};
pub use sliced::{chapman_kolmogorov_residual, psi0_sliced, psi_sliced, psi_sliced_raw, SlicedReport};

/// Transition `(ξ′, τ′) → (ξ, τ)` split into `slices` equal time steps.
#[derive(Debug, Clone)]
pub struct PropagatorQuery {
    pub xi_start: f64,
    pub tau_start: f64,
    pub xi_end: f64,
    pub tau_end: f64,
    pub slices: usize,
    pub potential: Potential,
    pub mass: f64,
}

impl PropagatorQuery {
    pub fn new(start: (f64, f64), end: (f64, f64), slices: usize, potential: Potential) -> Result<Self> {
        let q = Self {
            xi_start: start.0,
            tau_start: start.1,
            xi_end: end.0,
            tau_end: end.1,
            slices,
            potential,
            mass: 1.0,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        self.mass = mass;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.xi_start, self.tau_start, self.xi_end, self.tau_end]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("query coordinates must be finite"));
        }
        if self.tau_start < 0.0 || self.tau_end <= self.tau_start {
            return Err(Error::Schedule(format!(
                "need 0 <= tau' < tau, got tau' = {}, tau = {}",
                self.tau_start, self.tau_end
            )));
        }
        if self.slices == 0 {
            return Err(invalid("at least one time slice is required"));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("mass must be positive"));
        }
        self.potential.validate()
    }

    pub fn duration(&self) -> f64 {
        self.tau_end - self.tau_start
    }

    pub fn step(&self) -> f64 {
        self.duration() / self.slices as f64
    }

    /// `t_j = τ′ + j·Δt`, `j = 0..=n`.
    pub fn slice_time(&self, j: usize) -> f64 {
        if j == self.slices {
            self.tau_end
        } else {
            self.tau_start + self.step() * j as f64
        }
    }

    pub fn with_slices(&self, slices: usize) -> Result<Self> {
        let mut q = self.clone();
        q.slices = slices;
        q.validate()?;
        Ok(q)
    }

    pub fn with_potential(&self, potential: Potential) -> Self {
        let mut q = self.clone();
        q.potential = potential;
        q
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: QueryRepr = serde_json::from_str(text)?;
        r.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&QueryRepr::try_from(self)?)?)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTimePoint {
    pub xi: f64,
    pub tau: f64,
}

/// JSON form of a query; the potential is a descriptor string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRepr {
    pub start: SpaceTimePoint,
    pub end: SpaceTimePoint,
    #[serde(default = "one_slice")]
    pub slices: usize,
    #[serde(default = "zero_potential")]
    pub potential: String,
    #[serde(default = "unit_mass")]
    pub mass: f64,
}

fn one_slice() -> usize {
    1
}
fn zero_potential() -> String {
    "zero".into()
}
fn unit_mass() -> f64 {
    1.0
}

impl TryFrom<QueryRepr> for PropagatorQuery {
    type Error = Error;
    fn try_from(r: QueryRepr) -> Result<Self> {
        PropagatorQuery::new((r.start.xi, r.start.tau), (r.end.xi, r.end.tau), r.slices, r.potential.parse()?)?
            .with_mass(r.mass)
    }
}

impl TryFrom<&PropagatorQuery> for QueryRepr {
    type Error = Error;
    fn try_from(q: &PropagatorQuery) -> Result<Self> {
        if q.potential.tag() == AnalyticTag::Custom {
            return Err(invalid("custom potentials have no JSON form"));
        }
        Ok(QueryRepr {
            start: SpaceTimePoint { xi: q.xi_start, tau: q.tau_start },
            end: SpaceTimePoint { xi: q.xi_end, tau: q.tau_end },
            slices: q.slices,
            potential: q.potential.to_string(),
            mass: q.mass,
        })
    }
}

/// How the potential is sampled on each time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// `V(x_{j-1}, t_{j-1})`
    #[default]
    LeftEndpoint,
    /// `V((x_{j-1} + x_j)/2, (t_{j-1} + t_j)/2)`
    Midpoint,
}

/// Discretisation of the iterated one-step integrals.
///
/// Each step integrates over a scaled variable `s` on `[-extent, extent]`
/// with Gaussian damping `e^{-εs²}`, `ε` running geometrically from
/// `damping` to `16·damping`; the results are extrapolated to `ε = 0`.
/// `points` is both the number of quadrature intervals across the full
/// window and the number of interpolation nodes per intermediate slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceGrid {
    pub extent: f64,
    pub points: usize,
    pub damping: f64,
    /// Largest accepted extrapolation spread relative to the value.
    pub rel_tol: f64,
    pub sampling: Sampling,
}

impl Default for SliceGrid {
    fn default() -> Self {
        Self { extent: 38.0, points: 512, damping: 0.025, rel_tol: 1e-6, sampling: Sampling::LeftEndpoint }
    }
}

/// Smallest `ε·extent²` for which the window edge is negligible.
const EDGE_EXPONENT: f64 = 27.0;
const DAMPING_RATIO: f64 = 16.0;
const DAMPING_NODES: usize = 9;

impl SliceGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.extent > 0.0 && self.extent.is_finite() && self.damping > 0.0 && self.damping.is_finite()) {
            return Err(invalid("grid extent and damping must be positive"));
        }
        if self.points < 8 || self.points % 2 != 0 {
            return Err(Error::GridTooCoarse(format!(
                "points per slice must be even and at least 8, got {}",
                self.points
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(invalid("relative tolerance must be positive"));
        }
        if self.damping * self.extent * self.extent < EDGE_EXPONENT {
            return Err(Error::GridTooCoarse(format!(
                "e^(-damping*extent^2) = {:.2e} leaves the window edge visible; widen the extent",
                (-self.damping * self.extent * self.extent).exp()
            )));
        }
        Ok(())
    }

    pub fn schedule(&self) -> DampingSchedule {
        DampingSchedule {
            eps_min: self.damping,
            eps_max: DAMPING_RATIO * self.damping,
            nodes: DAMPING_NODES,
        }
    }

    /// Quadrature spacing in `s`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }
}

/// `(m/(2πiΔt))^{1/2} e^{im(x - y)²/(2Δt)}` on the principal branch.
pub fn free_kernel(y: f64, x: f64, dt: f64, mass: f64) -> Complex64 {
    let pref = (Complex64::new(0.0, 2.0 * PI * dt / mass)).sqrt().inv();
    pref * Complex64::from_polar(1.0, 0.5 * mass * (x - y) * (x - y) / dt)
}

/// Closed-form free propagator `(2πi(τ - τ′))^{-1/2} e^{i(ξ - ξ′)²/(2(τ - τ′))}`
/// (with the mass restored).
pub fn psi0_closed(q: &PropagatorQuery) -> Result<Complex64> {
    q.validate()?;
    Ok(free_kernel(q.xi_start, q.xi_end, q.duration(), q.mass))
}

/// Harmonic-oscillator kernel
/// `(mω/(2πi sin ωτ))^{1/2} e^{imω((ξ² + ξ′²)cos ωτ - 2ξξ′)/(2 sin ωτ)}`,
/// valid for `0 < ωτ < π`.
pub fn mehler_kernel(q: &PropagatorQuery) -> Result<Complex64> {
    q.validate()?;
    let AnalyticTag::Harmonic(omega) = q.potential.tag() else {
        return Err(invalid("the Mehler kernel needs a harmonic potential"));
    };
    let w = omega.abs();
    let tau = q.duration();
    if w == 0.0 {
        return psi0_closed(q);
    }
    if w * tau >= PI {
        return Err(invalid(format!("omega*tau = {} must stay below pi", w * tau)));
    }
    let (s, c) = (w * tau).sin_cos();
    let (a, b) = (q.xi_end, q.xi_start);
    let pref = (Complex64::new(0.0, 2.0 * PI * s / (q.mass * w))).sqrt().inv();
    Ok(pref * Complex64::from_polar(1.0, q.mass * w * ((a * a + b * b) * c - 2.0 * a * b) / (2.0 * s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(start: (f64, f64), end: (f64, f64)) -> PropagatorQuery {
        PropagatorQuery::new(start, end, 1, Potential::zero()).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let v = psi0_closed(&q((0.3, 0.0), (0.3, 1.0))).unwrap();
        let r = 1.0 / (2.0 * PI).sqrt() / 2f64.sqrt();
        assert!((v - Complex64::new(r, -r)).norm() < 1e-15);
        assert!((v.re - 0.2821).abs() < 1e-4);

        let v = psi0_closed(&q((0.0, 0.0), (1.0, 1.0))).unwrap();
        assert!((v.re - 0.38280).abs() < 1e-5 && (v.im + 0.11231).abs() < 1e-5, "{v}");

        for xi in [-3.0, 0.1, 7.0] {
            let v = psi0_closed(&q((0.0, 0.5), (xi, 2.5))).unwrap();
            assert!((v.norm() - (2.0 * PI * 2.0f64).powf(-0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn query_validation() {
        assert!(PropagatorQuery::new((0.0, 1.0), (0.0, 1.0), 1, Potential::zero()).is_err());
        assert!(PropagatorQuery::new((0.0, -1.0), (0.0, 1.0), 1, Potential::zero()).is_err());
        assert!(PropagatorQuery::new((0.0, 0.0), (0.0, 1.0), 0, Potential::zero()).is_err());
        assert!(q((0.0, 0.0), (1.0, 1.0)).with_mass(0.0).is_err());
    }

    #[test]
    fn query_json_round_trip() {
        let text = r#"{"start":{"xi":0.5,"tau":0.0},"end":{"xi":1.0,"tau":2.0},"slices":4,"potential":"harmonic:0.5"}"#;
        let q = PropagatorQuery::from_json(text).unwrap();
        assert_eq!(q.slices, 4);
        assert_eq!(q.mass, 1.0);
        assert_eq!(q.potential.tag(), AnalyticTag::Harmonic(0.5));
        let back = PropagatorQuery::from_json(&q.to_json().unwrap()).unwrap();
        assert_eq!(back.xi_end, 1.0);
        assert!(PropagatorQuery::from_json(r#"{"start":{"xi":0,"tau":0},"end":{"xi":0,"tau":1},"extra":1}"#).is_err());
    }

    #[test]
    fn mehler_reduces_to_free_kernel_for_small_omega() {
        let base = PropagatorQuery::new((0.2, 0.0), (0.7, 0.5), 1, Potential::harmonic(1e-4)).unwrap();
        let m = mehler_kernel(&base).unwrap();
        let f = psi0_closed(&base).unwrap();
        assert!((m - f).norm() < 1e-7);
        let late = PropagatorQuery::new((0.0, 0.0), (0.0, 4.0), 1, Potential::harmonic(1.0)).unwrap();
        assert!(mehler_kernel(&late).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(SliceGrid::default().validate().is_ok());
        let odd = SliceGrid { points: 101, ..SliceGrid::default() };
        assert!(matches!(odd.validate(), Err(Error::GridTooCoarse(_))));
        let narrow = SliceGrid { extent: 5.0, ..SliceGrid::default() };
        assert!(matches!(narrow.validate(), Err(Error::GridTooCoarse(_))));
        let few = SliceGrid { points: 6, ..SliceGrid::default() };
        assert!(matches!(few.validate(), Err(Error::GridTooCoarse(_))));
    }
}
