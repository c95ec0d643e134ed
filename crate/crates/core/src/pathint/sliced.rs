//! Time-sliced propagators.
//!
//! The amplitude after `j` steps is written `ψ_j(x) = E_j(x)·φ_j(x)` with
//! `E_j` the free kernel from `(ξ′, τ′)` to `(x, t_j)`. Completing the square
//! in the integration variable turns every step into
//!
//! ```text
//! φ_j(x) = √(-i/2π) ∫ e^{is²/2} u_{j-1}(y*(x) + s/√A_j) ds,
//! u_{j-1}(y) = φ_{j-1}(y)·e^{-iV(y, t_{j-1})Δt},
//! ```
//!
//! `A_j = m(1/Δt + 1/(t_{j-1} - τ′))`, `y*(x) = (x(t_{j-1} - τ′) + ξ′Δt)/(t_{j-1} - τ′ + Δt)`,
//! so the same Fresnel product weights serve every step and `φ` only
//! carries the slowly varying effect of the potential. `φ` is tabulated on
//! a grid per slice and interpolated by local quintics.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{free_kernel, psi0_closed, PropagatorQuery, Sampling, SliceGrid};
use crate::error::{invalid, Error, Result};
use crate::fresnel::FresnelWeights;
use crate::integrate::{hk_integrate_1d, DampingSchedule, IntegratorConfig};
use crate::pathint::Potential;
use crate::sum::ComplexSum;

const PANEL_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlicedReport {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub slices: usize,
    pub damping_levels: usize,
}

/// Coefficients of `φ_n(ξ)` and the extrapolation spread.
pub(crate) struct EnvelopeRun {
    pub coeffs: Vec<Complex64>,
    pub spread: Vec<f64>,
    pub levels: usize,
}

struct Geometry {
    n: usize,
    dt: f64,
    xi0: f64,
    tau0: f64,
    mass: f64,
    /// Grid range of slice `j` at index `j`, for `1 <= j < n`.
    ranges: Vec<(f64, f64)>,
}

impl Geometry {
    fn new(q: &PropagatorQuery, reach: f64) -> Self {
        let n = q.slices;
        let mut g = Self {
            n,
            dt: q.step(),
            xi0: q.xi_start,
            tau0: q.tau_start,
            mass: q.mass,
            ranges: vec![(0.0, 0.0); n],
        };
        let (mut lo, mut hi) = (q.xi_end, q.xi_end);
        for j in (2..=n).rev() {
            let r = reach / g.a(j).sqrt();
            lo = g.ystar(j, lo) - r;
            hi = g.ystar(j, hi) + r;
            g.ranges[j - 1] = (lo, hi);
        }
        g
    }

    fn elapsed(&self, j: usize) -> f64 {
        self.dt * j as f64
    }

    fn a(&self, j: usize) -> f64 {
        self.mass * (1.0 / self.dt + 1.0 / self.elapsed(j - 1))
    }

    fn ystar(&self, j: usize, x: f64) -> f64 {
        let t = self.elapsed(j - 1);
        (x * t + self.xi0 * self.dt) / (t + self.dt)
    }
}

/// Values of `coeffs` (`k` per node) on a uniform grid.
struct Table {
    lo: f64,
    h: f64,
    m: usize,
    k: usize,
    vals: Vec<Complex64>,
}

impl Table {
    fn nodes(range: (f64, f64), m: usize) -> (f64, f64) {
        (range.0, (range.1 - range.0) / (m - 1) as f64)
    }

    fn interp_into(&self, y: f64, out: &mut [Complex64]) {
        let p = (y - self.lo) / self.h;
        let i = (p.floor() as isize).clamp(2, self.m as isize - 4) as usize;
        let t = p - i as f64;
        // Quintic Lagrange through nodes i-2 ..= i+3.
        let mut w = [0.0; 6];
        for (a, wa) in w.iter_mut().enumerate() {
            let xa = a as f64 - 2.0;
            let mut v = 1.0;
            for b in 0..6 {
                if b != a {
                    let xb = b as f64 - 2.0;
                    v *= (t - xb) / (xa - xb);
                }
            }
            *wa = v;
        }
        for (c, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (d, wd) in w.iter().enumerate() {
                acc += self.vals[(i - 2 + d) * self.k + c] * *wd;
            }
            *o = acc;
        }
    }
}

/// `e^{λz}` truncated after `k` coefficients (or `e^z` itself when `k = 1`
/// and `exact` is set).
fn exp_coeffs(z: Complex64, k: usize, exact: bool, out: &mut [Complex64]) {
    if exact {
        out[0] = z.exp();
        return;
    }
    let mut term = Complex64::new(1.0, 0.0);
    for (r, o) in out.iter_mut().enumerate().take(k) {
        if r > 0 {
            term = term * z / r as f64;
        }
        *o = term;
    }
}

fn cauchy(a: &[Complex64], b: &[Complex64], out: &mut [Complex64]) {
    for r in 0..out.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..=r {
            acc += a[s] * b[r - s];
        }
        out[r] = acc;
    }
}

/// Runs the slice recursion. `degree = None` propagates the full potential
/// factor; `Some(m)` propagates the coefficients of `λ⁰ … λ^m` in the
/// expansion of `e^{-iλΣVΔt}`.
pub(crate) fn run_envelope(q: &PropagatorQuery, grid: &SliceGrid, degree: Option<usize>) -> Result<EnvelopeRun> {
    q.validate()?;
    grid.validate()?;
    if degree.is_some() && grid.sampling == Sampling::Midpoint {
        return Err(invalid("perturbation terms use left-endpoint sampling only"));
    }
    let k = degree.map_or(1, |m| m + 1);
    let exact = degree.is_none();
    let geo = Geometry::new(q, grid.extent);
    let v = &q.potential;
    let (xi0, tau0, dt, mass) = (geo.xi0, geo.tau0, geo.dt, geo.mass);
    let phase = |val: f64| Complex64::new(0.0, -val * dt);

    if geo.n == 1 {
        let val = match grid.sampling {
            Sampling::LeftEndpoint => v.evaluate(xi0, tau0, mass),
            Sampling::Midpoint => v.evaluate(0.5 * (xi0 + q.xi_end), tau0 + 0.5 * dt, mass),
        };
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k];
        exp_coeffs(phase(val), k, exact, &mut coeffs);
        return Ok(EnvelopeRun { spread: vec![0.0; k], coeffs, levels: 0 });
    }

    let sched = grid.schedule();
    let h = grid.spacing();
    let mut level_values: Vec<Vec<Complex64>> = Vec::with_capacity(sched.nodes);
    for eps in sched.epsilons() {
        let half = grid.extent.min((36.0 / eps).sqrt());
        let intervals = ((2.0 * half / h) / PANEL_ORDER as f64).ceil().max(1.0) as usize * PANEL_ORDER;
        let w = FresnelWeights::with_order(half, intervals, eps, PANEL_ORDER)?;
        level_values.push(run_level(q, grid, &geo, &w, k, exact));
    }
    let mut coeffs = Vec::with_capacity(k);
    let mut spread = Vec::with_capacity(k);
    for c in 0..k {
        let series: Vec<Complex64> = level_values.iter().map(|l| l[c]).collect();
        let (val, sp) = sched.extrapolate(&series, geo.n - 1);
        coeffs.push(val);
        spread.push(sp);
    }
    if coeffs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Integrand("potential produced a non-finite amplitude".into()));
    }
    Ok(EnvelopeRun { coeffs, spread, levels: sched.nodes })
}

fn run_level(q: &PropagatorQuery, grid: &SliceGrid, geo: &Geometry, w: &FresnelWeights, k: usize, exact: bool) -> Vec<Complex64> {
    let v = &q.potential;
    let (xi0, tau0, dt, mass, n) = (geo.xi0, geo.tau0, geo.dt, geo.mass, geo.n);
    let m = grid.points;
    let phase = |val: f64| Complex64::new(0.0, -val * dt);
    let midpoint = grid.sampling == Sampling::Midpoint;

    // φ₁ on the grid of slice 1.
    let (lo, hx) = Table::nodes(geo.ranges[1], m);
    let mut vals = vec![Complex64::new(0.0, 0.0); m * k];
    for (i, chunk) in vals.chunks_mut(k).enumerate() {
        let x = lo + hx * i as f64;
        let val = if midpoint {
            v.evaluate(0.5 * (xi0 + x), tau0 + 0.5 * dt, mass)
        } else {
            v.evaluate(xi0, tau0, mass)
        };
        exp_coeffs(phase(val), k, exact, chunk);
    }
    let mut table = Table { lo, h: hx, m, k, vals };

    for j in 2..=n {
        let t_prev = tau0 + dt * (j - 1) as f64;
        if !midpoint {
            // u = φ·e^{-iV(y)Δt} on the previous grid.
            let mut factor = vec![Complex64::new(0.0, 0.0); k];
            let mut tmp = vec![Complex64::new(0.0, 0.0); k];
            for i in 0..table.m {
                let y = table.lo + table.h * i as f64;
                exp_coeffs(phase(v.evaluate(y, t_prev, mass)), k, exact, &mut factor);
                let cell = &mut table.vals[i * k..(i + 1) * k];
                if exact {
                    cell[0] *= factor[0];
                } else {
                    cauchy(cell, &factor, &mut tmp);
                    cell.copy_from_slice(&tmp);
                }
            }
        }
        let inv_root = 1.0 / geo.a(j).sqrt();
        let targets: Vec<f64> = if j < n {
            let (lo, hx) = Table::nodes(geo.ranges[j], m);
            (0..m).map(|i| lo + hx * i as f64).collect()
        } else {
            vec![q.xi_end]
        };
        let step = |x: f64| -> Vec<Complex64> {
            let ys = geo.ystar(j, x);
            let mut acc: Vec<ComplexSum> = vec![ComplexSum::new(); k];
            let mut buf = vec![Complex64::new(0.0, 0.0); k];
            for (&s, &wk) in w.nodes.iter().zip(&w.weights) {
                let y = ys + s * inv_root;
                table.interp_into(y, &mut buf);
                let mut weight = wk;
                if midpoint {
                    weight *= phase(v.evaluate(0.5 * (x + y), t_prev + 0.5 * dt, mass)).exp();
                }
                for (a, b) in acc.iter_mut().zip(&buf) {
                    a.add(weight * b);
                }
            }
            acc.iter().map(|a| a.value()).collect()
        };
        let rows: Vec<Vec<Complex64>> = targets.par_iter().map(|&x| step(x)).collect();
        if j == n {
            return rows.into_iter().next().unwrap_or_default();
        }
        let (lo, hx) = Table::nodes(geo.ranges[j], m);
        table = Table { lo, h: hx, m, k, vals: rows.into_iter().flatten().collect() };
    }
    unreachable!("the loop returns at the last slice")
}

fn report(q: &PropagatorQuery, grid: &SliceGrid, run: &EnvelopeRun) -> Result<SlicedReport> {
    let e = psi0_closed(q)?;
    let value = e * run.coeffs[0];
    let err = e.norm() * run.spread[0];
    if run.spread[0] > grid.rel_tol * run.coeffs[0].norm().max(1e-300) {
        return Err(Error::NoConvergence { value, abs_error_estimate: err, refinements: run.levels });
    }
    Ok(SlicedReport { value, abs_error_estimate: err, slices: q.slices, damping_levels: run.levels })
}

/// Time-sliced kernel with the potential weight `e^{-iV(x_{j-1})Δt}` on
/// every step.
pub fn psi_sliced(q: &PropagatorQuery, grid: &SliceGrid) -> Result<SlicedReport> {
    let run = run_envelope(q, grid, None)?;
    report(q, grid, &run)
}

/// [`psi_sliced`] with the potential switched off.
pub fn psi0_sliced(q: &PropagatorQuery, grid: &SliceGrid) -> Result<SlicedReport> {
    psi_sliced(&q.with_potential(Potential::zero()), grid)
}

/// Direct quadrature of the product of one-step kernels, for one or two
/// slices only: `∫ K(ξ′, z; Δt) e^{-iV(ξ′)Δt} K(z, ξ; Δt) e^{-iV(z)Δt} dz`.
pub fn psi_sliced_raw(q: &PropagatorQuery, tol: f64) -> Result<SlicedReport> {
    q.validate()?;
    let dt = q.step();
    let v = &q.potential;
    let first = Complex64::new(0.0, -v.evaluate(q.xi_start, q.tau_start, q.mass) * dt).exp();
    match q.slices {
        1 => Ok(SlicedReport {
            value: free_kernel(q.xi_start, q.xi_end, dt, q.mass) * first,
            abs_error_estimate: 0.0,
            slices: 1,
            damping_levels: 0,
        }),
        2 => {
            let t1 = q.tau_start + dt;
            let (value, err, levels) = two_step_raw(q.xi_start, q.xi_end, dt, dt, q.mass, tol, |z| {
                first * Complex64::new(0.0, -v.evaluate(z, t1, q.mass) * dt).exp()
            })?;
            Ok(SlicedReport { value, abs_error_estimate: err, slices: 2, damping_levels: levels })
        }
        n => Err(invalid(format!("raw quadrature is limited to two slices, got {n}"))),
    }
}

/// `∫ K(a, z; s) g(z) K(z, b; t) dz` by damped adaptive quadrature in `z`.
/// The damping `e^{-εA(z - z*)²}` is centred on the free stationary point.
fn two_step_raw<G>(a: f64, b: f64, s: f64, t: f64, mass: f64, tol: f64, g: G) -> Result<(Complex64, f64, usize)>
where
    G: Fn(f64) -> Complex64,
{
    let big_a = mass * (1.0 / s + 1.0 / t);
    let zc = (a * t + b * s) / (s + t);
    let sched = DampingSchedule::default();
    let mut values = Vec::with_capacity(sched.nodes);
    for eps in sched.epsilons() {
        let half = (36.0 / (eps * big_a)).sqrt();
        let r = hk_integrate_1d(
            |z| {
                let d = z - zc;
                free_kernel(a, z, s, mass) * free_kernel(z, b, t, mass) * g(z) * (-eps * big_a * d * d).exp()
            },
            (zc - half, zc + half),
            tol * 1e-2,
        )?;
        values.push(r.value);
    }
    let (value, spread) = sched.extrapolate(&values, 1);
    if spread > tol {
        return Err(Error::NoConvergence { value, abs_error_estimate: spread, refinements: values.len() });
    }
    Ok((value, spread, values.len()))
}

/// `|∫ K₀(a, z; s) K₀(z, b; t) dz - K₀(a, b; s + t)|` for the free kernel.
pub fn chapman_kolmogorov_residual(a: f64, b: f64, s: f64, t: f64, tol: f64, cfg: &IntegratorConfig) -> Result<f64> {
    cfg.validate()?;
    if !(s > 0.0 && t > 0.0) {
        return Err(invalid("both time steps must be positive"));
    }
    let (v, _, _) = two_step_raw(a, b, s, t, 1.0, tol, |_| Complex64::new(1.0, 0.0))?;
    Ok((v - free_kernel(a, b, s + t, 1.0)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathint::mehler_kernel;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn query(n: usize, v: Potential) -> PropagatorQuery {
        PropagatorQuery::new((0.3, 0.2), (-0.4, 1.4), n, v).unwrap()
    }

    #[test]
    fn one_slice_is_the_closed_form() {
        let q = query(1, Potential::zero());
        let r = psi0_sliced(&q, &SliceGrid::default()).unwrap();
        assert_eq!(r.value, psi0_closed(&q).unwrap());
    }

    #[test]
    fn free_slicing_reproduces_the_closed_form() {
        for n in [2, 3, 8] {
            let q = query(n, Potential::zero());
            let r = psi0_sliced(&q, &SliceGrid::default()).unwrap();
            assert!(rel(r.value, psi0_closed(&q).unwrap()) < 1e-9, "n={n}: {}", r.value);
        }
    }

    #[test]
    fn constant_potential_factors_out() {
        let c = 0.7;
        let q = query(4, Potential::constant(c));
        let r = psi_sliced(&q, &SliceGrid::default()).unwrap();
        let expected = psi0_closed(&q).unwrap() * Complex64::from_polar(1.0, -c * q.duration());
        assert!(rel(r.value, expected) < 1e-6);
    }

    #[test]
    fn harmonic_kernel_approaches_mehler() {
        let q = PropagatorQuery::new((0.2, 0.0), (0.5, 0.5), 16, Potential::harmonic(0.5)).unwrap();
        let r = psi_sliced(&q, &SliceGrid::default()).unwrap();
        let m = mehler_kernel(&q).unwrap();
        assert!(rel(r.value, m) < 1e-2, "{} vs {m}", r.value);
        let mid = SliceGrid { sampling: Sampling::Midpoint, ..SliceGrid::default() };
        let rm = psi_sliced(&q, &mid).unwrap();
        assert!(rel(rm.value, m) < 1e-2);
    }

    #[test]
    fn raw_two_slice_agrees_with_envelope() {
        for v in [Potential::zero(), Potential::harmonic(0.8), Potential::custom(|x, _| x.sin())] {
            let q = query(2, v);
            let raw = psi_sliced_raw(&q, 1e-8).unwrap();
            let env = psi_sliced(&q, &SliceGrid::default()).unwrap();
            assert!((raw.value - env.value).norm() < 1e-6, "{} vs {}", raw.value, env.value);
        }
        assert!(psi_sliced_raw(&query(3, Potential::zero()), 1e-8).is_err());
    }

    #[test]
    fn chapman_kolmogorov() {
        let cfg = IntegratorConfig::default();
        for (s, t) in [(0.2, 2.0), (1.3, 0.7), (2.0, 2.0)] {
            let r = chapman_kolmogorov_residual(0.4, -1.1, s, t, 1e-7, &cfg).unwrap();
            assert!(r < 1e-6, "s={s} t={t}: {r}");
        }
    }

    #[test]
    fn reflection_and_reversal() {
        let g = SliceGrid::default();
        for v in [Potential::zero(), Potential::harmonic(0.5)] {
            let f = PropagatorQuery::new((0.3, 0.0), (0.9, 0.5), 8, v.clone()).unwrap();
            let b = PropagatorQuery::new((-0.9, 0.0), (-0.3, 0.5), 8, v).unwrap();
            let (x, y) = (psi_sliced(&f, &g).unwrap().value, psi_sliced(&b, &g).unwrap().value);
            assert!(rel(x, y) < 1e-2, "{x} vs {y}");
        }
    }
}
