//! Numerical witnesses around exchanging the path integral with the
//! perturbation series: growth of `∫|g₀|` over expanding windows, the
//! bounded-convergence diagnostic, and partial sums against sliced kernels.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fresnel::{incremental_density, IncrementSchedule};
use crate::gauge::{Cell1D, CellNd, ExtReal, TaggedCellNd};
use crate::output::{csv_err, csv_writer, fmt12};
use crate::pathint::{perturbation_terms, psi_sliced, PropagatorQuery, SliceGrid};
use crate::sum::NeumaierSum;

/// Most cells a single window sum may use.
const MAX_CELLS: usize = 1 << 20;
/// Cell width targeted by window divisions.
const TARGET_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub radius: f64,
    pub sum: f64,
    /// Bisection level: each axis of `[-R, R]` is cut into `2^level` cells.
    pub level: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
}

impl GrowthTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out)?;
        w.write_record(["radius", "sum", "level"]).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                fmt12(r.radius),
                fmt12(r.sum),
                r.level.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(invalid("radii must be positive and finite"));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("radii must increase strictly"));
    }
    Ok(())
}

/// Riemann sums `Σ β(x, I)` over the uniform division of `[-R, R]ⁿ`
/// tagged at lower corners, one row per radius.
pub fn window_sums<B>(beta: B, n: usize, radii: &[f64]) -> Result<GrowthTable>
where
    B: Fn(&TaggedCellNd) -> f64,
{
    check_radii(radii)?;
    if n == 0 {
        return Err(invalid("window sums need at least one dimension"));
    }
    let cap = MAX_CELLS.ilog2() as usize;
    if n > cap {
        return Err(Error::DimensionCap { n, cap });
    }
    let max_level = (MAX_CELLS.ilog2() / n as u32).max(1);
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let wanted = (2.0 * r / TARGET_WIDTH).log2().ceil().max(1.0) as u32;
        let level = wanted.min(max_level);
        let k = 1usize << level;
        let h = 2.0 * r / k as f64;
        let mut idx = vec![0usize; n];
        let mut acc = NeumaierSum::new();
        loop {
            let lows: Vec<f64> = idx.iter().map(|&i| -r + h * i as f64).collect();
            let factors = lows
                .iter()
                .zip(&idx)
                .map(|(&u, &i)| Cell1D::Bounded(u, if i + 1 == k { r } else { u + h }))
                .collect();
            let point = TaggedCellNd {
                tags: lows.iter().map(|&u| ExtReal::Finite(u)).collect(),
                cell: CellNd { factors },
            };
            let b = beta(&point);
            if !b.is_finite() {
                return Err(Error::Integrand(format!("beta is not finite at {lows:?}")));
            }
            acc.add(b);
            let mut j = n;
            let done = loop {
                if j == 0 {
                    break true;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < k {
                    break false;
                }
                idx[j] = 0;
            };
            if done {
                break;
            }
        }
        rows.push(GrowthRow { radius: r, sum: acc.value(), level });
    }
    Ok(GrowthTable { rows })
}

/// Window sums of `|g^T|` in increment coordinates. The modulus is the
/// constant `∏(2πΔt_j)^{-1/2}`, so each row is that constant times `(2R)ⁿ`.
pub fn abs_g0_growth(sched: &IncrementSchedule, radii: &[f64]) -> Result<GrowthTable> {
    sched.validate()?;
    window_sums(
        |p| incremental_density(p, sched).map_or(f64::NAN, |z| z.norm()),
        sched.len(),
        radii,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Bounded,
    Unbounded,
    Inconclusive,
}

/// Growth exponents `ln(S_{k+1}/S_k)/ln(R_{k+1}/R_k)` of a window table and
/// the resulting verdict: a doubling of `R` that roughly doubles (or more)
/// the sum on the last two steps reads as unbounded, a last exponent near
/// zero as bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaProbe {
    pub exponents: Vec<f64>,
    pub verdict: Verdict,
}

const UNBOUNDED_EXPONENT: f64 = 0.5;
const BOUNDED_EXPONENT: f64 = 0.05;

pub fn beta_probe(table: &GrowthTable) -> Result<BetaProbe> {
    if table.rows.len() < 3 {
        return Err(invalid("the probe needs at least three radii"));
    }
    let exponents: Vec<f64> = table
        .rows
        .windows(2)
        .map(|w| {
            if w[0].sum <= 0.0 || w[1].sum <= 0.0 {
                0.0
            } else {
                (w[1].sum / w[0].sum).ln() / (w[1].radius / w[0].radius).ln()
            }
        })
        .collect();
    let k = exponents.len();
    let verdict = if exponents[k - 2..].iter().all(|&p| p >= UNBOUNDED_EXPONENT) {
        Verdict::Unbounded
    } else if exponents[k - 1].abs() <= BOUNDED_EXPONENT {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    Ok(BetaProbe { exponents, verdict })
}

/// Where and how the diagnostic samples associated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticSetup {
    pub samples: usize,
    pub eps: f64,
    pub m_cap: usize,
    pub seed: u64,
    /// Finite tags are drawn from `[-window, window]` (increment coordinates).
    pub window: f64,
    pub radii: Vec<f64>,
}

impl Default for DiagnosticSetup {
    fn default() -> Self {
        Self {
            samples: 64,
            eps: 1e-6,
            m_cap: 60,
            seed: 0x5eed,
            window: 4.0,
            radii: (0..=6).map(|k| f64::from(1u32 << k)).collect(),
        }
    }
}

impl DiagnosticSetup {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(invalid("at least one sample is required"));
        }
        if !(self.eps > 0.0 && self.window > 0.0) {
            return Err(invalid("eps and window must be positive"));
        }
        check_radii(&self.radii)
    }
}

/// Result of [`bounded_convergence_diagnostic`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceWitness {
    pub m: usize,
    pub points: Vec<TaggedCellNd>,
    /// `max |h_m - h| / β` over the samples at the reported `m`.
    pub max_ratio: f64,
    pub beta_probe: BetaProbe,
}

/// Draws `samples` associated points in `n` dimensions: even-numbered ones
/// carry finite tags (lower corners of bounded cells), odd-numbered ones an
/// infinite tag in the last coordinate on a tail cell.
pub fn sample_points(n: usize, setup: &DiagnosticSetup) -> Vec<TaggedCellNd> {
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let w = setup.window;
    (0..setup.samples)
        .map(|s| {
            let mut tags = Vec::with_capacity(n);
            let mut factors = Vec::with_capacity(n);
            for j in 0..n {
                let u = rng.gen_range(-w..w);
                if s % 2 == 1 && j + 1 == n {
                    if rng.gen_bool(0.5) {
                        tags.push(ExtReal::PosInf);
                        factors.push(Cell1D::PosTail(u));
                    } else {
                        tags.push(ExtReal::NegInf);
                        factors.push(Cell1D::NegTail(u));
                    }
                } else {
                    let width = rng.gen_range(1e-3..1.0);
                    tags.push(ExtReal::Finite(u));
                    factors.push(Cell1D::Bounded(u, u + width));
                }
            }
            TaggedCellNd { tags, cell: CellNd { factors } }
        })
        .collect()
}

/// Smallest `m <= m_cap` with `|h_m - h| < eps·β` at every sampled point,
/// together with the window-growth verdict for `β`.
pub fn bounded_convergence_diagnostic<H, L, B>(
    family: H,
    limit: L,
    beta: B,
    n: usize,
    setup: &DiagnosticSetup,
) -> Result<ConvergenceWitness>
where
    H: Fn(usize, &TaggedCellNd) -> Complex64,
    L: Fn(&TaggedCellNd) -> Complex64,
    B: Fn(&TaggedCellNd) -> f64,
{
    setup.validate()?;
    let points = sample_points(n, setup);
    let limits: Vec<Complex64> = points.iter().map(&limit).collect();
    let betas: Vec<f64> = points.iter().map(&beta).collect();
    if betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::Integrand("beta must be positive and finite at every sample".into()));
    }
    let probe = beta_probe(&window_sums(&beta, n, &setup.radii)?)?;
    for m in 0..=setup.m_cap {
        let mut worst = 0.0f64;
        let mut ok = true;
        for ((p, h), b) in points.iter().zip(&limits).zip(&betas) {
            let d = (family(m, p) - h).norm();
            // NaN never satisfies the strict inequality.
            if !(d < setup.eps * b) {
                ok = false;
                break;
            }
            worst = worst.max(d / b);
        }
        if ok {
            return Ok(ConvergenceWitness { m, points, max_ratio: worst, beta_probe: probe });
        }
    }
    Err(Error::NoMFound { cap: setup.m_cap })
}

/// `Σ_j V(x_{j-1}, t_{j-1}) Δt` along the path whose increments are the
/// tags of `p`. Only the first `n - 1` positions enter, so an infinite last
/// tag is harmless.
fn action_sum(q: &PropagatorQuery, p: &TaggedCellNd) -> f64 {
    let dt = q.step();
    let mut x = q.xi_start;
    let mut s = 0.0;
    for (j, tag) in p.tags.iter().enumerate() {
        s += q.potential.evaluate(x, q.slice_time(j), q.mass) * dt;
        x += tag.as_finite().unwrap_or(0.0);
    }
    s
}

/// `Σ_{r<=m} (-iS)^r / r!`.
fn exp_partial(s: f64, m: usize) -> Complex64 {
    let z = Complex64::new(0.0, -s);
    let mut term = Complex64::new(1.0, 0.0);
    let mut acc = term;
    for r in 1..=m {
        term = term * z / r as f64;
        acc += term;
    }
    acc
}

fn query_schedule(q: &PropagatorQuery) -> Result<IncrementSchedule> {
    IncrementSchedule::uniform(q.slices, q.step(), q.tau_start, q.xi_start)
}

/// The diagnostic for the partial-sum integrands
/// `h_m = g₀·Σ_{r<=m}(-iS)^r/r!`, limit `h = g₀·e^{-iS}`, `β = |g₀|`.
pub fn perturbation_witness(q: &PropagatorQuery, setup: &DiagnosticSetup) -> Result<ConvergenceWitness> {
    q.validate()?;
    let sched = query_schedule(q)?;
    let g0 = |p: &TaggedCellNd| incremental_density(p, &sched).unwrap_or(Complex64::new(f64::NAN, 0.0));
    bounded_convergence_diagnostic(
        |m, p| g0(p) * exp_partial(action_sum(q, p), m),
        |p| g0(p) * Complex64::new(0.0, -action_sum(q, p)).exp(),
        |p| g0(p).norm(),
        q.slices,
        setup,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExchangeRow {
    pub m: usize,
    pub partial_sum: Complex64,
    pub sliced: Complex64,
    pub abs_diff: f64,
}

/// `{beta_probe, m_found, eps}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeVerdict {
    pub beta_probe: Verdict,
    pub m_found: Option<usize>,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeReport {
    pub rows: Vec<ExchangeRow>,
    pub growth: GrowthTable,
    pub verdict: ExchangeVerdict,
}

impl ExchangeReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out)?;
        w.write_record(["m", "re_partial_sum", "im_partial_sum", "re_sliced", "im_sliced", "abs_diff"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.m.to_string(),
                fmt12(r.partial_sum.re),
                fmt12(r.partial_sum.im),
                fmt12(r.sliced.re),
                fmt12(r.sliced.im),
                fmt12(r.abs_diff),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Partial sums `S_0 … S_{m_max}` against the sliced kernel, the window
/// growth of `|g₀|` for the query's schedule, and the bounded-convergence
/// witness for the partial-sum integrands.
pub fn exchange_experiment(
    q: &PropagatorQuery,
    m_max: usize,
    grid: &SliceGrid,
    setup: &DiagnosticSetup,
) -> Result<ExchangeReport> {
    q.validate()?;
    let sliced = psi_sliced(q, grid)?.value;
    let terms = perturbation_terms(m_max, q, grid)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let rows = terms
        .iter()
        .enumerate()
        .map(|(m, t)| {
            sum += t.value;
            ExchangeRow { m, partial_sum: sum, sliced, abs_diff: (sum - sliced).norm() }
        })
        .collect();
    let growth = abs_g0_growth(&query_schedule(q)?, &setup.radii)?;
    let probe = beta_probe(&growth)?;
    let m_found = match perturbation_witness(q, setup) {
        Ok(w) => Some(w.m),
        Err(Error::NoMFound { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ExchangeReport {
        rows,
        growth,
        verdict: ExchangeVerdict { beta_probe: probe.verdict, m_found, eps: setup.eps },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathint::Potential;
    use std::f64::consts::PI;

    fn one_step(dt: f64) -> IncrementSchedule {
        IncrementSchedule::new(vec![dt], 0.0, 0.0).unwrap()
    }

    #[test]
    fn growth_is_linear_in_one_dimension() {
        let radii: Vec<f64> = (1..=64).map(f64::from).collect();
        let t = abs_g0_growth(&one_step(1.0), &radii).unwrap();
        for row in &t.rows {
            let exact = 2.0 * row.radius / (2.0 * PI).sqrt();
            assert!((row.sum - exact).abs() < 1e-10, "R={}", row.radius);
        }
        assert!((t.rows[0].sum - 0.7979).abs() < 1e-4);
        assert!((t.rows[9].sum - 10.0 * t.rows[0].sum).abs() < 1e-12);
        let t = abs_g0_growth(&one_step(0.3), &[1.0, 2.0, 4.0]).unwrap();
        assert!((t.rows[1].sum - 2.0 * t.rows[0].sum).abs() < 1e-12);
        assert!((t.rows[2].sum - 2.0 * t.rows[1].sum).abs() < 1e-12);
    }

    #[test]
    fn growth_in_two_dimensions() {
        let sched = IncrementSchedule::new(vec![0.5, 1.5], 0.0, 0.0).unwrap();
        let t = abs_g0_growth(&sched, &[1.0, 2.0]).unwrap();
        let c = 1.0 / (2.0 * PI * 0.5 * 2.0 * PI * 1.0).sqrt();
        assert!((t.rows[1].sum - 16.0 * c).abs() < 1e-10);
    }

    #[test]
    fn probe_verdicts() {
        let radii: Vec<f64> = (0..=6).map(|k| f64::from(1u32 << k)).collect();
        let g0 = beta_probe(&abs_g0_growth(&one_step(1.0), &radii).unwrap()).unwrap();
        assert_eq!(g0.verdict, Verdict::Unbounded);
        let gauss = window_sums(|p| (-(p.tags[0].to_f64().powi(2))).exp() * p.cell.volume(), 1, &radii).unwrap();
        assert_eq!(beta_probe(&gauss).unwrap().verdict, Verdict::Bounded);
        assert!(window_sums(|_| 1.0, 1, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn constant_family_needs_no_terms() {
        let setup = DiagnosticSetup { samples: 10, ..DiagnosticSetup::default() };
        let w = bounded_convergence_diagnostic(|_, _| Complex64::new(2.0, 1.0), |_| Complex64::new(2.0, 1.0), |_| 1.0, 2, &setup)
            .unwrap();
        assert_eq!(w.m, 0);
        assert_eq!(w.max_ratio, 0.0);
    }

    #[test]
    fn reciprocal_family_finds_ceiling() {
        let sched = one_step(1.0);
        let g0 = |p: &TaggedCellNd| incremental_density(p, &sched).unwrap();
        let eps = 1.0 / 7.5;
        let setup = DiagnosticSetup { samples: 20, eps, ..DiagnosticSetup::default() };
        let w = bounded_convergence_diagnostic(
            |m, p| g0(p) * (1.0 + 1.0 / m as f64),
            |p| g0(p),
            |p| g0(p).norm(),
            1,
            &setup,
        )
        .unwrap();
        assert_eq!(w.m, 8);
        assert!(w.points.iter().any(|p| p.has_infinite_tag()));
        assert!(w.points.iter().any(|p| !p.has_infinite_tag()));
    }

    #[test]
    fn no_m_found() {
        let setup = DiagnosticSetup { samples: 4, m_cap: 5, ..DiagnosticSetup::default() };
        let r = bounded_convergence_diagnostic(|_, _| Complex64::new(1.0, 0.0), |_| Complex64::new(0.0, 0.0), |_| 1.0, 1, &setup);
        assert!(matches!(r, Err(Error::NoMFound { cap: 5 })));
    }

    #[test]
    fn sampling_is_reproducible() {
        let setup = DiagnosticSetup::default();
        assert_eq!(sample_points(3, &setup), sample_points(3, &setup));
        let other = DiagnosticSetup { seed: 1, ..setup.clone() };
        assert_ne!(sample_points(3, &setup), sample_points(3, &other));
        assert!(sample_points(3, &setup).iter().all(|p| p.is_associated()));
    }

    #[test]
    fn perturbation_witness_for_constant_potential() {
        let q = PropagatorQuery::new((0.0, 0.0), (0.3, 1.0), 3, Potential::constant(1.0)).unwrap();
        let w = perturbation_witness(&q, &DiagnosticSetup::default()).unwrap();
        // Remainder of e^{-i} after m terms stays below 1/(m+1)!.
        assert!((8..=9).contains(&w.m), "m = {}", w.m);
        assert_eq!(w.beta_probe.verdict, Verdict::Unbounded);
    }

    #[test]
    fn free_experiment_rows_coincide() {
        let q = PropagatorQuery::new((0.0, 0.0), (0.5, 1.0), 2, Potential::zero()).unwrap();
        let r = exchange_experiment(&q, 3, &SliceGrid::default(), &DiagnosticSetup::default()).unwrap();
        assert!(r.rows.iter().all(|row| row.abs_diff < 1e-12));
        assert_eq!(r.verdict.beta_probe, Verdict::Unbounded);
        assert_eq!(r.verdict.m_found, Some(0));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);
    }
}
