//! The acceptance suite: eight numbered checks, each reporting one line.
//! Shared by the `acceptance` test target and `hkpath selftest`.

use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exchange::{abs_g0_growth, beta_probe, exchange_experiment, window_sums, Verdict};
use crate::fresnel::{incremental_distribution, FigureNd, IncrementSchedule, G_n_distribution};
use crate::gauge::{cousin_division, validate_division, CellNd, CousinOptions, Division1D, ExtReal, Gauge1D};
use crate::integrate::{hk_integrate_1d, oscillatory_full_line, oscillatory_improper, OscillatoryTailSpec};
use crate::pathint::{
    chapman_kolmogorov_residual, mehler_kernel, perturbation_terms, psi0_closed, psi0_sliced, psi_sliced,
    Potential, PropagatorQuery,
};

pub const CRITERIA: [u32; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {}: {}: {} [{:.2} s of {} s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

/// Pass flag plus a one-line summary.
type Check = Result<(bool, String)>;

pub fn run_criterion(id: u32, cfg: &RunConfig) -> CriterionOutcome {
    let (title, budget, check): (&'static str, u64, fn(&RunConfig) -> Check) = match id {
        1 => ("Fresnel values", 10, fresnel_values),
        2 => ("distribution normalization", 30, normalization),
        3 => ("free propagator", 120, free_propagator),
        4 => ("perturbation series", 120, perturbation_series),
        5 => ("harmonic cross-check", 120, harmonic),
        6 => ("non-absolute integrability", 10, growth),
        7 => ("property suites", 300, property_suites),
        8 => ("coexistence report", 120, coexistence),
        _ => ("unknown criterion", 0, |_| Ok((false, "no such criterion".into()))),
    };
    let budget = Duration::from_secs(budget);
    let start = Instant::now();
    let (mut passed, mut detail) = match check(cfg) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    if elapsed > budget {
        passed = false;
        detail.push_str("; over the time budget");
    }
    CriterionOutcome { id, title, passed, detail, elapsed, budget }
}

pub fn run_all(cfg: &RunConfig) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|&id| run_criterion(id, cfg)).collect()
}

fn fresnel_values(cfg: &RunConfig) -> Check {
    let ic = &cfg.integrator;
    let half = oscillatory_full_line(c(0.0, 1.0), 1e-9, ic)?;
    let half_ref = (c(2.0 * std::f64::consts::PI, 0.0) / c(0.0, -1.0)).sqrt();
    let unit = oscillatory_full_line(c(0.0, 2.0), 1e-9, ic)?;
    let unit_ref = (c(0.0, std::f64::consts::PI)).sqrt();
    let core = hk_integrate_1d(|u| c(0.0, u * u).exp(), (0.0, 1.0), 1e-11)?.value;
    let tail = oscillatory_improper(&OscillatoryTailSpec::new(c(0.0, 2.0), 1.0, 1)?, 1e-9, ic)?;
    let quarter = core + tail;
    let target = 0.5 * (std::f64::consts::PI / 2.0).sqrt();
    let errs = [
        rel(half, half_ref),
        rel(unit, unit_ref),
        (quarter.re - target).abs(),
        (quarter.im - target).abs(),
    ];
    let ok = errs[0] < 1e-6 && errs[1] < 1e-6 && errs[2] < 1e-6 && errs[3] < 1e-6;
    Ok((
        ok,
        format!(
            "rel {:.1e} (x²/2), rel {:.1e} (y²), abs {:.1e} (cos), abs {:.1e} (sin)",
            errs[0], errs[1], errs[2], errs[3]
        ),
    ))
}

fn random_schedule(rng: &mut ChaCha8Rng) -> Result<IncrementSchedule> {
    let n = rng.gen_range(1..=4);
    let origin = rng.gen_range(0.0..2.0);
    let mut t = origin;
    let times = (0..n)
        .map(|_| {
            t += rng.gen_range(0.05..2.0);
            t
        })
        .collect();
    IncrementSchedule::new(times, origin, rng.gen_range(-2.0..2.0))
}

fn normalization(cfg: &RunConfig) -> Check {
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let g = G_n_distribution(&FigureNd::new(vec![CellNd::full_space(n)])?);
        worst = worst.max((g - 1.0).norm());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.lab.seed);
    let mut worst_t = 0.0f64;
    for _ in 0..5 {
        let sched = random_schedule(&mut rng)?;
        let g = incremental_distribution(&CellNd::full_space(sched.len()), &sched)?;
        worst_t = worst_t.max((g - 1.0).norm());
    }
    Ok((
        worst < 1e-8 && worst_t < 1e-8,
        format!("max |G_n - 1| = {worst:.1e}, max |G^T - 1| = {worst_t:.1e} over 5 schedules"),
    ))
}

fn free_propagator(cfg: &RunConfig) -> Check {
    let grid = &cfg.pathint.grid;
    let mass = cfg.pathint.mass;
    let points = [(0.0, 1.0), (0.5, 1.0), (-1.0, 2.0), (1.5, 0.5), (2.0, 3.0)];
    let mut worst = 0.0f64;
    for &(xi, tau) in &points {
        for n in [2, 4, 8] {
            let q = PropagatorQuery::new((0.0, 0.0), (xi, tau), n, Potential::zero())?.with_mass(mass)?;
            worst = worst.max(rel(psi0_sliced(&q, grid)?.value, psi0_closed(&q)?));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.lab.seed ^ 0xc4);
    let mut worst_ck = 0.0f64;
    for _ in 0..5 {
        let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (s, t) = (rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0));
        worst_ck = worst_ck.max(chapman_kolmogorov_residual(a, b, s, t, 1e-7, &cfg.integrator)?);
    }
    Ok((
        worst < 1e-3 && worst_ck <= 1e-4,
        format!("max rel {worst:.1e} over 5 points × n∈{{2,4,8}}, max CK residual {worst_ck:.1e}"),
    ))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn perturbation_series(cfg: &RunConfig) -> Check {
    let grid = &cfg.pathint.grid;
    let mass = cfg.pathint.mass;
    let cases = [(1.0, 1.0), (-2.0, 1.0), (0.8, 2.5)];
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    for &(cv, tau) in &cases {
        let q = PropagatorQuery::new((0.1, 0.0), (0.6, tau), 4, Potential::constant(cv))?.with_mass(mass)?;
        let psi0 = psi0_closed(&q)?;
        let a = cv.abs() * tau;
        let exact = c(0.0, -cv * tau).exp() * psi0;
        let terms = perturbation_terms(12, &q, grid)?;
        let mut s = c(0.0, 0.0);
        for (m, t) in terms.iter().enumerate() {
            s += t.value;
            let bound = a.powi(m as i32 + 1) / factorial(m + 1) * psi0.norm() + 1e-6;
            worst_excess = worst_excess.max((s - exact).norm() - bound);
            if m <= 6 {
                let want = c(0.0, -cv * tau).powu(m as u32) / factorial(m);
                worst_ratio = worst_ratio.max(rel(t.value / psi0, want));
            }
        }
    }
    Ok((
        worst_excess <= 0.0 && worst_ratio < 1e-5,
        format!("max (|S_m - e^(-icT)ψ₀| - bound) = {worst_excess:.1e}, max ψ_r ratio rel {worst_ratio:.1e}"),
    ))
}

fn harmonic(cfg: &RunConfig) -> Check {
    let q = PropagatorQuery::new((0.2, 0.0), (0.5, 0.5), 16, Potential::harmonic(0.5))?
        .with_mass(cfg.pathint.mass)?;
    let sliced = psi_sliced(&q, &cfg.pathint.grid)?.value;
    let oracle = mehler_kernel(&q)?;
    let r = rel(sliced, oracle);
    Ok((r < 1e-2, format!("rel {r:.1e} against the Mehler kernel")))
}

fn growth(_cfg: &RunConfig) -> Check {
    let radii: Vec<f64> = (1..=64).map(f64::from).collect();
    let sched = IncrementSchedule::new(vec![1.0], 0.0, 0.0)?;
    let table = abs_g0_growth(&sched, &radii)?;
    let worst = table
        .rows
        .iter()
        .map(|r| (r.sum - 2.0 * r.radius / (2.0 * std::f64::consts::PI).sqrt()).abs())
        .fold(0.0, f64::max);
    let g0 = beta_probe(&table)?.verdict;
    let gauss = window_sums(|p| (-p.tags[0].to_f64().powi(2)).exp() * p.cell.volume(), 1, &radii)?;
    let control = beta_probe(&gauss)?.verdict;
    Ok((
        worst < 1e-10 && g0 == Verdict::Unbounded && control == Verdict::Bounded,
        format!("max row error {worst:.1e}, |g₀| probe {g0:?}, Gaussian probe {control:?}"),
    ))
}

fn random_gauge(rng: &mut ChaCha8Rng) -> Gauge1D {
    let d0 = rng.gen_range(0.02..0.6);
    let k = rng.gen_range(0.1..5.0);
    let phase = rng.gen_range(0.0..6.3);
    let spread = rng.gen_range(0.0..0.05);
    let (neg, pos) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
    Gauge1D::new(move |x| match x {
        ExtReal::NegInf => neg,
        ExtReal::PosInf => pos,
        ExtReal::Finite(x) => d0 * (0.2 + 0.8 * (k * x + phase).sin().abs()) / (1.0 + spread * x * x),
    })
}

fn division_round_trip(seed: u64, count: usize) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..count {
        let g = random_gauge(&mut rng);
        let d = cousin_division(&g, &CousinOptions::default())?;
        let back = Division1D::from_json(&d.to_json()?)?;
        let report = validate_division(&back, Some(&g));
        if back != d || !report.is_valid() {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Random smooth integrand: a complex cubic plus a complex exponential.
fn random_integrand(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> Complex64 {
    let coef: Vec<Complex64> = (0..4).map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
    let amp = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let omega = rng.gen_range(-6.0..6.0);
    move |x| coef.iter().rev().fold(c(0.0, 0.0), |acc, a| acc * x + a) + amp * c(0.0, omega * x).exp()
}

fn integrator_laws(seed: u64, count: usize) -> Result<(usize, f64)> {
    let tol = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    let mut worst = 0.0f64;
    for _ in 0..count {
        let f = random_integrand(&mut rng);
        let g = random_integrand(&mut rng);
        let (alpha, beta) = (c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)), c(rng.gen_range(-2.0..2.0), 0.0));
        let lo = rng.gen_range(-2.0..0.0);
        let hi = rng.gen_range(0.5..3.0);
        let mid = rng.gen_range(lo..hi);
        let fi = hk_integrate_1d(&f, (lo, hi), tol)?;
        let gi = hk_integrate_1d(&g, (lo, hi), tol)?;
        let lin = hk_integrate_1d(|x| alpha * f(x) + beta * g(x), (lo, hi), tol)?;
        let budget_lin = lin.abs_error_estimate + alpha.norm() * fi.abs_error_estimate + beta.norm() * gi.abs_error_estimate + 3.0 * tol;
        let e_lin = (lin.value - alpha * fi.value - beta * gi.value).norm();
        let conj = hk_integrate_1d(|x| f(x).conj(), (lo, hi), tol)?;
        let e_conj = (conj.value - fi.value.conj()).norm();
        let budget_conj = conj.abs_error_estimate + fi.abs_error_estimate + 2.0 * tol;
        let left = hk_integrate_1d(&f, (lo, mid), tol)?;
        let right = hk_integrate_1d(&f, (mid, hi), tol)?;
        let e_add = (left.value + right.value - fi.value).norm();
        let budget_add = left.abs_error_estimate + right.abs_error_estimate + fi.abs_error_estimate + 3.0 * tol;
        if e_lin > budget_lin || e_conj > budget_conj || e_add > budget_add {
            bad += 1;
        }
        worst = worst.max(e_lin).max(e_conj).max(e_add);
    }
    Ok((bad, worst))
}

/// Bytes written by a fixed mix of computations; equal across runs.
fn deterministic_bytes(cfg: &RunConfig) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.lab.seed);
    let d = cousin_division(&random_gauge(&mut rng), &CousinOptions::default())?;
    out.extend_from_slice(d.to_json()?.as_bytes());
    let q = PropagatorQuery::new((0.0, 0.0), (0.4, 1.0), 3, Potential::constant(1.0))?;
    let lab = crate::exchange::DiagnosticSetup { samples: 16, ..cfg.lab.clone() };
    let report = exchange_experiment(&q, 4, &cfg.pathint.grid, &lab)?;
    report.write_csv(&mut out)?;
    report.growth.write_csv(&mut out)?;
    out.extend_from_slice(serde_json::to_string(&report.verdict)?.as_bytes());
    Ok(out)
}

fn property_suites(cfg: &RunConfig) -> Check {
    let bad_div = division_round_trip(cfg.lab.seed, 500)?;
    let (bad_int, worst) = integrator_laws(cfg.lab.seed.wrapping_add(1), 200)?;
    let same = deterministic_bytes(cfg)? == deterministic_bytes(cfg)?;
    Ok((
        bad_div == 0 && bad_int == 0 && same,
        format!(
            "{bad_div}/500 divisions with violations, {bad_int}/200 integrand pairs over budget (worst {worst:.1e}), repeat runs {}",
            if same { "identical" } else { "differ" }
        ),
    ))
}

fn coexistence(cfg: &RunConfig) -> Check {
    let q = PropagatorQuery::new((0.0, 0.0), (0.5, 1.0), 4, Potential::constant(1.0))?.with_mass(cfg.pathint.mass)?;
    let report = exchange_experiment(&q, 12, &cfg.pathint.grid, &cfg.lab)?;
    let budget = 1e-8;
    let diffs: Vec<f64> = report.rows.iter().map(|r| r.abs_diff).collect();
    let decays = diffs.windows(2).skip(2).all(|w| w[1] <= w[0] + budget);
    let last = *diffs.last().ok_or_else(|| Error::Integrand("empty table".into()))?;
    let converged = decays && last < 1e-8 + budget;
    let unbounded = report.verdict.beta_probe == Verdict::Unbounded;
    Ok((
        converged && unbounded && report.verdict.m_found.is_some(),
        format!(
            "partial sums reach |S_12 - ψ| = {last:.1e} ({}), β = |g₀| probe {:?}, m found {:?}",
            if decays { "nonincreasing from m = 2" } else { "not monotone" },
            report.verdict.beta_probe,
            report.verdict.m_found
        ),
    ))
}

