//! Numerical gauge integration.
//!
//! Every contribution is built from Riemann sums over endpoint-tagged
//! divisions. On a cell of width `w` the trapezoid value at level `k` is the
//! mean of the left- and right-tagged Riemann sums over `2^k` equal pieces;
//! the cell estimate is the Richardson (Romberg) extrapolation of levels
//! `0..=4`, and the disagreement between the last two extrapolants is the
//! local error estimate. A cell whose estimate exceeds its share of the
//! tolerance has its gauge halved (it is bisected); the other cells are left
//! alone.
//!
//! Integrable singularities whose indefinite integral is still
//! differentiable at the point (the typical Henstock-but-not-Lebesgue case)
//! are handled through *tag points*: the gauge forces a cell `(c, c + δ]`
//! tagged at `c`, contributing `f(c)·δ`, and `δ` is halved until two
//! successive levels agree.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sum::ComplexSum;

/// Points per Romberg cell (`2^ROMBERG_LEVELS + 1`).
const CELL_POINTS: usize = 17;
const ROMBERG_LEVELS: usize = 4;

/// Tolerances, caps and the damping schedule; the `"integrator"` section of
/// the run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub tol_1d: f64,
    pub tol_nd: f64,
    pub max_depth: usize,
    pub max_evals: usize,
    pub initial_cells: usize,
    pub dimension_cap: usize,
    /// Damping strengths for oscillatory tails, in units of `|c|`.
    pub tail_damping: DampingSchedule,
    /// Damping strengths for product-weight quadrature in several dimensions.
    pub product_damping: DampingSchedule,
    /// Node spacing of the product weights, in scaled increment units.
    pub product_spacing: f64,
    /// Intervals per Lagrange panel of the product weights.
    pub product_order: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            tol_1d: 1e-8,
            tol_nd: 1e-6,
            max_depth: 50,
            max_evals: 400_000_000,
            initial_cells: 8,
            dimension_cap: 4,
            tail_damping: DampingSchedule { eps_min: 0.005, eps_max: 0.1, nodes: 9 },
            product_damping: DampingSchedule::default(),
            product_spacing: 0.2,
            product_order: 6,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_1d > 0.0 && self.tol_nd > 0.0) {
            return Err(invalid("integrator tolerances must be positive"));
        }
        if self.initial_cells == 0 || self.max_depth == 0 || self.dimension_cap == 0 {
            return Err(invalid("integrator caps must be positive"));
        }
        if !(self.product_spacing > 0.0 && self.product_spacing <= 1.0) || !(1..=8).contains(&self.product_order) {
            return Err(invalid("product spacing must lie in (0, 1] and the panel order in 1..=8"));
        }
        self.tail_damping.validate()?;
        self.product_damping.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationReport {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub refinements: usize,
    pub converged: bool,
}

/// Options for a single one-dimensional integration.
#[derive(Debug, Clone)]
pub struct Options1D {
    pub tol: f64,
    pub max_depth: usize,
    pub max_evals: usize,
    pub initial_cells: usize,
    /// Points at which the gauge forces an endpoint-tagged cell.
    pub tag_points: Vec<f64>,
}

impl Options1D {
    pub fn with_tol(tol: f64) -> Self {
        Self::from_config(&IntegratorConfig::default(), tol)
    }

    pub fn from_config(cfg: &IntegratorConfig, tol: f64) -> Self {
        Self {
            tol,
            max_depth: cfg.max_depth,
            max_evals: cfg.max_evals,
            initial_cells: cfg.initial_cells,
            tag_points: Vec::new(),
        }
    }

    pub fn tag_points(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.tag_points.extend(points);
        self
    }
}

struct Engine<'a, F> {
    f: &'a F,
    max_depth: usize,
    max_evals: usize,
    evals: usize,
    refinements: usize,
    hit_cap: bool,
    acc: ComplexSum,
    err: f64,
}

impl<'a, F: Fn(f64) -> Complex64> Engine<'a, F> {
    fn new(f: &'a F, opts: &Options1D) -> Self {
        Self {
            f,
            max_depth: opts.max_depth,
            max_evals: opts.max_evals,
            evals: 0,
            refinements: 0,
            hit_cap: false,
            acc: ComplexSum::new(),
            err: 0.0,
        }
    }

    fn eval(&mut self, x: f64) -> Result<Complex64> {
        self.evals += 1;
        let z = (self.f)(x);
        if z.re.is_finite() && z.im.is_finite() {
            Ok(z)
        } else {
            Err(Error::Integrand(format!("non-finite value {z} at x = {x}")))
        }
    }

    /// Adds `∫_a^b f` to the accumulator, subdividing until each cell meets
    /// a tolerance proportional to its width.
    fn run(&mut self, a: f64, b: f64, tol: f64, initial_cells: usize) -> Result<()> {
        let n = initial_cells.max(1);
        let width = b - a;
        let density = tol / width;
        for i in 0..n {
            let lo = a + width * i as f64 / n as f64;
            let hi = if i + 1 == n { b } else { a + width * (i + 1) as f64 / n as f64 };
            let mut vals = [Complex64::new(0.0, 0.0); CELL_POINTS];
            for (k, v) in vals.iter_mut().enumerate() {
                *v = self.eval(node(lo, hi, k))?;
            }
            self.cell(lo, hi, vals, density, 0)?;
        }
        Ok(())
    }

    fn cell(
        &mut self,
        lo: f64,
        hi: f64,
        vals: [Complex64; CELL_POINTS],
        density: f64,
        depth: usize,
    ) -> Result<()> {
        let (estimate, err) = romberg(&vals, hi - lo);
        let local_tol = density * (hi - lo);
        // Two forced levels guard against sampling aliased with the cell grid.
        if depth >= 2 && err <= local_tol {
            self.acc.add(estimate);
            self.err += err;
            return Ok(());
        }
        let mid = 0.5 * (lo + hi);
        if depth >= self.max_depth || self.evals >= self.max_evals || !(lo < mid && mid < hi) {
            self.hit_cap = true;
            self.acc.add(estimate);
            self.err += err;
            return Ok(());
        }
        self.refinements += 1;
        let mut left = [Complex64::new(0.0, 0.0); CELL_POINTS];
        let mut right = [Complex64::new(0.0, 0.0); CELL_POINTS];
        for k in 0..CELL_POINTS {
            if k % 2 == 0 {
                left[k] = vals[k / 2];
                right[k] = vals[(CELL_POINTS - 1) / 2 + k / 2];
            } else {
                left[k] = self.eval(node(lo, mid, k))?;
                right[k] = self.eval(node(mid, hi, k))?;
            }
        }
        self.cell(lo, mid, left, density, depth + 1)?;
        self.cell(mid, hi, right, density, depth + 1)
    }
}

fn node(lo: f64, hi: f64, k: usize) -> f64 {
    if k == CELL_POINTS - 1 {
        hi
    } else {
        lo + (hi - lo) * k as f64 / (CELL_POINTS - 1) as f64
    }
}

/// Romberg table from the endpoint-tagged Riemann sums of one cell.
fn romberg(vals: &[Complex64; CELL_POINTS], width: f64) -> (Complex64, f64) {
    let mut table = [[Complex64::new(0.0, 0.0); ROMBERG_LEVELS + 1]; ROMBERG_LEVELS + 1];
    for (level, row) in table.iter_mut().enumerate() {
        let pieces = 1usize << level;
        let stride = (CELL_POINTS - 1) / pieces;
        let h = width / pieces as f64;
        // Left-tagged and right-tagged sums share all interior points.
        let mut left = ComplexSum::new();
        let mut right = ComplexSum::new();
        for p in 0..pieces {
            left.add(vals[p * stride] * h);
            right.add(vals[(p + 1) * stride] * h);
        }
        row[0] = 0.5 * (left.value() + right.value());
    }
    for level in 1..=ROMBERG_LEVELS {
        for j in 1..=level {
            let factor = 4f64.powi(j as i32);
            table[level][j] =
                table[level][j - 1] + (table[level][j - 1] - table[level - 1][j - 1]) / (factor - 1.0);
        }
    }
    let best = table[ROMBERG_LEVELS][ROMBERG_LEVELS];
    let prev = table[ROMBERG_LEVELS - 1][ROMBERG_LEVELS - 1];
    (best, (best - prev).norm())
}

/// Integrates `f` over the finite window `(a, b)` to absolute tolerance `tol`.
pub fn hk_integrate_1d<F>(f: F, window: (f64, f64), tol: f64) -> Result<IntegrationReport>
where
    F: Fn(f64) -> Complex64,
{
    hk_integrate_1d_with(f, window, &Options1D::with_tol(tol))
}

pub fn hk_integrate_1d_with<F>(f: F, window: (f64, f64), opts: &Options1D) -> Result<IntegrationReport>
where
    F: Fn(f64) -> Complex64,
{
    let (a, b) = window;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(invalid(format!("window ({a}, {b}) must be finite with a < b")));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }

    let mut cuts: Vec<f64> = opts
        .tag_points
        .iter()
        .copied()
        .filter(|c| (a..=b).contains(c))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut engine = Engine::new(&f, opts);
    if cuts.is_empty() {
        engine.run(a, b, opts.tol, opts.initial_cells)?;
        return finish(engine, opts.tol);
    }

    // Pieces with at most one tagged end each: split between consecutive
    // tag points so every piece touches exactly one of them.
    let mut pieces: Vec<(f64, f64, Option<TaggedEnd>)> = Vec::new();
    let mut edges = vec![a];
    for &c in &cuts {
        if c > a && c < b {
            edges.push(c);
        }
    }
    edges.push(b);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let lo_tag = cuts.contains(&lo);
        let hi_tag = cuts.contains(&hi);
        match (lo_tag, hi_tag) {
            (false, false) => pieces.push((lo, hi, None)),
            (true, false) => pieces.push((lo, hi, Some(TaggedEnd::Low))),
            (false, true) => pieces.push((lo, hi, Some(TaggedEnd::High))),
            (true, true) => {
                let mid = 0.5 * (lo + hi);
                pieces.push((lo, mid, Some(TaggedEnd::Low)));
                pieces.push((mid, hi, Some(TaggedEnd::High)));
            }
        }
    }
    let share = opts.tol / pieces.len() as f64;
    for (lo, hi, tagged) in pieces {
        match tagged {
            None => engine.run(lo, hi, share, opts.initial_cells)?,
            Some(end) => tagged_piece(&mut engine, lo, hi, end, share, opts)?,
        }
    }
    finish(engine, opts.tol)
}

#[derive(Debug, Clone, Copy)]
enum TaggedEnd {
    Low,
    High,
}

const TAG_LEVELS: usize = 60;

/// Shrinks the forced tagged cell at one end of `(lo, hi)` until two
/// consecutive gauge levels agree to within half the piece's budget.
fn tagged_piece<F: Fn(f64) -> Complex64>(
    engine: &mut Engine<'_, F>,
    lo: f64,
    hi: f64,
    end: TaggedEnd,
    tol: f64,
    opts: &Options1D,
) -> Result<()> {
    let c = match end {
        TaggedEnd::Low => lo,
        TaggedEnd::High => hi,
    };
    let fc = engine.eval(c)?;
    let span = hi - lo;
    let mut delta = 0.25 * span;
    // Remainder of the piece outside the tagged cell, integrated once.
    let (r_lo, r_hi) = match end {
        TaggedEnd::Low => (lo + delta, hi),
        TaggedEnd::High => (lo, hi - delta),
    };
    let outer_tol = 0.25 * tol;
    let mut sub = Engine::new(engine.f, opts);
    sub.run(r_lo, r_hi, outer_tol, opts.initial_cells)?;
    let mut rest = sub.acc.value();
    let mut rest_err = sub.err;
    let mut hit_cap = sub.hit_cap;
    let mut evals = sub.evals;
    let mut refinements = sub.refinements;
    let mut value = rest + fc * delta;
    let mut calm = 0;
    let mut last_diff = f64::INFINITY;

    for level in 1..=TAG_LEVELS {
        let next = 0.5 * delta;
        let (s_lo, s_hi) = match end {
            TaggedEnd::Low => (c + next, c + delta),
            TaggedEnd::High => (c - delta, c - next),
        };
        let ring_tol = 0.25 * tol * 0.5f64.powi(level as i32);
        let mut ring = Engine::new(engine.f, opts);
        ring.max_evals = opts.max_evals.saturating_sub(evals);
        ring.run(s_lo, s_hi, ring_tol, opts.initial_cells)?;
        evals += ring.evals;
        refinements += ring.refinements + 1;
        hit_cap |= ring.hit_cap;
        rest += ring.acc.value();
        rest_err += ring.err;
        delta = next;
        let new_value = rest + fc * delta;
        last_diff = (new_value - value).norm();
        value = new_value;
        if last_diff <= 0.5 * tol {
            calm += 1;
            // Two quiet levels in a row: a single small step can be a
            // coincidental zero of an oscillating remainder.
            if calm >= 2 {
                break;
            }
        } else {
            calm = 0;
        }
        if evals >= opts.max_evals {
            hit_cap = true;
            break;
        }
    }
    if calm < 2 {
        hit_cap = true;
    }
    engine.acc.add(value);
    engine.err += rest_err + last_diff;
    engine.evals += evals;
    engine.refinements += refinements;
    engine.hit_cap |= hit_cap;
    Ok(())
}

fn finish<F>(engine: Engine<'_, F>, tol: f64) -> Result<IntegrationReport> {
    let value = engine.acc.value();
    let est = engine.err;
    if engine.hit_cap && est > tol {
        return Err(Error::NoConvergence {
            value,
            abs_error_estimate: est,
            refinements: engine.refinements,
        });
    }
    Ok(IntegrationReport {
        value,
        abs_error_estimate: est,
        refinements: engine.refinements,
        converged: est <= tol,
    })
}

/// Tensor-product integration over a box in up to `dimension_cap`
/// dimensions: the outermost coordinate is integrated adaptively, each of
/// its samples integrating the remaining coordinates the same way at a
/// tighter tolerance.
pub fn hk_integrate_nd<F>(f: F, window: &[(f64, f64)], tol: f64, cfg: &IntegratorConfig) -> Result<IntegrationReport>
where
    F: Fn(&[f64]) -> Complex64,
{
    let n = window.len();
    if n == 0 {
        return Err(invalid("an n-dimensional window needs at least one axis"));
    }
    if n > cfg.dimension_cap {
        return Err(Error::DimensionCap { n, cap: cfg.dimension_cap });
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let mut point = vec![0.0; n];
    let report = nested(&f, window, 0, &mut point, tol, cfg)?;
    Ok(report)
}

const INNER_TOL_FACTOR: f64 = 1e-2;

fn nested<F>(
    f: &F,
    window: &[(f64, f64)],
    axis: usize,
    point: &mut [f64],
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<IntegrationReport>
where
    F: Fn(&[f64]) -> Complex64,
{
    let opts = Options1D::from_config(cfg, tol);
    if axis + 1 == window.len() {
        let prefix = point.to_vec();
        return hk_integrate_1d_with(
            |x| {
                let mut p = prefix.clone();
                p[axis] = x;
                f(&p)
            },
            window[axis],
            &opts,
        );
    }
    let inner_tol = tol * INNER_TOL_FACTOR;
    let failure = std::cell::RefCell::new(None::<Error>);
    let inner_err = std::cell::Cell::new(0.0f64);
    let inner_ref = std::cell::Cell::new(0usize);
    let prefix = point.to_vec();
    let outer = hk_integrate_1d_with(
        |x| {
            let mut p = prefix.clone();
            p[axis] = x;
            match nested(f, window, axis + 1, &mut p, inner_tol, cfg) {
                Ok(r) => {
                    inner_err.set(inner_err.get().max(r.abs_error_estimate));
                    inner_ref.set(inner_ref.get() + r.refinements);
                    r.value
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    Complex64::new(f64::NAN, f64::NAN)
                }
            }
        },
        window[axis],
        &opts,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    let (lo, hi) = window[axis];
    let est = outer.abs_error_estimate + (hi - lo) * inner_err.get();
    Ok(IntegrationReport {
        value: outer.value,
        abs_error_estimate: est,
        refinements: outer.refinements + inner_ref.get(),
        converged: outer.converged && est <= tol,
    })
}

/// Quadratic-phase tail `∫ e^{c x²/2} dx` from `lower_limit` to `±inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryTailSpec {
    pub phase_quadratic_coefficient: Complex64,
    pub lower_limit: f64,
    /// `+1` integrates towards `+inf`, `-1` towards `-inf`.
    pub direction: i8,
}

impl OscillatoryTailSpec {
    pub fn new(c: Complex64, lower_limit: f64, direction: i8) -> Result<Self> {
        let s = Self { phase_quadratic_coefficient: c, lower_limit, direction };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.phase_quadratic_coefficient;
        if c == Complex64::new(0.0, 0.0) || !(c.re.is_finite() && c.im.is_finite()) {
            return Err(invalid("phase coefficient must be finite and nonzero"));
        }
        if c.re > 0.0 || (c.re == 0.0 && c.im < 0.0) {
            return Err(invalid(format!(
                "phase coefficient {c} needs Re c <= 0, and Im c >= 0 when Re c = 0"
            )));
        }
        if !self.lower_limit.is_finite() || !(self.direction == 1 || self.direction == -1) {
            return Err(invalid("lower limit must be finite and direction ±1"));
        }
        Ok(())
    }
}

/// Gaussian-damped evaluation of the tail, extrapolated to zero damping.
///
/// Damping strengths are the tail schedule scaled by `|c|`; with
/// `κ = ε - c/2` the damped tail is `κ^{-1/2}` times a function analytic in
/// `w = 1/(1 - 2ε/c)` near `w = 1`.
pub fn oscillatory_improper(spec: &OscillatoryTailSpec, tol: f64, cfg: &IntegratorConfig) -> Result<Complex64> {
    spec.validate()?;
    cfg.validate()?;
    let c = spec.phase_quadratic_coefficient;
    let dir = spec.direction as f64;
    // Substitute x = dir·y so the tail always runs towards +inf in y.
    let start = dir * spec.lower_limit;
    let scale = c.norm();
    let inner_tol = tol * 1e-3;
    let mut values = Vec::with_capacity(cfg.tail_damping.nodes);
    for eps in cfg.tail_damping.epsilons() {
        let eps = eps * scale;
        let decay = eps - 0.5 * c.re;
        // Integrand magnitude e^{-decay·y²} below ~1e-18 beyond `end`.
        let end = (start.max(0.0).powi(2) + 42.0 / decay).sqrt();
        if end <= start {
            values.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let r = hk_integrate_1d_with(
            move |y| ((0.5 * c - eps) * y * y).exp(),
            (start, end),
            &Options1D::from_config(cfg, inner_tol),
        )?;
        values.push(r.value);
    }
    let (value, spread) = cfg.tail_damping.extrapolate_for_phase(&values, 1, c);
    if spread > tol.max(1e-14 * value.norm()) {
        return Err(Error::NoConvergence {
            value,
            abs_error_estimate: spread,
            refinements: values.len(),
        });
    }
    Ok(value)
}

/// `∫_{-inf}^{inf} e^{c x²/2} dx` as a core window `(-1, 1]` plus two tails.
pub fn oscillatory_full_line(c: Complex64, tol: f64, cfg: &IntegratorConfig) -> Result<Complex64> {
    let core = hk_integrate_1d_with(
        |x| (0.5 * c * x * x).exp(),
        (-1.0, 1.0),
        &Options1D::from_config(cfg, tol * 0.1),
    )?;
    let right = oscillatory_improper(&OscillatoryTailSpec::new(c, 1.0, 1)?, tol * 0.45, cfg)?;
    let left = oscillatory_improper(&OscillatoryTailSpec::new(c, -1.0, -1)?, tol * 0.45, cfg)?;
    Ok(core.value + right + left)
}

/// Gaussian damping strengths `ε` for integrals of the form
/// `∫ f(s) e^{(i/2 - ε)|s|²} ds` over `d` scaled variables.
///
/// Such an integral equals `w^{d/2} F(w)` with `w = 1/(1 + 2iε)` and `F`
/// smooth near `w = 1`, so `F` is interpolated in `w` through the damped
/// values and evaluated at `w = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DampingSchedule {
    pub eps_min: f64,
    pub eps_max: f64,
    pub nodes: usize,
}

impl Default for DampingSchedule {
    fn default() -> Self {
        Self { eps_min: 0.025, eps_max: 0.4, nodes: 9 }
    }
}

impl DampingSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_min > 0.0 && self.eps_min < self.eps_max && self.eps_max.is_finite()) {
            return Err(invalid("damping schedule needs 0 < eps_min < eps_max"));
        }
        if self.nodes < 3 {
            return Err(invalid("damping schedule needs at least three nodes"));
        }
        Ok(())
    }

    /// Geometric sequence from `eps_min` to `eps_max`.
    pub fn epsilons(&self) -> Vec<f64> {
        let ratio = self.eps_max / self.eps_min;
        let last = (self.nodes - 1) as f64;
        (0..self.nodes)
            .map(|k| self.eps_min * ratio.powf(k as f64 / last))
            .collect()
    }

    /// Extrapolates damped values (one per entry of [`Self::epsilons`]) to
    /// zero damping. Returns the value and the change caused by dropping the
    /// most strongly damped node.
    pub fn extrapolate(&self, values: &[Complex64], dims: usize) -> (Complex64, f64) {
        self.extrapolate_for_phase(values, dims, Complex64::new(0.0, 1.0))
    }

    /// As [`Self::extrapolate`] for the phase `e^{c s²/2}`, damping
    /// strengths taken as `|c|·ε` and `w = 1/(1 - 2|c|ε/c)`.
    pub fn extrapolate_for_phase(&self, values: &[Complex64], dims: usize, c: Complex64) -> (Complex64, f64) {
        let eps = self.epsilons();
        assert_eq!(eps.len(), values.len());
        let one = Complex64::new(1.0, 0.0);
        let ws: Vec<Complex64> = eps.iter().map(|e| (one - 2.0 * e * c.norm() / c).inv()).collect();
        let half = 0.5 * dims as f64;
        let js: Vec<Complex64> = ws
            .iter()
            .zip(values)
            .map(|(w, v)| v * (-half * w.ln()).exp())
            .collect();
        let full = neville_complex(&ws, &js, one);
        let k = ws.len() - 1;
        let reduced = neville_complex(&ws[..k], &js[..k], one);
        (full, (full - reduced).norm())
    }
}

/// Value at `x0` of the polynomial through complex points `(xs[i], ys[i])`.
pub fn neville_complex(xs: &[Complex64], ys: &[Complex64], x0: Complex64) -> Complex64 {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            let (xi, xj) = (xs[i], xs[i + m]);
            p[i] = ((x0 - xj) * p[i] - (x0 - xi) * p[i + 1]) / (xi - xj);
        }
    }
    p[0]
}

/// Value at `x = 0` of the polynomial interpolating `(xs[i], ys[i])`.
pub fn neville_at_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            let (xi, xj) = (xs[i], xs[i + m]);
            p[i] = (p[i] * xj - p[i + 1] * xi) / (xj - xi);
        }
    }
    p[0]
}

/// `sup_x |∫_a^x f|` sampled at `grid` equally spaced prefix points.
pub fn alexiewicz_seminorm<F>(f: F, interval: (f64, f64), grid: usize, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    let (a, b) = interval;
    if grid < 2 {
        return Err(invalid("the prefix grid needs at least two points"));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(invalid(format!("interval ({a}, {b}) must be finite with a < b")));
    }
    let steps = grid - 1;
    let piece_tol = tol / steps as f64;
    let mut prefix = ComplexSum::new();
    let mut best = 0.0f64;
    for k in 0..steps {
        let lo = a + (b - a) * k as f64 / steps as f64;
        let hi = if k + 1 == steps { b } else { a + (b - a) * (k + 1) as f64 / steps as f64 };
        let r = hk_integrate_1d_with(&f, (lo, hi), &Options1D::with_tol(piece_tol))?;
        prefix.add(r.value);
        best = best.max(prefix.value().norm());
    }
    Ok(best)
}
