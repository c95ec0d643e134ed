//! Quadratic-phase (Fresnel) quantities.
//!
//! The basic object is the incomplete Fresnel integral
//!
//! ```text
//! F(u) = ∫₀ᵘ e^{i y²/2} dy,        F(±inf) = ±√(π/2)·e^{iπ/4}
//! ```
//!
//! evaluated by its Maclaurin series for `|u| <= 3` and, beyond that, through
//! the tail `∫ᵤ^∞ e^{iy²/2} dy`, which is a rotated complementary error
//! function computed from the continued fraction whose convergents sum the
//! asymptotic series. From `F` come the normalised density `g_n` and
//! distribution `G_n` on cells, and their incremental (transition) forms.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gauge::{Cell1D, CellNd, ExtReal, TaggedCellNd};
use crate::sum::ComplexSum;
use crate::output::{csv_err, csv_writer, fmt12};

const SERIES_LIMIT: f64 = 3.0;
const SERIES_TERMS: usize = 80;
const CF_MAX_ITER: usize = 5000;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Orientation of the quadratic phase: `e^{+iy²/2}` or its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSign {
    Forward,
    Backward,
}

impl PhaseSign {
    fn unit(self) -> Complex64 {
        match self {
            PhaseSign::Forward => c(0.0, 1.0),
            PhaseSign::Backward => c(0.0, -1.0),
        }
    }

    fn sigma(self) -> f64 {
        match self {
            PhaseSign::Forward => 1.0,
            PhaseSign::Backward => -1.0,
        }
    }
}

/// `∫₀^∞ e^{iσy²/2} dy = √(π/2)·e^{iσπ/4}`.
pub fn fresnel_half_line(sign: PhaseSign) -> Complex64 {
    Complex64::from_polar((PI / 2.0).sqrt(), sign.sigma() * FRAC_PI_4)
}

/// `∫₀ᵘ e^{i y²/2} dy`.
pub fn incomplete_fresnel(u: f64) -> Complex64 {
    incomplete_fresnel_signed(u, PhaseSign::Forward)
}

/// `∫₀ᵘ e^{iσ y²/2} dy` for either orientation.
pub fn incomplete_fresnel_signed(u: f64, sign: PhaseSign) -> Complex64 {
    if u == f64::INFINITY {
        return fresnel_half_line(sign);
    }
    if u == f64::NEG_INFINITY {
        return -fresnel_half_line(sign);
    }
    let a = u.abs();
    let s = u.signum();
    let v = if a <= SERIES_LIMIT {
        maclaurin(a, sign)
    } else {
        fresnel_half_line(sign) - fresnel_tail(a, sign)
    };
    v * s
}

fn maclaurin(u: f64, sign: PhaseSign) -> Complex64 {
    // Σ (iσ/2)^k u^{2k+1} / (k! (2k+1))
    let z = sign.unit() * 0.5 * u * u;
    let mut term = c(u, 0.0);
    let mut acc = ComplexSum::new();
    acc.add(term);
    for k in 1..SERIES_TERMS {
        term = term * z / k as f64;
        let contrib = term / (2 * k + 1) as f64;
        acc.add(contrib);
        if contrib.norm() < 1e-18 * u {
            break;
        }
    }
    acc.value()
}

/// `∫ᵤ^∞ e^{iσy²/2} dy` for `u > 0`.
///
/// With `z = e^{-iσπ/4} u/√2` the tail equals
/// `e^{iσπ/4}/√2 · e^{iσu²/2} · K(z)` where `K(z) = √π e^{z²} erfc(z)` has
/// the continued fraction `1/(z + (1/2)/(z + 1/(z + (3/2)/(z + …))))`.
pub fn fresnel_tail(u: f64, sign: PhaseSign) -> Complex64 {
    debug_assert!(u > 0.0);
    if u <= SERIES_LIMIT {
        return fresnel_half_line(sign) - maclaurin(u, sign);
    }
    let rot = Complex64::from_polar(1.0, sign.sigma() * FRAC_PI_4);
    let z = rot.conj() * (u / 2f64.sqrt());
    let k = erfc_fraction(z);
    let phase = Complex64::from_polar(1.0, sign.sigma() * 0.5 * u * u);
    rot / 2f64.sqrt() * phase * k
}

/// Modified Lentz evaluation of `1/(z + a₁/(z + a₂/(z + …)))`, `a_k = k/2`.
fn erfc_fraction(z: Complex64) -> Complex64 {
    let tiny = 1e-300;
    let mut f = z;
    if f.norm() < tiny {
        f = c(tiny, 0.0);
    }
    let mut cc = f;
    let mut d = c(0.0, 0.0);
    for k in 1..CF_MAX_ITER {
        let a = 0.5 * k as f64;
        d = z + a * d;
        if d.norm() < tiny {
            d = c(tiny, 0.0);
        }
        cc = z + a / cc;
        if cc.norm() < tiny {
            cc = c(tiny, 0.0);
        }
        d = d.inv();
        let delta = cc * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    f.inv()
}

/// `∫_cell e^{iσy²/2} dy` for any of the four cell shapes.
pub fn fresnel_cell_integral(cell: &Cell1D, sign: PhaseSign) -> Complex64 {
    let half = fresnel_half_line(sign);
    // Upper tail ∫_b^∞, accurate also for large |b|.
    let upper = |b: f64| -> Complex64 {
        if b > 0.0 {
            fresnel_tail(b, sign)
        } else {
            half - incomplete_fresnel_signed(b, sign)
        }
    };
    match *cell {
        Cell1D::FullLine => 2.0 * half,
        Cell1D::PosTail(b) => upper(b),
        Cell1D::NegTail(a) => upper(-a),
        Cell1D::Bounded(u, v) => {
            if u >= SERIES_LIMIT {
                fresnel_tail(u, sign) - fresnel_tail(v, sign)
            } else if v <= -SERIES_LIMIT {
                fresnel_tail(-v, sign) - fresnel_tail(-u, sign)
            } else {
                incomplete_fresnel_signed(v, sign) - incomplete_fresnel_signed(u, sign)
            }
        }
    }
}

/// `√(-i/2π)` on the principal branch, `e^{-iπ/4}/√(2π)`.
pub fn normalizer() -> Complex64 {
    normalizer_signed(PhaseSign::Forward)
}

fn normalizer_signed(sign: PhaseSign) -> Complex64 {
    (-sign.unit() / (2.0 * PI)).sqrt()
}

/// `φ(x) = e^{(i/2)(x₁² + … + x_n²)}`.
pub fn phi_n(x: &[f64]) -> Complex64 {
    let q: f64 = x.iter().map(|v| v * v).sum();
    Complex64::from_polar(1.0, 0.5 * q)
}

/// `G₁` of a single cell: `√(-i/2π) ∫_cell e^{iy²/2} dy`.
pub fn g1_distribution(cell: &Cell1D) -> Complex64 {
    g1_distribution_signed(cell, PhaseSign::Forward)
}

/// `G₁` with the sign of `i` flipped throughout (normaliser and phase).
pub fn g1_distribution_signed(cell: &Cell1D, sign: PhaseSign) -> Complex64 {
    normalizer_signed(sign) * fresnel_cell_integral(cell, sign)
}

/// The density `g_n(x)|I|` at an associated point-cell pair.
///
/// Finite tags give `(√(-i/2π))ⁿ φ(x) |I|`; as soon as one tag is infinite
/// every factor switches to its cell integral.
pub fn g_n_mass(point: &TaggedCellNd) -> Result<Complex64> {
    if !point.is_associated() {
        return Err(Error::Association(format!(
            "tags {:?} are not associated with the cell",
            point.tags
        )));
    }
    let n = point.tags.len() as i32;
    if point.has_infinite_tag() {
        return Ok(point.cell.factors.iter().map(g1_distribution).product());
    }
    let x: Vec<f64> = point.tags.iter().filter_map(|t| t.as_finite()).collect();
    Ok(normalizer().powi(n) * phi_n(&x) * point.cell.volume())
}

/// A figure: finitely many pairwise disjoint cells of a common dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FigureNd {
    pub cells: Vec<CellNd>,
}

impl FigureNd {
    pub fn new(cells: Vec<CellNd>) -> Result<Self> {
        if let Some(first) = cells.first() {
            let n = first.dim();
            if cells.iter().any(|c| c.dim() != n) {
                return Err(invalid("all cells of a figure need the same dimension"));
            }
        }
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                if !a.is_disjoint_from(b) {
                    return Err(invalid("cells of a figure must be pairwise disjoint"));
                }
            }
        }
        Ok(Self { cells })
    }
}

/// `G_n` of a figure: sum over its cells of the product of `G₁` factors.
#[allow(non_snake_case)]
pub fn G_n_distribution(fig: &FigureNd) -> Complex64 {
    fig.cells
        .iter()
        .map(|cell| cell.factors.iter().map(g1_distribution).product::<Complex64>())
        .collect::<ComplexSum>()
        .value()
}

/// Times `t₀ < t₁ < … < t_n` and the starting point `x₀` of the increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSchedule {
    pub times: Vec<f64>,
    pub origin_time: f64,
    pub origin_point: f64,
}

impl IncrementSchedule {
    pub fn new(times: Vec<f64>, origin_time: f64, origin_point: f64) -> Result<Self> {
        let s = Self { times, origin_time, origin_point };
        s.validate()?;
        Ok(s)
    }

    /// Equal steps of `dt` starting at `origin_time`.
    pub fn uniform(n: usize, dt: f64, origin_time: f64, origin_point: f64) -> Result<Self> {
        Self::new(
            (1..=n).map(|j| origin_time + dt * j as f64).collect(),
            origin_time,
            origin_point,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::Schedule("at least one time is required".into()));
        }
        if !(self.origin_time >= 0.0 && self.origin_time.is_finite() && self.origin_point.is_finite()) {
            return Err(Error::Schedule("origin time must be finite and >= 0, origin point finite".into()));
        }
        let mut prev = self.origin_time;
        for &t in &self.times {
            if !(t.is_finite() && t > prev) {
                return Err(Error::Schedule(format!(
                    "times must increase strictly from the origin time; {t} follows {prev}"
                )));
            }
            prev = t;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t_j - t_{j-1}` with `t₀` the origin time.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = self.origin_time;
        self.times
            .iter()
            .map(|&t| {
                let d = t - prev;
                prev = t;
                d
            })
            .collect()
    }

    pub fn total_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(self.origin_time) - self.origin_time
    }

    /// Increments `x_j - x_{j-1}` of absolute path values, `x₀` the origin point.
    pub fn path_increments(&self, path: &[f64]) -> Vec<f64> {
        let mut prev = self.origin_point;
        path.iter()
            .map(|&x| {
                let d = x - prev;
                prev = x;
                d
            })
            .collect()
    }

    /// Multiplies every time difference by `lambda` (origin time kept).
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.times
                .iter()
                .map(|t| self.origin_time + lambda * (t - self.origin_time))
                .collect(),
            self.origin_time,
            self.origin_point,
        )
    }
}

/// `(-i/(2π Δt))^{1/2}` on the principal branch.
pub fn increment_normalizer(dt: f64) -> Complex64 {
    normalizer() / dt.sqrt()
}

/// `∫_cell e^{i d²/(2Δt)} dd`, through `d = √Δt·s`.
pub fn increment_cell_integral(cell: &Cell1D, dt: f64) -> Complex64 {
    let r = dt.sqrt();
    fresnel_cell_integral(&cell.scaled(1.0 / r), PhaseSign::Forward) * r
}

fn check_dims(n_tags: usize, n_cells: usize, sched: &IncrementSchedule) -> Result<()> {
    sched.validate()?;
    if n_tags != n_cells || n_cells != sched.len() {
        return Err(invalid(format!(
            "dimension mismatch: {n_tags} tags, {n_cells} cells, {} times",
            sched.len()
        )));
    }
    Ok(())
}

/// Incremental density `g^T(x(N))|I[N]|`.
///
/// Tags and cells are read in increment coordinates `d_j = x_j - x_{j-1}`
/// (use [`IncrementSchedule::path_increments`] to convert absolute path
/// values). Finite tags give
/// `∏ (-i/(2πΔt_j))^{1/2} e^{i d_j²/(2Δt_j)} × |I|`; any infinite tag switches
/// every factor to its incremental cell integral.
pub fn incremental_density(point: &TaggedCellNd, sched: &IncrementSchedule) -> Result<Complex64> {
    check_dims(point.tags.len(), point.cell.dim(), sched)?;
    if !point.is_associated() {
        return Err(Error::Association(format!(
            "tags {:?} are not associated with the cell",
            point.tags
        )));
    }
    if point.has_infinite_tag() {
        return incremental_distribution(&point.cell, sched);
    }
    let dts = sched.increments();
    let mut z = c(point.cell.volume(), 0.0);
    for (tag, dt) in point.tags.iter().zip(&dts) {
        let d = tag.as_finite().unwrap_or(0.0);
        z *= increment_normalizer(*dt) * Complex64::from_polar(1.0, 0.5 * d * d / dt);
    }
    Ok(z)
}

/// Incremental distribution `G^T(I[N])` of a cell given in increment
/// coordinates.
pub fn incremental_distribution(cell: &CellNd, sched: &IncrementSchedule) -> Result<Complex64> {
    check_dims(cell.dim(), cell.dim(), sched)?;
    Ok(cell
        .factors
        .iter()
        .zip(sched.increments())
        .map(|(f, dt)| increment_normalizer(dt) * increment_cell_integral(f, dt))
        .product())
}

/// Writes `(u, Re F(u), Im F(u))` rows for `steps + 1` points on `[u_min, u_max]`.
pub fn write_fresnel_table<W: std::io::Write>(
    out: W,
    u_min: f64,
    u_max: f64,
    steps: usize,
) -> Result<()> {
    if steps == 0 || !(u_min < u_max) {
        return Err(invalid("table needs u_min < u_max and at least one step"));
    }
    let mut w = csv_writer(out)?;
    w.write_record(["u", "re", "im"]).map_err(csv_err)?;
    for k in 0..=steps {
        let u = u_min + (u_max - u_min) * k as f64 / steps as f64;
        let v = incomplete_fresnel(u);
        w.write_record([fmt12(u), fmt12(v.re), fmt12(v.im)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Quadrature weights for `∫ u(s) √(-i/2π) e^{(i/2 - ε)s²} ds` on a uniform
/// grid of `[-half_width, half_width]`.
///
/// `u` is interpolated by piecewise quadratics on consecutive node pairs and
/// the quadratic-phase factor is integrated exactly against each Lagrange
/// basis polynomial, so the grid only has to resolve `u`. For `ε = 0` the
/// parts of the line beyond the grid are added as tail cells on which `u` is
/// frozen at its boundary value.
#[derive(Debug, Clone)]
pub struct FresnelWeights {
    pub nodes: Vec<f64>,
    pub weights: Vec<Complex64>,
    pub damping: f64,
}

impl FresnelWeights {
    /// Piecewise-quadratic weights.
    pub fn new(half_width: f64, intervals: usize, damping: f64) -> Result<Self> {
        Self::with_order(half_width, intervals, damping, 2)
    }

    /// Weights from Lagrange panels of `order` intervals each; `intervals`
    /// must be a multiple of `order`.
    pub fn with_order(half_width: f64, intervals: usize, damping: f64, order: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid("half width must be positive"));
        }
        if !(1..=8).contains(&order) {
            return Err(invalid("panel order must lie in 1..=8"));
        }
        if intervals < order || intervals % order != 0 {
            return Err(invalid(format!(
                "the weight grid needs a positive multiple of {order} intervals, got {intervals}"
            )));
        }
        if !(damping >= 0.0 && damping.is_finite()) {
            return Err(invalid("damping must be finite and nonnegative"));
        }
        let h = 2.0 * half_width / intervals as f64;
        let nodes: Vec<f64> = (0..=intervals).map(|k| -half_width + h * k as f64).collect();
        let mut weights = vec![c(0.0, 0.0); intervals + 1];
        let gl = gauss_legendre(12);
        let kernel = c(-damping, 0.5);
        let width = order as f64 * h;
        let mut m = vec![c(0.0, 0.0); order + 1];
        let mut basis = vec![0.0; order + 1];
        for p in (0..intervals).step_by(order) {
            let local = &nodes[p..=p + order];
            m.iter_mut().for_each(|v| *v = c(0.0, 0.0));
            // Sub-panels keep the phase change per piece near one radian.
            let reach = local[0].abs().max(local[order].abs());
            let pieces = ((width * (reach + width)).ceil() as usize).max(1);
            let ph = width / pieces as f64;
            for q in 0..pieces {
                let a = local[0] + ph * q as f64;
                for &(x, w) in &gl {
                    let s = a + 0.5 * ph * (x + 1.0);
                    let e = (kernel * s * s).exp() * (0.5 * ph * w);
                    lagrange_basis(local, s, &mut basis);
                    for (mj, bj) in m.iter_mut().zip(&basis) {
                        *mj += e * *bj;
                    }
                }
            }
            for (j, mj) in m.iter().enumerate() {
                weights[p + j] += *mj;
            }
        }
        if damping == 0.0 {
            let tail = fresnel_tail(half_width, PhaseSign::Forward);
            weights[0] += tail;
            weights[intervals] += tail;
        }
        let norm = normalizer();
        for w in &mut weights {
            *w *= norm;
        }
        Ok(Self { nodes, weights, damping })
    }

    /// Weights for damping `eps` on a window wide enough that `e^{-eps s²}`
    /// is below `e^{-36}` at its edge, with node spacing at most `spacing`.
    pub fn for_damping(eps: f64, spacing: f64, order: usize) -> Result<Self> {
        if !(eps > 0.0 && spacing > 0.0) {
            return Err(invalid("damping and spacing must be positive"));
        }
        let half = (36.0 / eps).sqrt();
        let panels = ((2.0 * half / spacing) / order as f64).ceil().max(1.0) as usize;
        Self::with_order(half, panels * order, eps, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_k u(s_k)`, compensated.
    pub fn apply(&self, u: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * u(s))
            .collect::<ComplexSum>()
            .value()
    }

    pub fn total(&self) -> Complex64 {
        self.apply(|_| c(1.0, 0.0))
    }
}

fn lagrange_basis(nodes: &[f64], s: f64, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let mut v = 1.0;
        for (k, &xk) in nodes.iter().enumerate() {
            if k != j {
                v *= (s - xk) / (nodes[j] - xk);
            }
        }
        *o = v;
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Convenience for full-space tags of a given dimension.
pub fn infinite_tags(n: usize) -> Vec<ExtReal> {
    vec![ExtReal::PosInf; n]
}
