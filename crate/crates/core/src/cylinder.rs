//! Path space `ℝ^T`: cylindrical cells over finite time sets, gauges
//! `γ = (L, δ)`, fineness and partition checks, Riemann sums, and the
//! reduction of integrals of cylinder functions to finite dimension.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fresnel::{normalizer, FresnelWeights, IncrementSchedule};
use crate::gauge::{is_fine_for, Cell1D, CellNd, ExtReal, TaggedCellNd};
use crate::integrate::{hk_integrate_nd, IntegrationReport, IntegratorConfig};
use crate::sum::ComplexSum;

/// A finite, strictly increasing set of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimeSetRepr", into = "TimeSetRepr")]
pub struct TimeSet {
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSetRepr {
    times: Vec<f64>,
}

impl TryFrom<TimeSetRepr> for TimeSet {
    type Error = Error;
    fn try_from(r: TimeSetRepr) -> Result<Self> {
        TimeSet::new(r.times)
    }
}

impl From<TimeSet> for TimeSetRepr {
    fn from(t: TimeSet) -> Self {
        TimeSetRepr { times: t.times }
    }
}

impl TimeSet {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Schedule("a time set cannot be empty".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schedule(format!("times {times:?} must be finite and strictly increasing")));
        }
        Ok(Self { times })
    }

    /// A time set that must also lie in `[start, end]`.
    pub fn within(times: Vec<f64>, start: f64, end: f64) -> Result<Self> {
        let s = Self::new(times)?;
        if s.times.iter().any(|&t| t < start || t > end) {
            return Err(Error::Schedule(format!("times {:?} leave [{start}, {end}]", s.times)));
        }
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_subset_of(&self, other: &TimeSet) -> bool {
        self.times.iter().all(|t| other.position(*t).is_some())
    }

    pub fn position(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }

    pub fn union(&self, other: &TimeSet) -> TimeSet {
        let mut v: Vec<f64> = self.times.iter().chain(&other.times).copied().collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        TimeSet { times: v }
    }
}

/// Parses `{"times": [...], "origin_time": ..., "origin_point": ...}`.
pub fn schedule_from_json(text: &str) -> Result<IncrementSchedule> {
    let s: IncrementSchedule = serde_json::from_str(text)?;
    s.validate()?;
    Ok(s)
}

/// `I[N]`: a product cell on the times of `N`, the whole line elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderCell {
    pub times: TimeSet,
    pub cell: CellNd,
}

impl CylinderCell {
    pub fn new(times: TimeSet, cell: CellNd) -> Result<Self> {
        if times.len() != cell.dim() {
            return Err(invalid(format!(
                "{} times but {} cell factors",
                times.len(),
                cell.dim()
            )));
        }
        Ok(Self { times, cell })
    }

    /// The same subset of `ℝ^T` written on a larger time set.
    pub fn padded_to(&self, target: &TimeSet) -> Result<Self> {
        if !self.times.is_subset_of(target) {
            return Err(invalid("padding target must contain the cell's times"));
        }
        let factors = target
            .times()
            .iter()
            .map(|&t| self.times.position(t).map_or(Cell1D::FullLine, |j| self.cell.factors[j]))
            .collect();
        Ok(Self { times: target.clone(), cell: CellNd { factors } })
    }
}

/// The values `x(N)` of a path at the times of `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: TimeSet,
    pub values: Vec<ExtReal>,
}

impl PathSample {
    pub fn new(times: TimeSet, values: Vec<ExtReal>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid(format!("{} times but {} values", times.len(), values.len())));
        }
        Ok(Self { times, values })
    }

    pub fn finite_values(&self) -> Option<Vec<f64>> {
        self.values.iter().map(|v| v.as_finite()).collect()
    }

    /// Extension to a larger time set; new times get the value `+inf`,
    /// which is the tag associated with a whole-line factor.
    pub fn padded_to(&self, target: &TimeSet) -> Result<Self> {
        if !self.times.is_subset_of(target) {
            return Err(invalid("padding target must contain the sample's times"));
        }
        let values = target
            .times()
            .iter()
            .map(|&t| self.times.position(t).map_or(ExtReal::PosInf, |j| self.values[j]))
            .collect();
        Ok(Self { times: target.clone(), values })
    }
}

/// Whether `x(N)` is attached to `I[N]`: same time set and every value
/// associated with its factor.
pub fn is_associated(x: &PathSample, cell: &CylinderCell) -> bool {
    x.times == cell.times
        && TaggedCellNd { tags: x.values.clone(), cell: cell.cell.clone() }.is_associated()
}

type LMap = dyn Fn(&PathSample) -> TimeSet + Send + Sync;
type DeltaMap = dyn Fn(&PathSample, &TimeSet) -> f64 + Send + Sync;

/// A gauge on path space: a finite time set `L(x)` that fine cells must
/// contain and a width function `δ(x, N)`.
#[derive(Clone)]
pub struct GaugeRT {
    l: Arc<LMap>,
    delta: Arc<DeltaMap>,
}

impl GaugeRT {
    pub fn new(
        l: impl Fn(&PathSample) -> TimeSet + Send + Sync + 'static,
        delta: impl Fn(&PathSample, &TimeSet) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { l: Arc::new(l), delta: Arc::new(delta) }
    }

    pub fn required_times(&self, x: &PathSample) -> TimeSet {
        (self.l)(x)
    }

    pub fn delta(&self, x: &PathSample, n: &TimeSet) -> f64 {
        (self.delta)(x, n)
    }
}

impl fmt::Debug for GaugeRT {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeRT").finish_non_exhaustive()
    }
}

/// `L(x) ⊆ N` and every factor of `I[N]` is `δ(x, N)`-fine, with `δ`
/// evaluated once for the whole item.
pub fn is_gamma_fine(x: &PathSample, cell: &CylinderCell, gauge: &GaugeRT) -> Result<bool> {
    if !is_associated(x, cell) {
        return Err(Error::Association(format!(
            "path values {:?} are not associated with the cylinder cell",
            x.values
        )));
    }
    if !gauge.required_times(x).is_subset_of(&cell.times) {
        return Ok(false);
    }
    let d = gauge.delta(x, &cell.times);
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid(format!("gauge width {d} is not a positive real")));
    }
    Ok(cell.cell.factors.iter().all(|f| is_fine_for(d, f)))
}

/// One associated triple `(x, N, I[N])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderItem {
    pub sample: PathSample,
    pub cell: CylinderCell,
}

impl CylinderItem {
    pub fn new(sample: PathSample, cell: CylinderCell) -> Result<Self> {
        if !is_associated(&sample, &cell) {
            return Err(Error::Association("path sample is not associated with the cell".into()));
        }
        Ok(Self { sample, cell })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CylinderDivision {
    pub items: Vec<CylinderItem>,
}

impl CylinderDivision {
    pub fn new(items: Vec<CylinderItem>) -> Self {
        Self { items }
    }

    /// The union of all member time sets.
    pub fn common_times(&self) -> Option<TimeSet> {
        let mut it = self.items.iter().map(|i| &i.cell.times);
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, t| acc.union(t)))
    }
}

/// Re-expresses every item on the union of the time sets, padding cells
/// with whole-line factors and samples with `+inf`.
pub fn refine_to_common_timeset(items: &[CylinderItem]) -> Result<Vec<CylinderItem>> {
    let d = CylinderDivision { items: items.to_vec() };
    let Some(common) = d.common_times() else {
        return Ok(Vec::new());
    };
    items
        .iter()
        .map(|it| {
            Ok(CylinderItem {
                sample: it.sample.padded_to(&common)?,
                cell: it.cell.padded_to(&common)?,
            })
        })
        .collect()
}

/// A defect found by [`validate_cylinder_division`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CylinderViolation {
    Association { index: usize },
    NotFine { index: usize },
    Overlap { first: usize, second: usize },
    /// A point of `ℝ^N` (common time set) covered by no cell.
    Uncovered { point: Vec<f64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CylinderReport {
    pub violations: Vec<CylinderViolation>,
}

impl CylinderReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

const MAX_BOXES: usize = 4_000_000;

/// Checks association, optional `γ`-fineness, and that the cells partition
/// `ℝ^T`. The partition test runs on the common time set: every coordinate
/// is cut at all finite endpoints and each elementary box must be covered
/// exactly once.
pub fn validate_cylinder_division(d: &CylinderDivision, gauge: Option<&GaugeRT>) -> Result<CylinderReport> {
    let mut violations = Vec::new();
    for (index, it) in d.items.iter().enumerate() {
        if !is_associated(&it.sample, &it.cell) {
            violations.push(CylinderViolation::Association { index });
            continue;
        }
        if let Some(g) = gauge {
            if !is_gamma_fine(&it.sample, &it.cell, g)? {
                violations.push(CylinderViolation::NotFine { index });
            }
        }
    }
    let refined = refine_to_common_timeset(&d.items)?;
    if refined.is_empty() {
        violations.push(CylinderViolation::Uncovered { point: Vec::new() });
        return Ok(CylinderReport { violations });
    }
    for i in 0..refined.len() {
        for j in i + 1..refined.len() {
            if !refined[i].cell.cell.is_disjoint_from(&refined[j].cell.cell) {
                violations.push(CylinderViolation::Overlap { first: i, second: j });
            }
        }
    }
    let n = refined[0].cell.times.len();
    let cuts: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut set = BTreeSet::new();
            for it in &refined {
                for e in finite_ends(&it.cell.cell.factors[j]) {
                    set.insert(OrdF64(e));
                }
            }
            set.into_iter().map(|o| o.0).collect()
        })
        .collect();
    let shape: Vec<usize> = cuts.iter().map(|c| c.len() + 1).collect();
    let total = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).unwrap_or(usize::MAX);
    if total > MAX_BOXES {
        return Err(invalid(format!("partition check would need {total} elementary boxes")));
    }
    let mut covered = vec![false; total];
    for it in &refined {
        let ranges: Vec<(usize, usize)> = it
            .cell
            .cell
            .factors
            .iter()
            .zip(&cuts)
            .map(|(f, c)| box_range(f, c))
            .collect();
        mark(&mut covered, &shape, &ranges);
    }
    if let Some(flat) = covered.iter().position(|c| !c) {
        let mut rem = flat;
        let mut point = vec![0.0; n];
        for j in (0..n).rev() {
            let k = rem % shape[j];
            rem /= shape[j];
            point[j] = representative(&cuts[j], k);
        }
        violations.push(CylinderViolation::Uncovered { point });
    }
    Ok(CylinderReport { violations })
}

struct OrdF64(f64);
impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn finite_ends(c: &Cell1D) -> Vec<f64> {
    match *c {
        Cell1D::NegTail(a) | Cell1D::PosTail(a) => vec![a],
        Cell1D::Bounded(u, v) => vec![u, v],
        Cell1D::FullLine => vec![],
    }
}

// Elementary interval k is (cuts[k-1], cuts[k]] with cuts[-1] = -inf and
// cuts[len] = +inf; returns the half-open index range covered by `c`.
fn box_range(c: &Cell1D, cuts: &[f64]) -> (usize, usize) {
    let idx = |x: f64| cuts.iter().position(|&e| e == x).expect("endpoint is a cut");
    match *c {
        Cell1D::NegTail(a) => (0, idx(a) + 1),
        Cell1D::Bounded(u, v) => (idx(u) + 1, idx(v) + 1),
        Cell1D::PosTail(b) => (idx(b) + 1, cuts.len() + 1),
        Cell1D::FullLine => (0, cuts.len() + 1),
    }
}

fn representative(cuts: &[f64], k: usize) -> f64 {
    match (k.checked_sub(1).map(|i| cuts[i]), cuts.get(k)) {
        (None, None) => 0.0,
        (None, Some(&hi)) => hi - 1.0,
        (Some(lo), None) => lo + 1.0,
        (Some(lo), Some(&hi)) => 0.5 * (lo + hi),
    }
}

fn mark(covered: &mut [bool], shape: &[usize], ranges: &[(usize, usize)]) {
    let n = shape.len();
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 >= r.1) {
        return;
    }
    loop {
        let flat = idx.iter().zip(shape).fold(0, |acc, (&i, &s)| acc * s + i);
        covered[flat] = true;
        let mut j = n;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < ranges[j].1 {
                break;
            }
            idx[j] = ranges[j].0;
        }
    }
}

/// `Σ h(x, N, I[N])` over the division, compensated. The division is not
/// re-validated here.
pub fn cylinder_riemann_sum<H>(h: H, d: &CylinderDivision) -> Result<Complex64>
where
    H: Fn(&PathSample, &TimeSet, &CylinderCell) -> Complex64,
{
    let mut acc = ComplexSum::new();
    for (i, it) in d.items.iter().enumerate() {
        let z = h(&it.sample, &it.cell.times, &it.cell);
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Integrand(format!("non-finite value {z} on item {i}")));
        }
        acc.add(z);
    }
    Ok(acc.value())
}

fn check_reduction_input(times: &TimeSet, sched: &IncrementSchedule, cfg: &IntegratorConfig) -> Result<()> {
    cfg.validate()?;
    sched.validate()?;
    let n = times.len();
    if n > cfg.dimension_cap {
        return Err(Error::DimensionCap { n, cap: cfg.dimension_cap });
    }
    if sched.times.len() != n || sched.times.iter().zip(times.times()).any(|(a, b)| a != b) {
        return Err(Error::Schedule("the schedule times must equal the time set".into()));
    }
    Ok(())
}

/// `∫_{ℝ^T} f(x(N)) G^T(I[N])` for a cylinder function `f` of the path
/// values at the times of `N`, evaluated as the finite-dimensional integral
/// of `f` against the incremental density.
///
/// With `x_j = x_{j-1} + √Δt_j·s_j` every increment carries the same weight
/// `√(-i/2π) e^{is²/2}`, so one table of product-quadrature weights serves
/// every coordinate. The weights are computed under Gaussian damping and the
/// result extrapolated to zero damping. `f` should be smooth; use
/// [`reduce_cylinder_integral_adaptive`] for integrands with jumps.
pub fn reduce_cylinder_integral<F>(
    f: F,
    times: &TimeSet,
    sched: &IncrementSchedule,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<IntegrationReport>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    check_reduction_input(times, sched, cfg)?;
    let roots: Vec<f64> = sched.increments().iter().map(|d| d.sqrt()).collect();
    let damping = cfg.product_damping;
    let mut values = Vec::with_capacity(damping.nodes);
    for eps in damping.epsilons() {
        let w = FresnelWeights::for_damping(eps, cfg.product_spacing, cfg.product_order)?;
        values.push(product_level(&f, &w, &roots, sched.origin_point));
    }
    finish_reduction(&values, roots.len(), tol, &damping)
}

fn finish_reduction(
    values: &[Complex64],
    n: usize,
    tol: f64,
    damping: &crate::integrate::DampingSchedule,
) -> Result<IntegrationReport> {
    if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Integrand("integrand produced a non-finite value".into()));
    }
    let (value, spread) = damping.extrapolate(values, n);
    if spread > tol {
        return Err(Error::NoConvergence {
            value,
            abs_error_estimate: spread,
            refinements: values.len(),
        });
    }
    Ok(IntegrationReport { value, abs_error_estimate: spread, refinements: values.len(), converged: true })
}

fn product_level<F>(f: &F, w: &FresnelWeights, roots: &[f64], origin: f64) -> Complex64
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let n = roots.len();
    let parts: Vec<Complex64> = w
        .nodes
        .par_iter()
        .zip(w.weights.par_iter())
        .map(|(&s, &wk)| {
            let mut buf = vec![0.0; n];
            buf[0] = origin + roots[0] * s;
            wk * nested_level(f, w, roots, &mut buf, 1)
        })
        .collect();
    parts.into_iter().collect::<ComplexSum>().value()
}

fn nested_level<F>(f: &F, w: &FresnelWeights, roots: &[f64], buf: &mut [f64], j: usize) -> Complex64
where
    F: Fn(&[f64]) -> Complex64,
{
    if j == roots.len() {
        return f(buf);
    }
    let prev = buf[j - 1];
    let mut acc = ComplexSum::new();
    for (&s, &wk) in w.nodes.iter().zip(&w.weights) {
        buf[j] = prev + roots[j] * s;
        acc.add(wk * nested_level(f, w, roots, buf, j + 1));
    }
    acc.value()
}

/// The same reduction with the damped integrand handed to the adaptive
/// gauge integrator on a box in the scaled increments. Slower, but
/// insensitive to jumps of `f`.
pub fn reduce_cylinder_integral_adaptive<F>(
    f: F,
    times: &TimeSet,
    sched: &IncrementSchedule,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<IntegrationReport>
where
    F: Fn(&[f64]) -> Complex64,
{
    check_reduction_input(times, sched, cfg)?;
    let roots: Vec<f64> = sched.increments().iter().map(|d| d.sqrt()).collect();
    let n = roots.len();
    let norm = normalizer().powi(n as i32);
    let damping = cfg.product_damping;
    let mut values = Vec::with_capacity(damping.nodes);
    let mut refinements = 0;
    for eps in damping.epsilons() {
        let half = (36.0 / eps).sqrt();
        let window = vec![(-half, half); n];
        let kernel = Complex64::new(-eps, 0.5);
        let r = hk_integrate_nd(
            |s: &[f64]| {
                let mut x = sched.origin_point;
                let mut q = 0.0;
                let path: Vec<f64> = s
                    .iter()
                    .zip(&roots)
                    .map(|(si, ri)| {
                        x += ri * si;
                        q += si * si;
                        x
                    })
                    .collect();
                norm * (kernel * q).exp() * f(&path)
            },
            &window,
            tol * 1e-2,
            cfg,
        )?;
        refinements += r.refinements;
        values.push(r.value);
    }
    let mut rep = finish_reduction(&values, n, tol, &damping)?;
    rep.refinements = refinements;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fresnel::incremental_distribution;

    fn ts(t: &[f64]) -> TimeSet {
        TimeSet::new(t.to_vec()).unwrap()
    }

    fn fin(v: &[f64]) -> Vec<ExtReal> {
        v.iter().map(|&x| ExtReal::Finite(x)).collect()
    }

    fn item(times: &[f64], tags: Vec<ExtReal>, factors: Vec<Cell1D>) -> CylinderItem {
        let n = ts(times);
        CylinderItem::new(
            PathSample::new(n.clone(), tags).unwrap(),
            CylinderCell::new(n, CellNd::new(factors).unwrap()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn time_set_rules() {
        assert!(TimeSet::new(vec![]).is_err());
        assert!(TimeSet::new(vec![1.0, 1.0]).is_err());
        assert!(TimeSet::within(vec![0.5, 2.0], 0.0, 1.0).is_err());
        let t = TimeSet::from_json(r#"{"times":[0.5,1.0]}"#).unwrap();
        assert_eq!(t.times(), &[0.5, 1.0]);
        assert_eq!(ts(&[1.0]).union(&ts(&[0.5, 1.0])).times(), &[0.5, 1.0]);
        let s = schedule_from_json(r#"{"times":[0.5,1.0],"origin_time":0.0,"origin_point":0.2}"#).unwrap();
        assert_eq!(s.origin_point, 0.2);
        assert!(schedule_from_json(r#"{"times":[0.5,0.1],"origin_time":0.0,"origin_point":0.0}"#).is_err());
    }

    fn gauge(l: Vec<f64>, width: f64) -> GaugeRT {
        GaugeRT::new(move |_| TimeSet::new(l.clone()).unwrap(), move |_, _| width)
    }

    #[test]
    fn gamma_fineness_examples() {
        let it = item(&[0.5, 1.0], fin(&[0.0, 0.0]), vec![Cell1D::Bounded(0.0, 0.1), Cell1D::Bounded(-0.1, 0.0)]);
        assert!(is_gamma_fine(&it.sample, &it.cell, &gauge(vec![1.0], 0.5)).unwrap());
        assert!(!is_gamma_fine(&it.sample, &it.cell, &gauge(vec![0.25], 0.5)).unwrap());
        let wide = item(&[1.0], fin(&[0.0]), vec![Cell1D::Bounded(0.0, 2.0)]);
        assert!(!is_gamma_fine(&wide.sample, &wide.cell, &gauge(vec![1.0], 0.5)).unwrap());
        let bad = PathSample::new(ts(&[1.0]), fin(&[1.0])).unwrap();
        let cell = CylinderCell::new(ts(&[1.0]), CellNd::new(vec![Cell1D::Bounded(0.0, 2.0)]).unwrap()).unwrap();
        assert!(matches!(is_gamma_fine(&bad, &cell, &gauge(vec![1.0], 0.5)), Err(Error::Association(_))));
    }

    #[test]
    fn refinement_pads_with_full_lines() {
        let a = item(&[1.0], fin(&[0.0]), vec![Cell1D::Bounded(0.0, 1.0)]);
        let same = refine_to_common_timeset(std::slice::from_ref(&a)).unwrap();
        assert_eq!(same[0], a);
        let b = item(&[2.0], vec![ExtReal::PosInf], vec![Cell1D::PosTail(3.0)]);
        let r = refine_to_common_timeset(&[a, b]).unwrap();
        assert_eq!(r[0].cell.times.times(), &[1.0, 2.0]);
        assert_eq!(r[0].cell.cell.factors, vec![Cell1D::Bounded(0.0, 1.0), Cell1D::FullLine]);
        assert_eq!(r[1].cell.cell.factors, vec![Cell1D::FullLine, Cell1D::PosTail(3.0)]);
        assert!(r.iter().all(|it| is_associated(&it.sample, &it.cell)));
    }

    #[test]
    fn half_space_split_is_a_partition() {
        let d = CylinderDivision::new(vec![
            item(&[1.0], vec![ExtReal::NegInf], vec![Cell1D::NegTail(0.0)]),
            item(&[1.0], vec![ExtReal::PosInf], vec![Cell1D::PosTail(0.0)]),
        ]);
        assert!(validate_cylinder_division(&d, None).unwrap().is_valid());
    }

    #[test]
    fn partition_defects_are_reported() {
        let gap = CylinderDivision::new(vec![
            item(&[1.0], vec![ExtReal::NegInf], vec![Cell1D::NegTail(0.0)]),
            item(&[1.0], vec![ExtReal::PosInf], vec![Cell1D::PosTail(1.0)]),
        ]);
        let rep = validate_cylinder_division(&gap, None).unwrap();
        assert_eq!(rep.violations, vec![CylinderViolation::Uncovered { point: vec![0.5] }]);

        // Cells on different time sets that overlap once padded.
        let overlap = CylinderDivision::new(vec![
            item(&[1.0], vec![ExtReal::PosInf], vec![Cell1D::FullLine]),
            item(&[2.0], vec![ExtReal::NegInf], vec![Cell1D::NegTail(0.0)]),
        ]);
        let rep = validate_cylinder_division(&overlap, None).unwrap();
        assert!(rep.violations.contains(&CylinderViolation::Overlap { first: 0, second: 1 }));
    }

    #[test]
    fn mixed_time_sets_can_partition() {
        // {x1 <= 0} and {x1 > 0} x {x2 <= 0} and {x1 > 0} x {x2 > 0}.
        let d = CylinderDivision::new(vec![
            item(&[1.0], vec![ExtReal::NegInf], vec![Cell1D::NegTail(0.0)]),
            item(&[1.0, 2.0], vec![ExtReal::PosInf, ExtReal::NegInf], vec![Cell1D::PosTail(0.0), Cell1D::NegTail(0.0)]),
            item(&[1.0, 2.0], vec![ExtReal::PosInf, ExtReal::PosInf], vec![Cell1D::PosTail(0.0), Cell1D::PosTail(0.0)]),
        ]);
        assert!(validate_cylinder_division(&d, None).unwrap().is_valid());
    }

    #[test]
    fn riemann_sums_of_the_distribution() {
        let sched = IncrementSchedule::new(vec![1.0], 0.0, 0.0).unwrap();
        let h = |_: &PathSample, _: &TimeSet, c: &CylinderCell| incremental_distribution(&c.cell, &sched).unwrap();
        let whole = CylinderDivision::new(vec![item(&[1.0], vec![ExtReal::PosInf], vec![Cell1D::FullLine])]);
        assert!((cylinder_riemann_sum(h, &whole).unwrap() - 1.0).norm() < 1e-13);
        let split = CylinderDivision::new(vec![
            item(&[1.0], vec![ExtReal::NegInf], vec![Cell1D::NegTail(0.0)]),
            item(&[1.0], vec![ExtReal::PosInf], vec![Cell1D::PosTail(0.0)]),
        ]);
        assert!((cylinder_riemann_sum(h, &split).unwrap() - 1.0).norm() < 1e-13);
        let zero = cylinder_riemann_sum(|_: &PathSample, _: &TimeSet, _: &CylinderCell| Complex64::new(0.0, 0.0), &split);
        assert_eq!(zero.unwrap(), Complex64::new(0.0, 0.0));
        let nan = cylinder_riemann_sum(|_: &PathSample, _: &TimeSet, _: &CylinderCell| Complex64::new(f64::NAN, 0.0), &split);
        assert!(matches!(nan, Err(Error::Integrand(_))));
    }

    #[test]
    fn reduction_of_constants() {
        let cfg = IntegratorConfig::default();
        for times in [vec![0.7], vec![0.3, 1.1], vec![0.4, 0.9, 1.6]] {
            let n = ts(&times);
            let sched = IncrementSchedule::new(times.clone(), 0.1, -0.4).unwrap();
            let r = reduce_cylinder_integral(|_| Complex64::new(1.0, 0.0), &n, &sched, 1e-6, &cfg).unwrap();
            assert!((r.value - 1.0).norm() < 1e-6, "{times:?}: {}", r.value);
        }
    }

    #[test]
    fn free_characteristic_function() {
        let cfg = IntegratorConfig::default();
        let (a, tau, xi0) = (0.8, 1.2, 0.3);
        let n = ts(&[tau / 2.0, tau]);
        let sched = IncrementSchedule::new(n.times().to_vec(), 0.0, xi0).unwrap();
        let r = reduce_cylinder_integral(|x| Complex64::from_polar(1.0, a * x[1]), &n, &sched, 1e-6, &cfg).unwrap();
        let expected = Complex64::from_polar(1.0, a * xi0 - a * a * tau / 2.0);
        assert!((r.value - expected).norm() < 1e-6, "{} vs {expected}", r.value);
    }

    #[test]
    fn indicator_matches_the_distribution() {
        let cfg = IntegratorConfig::default();
        let (x0, cut) = (0.2, 0.9);
        let n = ts(&[0.8]);
        let sched = IncrementSchedule::new(vec![0.8], 0.0, x0).unwrap();
        let r = reduce_cylinder_integral_adaptive(
            |x| Complex64::new(if x[0] <= cut { 1.0 } else { 0.0 }, 0.0),
            &n,
            &sched,
            1e-6,
            &cfg,
        )
        .unwrap();
        let cell = CellNd::new(vec![Cell1D::NegTail(cut - x0)]).unwrap();
        let expected = incremental_distribution(&cell, &sched).unwrap();
        assert!((r.value - expected).norm() < 1e-6, "{} vs {expected}", r.value);
    }

    #[test]
    fn reduction_errors() {
        let cfg = IntegratorConfig::default();
        let n = ts(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let sched = IncrementSchedule::new(n.times().to_vec(), 0.0, 0.0).unwrap();
        let one = |_: &[f64]| Complex64::new(1.0, 0.0);
        assert!(matches!(
            reduce_cylinder_integral(one, &n, &sched, 1e-6, &cfg),
            Err(Error::DimensionCap { n: 5, cap: 4 })
        ));
        let other = ts(&[1.0, 2.5]);
        let sched2 = IncrementSchedule::new(vec![1.0, 2.0], 0.0, 0.0).unwrap();
        assert!(matches!(reduce_cylinder_integral(one, &other, &sched2, 1e-6, &cfg), Err(Error::Schedule(_))));
        // A rapidly varying integrand defeats the extrapolation.
        let n1 = ts(&[1.0]);
        let s1 = IncrementSchedule::new(vec![1.0], 0.0, 0.0).unwrap();
        let wild = reduce_cylinder_integral(|x| Complex64::from_polar(1.0, 6.0 * x[0]), &n1, &s1, 1e-9, &cfg);
        assert!(matches!(wild, Err(Error::NoConvergence { .. })));
    }
}
