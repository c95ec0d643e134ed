//! Cells, tags, gauges and tagged divisions of the extended real line.
//!
//! Bounded cells are half-open `(u, v]`, the lower tail is closed at its
//! finite end `(-inf, a]` and the upper tail is open `(b, +inf)`. With these
//! conventions a finite list of cells can partition the line exactly, and
//! every cell is of the form `(left, right]` with `left` possibly `-inf` and
//! `right` possibly `+inf`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::FORMAT_VERSION;
use crate::error::{invalid, Error, Result};
use crate::sum::ComplexSum;

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(x: f64) -> Result<Self> {
        if x.is_finite() {
            Ok(ExtReal::Finite(x))
        } else {
            Err(invalid(format!("{x} is not a finite real")))
        }
    }

    /// Maps `±inf` floats onto the infinite variants.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x == f64::INFINITY {
            Ok(ExtReal::PosInf)
        } else if x == f64::NEG_INFINITY {
            Ok(ExtReal::NegInf)
        } else {
            Self::finite(x)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        !matches!(self, ExtReal::Finite(_))
    }

    fn rank(self) -> (i8, f64) {
        match self {
            ExtReal::NegInf => (-1, 0.0),
            ExtReal::Finite(x) => (0, x),
            ExtReal::PosInf => (1, 0.0),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (ra, xa) = self.rank();
        let (rb, xb) = other.rank();
        match ra.cmp(&rb) {
            Ordering::Equal => xa.partial_cmp(&xb),
            ord => Some(ord),
        }
    }
}

impl From<f64> for ExtReal {
    /// Infinite floats become the infinite variants; NaN is not representable
    /// and maps to `Finite(NaN)`, which every validator rejects.
    fn from(x: f64) -> Self {
        Self::from_f64(x).unwrap_or(ExtReal::Finite(x))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => f.write_str("+inf"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtRealRepr {
    Number(f64),
    Symbol(String),
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::NegInf => s.serialize_str("-inf"),
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ExtRealRepr::deserialize(d)? {
            ExtRealRepr::Number(x) => Ok(ExtReal::Finite(x)),
            ExtRealRepr::Symbol(s) => match s.as_str() {
                "-inf" => Ok(ExtReal::NegInf),
                "+inf" | "inf" => Ok(ExtReal::PosInf),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number, \"-inf\" or \"+inf\", got {other:?}"
                ))),
            },
        }
    }
}

/// One-dimensional cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell1D {
    /// `(-inf, a]`
    NegTail(f64),
    /// `(u, v]` with `u < v`
    Bounded(f64, f64),
    /// `(b, +inf)`
    PosTail(f64),
    /// `(-inf, +inf)`
    FullLine,
}

impl Cell1D {
    pub fn bounded(u: f64, v: f64) -> Result<Self> {
        let c = Cell1D::Bounded(u, v);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Cell1D::NegTail(a) | Cell1D::PosTail(a) if !a.is_finite() => {
                Err(invalid(format!("tail bound {a} must be finite")))
            }
            Cell1D::Bounded(u, v) if !(u.is_finite() && v.is_finite() && u < v) => {
                Err(invalid(format!("bounded cell needs finite u < v, got ({u}, {v}]")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Endpoints of the closure.
    pub fn endpoints(&self) -> (ExtReal, ExtReal) {
        match *self {
            Cell1D::NegTail(a) => (ExtReal::NegInf, ExtReal::Finite(a)),
            Cell1D::Bounded(u, v) => (ExtReal::Finite(u), ExtReal::Finite(v)),
            Cell1D::PosTail(b) => (ExtReal::Finite(b), ExtReal::PosInf),
            Cell1D::FullLine => (ExtReal::NegInf, ExtReal::PosInf),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Cell1D::Bounded(..))
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Cell1D::NegTail(a) => x <= a,
            Cell1D::Bounded(u, v) => u < x && x <= v,
            Cell1D::PosTail(b) => x > b,
            Cell1D::FullLine => x.is_finite(),
        }
    }

    /// Translates the cell by `shift`.
    pub fn shifted(&self, shift: f64) -> Cell1D {
        match *self {
            Cell1D::NegTail(a) => Cell1D::NegTail(a + shift),
            Cell1D::Bounded(u, v) => Cell1D::Bounded(u + shift, v + shift),
            Cell1D::PosTail(b) => Cell1D::PosTail(b + shift),
            Cell1D::FullLine => Cell1D::FullLine,
        }
    }

    /// Multiplies every finite bound by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Cell1D {
        match *self {
            Cell1D::NegTail(a) => Cell1D::NegTail(a * factor),
            Cell1D::Bounded(u, v) => Cell1D::Bounded(u * factor, v * factor),
            Cell1D::PosTail(b) => Cell1D::PosTail(b * factor),
            Cell1D::FullLine => Cell1D::FullLine,
        }
    }
}

impl fmt::Display for Cell1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell1D::NegTail(a) => write!(f, "(-inf, {a}]"),
            Cell1D::Bounded(u, v) => write!(f, "({u}, {v}]"),
            Cell1D::PosTail(b) => write!(f, "({b}, +inf)"),
            Cell1D::FullLine => f.write_str("(-inf, +inf)"),
        }
    }
}

/// Length of a bounded cell; unbounded cells carry zero volume.
pub fn cell_volume(cell: &Cell1D) -> f64 {
    match *cell {
        Cell1D::Bounded(u, v) => v - u,
        _ => 0.0,
    }
}

/// Whether `tag` may be attached to `cell`: an endpoint for bounded cells,
/// the infinite end for tails, either infinity for the whole line.
pub fn tag_is_associated(tag: ExtReal, cell: &Cell1D) -> bool {
    match (*cell, tag) {
        (Cell1D::NegTail(_), ExtReal::NegInf) => true,
        (Cell1D::Bounded(u, v), ExtReal::Finite(x)) => x == u || x == v,
        (Cell1D::PosTail(_), ExtReal::PosInf) => true,
        (Cell1D::FullLine, t) => t.is_infinite(),
        _ => false,
    }
}

/// A point-cell pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedCell1D {
    pub tag: ExtReal,
    pub cell: Cell1D,
}

impl TaggedCell1D {
    pub fn new(tag: ExtReal, cell: Cell1D) -> Result<Self> {
        cell.validate()?;
        if !tag_is_associated(tag, &cell) {
            return Err(Error::Association(format!("tag {tag} is not associated with {cell}")));
        }
        Ok(Self { tag, cell })
    }

    pub fn volume(&self) -> f64 {
        cell_volume(&self.cell)
    }

    pub fn is_associated(&self) -> bool {
        tag_is_associated(self.tag, &self.cell)
    }
}

type GaugeFn = dyn Fn(ExtReal) -> f64 + Send + Sync;

/// A strictly positive function on the extended reals.
#[derive(Clone)]
pub struct Gauge1D {
    delta: Arc<GaugeFn>,
}

impl Gauge1D {
    pub fn new(delta: impl Fn(ExtReal) -> f64 + Send + Sync + 'static) -> Self {
        Self { delta: Arc::new(delta) }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(move |_| value)
    }

    pub fn eval(&self, x: ExtReal) -> f64 {
        (self.delta)(x)
    }

    fn checked(&self, x: ExtReal) -> Result<f64> {
        let d = self.eval(x);
        if d.is_finite() && d > 0.0 {
            Ok(d)
        } else {
            Err(invalid(format!("gauge value {d} at {x} is not a positive real")))
        }
    }
}

impl fmt::Debug for Gauge1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gauge1D").finish_non_exhaustive()
    }
}

/// Fineness of `(tag, cell)` against a given gauge value.
pub(crate) fn is_fine_for(delta: f64, cell: &Cell1D) -> bool {
    if !(delta > 0.0) {
        return false;
    }
    match *cell {
        Cell1D::NegTail(a) => a < -1.0 / delta,
        Cell1D::Bounded(u, v) => v - u < delta,
        Cell1D::PosTail(b) => b > 1.0 / delta,
        // No width condition exists for the whole line.
        Cell1D::FullLine => true,
    }
}

pub fn is_delta_fine(tc: &TaggedCell1D, gauge: &Gauge1D) -> bool {
    is_fine_for(gauge.eval(tc.tag), &tc.cell)
}

/// A finite list of tagged cells meant to partition the line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Division1D {
    pub items: Vec<TaggedCell1D>,
}

impl Division1D {
    pub fn new(items: Vec<TaggedCell1D>) -> Self {
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct DivisionItemRepr {
    tag: ExtReal,
    kind: CellKind,
    bounds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum CellKind {
    NegTail,
    Bounded,
    PosTail,
    FullLine,
}

impl From<&TaggedCell1D> for DivisionItemRepr {
    fn from(tc: &TaggedCell1D) -> Self {
        let (kind, bounds) = match tc.cell {
            Cell1D::NegTail(a) => (CellKind::NegTail, vec![a]),
            Cell1D::Bounded(u, v) => (CellKind::Bounded, vec![u, v]),
            Cell1D::PosTail(b) => (CellKind::PosTail, vec![b]),
            Cell1D::FullLine => (CellKind::FullLine, vec![]),
        };
        Self { tag: tc.tag, kind, bounds }
    }
}

impl TryFrom<DivisionItemRepr> for TaggedCell1D {
    type Error = String;

    fn try_from(r: DivisionItemRepr) -> std::result::Result<Self, String> {
        let cell = match (r.kind, r.bounds.as_slice()) {
            (CellKind::NegTail, &[a]) => Cell1D::NegTail(a),
            (CellKind::Bounded, &[u, v]) => Cell1D::Bounded(u, v),
            (CellKind::PosTail, &[b]) => Cell1D::PosTail(b),
            (CellKind::FullLine, &[]) => Cell1D::FullLine,
            (kind, b) => return Err(format!("{kind:?} cell cannot take {} bounds", b.len())),
        };
        // Association is checked by the validator, not the parser, so that
        // defective divisions can be loaded and diagnosed.
        Ok(TaggedCell1D { tag: r.tag, cell })
    }
}

#[derive(Serialize)]
struct DivisionDocOut {
    format_version: u32,
    items: Vec<DivisionItemRepr>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DivisionDocIn {
    format_version: u32,
    items: Vec<DivisionItemRepr>,
}

impl Serialize for Division1D {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DivisionDocOut {
            format_version: FORMAT_VERSION,
            items: self.items.iter().map(DivisionItemRepr::from).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Division1D {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = DivisionDocIn::deserialize(d)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(serde::de::Error::custom(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let items = doc
            .items
            .into_iter()
            .map(TaggedCell1D::try_from)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(Division1D { items })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CousinOptions {
    /// Maximum bisection depth per branch.
    pub max_depth: usize,
    /// Forces the tail bounds `(a, b)` instead of deriving them from the gauge.
    pub tails: Option<(f64, f64)>,
}

impl Default for CousinOptions {
    fn default() -> Self {
        Self { max_depth: 60, tails: None }
    }
}

/// Builds a gauge-fine division of the whole line.
///
/// The tails are placed just beyond `∓1/δ(∓inf)`; the bounded middle is
/// bisected until every piece is shorter than the gauge at one of its
/// endpoints, which then becomes the tag (left endpoint preferred).
pub fn cousin_division(gauge: &Gauge1D, opts: &CousinOptions) -> Result<Division1D> {
    let d_neg = gauge.checked(ExtReal::NegInf)?;
    let d_pos = gauge.checked(ExtReal::PosInf)?;
    let (a, b) = match opts.tails {
        Some((a, b)) => {
            if !(a < -1.0 / d_neg && b > 1.0 / d_pos && a < b) {
                return Err(invalid(format!(
                    "forced tails ({a}, {b}) are not fine: need a < {} and b > {}",
                    -1.0 / d_neg,
                    1.0 / d_pos
                )));
            }
            (a, b)
        }
        None => (-((1.0 / d_neg).floor() + 1.0), (1.0 / d_pos).floor() + 1.0),
    };

    let mut items = vec![TaggedCell1D { tag: ExtReal::NegInf, cell: Cell1D::NegTail(a) }];
    bisect(gauge, a, b, 0, opts.max_depth, &mut items)?;
    items.push(TaggedCell1D { tag: ExtReal::PosInf, cell: Cell1D::PosTail(b) });
    Ok(Division1D { items })
}

fn bisect(
    gauge: &Gauge1D,
    u: f64,
    v: f64,
    depth: usize,
    max_depth: usize,
    out: &mut Vec<TaggedCell1D>,
) -> Result<()> {
    let width = v - u;
    if width < gauge.checked(ExtReal::Finite(u))? {
        out.push(TaggedCell1D { tag: ExtReal::Finite(u), cell: Cell1D::Bounded(u, v) });
        return Ok(());
    }
    if width < gauge.checked(ExtReal::Finite(v))? {
        out.push(TaggedCell1D { tag: ExtReal::Finite(v), cell: Cell1D::Bounded(u, v) });
        return Ok(());
    }
    let mid = 0.5 * (u + v);
    if depth >= max_depth || !(u < mid && mid < v) {
        return Err(Error::ResourceLimit { depth, near: mid });
    }
    bisect(gauge, u, mid, depth + 1, max_depth, out)?;
    bisect(gauge, mid, v, depth + 1, max_depth, out)
}

/// A single defect found by [`validate_division`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    InvalidCell { index: usize },
    Association { index: usize },
    Overlap { first: usize, second: usize },
    Gap { from: ExtReal, to: ExtReal },
    NotFine { index: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DivisionReport {
    pub violations: Vec<Violation>,
}

impl DivisionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, pred: impl Fn(&Violation) -> bool) -> usize {
        self.violations.iter().filter(|v| pred(v)).count()
    }
}

/// Checks the partition, association and (optionally) fineness properties.
pub fn validate_division(d: &Division1D, gauge: Option<&Gauge1D>) -> DivisionReport {
    let mut violations = Vec::new();
    let mut order = Vec::with_capacity(d.items.len());
    for (index, tc) in d.items.iter().enumerate() {
        if !tc.cell.is_valid() {
            violations.push(Violation::InvalidCell { index });
            continue;
        }
        if !tc.is_associated() {
            violations.push(Violation::Association { index });
        }
        if let Some(g) = gauge {
            if !is_delta_fine(tc, g) {
                violations.push(Violation::NotFine { index });
            }
        }
        order.push(index);
    }

    order.sort_by(|&i, &j| {
        let (li, _) = d.items[i].cell.endpoints();
        let (lj, _) = d.items[j].cell.endpoints();
        li.partial_cmp(&lj).unwrap_or(Ordering::Equal).then(i.cmp(&j))
    });

    // Every cell is (left, right]; the list covers the line exactly when
    // each left end meets the running right end.
    let mut cursor = ExtReal::NegInf;
    let mut last: Option<usize> = None;
    for &i in &order {
        let (left, right) = d.items[i].cell.endpoints();
        match left.partial_cmp(&cursor) {
            Some(Ordering::Greater) => violations.push(Violation::Gap { from: cursor, to: left }),
            Some(Ordering::Less) => {
                if let Some(prev) = last {
                    violations.push(Violation::Overlap { first: prev, second: i });
                }
            }
            _ => {}
        }
        if last.is_none() || right > cursor {
            cursor = right;
            last = Some(i);
        }
    }
    if cursor != ExtReal::PosInf {
        violations.push(Violation::Gap { from: cursor, to: ExtReal::PosInf });
    }
    DivisionReport { violations }
}

/// Riemann sum `Σ h(tag, cell)` over the division, compensated.
pub fn riemann_sum<H>(d: &Division1D, mut h: H) -> Result<Complex64>
where
    H: FnMut(&TaggedCell1D) -> Complex64,
{
    let mut acc = ComplexSum::new();
    for (i, tc) in d.items.iter().enumerate() {
        let z = h(tc);
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Integrand(format!("non-finite value {z} on item {i} ({})", tc.cell)));
        }
        acc.add(z);
    }
    Ok(acc.value())
}

/// Product cell `I_1 × … × I_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellNd {
    pub factors: Vec<Cell1D>,
}

impl CellNd {
    pub fn new(factors: Vec<Cell1D>) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("a cell needs at least one factor"));
        }
        for c in &factors {
            c.validate()?;
        }
        Ok(Self { factors })
    }

    pub fn full_space(n: usize) -> Self {
        Self { factors: vec![Cell1D::FullLine; n] }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    /// Product of factor lengths, zero when any factor is unbounded.
    pub fn volume(&self) -> f64 {
        self.factors.iter().map(cell_volume).product()
    }

    pub fn is_disjoint_from(&self, other: &CellNd) -> bool {
        self.factors
            .iter()
            .zip(&other.factors)
            .any(|(a, b)| !intervals_overlap(a, b))
    }
}

fn intervals_overlap(a: &Cell1D, b: &Cell1D) -> bool {
    let (la, ra) = a.endpoints();
    let (lb, rb) = b.endpoints();
    // (la, ra] ∩ (lb, rb] is nonempty iff max(la, lb) < min(ra, rb).
    let lo = if la > lb { la } else { lb };
    let hi = if ra < rb { ra } else { rb };
    lo < hi
}

/// A product cell with a point of the extended space attached.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedCellNd {
    pub tags: Vec<ExtReal>,
    pub cell: CellNd,
}

impl TaggedCellNd {
    pub fn new(tags: Vec<ExtReal>, cell: CellNd) -> Result<Self> {
        let t = Self { tags, cell };
        if !t.is_associated() {
            return Err(Error::Association(format!(
                "tags {:?} are not associated with the cell",
                t.tags
            )));
        }
        Ok(t)
    }

    pub fn is_associated(&self) -> bool {
        self.tags.len() == self.cell.factors.len()
            && self
                .tags
                .iter()
                .zip(&self.cell.factors)
                .all(|(t, c)| tag_is_associated(*t, c))
    }

    pub fn has_infinite_tag(&self) -> bool {
        self.tags.iter().any(|t| t.is_infinite())
    }
}
