//! Point domains, metrics, and deterministic sampling over them.
//!
//! A space is either a finite union of real intervals with the usual metric,
//! or a finite-dimensional sequence space under the sup metric. All values
//! are immutable and every operation is a pure function, so grids can be
//! evaluated in parallel.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;

/// Total points allowed in a cartesian grid before sampling switches to a
/// low-discrepancy sequence.
pub const GRID_CAP: usize = 100_000;

/// Span used to truncate unbounded domains for sampling.
pub const UNBOUNDED_SPAN: i64 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("dimension mismatch: space has dimension {expected}, point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("scalar point used with a sequence space (or vice versa)")]
    PointShape,
}

/// A point of a metric space: a scalar for interval domains, a coordinate
/// vector for sequence spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Scalar(Real),
    Vector(Vec<Real>),
}

impl Point {
    pub fn scalar(v: Real) -> Self {
        Point::Scalar(v)
    }

    pub fn vector(coords: Vec<Real>) -> Self {
        Point::Vector(coords)
    }

    pub fn zero_vector(dim: usize) -> Self {
        Point::Vector(vec![Real::zero(); dim])
    }

    pub fn as_scalar(&self) -> Option<&Real> {
        match self {
            Point::Scalar(v) => Some(v),
            Point::Vector(_) => None,
        }
    }

    pub fn coords(&self) -> &[Real] {
        match self {
            Point::Scalar(v) => std::slice::from_ref(v),
            Point::Vector(vs) => vs,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.coords().iter().all(Real::is_exact)
    }
}

impl From<Real> for Point {
    fn from(v: Real) -> Self {
        Point::Scalar(v)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Scalar(v) => write!(f, "{v}"),
            Point::Vector(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A real interval with individually open or closed endpoints. `hi = None`
/// means unbounded above. A degenerate closed interval (`lo == hi`)
/// represents an isolated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDomain {
    pub lo: Real,
    pub hi: Option<Real>,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl IntervalDomain {
    pub fn new(lo: Real, hi: Option<Real>, lo_closed: bool, hi_closed: bool) -> Self {
        debug_assert!(hi.is_some() || !hi_closed, "unbounded side cannot be closed");
        IntervalDomain { lo, hi, lo_closed, hi_closed }
    }

    pub fn closed(lo: Real, hi: Real) -> Self {
        Self::new(lo, Some(hi), true, true)
    }

    pub fn point(v: Real) -> Self {
        Self::closed(v.clone(), v)
    }

    pub fn unbounded_above(lo: Real, lo_closed: bool) -> Self {
        Self::new(lo, None, lo_closed, false)
    }

    pub fn is_empty(&self) -> bool {
        match &self.hi {
            None => false,
            Some(hi) => {
                if self.lo > *hi {
                    true
                } else {
                    self.lo == *hi && !(self.lo_closed && self.hi_closed)
                }
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(&self.hi, Some(hi) if self.lo == *hi && self.lo_closed && self.hi_closed)
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_some()
    }

    pub fn contains(&self, v: &Real) -> bool {
        let above_lo = if self.lo_closed { *v >= self.lo } else { *v > self.lo };
        if !above_lo {
            return false;
        }
        match &self.hi {
            None => true,
            Some(hi) => {
                if self.hi_closed {
                    *v <= *hi
                } else {
                    *v < *hi
                }
            }
        }
    }

    pub fn intersect(&self, other: &IntervalDomain) -> Option<IntervalDomain> {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo.clone(), self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo.clone(), other.lo_closed)
        } else {
            (self.lo.clone(), self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = match (&self.hi, &other.hi) {
            (None, None) => (None, false),
            (Some(h), None) => (Some(h.clone()), self.hi_closed),
            (None, Some(h)) => (Some(h.clone()), other.hi_closed),
            (Some(a), Some(b)) => {
                if a < b {
                    (Some(a.clone()), self.hi_closed)
                } else if b < a {
                    (Some(b.clone()), other.hi_closed)
                } else {
                    (Some(a.clone()), self.hi_closed && other.hi_closed)
                }
            }
        };
        let out = IntervalDomain::new(lo, hi, lo_closed, hi_closed);
        if out.is_empty() {
            None
        } else {
            Some(out)
        }
    }

    /// True if the two intervals overlap or touch without a gap, so their
    /// union is a single interval.
    fn merges_with(&self, other: &IntervalDomain) -> bool {
        // assumes self.lo <= other.lo
        match &self.hi {
            None => true,
            Some(hi) => {
                if *hi > other.lo {
                    true
                } else if *hi == other.lo {
                    self.hi_closed || other.lo_closed
                } else {
                    false
                }
            }
        }
    }

    /// Endpoints used for sampling: open sides nudged inward by 1e-9 and an
    /// unbounded side truncated to `lo + UNBOUNDED_SPAN`. The flag reports
    /// whether truncation happened.
    pub fn sampling_bounds(&self) -> (Real, Real, bool) {
        let lo = if self.lo_closed {
            self.lo.clone()
        } else {
            self.lo.clone() + Real::open_eps()
        };
        match &self.hi {
            None => (lo, self.lo.clone() + Real::from_int(UNBOUNDED_SPAN), true),
            Some(hi) => {
                let hi = if self.hi_closed { hi.clone() } else { hi.clone() - Real::open_eps() };
                (lo, hi, false)
            }
        }
    }
}

impl fmt::Display for IntervalDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}, ", if self.lo_closed { '[' } else { '(' }, self.lo)?;
        match &self.hi {
            None => write!(f, "inf)"),
            Some(hi) => write!(f, "{}{}", hi, if self.hi_closed { ']' } else { ')' }),
        }
    }
}

/// A finite union of pairwise disjoint intervals, kept sorted and merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    components: Vec<IntervalDomain>,
}

impl IntervalUnion {
    pub fn new(components: Vec<IntervalDomain>) -> Self {
        let mut parts: Vec<IntervalDomain> = components.into_iter().filter(|c| !c.is_empty()).collect();
        parts.sort_by(|a, b| {
            a.lo.partial_cmp(&b.lo)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| b.lo_closed.cmp(&a.lo_closed))
        });
        let mut merged: Vec<IntervalDomain> = Vec::with_capacity(parts.len());
        for part in parts {
            match merged.last_mut() {
                Some(last) if last.merges_with(&part) => {
                    let hi = match (&last.hi, &part.hi) {
                        (None, _) | (_, None) => None,
                        (Some(a), Some(b)) => Some(if a > b { a.clone() } else { b.clone() }),
                    };
                    let hi_closed = match (&last.hi, &part.hi) {
                        (None, _) | (_, None) => false,
                        (Some(a), Some(b)) => {
                            if a > b {
                                last.hi_closed
                            } else if b > a {
                                part.hi_closed
                            } else {
                                last.hi_closed || part.hi_closed
                            }
                        }
                    };
                    last.hi = hi;
                    last.hi_closed = hi_closed;
                }
                _ => merged.push(part),
            }
        }
        IntervalUnion { components: merged }
    }

    pub fn single(domain: IntervalDomain) -> Self {
        Self::new(vec![domain])
    }

    pub fn components(&self) -> &[IntervalDomain] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, v: &Real) -> bool {
        self.components.iter().any(|c| c.contains(v))
    }

    /// True if every point of `other` lies in `self`. Exact on interval
    /// endpoints.
    pub fn covers(&self, other: &IntervalUnion) -> bool {
        other.components.iter().all(|c| self.covers_interval(c))
    }

    pub fn covers_interval(&self, target: &IntervalDomain) -> bool {
        // Components are sorted and merged, so a single component must
        // contain the whole target.
        self.components.iter().any(|c| {
            let lo_ok = c.lo < target.lo
                || (c.lo == target.lo && (c.lo_closed || !target.lo_closed));
            let hi_ok = match (&c.hi, &target.hi) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(ch), Some(th)) => {
                    ch > th || (ch == th && (c.hi_closed || !target.hi_closed))
                }
            };
            lo_ok && hi_ok
        })
    }

    /// A witness value in `self` that is not in `other`, if one exists.
    pub fn witness_not_covered_by(&self, other: &IntervalUnion) -> Option<Real> {
        for c in &self.components {
            if other.covers_interval(c) {
                continue;
            }
            let (lo, hi, _) = c.sampling_bounds();
            // probe endpoints and a few interior points
            let span = hi.clone() - lo.clone();
            for k in 0..=8 {
                let t = lo.clone() + span.clone() * Real::from_ratio(k, 8);
                if c.contains(&t) && !other.contains(&t) {
                    return Some(t);
                }
            }
        }
        None
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "{{}}");
        }
        // isolated points print as {v}
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, " U ")?;
            }
            if c.is_degenerate() {
                write!(f, "{{{}}}", c.lo)?;
            } else {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

/// A metric space: a union of intervals under `|x - y|`, or a truncated
/// sup-metric sequence space with a common coordinate domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricSpace {
    Interval(IntervalUnion),
    SeqSpace { dim: usize, coord: IntervalDomain },
}

impl MetricSpace {
    pub fn interval(domain: IntervalDomain) -> Self {
        MetricSpace::Interval(IntervalUnion::single(domain))
    }

    pub fn seq(dim: usize, coord: IntervalDomain) -> Self {
        assert!(dim >= 1, "sequence space dimension must be >= 1");
        MetricSpace::SeqSpace { dim, coord }
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricSpace::Interval(_) => 1,
            MetricSpace::SeqSpace { dim, .. } => *dim,
        }
    }

    /// The scalar domain points live in: the interval union itself, or the
    /// coordinate domain of a sequence space.
    pub fn scalar_domain(&self) -> IntervalUnion {
        match self {
            MetricSpace::Interval(u) => u.clone(),
            MetricSpace::SeqSpace { coord, .. } => IntervalUnion::single(coord.clone()),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (self, p) {
            (MetricSpace::Interval(u), Point::Scalar(v)) => u.contains(v),
            (MetricSpace::SeqSpace { dim, coord }, Point::Vector(vs)) => {
                vs.len() == *dim && vs.iter().all(|v| coord.contains(v))
            }
            _ => false,
        }
    }

    /// Distance between two points of this space. Exact whenever both
    /// points carry exact coordinates.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<Real, MetricError> {
        match self {
            MetricSpace::Interval(_) => {
                let (a, b) = match (p, q) {
                    (Point::Scalar(a), Point::Scalar(b)) => (a, b),
                    _ => return Err(MetricError::PointShape),
                };
                Ok((a.clone() - b.clone()).abs())
            }
            MetricSpace::SeqSpace { dim, .. } => {
                let (xs, ys) = match (p, q) {
                    (Point::Vector(xs), Point::Vector(ys)) => (xs, ys),
                    _ => return Err(MetricError::PointShape),
                };
                if xs.len() != *dim {
                    return Err(MetricError::DimensionMismatch { expected: *dim, got: xs.len() });
                }
                if ys.len() != *dim {
                    return Err(MetricError::DimensionMismatch { expected: *dim, got: ys.len() });
                }
                let mut sup = Real::zero();
                for (a, b) in xs.iter().zip(ys) {
                    let d = (a.clone() - b.clone()).abs();
                    if d > sup {
                        sup = d;
                    }
                }
                Ok(sup)
            }
        }
    }

    /// Deterministic sample grid. Closed endpoints are included exactly;
    /// open endpoints are replaced by endpoint -/+ 1e-9; unbounded domains
    /// are truncated (reported by the `truncated` flag). Equal inputs always
    /// produce the identical point list.
    pub fn sample_grid(&self, resolution: usize) -> SampledGrid {
        assert!(resolution >= 2, "resolution must be >= 2");
        match self {
            MetricSpace::Interval(u) => {
                let mut points = Vec::new();
                let mut truncated = false;
                for c in u.components() {
                    if c.is_degenerate() {
                        points.push(Point::Scalar(c.lo.clone()));
                        continue;
                    }
                    let (vals, trunc) = interval_linspace(c, resolution);
                    truncated |= trunc;
                    points.extend(vals.into_iter().map(Point::Scalar));
                }
                points.dedup_by(|a, b| a == b);
                SampledGrid { points, truncated }
            }
            MetricSpace::SeqSpace { dim, coord } => {
                let (axis, truncated) = if coord.is_degenerate() {
                    (vec![coord.lo.clone()], false)
                } else {
                    interval_linspace(coord, resolution)
                };
                let total = axis.len().checked_pow(*dim as u32);
                match total {
                    Some(n) if n <= GRID_CAP => {
                        let mut points = Vec::with_capacity(n);
                        let mut idx = vec![0usize; *dim];
                        loop {
                            points.push(Point::Vector(idx.iter().map(|&i| axis[i].clone()).collect()));
                            // odometer increment, last coordinate fastest
                            let mut k = *dim;
                            loop {
                                if k == 0 {
                                    return SampledGrid { points, truncated };
                                }
                                k -= 1;
                                idx[k] += 1;
                                if idx[k] < axis.len() {
                                    break;
                                }
                                idx[k] = 0;
                            }
                        }
                    }
                    _ => {
                        let (lo, hi, trunc) = coord.sampling_bounds();
                        let points = low_discrepancy(*dim, resolution, lo.to_f64(), hi.to_f64());
                        SampledGrid { points, truncated: truncated || trunc }
                    }
                }
            }
        }
    }
}

/// `resolution` evenly spaced values over the closure of the interval, with
/// excluded endpoints then nudged inward. Exact arithmetic throughout when
/// the endpoints are exact.
fn interval_linspace(c: &IntervalDomain, resolution: usize) -> (Vec<Real>, bool) {
    let (hi, truncated) = match &c.hi {
        None => (c.lo.clone() + Real::from_int(UNBOUNDED_SPAN), true),
        Some(hi) => (hi.clone(), false),
    };
    let span = hi.clone() - c.lo.clone();
    let steps = (resolution - 1) as i64;
    let mut vals = Vec::with_capacity(resolution);
    for k in 0..resolution {
        let mut v = c.lo.clone() + span.clone() * Real::from_ratio(k as i64, steps);
        if k == 0 && !c.lo_closed {
            v = v + Real::open_eps();
        }
        if k == resolution - 1 && !truncated && !c.hi_closed {
            v = v - Real::open_eps();
        }
        vals.push(v);
    }
    (vals, truncated)
}

/// Additive-recurrence low-discrepancy points in `[lo, hi]^dim`, seeded by
/// the fixed constant 1/2. Deterministic; the first `n` points of a longer
/// run are exactly the first `n` points of a shorter one.
fn low_discrepancy(dim: usize, count: usize, lo: f64, hi: f64) -> Vec<Point> {
    // generalized golden ratio: positive root of x^(dim+1) = x + 1
    let mut phi = 1.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=dim).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
    let span = hi - lo;
    (0..count)
        .map(|n| {
            Point::Vector(
                alphas
                    .iter()
                    .map(|a| {
                        let u = (0.5 + a * (n as f64 + 1.0)).fract();
                        Real::from_f64(lo + span * u)
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Output of [`MetricSpace::sample_grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGrid {
    pub points: Vec<Point>,
    /// True when an unbounded side was truncated for sampling; every report
    /// built from this grid must carry the note.
    pub truncated: bool,
}
