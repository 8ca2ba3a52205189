//! Exact image computation for piecewise maps over interval spaces.

use crate::dsl::piecewise::PiecewiseMap;
use crate::metric::{IntervalDomain, IntervalUnion, MetricSpace};
use crate::real::Real;

/// The image of a map over a space: a union of intervals, possibly only a
/// sampled approximation when a piece is not affine (or flips an unbounded
/// side).
#[derive(Debug, Clone, PartialEq)]
pub struct RangeSet {
    pub set: IntervalUnion,
    pub approximate: bool,
}

impl RangeSet {
    pub fn contains(&self, v: &Real) -> bool {
        self.set.contains(v)
    }

    pub fn covers(&self, other: &RangeSet) -> bool {
        self.set.covers(&other.set)
    }

    /// Whether this set is closed relative to the ambient space: every open
    /// endpoint must fall outside the ambient set. `None` when the range is
    /// only approximate — sampling can't certify endpoint flags.
    pub fn is_closed_within(&self, ambient: &IntervalUnion) -> Option<bool> {
        if self.approximate {
            return None;
        }
        for c in self.set.components() {
            if !c.lo_closed && ambient.contains(&c.lo) {
                return Some(false);
            }
            match &c.hi {
                Some(hi) if !c.hi_closed && ambient.contains(hi) => return Some(false),
                _ => {}
            }
        }
        Some(true)
    }

    /// The first open endpoint that witnesses non-closedness, if any.
    pub fn closure_gap(&self, ambient: &IntervalUnion) -> Option<Real> {
        for c in self.set.components() {
            if !c.lo_closed && ambient.contains(&c.lo) {
                return Some(c.lo.clone());
            }
            if let Some(hi) = &c.hi {
                if !c.hi_closed && ambient.contains(hi) {
                    return Some(hi.clone());
                }
            }
        }
        None
    }
}

const SAMPLE_RESOLUTION: usize = 1000;

/// Image of one affine body a*x + b over a (sub)domain, endpoint flags kept.
fn affine_image(a: &Real, b: &Real, dom: &IntervalDomain) -> Option<IntervalDomain> {
    if a.is_zero() {
        return Some(IntervalDomain::point(b.clone()));
    }
    let lo_img = a.clone() * dom.lo.clone() + b.clone();
    if *a > Real::zero() {
        let hi_img = dom.hi.as_ref().map(|h| a.clone() * h.clone() + b.clone());
        Some(IntervalDomain::new(lo_img, hi_img, dom.lo_closed, dom.hi_closed))
    } else {
        // a < 0 reverses orientation; an unbounded domain would map to
        // (-inf, ...], which IntervalDomain can't represent
        let hi = dom.hi.as_ref()?;
        let hi_img = a.clone() * hi.clone() + b.clone();
        Some(IntervalDomain::new(hi_img, Some(lo_img), dom.hi_closed, dom.lo_closed))
    }
}

/// Sampled fallback: closed f64 hull of the map over one subdomain.
fn sampled_image(map: &PiecewiseMap, dom: &IntervalDomain) -> Option<IntervalDomain> {
    let (lo, hi, _) = dom.sampling_bounds();
    let (lo_f, hi_f) = (lo.to_f64(), hi.to_f64());
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..=SAMPLE_RESOLUTION {
        let t = i as f64 / SAMPLE_RESOLUTION as f64;
        let x = Real::from_f64(lo_f + (hi_f - lo_f) * t);
        if let Ok(y) = map.eval_scalar(&x) {
            let y = y.to_f64();
            min = min.min(y);
            max = max.max(y);
        }
    }
    if !min.is_finite() || !max.is_finite() {
        return None;
    }
    Some(IntervalDomain::new(Real::from_f64(min), Some(Real::from_f64(max)), true, true))
}

/// Compute the image of `map` over `space`. Affine pieces produce exact
/// intervals with faithful open/closed endpoints; anything else falls back
/// to a sampled hull and marks the result approximate.
pub fn range_of(map: &PiecewiseMap, space: &MetricSpace) -> RangeSet {
    let ambient = space.scalar_domain();
    let mut parts: Vec<IntervalDomain> = Vec::new();
    let mut approximate = false;
    for piece in &map.pieces {
        for comp in ambient.components() {
            let Some(sub) = piece.domain.intersect(comp) else {
                continue;
            };
            let exact = piece
                .body
                .as_affine()
                .and_then(|(a, b)| affine_image(&a, &b, &sub));
            match exact {
                Some(img) => parts.push(img),
                None => {
                    if let Some(img) = sampled_image(map, &sub) {
                        parts.push(img);
                        approximate = true;
                    }
                }
            }
        }
    }
    RangeSet { set: IntervalUnion::new(parts), approximate }
}
