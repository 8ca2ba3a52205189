//! Piecewise-defined selfmaps: evaluation, coverage checks, and preimages.

use std::fmt;

use thiserror::Error;

use crate::dsl::expr::Expr;
use crate::metric::{IntervalDomain, IntervalUnion, Point};
use crate::real::{Real, RealError};

/// Bisection iteration cap for numeric preimages.
const BISECT_MAX_ITERS: usize = 200;
/// Width tolerance for bisection brackets.
const BISECT_TOL: f64 = 1e-12;
/// Scan resolution for non-affine pieces without a sign change at the ends.
const SCAN_RESOLUTION: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("piece domains {a} and {b} overlap")]
    OverlappingPieces { a: String, b: String },
    #[error("piece domain {0} is empty")]
    EmptyPiece(String),
    #[error("pieces do not cover the domain (missing e.g. {witness})")]
    CoverageGap { witness: String },
    #[error("point {0} lies outside every piece")]
    OutsidePieces(String),
    #[error("scalar map applied to a vector point without the coordinatewise flag")]
    Shape,
    #[error("arithmetic error: {0}")]
    Arith(#[from] RealError),
}

/// One case of a piecewise definition: a formula over an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub domain: IntervalDomain,
    pub body: Expr,
}

/// An ordered list of pieces with pairwise disjoint domains. On sequence
/// spaces the map applies per coordinate when `coordinatewise` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseMap {
    pub var: String,
    pub pieces: Vec<Piece>,
    pub coordinatewise: bool,
}

impl PiecewiseMap {
    pub fn new(var: impl Into<String>, pieces: Vec<Piece>) -> Result<Self, MapError> {
        for p in &pieces {
            if p.domain.is_empty() {
                return Err(MapError::EmptyPiece(p.domain.to_string()));
            }
        }
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                if pieces[i].domain.intersect(&pieces[j].domain).is_some() {
                    return Err(MapError::OverlappingPieces {
                        a: pieces[i].domain.to_string(),
                        b: pieces[j].domain.to_string(),
                    });
                }
            }
        }
        Ok(PiecewiseMap { var: var.into(), pieces, coordinatewise: false })
    }

    pub fn with_coordinatewise(mut self, flag: bool) -> Self {
        self.coordinatewise = flag;
        self
    }

    /// Union of the piece domains.
    pub fn domain_union(&self) -> IntervalUnion {
        IntervalUnion::new(self.pieces.iter().map(|p| p.domain.clone()).collect())
    }

    /// Verify the pieces cover every point of `domain`.
    pub fn check_covers(&self, domain: &IntervalUnion) -> Result<(), MapError> {
        let mine = self.domain_union();
        if mine.covers(domain) {
            Ok(())
        } else {
            let witness = domain
                .witness_not_covered_by(&mine)
                .map(|v| v.to_string())
                .unwrap_or_else(|| "an endpoint".to_string());
            Err(MapError::CoverageGap { witness })
        }
    }

    /// Finite piece-boundary abscissas (both endpoints of every piece).
    pub fn boundaries(&self) -> Vec<Real> {
        let mut out: Vec<Real> = Vec::new();
        for p in &self.pieces {
            out.push(p.domain.lo.clone());
            if let Some(hi) = &p.domain.hi {
                out.push(hi.clone());
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out.dedup();
        out
    }

    fn piece_for(&self, x: &Real) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.domain.contains(x))
    }

    pub fn eval_scalar(&self, x: &Real) -> Result<Real, MapError> {
        let piece = self
            .piece_for(x)
            .ok_or_else(|| MapError::OutsidePieces(x.to_string()))?;
        Ok(piece.body.eval(x)?)
    }

    /// Evaluate at a point; vectors require the coordinatewise flag.
    pub fn eval_point(&self, p: &Point) -> Result<Point, MapError> {
        match p {
            Point::Scalar(v) => Ok(Point::Scalar(self.eval_scalar(v)?)),
            Point::Vector(vs) => {
                if !self.coordinatewise {
                    return Err(MapError::Shape);
                }
                let mut out = Vec::with_capacity(vs.len());
                for v in vs {
                    out.push(self.eval_scalar(v)?);
                }
                Ok(Point::Vector(out))
            }
        }
    }

    /// True if every piece is exactly the identity `x`.
    pub fn is_identity(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.body.as_affine() == Some((Real::one(), Real::zero())))
    }

    /// Solve f(x) = y for a scalar y. Among all pieces attaining y, prefers
    /// the solution closest to `prev` (the smallest solution without one);
    /// a constant piece attaining y contributes the point of its domain
    /// closest to `prev` (its midpoint without one). Returns a point with
    /// |f(x) - y| <= tol, or none if no piece attains y.
    pub fn preimage_scalar(&self, y: &Real, prev: Option<&Real>, tol: &Real) -> Option<Real> {
        let mut candidates: Vec<Real> = Vec::new();
        for piece in &self.pieces {
            match piece.body.as_affine() {
                Some((a, b)) => {
                    if a.is_zero() {
                        if (b.clone() - y.clone()).abs() <= *tol {
                            candidates.push(closest_in(&piece.domain, prev));
                        }
                    } else if let Ok(x) = (y.clone() - b).checked_div(&a) {
                        if piece.domain.contains(&x) {
                            candidates.push(x);
                        }
                    }
                }
                None => {
                    if let Some(x) = numeric_preimage(piece, y, tol) {
                        candidates.push(x);
                    }
                }
            }
        }
        // verify the contract before offering a candidate
        candidates.retain(|x| {
            self.eval_scalar(x)
                .map(|fx| (fx - y.clone()).abs() <= *tol)
                .unwrap_or(false)
        });
        pick_candidate(candidates, prev)
    }

    /// Coordinatewise preimage for vector targets.
    pub fn preimage_point(&self, y: &Point, prev: Option<&Point>, tol: &Real) -> Option<Point> {
        match y {
            Point::Scalar(v) => {
                let pv = prev.and_then(Point::as_scalar);
                self.preimage_scalar(v, pv, tol).map(Point::Scalar)
            }
            Point::Vector(vs) => {
                if !self.coordinatewise {
                    return None;
                }
                let mut out = Vec::with_capacity(vs.len());
                for (i, v) in vs.iter().enumerate() {
                    let pv = prev.and_then(|p| p.coords().get(i));
                    out.push(self.preimage_scalar(v, pv, tol)?);
                }
                Some(Point::Vector(out))
            }
        }
    }
}

/// The point of `domain` closest to `prev`, with open endpoints nudged
/// inward and unbounded sides truncated; domain midpoint when `prev` is
/// absent.
fn closest_in(domain: &IntervalDomain, prev: Option<&Real>) -> Real {
    let (lo, hi, _) = domain.sampling_bounds();
    match prev {
        Some(p) if domain.contains(p) => p.clone(),
        Some(p) => {
            if *p <= lo {
                lo
            } else {
                hi
            }
        }
        None => (lo + hi) / Real::from_int(2),
    }
}

fn pick_candidate(candidates: Vec<Real>, prev: Option<&Real>) -> Option<Real> {
    let mut best: Option<Real> = None;
    for c in candidates {
        let better = match &best {
            None => true,
            Some(b) => match prev {
                Some(p) => {
                    let dc = (c.clone() - p.clone()).abs();
                    let db = (b.clone() - p.clone()).abs();
                    dc < db || (dc == db && c < *b)
                }
                None => c < *b,
            },
        };
        if better {
            best = Some(c);
        }
    }
    best
}

/// Numeric preimage on one piece: bisection when the residual changes sign
/// across the (nudged) endpoints, otherwise a dense scan refined by
/// bisection in the best bracket.
fn numeric_preimage(piece: &Piece, y: &Real, tol: &Real) -> Option<Real> {
    let (lo, hi, _) = piece.domain.sampling_bounds();
    let (lo, hi) = (lo.to_f64(), hi.to_f64());
    let yf = y.to_f64();
    let g = |x: f64| -> Option<f64> {
        piece.body.eval(&Real::from_f64(x)).ok().map(|v| v.to_f64() - yf)
    };
    let glo = g(lo)?;
    let ghi = g(hi)?;
    if glo == 0.0 {
        return Some(Real::from_f64(lo));
    }
    if ghi == 0.0 {
        return Some(Real::from_f64(hi));
    }
    if glo.signum() != ghi.signum() {
        return bisect(&g, lo, hi, glo).map(Real::from_f64);
    }
    // no sign change at the ends: scan for a bracket or a near miss
    let mut best = (glo.abs(), lo);
    let mut prev = (lo, glo);
    for k in 1..=SCAN_RESOLUTION {
        let x = lo + (hi - lo) * (k as f64) / (SCAN_RESOLUTION as f64);
        let Some(gx) = g(x) else { continue };
        if gx.abs() < best.0 {
            best = (gx.abs(), x);
        }
        if gx == 0.0 {
            return Some(Real::from_f64(x));
        }
        if gx.signum() != prev.1.signum() {
            return bisect(&g, prev.0, x, prev.1).map(Real::from_f64);
        }
        prev = (x, gx);
    }
    if best.0 <= tol.to_f64() {
        Some(Real::from_f64(best.1))
    } else {
        None
    }
}

fn bisect(g: &dyn Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64, glo: f64) -> Option<f64> {
    let mut sign_lo = glo.signum();
    for _ in 0..BISECT_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= BISECT_TOL {
            return Some(mid);
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Some(mid);
        }
        if gm.signum() == sign_lo {
            lo = mid;
            sign_lo = gm.signum();
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

impl fmt::Display for PiecewiseMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "piecewise {} {{", self.var)?;
        for p in &self.pieces {
            write!(f, " {} -> {};", p.domain, p.body.display(&self.var))?;
        }
        write!(f, " }}")
    }
}

/// A candidate altering function: a piecewise map over [0, inf). Its
/// membership conditions (continuity, zero at zero, positivity) are checked
/// separately and reported, not assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct AlteringFunction {
    pub map: PiecewiseMap,
}

impl AlteringFunction {
    pub fn new(map: PiecewiseMap) -> Result<Self, MapError> {
        let half_line = IntervalUnion::single(IntervalDomain::unbounded_above(Real::zero(), true));
        map.check_covers(&half_line)?;
        Ok(AlteringFunction { map })
    }

    pub fn eval(&self, t: &Real) -> Result<Real, MapError> {
        self.map.eval_scalar(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Real {
        Real::from_ratio(n, d)
    }

    fn const_piece(lo: Real, hi: Option<Real>, lc: bool, hc: bool, v: Real) -> Piece {
        Piece { domain: IntervalDomain::new(lo, hi, lc, hc), body: Expr::Const(v) }
    }

    /// Three-valued step map: 1/3 on [0,2/3), 2/3 at 2/3, 5/6 above.
    fn step_map() -> PiecewiseMap {
        PiecewiseMap::new(
            "x",
            vec![
                const_piece(r(0, 1), Some(r(2, 3)), true, false, r(1, 3)),
                const_piece(r(2, 3), Some(r(2, 3)), true, true, r(2, 3)),
                const_piece(r(2, 3), None, false, false, r(5, 6)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn overlap_is_rejected() {
        let err = PiecewiseMap::new(
            "x",
            vec![
                Piece {
                    domain: IntervalDomain::new(r(0, 1), Some(r(1, 1)), true, false),
                    body: Expr::Var,
                },
                const_piece(r(1, 2), Some(r(2, 1)), true, true, r(1, 1)),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, MapError::OverlappingPieces { .. }));
    }

    #[test]
    fn eval_picks_the_unique_piece() {
        let m = step_map();
        assert_eq!(m.eval_scalar(&r(1, 2)).unwrap(), r(1, 3));
        assert_eq!(m.eval_scalar(&r(2, 3)).unwrap(), r(2, 3));
        assert_eq!(m.eval_scalar(&r(7, 10)).unwrap(), r(5, 6));
        assert!(matches!(
            m.eval_scalar(&r(-1, 1)),
            Err(MapError::OutsidePieces(_))
        ));
    }

    #[test]
    fn preimage_constant_piece_respects_prev() {
        let m = step_map();
        let tol = Real::from_ratio(1, 1_000_000_000);
        // y = 5/6 is attained on (2/3, inf); nearest representative above 2/3
        let x = m.preimage_scalar(&r(5, 6), Some(&Real::zero()), &tol).unwrap();
        assert!(x > r(2, 3));
        assert_eq!(x, r(2, 3) + Real::open_eps());
        // no preimage for a value outside the range
        assert_eq!(m.preimage_scalar(&r(9, 10), Some(&Real::zero()), &tol), None);
        // exact hit on the isolated piece
        assert_eq!(m.preimage_scalar(&r(2, 3), Some(&r(5, 6)), &tol), Some(r(2, 3)));
    }

    #[test]
    fn preimage_affine_piece_inverts_exactly() {
        // identity on [2/3, 1]
        let m = PiecewiseMap::new(
            "x",
            vec![Piece {
                domain: IntervalDomain::closed(r(2, 3), r(1, 1)),
                body: Expr::Var,
            }],
        )
        .unwrap();
        let tol = Real::from_ratio(1, 1_000_000_000);
        assert_eq!(m.preimage_scalar(&r(7, 10), None, &tol), Some(r(7, 10)));
        assert_eq!(m.preimage_scalar(&r(1, 2), None, &tol), None);
    }

    #[test]
    fn preimage_nonaffine_by_bisection() {
        // x/(1+x) on [0, 1]: preimage of 1/3 is 1/2
        let m = PiecewiseMap::new(
            "x",
            vec![Piece {
                domain: IntervalDomain::closed(r(0, 1), r(1, 1)),
                body: Expr::Div(
                    Box::new(Expr::Var),
                    Box::new(Expr::Add(Box::new(Expr::Const(r(1, 1))), Box::new(Expr::Var))),
                ),
            }],
        )
        .unwrap();
        let tol = Real::from_ratio(1, 1_000_000_000);
        let x = m.preimage_scalar(&r(1, 3), None, &tol).unwrap();
        assert!((x.to_f64() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn coverage_gap_reports_a_witness() {
        let m = step_map();
        // fails to cover negative numbers
        let whole_line_from_minus_one =
            IntervalUnion::single(IntervalDomain::unbounded_above(r(-1, 1), true));
        let err = m.check_covers(&whole_line_from_minus_one).unwrap_err();
        assert!(matches!(err, MapError::CoverageGap { .. }));
        let ok = IntervalUnion::single(IntervalDomain::unbounded_above(r(0, 1), true));
        assert!(m.check_covers(&ok).is_ok());
    }

    #[test]
    fn identity_detection() {
        let ident = PiecewiseMap::new(
            "x",
            vec![Piece { domain: IntervalDomain::closed(r(0, 1), r(1, 1)), body: Expr::Var }],
        )
        .unwrap();
        assert!(ident.is_identity());
        assert!(!step_map().is_identity());
    }

    #[test]
    fn altering_function_requires_half_line() {
        let short = PiecewiseMap::new(
            "t",
            vec![const_piece(r(0, 1), Some(r(1, 1)), true, true, r(1, 1))],
        )
        .unwrap();
        assert!(AlteringFunction::new(short).is_err());
    }
}
