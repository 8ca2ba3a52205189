//! Checks on altering functions: membership in the admissible class
//! (continuous, zero at zero, positive elsewhere) and the stronger
//! monotone-growth hypothesis some results assume.

use crate::dsl::piecewise::AlteringFunction;
use crate::metric::{IntervalDomain, IntervalUnion, MetricSpace};
use crate::real::Real;
use crate::report::{CheckReport, Verdict, Witness};

/// Monotonicity is checked on [0, T_MAX] and growth against GROWTH_THRESHOLD.
const T_MAX: i64 = 1_000_000;
const GROWTH_THRESHOLD: i64 = 1_000;

/// Sample grid for phi checks: the (truncated) linspace over [0, inf) plus
/// piece boundaries and boundary +/- eps probes.
fn membership_grid(phi: &AlteringFunction, resolution: usize) -> (Vec<Real>, bool) {
    let space = MetricSpace::Interval(IntervalUnion::single(
        IntervalDomain::unbounded_above(Real::zero(), true),
    ));
    let grid = space.sample_grid(resolution);
    let mut ts: Vec<Real> = grid
        .points
        .iter()
        .filter_map(|p| p.as_scalar().cloned())
        .collect();
    let eps = Real::open_eps();
    for b in phi.map.boundaries() {
        if b > Real::zero() {
            let below = b.clone() - eps.clone();
            if below > Real::zero() {
                ts.push(below);
            }
        }
        ts.push(b.clone() + eps.clone());
        if b >= Real::zero() {
            ts.push(b);
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).expect("phi grid values are ordered"));
    ts.dedup();
    (ts, grid.truncated)
}

/// Interior junctions between pieces: (left piece idx, right piece idx, b)
/// wherever one piece's domain ends exactly where another's begins.
fn junctions(phi: &AlteringFunction) -> Vec<(usize, usize, Real)> {
    let pieces = &phi.map.pieces;
    let mut out = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        let Some(hi) = &p.domain.hi else { continue };
        for (j, q) in pieces.iter().enumerate() {
            if i != j && q.domain.lo == *hi {
                out.push((i, j, hi.clone()));
            }
        }
    }
    out
}

/// Membership check: phi(0) = 0 exactly, phi(t) > 0 at every sampled t > 0,
/// and the piece bodies agree (within 1e-9, exactly for rationals) at every
/// junction. Margin is the smallest sampled positive value.
pub fn check_phi_membership(phi: &AlteringFunction, resolution: usize) -> CheckReport {
    let name = "phi_membership";

    let at_zero = match phi.eval(&Real::zero()) {
        Ok(v) => v,
        Err(e) => {
            return CheckReport::new(name, Verdict::Fail).note(format!("phi(0) failed: {e}"))
        }
    };
    if !at_zero.is_zero() {
        return CheckReport::new(name, Verdict::Fail)
            .witness(Witness::new().point(Real::zero().into()).value("phi(0)", at_zero))
            .note("phi(0) must equal 0 exactly");
    }

    let (ts, truncated) = membership_grid(phi, resolution);
    let mut min_positive: Option<(Real, Real)> = None; // (t, phi(t))
    for t in &ts {
        if *t <= Real::zero() {
            continue;
        }
        let v = match phi.eval(t) {
            Ok(v) => v,
            Err(e) => {
                return CheckReport::new(name, Verdict::Fail)
                    .witness(Witness::new().point(t.clone().into()))
                    .note(format!("phi({t}) failed: {e}"));
            }
        };
        if v <= Real::zero() {
            return CheckReport::new(name, Verdict::Fail)
                .margin(v.clone())
                .witness(Witness::new().point(t.clone().into()).value("phi(t)", v))
                .note("phi(t) > 0 required for t > 0");
        }
        let smaller = match &min_positive {
            Some((_, best)) => v < *best,
            None => true,
        };
        if smaller {
            min_positive = Some((t.clone(), v));
        }
    }

    let tol = Real::open_eps();
    for (i, j, b) in junctions(phi) {
        let left = phi.map.pieces[i].body.eval(&b);
        let right = phi.map.pieces[j].body.eval(&b);
        match (left, right) {
            (Ok(l), Ok(r)) => {
                let gap = (l.clone() - r.clone()).abs();
                if gap > tol {
                    return CheckReport::new(name, Verdict::Fail)
                        .margin(gap)
                        .witness(
                            Witness::new()
                                .point(b.clone().into())
                                .value("left", l)
                                .value("right", r),
                        )
                        .note(format!("discontinuity at t = {b}"));
                }
            }
            _ => {
                return CheckReport::new(name, Verdict::Fail)
                    .witness(Witness::new().point(b.clone().into()))
                    .note(format!("a piece body is undefined at the junction t = {b}"));
            }
        }
    }

    let mut report = CheckReport::new(name, Verdict::Pass);
    if let Some((t, v)) = min_positive {
        report = report
            .margin(v.clone())
            .witness(Witness::new().point(t.into()).value("min phi", v));
    }
    if truncated {
        report = report.note("sampled on [0, 10] (domain truncated)");
    }
    report
}

/// Geometric tail 10, 20, 40, ... up to and including T_MAX.
fn geometric_tail() -> Vec<Real> {
    let mut out = Vec::new();
    let mut t: i64 = 10;
    while t < T_MAX {
        out.push(Real::from_int(t));
        t *= 2;
    }
    out.push(Real::from_int(T_MAX));
    out
}

/// Monotone-growth check: sampled monotone nondecreasing on [0, T_MAX] and
/// phi(T_MAX) >= GROWTH_THRESHOLD. A monotonicity failure is witnessed by a
/// pair t1 < t2 with phi(t1) > phi(t2), preferring readable report points
/// (piece boundaries, small integers) over raw grid neighbours.
pub fn check_beg_abbas_phi(phi: &AlteringFunction, resolution: usize) -> CheckReport {
    let name = "beg_abbas_phi";

    let membership = check_phi_membership(phi, resolution);
    if !membership.passed() {
        return CheckReport::new(name, Verdict::PreconditionFail)
            .note("phi is not an admissible altering function")
            .notes(membership.notes.clone());
    }

    let (mut ts, _) = membership_grid(phi, resolution);
    ts.extend((1..=10).map(Real::from_int));
    ts.extend(geometric_tail());
    ts.sort_by(|a, b| a.partial_cmp(b).expect("grid values are ordered"));
    ts.dedup();

    let values: Vec<(Real, Real)> = ts
        .iter()
        .filter_map(|t| phi.eval(t).ok().map(|v| (t.clone(), v)))
        .collect();

    let mut adjacent_violation: Option<(Real, Real, Real, Real)> = None;
    for w in values.windows(2) {
        let (t1, v1) = &w[0];
        let (t2, v2) = &w[1];
        if v2 < v1 {
            adjacent_violation = Some((t1.clone(), v1.clone(), t2.clone(), v2.clone()));
            break;
        }
    }

    if let Some((gt1, gv1, gt2, gv2)) = adjacent_violation {
        // prefer a witness drawn from landmark points: piece boundaries,
        // the integers 0..=10, and T_MAX
        let mut landmarks: Vec<Real> = phi.map.boundaries();
        landmarks.retain(|b| *b >= Real::zero());
        landmarks.extend((0..=10).map(Real::from_int));
        landmarks.push(Real::from_int(T_MAX));
        landmarks.sort_by(|a, b| a.partial_cmp(b).expect("landmarks are ordered"));
        landmarks.dedup();
        let lv: Vec<(Real, Real)> = landmarks
            .iter()
            .filter_map(|t| phi.eval(t).ok().map(|v| (t.clone(), v)))
            .collect();
        let mut witness: Option<(Real, Real, Real, Real)> = None;
        if let Some((i, (t1, v1))) = lv
            .iter()
            .enumerate()
            .max_by(|(_, (_, a)), (_, (_, b))| {
                a.partial_cmp(b).expect("phi values are ordered").then(std::cmp::Ordering::Greater)
            })
        {
            // max_by keeps the earliest maximum because later ties compare Greater
            if let Some((t2, v2)) = lv[i + 1..].iter().find(|(_, v)| v < v1) {
                witness = Some((t1.clone(), v1.clone(), t2.clone(), v2.clone()));
            }
        }
        let (t1, v1, t2, v2) = witness.unwrap_or((gt1, gv1, gt2, gv2));
        return CheckReport::new(name, Verdict::Fail)
            .margin(v2.clone() - v1.clone())
            .witness(
                Witness::new()
                    .point(t1.clone().into())
                    .point(t2.clone().into())
                    .value(format!("phi({t1})"), v1)
                    .value(format!("phi({t2})"), v2),
            )
            .note("phi is not monotone nondecreasing");
    }

    let at_tmax = match phi.eval(&Real::from_int(T_MAX)) {
        Ok(v) => v,
        Err(e) => {
            return CheckReport::new(name, Verdict::Fail)
                .note(format!("phi({T_MAX}) failed: {e}"))
        }
    };
    let threshold = Real::from_int(GROWTH_THRESHOLD);
    if at_tmax < threshold {
        return CheckReport::new(name, Verdict::Fail)
            .margin(at_tmax.clone() - threshold)
            .witness(
                Witness::new()
                    .point(Real::from_int(T_MAX).into())
                    .value(format!("phi({T_MAX})"), at_tmax),
            )
            .note(format!("phi({T_MAX}) < {GROWTH_THRESHOLD}: growth to infinity not plausible"));
    }

    CheckReport::new(name, Verdict::Pass)
        .margin(at_tmax.clone() - threshold)
        .witness(
            Witness::new()
                .point(Real::from_int(T_MAX).into())
                .value(format!("phi({T_MAX})"), at_tmax),
        )
        .note(format!("monotone nondecreasing on sampled [0, {T_MAX}]"))
}
