//! Constructive routes to a common fixed point: Jungck iteration through
//! f-preimages, the limit of a property-(E.A) witness sequence, and plain
//! Picard iteration when f is the identity.

use serde::{Deserialize, Serialize};

use crate::dsl::expr::Expr;
use crate::dsl::piecewise::{AlteringFunction, Piece, PiecewiseMap};
use crate::metric::{MetricSpace, Point};
use crate::real::Real;
use crate::report::{CheckReport, Verdict, Witness};
use crate::verifiers::{
    check_f_range_closed, check_weakly_contractive, find_coincidence_points, sample_points,
    MapPair, SequenceDescriptor,
};

/// Iterates beyond this count are not stored in the trace (distances are).
const TRACE_CAP: usize = 10_000;
/// A distance beyond this aborts the run as divergent.
const DIVERGENCE_BOUND: f64 = 1e12;
/// Exact iterates whose numerator + denominator exceed this many bits are
/// demoted to floating point to keep long runs affordable.
const EXACT_BITS_CAP: u64 = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged { z: Point },
    PreimageMissing { at_step: usize },
    MaxIters,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// (x_n, T x_n) pairs, capped at TRACE_CAP entries plus the final pair.
    pub iterates: Vec<(Point, Point)>,
    /// d(f x_n, T x_n) per step (d(x_n, T x_n) on the direct route).
    pub distances: Vec<Real>,
    pub termination: Termination,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Jungck,
    Ea,
    Direct,
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Route::Jungck => "jungck",
            Route::Ea => "ea",
            Route::Direct => "direct",
        })
    }
}

impl std::str::FromStr for Route {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jungck" => Ok(Route::Jungck),
            "ea" => Ok(Route::Ea),
            "direct" => Ok(Route::Direct),
            other => Err(format!("unknown route '{other}' (expected jungck, ea, or direct)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteData {
    Jungck { trace: IterationTrace },
    Ea { witness: Box<SequenceDescriptor>, z: Point, u: Option<Point> },
    Direct { trace: IterationTrace },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub fixed_point: Option<Point>,
    pub route: Route,
    pub data: RouteData,
    /// (d(f z, z), d(T z, z)) at the candidate point, when one was reached.
    pub residuals: Option<(Real, Real)>,
    pub notes: Vec<String>,
}

fn dist(space: &MetricSpace, a: &Point, b: &Point) -> Real {
    space.distance(a, b).expect("points drawn from the same space")
}

fn demote_heavy(p: &Point) -> Option<Point> {
    let heavy = p.coords().iter().any(|c| match c.to_exact() {
        Some(r) => r.numer().bits() + r.denom().bits() > EXACT_BITS_CAP,
        None => false,
    });
    heavy.then(|| {
        let coords: Vec<Real> = p.coords().iter().map(|c| Real::from_f64(c.to_f64())).collect();
        match p {
            Point::Scalar(_) => Point::Scalar(coords.into_iter().next().expect("scalar coord")),
            Point::Vector(_) => Point::Vector(coords),
        }
    })
}

/// The identity map expressed over the scalar domain of a space.
pub fn identity_map(space: &MetricSpace) -> PiecewiseMap {
    let pieces = space
        .scalar_domain()
        .components()
        .iter()
        .map(|c| Piece { domain: c.clone(), body: Expr::Var })
        .collect();
    PiecewiseMap::new("x", pieces)
        .expect("space components are disjoint and nonempty")
        .with_coordinatewise(matches!(space, MetricSpace::SeqSpace { .. }))
}

/// Does z satisfy f z = z = T z within tol?
pub fn verify_common_fixed_point(pair: &MapPair, z: &Point, tol: &Real) -> CheckReport {
    let name = "common_fixed_point";
    if !pair.space.contains(z) {
        return CheckReport::new(name, Verdict::Fail)
            .witness(Witness::new().point(z.clone()))
            .note(format!("candidate {z} lies outside the space"));
    }
    let (fz, tz) = match (pair.f.eval_point(z), pair.t.eval_point(z)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            return CheckReport::new(name, Verdict::Unknown)
                .note(format!("evaluation failed at {z}: {e}"));
        }
    };
    let rf = dist(&pair.space, &fz, z);
    let rt = dist(&pair.space, &tz, z);
    let margin = rf.clone().max(rt.clone());
    let verdict = if margin <= *tol { Verdict::Pass } else { Verdict::Fail };
    CheckReport::new(name, verdict)
        .margin(margin)
        .witness(Witness::new().point(z.clone()).value("d(fz,z)", rf).value("d(Tz,z)", rt))
}

/// Residuals of a candidate, or None when it cannot be evaluated.
fn residuals_at(pair: &MapPair, z: &Point) -> Option<(Real, Real)> {
    let fz = pair.f.eval_point(z).ok()?;
    let tz = pair.t.eval_point(z).ok()?;
    Some((dist(&pair.space, &fz, z), dist(&pair.space, &tz, z)))
}

/// Jungck iteration: y_n = T x_n = f x_{n+1}, solving each step for
/// x_{n+1} in the f-preimage of T x_n (closest solution to x_n). Stops at a
/// coincidence point (d(f x, T x) <= tol), a missing preimage, or the
/// iteration budget.
pub fn jungck_iterate(pair: &MapPair, x0: &Point, tol: &Real, max_iters: usize) -> SolveResult {
    let mut notes: Vec<String> = Vec::new();
    let mut iterates: Vec<(Point, Point)> = Vec::new();
    let mut distances: Vec<Real> = Vec::new();
    let mut fixed_point: Option<Point> = None;
    let mut residuals: Option<(Real, Real)> = None;
    let mut trace_truncated = false;

    let mut x = x0.clone();
    let termination = 'run: {
        if !pair.space.contains(&x) {
            notes.push(format!("starting point {x} lies outside the space"));
            break 'run Termination::Diverged;
        }
        loop {
            let (fx, tx) = match (pair.f.eval_point(&x), pair.t.eval_point(&x)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    notes.push(format!("evaluation failed at {x}: {e}"));
                    break 'run Termination::Diverged;
                }
            };
            let d = dist(&pair.space, &fx, &tx);
            let recorded = iterates.len() < TRACE_CAP;
            if recorded {
                iterates.push((x.clone(), tx.clone()));
            } else {
                trace_truncated = true;
            }
            if d <= *tol {
                if !recorded {
                    iterates.push((x.clone(), tx.clone()));
                }
                if !distances.is_empty() {
                    distances.push(d);
                } else {
                    notes.push("starting point is already a coincidence point".into());
                }
                let z = tx.clone();
                // audit: the maps must commute at the coincidence point
                let commute = match (pair.t.eval_point(&fx), pair.f.eval_point(&tx)) {
                    (Ok(tfx), Ok(ftx)) => {
                        let w = dist(&pair.space, &tfx, &ftx);
                        if w > *tol {
                            notes.push(format!(
                                "maps do not commute at the coincidence point {x} \
                                 (d(Tf x, fT x) = {w})"
                            ));
                            false
                        } else {
                            true
                        }
                    }
                    _ => {
                        notes.push(format!("commutation audit failed to evaluate at {x}"));
                        false
                    }
                };
                let verify = verify_common_fixed_point(pair, &z, tol);
                residuals = residuals_at(pair, &z);
                if commute && verify.passed() {
                    fixed_point = Some(z.clone());
                } else if !verify.passed() {
                    notes.push(format!(
                        "coincidence value {z} is not a common fixed point"
                    ));
                }
                break 'run Termination::Converged { z };
            }
            if d.to_f64() > DIVERGENCE_BOUND {
                notes.push(format!("distances grew beyond {DIVERGENCE_BOUND:.0e}"));
                distances.push(d);
                break 'run Termination::Diverged;
            }
            distances.push(d);
            if distances.len() >= max_iters {
                let first = distances.first().map(|v| v.to_f64()).unwrap_or(0.0);
                let last = distances.last().map(|v| v.to_f64()).unwrap_or(0.0);
                notes.push(format!(
                    "no coincidence within {max_iters} iterations (last distance {last:.3e})"
                ));
                break 'run if last > 10.0 * first.max(1.0) {
                    Termination::Diverged
                } else {
                    Termination::MaxIters
                };
            }
            let Some(next) = pair.f.preimage_point(&tx, Some(&x), tol) else {
                notes.push(format!(
                    "T(x_n) = {tx} has no f-preimage at step {}; T(X) is not \
                     contained in f(X) along this orbit",
                    distances.len() - 1
                ));
                break 'run Termination::PreimageMissing { at_step: distances.len() - 1 };
            };
            x = next;
            if let Some(light) = demote_heavy(&x) {
                notes.push("iterate precision reduced to floating point".into());
                x = light;
            }
        }
    };
    if trace_truncated {
        notes.push(format!("trace truncated to the first {TRACE_CAP} iterates"));
    }
    let steps = distances.len();
    SolveResult {
        fixed_point,
        route: Route::Jungck,
        data: RouteData::Jungck {
            trace: IterationTrace { iterates, distances, termination, steps },
        },
        residuals,
        notes,
    }
}

/// Distances along a trace must not increase, and a converged trace must
/// end at or below tol.
pub fn check_monotone_decrease(trace: &IterationTrace, tol: &Real) -> CheckReport {
    let name = "monotone_decrease";
    let ds = &trace.distances;
    if ds.len() < 2 {
        return CheckReport::new(name, Verdict::Pass)
            .note("fewer than two recorded distances; nothing to compare");
    }
    let slack = Real::from_f64(1e-12);
    let mut min_drop: Option<(Real, usize)> = None;
    for i in 0..ds.len() - 1 {
        let drop = ds[i].clone() - ds[i + 1].clone();
        let smaller = match &min_drop {
            Some((best, _)) => drop < *best,
            None => true,
        };
        if smaller {
            min_drop = Some((drop, i));
        }
    }
    let (drop, i) = min_drop.expect("two or more distances");
    let mut report_notes: Vec<String> = Vec::new();
    let mut ok = drop >= -slack;
    if !ok {
        report_notes.push(format!("distance increases between steps {i} and {}", i + 1));
    }
    if matches!(trace.termination, Termination::Converged { .. }) {
        let last = ds.last().expect("nonempty");
        if *last > *tol {
            ok = false;
            report_notes.push(format!("converged trace ends above tol: {last}"));
        }
    }
    let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    CheckReport::new(name, verdict)
        .margin(drop)
        .witness(
            Witness::new()
                .value(format!("d_{i}"), ds[i].clone())
                .value(format!("d_{}", i + 1), ds[i + 1].clone()),
        )
        .notes(report_notes)
}

/// Solve through a property-(E.A) witness: take its limit z, pull it back
/// through f, and check that the preimage point is a coincidence point
/// whose value is z. Requires f(X) closed at z in practice; when the range
/// is not closed the pullback is still attempted and failure is reported.
pub fn ea_solve(pair: &MapPair, witness: &SequenceDescriptor, tol: &Real) -> SolveResult {
    let mut notes: Vec<String> = Vec::new();
    let z = witness.limit.clone();
    let closed = check_f_range_closed(pair);
    if !closed.passed() {
        notes.push(format!(
            "f(X) closedness: {}; attempting the pullback anyway",
            closed.verdict
        ));
    }
    let Some(u) = pair.f.preimage_point(&z, Some(&z), tol) else {
        notes.push(format!(
            "f(X) is not closed at {z}: the witness limit has no f-preimage"
        ));
        return SolveResult {
            fixed_point: None,
            route: Route::Ea,
            data: RouteData::Ea { witness: Box::new(witness.clone()), z, u: None },
            residuals: None,
            notes,
        };
    };
    let mut ok = true;
    match pair.t.eval_point(&u) {
        Ok(tu) => {
            let d = dist(&pair.space, &tu, &z);
            if d > *tol {
                ok = false;
                notes.push(format!(
                    "u = {u} is not a coincidence point: d(T u, {z}) = {d}"
                ));
            }
        }
        Err(e) => {
            ok = false;
            notes.push(format!("T failed to evaluate at u = {u}: {e}"));
        }
    }
    if ok {
        // audit: the maps must commute at the coincidence point
        match (pair.f.eval_point(&u), pair.t.eval_point(&u)) {
            (Ok(fu), Ok(tu)) => match (pair.t.eval_point(&fu), pair.f.eval_point(&tu)) {
                (Ok(tfu), Ok(ftu)) => {
                    let w = dist(&pair.space, &tfu, &ftu);
                    if w > *tol {
                        ok = false;
                        notes.push(format!(
                            "maps do not commute at the coincidence point {u} \
                             (d(Tf u, fT u) = {w})"
                        ));
                    }
                }
                _ => {
                    ok = false;
                    notes.push(format!("commutation audit failed to evaluate at {u}"));
                }
            },
            _ => {
                ok = false;
                notes.push(format!("evaluation failed at u = {u}"));
            }
        }
    }
    let verify = verify_common_fixed_point(pair, &z, tol);
    let residuals = residuals_at(pair, &z);
    if !verify.passed() {
        ok = false;
        notes.push(format!("witness limit {z} is not a common fixed point"));
    }
    SolveResult {
        fixed_point: ok.then(|| z.clone()),
        route: Route::Ea,
        data: RouteData::Ea { witness: Box::new(witness.clone()), z, u: Some(u) },
        residuals,
        notes,
    }
}

/// Picard iteration x_{n+1} = T x_n for a single map (f = identity).
pub fn direct_fixed_point(
    space: &MetricSpace,
    t_map: &PiecewiseMap,
    phi: Option<&AlteringFunction>,
    x0: &Point,
    tol: &Real,
    max_iters: usize,
) -> SolveResult {
    let mut notes: Vec<String> = Vec::new();
    let mut iterates: Vec<(Point, Point)> = Vec::new();
    let mut distances: Vec<Real> = Vec::new();
    let mut fixed_point: Option<Point> = None;
    let mut residuals: Option<(Real, Real)> = None;
    let mut trace_truncated = false;

    if let Some(phi) = phi {
        let pair = MapPair {
            space: space.clone(),
            f: identity_map(space),
            t: t_map.clone().with_coordinatewise(matches!(space, MetricSpace::SeqSpace { .. })),
            phi: Some(phi.clone()),
        };
        let wc = check_weakly_contractive(&pair, 50);
        notes.push(format!("sampled weak contractivity with f = id: {}", wc.verdict));
    }

    let mut x = x0.clone();
    let termination = 'run: {
        if !space.contains(&x) {
            notes.push(format!("starting point {x} lies outside the space"));
            break 'run Termination::Diverged;
        }
        loop {
            let tx = match t_map.eval_point(&x) {
                Ok(v) => v,
                Err(e) => {
                    notes.push(format!("evaluation failed at {x}: {e}"));
                    break 'run Termination::Diverged;
                }
            };
            let d = dist(space, &x, &tx);
            let recorded = iterates.len() < TRACE_CAP;
            if recorded {
                iterates.push((x.clone(), tx.clone()));
            } else {
                trace_truncated = true;
            }
            if d <= *tol {
                if !recorded {
                    iterates.push((x.clone(), tx.clone()));
                }
                if !distances.is_empty() {
                    distances.push(d.clone());
                } else {
                    notes.push("starting point is already fixed within tol".into());
                }
                let z = tx.clone();
                let rz = match t_map.eval_point(&z) {
                    Ok(tz) => dist(space, &tz, &z),
                    Err(_) => d,
                };
                residuals = Some((Real::zero(), rz.clone()));
                if rz <= tol.clone() + tol.clone() {
                    fixed_point = Some(z.clone());
                } else {
                    notes.push(format!("T moves the candidate {z} by {rz}"));
                }
                break 'run Termination::Converged { z };
            }
            if d.to_f64() > DIVERGENCE_BOUND {
                distances.push(d);
                notes.push(format!("distances grew beyond {DIVERGENCE_BOUND:.0e}"));
                break 'run Termination::Diverged;
            }
            distances.push(d);
            if distances.len() >= max_iters {
                let first = distances.first().map(|v| v.to_f64()).unwrap_or(0.0);
                let last = distances.last().map(|v| v.to_f64()).unwrap_or(0.0);
                notes.push(format!(
                    "no fixed point within {max_iters} iterations (last distance {last:.3e})"
                ));
                break 'run if last > 10.0 * first.max(1.0) {
                    Termination::Diverged
                } else {
                    Termination::MaxIters
                };
            }
            x = tx;
            if let Some(light) = demote_heavy(&x) {
                notes.push("iterate precision reduced to floating point".into());
                x = light;
            }
        }
    };
    if trace_truncated {
        notes.push(format!("trace truncated to the first {TRACE_CAP} iterates"));
    }
    let steps = distances.len();
    SolveResult {
        fixed_point,
        route: Route::Direct,
        data: RouteData::Direct {
            trace: IterationTrace { iterates, distances, termination, steps },
        },
        residuals,
        notes,
    }
}

/// Cluster all sampled common fixed points; pass iff they form at most one
/// cluster of diameter <= 10 tol.
pub fn check_uniqueness(pair: &MapPair, resolution: usize, tol: &Real) -> CheckReport {
    let name = "uniqueness";
    let (mut candidates, _) = sample_points(pair, resolution);
    candidates.extend(find_coincidence_points(pair, resolution, tol));
    let mut fixed: Vec<Point> = Vec::new();
    for p in candidates {
        let (Ok(fp), Ok(tp)) = (pair.f.eval_point(&p), pair.t.eval_point(&p)) else {
            continue;
        };
        if dist(&pair.space, &fp, &p) <= *tol && dist(&pair.space, &tp, &p) <= *tol {
            fixed.push(p);
        }
    }
    fixed.sort_by(super::verifiers::cmp_points);
    fixed.dedup();
    if fixed.is_empty() {
        return CheckReport::new(name, Verdict::Pass)
            .note("no common fixed points detected on the sample set");
    }
    let threshold = Real::from_int(10) * tol.clone();
    let mut reps: Vec<Point> = vec![fixed[0].clone()];
    let mut last = fixed[0].clone();
    for p in fixed.iter().skip(1) {
        if dist(&pair.space, p, &last) > threshold {
            reps.push(p.clone());
        }
        last = p.clone();
    }
    if reps.len() == 1 {
        let diameter = dist(&pair.space, fixed.first().expect("nonempty"), &last);
        CheckReport::new(name, Verdict::Pass)
            .margin(diameter)
            .witness(Witness::new().point(reps[0].clone()))
            .note(format!("{} candidate(s) in one cluster", fixed.len()))
    } else {
        let gap = dist(&pair.space, &reps[0], &reps[1]);
        CheckReport::new(name, Verdict::Fail)
            .margin(gap)
            .witness(Witness::new().point(reps[0].clone()).point(reps[1].clone()))
            .note(format!("{} distinct fixed-point clusters", reps.len()))
    }
}
