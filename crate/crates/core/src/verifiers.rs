//! Hypothesis checks for a bound selfmap pair (f, T): weak contractivity,
//! coincidence structure, weak compatibility, compatibility along sequences,
//! property (E.A), and range conditions.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::phi::check_phi_membership;
use crate::dsl::piecewise::{AlteringFunction, MapError, PiecewiseMap};
use crate::dsl::range::{range_of, RangeSet};
use crate::metric::{IntervalDomain, IntervalUnion, MetricSpace, Point};
use crate::real::Real;
use crate::report::{CheckReport, Verdict, Witness};

#[derive(Debug, Error)]
pub enum BindError {
    #[error("map '{name}': {source}")]
    Coverage { name: String, source: MapError },
    #[error("map '{name}' is not a selfmap: {witness} maps outside the space")]
    NotSelfmap { name: String, witness: String },
    #[error("map '{name}' failed to evaluate at {point}: {source}")]
    Eval { name: String, point: String, source: MapError },
}

/// A pair of selfmaps on one space, with an optional altering function.
#[derive(Debug, Clone)]
pub struct MapPair {
    pub space: MetricSpace,
    pub f: PiecewiseMap,
    pub t: PiecewiseMap,
    pub phi: Option<AlteringFunction>,
}

impl MapPair {
    /// Bind maps to a space: checks coverage and the selfmap property
    /// (exactly where ranges are exact, on the sample grid otherwise).
    pub fn bind(
        space: MetricSpace,
        f: PiecewiseMap,
        t: PiecewiseMap,
        phi: Option<AlteringFunction>,
    ) -> Result<Self, BindError> {
        let coordinatewise = matches!(space, MetricSpace::SeqSpace { .. });
        let f = f.with_coordinatewise(coordinatewise);
        let t = t.with_coordinatewise(coordinatewise);
        let scalar = space.scalar_domain();
        for (name, map) in [("f", &f), ("T", &t)] {
            map.check_covers(&scalar)
                .map_err(|source| BindError::Coverage { name: name.into(), source })?;
            let rs = range_of(map, &space);
            if !rs.approximate {
                if let Some(w) = rs.set.witness_not_covered_by(&scalar) {
                    return Err(BindError::NotSelfmap { name: name.into(), witness: w.to_string() });
                }
            } else {
                for p in space.sample_grid(64).points {
                    let img = map.eval_point(&p).map_err(|source| BindError::Eval {
                        name: name.into(),
                        point: p.to_string(),
                        source,
                    })?;
                    if !space.contains(&img) {
                        return Err(BindError::NotSelfmap {
                            name: name.into(),
                            witness: p.to_string(),
                        });
                    }
                }
            }
        }
        Ok(MapPair { space, f, t, phi })
    }

    /// The same pair with the roles of f and T exchanged.
    pub fn swapped(&self) -> MapPair {
        MapPair {
            space: self.space.clone(),
            f: self.t.clone(),
            t: self.f.clone(),
            phi: self.phi.clone(),
        }
    }
}

pub(crate) fn cmp_points(a: &Point, b: &Point) -> Ordering {
    for (x, y) in a.coords().iter().zip(b.coords()) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.coords().len().cmp(&b.coords().len())
}

fn dist(space: &MetricSpace, a: &Point, b: &Point) -> Real {
    space.distance(a, b).expect("points drawn from the same space")
}

/// ca*a + cb*b, coordinatewise, preserving the point shape.
fn point_comb(a: &Point, b: &Point, ca: &Real, cb: &Real) -> Point {
    let coords: Vec<Real> = a
        .coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| ca.clone() * x.clone() + cb.clone() * y.clone())
        .collect();
    match a {
        Point::Scalar(_) => Point::Scalar(coords.into_iter().next().expect("scalar has a coord")),
        Point::Vector(_) => Point::Vector(coords),
    }
}

/// Deterministic sample set for pair checks: the space grid augmented with
/// map piece boundaries (and +/- eps probes) so that exact extremal pairs
/// land on the grid. Returns (points, truncated-domain flag).
pub fn sample_points(pair: &MapPair, resolution: usize) -> (Vec<Point>, bool) {
    let grid = pair.space.sample_grid(resolution);
    let mut pts = grid.points;
    let eps = Real::open_eps();
    let mut landmarks: Vec<Real> = Vec::new();
    landmarks.extend(pair.f.boundaries());
    landmarks.extend(pair.t.boundaries());
    for c in pair.space.scalar_domain().components() {
        landmarks.push(c.lo.clone());
        if let Some(hi) = &c.hi {
            landmarks.push(hi.clone());
        }
    }
    match &pair.space {
        MetricSpace::Interval(_) => {
            for b in &landmarks {
                for cand in [b.clone() - eps.clone(), b.clone(), b.clone() + eps.clone()] {
                    let p = Point::Scalar(cand);
                    if pair.space.contains(&p) {
                        pts.push(p);
                    }
                }
            }
        }
        MetricSpace::SeqSpace { dim, coord } => {
            // diagonal landmark vectors keep exact boundary values reachable
            for b in &landmarks {
                if coord.contains(b) {
                    pts.push(Point::Vector(vec![b.clone(); *dim]));
                }
            }
        }
    }
    pts.sort_by(cmp_points);
    pts.dedup();
    (pts, grid.truncated)
}

fn neg_tolerance() -> Real {
    -Real::open_eps()
}

/// d(Tx,Ty) <= d(fx,fy) - phi(d(fx,fy)) over all distinct grid pairs.
/// Margin is the minimum slack d(fx,fy) - phi(d(fx,fy)) - d(Tx,Ty); pass
/// iff it stays >= -1e-9.
pub fn check_weakly_contractive(pair: &MapPair, resolution: usize) -> CheckReport {
    let name = "weakly_contractive";
    let Some(phi) = &pair.phi else {
        return CheckReport::new(name, Verdict::PreconditionFail)
            .note("no altering function phi supplied");
    };
    let membership = check_phi_membership(phi, resolution);
    if !membership.passed() {
        return CheckReport::new(name, Verdict::PreconditionFail)
            .note("phi is not an admissible altering function")
            .notes(membership.notes.clone());
    }
    contraction_scan(pair, resolution, name, |dff| {
        phi.eval(dff).map(|p| dff.clone() - p)
    })
}

/// Boyd-Wong variant: d(Tx,Ty) <= psi(d(fx,fy)) with psi(t) < t for t > 0.
pub fn check_boyd_wong(pair: &MapPair, psi: &AlteringFunction, resolution: usize) -> CheckReport {
    let name = "boyd_wong";
    let membership = check_phi_membership(psi, resolution);
    if !membership.passed() {
        return CheckReport::new(name, Verdict::PreconditionFail)
            .note("psi is not an admissible altering function")
            .notes(membership.notes.clone());
    }
    // sampled psi(t) < t for t > 0
    let mut ts: Vec<Real> = (1..=resolution.max(2))
        .map(|k| Real::from_ratio(10 * k as i64, resolution.max(2) as i64))
        .collect();
    for b in psi.map.boundaries() {
        if b > Real::zero() {
            ts.push(b);
        }
    }
    for t in &ts {
        match psi.eval(t) {
            Ok(v) if v < *t => {}
            Ok(v) => {
                return CheckReport::new(name, Verdict::PreconditionFail)
                    .witness(Witness::new().point(t.clone().into()).value("psi(t)", v))
                    .note("psi(t) < t violated for some t > 0");
            }
            Err(e) => {
                return CheckReport::new(name, Verdict::Unknown)
                    .note(format!("psi({t}) failed: {e}"))
            }
        }
    }
    contraction_scan(pair, resolution, name, |dff| psi.eval(dff))
}

/// Shared pair scan: `bound` maps d(fx,fy) to the allowed ceiling for
/// d(Tx,Ty); slack = ceiling - d(Tx,Ty).
fn contraction_scan(
    pair: &MapPair,
    resolution: usize,
    name: &str,
    bound: impl Fn(&Real) -> Result<Real, MapError>,
) -> CheckReport {
    let (points, truncated) = sample_points(pair, resolution);
    if points.len() < 2 {
        return CheckReport::new(name, Verdict::Unknown).note("fewer than two sample points");
    }
    let mut fx = Vec::with_capacity(points.len());
    let mut tx = Vec::with_capacity(points.len());
    for p in &points {
        match (pair.f.eval_point(p), pair.t.eval_point(p)) {
            (Ok(a), Ok(b)) => {
                fx.push(a);
                tx.push(b);
            }
            (Err(e), _) | (_, Err(e)) => {
                return CheckReport::new(name, Verdict::Unknown)
                    .note(format!("map evaluation failed at {p}: {e}"));
            }
        }
    }
    // grid differences repeat heavily, so cache the ceiling per exact value
    let mut ceiling_cache: HashMap<BigRational, Real> = HashMap::new();
    let mut eval_ceiling = |dff: &Real| -> Result<Real, MapError> {
        if let Real::Exact(q) = dff {
            if let Some(c) = ceiling_cache.get(q) {
                return Ok(c.clone());
            }
            let c = bound(dff)?;
            ceiling_cache.insert(q.clone(), c.clone());
            return Ok(c);
        }
        bound(dff)
    };
    let mut min_slack: Option<(Real, usize, usize)> = None;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dff = dist(&pair.space, &fx[i], &fx[j]);
            let dtt = dist(&pair.space, &tx[i], &tx[j]);
            let ceiling = match eval_ceiling(&dff) {
                Ok(c) => c,
                Err(e) => {
                    return CheckReport::new(name, Verdict::Unknown)
                        .note(format!("altering function failed at {dff}: {e}"));
                }
            };
            let slack = ceiling - dtt;
            let better = match &min_slack {
                Some((best, _, _)) => slack < *best,
                None => true,
            };
            if better {
                min_slack = Some((slack, i, j));
            }
        }
    }
    let (slack, i, j) = min_slack.expect("at least one pair");
    let witness = Witness::new()
        .point(points[i].clone())
        .point(points[j].clone())
        .value("d(fx,fy)", dist(&pair.space, &fx[i], &fx[j]))
        .value("d(Tx,Ty)", dist(&pair.space, &tx[i], &tx[j]));
    let verdict = if slack >= neg_tolerance() { Verdict::Pass } else { Verdict::Fail };
    let mut report = CheckReport::new(name, verdict)
        .margin(slack)
        .witness(witness)
        .note(format!("{} sample pairs", points.len() * (points.len() - 1) / 2));
    if truncated {
        report = report.note("domain truncated for sampling");
    }
    report
}

/// Scalar coincidences of two piecewise maps over an interval union: grid
/// hits, exact affine solutions, and bisection-refined sign changes.
fn scalar_coincidences(
    domain: &IntervalUnion,
    f: &PiecewiseMap,
    t: &PiecewiseMap,
    resolution: usize,
    tol: &Real,
) -> Vec<Real> {
    let space = MetricSpace::Interval(domain.clone());
    let pair = MapPair {
        space: space.clone(),
        f: f.clone().with_coordinatewise(false),
        t: t.clone().with_coordinatewise(false),
        phi: None,
    };
    let mut out: Vec<Real> = Vec::new();
    let (points, _) = sample_points(&pair, resolution);
    for p in &points {
        let x = p.as_scalar().expect("interval grid is scalar");
        if let (Ok(a), Ok(b)) = (f.eval_scalar(x), t.eval_scalar(x)) {
            if (a - b).abs() <= *tol {
                out.push(x.clone());
            }
        }
    }
    // exact and refined solutions per overlapping piece pair
    for pf in &f.pieces {
        for pt in &t.pieces {
            let Some(overlap) = pf.domain.intersect(&pt.domain) else { continue };
            for comp in domain.components() {
                let Some(region) = overlap.intersect(comp) else { continue };
                match (pf.body.as_affine(), pt.body.as_affine()) {
                    (Some((a1, b1)), Some((a2, b2))) => {
                        if a1 == a2 {
                            if b1 == b2 {
                                // the whole region coincides; record its reach
                                let (lo, hi, _) = region.sampling_bounds();
                                let mid =
                                    (lo.clone() + hi.clone()) / Real::from_int(2);
                                out.extend([lo, mid, hi]);
                            }
                        } else {
                            let x = (b2 - b1)
                                .checked_div(&(a1 - a2))
                                .expect("slopes differ");
                            if region.contains(&x) {
                                out.push(x);
                            }
                        }
                    }
                    _ => refine_sign_changes(f, t, &region, resolution, tol, &mut out),
                }
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("coincidences are ordered"));
    out.dedup();
    out
}

/// Scan g = f - T over one region and bisect each sign-change bracket.
fn refine_sign_changes(
    f: &PiecewiseMap,
    t: &PiecewiseMap,
    region: &IntervalDomain,
    resolution: usize,
    tol: &Real,
    out: &mut Vec<Real>,
) {
    let (lo, hi, _) = region.sampling_bounds();
    let (lo_f, hi_f) = (lo.to_f64(), hi.to_f64());
    if hi_f <= lo_f {
        return;
    }
    let g = |x: f64| -> Option<f64> {
        let xr = Real::from_f64(x);
        match (f.eval_scalar(&xr), t.eval_scalar(&xr)) {
            (Ok(a), Ok(b)) => Some((a - b).to_f64()),
            _ => None,
        }
    };
    let n = resolution.max(16);
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=n {
        let x = lo_f + (hi_f - lo_f) * k as f64 / n as f64;
        let Some(gx) = g(x) else {
            prev = None;
            continue;
        };
        if let Some((px, pg)) = prev {
            if pg == 0.0 {
                out.push(Real::from_f64(px));
            } else if pg.signum() != gx.signum() && gx != 0.0 {
                let (mut a, mut b) = (px, x);
                let mut ga = pg;
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    let Some(gm) = g(m) else { break };
                    if gm == 0.0 || (b - a) < 1e-12 {
                        a = m;
                        break;
                    }
                    if ga.signum() == gm.signum() {
                        a = m;
                        ga = gm;
                    } else {
                        b = m;
                    }
                }
                let root = Real::from_f64(0.5 * (a + b));
                if let (Ok(fa), Ok(fb)) = (f.eval_scalar(&root), t.eval_scalar(&root)) {
                    if (fa - fb).abs() <= *tol {
                        out.push(root);
                    }
                }
            }
        }
        prev = Some((x, gx));
    }
}

const PRODUCT_CAP: usize = 256;

/// All detected coincidence points (f x = T x within tol). On sequence
/// spaces the coordinatewise structure makes the coincidence set a product
/// of scalar sets; it is enumerated up to a cap, diagonals otherwise.
pub fn find_coincidence_points(pair: &MapPair, resolution: usize, tol: &Real) -> Vec<Point> {
    match &pair.space {
        MetricSpace::Interval(u) => {
            scalar_coincidences(u, &pair.f, &pair.t, resolution, tol)
                .into_iter()
                .map(Point::Scalar)
                .collect()
        }
        MetricSpace::SeqSpace { dim, coord } => {
            let u = IntervalUnion::single(coord.clone());
            let scalars = scalar_coincidences(&u, &pair.f, &pair.t, resolution, tol);
            if scalars.is_empty() {
                return Vec::new();
            }
            let product_size = scalars.len().checked_pow(*dim as u32);
            let mut out = Vec::new();
            match product_size {
                Some(sz) if sz <= PRODUCT_CAP => {
                    let mut idx = vec![0usize; *dim];
                    loop {
                        out.push(Point::Vector(
                            idx.iter().map(|&i| scalars[i].clone()).collect(),
                        ));
                        let mut k = *dim;
                        loop {
                            if k == 0 {
                                return out;
                            }
                            k -= 1;
                            idx[k] += 1;
                            if idx[k] < scalars.len() {
                                break;
                            }
                            idx[k] = 0;
                        }
                    }
                }
                _ => {
                    for s in &scalars {
                        out.push(Point::Vector(vec![s.clone(); *dim]));
                    }
                    out
                }
            }
        }
    }
}

/// Weak compatibility: T(f c) = f(T c) at every coincidence point c.
/// Vacuous pass when there are none.
pub fn check_weak_compatibility(pair: &MapPair, resolution: usize, tol: &Real) -> CheckReport {
    let name = "weak_compatibility";
    let cs = find_coincidence_points(pair, resolution, tol);
    if cs.is_empty() {
        return CheckReport::new(name, Verdict::Pass)
            .note("vacuously weakly compatible: no coincidence points found");
    }
    let mut worst: Option<(Real, Point)> = None;
    for c in &cs {
        let (fc, tc) = match (pair.f.eval_point(c), pair.t.eval_point(c)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                return CheckReport::new(name, Verdict::Unknown)
                    .note(format!("evaluation failed at {c}: {e}"));
            }
        };
        for (label, img) in [("f", &fc), ("T", &tc)] {
            if !pair.space.contains(img) {
                return CheckReport::new(name, Verdict::Fail)
                    .witness(Witness::new().point(c.clone()))
                    .note(format!("{label}({c}) = {img} leaves the space"));
            }
        }
        let (tfc, ftc) = match (pair.t.eval_point(&fc), pair.f.eval_point(&tc)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                return CheckReport::new(name, Verdict::Unknown)
                    .note(format!("composition failed at {c}: {e}"));
            }
        };
        let w = dist(&pair.space, &tfc, &ftc);
        if w > *tol {
            return CheckReport::new(name, Verdict::Fail)
                .margin(w.clone())
                .witness(
                    Witness::new()
                        .point(c.clone())
                        .value("d(Tf c, fT c)", w),
                )
                .note("Tf and fT disagree at a coincidence point");
        }
        let bigger = match &worst {
            Some((b, _)) => w > *b,
            None => true,
        };
        if bigger {
            worst = Some((w, c.clone()));
        }
    }
    let (w, c) = worst.expect("at least one coincidence point");
    CheckReport::new(name, Verdict::Pass)
        .margin(w.clone())
        .witness(Witness::new().point(c).value("max d(Tf c, fT c)", w))
        .note(format!("{} coincidence points checked", cs.len()))
}

// ---- sequences ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessKind {
    /// x_n = base + direction / n for n >= n0.
    ExplicitFormula { base: Point, direction: Point, n0: u64 },
    Constant { point: Point },
    Recorded { points: Vec<Point> },
}

/// A candidate sequence {x_n} with its claimed common limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDescriptor {
    #[serde(flatten)]
    pub kind: WitnessKind,
    pub limit: Point,
}

impl SequenceDescriptor {
    pub fn explicit(base: Point, direction: Point, n0: u64) -> Self {
        SequenceDescriptor {
            limit: base.clone(),
            kind: WitnessKind::ExplicitFormula { base, direction, n0 },
        }
    }

    pub fn constant(point: Point, limit: Point) -> Self {
        SequenceDescriptor { kind: WitnessKind::Constant { point }, limit }
    }

    pub fn recorded(points: Vec<Point>, limit: Point) -> Self {
        SequenceDescriptor { kind: WitnessKind::Recorded { points }, limit }
    }

    /// First index the descriptor is defined at.
    pub fn start(&self) -> u64 {
        match &self.kind {
            WitnessKind::ExplicitFormula { n0, .. } => *n0,
            _ => 1,
        }
    }

    pub fn term(&self, n: u64) -> Point {
        match &self.kind {
            WitnessKind::ExplicitFormula { base, direction, n0 } => {
                let n = n.max(*n0).max(1);
                let inv = Real::from_ratio(1, n as i64);
                point_comb(base, direction, &Real::one(), &inv)
            }
            WitnessKind::Constant { point } => point.clone(),
            WitnessKind::Recorded { points } => {
                let idx = (n.saturating_sub(1) as usize).min(points.len().saturating_sub(1));
                points[idx].clone()
            }
        }
    }
}

impl fmt::Display for SequenceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WitnessKind::ExplicitFormula { base, direction, n0 } => {
                let dir = match direction.as_scalar() {
                    Some(d) if *d == Real::one() => "1/n".to_string(),
                    Some(d) if *d == -Real::one() => "-1/n".to_string(),
                    _ => format!("({direction})/n"),
                };
                write!(f, "x_n = {base} + {dir} (n >= {n0}) -> {}", self.limit)
            }
            WitnessKind::Constant { point } => {
                write!(f, "x_n = {point} (constant) -> {}", self.limit)
            }
            WitnessKind::Recorded { points } => {
                write!(f, "recorded sequence ({} terms) -> {}", points.len(), self.limit)
            }
        }
    }
}

/// First n such that eleven consecutive terms from n stay in the space.
fn auto_start(space: &MetricSpace, base: &Point, direction: &Point) -> Option<u64> {
    let probe = SequenceDescriptor::explicit(base.clone(), direction.clone(), 1);
    (1..=1024u64).find(|&n| (n..n + 11).all(|k| space.contains(&probe.term(k))))
}

/// Validate an explicit 1/n-style witness: terms in the space, the gap
/// d(f x_n, T x_n) shrinking monotonically along n, n/2, n/4 with a
/// Richardson-extrapolated limit within seq_tol of zero, and both image
/// sequences converging to the declared limit.
fn validate_explicit(
    pair: &MapPair,
    wit: &SequenceDescriptor,
    seq_tol: f64,
    horizon: u64,
) -> bool {
    let n0 = wit.start();
    let h = horizon.max(n0 * 8).max(8);
    if !pair.space.contains(&wit.limit) {
        return false;
    }
    let mut gaps: Vec<Real> = Vec::new();
    let mut images: Vec<(Point, Point)> = Vec::new();
    for n in [h / 4, h / 2, h] {
        let n = n.max(n0);
        let x = wit.term(n);
        if !pair.space.contains(&x) {
            return false;
        }
        let (fx, tx) = match (pair.f.eval_point(&x), pair.t.eval_point(&x)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return false,
        };
        gaps.push(dist(&pair.space, &fx, &tx));
        images.push((fx, tx));
    }
    let slack = Real::from_f64(1e-12);
    if gaps[1] > gaps[0].clone() + slack.clone() || gaps[2] > gaps[1].clone() + slack {
        return false;
    }
    // Richardson: for d_n = c/n tails, 2 d_{2m} - d_m cancels the 1/n term
    let extrapolated = (Real::from_int(2) * gaps[2].clone() - gaps[1].clone()).abs();
    if extrapolated.to_f64() > seq_tol {
        return false;
    }
    let two = Real::from_int(2);
    let minus_one = -Real::one();
    for side in 0..2 {
        let (at_h, at_half) = (&images[2], &images[1]);
        let (a, b) = if side == 0 { (&at_h.0, &at_half.0) } else { (&at_h.1, &at_half.1) };
        let l = point_comb(a, b, &two, &minus_one);
        if dist(&pair.space, &l, &wit.limit).to_f64() > seq_tol {
            return false;
        }
    }
    true
}

/// Best-effort search for a property-(E.A) witness. Strategies, in order:
/// (a) a constant sequence at a coincidence point; (b) a grid point where
/// f and T already agree within tol; (c) boundary-approach sequences
/// base + direction/n. Returns the witness (if any) together with a report
/// carrying the measured infimum of d(fx, Tx).
pub fn search_ea_witness(
    pair: &MapPair,
    resolution: usize,
    tol: &Real,
    seq_tol: f64,
    horizon: u64,
) -> (Option<SequenceDescriptor>, CheckReport) {
    let name = "ea_witness";
    let (points, _) = sample_points(pair, resolution);
    let mut inf: Option<(Real, Point)> = None;
    for p in &points {
        if let (Ok(a), Ok(b)) = (pair.f.eval_point(p), pair.t.eval_point(p)) {
            let d = dist(&pair.space, &a, &b);
            let better = match &inf {
                Some((best, _)) => d < *best,
                None => true,
            };
            if better {
                inf = Some((d, p.clone()));
            }
        }
    }

    // (a) constant sequences at coincidence points
    for c in find_coincidence_points(pair, resolution, tol) {
        let (fc, tc) = match (pair.f.eval_point(&c), pair.t.eval_point(&c)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        if dist(&pair.space, &fc, &tc) <= *tol && pair.space.contains(&fc) {
            let wit = SequenceDescriptor::constant(c.clone(), fc.clone());
            let report = CheckReport::new(name, Verdict::Pass)
                .margin(Real::zero())
                .witness(Witness::new().point(c).point(fc))
                .note(format!("witness: {wit}"))
                .note("constant sequence at a coincidence point");
            return (Some(wit), report);
        }
    }

    // (b) grid points where the maps already agree within tol
    if let Some((d, p)) = &inf {
        if *d <= *tol {
            if let Ok(fp) = pair.f.eval_point(p) {
                if pair.space.contains(&fp) {
                    let wit = SequenceDescriptor::constant(p.clone(), fp.clone());
                    let report = CheckReport::new(name, Verdict::Pass)
                        .margin(d.clone())
                        .witness(Witness::new().point(p.clone()).point(fp))
                        .note(format!("witness: {wit}"));
                    return (Some(wit), report);
                }
            }
        }
    }

    // (c) boundary-approach sequences base + direction/n
    let mut boundaries: Vec<Real> = Vec::new();
    boundaries.extend(pair.f.boundaries());
    boundaries.extend(pair.t.boundaries());
    for c in pair.space.scalar_domain().components() {
        boundaries.push(c.lo.clone());
        if let Some(hi) = &c.hi {
            boundaries.push(hi.clone());
        }
    }
    boundaries.sort_by(|a, b| a.partial_cmp(b).expect("boundaries are ordered"));
    boundaries.dedup();
    let dim = pair.space.dim();
    let as_point = |v: &Real| -> Point {
        if dim == 1 {
            Point::Scalar(v.clone())
        } else {
            Point::Vector(vec![v.clone(); dim])
        }
    };
    for b in &boundaries {
        for sign in [1i64, -1] {
            let base = as_point(b);
            let direction = as_point(&Real::from_int(sign));
            let Some(n0) = auto_start(&pair.space, &base, &direction) else {
                continue;
            };
            let wit = SequenceDescriptor::explicit(base, direction, n0);
            if validate_explicit(pair, &wit, seq_tol, horizon) {
                let report = CheckReport::new(name, Verdict::Pass)
                    .margin(inf.as_ref().map(|(d, _)| d.clone()).unwrap_or_else(Real::zero))
                    .witness(Witness::new().point(wit.limit.clone()))
                    .note(format!("witness: {wit}"));
                return (Some(wit), report);
            }
        }
    }

    let mut report = CheckReport::new(name, Verdict::Fail);
    if let Some((d, p)) = inf {
        report = report
            .margin(d.clone())
            .witness(Witness::new().point(p).value("d(fx,Tx)", d.clone()))
            .note(format!("no witness found (inf d(fx,Tx) = {} over the grid)", d));
    } else {
        report = report.note("no witness found (maps could not be sampled)");
    }
    (None, report)
}

/// Index plan for sequence checks: a dense head, a strided middle, and the
/// full tail window (last 10% of the horizon).
fn witness_indices(n0: u64, horizon: u64) -> (Vec<u64>, u64) {
    let end = n0 + horizon;
    let tail_start = end - (horizon / 10).max(1);
    let mut ns: Vec<u64> = Vec::new();
    let mut n = n0;
    while n < (n0 + 100).min(tail_start) {
        ns.push(n);
        n += 1;
    }
    let stride = (horizon / 1000).max(1);
    while n < tail_start {
        ns.push(n);
        n += stride;
    }
    n = tail_start;
    while n <= end {
        ns.push(n);
        n += 1;
    }
    ns.dedup();
    (ns, tail_start)
}

/// Compatibility along one witness sequence: c_n = d(f(T x_n), T(f x_n))
/// must tend to 0. The verdict uses the raw maximum over the tail window.
pub fn check_compatibility(
    pair: &MapPair,
    witness: &SequenceDescriptor,
    seq_tol: f64,
    horizon: u64,
) -> CheckReport {
    let name = "compatibility";
    let (ns, tail_start) = match &witness.kind {
        WitnessKind::Constant { .. } => (vec![1u64], 1u64),
        WitnessKind::Recorded { points } if points.is_empty() => {
            return CheckReport::new(name, Verdict::Unknown).note("empty recorded sequence");
        }
        WitnessKind::Recorded { points } => {
            let len = points.len() as u64;
            let tail = len - (len / 10).max(1) + 1;
            ((1..=len).collect(), tail)
        }
        WitnessKind::ExplicitFormula { .. } => witness_indices(witness.start(), horizon),
    };
    let mut tail_max: Option<(Real, u64, Point)> = None;
    let mut first_last: Vec<(u64, Real)> = Vec::new();
    for &n in &ns {
        let x = witness.term(n);
        if !pair.space.contains(&x) {
            return CheckReport::new(name, Verdict::Unknown)
                .note(format!("x_{n} = {x} leaves the space"));
        }
        let (fx, tx) = match (pair.f.eval_point(&x), pair.t.eval_point(&x)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                return CheckReport::new(name, Verdict::Unknown)
                    .note(format!("evaluation failed at x_{n}: {e}"));
            }
        };
        for (label, img) in [("f x_n", &fx), ("T x_n", &tx)] {
            if !pair.space.contains(img) {
                return CheckReport::new(name, Verdict::Unknown)
                    .note(format!("{label} = {img} leaves the space at n = {n}"));
            }
        }
        let (ftx, tfx) = match (pair.f.eval_point(&tx), pair.t.eval_point(&fx)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                return CheckReport::new(name, Verdict::Unknown)
                    .note(format!("composition failed at x_{n}: {e}"));
            }
        };
        let c = dist(&pair.space, &ftx, &tfx);
        if first_last.is_empty() || n == *ns.last().expect("nonempty") {
            first_last.push((n, c.clone()));
        }
        if n >= tail_start {
            let bigger = match &tail_max {
                Some((best, _, _)) => c > *best,
                None => true,
            };
            if bigger {
                tail_max = Some((c, n, x));
            }
        }
    }
    let Some((tm, n_at, x_at)) = tail_max else {
        return CheckReport::new(name, Verdict::Unknown).note("no tail samples evaluated");
    };
    let pass = tm.to_f64() <= seq_tol;
    let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    let mut report = CheckReport::new(name, verdict)
        .margin(tm.clone())
        .witness(
            Witness::new()
                .point(x_at)
                .value(format!("c_{n_at}"), tm.clone()),
        )
        .note(format!("witness: {witness}"));
    report = if pass {
        report.note(format!(
            "compatible along the tested witness (tail max {:.3e} <= {seq_tol:.0e})",
            tm.to_f64()
        ))
    } else {
        report.note(format!(
            "noncompatible: d(fT x_n, Tf x_n) tail max {:.6} (limit estimate {:.6})",
            tm.to_f64(),
            tm.to_f64()
        ))
    };
    report
}

/// T(X) subset of f(X): exact via range sets when both are exact, sampled
/// preimage probing otherwise.
pub fn check_range_inclusion(pair: &MapPair, resolution: usize, tol: &Real) -> CheckReport {
    let name = "range_inclusion";
    let rf = range_of(&pair.f, &pair.space);
    let rt = range_of(&pair.t, &pair.space);
    if !rf.approximate && !rt.approximate {
        let report_sets = |r: CheckReport| -> CheckReport {
            r.note(format!("T(X) = {}", rt.set)).note(format!("f(X) = {}", rf.set))
        };
        if rf.set.covers(&rt.set) {
            return report_sets(CheckReport::new(name, Verdict::Pass));
        }
        let witness = rt
            .set
            .witness_not_covered_by(&rf.set)
            .expect("non-covered range yields a witness");
        return report_sets(
            CheckReport::new(name, Verdict::Fail)
                .witness(Witness::new().point(witness.clone().into()).value("y", witness))
                .note("a value of T has no f-preimage"),
        );
    }
    // sampled fallback
    let (points, _) = sample_points(pair, resolution);
    for p in &points {
        let Ok(y) = pair.t.eval_point(p) else { continue };
        if pair.f.preimage_point(&y, None, tol).is_none() {
            return CheckReport::new(name, Verdict::Fail)
                .witness(Witness::new().point(p.clone()).point(y.clone()))
                .note(format!("sampled: T({p}) = {y} has no f-preimage within tol"));
        }
    }
    CheckReport::new(name, Verdict::Pass).note("sampled: every grid image of T has an f-preimage")
}

/// Closedness of f(X) within the space, decided exactly on rational ranges.
pub fn check_f_range_closed(pair: &MapPair) -> CheckReport {
    let name = "f_range_closed";
    let rf = range_of(&pair.f, &pair.space);
    let ambient = pair.space.scalar_domain();
    let coordinatewise_note = matches!(pair.space, MetricSpace::SeqSpace { .. })
        .then(|| "coordinatewise: product of closed coordinate sets is closed".to_string());
    let mut report = match rf.is_closed_within(&ambient) {
        Some(true) => CheckReport::new(name, Verdict::Pass)
            .note(format!("f(X) = {} is closed in the space", rf.set))
            .note("completeness inherited from ambient space"),
        Some(false) => {
            let gap = rf.closure_gap(&ambient).expect("non-closed range has a gap");
            CheckReport::new(name, Verdict::Fail)
                .witness(Witness::new().point(gap.clone().into()).value("limit point", gap))
                .note(format!("f(X) = {} is not closed in the space", rf.set))
        }
        None => CheckReport::new(name, Verdict::Unknown)
            .note("range is only sampled (non-affine pieces); closedness undecided"),
    };
    if let Some(n) = coordinatewise_note {
        report = report.note(n);
    }
    report
}

/// Exact range of f, exposed for reporting.
pub fn f_range(pair: &MapPair) -> RangeSet {
    range_of(&pair.f, &pair.space)
}

/// Exact range of T, exposed for reporting.
pub fn t_range(pair: &MapPair) -> RangeSet {
    range_of(&pair.t, &pair.space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse::parse_mapfile;

    fn r(p: i64, q: i64) -> Real {
        Real::from_ratio(p, q)
    }

    fn pair_from(text: &str) -> MapPair {
        let mf = parse_mapfile(text).unwrap();
        let f = mf.get("f").expect("map f").clone();
        let t = mf.get("T").expect("map T").clone();
        let phi = mf.phi.clone().map(|m| AlteringFunction::new(m).unwrap());
        MapPair::bind(mf.space, f, t, phi).unwrap()
    }

    const THREE_VALUE_PAIR: &str = "\
space X = interval[0, inf)
map f = piecewise x { [0, 2/3) -> 1/3; [2/3, 2/3] -> 2/3; (2/3, inf) -> 5/6; }
map T = piecewise x { [0, 2/3) -> 5/6; [2/3, inf) -> 2/3; }
phi = piecewise t { [0, 1/3] -> (3/2)*t^2; (1/3, inf) -> 2/(9*(1+t)); }
";

    const HALF_STEP_PAIR: &str = "\
space X = interval[1/2, 1]
map f = piecewise x { [1/2, 2/3) -> 1; [2/3, 1] -> x; }
map T = piecewise x { [1/2, 2/3) -> 1/2; [2/3, 1] -> 1 - (1/2)*x; }
phi = piecewise t { [0, 2/3] -> (3/2)*t^2; (2/3, inf) -> 10/(9*(1+t)); }
";

    const APART_PAIR: &str = "\
space X = interval[1/2, 1]
map f = piecewise x { [1/2, 2/3] -> 1; (2/3, 1] -> 2/3; }
map T = piecewise x { [1/2, 2/3] -> 2/3; (2/3, 1] -> 1/2; }
phi = piecewise t { [0, inf) -> t/2; }
";

    const OPEN_RANGE_PAIR: &str = "\
space X = interval[1/2, 1]
map f = piecewise x { [1/2, 2/3] -> 1; (2/3, 1] -> x; }
map T = piecewise x { [1/2, 2/3] -> 1/2; (2/3, 1] -> 1 - (1/2)*x; }
phi = piecewise t { [0, inf) -> (3/2)*t^2; }
";

    #[test]
    fn weak_contraction_margin_is_exactly_zero() {
        let pair = pair_from(THREE_VALUE_PAIR);
        let report = check_weakly_contractive(&pair, 200);
        assert_eq!(report.verdict, Verdict::Pass);
        let margin = report.margin.clone().unwrap();
        assert!(margin.is_exact());
        assert!(margin.is_zero());
    }

    #[test]
    fn missing_phi_is_a_precondition_failure() {
        let mut pair = pair_from(THREE_VALUE_PAIR);
        pair.phi = None;
        let report = check_weakly_contractive(&pair, 50);
        assert_eq!(report.verdict, Verdict::PreconditionFail);
    }

    #[test]
    fn boyd_wong_rejects_psi_equal_to_t() {
        let pair = pair_from(THREE_VALUE_PAIR);
        let psi = AlteringFunction::new(
            crate::dsl::parse::parse_map("piecewise t { [0, inf) -> t; }").unwrap(),
        )
        .unwrap();
        let report = check_boyd_wong(&pair, &psi, 50);
        assert_eq!(report.verdict, Verdict::PreconditionFail);
    }

    #[test]
    fn coincidence_point_is_found_exactly() {
        let pair = pair_from(THREE_VALUE_PAIR);
        let cs = find_coincidence_points(&pair, 200, &Real::from_ratio(1, 1_000_000_000));
        assert_eq!(cs, vec![Point::Scalar(r(2, 3))]);
    }

    #[test]
    fn weak_compatibility_holds_at_the_coincidence() {
        let pair = pair_from(THREE_VALUE_PAIR);
        let report = check_weak_compatibility(&pair, 200, &Real::from_ratio(1, 1_000_000_000));
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(report.margin.clone().unwrap().is_zero());
    }

    #[test]
    fn weak_compatibility_is_vacuous_without_coincidences() {
        let pair = pair_from(APART_PAIR);
        let report = check_weak_compatibility(&pair, 200, &Real::from_ratio(1, 1_000_000_000));
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(report.notes.iter().any(|n| n.contains("vacuous")));
    }

    #[test]
    fn ea_search_returns_constant_witness_at_coincidence() {
        let pair = pair_from(THREE_VALUE_PAIR);
        let tol = Real::from_ratio(1, 1_000_000_000);
        let (wit, report) = search_ea_witness(&pair, 200, &tol, 1e-6, 100_000);
        assert_eq!(report.verdict, Verdict::Pass);
        let wit = wit.unwrap();
        assert_eq!(wit.limit, Point::Scalar(r(2, 3)));
        match wit.kind {
            WitnessKind::Constant { point } => assert_eq!(point, Point::Scalar(r(2, 3))),
            other => panic!("expected a constant witness, got {other:?}"),
        }
    }

    #[test]
    fn ea_search_finds_boundary_sequence_when_needed() {
        let pair = pair_from(OPEN_RANGE_PAIR);
        let tol = Real::from_ratio(1, 1_000_000_000);
        let (wit, _) = search_ea_witness(&pair, 200, &tol, 1e-6, 100_000);
        let wit = wit.unwrap();
        assert_eq!(wit.limit, Point::Scalar(r(2, 3)));
        match wit.kind {
            WitnessKind::ExplicitFormula { base, n0, .. } => {
                assert_eq!(base, Point::Scalar(r(2, 3)));
                assert_eq!(n0, 3);
            }
            other => panic!("expected an explicit witness, got {other:?}"),
        }
    }

    #[test]
    fn ea_search_reports_exact_infimum_when_none() {
        let pair = pair_from(APART_PAIR);
        let tol = Real::from_ratio(1, 1_000_000_000);
        let (wit, report) = search_ea_witness(&pair, 200, &tol, 1e-6, 100_000);
        assert!(wit.is_none());
        assert_eq!(report.verdict, Verdict::Fail);
        assert_eq!(report.margin.clone().unwrap(), r(1, 6));
    }

    #[test]
    fn noncompatibility_detected_along_explicit_witness() {
        let pair = pair_from(HALF_STEP_PAIR);
        let wit = SequenceDescriptor::explicit(
            Point::Scalar(r(2, 3)),
            Point::Scalar(Real::one()),
            3,
        );
        let report = check_compatibility(&pair, &wit, 1e-6, 100_000);
        assert_eq!(report.verdict, Verdict::Fail);
        let tail = report.margin.clone().unwrap().to_f64();
        assert!(tail >= 0.15, "tail limit {tail} too small");
    }

    #[test]
    fn identity_pair_is_compatible() {
        let text = "\
space X = interval[0, 1]
map f = piecewise x { [0, 1] -> x; }
map T = piecewise x { [0, 1] -> x; }
";
        let pair = pair_from(text);
        let wit =
            SequenceDescriptor::explicit(Point::Scalar(r(1, 2)), Point::Scalar(Real::one()), 3);
        let report = check_compatibility(&pair, &wit, 1e-6, 10_000);
        assert_eq!(report.verdict, Verdict::Pass);
    }

    #[test]
    fn range_inclusion_exact_pass_and_fail() {
        let pair = pair_from(THREE_VALUE_PAIR);
        let tol = Real::from_ratio(1, 1_000_000_000);
        assert_eq!(check_range_inclusion(&pair, 200, &tol).verdict, Verdict::Pass);

        let pair = pair_from(HALF_STEP_PAIR);
        let report = check_range_inclusion(&pair, 200, &tol);
        assert_eq!(report.verdict, Verdict::Fail);
        // T(X) = [1/2, 2/3] starts below f(X) = [2/3, 1]
        assert_eq!(report.witnesses[0].points[0], Point::Scalar(r(1, 2)));
        let swapped = check_range_inclusion(&pair.swapped(), 200, &tol);
        assert_eq!(swapped.verdict, Verdict::Fail);
    }

    #[test]
    fn open_range_is_not_closed() {
        let pair = pair_from(OPEN_RANGE_PAIR);
        let report = check_f_range_closed(&pair);
        assert_eq!(report.verdict, Verdict::Fail);
        assert_eq!(report.witnesses[0].points[0], Point::Scalar(r(2, 3)));
    }

    #[test]
    fn witness_descriptor_serde_roundtrip() {
        let wit = SequenceDescriptor::explicit(
            Point::Scalar(r(2, 3)),
            Point::Scalar(Real::one()),
            3,
        );
        let json = serde_json::to_string(&wit).unwrap();
        let back: SequenceDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(wit, back);
        assert_eq!(wit.term(4), Point::Scalar(r(11, 12)));
    }
}
