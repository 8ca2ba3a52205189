//! Built-in fixture pairs with golden expected outcomes, used as a
//! regression gallery and as a quick demonstration corpus.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::dsl::parse::parse_mapfile;
use crate::dsl::phi::{check_beg_abbas_phi, check_phi_membership};
use crate::dsl::piecewise::{AlteringFunction, MapError, PiecewiseMap};
use crate::metric::{MetricSpace, Point};
use crate::real::Real;
use crate::report::{CheckReport, Verdict};
use crate::solver::{
    check_uniqueness, direct_fixed_point, ea_solve, jungck_iterate, verify_common_fixed_point,
    Route, SolveResult,
};
use crate::verifiers::{
    check_compatibility, check_f_range_closed, check_range_inclusion, check_weak_compatibility,
    check_weakly_contractive, search_ea_witness, MapPair, SequenceDescriptor,
};

#[derive(Debug, Error)]
pub enum GalleryError {
    #[error("unknown fixture id '{0}'")]
    UnknownId(String),
    #[error("contraction modulus k = {0} must lie strictly between 0 and 1")]
    Modulus(Real),
    #[error("witness point {0} falls outside the space")]
    OutsideSpace(Point),
    #[error(transparent)]
    Eval(#[from] MapError),
    #[error("T is k-contractive at the probe pair for k = {modulus}")]
    ContractionHolds { modulus: Real },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixtureId {
    #[serde(rename = "EX1_3")]
    Ex1_3,
    #[serde(rename = "EX2_2")]
    Ex2_2,
    #[serde(rename = "EX3_4")]
    Ex3_4,
    #[serde(rename = "EX3_5")]
    Ex3_5,
    #[serde(rename = "EX3_7")]
    Ex3_7,
    #[serde(rename = "EX3_9")]
    Ex3_9,
    #[serde(rename = "EX3_11")]
    Ex3_11,
}

impl fmt::Display for FixtureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixtureId::Ex1_3 => "EX1_3",
            FixtureId::Ex2_2 => "EX2_2",
            FixtureId::Ex3_4 => "EX3_4",
            FixtureId::Ex3_5 => "EX3_5",
            FixtureId::Ex3_7 => "EX3_7",
            FixtureId::Ex3_9 => "EX3_9",
            FixtureId::Ex3_11 => "EX3_11",
        })
    }
}

impl std::str::FromStr for FixtureId {
    type Err = GalleryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "EX1_3" => Ok(FixtureId::Ex1_3),
            "EX2_2" => Ok(FixtureId::Ex2_2),
            "EX3_4" => Ok(FixtureId::Ex3_4),
            "EX3_5" => Ok(FixtureId::Ex3_5),
            "EX3_7" => Ok(FixtureId::Ex3_7),
            "EX3_9" => Ok(FixtureId::Ex3_9),
            "EX3_11" => Ok(FixtureId::Ex3_11),
            other => Err(GalleryError::UnknownId(other.to_string())),
        }
    }
}

pub fn fixture_ids() -> Vec<FixtureId> {
    vec![
        FixtureId::Ex1_3,
        FixtureId::Ex2_2,
        FixtureId::Ex3_4,
        FixtureId::Ex3_5,
        FixtureId::Ex3_7,
        FixtureId::Ex3_9,
        FixtureId::Ex3_11,
    ]
}

pub fn fixture_source(id: FixtureId) -> &'static str {
    match id {
        FixtureId::Ex1_3 => include_str!("../fixtures/EX1_3.map"),
        FixtureId::Ex2_2 => include_str!("../fixtures/EX2_2.map"),
        FixtureId::Ex3_4 => include_str!("../fixtures/EX3_4.map"),
        FixtureId::Ex3_5 => include_str!("../fixtures/EX3_5.map"),
        FixtureId::Ex3_7 => include_str!("../fixtures/EX3_7.map"),
        FixtureId::Ex3_9 => include_str!("../fixtures/EX3_9.map"),
        FixtureId::Ex3_11 => include_str!("../fixtures/EX3_11.map"),
    }
}

/// A bound fixture pair together with its golden expectations.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub id: FixtureId,
    pub label: &'static str,
    pub source: &'static str,
    pub pair: MapPair,
    /// Route the fixture is meant to demonstrate; None means auto-select.
    pub preferred_route: Option<Route>,
    /// Witness pinned for the compatibility check (the searched one is used
    /// otherwise).
    pub pinned_witness: Option<SequenceDescriptor>,
    pub x0: Point,
    pub expected: Vec<(&'static str, Verdict)>,
    pub expected_fixed_point: Option<Point>,
}

fn r(p: i64, q: i64) -> Real {
    Real::from_ratio(p, q)
}

pub fn load_fixture(id: FixtureId, seq_dim: usize) -> Fixture {
    let source = fixture_source(id);
    let mf = parse_mapfile(source)
        .expect("fixture sources are well-formed")
        .with_seq_dim(seq_dim.max(1));
    let f = mf.get("f").expect("fixture defines f").clone();
    let t = mf.get("T").expect("fixture defines T").clone();
    let phi = mf
        .phi
        .clone()
        .map(|m| AlteringFunction::new(m).expect("fixture phi covers [0, inf)"));
    let pair = MapPair::bind(mf.space, f, t, phi).expect("fixture maps are selfmaps");
    let dim = pair.space.dim();
    use Verdict::{Fail, Pass, PreconditionFail, Unknown};
    let (label, preferred_route, pinned_witness, x0, expected, expected_fixed_point) = match id {
        FixtureId::Ex1_3 => (
            "compatible pair on [0, 1)",
            Some(Route::Ea),
            Some(SequenceDescriptor::explicit(
                Point::Scalar(r(2, 3)),
                Point::Scalar(Real::one()),
                4,
            )),
            Point::Scalar(Real::zero()),
            vec![
                ("weakly_contractive", PreconditionFail),
                ("weak_compatibility", Pass),
                ("ea_witness", Pass),
                ("compatibility", Pass),
                ("range_inclusion", Fail),
                ("f_range_closed", Fail),
                ("common_fixed_point", Pass),
                ("uniqueness", Pass),
            ],
            Some(Point::Scalar(r(2, 3))),
        ),
        FixtureId::Ex2_2 => (
            "three-value pair on [0, inf)",
            Some(Route::Jungck),
            None,
            Point::Scalar(Real::zero()),
            vec![
                ("phi_membership", Pass),
                ("beg_abbas_phi", Fail),
                ("weakly_contractive", Pass),
                ("weak_compatibility", Pass),
                ("ea_witness", Pass),
                ("compatibility", Pass),
                ("range_inclusion", Pass),
                ("f_range_closed", Pass),
                ("common_fixed_point", Pass),
                ("uniqueness", Pass),
            ],
            Some(Point::Scalar(r(2, 3))),
        ),
        FixtureId::Ex3_4 => (
            "noncompatible pair on [1/2, 1]",
            Some(Route::Ea),
            Some(SequenceDescriptor::explicit(
                Point::Scalar(r(2, 3)),
                Point::Scalar(Real::one()),
                3,
            )),
            Point::Scalar(r(9, 10)),
            vec![
                ("phi_membership", Pass),
                ("beg_abbas_phi", Fail),
                ("weakly_contractive", Pass),
                ("weak_compatibility", Pass),
                ("ea_witness", Pass),
                ("compatibility", Fail),
                ("range_inclusion", Fail),
                ("f_range_closed", Pass),
                ("common_fixed_point", Pass),
                ("uniqueness", Pass),
            ],
            Some(Point::Scalar(r(2, 3))),
        ),
        FixtureId::Ex3_5 => (
            "coordinatewise contraction on a sequence space",
            Some(Route::Ea),
            None,
            Point::Vector(vec![Real::one(); dim]),
            vec![
                ("phi_membership", Pass),
                ("beg_abbas_phi", Pass),
                ("weakly_contractive", Pass),
                ("weak_compatibility", Pass),
                ("ea_witness", Pass),
                ("compatibility", Pass),
                ("range_inclusion", Pass),
                ("f_range_closed", Pass),
                ("common_fixed_point", Pass),
                ("uniqueness", Pass),
            ],
            Some(Point::zero_vector(dim)),
        ),
        FixtureId::Ex3_7 => (
            "single map on a disconnected domain",
            Some(Route::Direct),
            None,
            Point::Scalar(Real::zero()),
            vec![
                ("phi_membership", Pass),
                ("beg_abbas_phi", Pass),
                ("weakly_contractive", Pass),
                ("weak_compatibility", Pass),
                ("ea_witness", Pass),
                ("compatibility", Pass),
                ("range_inclusion", Pass),
                ("f_range_closed", Pass),
                ("common_fixed_point", Pass),
                ("uniqueness", Pass),
            ],
            Some(Point::Scalar(r(2, 3))),
        ),
        FixtureId::Ex3_9 => (
            "non-closed range on [1/2, 1]",
            None,
            None,
            Point::Scalar(r(9, 10)),
            vec![
                ("phi_membership", Pass),
                ("beg_abbas_phi", Pass),
                ("weakly_contractive", Pass),
                ("weak_compatibility", Pass),
                ("ea_witness", Pass),
                ("compatibility", Fail),
                ("range_inclusion", Fail),
                ("f_range_closed", Fail),
            ],
            None,
        ),
        FixtureId::Ex3_11 => (
            "pair without property (E.A)",
            None,
            None,
            Point::Scalar(r(9, 10)),
            vec![
                ("phi_membership", Pass),
                ("beg_abbas_phi", Pass),
                ("weakly_contractive", Pass),
                ("weak_compatibility", Pass),
                ("ea_witness", Fail),
                ("compatibility", Unknown),
                ("range_inclusion", Fail),
                ("f_range_closed", Pass),
            ],
            None,
        ),
    };
    Fixture {
        id,
        label,
        source,
        pair,
        preferred_route,
        pinned_witness,
        x0,
        expected,
        expected_fixed_point,
    }
}

/// One mismatch between a golden expectation and the measured outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diff {
    pub check: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureRun {
    pub id: FixtureId,
    pub label: String,
    pub reports: Vec<CheckReport>,
    pub solve: Option<SolveResult>,
    /// Empty iff every golden expectation was met.
    pub diffs: Vec<Diff>,
}

/// Route selection when none is requested: Jungck needs T(X) within f(X),
/// the (E.A) route needs a witness, and the direct route needs f = id.
pub fn choose_route(
    pair: &MapPair,
    witness: Option<&SequenceDescriptor>,
    range_inclusion_holds: bool,
) -> Option<Route> {
    if range_inclusion_holds {
        Some(Route::Jungck)
    } else if witness.is_some() {
        Some(Route::Ea)
    } else if pair.f.is_identity() {
        Some(Route::Direct)
    } else {
        None
    }
}

/// Run the full check battery and the preferred solve for one fixture,
/// then diff the outcomes against the golden expectations.
pub fn run_fixture(fx: &Fixture, cfg: &RunConfig) -> FixtureRun {
    let pair = &fx.pair;
    let mut reports: Vec<CheckReport> = Vec::new();
    if let Some(phi) = &pair.phi {
        reports.push(check_phi_membership(phi, cfg.resolution));
        reports.push(check_beg_abbas_phi(phi, cfg.resolution));
    }
    reports.push(check_weakly_contractive(pair, cfg.resolution));
    reports.push(check_weak_compatibility(pair, cfg.resolution, &cfg.tol));
    let (found, ea_report) =
        search_ea_witness(pair, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
    reports.push(ea_report);
    let witness = fx.pinned_witness.clone().or(found);
    reports.push(match &witness {
        Some(w) => check_compatibility(pair, w, cfg.seq_tol, cfg.horizon),
        None => CheckReport::new("compatibility", Verdict::Unknown)
            .note("no property-(E.A) witness available to test along"),
    });
    let range_report = check_range_inclusion(pair, cfg.resolution, &cfg.tol);
    let range_ok = range_report.passed();
    reports.push(range_report);
    reports.push(check_f_range_closed(pair));

    let route = fx
        .preferred_route
        .or_else(|| choose_route(pair, witness.as_ref(), range_ok));
    let solve: Option<SolveResult> = match route {
        Some(Route::Jungck) => Some(jungck_iterate(pair, &fx.x0, &cfg.tol, cfg.max_iters)),
        Some(Route::Ea) => witness.as_ref().map(|w| ea_solve(pair, w, &cfg.tol)),
        Some(Route::Direct) => Some(direct_fixed_point(
            &pair.space,
            &pair.t,
            pair.phi.as_ref(),
            &fx.x0,
            &cfg.tol,
            cfg.direct_max_iters(),
        )),
        None => None,
    };
    if let Some(z) = solve.as_ref().and_then(|s| s.fixed_point.as_ref()) {
        reports.push(verify_common_fixed_point(pair, z, &cfg.tol));
        reports.push(check_uniqueness(pair, cfg.resolution, &cfg.tol));
    }

    let mut diffs: Vec<Diff> = Vec::new();
    for (name, want) in &fx.expected {
        let actual = reports.iter().find(|r| r.check_name == *name);
        if actual.map(|r| r.verdict) != Some(*want) {
            diffs.push(Diff {
                check: (*name).to_string(),
                expected: want.to_string(),
                actual: actual
                    .map(|r| r.verdict.to_string())
                    .unwrap_or_else(|| "missing".to_string()),
            });
        }
    }
    let got = solve.as_ref().and_then(|s| s.fixed_point.clone());
    let close_enough = Real::from_int(10) * cfg.tol.clone();
    let fixed_matches = match (&fx.expected_fixed_point, &got) {
        (None, None) => true,
        (Some(want), Some(z)) => pair
            .space
            .distance(want, z)
            .map(|d| d <= close_enough)
            .unwrap_or(false),
        _ => false,
    };
    if !fixed_matches {
        let show = |p: &Option<Point>| {
            p.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "none".to_string())
        };
        diffs.push(Diff {
            check: "fixed_point".to_string(),
            expected: show(&fx.expected_fixed_point),
            actual: show(&got),
        });
    }
    FixtureRun { id: fx.id, label: fx.label.to_string(), reports, solve, diffs }
}

/// A pair (x, y) showing that T is not a k-contraction: d(Tx,Ty) > k d(x,y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonContraction {
    pub x: Point,
    pub y: Point,
    pub lhs: Real,
    pub rhs: Real,
}

/// Probe pair x = 0, y = t e_1 with t = min((1-k)/(2k), 1); for maps that
/// damp small perturbations sublinearly this beats any modulus k in (0,1).
pub fn non_contraction_witness(
    t_map: &PiecewiseMap,
    space: &MetricSpace,
    k: &Real,
) -> Result<NonContraction, GalleryError> {
    if !(*k > Real::zero() && *k < Real::one()) {
        return Err(GalleryError::Modulus(k.clone()));
    }
    let t = (Real::one() - k.clone())
        .checked_div(&(Real::from_int(2) * k.clone()))
        .expect("k is positive")
        .min(Real::one());
    let (x, y) = match space {
        MetricSpace::Interval(_) => (Point::Scalar(Real::zero()), Point::Scalar(t)),
        MetricSpace::SeqSpace { dim, .. } => {
            let mut coords = vec![Real::zero(); *dim];
            coords[0] = t;
            (Point::zero_vector(*dim), Point::Vector(coords))
        }
    };
    for p in [&x, &y] {
        if !space.contains(p) {
            return Err(GalleryError::OutsideSpace(p.clone()));
        }
    }
    let tx = t_map.eval_point(&x)?;
    let ty = t_map.eval_point(&y)?;
    let lhs = space.distance(&tx, &ty).expect("probe points share the space");
    let rhs = k.clone() * space.distance(&x, &y).expect("probe points share the space");
    if lhs > rhs {
        Ok(NonContraction { x, y, lhs, rhs })
    } else {
        Err(GalleryError::ContractionHolds { modulus: k.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::RouteData;

    fn run(id: FixtureId) -> FixtureRun {
        let fx = load_fixture(id, 8);
        run_fixture(&fx, &RunConfig::default())
    }

    fn assert_golden(run: &FixtureRun) {
        assert!(run.diffs.is_empty(), "{} mismatches: {:?}", run.id, run.diffs);
    }

    #[test]
    fn all_fixture_sources_parse_and_bind() {
        for id in fixture_ids() {
            let fx = load_fixture(id, 8);
            assert_eq!(fx.id, id);
            assert!(!fx.expected.is_empty());
        }
    }

    #[test]
    fn fixture_ex1_3_matches_golden() {
        let run = run(FixtureId::Ex1_3);
        assert_golden(&run);
        let solve = run.solve.expect("solve ran");
        assert_eq!(solve.fixed_point, Some(Point::Scalar(r(2, 3))));
    }

    #[test]
    fn fixture_ex2_2_matches_golden() {
        let run = run(FixtureId::Ex2_2);
        assert_golden(&run);
        let wc = run.reports.iter().find(|c| c.check_name == "weakly_contractive").unwrap();
        let margin = wc.margin.clone().unwrap();
        assert!(margin.is_exact() && margin.is_zero());
        let solve = run.solve.expect("solve ran");
        assert_eq!(solve.fixed_point, Some(Point::Scalar(r(2, 3))));
        let RouteData::Jungck { trace } = &solve.data else { panic!("jungck route") };
        assert!(trace.steps <= 3);
    }

    #[test]
    fn fixture_ex3_4_matches_golden() {
        let run = run(FixtureId::Ex3_4);
        assert_golden(&run);
        let compat = run.reports.iter().find(|c| c.check_name == "compatibility").unwrap();
        assert!(compat.margin.clone().unwrap().to_f64() >= 0.15);
    }

    #[test]
    fn fixture_ex3_5_matches_golden() {
        let run = run(FixtureId::Ex3_5);
        assert_golden(&run);
        let solve = run.solve.expect("solve ran");
        assert_eq!(solve.fixed_point, Some(Point::zero_vector(8)));
    }

    #[test]
    fn fixture_ex3_7_matches_golden() {
        let run = run(FixtureId::Ex3_7);
        assert_golden(&run);
        let RouteData::Direct { trace } = &run.solve.expect("solve ran").data else {
            panic!("direct route")
        };
        assert!(trace.steps >= 25 && trace.steps <= 35);
    }

    #[test]
    fn fixture_ex3_9_matches_golden() {
        let run = run(FixtureId::Ex3_9);
        assert_golden(&run);
        let solve = run.solve.expect("the ea route is attempted");
        assert!(solve.fixed_point.is_none());
        assert!(solve.notes.iter().any(|n| n.contains("not closed")));
    }

    #[test]
    fn fixture_ex3_11_matches_golden() {
        let run = run(FixtureId::Ex3_11);
        assert_golden(&run);
        assert!(run.solve.is_none(), "no route should apply");
        let ea = run.reports.iter().find(|c| c.check_name == "ea_witness").unwrap();
        assert_eq!(ea.margin.clone().unwrap(), r(1, 6));
    }

    #[test]
    fn non_contraction_probe_beats_every_tested_modulus() {
        let fx = load_fixture(FixtureId::Ex3_5, 8);
        for (num, den, lhs, rhs) in
            [(1i64, 2i64, r(1, 3), r(1, 4)), (9, 10, r(1, 19), r(1, 20)), (99, 100, r(1, 199), r(1, 200))]
        {
            let w = non_contraction_witness(&fx.pair.t, &fx.pair.space, &r(num, den)).unwrap();
            assert_eq!(w.lhs, lhs);
            assert_eq!(w.rhs, rhs);
            assert!(w.lhs > w.rhs);
        }
    }

    #[test]
    fn modulus_outside_unit_interval_is_rejected() {
        let fx = load_fixture(FixtureId::Ex3_5, 8);
        assert!(non_contraction_witness(&fx.pair.t, &fx.pair.space, &Real::one()).is_err());
        assert!(non_contraction_witness(&fx.pair.t, &fx.pair.space, &Real::zero()).is_err());
    }

    #[test]
    fn bogus_fixture_id_is_rejected() {
        assert!("EX9_9".parse::<FixtureId>().is_err());
        assert_eq!("EX2_2".parse::<FixtureId>().unwrap(), FixtureId::Ex2_2);
    }
}
