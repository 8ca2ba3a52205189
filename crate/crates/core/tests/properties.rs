//! Cross-cutting properties: metric axioms, parse/print round-trips,
//! preimage/range consistency, resolution stability, and re-verification
//! of every produced witness and fixed point.

use coincide::config::RunConfig;
use coincide::dsl::parse::parse_mapfile;
use coincide::dsl::phi::check_beg_abbas_phi;
use coincide::gallery::{choose_route, load_fixture, FixtureId};
use coincide::metric::{IntervalDomain, MetricSpace, Point};
use coincide::real::Real;
use coincide::solver::{
    check_monotone_decrease, direct_fixed_point, ea_solve, jungck_iterate,
    verify_common_fixed_point, RouteData,
};
use coincide::verifiers::{
    check_compatibility, check_f_range_closed, check_range_inclusion, check_weakly_contractive,
    f_range, search_ea_witness, t_range, MapPair, SequenceDescriptor,
};
use proptest::prelude::*;

fn r(p: i64, q: i64) -> Real {
    Real::from_ratio(p, q)
}

fn pair_of(id: FixtureId) -> MapPair {
    load_fixture(id, 8).pair
}

/// Deterministic triple indices covering `count` samples over `n` points.
fn triples(n: usize, count: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..count).map(move |k| ((k * 7919) % n, (k * 104_729) % n, (k * 1_299_709) % n))
}

#[test]
fn metric_axioms_hold_on_sampled_triples() {
    let unit = MetricSpace::interval(IntervalDomain::closed(Real::zero(), Real::one()));
    let spaces: Vec<(MetricSpace, usize)> = vec![
        (unit, 30),
        (pair_of(FixtureId::Ex3_7).space, 30),  // union with a gap
        (pair_of(FixtureId::Ex2_2).space, 30),  // unbounded above (truncated grid)
        (pair_of(FixtureId::Ex3_5).space, 3),   // sup metric, dim 8
    ];
    for (space, resolution) in spaces {
        let grid = space.sample_grid(resolution);
        let pts = &grid.points;
        assert!(pts.len() >= 2);
        for (i, j, k) in triples(pts.len(), 10_000) {
            let (x, y, z) = (&pts[i], &pts[j], &pts[k]);
            let dxy = space.distance(x, y).unwrap();
            let dyx = space.distance(y, x).unwrap();
            let dxz = space.distance(x, z).unwrap();
            let dyz = space.distance(y, z).unwrap();
            assert!(dxy >= Real::zero());
            assert_eq!(dxy, dyx);
            assert_eq!(dxy.is_zero(), x == y);
            assert!(dxz <= dxy.clone() + dyz, "triangle inequality failed");
        }
        for p in pts.iter().take(50) {
            assert!(space.distance(p, p).unwrap().is_zero());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_print_roundtrip(
        split in 1i64..12,
        a1 in 0i64..6, b1n in 0i64..12,
        a2 in 0i64..6, b2n in 0i64..12,
        minus in proptest::bool::ANY,
    ) {
        let sign = if minus { "-" } else { "+" };
        let text = format!(
            "space X = interval[0, 1]\n\
             map f = piecewise x {{ [0, {split}/12) -> ({a1}/3)*x {sign} {b1n}/6; [{split}/12, 1] -> ({a2}/3)*x + {b2n}/6; }}\n"
        );
        let parsed = parse_mapfile(&text).unwrap();
        let reparsed = parse_mapfile(&parsed.to_string()).unwrap();
        prop_assert_eq!(parsed, reparsed);
    }
}

#[test]
fn fixture_sources_roundtrip_through_display() {
    for id in coincide::gallery::fixture_ids() {
        let parsed = parse_mapfile(coincide::gallery::fixture_source(id)).unwrap();
        let reparsed = parse_mapfile(&parsed.to_string()).unwrap();
        assert_eq!(parsed, reparsed, "{id} display form drifted");
    }
}

#[test]
fn preimage_agrees_with_range_membership() {
    let tol = Real::from_ratio(1, 1_000_000_000_000);
    for id in coincide::gallery::fixture_ids() {
        let pair = pair_of(id);
        for (name, map, rs) in [
            ("f", &pair.f, f_range(&pair)),
            ("T", &pair.t, t_range(&pair)),
        ] {
            let comps = rs.set.components().to_vec();
            let mut probes: Vec<Real> = Vec::new();
            for c in &comps {
                probes.push(c.lo.clone());
                if let Some(hi) = &c.hi {
                    probes.push(hi.clone());
                    probes.push((c.lo.clone() + hi.clone()) / Real::from_int(2));
                } else {
                    probes.push(c.lo.clone() + Real::one());
                }
            }
            // outside the hull and inside the gaps between components
            probes.push(comps[0].lo.clone() - Real::one());
            if let Some(hi) = comps.last().and_then(|c| c.hi.clone()) {
                probes.push(hi + Real::one());
            }
            for w in comps.windows(2) {
                if let Some(hi) = &w[0].hi {
                    probes.push((hi.clone() + w[1].lo.clone()) / Real::from_int(2));
                }
            }
            for y in probes {
                let inside = rs.contains(&y);
                let x = map.preimage_scalar(&y, None, &tol);
                // sampled hulls of our non-affine pieces are attained
                // (continuous bodies), so membership stays two-sided
                assert_eq!(
                    x.is_some(),
                    inside,
                    "{id}/{name}: preimage existence vs membership at y = {y}"
                );
                if let Some(x) = x {
                    let fx = map.eval_scalar(&x).unwrap();
                    assert!((fx - y.clone()).abs() <= tol, "{id}/{name}: |f(x) - y| > tol");
                }
            }
        }
    }
}

#[test]
fn weakly_contractive_passes_survive_double_resolution() {
    // denser bases where the scan is cheap (float sup-metric, coarse
    // piecewise-constant images); a lighter base where it is all exact
    for (id, base_resolution) in [
        (FixtureId::Ex2_2, 200),
        (FixtureId::Ex3_4, 100),
        (FixtureId::Ex3_5, 200),
        (FixtureId::Ex3_9, 100),
        (FixtureId::Ex3_11, 200),
    ] {
        let pair = pair_of(id);
        let base = check_weakly_contractive(&pair, base_resolution);
        assert!(base.passed(), "{id} fails at base resolution");
        let fine = check_weakly_contractive(&pair, 2 * base_resolution);
        assert!(fine.passed(), "{id} fails at doubled resolution");
    }
}

#[test]
fn produced_fixed_points_reverify_and_traces_decrease() {
    let cfg = RunConfig::default();
    let mut outcomes: Vec<(FixtureId, coincide::solver::SolveResult)> = Vec::new();

    let ex2_2 = pair_of(FixtureId::Ex2_2);
    outcomes.push((
        FixtureId::Ex2_2,
        jungck_iterate(&ex2_2, &Point::Scalar(Real::zero()), &cfg.tol, cfg.max_iters),
    ));
    for id in [FixtureId::Ex1_3, FixtureId::Ex3_4, FixtureId::Ex3_5] {
        let pair = pair_of(id);
        let (witness, report) =
            search_ea_witness(&pair, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
        assert!(report.passed(), "{id} must have a witness");
        outcomes.push((id, ea_solve(&pair, &witness.unwrap(), &cfg.tol)));
    }
    let ex3_7 = pair_of(FixtureId::Ex3_7);
    outcomes.push((
        FixtureId::Ex3_7,
        direct_fixed_point(
            &ex3_7.space,
            &ex3_7.t,
            ex3_7.phi.as_ref(),
            &Point::Scalar(Real::zero()),
            &cfg.tol,
            cfg.direct_max_iters(),
        ),
    ));

    for (id, result) in &outcomes {
        let z = result.fixed_point.as_ref().unwrap_or_else(|| panic!("{id} found no fixed point"));
        let pair = pair_of(*id);
        assert!(
            verify_common_fixed_point(&pair, z, &cfg.tol).passed(),
            "{id}: fixed point fails independent verification"
        );
        match &result.data {
            RouteData::Jungck { trace } | RouteData::Direct { trace } => {
                assert!(
                    check_monotone_decrease(trace, &cfg.tol).passed(),
                    "{id}: trace distances are not monotone nonincreasing"
                );
            }
            RouteData::Ea { .. } => {}
        }
    }
}

#[test]
fn failing_witnesses_reevaluate_to_violations() {
    let cfg = RunConfig::default();

    // altering-function monotonicity: recorded values must recompute exactly
    for id in [FixtureId::Ex2_2, FixtureId::Ex3_4] {
        let pair = pair_of(id);
        let phi = pair.phi.as_ref().unwrap();
        let report = check_beg_abbas_phi(phi, cfg.resolution);
        assert!(!report.passed(), "{id}: expected a monotonicity violation");
        let w = &report.witnesses[0];
        let (t1, t2) = (&w.points[0], &w.points[1]);
        let (v1, v2) = (
            phi.eval(t1.as_scalar().unwrap()).unwrap(),
            phi.eval(t2.as_scalar().unwrap()).unwrap(),
        );
        assert_eq!(v1, w.values[0].1);
        assert_eq!(v2, w.values[1].1);
        assert!(t1.as_scalar().unwrap() < t2.as_scalar().unwrap());
        assert!(v1 > v2, "{id}: witness pair does not violate monotonicity");
    }

    // (E.A) failure: the infimum witness really attains d(fx, Tx) = margin > 0
    let ex3_11 = pair_of(FixtureId::Ex3_11);
    let (witness, report) =
        search_ea_witness(&ex3_11, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
    assert!(witness.is_none() && !report.passed());
    let x = &report.witnesses[0].points[0];
    let d = ex3_11
        .space
        .distance(&ex3_11.f.eval_point(x).unwrap(), &ex3_11.t.eval_point(x).unwrap())
        .unwrap();
    assert_eq!(d, report.margin.clone().unwrap());
    assert_eq!(d, r(1, 6));

    // range-inclusion failures: the witness value is in T(X) but not f(X)
    for id in [FixtureId::Ex1_3, FixtureId::Ex3_4, FixtureId::Ex3_9, FixtureId::Ex3_11] {
        let pair = pair_of(id);
        let report = check_range_inclusion(&pair, cfg.resolution, &cfg.tol);
        assert!(!report.passed(), "{id}: range inclusion should fail");
        let y = report.witnesses[0].points[0].as_scalar().unwrap();
        assert!(t_range(&pair).contains(y), "{id}: witness not in T(X)");
        assert!(!f_range(&pair).contains(y), "{id}: witness unexpectedly in f(X)");
    }

    // closedness failures: the gap point is in the space but not the range
    for id in [FixtureId::Ex1_3, FixtureId::Ex3_9] {
        let pair = pair_of(id);
        let report = check_f_range_closed(&pair);
        assert!(!report.passed(), "{id}: f(X) should not be closed");
        let p = report.witnesses[0].points[0].clone();
        assert!(pair.space.contains(&p));
        assert!(!f_range(&pair).contains(p.as_scalar().unwrap()));
    }

    // noncompatibility: the reported term really has a large commutator
    let ex3_4 = load_fixture(FixtureId::Ex3_4, 8);
    let witness = ex3_4.pinned_witness.clone().unwrap();
    let report = check_compatibility(&ex3_4.pair, &witness, cfg.seq_tol, cfg.horizon);
    assert!(!report.passed());
    let c = &report.witnesses[0].points[0];
    let pair = &ex3_4.pair;
    let ftc = pair.f.eval_point(&pair.t.eval_point(c).unwrap()).unwrap();
    let tfc = pair.t.eval_point(&pair.f.eval_point(c).unwrap()).unwrap();
    let commutator = pair.space.distance(&ftc, &tfc).unwrap();
    assert!(commutator.to_f64() > cfg.seq_tol);
    assert_eq!(commutator, report.margin.clone().unwrap());
}

#[test]
fn jungck_and_ea_routes_agree_where_both_apply() {
    let cfg = RunConfig::default();
    let pair = pair_of(FixtureId::Ex2_2);
    let via_jungck = jungck_iterate(&pair, &Point::Scalar(Real::zero()), &cfg.tol, cfg.max_iters);
    let (witness, _) =
        search_ea_witness(&pair, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
    let via_ea = ea_solve(&pair, &witness.unwrap(), &cfg.tol);
    let (a, b) = (via_jungck.fixed_point.unwrap(), via_ea.fixed_point.unwrap());
    assert!(pair.space.distance(&a, &b).unwrap() <= r(1, 1_000_000_000));
}

#[test]
fn negative_fixtures_admit_no_route_to_a_fixed_point() {
    let cfg = RunConfig::default();

    let ex3_9 = pair_of(FixtureId::Ex3_9);
    let start = Point::Scalar(r(9, 10));
    assert!(jungck_iterate(&ex3_9, &start, &cfg.tol, cfg.max_iters).fixed_point.is_none());
    let (witness, _) =
        search_ea_witness(&ex3_9, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
    let via_ea = ea_solve(&ex3_9, &witness.unwrap(), &cfg.tol);
    assert!(via_ea.fixed_point.is_none());
    assert!(!ex3_9.f.is_identity(), "the direct route must stay unavailable");

    let ex3_11 = pair_of(FixtureId::Ex3_11);
    let (witness, _) =
        search_ea_witness(&ex3_11, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
    assert!(witness.is_none());
    assert!(jungck_iterate(&ex3_11, &start, &cfg.tol, cfg.max_iters).fixed_point.is_none());
    assert_eq!(choose_route(&ex3_11, None, false), None);
}

#[test]
fn constant_witness_descriptor_stays_inside_the_space() {
    // a recorded or constant witness used by the solver must keep every
    // term in the space, or compatibility checks would be meaningless
    let pair = pair_of(FixtureId::Ex3_5);
    let zero = Point::zero_vector(8);
    let wit = SequenceDescriptor::constant(zero.clone(), zero.clone());
    for n in [1u64, 2, 10, 1000] {
        assert!(pair.space.contains(&wit.term(n)));
    }
    assert_eq!(wit.term(wit.start()), zero);
}
