//! Acceptance battery: one test per criterion, each printing a single
//! `ACCEPTANCE <n> <name>: PASS/FAIL` line (run with `-- --nocapture`).

use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::Instant;

use coincide::config::RunConfig;
use coincide::dsl::phi::check_beg_abbas_phi;
use coincide::gallery::{
    choose_route, fixture_ids, load_fixture, non_contraction_witness, FixtureId,
};
use coincide::metric::{IntervalDomain, MetricSpace, Point};
use coincide::real::Real;
use coincide::solver::{
    check_monotone_decrease, direct_fixed_point, ea_solve, jungck_iterate,
    verify_common_fixed_point, RouteData,
};
use coincide::verifiers::{
    check_compatibility, check_range_inclusion, check_weakly_contractive, f_range,
    search_ea_witness, t_range, MapPair, SequenceDescriptor,
};

fn r(p: i64, q: i64) -> Real {
    Real::from_ratio(p, q)
}

fn tol() -> Real {
    r(1, 1_000_000_000)
}

fn pair_of(id: FixtureId) -> MapPair {
    load_fixture(id, 8).pair
}

fn criterion(n: u32, name: &str, body: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    match &outcome {
        Ok(()) => println!("ACCEPTANCE {n} {name}: PASS"),
        Err(_) => println!("ACCEPTANCE {n} {name}: FAIL"),
    }
    if let Err(e) = outcome {
        resume_unwind(e);
    }
}

fn fixture_path(name: &str) -> String {
    format!("{}/../core/fixtures/{name}.map", env!("CARGO_MANIFEST_DIR"))
}

fn run_binary(args: &[&str]) -> (serde_json::Value, i32) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_coincide"))
        .args(args)
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value = serde_json::from_str(&stdout).expect("binary emits valid json");
    (value, out.status.code().unwrap_or(-1))
}

#[test]
fn criterion_1_three_value_pair_end_to_end() {
    criterion(1, "three-value pair end-to-end", || {
        let pair = pair_of(FixtureId::Ex2_2);
        let target = Point::Scalar(r(2, 3));
        let started = Instant::now();
        for k in 0..=20i64 {
            let x0 = Point::Scalar(r(k, 10));
            let result = jungck_iterate(&pair, &x0, &tol(), 10_000);
            let z = result.fixed_point.unwrap_or_else(|| panic!("no fixed point from {k}/10"));
            assert!(pair.space.distance(&z, &target).unwrap() <= tol());
            let RouteData::Jungck { trace } = &result.data else { panic!("jungck data") };
            assert!(trace.steps <= 50, "took {} steps from {k}/10", trace.steps);
        }
        let elapsed = started.elapsed();
        assert!(elapsed.as_secs_f64() < 1.0, "21 solves took {elapsed:?}");

        // spot-check the shipped binary end-to-end
        let file = fixture_path("EX2_2");
        for x0 in ["0", "1", "2.0"] {
            let (json, code) =
                run_binary(&["solve", &file, "--x0", x0, "--format", "json"]);
            assert_eq!(code, 0);
            assert_eq!(json["solve"]["route"], "jungck");
            assert_eq!(json["solve"]["fixed_point"], "2/3");
        }
    });
}

#[test]
fn criterion_2_redundant_hypotheses_demo() {
    criterion(2, "redundant stronger hypotheses", || {
        let pair = pair_of(FixtureId::Ex2_2);
        let report = check_beg_abbas_phi(pair.phi.as_ref().unwrap(), 200);
        assert!(!report.passed(), "the stronger altering-function class must fail");
        let w = &report.witnesses[0];
        assert_eq!(w.points, vec![Point::Scalar(r(1, 3)), Point::Scalar(Real::one())]);
        assert_eq!(w.values[0].1, r(1, 6));
        assert_eq!(w.values[1].1, r(1, 9));
        // ...while the iteration itself still succeeds
        let result = jungck_iterate(&pair, &Point::Scalar(Real::zero()), &tol(), 10_000);
        assert_eq!(result.fixed_point, Some(Point::Scalar(r(2, 3))));
    });
}

#[test]
fn criterion_3_noncompatible_pair_end_to_end() {
    criterion(3, "noncompatible pair end-to-end", || {
        let cfg = RunConfig::default();
        let fx = load_fixture(FixtureId::Ex3_4, 8);
        let pair = &fx.pair;
        let (witness, report) =
            search_ea_witness(pair, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
        assert!(report.passed());
        let witness = witness.unwrap();
        assert_eq!(witness.limit, Point::Scalar(r(2, 3)));
        let solved = ea_solve(pair, &witness, &cfg.tol);
        let z = solved.fixed_point.unwrap();
        assert!(pair.space.distance(&z, &Point::Scalar(r(2, 3))).unwrap() <= cfg.tol);

        let pinned = fx.pinned_witness.clone().unwrap();
        let compat = check_compatibility(pair, &pinned, cfg.seq_tol, cfg.horizon);
        assert!(!compat.passed(), "the pair must be noncompatible along 2/3 + 1/n");
        assert!(compat.margin.unwrap().to_f64() >= 0.15);

        assert!(!check_range_inclusion(pair, cfg.resolution, &cfg.tol).passed());
        assert!(!check_range_inclusion(&pair.swapped(), cfg.resolution, &cfg.tol).passed());
    });
}

#[test]
fn criterion_4_sequence_space_dimensions() {
    criterion(4, "sequence-space pair at dims 1/8/32", || {
        for dim in [1usize, 8, 32] {
            let pair = pair_of_dim(FixtureId::Ex3_5, dim);
            let report = check_weakly_contractive(&pair, 200);
            assert!(report.passed(), "dim {dim}: not weakly contractive");
            assert!(report.margin.clone().unwrap().to_f64() >= -1e-9);
            let pairs_note = report
                .notes
                .iter()
                .find_map(|n| n.strip_suffix(" sample pairs"))
                .expect("pair-count note");
            assert!(pairs_note.parse::<u64>().unwrap() >= 10_000, "dim {dim}: too few pairs");

            let zero = Point::zero_vector(dim);
            let witness = SequenceDescriptor::constant(zero.clone(), zero.clone());
            let solved = ea_solve(&pair, &witness, &tol());
            assert_eq!(solved.fixed_point, Some(zero), "dim {dim}: null vector not recovered");

            for (num, den) in [(1i64, 2i64), (9, 10), (99, 100)] {
                let w = non_contraction_witness(&pair.t, &pair.space, &r(num, den))
                    .unwrap_or_else(|e| panic!("dim {dim}, k={num}/{den}: {e}"));
                assert!(w.lhs > w.rhs);
            }
        }
    });
}

fn pair_of_dim(id: FixtureId, dim: usize) -> MapPair {
    load_fixture(id, dim).pair
}

#[test]
fn criterion_5_direct_route_on_disconnected_domain() {
    criterion(5, "direct route on a disconnected domain", || {
        let pair = pair_of(FixtureId::Ex3_7);
        let target = Point::Scalar(r(2, 3));
        for x0 in [Real::zero(), r(1, 3), Real::one()] {
            let result = direct_fixed_point(
                &pair.space,
                &pair.t,
                pair.phi.as_ref(),
                &Point::Scalar(x0.clone()),
                &tol(),
                1_000_000,
            );
            let z = result.fixed_point.unwrap_or_else(|| panic!("no fixed point from {x0}"));
            assert!(pair.space.distance(&z, &target).unwrap() <= tol());
            let RouteData::Direct { trace } = &result.data else { panic!("direct data") };
            assert!(trace.steps <= 60, "took {} steps from {x0}", trace.steps);
            assert!(check_monotone_decrease(trace, &tol()).passed());
        }
    });
}

#[test]
fn criterion_6_negative_fixtures_stay_negative() {
    criterion(6, "negative fixtures yield no fixed point", || {
        let cfg = RunConfig::default();

        let ex3_9 = pair_of(FixtureId::Ex3_9);
        let range = f_range(&ex3_9);
        assert!(!range.approximate);
        let comps = range.set.components().to_vec();
        assert_eq!(comps.len(), 1);
        assert_eq!((comps[0].lo.clone(), comps[0].lo_closed), (r(2, 3), false));
        assert_eq!((comps[0].hi.clone(), comps[0].hi_closed), (Some(Real::one()), true));
        assert_eq!(range.is_closed_within(&ex3_9.space.scalar_domain()), Some(false));
        let start = Point::Scalar(r(9, 10));
        assert!(jungck_iterate(&ex3_9, &start, &cfg.tol, cfg.max_iters).fixed_point.is_none());
        let (witness, _) =
            search_ea_witness(&ex3_9, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
        assert!(ea_solve(&ex3_9, &witness.unwrap(), &cfg.tol).fixed_point.is_none());
        assert!(!ex3_9.f.is_identity());

        let ex3_11 = pair_of(FixtureId::Ex3_11);
        let (witness, report) =
            search_ea_witness(&ex3_11, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
        assert!(witness.is_none());
        let inf = report.margin.unwrap();
        assert!((inf - r(1, 6)).abs() <= tol(), "measured infimum drifted from 1/6");
        assert!(jungck_iterate(&ex3_11, &start, &cfg.tol, cfg.max_iters).fixed_point.is_none());
        assert_eq!(choose_route(&ex3_11, None, false), None);
    });
}

#[test]
fn criterion_7_property_battery() {
    criterion(7, "property battery", || {
        let started = Instant::now();
        let cfg = RunConfig::default();

        // metric axioms on 10^4 deterministic triples per space
        let unit = MetricSpace::interval(IntervalDomain::closed(Real::zero(), Real::one()));
        let spaces: Vec<(MetricSpace, usize)> = vec![
            (unit, 30),
            (pair_of(FixtureId::Ex3_7).space, 30),
            (pair_of(FixtureId::Ex2_2).space, 30),
            (pair_of(FixtureId::Ex3_5).space, 3),
        ];
        for (space, resolution) in spaces {
            let pts = space.sample_grid(resolution).points;
            for k in 0..10_000usize {
                let (x, y, z) = (
                    &pts[(k * 7919) % pts.len()],
                    &pts[(k * 104_729) % pts.len()],
                    &pts[(k * 1_299_709) % pts.len()],
                );
                let dxy = space.distance(x, y).unwrap();
                assert!(dxy >= Real::zero());
                assert_eq!(dxy, space.distance(y, x).unwrap());
                assert_eq!(dxy.is_zero(), x == y);
                let dxz = space.distance(x, z).unwrap();
                let dyz = space.distance(y, z).unwrap();
                assert!(dxz <= dxy + dyz);
            }
        }

        // a weakly-contractive pass re-verifies at doubled resolution
        let ex3_4 = pair_of(FixtureId::Ex3_4);
        assert!(check_weakly_contractive(&ex3_4, 100).passed());
        assert!(check_weakly_contractive(&ex3_4, 200).passed());

        // failing range checks re-evaluate to genuine violations
        for id in [FixtureId::Ex1_3, FixtureId::Ex3_4, FixtureId::Ex3_9, FixtureId::Ex3_11] {
            let pair = pair_of(id);
            let report = check_range_inclusion(&pair, cfg.resolution, &cfg.tol);
            assert!(!report.passed());
            let y = report.witnesses[0].points[0].as_scalar().unwrap().clone();
            assert!(t_range(&pair).contains(&y) && !f_range(&pair).contains(&y));
        }

        // produced fixed points re-verify; traces decrease monotonically
        let ex2_2 = pair_of(FixtureId::Ex2_2);
        let jungck = jungck_iterate(&ex2_2, &Point::Scalar(Real::zero()), &cfg.tol, cfg.max_iters);
        assert!(verify_common_fixed_point(&ex2_2, &jungck.fixed_point.clone().unwrap(), &cfg.tol)
            .passed());
        let ex3_7 = pair_of(FixtureId::Ex3_7);
        let direct = direct_fixed_point(
            &ex3_7.space,
            &ex3_7.t,
            ex3_7.phi.as_ref(),
            &Point::Scalar(Real::zero()),
            &cfg.tol,
            cfg.direct_max_iters(),
        );
        assert!(
            verify_common_fixed_point(&ex3_7, &direct.fixed_point.clone().unwrap(), &cfg.tol)
                .passed()
        );
        for result in [&jungck, &direct] {
            match &result.data {
                RouteData::Jungck { trace } | RouteData::Direct { trace } => {
                    assert!(check_monotone_decrease(trace, &cfg.tol).passed());
                }
                RouteData::Ea { .. } => unreachable!(),
            }
        }

        assert!(started.elapsed().as_secs() < 30, "battery exceeded its runtime budget");
    });
}

#[test]
fn criterion_8_ranges_are_exact() {
    criterion(8, "hand-derived ranges match exactly", || {
        type Comp = (Real, bool, Option<Real>, bool);
        // (fixture, f components, f approximate, T components, T approximate)
        type Row = (FixtureId, Vec<Comp>, bool, Vec<Comp>, bool);
        let seg = |lo: Real, lc: bool, hi: Real, hc: bool| -> Comp { (lo, lc, Some(hi), hc) };
        let pt = |v: Real| -> Comp { (v.clone(), true, Some(v), true) };
        let expected: Vec<Row> = vec![
            (
                FixtureId::Ex1_3,
                vec![seg(r(1, 2), false, r(2, 3), true)],
                false,
                vec![seg(r(1, 3), false, r(2, 3), true)],
                false,
            ),
            (
                FixtureId::Ex2_2,
                vec![pt(r(1, 3)), pt(r(2, 3)), pt(r(5, 6))],
                false,
                vec![pt(r(2, 3)), pt(r(5, 6))],
                false,
            ),
            (
                FixtureId::Ex3_4,
                vec![seg(r(2, 3), true, Real::one(), true)],
                false,
                vec![seg(r(1, 2), true, r(2, 3), true)],
                false,
            ),
            (
                FixtureId::Ex3_5,
                vec![seg(Real::zero(), true, Real::one(), true)],
                false,
                vec![seg(Real::zero(), true, r(1, 2), true)],
                true,
            ),
            (
                FixtureId::Ex3_7,
                vec![pt(Real::zero()), seg(r(1, 3), true, Real::one(), true)],
                false,
                vec![pt(r(1, 3)), seg(r(1, 2), true, r(5, 6), true)],
                false,
            ),
            (
                FixtureId::Ex3_9,
                vec![seg(r(2, 3), false, Real::one(), true)],
                false,
                vec![seg(r(1, 2), true, r(2, 3), false)],
                false,
            ),
            (
                FixtureId::Ex3_11,
                vec![pt(r(2, 3)), pt(Real::one())],
                false,
                vec![pt(r(1, 2)), pt(r(2, 3))],
                false,
            ),
        ];
        assert_eq!(expected.len(), fixture_ids().len());
        for (id, f_comps, f_approx, t_comps, t_approx) in expected {
            let pair = pair_of(id);
            for (name, range, want, approx) in [
                ("f", f_range(&pair), f_comps, f_approx),
                ("T", t_range(&pair), t_comps, t_approx),
            ] {
                assert_eq!(range.approximate, approx, "{id}/{name}: approximate flag");
                let got: Vec<Comp> = range
                    .set
                    .components()
                    .iter()
                    .map(|c| (c.lo.clone(), c.lo_closed, c.hi.clone(), c.hi_closed))
                    .collect();
                assert_eq!(got, want, "{id}/{name}: range drifted");
            }
        }
    });
}
