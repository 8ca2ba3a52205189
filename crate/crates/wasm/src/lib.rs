//! Browser bindings: JSON-string wrappers around the fixture gallery,
//! hypothesis checks, and solver, thin enough for a static demo page.
//! Every export takes and returns strings so the JS side stays framework-free.

use coincide::config::RunConfig;
use coincide::dsl::phi::{check_beg_abbas_phi, check_phi_membership};
use coincide::dsl::piecewise::PiecewiseMap;
use coincide::gallery::{choose_route, fixture_ids, fixture_source, load_fixture, FixtureId};
use coincide::metric::{IntervalUnion, Point};
use coincide::real::Real;
use coincide::report::CheckReport;
use coincide::solver::{
    direct_fixed_point, ea_solve, jungck_iterate, verify_common_fixed_point, Route, RouteData,
    SolveResult,
};
use coincide::verifiers::{
    check_compatibility, check_f_range_closed, check_range_inclusion, check_weak_compatibility,
    check_weakly_contractive, search_ea_witness, MapPair,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Browser-demo config: lighter than the CLI defaults so checks stay
/// interactive; the CLI remains the reference for full-resolution runs.
fn demo_config() -> RunConfig {
    RunConfig {
        resolution: 100,
        horizon: 10_000,
        ..RunConfig::default()
    }
}

const DEMO_SEQ_DIM: usize = 4;

fn err_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

fn ok_json(value: impl Serialize) -> String {
    serde_json::to_string(&value).unwrap_or_else(err_json)
}

fn parse_id(id: &str) -> Result<FixtureId, String> {
    id.parse::<FixtureId>().map_err(|e| e.to_string())
}

/// `[{id, label, dim}]` for populating the fixture selector.
#[wasm_bindgen]
pub fn fixture_list() -> String {
    let rows: Vec<serde_json::Value> = fixture_ids()
        .into_iter()
        .map(|id| {
            let fx = load_fixture(id, DEMO_SEQ_DIM);
            serde_json::json!({
                "id": id.to_string(),
                "label": fx.label,
                "dim": fx.pair.space.dim(),
            })
        })
        .collect();
    serde_json::Value::Array(rows).to_string()
}

/// The raw map-file text for one fixture.
#[wasm_bindgen]
pub fn fixture_text(id: &str) -> String {
    match parse_id(id) {
        Ok(id) => fixture_source(id).to_string(),
        Err(e) => err_json(e),
    }
}

#[derive(Serialize)]
struct PlotData {
    id: String,
    label: String,
    dim: usize,
    /// Scalar-domain components as [lo, hi] in f64.
    components: Vec<(f64, f64)>,
    /// Per-piece polylines so jumps are not bridged.
    f_segments: Vec<Vec<(f64, f64)>>,
    t_segments: Vec<Vec<(f64, f64)>>,
}

fn segments(map: &PiecewiseMap, domain: &IntervalUnion, per_piece: usize) -> Vec<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for piece in &map.pieces {
        for comp in domain.components() {
            let Some(sub) = piece.domain.intersect(comp) else {
                continue;
            };
            let (lo, hi, _) = sub.sampling_bounds();
            let (lo, hi) = (lo.to_f64(), hi.to_f64());
            let mut seg: Vec<(f64, f64)> = Vec::new();
            let steps = if hi > lo { per_piece } else { 0 };
            for i in 0..=steps {
                let x = if steps == 0 {
                    lo
                } else {
                    lo + (hi - lo) * (i as f64) / (steps as f64)
                };
                if let Ok(y) = map.eval_scalar(&Real::from_f64(x)) {
                    seg.push((x, y.to_f64()));
                }
            }
            if !seg.is_empty() {
                out.push(seg);
            }
        }
    }
    out
}

/// Sampled graphs of f and T over the scalar domain (the coordinate maps,
/// for sequence-space fixtures).
#[wasm_bindgen]
pub fn plot_pair(id: &str) -> String {
    let fx = match parse_id(id) {
        Ok(id) => load_fixture(id, DEMO_SEQ_DIM),
        Err(e) => return err_json(e),
    };
    let domain = fx.pair.space.scalar_domain();
    let components = domain
        .components()
        .iter()
        .map(|c| {
            let (lo, hi, _) = c.sampling_bounds();
            (lo.to_f64(), hi.to_f64())
        })
        .collect();
    ok_json(PlotData {
        id: fx.id.to_string(),
        label: fx.label.to_string(),
        dim: fx.pair.space.dim(),
        components,
        f_segments: segments(&fx.pair.f, &domain, 120),
        t_segments: segments(&fx.pair.t, &domain, 120),
    })
}

fn check_battery(pair: &MapPair, cfg: &RunConfig) -> Vec<CheckReport> {
    let mut reports = Vec::new();
    if let Some(phi) = &pair.phi {
        reports.push(check_phi_membership(phi, cfg.resolution));
        reports.push(check_beg_abbas_phi(phi, cfg.resolution));
    }
    reports.push(check_weakly_contractive(pair, cfg.resolution));
    reports.push(check_weak_compatibility(pair, cfg.resolution, &cfg.tol));
    let (witness, ea_report) =
        search_ea_witness(pair, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
    reports.push(ea_report);
    if let Some(w) = &witness {
        reports.push(check_compatibility(pair, w, cfg.seq_tol, cfg.horizon));
    }
    reports.push(check_range_inclusion(pair, cfg.resolution, &cfg.tol));
    reports.push(check_f_range_closed(pair));
    reports
}

/// Run the hypothesis checks on one fixture; returns `{reports: [...]}`
/// with the same report schema as the CLI's JSON output.
#[wasm_bindgen]
pub fn verify_pair(id: &str) -> String {
    let fx = match parse_id(id) {
        Ok(id) => load_fixture(id, DEMO_SEQ_DIM),
        Err(e) => return err_json(e),
    };
    let cfg = demo_config();
    let reports = check_battery(&fx.pair, &cfg);
    ok_json(serde_json::json!({ "id": fx.id.to_string(), "reports": reports }))
}

#[derive(Serialize)]
struct OrbitData {
    id: String,
    route: String,
    fixed_point: Option<f64>,
    /// (x_n, T x_n) pairs in f64 for scalar fixtures; empty on the (E.A)
    /// route and for sequence spaces.
    orbit: Vec<(f64, f64)>,
    distances: Vec<f64>,
    notes: Vec<String>,
    result: SolveResult,
}

fn scalar_orbit(result: &SolveResult) -> Vec<(f64, f64)> {
    let trace = match &result.data {
        RouteData::Jungck { trace } | RouteData::Direct { trace } => trace,
        RouteData::Ea { .. } => return Vec::new(),
    };
    trace
        .iterates
        .iter()
        .filter_map(|(x, tx)| Some((x.as_scalar()?.to_f64(), tx.as_scalar()?.to_f64())))
        .collect()
}

/// Iterate toward a common fixed point from a scalar start (broadcast to a
/// constant sequence on sequence-space fixtures). `route` is one of
/// "auto", "jungck", "ea", "direct".
#[wasm_bindgen]
pub fn solve_orbit(id: &str, x0: f64, route: &str) -> String {
    let fx = match parse_id(id) {
        Ok(id) => load_fixture(id, DEMO_SEQ_DIM),
        Err(e) => return err_json(e),
    };
    let pair = &fx.pair;
    let cfg = demo_config();
    let start = match pair.space.dim() {
        1 => Point::Scalar(Real::from_f64(x0)),
        d => Point::Vector(vec![Real::from_f64(x0); d]),
    };
    if !pair.space.contains(&start) {
        return err_json(format!("x0 = {x0} lies outside the space"));
    }
    let chosen = match route {
        "auto" | "" => {
            let range_ok = check_range_inclusion(pair, cfg.resolution, &cfg.tol).passed();
            let (witness, _) =
                search_ea_witness(pair, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
            match choose_route(pair, witness.as_ref(), range_ok) {
                Some(r) => r,
                None => return err_json("no applicable route for this pair"),
            }
        }
        other => match other.parse::<Route>() {
            Ok(r) => r,
            Err(e) => return err_json(e),
        },
    };
    let result = match chosen {
        Route::Jungck => jungck_iterate(pair, &start, &cfg.tol, cfg.max_iters),
        Route::Direct => direct_fixed_point(
            &pair.space,
            &pair.t,
            pair.phi.as_ref(),
            &start,
            &cfg.tol,
            cfg.direct_max_iters(),
        ),
        Route::Ea => {
            let (witness, _) =
                search_ea_witness(pair, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
            match witness {
                Some(w) => ea_solve(pair, &w, &cfg.tol),
                None => return err_json("no property-(E.A) witness found"),
            }
        }
    };
    if let Some(z) = &result.fixed_point {
        debug_assert!(verify_common_fixed_point(pair, z, &cfg.tol).passed());
    }
    ok_json(OrbitData {
        id: fx.id.to_string(),
        route: chosen.to_string(),
        fixed_point: result.fixed_point.as_ref().and_then(|p| match p {
            Point::Scalar(v) => Some(v.to_f64()),
            Point::Vector(vs) => vs.first().map(|v| v.to_f64()),
        }),
        orbit: scalar_orbit(&result),
        distances: result_distances(&result),
        notes: result.notes.clone(),
        result,
    })
}

fn result_distances(result: &SolveResult) -> Vec<f64> {
    match &result.data {
        RouteData::Jungck { trace } | RouteData::Direct { trace } => {
            trace.distances.iter().map(|d| d.to_f64()).collect()
        }
        RouteData::Ea { .. } => Vec::new(),
    }
}
