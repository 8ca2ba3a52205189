//! Command-line front end: verify hypotheses, solve for common fixed
//! points, and run the fixture gallery.
//!
//! Exit codes: 0 success/all-pass, 1 mathematical failure (a hypothesis
//! fails or an iteration does not converge), 2 usage or parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use coincide::config::RunConfig;
use coincide::dsl::parse::parse_mapfile;
use coincide::dsl::phi::{check_beg_abbas_phi, check_phi_membership};
use coincide::dsl::piecewise::AlteringFunction;
use coincide::gallery::{fixture_ids, load_fixture, run_fixture, Fixture, FixtureId, FixtureRun};
use coincide::metric::{MetricSpace, Point};
use coincide::real::Real;
use coincide::report::CheckReport;
use coincide::solver::{
    direct_fixed_point, ea_solve, jungck_iterate, verify_common_fixed_point, Route, RouteData,
    SolveResult, Termination,
};
use coincide::verifiers::{
    check_compatibility, check_f_range_closed, check_range_inclusion, check_weak_compatibility,
    check_weakly_contractive, search_ea_witness, MapPair,
};

#[derive(Parser)]
#[command(name = "coincide", version, about = "Common fixed points of selfmap pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Sample points per interval component for the hypothesis scans.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Distance tolerance (exact literal: "1e-9", "0.001", "1/1000").
    #[arg(long, global = true)]
    tol: Option<String>,
    /// Tolerance for sequence limits along witnesses.
    #[arg(long, global = true)]
    seq_tol: Option<f64>,
    /// Largest index probed along witness sequences.
    #[arg(long, global = true)]
    horizon: Option<u64>,
    /// Iteration budget for the solver.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Dimension used for sequence spaces.
    #[arg(long, global = true)]
    seq_dim: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check the common-fixed-point hypotheses for the pair (f, T) in a map file.
    Verify { file: PathBuf },
    /// Iterate toward a common fixed point of the pair in a map file.
    Solve {
        file: PathBuf,
        /// Starting point: a scalar ("0", "2/3") or a vector ("[1, 0.5, 1]").
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Iteration route; "auto" picks the first whose hypotheses hold.
        #[arg(long, default_value = "auto")]
        route: String,
    },
    /// Run built-in fixtures and compare against their expected outcomes.
    Gallery {
        /// Fixture ids (comma-separated); all fixtures when omitted.
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
    },
}

impl Cli {
    fn config(&self) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default();
        if let Some(r) = self.resolution {
            if r < 2 {
                return Err("resolution must be at least 2".to_string());
            }
            cfg.resolution = r;
        }
        if let Some(t) = &self.tol {
            let tol = Real::parse(t).map_err(|e| format!("bad --tol: {e}"))?;
            if tol <= Real::zero() {
                return Err("tolerance must be positive".to_string());
            }
            cfg.tol = tol;
        }
        if let Some(s) = self.seq_tol {
            if s.is_nan() || s <= 0.0 {
                return Err("sequence tolerance must be positive".to_string());
            }
            cfg.seq_tol = s;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h.max(1);
        }
        if let Some(m) = self.max_iters {
            cfg.max_iters = m.max(1);
        }
        if let Some(d) = self.seq_dim {
            cfg.seq_dim = d.max(1);
        }
        Ok(cfg)
    }
}

/// JSON envelope; every verdict is reproducible from the embedded config.
#[derive(Serialize)]
struct Output<'a> {
    tool_version: &'static str,
    config: ConfigEcho<'a>,
    reports: &'a [CheckReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    solve: Option<&'a SolveResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixtures: Option<&'a [FixtureRun]>,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    #[serde(flatten)]
    run: &'a RunConfig,
    output_format: &'static str,
}

fn emit(
    format: Format,
    cfg: &RunConfig,
    reports: &[CheckReport],
    solve: Option<&SolveResult>,
    fixtures: Option<&[FixtureRun]>,
) {
    match format {
        Format::Json => {
            let out = Output {
                tool_version: env!("CARGO_PKG_VERSION"),
                config: ConfigEcho {
                    run: cfg,
                    output_format: "json",
                },
                reports,
                solve,
                fixtures,
            };
            println!("{}", serde_json::to_string_pretty(&out).expect("reports serialize"));
        }
        Format::Text => {
            println!(
                "config: resolution={} tol={} seq_tol={} horizon={} max_iters={} seq_dim={}",
                cfg.resolution, cfg.tol, cfg.seq_tol, cfg.horizon, cfg.max_iters, cfg.seq_dim
            );
            for r in reports {
                print_report(r);
            }
            if let Some(res) = solve {
                print_solve(res);
            }
        }
    }
}

fn print_report(r: &CheckReport) {
    match &r.margin {
        Some(m) => println!("{}: {} (margin {})", r.check_name, r.verdict, m),
        None => println!("{}: {}", r.check_name, r.verdict),
    }
    for w in &r.witnesses {
        println!("  witness: {w}");
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
}

fn term_str(t: &Termination) -> String {
    match t {
        Termination::Converged { z } => format!("converged at {z}"),
        Termination::PreimageMissing { at_step } => format!("preimage missing at step {at_step}"),
        Termination::MaxIters => "iteration budget exhausted".to_string(),
        Termination::Diverged => "diverged".to_string(),
    }
}

fn print_solve(res: &SolveResult) {
    println!("route: {}", res.route);
    match &res.fixed_point {
        Some(z) => println!("fixed point: {z}"),
        None => println!("fixed point: none"),
    }
    if let Some((rf, rt)) = &res.residuals {
        println!("residuals: d(f z, z) = {rf}, d(T z, z) = {rt}");
    }
    match &res.data {
        RouteData::Jungck { trace } | RouteData::Direct { trace } => {
            println!("steps: {} ({})", trace.steps, term_str(&trace.termination));
            let skip = trace.distances.len().saturating_sub(5);
            let tail: Vec<String> =
                trace.distances.iter().skip(skip).map(|d| d.to_string()).collect();
            if !tail.is_empty() {
                let prefix = if skip > 0 { "..., " } else { "" };
                println!("final distances: {prefix}{}", tail.join(", "));
            }
        }
        RouteData::Ea { witness, z, u } => {
            println!("witness: {witness}");
            println!("limit: {z}");
            if let Some(u) = u {
                println!("preimage: u = {u}");
            }
        }
    }
    for n in &res.notes {
        println!("note: {n}");
    }
}

fn load_pair(path: &Path, seq_dim: Option<usize>) -> Result<MapPair, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut mf = parse_mapfile(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(dim) = seq_dim {
        mf = mf.with_seq_dim(dim.max(1));
    }
    let f = mf
        .get("f")
        .ok_or_else(|| format!("{}: no map named 'f'", path.display()))?
        .clone();
    let t = mf
        .get("T")
        .ok_or_else(|| format!("{}: no map named 'T'", path.display()))?
        .clone();
    let phi = match mf.phi.clone() {
        Some(m) => Some(AlteringFunction::new(m).map_err(|e| format!("phi: {e}"))?),
        None => None,
    };
    MapPair::bind(mf.space, f, t, phi).map_err(|e| e.to_string())
}

fn parse_x0(text: &str, space: &MetricSpace) -> Result<Point, String> {
    let s = text.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .unwrap_or(s);
    let coords = inner
        .split(',')
        .map(|c| Real::parse(c).map_err(|e| format!("bad coordinate '{}': {e}", c.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    match space {
        MetricSpace::Interval(_) => match <[Real; 1]>::try_from(coords) {
            Ok([v]) => Ok(Point::Scalar(v)),
            Err(got) => Err(format!("expected a scalar x0, got {} coordinates", got.len())),
        },
        MetricSpace::SeqSpace { dim, .. } => {
            if coords.len() == 1 {
                // scalar broadcast: constant sequence
                Ok(Point::Vector(vec![coords[0].clone(); *dim]))
            } else if coords.len() == *dim {
                Ok(Point::Vector(coords))
            } else {
                Err(format!("expected {dim} coordinates, got {}", coords.len()))
            }
        }
    }
}

/// Checks gating `verify`: the hypotheses under which the common fixed
/// point is guaranteed (the remaining reports are informational).
const VERIFY_GATE: [&str; 4] =
    ["weakly_contractive", "weak_compatibility", "ea_witness", "f_range_closed"];

fn cmd_verify(pair: &MapPair, cfg: &RunConfig) -> (Vec<CheckReport>, u8) {
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
    let ok = VERIFY_GATE
        .iter()
        .all(|g| reports.iter().any(|r| r.check_name == *g && r.passed()));
    (reports, if ok { 0 } else { 1 })
}

fn cmd_solve(
    pair: &MapPair,
    x0: &Point,
    route: Option<Route>,
    cfg: &RunConfig,
) -> (Vec<CheckReport>, Option<SolveResult>, u8) {
    let mut reports = Vec::new();
    let run_ea = |reports: &mut Vec<CheckReport>| {
        let (witness, report) =
            search_ea_witness(pair, cfg.resolution, &cfg.tol, cfg.seq_tol, cfg.horizon);
        reports.push(report);
        witness.map(|w| ea_solve(pair, &w, &cfg.tol))
    };
    let result = match route {
        Some(Route::Jungck) => Some(jungck_iterate(pair, x0, &cfg.tol, cfg.max_iters)),
        Some(Route::Direct) => Some(direct_fixed_point(
            &pair.space,
            &pair.t,
            pair.phi.as_ref(),
            x0,
            &cfg.tol,
            cfg.direct_max_iters(),
        )),
        Some(Route::Ea) => run_ea(&mut reports),
        None => {
            let range = check_range_inclusion(pair, cfg.resolution, &cfg.tol);
            let range_ok = range.passed();
            reports.push(range);
            if range_ok {
                Some(jungck_iterate(pair, x0, &cfg.tol, cfg.max_iters))
            } else {
                run_ea(&mut reports).or_else(|| {
                    pair.f.is_identity().then(|| {
                        direct_fixed_point(
                            &pair.space,
                            &pair.t,
                            pair.phi.as_ref(),
                            x0,
                            &cfg.tol,
                            cfg.direct_max_iters(),
                        )
                    })
                })
            }
        }
    };
    match result {
        Some(res) => {
            let code = match &res.fixed_point {
                Some(z) => {
                    reports.push(verify_common_fixed_point(pair, z, &cfg.tol));
                    0
                }
                None => 1,
            };
            (reports, Some(res), code)
        }
        None => (reports, None, 1),
    }
}

fn cmd_gallery(
    ids: &[String],
    cfg: &RunConfig,
) -> Result<(Vec<(Fixture, FixtureRun)>, u8), String> {
    let ids: Vec<FixtureId> = if ids.is_empty() {
        fixture_ids()
    } else {
        ids.iter()
            .map(|s| s.parse::<FixtureId>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?
    };
    // Fixtures are independent; run them concurrently, report in id order.
    let runs: Vec<(Fixture, FixtureRun)> = thread::scope(|scope| {
        let handles: Vec<_> = ids
            .iter()
            .map(|&id| {
                scope.spawn(move || {
                    let fx = load_fixture(id, cfg.seq_dim);
                    let run = run_fixture(&fx, cfg);
                    (fx, run)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fixture run panicked")).collect()
    });
    let ok = runs.iter().all(|(_, r)| r.diffs.is_empty());
    Ok((runs, if ok { 0 } else { 1 }))
}

fn print_gallery_table(items: &[(Fixture, FixtureRun)]) {
    let mut rows: Vec<[String; 5]> = vec![[
        "fixture".to_string(),
        "check".to_string(),
        "expected".to_string(),
        "actual".to_string(),
        "margin".to_string(),
    ]];
    for (fx, run) in items {
        let mut names: Vec<&str> = fx.expected.iter().map(|(n, _)| *n).collect();
        names.sort_unstable();
        for name in names {
            let want = fx.expected.iter().find(|(n, _)| *n == name).expect("known name").1;
            let actual = run.reports.iter().find(|r| r.check_name == name);
            rows.push([
                run.id.to_string(),
                name.to_string(),
                want.to_string(),
                actual.map(|r| r.verdict.to_string()).unwrap_or_else(|| "missing".to_string()),
                actual
                    .and_then(|r| r.margin.as_ref())
                    .map(|m| m.to_string())
                    .unwrap_or_else(|| "-".to_string()),
            ]);
        }
        let show = |p: &Option<Point>| {
            p.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "none".to_string())
        };
        rows.push([
            run.id.to_string(),
            "fixed_point".to_string(),
            show(&fx.expected_fixed_point),
            show(&run.solve.as_ref().and_then(|s| s.fixed_point.clone())),
            "-".to_string(),
        ]);
    }
    let mut widths = [0usize; 5];
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    for row in &rows {
        let line = row
            .iter()
            .enumerate()
            .map(|(i, cell)| format!("{:<width$}", cell, width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ");
        println!("{}", line.trim_end());
    }
    let total = items.len();
    let matching = items.iter().filter(|(_, r)| r.diffs.is_empty()).count();
    println!();
    if matching == total {
        println!("{matching}/{total} fixtures match their expected outcomes");
    } else {
        let failed: Vec<String> = items
            .iter()
            .filter(|(_, r)| !r.diffs.is_empty())
            .map(|(_, r)| r.id.to_string())
            .collect();
        println!("{matching}/{total} fixtures match; mismatches in: {}", failed.join(", "));
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    let cfg = cli.config()?;
    match &cli.command {
        Command::Verify { file } => {
            let pair = load_pair(file, cli.seq_dim)?;
            let (reports, code) = cmd_verify(&pair, &cfg);
            emit(cli.format, &cfg, &reports, None, None);
            Ok(code)
        }
        Command::Solve { file, x0, route } => {
            let pair = load_pair(file, cli.seq_dim)?;
            let route = match route.as_str() {
                "auto" => None,
                other => Some(other.parse::<Route>()?),
            };
            let x0 = parse_x0(x0, &pair.space)?;
            if !pair.space.contains(&x0) {
                return Err(format!("x0 = {x0} lies outside the space"));
            }
            let (reports, solve, code) = cmd_solve(&pair, &x0, route, &cfg);
            emit(cli.format, &cfg, &reports, solve.as_ref(), None);
            if solve.is_none() && cli.format == Format::Text {
                eprintln!(
                    "no applicable route: T(X) is not contained in f(X) (jungck), \
                     no property-(E.A) witness was found (ea), and f is not the identity (direct)"
                );
            }
            Ok(code)
        }
        Command::Gallery { ids } => {
            let (items, code) = cmd_gallery(ids, &cfg)?;
            match cli.format {
                Format::Json => {
                    let fixtures: Vec<FixtureRun> =
                        items.iter().map(|(_, r)| r.clone()).collect();
                    emit(cli.format, &cfg, &[], None, Some(&fixtures));
                }
                Format::Text => print_gallery_table(&items),
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
