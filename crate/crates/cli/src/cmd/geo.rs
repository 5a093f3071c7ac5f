use clap::Args;
use gapscope_core::geodesic::{
    bgc_scan, conjugate_points, count_self_intersections, derivative_triple_analytic, derivative_triple_fd,
    derivative_triple_fd_klein, integrate_geodesic, isolated_point_diagnostic, sample_geodesic, CurvePiece, GeoConfig,
    ScanOptions, Surface, V3, DEFAULT_THETA_MIN, DEFAULT_XIS,
};
use gapscope_core::klein::klein_geodesic_intersections;
use gapscope_core::ClusterPolicy;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::klein::KleinArgs;
use super::{default_from_flags, v3};
use crate::{usage, Assertion, CliError, Ctx, Report, Table};

fn parse_surface(desc: &str) -> Result<Surface, CliError> {
    Ok(desc.parse::<Surface>()?)
}

/// Starting point and direction of one sampled geodesic; both are
/// projected onto the surface before integrating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub start: [f64; 3],
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeoScanArgs {
    /// `sphere[:R]`, `ellipsoid:a,b,c`, `torus:R,r` or `plane`.
    #[arg(long, default_value = "ellipsoid:1,1.2,1.5")]
    pub surface: String,

    /// Explicit geodesics (config file only); overrides `random_configs`.
    #[arg(skip)]
    pub starts: Vec<StartSpec>,

    /// Number of geodesics with random start and direction.
    #[arg(long, default_value_t = 4)]
    pub random_configs: usize,

    /// Sample spacings `T`.
    #[arg(long, value_delimiter = ',', default_value = "0.7")]
    pub steps: Vec<f64>,

    /// Sample counts `n`.
    #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
    pub ns: Vec<usize>,

    /// Integrator step.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,

    #[arg(long, default_value_t = ClusterPolicy::DEFAULT_TOLERANCE)]
    pub tolerance: f64,

    /// Assert `|NND| <= max_nnd` (the round sphere asserts 3 by default).
    #[arg(long)]
    pub max_nnd: Option<usize>,

    /// Emit the isolated-sample profile of the first geodesic at this scale.
    #[arg(long)]
    pub isolated_delta: Option<f64>,
}

default_from_flags!(GeoScanArgs);

fn random_starts(count: usize, seed: u64) -> Vec<StartSpec> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut gauss = || -> [f64; 3] { std::array::from_fn(|_| StandardNormal.sample(&mut rng)) };
    (0..count).map(|_| StartSpec { start: gauss(), direction: gauss() }).collect()
}

pub fn run_scan(args: &GeoScanArgs, ctx: Ctx) -> Result<Report, CliError> {
    let surface = parse_surface(&args.surface)?;
    let starts = if args.starts.is_empty() { random_starts(args.random_configs, ctx.seed) } else { args.starts.clone() };
    if starts.is_empty() {
        return usage("no geodesics to scan");
    }
    let configs: Vec<GeoConfig> = starts.iter().map(|s| GeoConfig { start: s.start, direction: s.direction }).collect();
    let opts = ScanOptions { h: args.h, policy: ClusterPolicy::tolerance(args.tolerance)? };
    let report = bgc_scan(&surface, &configs, &args.steps, &args.ns, &opts)?;

    let mut rows = Table::new("geo-scan", &["config_id", "T", "n", "nnd_count", "refined_pairs", "warnings"]);
    for r in &report.rows {
        rows.push(vec![json!(r.config_id), json!(r.step), json!(r.n), json!(r.nnd_count), json!(r.refined_pairs), json!(r.warnings)]);
    }
    let mut growth = Table::new("growth", &["n", "max_nnd"]);
    for g in &report.growth {
        growth.push(vec![json!(g.n), json!(g.max_nnd)]);
    }
    let mut configs_table = Table::new("configs", &["config_id", "start", "direction"]);
    for (i, s) in starts.iter().enumerate() {
        configs_table.push(vec![json!(i), json!(s.start), json!(s.direction)]);
    }
    let mut tables = vec![rows, growth, configs_table];
    if let Some(delta) = args.isolated_delta {
        let first = &starts[0];
        let x0 = surface.project(&V3::from(first.start))?;
        let v0 = surface.unit_tangent(&x0, &V3::from(first.direction))?;
        let (step, n) = (args.steps[0], *args.ns.iter().max().expect("nonempty"));
        let traj = integrate_geodesic(&surface, &x0, &v0, step * n as f64, args.h)?;
        let samples = sample_geodesic(&traj, step, n)?;
        let profile = isolated_point_diagnostic(&samples, |a, b| (a - b).norm(), delta)?;
        let mut t = Table::new("isolated", &["m", "isolated"]);
        for (i, c) in profile.counts.iter().enumerate() {
            t.push(vec![json!(i + 2), json!(c)]);
        }
        tables.push(t);
    }
    let bound = args.max_nnd.or(matches!(surface, Surface::Sphere { .. }).then_some(3));
    let mut assertions = Vec::new();
    if let Some(b) = bound {
        let fail = report.rows.iter().find(|r| r.nnd_count > b).map(|r| {
            let s = starts[r.config_id];
            (
                format!("|NND| = {} > {b}", r.nnd_count),
                json!({ "surface": args.surface, "start": s.start, "direction": s.direction, "T": r.step, "n": r.n, "h": args.h }),
            )
        });
        assertions.push(Assertion::check("surface nnd bound", report.rows.len(), format!("every sample has at most {b} classes"), fail));
    }
    Ok(Report { tables, assertions })
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DerivativeArgs {
    /// `klein` or a surface descriptor.
    #[arg(long, default_value = "klein")]
    pub surface: String,

    #[command(flatten)]
    pub klein: KleinArgs,

    /// Surface start point (projected).
    #[arg(long, value_delimiter = ',', default_value = "1,0.1,0.2", allow_negative_numbers = true)]
    pub point: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_value = "0,0.6,0.8", allow_negative_numbers = true)]
    pub direction: Vec<f64>,

    /// Surface geodesic length.
    #[arg(long, default_value_t = 14.0)]
    pub span: f64,

    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,

    /// Matching radius for self-intersection candidates.
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,

    #[arg(long, default_value_t = DEFAULT_THETA_MIN)]
    pub theta_min: f64,

    /// Relative tolerance; 1e-6 on the Klein bottle, 1e-3 on surfaces.
    #[arg(long)]
    pub tolerance: Option<f64>,

    /// Intersections checked at most.
    #[arg(long, default_value_t = 10)]
    pub max_records: usize,
}

default_from_flags!(DerivativeArgs);

/// Relative errors are taken against `max(|exact|, 1)` on the Klein bottle,
/// where exact values can vanish, and against `|exact|` on surfaces.
pub fn run_derivative(args: &DerivativeArgs, _ctx: Ctx) -> Result<Report, CliError> {
    let mut table = Table::new(
        "derivative-check",
        &["index", "s", "t", "angle", "fd_d1", "fd_d2", "fd_d3", "d1", "d2", "d3", "relative_error"],
    );
    let klein = args.surface == "klein";
    let tol = args.tolerance.unwrap_or(if klein { 1e-6 } else { 1e-3 });
    let mut fail = None;
    let mut record = |i: usize, s: f64, t: f64, angle: f64, fd: [f64; 3], floor: f64, instance: Value| {
        let exact = derivative_triple_analytic(s, t, angle);
        let err = fd
            .iter()
            .zip(exact.as_array())
            .map(|(a, b)| (a - b).abs() / b.abs().max(floor))
            .fold(0.0, f64::max);
        if err > tol && fail.is_none() {
            fail = Some((format!("relative error {err:e} > {tol:e} at intersection {i}"), instance));
        }
        let e = exact.as_array();
        table.push(vec![json!(i), json!(s), json!(t), json!(angle), json!(fd[0]), json!(fd[1]), json!(fd[2]), json!(e[0]), json!(e[1]), json!(e[2]), json!(err)]);
    };
    if klein {
        let (k, g) = args.klein.build()?;
        let found = klein_geodesic_intersections(&k, &g);
        for (i, c) in found.crossings.iter().take(args.max_records).enumerate() {
            let fd = derivative_triple_fd_klein(&k, &g, c, &DEFAULT_XIS)?;
            record(i, c.s_arc, c.t_arc, c.angle, fd.as_array(), 1.0, json!({ "klein": args.klein, "crossing": c }));
        }
    } else {
        let surface = parse_surface(&args.surface)?;
        let x0 = surface.project(&V3::from(v3("point", &args.point)?))?;
        let v0 = surface.unit_tangent(&x0, &V3::from(v3("direction", &args.direction)?))?;
        let traj = integrate_geodesic(&surface, &x0, &v0, args.span, args.h)?;
        let found = count_self_intersections(&traj, args.eps, args.theta_min)?;
        let curve = CurvePiece::from_trajectory(&traj);
        // the stencil reaches s(1 + 2 xi) past each branch point
        let reach = 1.0 + 2.0 * DEFAULT_XIS[0];
        let usable = found.records.iter().filter(|r| r.t * reach < traj.length).take(args.max_records);
        for (i, rec) in usable.enumerate() {
            let fd = derivative_triple_fd(&surface, &curve, rec, args.eps, &DEFAULT_XIS)?;
            let instance = json!({ "surface": args.surface, "point": args.point, "direction": args.direction, "span": args.span, "h": args.h, "record": rec });
            record(i, rec.s, rec.t, rec.angle, fd.as_array(), 1e-12, instance);
        }
    }
    let checked = table.rows.len();
    let mut assertions = vec![Assertion::check(
        "second derivatives",
        checked,
        format!("finite differences match the closed form within {tol:e}"),
        fail,
    )];
    if checked == 0 {
        assertions.push(Assertion::fail("intersections found", 0, "no usable self-intersection", json!(args)));
    }
    Ok(Report { tables: vec![table], assertions })
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConjugateArgs {
    #[arg(long, default_value = "sphere")]
    pub surface: String,

    #[arg(long, value_delimiter = ',', default_value = "1,0,0", allow_negative_numbers = true)]
    pub point: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_value = "0,1,0", allow_negative_numbers = true)]
    pub direction: Vec<f64>,

    /// Search up to this arc length.
    #[arg(long, default_value_t = 4.0)]
    pub length: f64,

    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,

    /// Assert the first conjugate time equals this.
    #[arg(long)]
    pub expect: Option<f64>,

    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    /// Assert there is no conjugate point up to `length`.
    #[arg(long)]
    pub expect_none: bool,

    /// Also rerun at `h/2` and `h/4`.
    #[arg(long)]
    pub convergence: bool,
}

default_from_flags!(ConjugateArgs);

pub fn run_conjugate(args: &ConjugateArgs, _ctx: Ctx) -> Result<Report, CliError> {
    let surface = parse_surface(&args.surface)?;
    let x0 = surface.project(&V3::from(v3("point", &args.point)?))?;
    let v0 = surface.unit_tangent(&x0, &V3::from(v3("direction", &args.direction)?))?;
    let report = conjugate_points(&surface, &x0, &v0, args.length, args.h)?;
    let mut table = Table::new("conjugate", &["index", "time"]);
    for (i, t) in report.times.iter().enumerate() {
        table.push(vec![json!(i), json!(t)]);
    }
    let mut tables = vec![table];
    if args.convergence {
        let mut conv = Table::new("convergence", &["h", "first_time"]);
        for h in [args.h, args.h / 2.0, args.h / 4.0] {
            let first = conjugate_points(&surface, &x0, &v0, args.length, h)?.first();
            conv.push(vec![json!(h), first.map_or(Value::Null, |t| json!(t))]);
        }
        tables.push(conv);
    }
    let instance = || json!({ "surface": args.surface, "point": args.point, "direction": args.direction, "length": args.length, "h": args.h, "times": report.times });
    let mut assertions = Vec::new();
    if let Some(want) = args.expect {
        let fail = match report.first() {
            Some(t) if (t - want).abs() <= args.tol => None,
            Some(t) => Some((format!("first conjugate time {t} differs from {want} by more than {:e}", args.tol), instance())),
            None => Some((format!("no conjugate point up to {}", args.length), instance())),
        };
        assertions.push(Assertion::check("first conjugate time", 1, format!("within {:e} of {want}", args.tol), fail));
    }
    if args.expect_none {
        let fail = report.first().map(|t| (format!("conjugate point at {t}"), instance()));
        assertions.push(Assertion::check("no conjugate points", 1, format!("none up to {}", args.length), fail));
    }
    Ok(Report { tables, assertions })
}
