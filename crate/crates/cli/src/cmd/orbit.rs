use clap::Args;
use gapscope_core::model::{
    isometry_orbit_spectrum, orbit, orbit_nnd_values, product_transvection, transvection, ModelIsometry, ModelPoint,
    ModelSpace,
};
use gapscope_core::rational::format_rational;
use gapscope_core::torus::TorusPoint;
use gapscope_core::{ClusterPolicy, GapError, Rational};
use rand::rngs::StdRng;
use rand::{Rng, RngExt, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{default_from_flags, parse_model_space, text};
use crate::{usage, Assertion, CliError, Ctx, Report, Table};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitArgs {
    /// `sphere:k[,R]`, `rp:k`, `euclidean:k`, `hyperbolic:k,kappa`,
    /// `torus:L1,...`, or `product:A+B+...`.
    #[arg(long, default_value = "sphere:2")]
    pub space: String,

    /// Transvection step `T`.
    #[arg(long, default_value_t = 0.7)]
    pub step: f64,

    /// Orbit lengths.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub n: Vec<usize>,

    /// Random base points and directions.
    #[arg(long, default_value_t = 10)]
    pub configs: usize,

    /// Relative clustering tolerance for floating spaces.
    #[arg(long, default_value_t = ClusterPolicy::DEFAULT_TOLERANCE)]
    pub tolerance: f64,

    /// Allowed relative error in the orbit NND identities.
    #[arg(long, default_value_t = 1e-12)]
    pub identity_tol: f64,
}

default_from_flags!(OrbitArgs);

pub fn point_json(p: &ModelPoint) -> Value {
    match p {
        ModelPoint::Vector(v) => json!(v.iter().collect::<Vec<_>>()),
        ModelPoint::Torus(t) => json!(t.0.iter().map(format_rational).collect::<Vec<_>>()),
        ModelPoint::Tuple(ps) => Value::Array(ps.iter().map(point_json).collect()),
    }
}

/// Rational torus direction `(a_1, ..., a_k) / b` sharing one small
/// denominator, so exact orbit coordinates stay small.
fn torus_direction<R: Rng + ?Sized>(k: usize, rng: &mut R) -> ModelPoint {
    let b: i128 = rng.random_range(1..=16);
    loop {
        let a: Vec<i128> = (0..k).map(|_| rng.random_range(-b..=b)).collect();
        if a.iter().any(|&x| x != 0) {
            return ModelPoint::Torus(TorusPoint(a.into_iter().map(|x| Rational::new(x, b)).collect()));
        }
    }
}

fn random_direction<R: Rng + ?Sized>(space: &ModelSpace, p: &ModelPoint, rng: &mut R) -> Result<ModelPoint, GapError> {
    match space {
        ModelSpace::Torus(l) => Ok(torus_direction(l.dim(), rng)),
        _ => space.random_unit_tangent(p, rng),
    }
}

/// A random base point and a transvection through it with step `step`;
/// product factors move at random positive speeds.
pub fn random_transvection(space: &ModelSpace, step: f64, seed: u64) -> Result<(ModelPoint, ModelPoint, ModelIsometry), GapError> {
    let mut rng = StdRng::seed_from_u64(seed);
    let p = space.random_point(&mut rng);
    match (space, &p) {
        (ModelSpace::Product(fs), ModelPoint::Tuple(ps)) => {
            let dirs = fs.iter().zip(ps).map(|(f, q)| random_direction(f, q, &mut rng)).collect::<Result<Vec<_>, _>>()?;
            let raw: Vec<f64> = (0..fs.len()).map(|_| rng.random_range(0.1..1.0)).collect();
            let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
            let speeds: Vec<f64> = raw.iter().map(|c| c / norm).collect();
            let iso = product_transvection(space, &p, &dirs, &speeds, step)?;
            Ok((p, ModelPoint::Tuple(dirs), iso))
        }
        _ => {
            let u = random_direction(space, &p, &mut rng)?;
            let iso = transvection(space, &p, &u, step)?;
            Ok((p, u, iso))
        }
    }
}

/// Per-config seed, independent of scheduling order.
pub fn config_seed(seed: u64, id: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(id as u64).rotate_left(17) ^ 0xd1b5_4a32_d192_ed03
}

/// Largest `|nnd_i - nnd_{n-i}|` and largest drop of `nnd_i` for
/// `i <= n/2`, both relative to `max(1, nnd_i)`.
pub fn identity_errors(nnd: &[f64]) -> (f64, f64) {
    let n = nnd.len() - 1;
    let sym = (0..=n).map(|i| (nnd[i] - nnd[n - i]).abs() / nnd[i].max(1.0)).fold(0.0, f64::max);
    let drop = (1..=n / 2).map(|i| (nnd[i - 1] - nnd[i]) / nnd[i].max(1.0)).fold(0.0, f64::max);
    (sym, drop)
}

struct ConfigRun {
    rows: Vec<Vec<Value>>,
    nnd_rows: Vec<Vec<Value>>,
    bound_fail: Option<(String, Value)>,
    identity_fail: Option<(String, Value)>,
}

fn run_config(space: &ModelSpace, args: &OrbitArgs, policy: ClusterPolicy, seed: u64, id: usize) -> Result<ConfigRun, CliError> {
    let (p, u, iso) = random_transvection(space, args.step, config_seed(seed, id))?;
    let max_n = *args.n.iter().max().expect("nonempty");
    let pts = orbit(space, &iso, &p, max_n)?;
    let instance = |n: usize| {
        json!({ "space": args.space, "step": args.step, "n": n, "seed": seed, "config_id": id, "base": point_json(&p), "direction": point_json(&u) })
    };
    let mut out = ConfigRun { rows: Vec::new(), nnd_rows: Vec::new(), bound_fail: None, identity_fail: None };
    for &n in &args.n {
        let nnd = orbit_nnd_values(space, &pts[..=n])?;
        let (sym, drop) = identity_errors(&nnd.real);
        if (sym > args.identity_tol || drop > args.identity_tol) && out.identity_fail.is_none() {
            out.identity_fail =
                Some((format!("symmetry error {sym:e}, monotonicity drop {drop:e} > {:e}", args.identity_tol), instance(n)));
        }
        if n == max_n {
            out.nnd_rows.extend(nnd.real.iter().enumerate().map(|(i, v)| vec![json!(id), json!(n), json!(i), json!(v)]));
        }
        let bound = space.nonnegative_curvature_bound();
        let row = match isometry_orbit_spectrum(space, &iso, &p, n, policy) {
            Ok(s) => vec![
                json!(id),
                json!(n),
                text("ok"),
                json!(s.distinct_points),
                json!(s.nnd_count),
                json!(bound),
                json!(s.min_class()),
                json!(s.max_class()),
                json!(sym),
                json!(drop),
            ],
            Err(GapError::DegenerateOrbit(_)) => {
                vec![json!(id), json!(n), text("degenerate"), json!(1), json!(0), json!(bound), Value::Null, Value::Null, json!(sym), json!(drop)]
            }
            Err(GapError::BoundViolated { bound, observed, .. }) => {
                if out.bound_fail.is_none() {
                    out.bound_fail = Some((format!("|NND| = {observed} > {bound}"), instance(n)));
                }
                vec![json!(id), json!(n), text("violated"), Value::Null, json!(observed), json!(bound), Value::Null, Value::Null, json!(sym), json!(drop)]
            }
            Err(e) => return Err(e.into()),
        };
        out.rows.push(row);
    }
    Ok(out)
}

pub fn run(args: &OrbitArgs, ctx: Ctx) -> Result<Report, CliError> {
    let space = parse_model_space(&args.space)?;
    if args.n.is_empty() || args.n.contains(&0) || args.configs == 0 {
        return usage("--n needs positive orbit lengths and --configs must be positive");
    }
    if !(args.step.is_finite() && args.step > 0.0) {
        return usage("--step must be positive");
    }
    let policy = ClusterPolicy::tolerance(args.tolerance)?;
    let runs: Vec<ConfigRun> =
        (0..args.configs).into_par_iter().map(|id| run_config(&space, args, policy, ctx.seed, id)).collect::<Result<_, _>>()?;

    let mut table = Table::new(
        "orbit-nnd",
        &["config_id", "n", "status", "distinct_points", "nnd_count", "bound", "min_class", "max_class", "symmetry_error", "monotone_drop"],
    );
    let mut nnd = Table::new("nnd", &["config_id", "n", "i", "nnd"]);
    let (mut bound_fail, mut identity_fail) = (None, None);
    for r in runs {
        table.rows.extend(r.rows);
        nnd.rows.extend(r.nnd_rows);
        bound_fail = bound_fail.or(r.bound_fail);
        identity_fail = identity_fail.or(r.identity_fail);
    }
    let checked = table.rows.len();
    let mut assertions = Vec::new();
    if let Some(b) = space.nonnegative_curvature_bound() {
        assertions.push(Assertion::check("nnd classes <= 3^k + 1", checked, format!("every orbit has at most {b} classes"), bound_fail));
    }
    assertions.push(Assertion::check(
        "orbit nnd identities",
        checked,
        format!("nnd(I^i p) = nnd(I^(n-i) p) and nondecreasing for i <= n/2, within {:e}", args.identity_tol),
        identity_fail,
    ));
    Ok(Report { tables: vec![table, nnd], assertions })
}
