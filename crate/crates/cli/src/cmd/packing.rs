use clap::Args;
use gapscope_core::packing::{
    euclidean_packing_bound, greedy_packing, hyperbolic_monotonicity_scan, verify_packing, GreedyOptions, PackingResult,
    PackingSpace,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{default_from_flags, joined, parse_packing_space};
use crate::{usage, Assertion, CliError, Ctx, Report, Table};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PackingArgs {
    /// `euclidean:k`, `sphere:k` or `hyperbolic:k,kappa`.
    #[arg(long, default_value = "euclidean:2")]
    pub space: String,

    /// Radii `r`: points lie in the open ball `B(center, r)` and are
    /// pairwise at distance at least `r`.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub radius: Vec<f64>,

    #[arg(long, default_value_t = 8)]
    pub trials: usize,

    /// Candidate points sampled per trial.
    #[arg(long, default_value_t = 256)]
    pub candidates: usize,

    /// Hyperbolic only: carry each certificate outward to the next radius.
    #[arg(long)]
    pub nested: bool,
}

default_from_flags!(PackingArgs);

fn points_rows(table: &mut Table, res: &PackingResult) {
    for (i, p) in res.points.iter().enumerate() {
        table.push(vec![json!(res.radius), json!(i), joined(p), json!(res.center_distances[i])]);
    }
}

pub fn run(args: &PackingArgs, ctx: Ctx) -> Result<Report, CliError> {
    let space = parse_packing_space(&args.space)?;
    if args.radius.is_empty() || args.radius.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return usage("--radius needs positive values");
    }
    let opts = GreedyOptions { trials: args.trials, seed: ctx.seed, candidates: args.candidates };
    let mut table = Table::new("packing", &["radius", "count", "greedy_count", "nested_count", "bound", "valid", "boundary_pairs"]);
    let mut points = Table::new("points", &["radius", "index", "coords", "center_distance"]);
    let bound = match space {
        PackingSpace::Euclidean { k } => Some(euclidean_packing_bound(k)?),
        _ => None,
    };
    let mut results = Vec::new();
    if args.nested {
        let PackingSpace::Hyperbolic { k, kappa } = space else {
            return usage("--nested applies to hyperbolic spaces only");
        };
        for e in hyperbolic_monotonicity_scan(kappa, k, &args.radius, &opts)? {
            results.push((e.certificate, Some((e.greedy_count, e.nested_count))));
        }
    } else {
        for &r in &args.radius {
            results.push((greedy_packing(&space, r, &opts)?, None));
        }
    }
    let (mut invalid, mut over, mut decrease) = (None, None, None);
    let mut previous: Option<(f64, usize)> = None;
    for (res, scan) in &results {
        let verdict = verify_packing(&space, &space.center(), res.radius, &res.points);
        let instance = || json!({ "space": args.space, "radius": res.radius, "seed": ctx.seed, "points": res.points });
        if !verdict.valid && invalid.is_none() {
            invalid = Some((format!("{:?}", verdict.violation), instance()));
        }
        if let Some(b) = bound.filter(|&b| res.count > b) {
            over.get_or_insert((format!("{} points > {b}", res.count), instance()));
        }
        if let (true, Some((r0, c0))) = (args.nested, previous) {
            if res.count < c0 && decrease.is_none() {
                decrease = Some((format!("count {} at r = {} after {c0} at r = {r0}", res.count, res.radius), instance()));
            }
        }
        previous = Some((res.radius, res.count));
        let (greedy, nested) = match scan {
            Some((g, n)) => (json!(g), json!(n)),
            None => (json!(res.count), Value::Null),
        };
        table.push(vec![json!(res.radius), json!(res.count), greedy, nested, json!(bound), json!(verdict.valid), json!(verdict.boundary_pairs)]);
        points_rows(&mut points, res);
    }
    let checked = results.len();
    let mut assertions = vec![Assertion::check("valid packing", checked, "every certificate verifies", invalid)];
    if let Some(b) = bound {
        assertions.push(Assertion::check("euclidean packing <= 3^k", checked, format!("at most {b} points"), over));
    }
    if args.nested {
        assertions.push(Assertion::check("nondecreasing in r", checked, "counts never drop as r grows", decrease));
    }
    Ok(Report { tables: vec![table, points], assertions })
}
