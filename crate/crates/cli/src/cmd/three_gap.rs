use clap::{Args, ValueEnum};
use gapscope_core::circle::{three_gap_report, CircleMetric, Rotation, THREE};
use gapscope_core::GapError;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{default_from_flags, joined, text};
use crate::{usage, Assertion, CliError, Ctx, Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Arc,
    Chord,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThreeGapArgs {
    /// Rotations: `a/b` or decimals (exact), `~x` (floating), `golden`, `sqrt2`.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<String>,

    /// Orbit lengths, paired with every `--p`.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,

    /// Random exact sweep `COUNT,MAX_DENOMINATOR`.
    #[arg(long)]
    pub sweep: Option<String>,

    /// Largest orbit length drawn by `--sweep`.
    #[arg(long, default_value_t = 1000)]
    pub max_n: usize,

    #[arg(long, value_enum, default_value_t = MetricArg::Arc)]
    pub metric: MetricArg,
}

default_from_flags!(ThreeGapArgs);

fn parse_sweep(text: &str) -> Result<(usize, i128), CliError> {
    let parsed = text.split_once(',').and_then(|(c, d)| Some((c.trim().parse().ok()?, d.trim().parse().ok()?)));
    match parsed {
        Some((count, max_den)) if max_den >= 2 => Ok((count, max_den)),
        _ => usage(format!("--sweep expects COUNT,MAX_DENOMINATOR with MAX_DENOMINATOR >= 2, got {text:?}")),
    }
}

/// Draws `count` rotations `a/q` with `2 <= q <= max_den`, `0 < a < q`, and
/// orbit lengths in `1..=max_n`.
pub fn sweep_cases(seed: u64, count: usize, max_den: i128, max_n: usize) -> Vec<(String, usize)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q = rng.random_range(2..=max_den);
            let a = rng.random_range(1..q);
            (format!("{a}/{q}"), rng.random_range(1..=max_n))
        })
        .collect()
}

pub fn run(args: &ThreeGapArgs, ctx: Ctx) -> Result<Report, CliError> {
    let mut cases: Vec<(String, usize)> = Vec::new();
    if !args.p.is_empty() {
        if args.n.is_empty() {
            return usage("--p needs at least one --n");
        }
        for p in &args.p {
            cases.extend(args.n.iter().map(|&n| (p.clone(), n)));
        }
    }
    if let Some(sweep) = &args.sweep {
        let (count, max_den) = parse_sweep(sweep)?;
        if args.max_n == 0 {
            return usage("--max-n must be at least 1");
        }
        cases.extend(sweep_cases(ctx.seed, count, max_den, args.max_n));
    }
    if cases.is_empty() {
        return usage("give --p and --n, or --sweep");
    }
    let rotations = cases.iter().map(|(p, _)| Rotation::parse(p)).collect::<Result<Vec<_>, _>>()?;
    let metric = match args.metric {
        MetricArg::Arc => CircleMetric::Arc,
        MetricArg::Chord => CircleMetric::Chord,
    };
    let outcomes: Vec<Result<Option<_>, GapError>> = rotations
        .par_iter()
        .zip(&cases)
        .map(|(&rot, &(_, n))| match three_gap_report(rot, n, metric) {
            Ok(r) => Ok(Some(r)),
            Err(GapError::DegenerateOrbit(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();

    let mut table = Table::new(
        "three-gap",
        &["case_id", "p", "n", "status", "distinct_points", "gap_count", "nnd_count", "gaps", "nnd_values"],
    );
    let (mut gap_fail, mut nnd_fail) = (None, None);
    for (id, ((p, n), outcome)) in cases.iter().zip(outcomes).enumerate() {
        let instance = |extra: Value| json!({ "case_id": id, "p": p, "n": n, "metric": args.metric, "observed": extra });
        match outcome {
            Ok(Some(r)) => {
                if r.gap_count > THREE && gap_fail.is_none() {
                    gap_fail = Some((format!("{} circular gaps > 3", r.gap_count), instance(json!(r.gaps))));
                }
                if r.nnd_count > THREE && nnd_fail.is_none() {
                    nnd_fail = Some((format!("{} NND classes > 3", r.nnd_count), instance(json!(r.nnd_values))));
                }
                table.push(vec![
                    json!(id),
                    text(&r.p),
                    json!(n),
                    text("ok"),
                    json!(r.distinct_points),
                    json!(r.gap_count),
                    json!(r.nnd_count),
                    joined(&r.gaps),
                    joined(&r.nnd_values),
                ]);
            }
            Ok(None) => table.push(vec![json!(id), text(p), json!(n), text("degenerate"), json!(1), json!(0), json!(0), text(""), text("")]),
            Err(GapError::BoundViolated { bound, observed, context }) => {
                let cx = instance(json!(context));
                let detail = format!("{observed} > {bound}: {context}");
                if context.contains("gap") {
                    gap_fail.get_or_insert((detail, cx));
                } else {
                    nnd_fail.get_or_insert((detail, cx));
                }
                table.push(vec![json!(id), text(p), json!(n), text("violated"), Value::Null, Value::Null, Value::Null, text(""), text("")]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let checked = table.rows.len();
    Ok(Report {
        tables: vec![table],
        assertions: vec![
            Assertion::check("circular gaps <= 3", checked, "every orbit has at most 3 gap lengths", gap_fail),
            Assertion::check("nnd classes <= 3", checked, "every orbit has at most 3 nearest-neighbor distances", nnd_fail),
        ],
    })
}
