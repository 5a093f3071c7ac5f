use clap::Args;
use gapscope_core::rational::parse_rational;
use gapscope_core::torus::{is_prime, many_gaps_construction, ManyGapsCertificate, Perturbation};
use gapscope_core::GapError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{default_from_flags, joined, rational, text};
use crate::{usage, Assertion, CliError, Ctx, Report, Table};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TorusGapsArgs {
    /// Distinct odd primes for a single certificate.
    #[arg(long, value_delimiter = ',')]
    pub primes: Vec<u64>,

    /// Certify every set of distinct odd primes with product at most this.
    #[arg(long)]
    pub max_product: Option<u64>,

    /// Smallest number of primes in a `--max-product` sweep.
    #[arg(long, default_value_t = 1)]
    pub min_k: usize,

    /// Perturbation `s` as a rational; defaults to `1 / (2 k N^2)`.
    #[arg(long)]
    pub s: Option<String>,

    /// Also emit the orbit points of a single certificate.
    #[arg(long)]
    pub points: bool,
}

default_from_flags!(TorusGapsArgs);

/// Increasing tuples of distinct odd primes with product at most `bound`.
pub fn prime_tuples(bound: u64, min_k: usize) -> Vec<Vec<u64>> {
    let primes: Vec<u64> = (3..=bound).step_by(2).filter(|&p| is_prime(p)).collect();
    let mut out = Vec::new();
    let mut stack: Vec<u64> = Vec::new();
    fn extend(primes: &[u64], from: usize, product: u64, bound: u64, min_k: usize, stack: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        for i in from..primes.len() {
            let next = product * primes[i];
            if next > bound {
                break;
            }
            stack.push(primes[i]);
            if stack.len() >= min_k {
                out.push(stack.clone());
            }
            extend(primes, i + 1, next, bound, min_k, stack, out);
            stack.pop();
        }
    }
    extend(&primes, 0, 1, bound, min_k, &mut stack, &mut out);
    out
}

pub fn run(args: &TorusGapsArgs, _ctx: Ctx) -> Result<Report, CliError> {
    let mut tuples = Vec::new();
    if !args.primes.is_empty() {
        tuples.push(args.primes.clone());
    }
    if let Some(bound) = args.max_product {
        tuples.extend(prime_tuples(bound, args.min_k.max(1)));
    }
    if tuples.is_empty() {
        return usage("give --primes or --max-product");
    }
    let s = match &args.s {
        Some(text) => Perturbation::Value(parse_rational(text)?),
        None => Perturbation::Auto,
    };
    let outcomes: Vec<Result<ManyGapsCertificate, GapError>> = tuples.par_iter().map(|t| many_gaps_construction(t, s)).collect();

    let mut summary = Table::new("torus-gaps", &["tuple_id", "primes", "N", "k", "s", "a", "signs", "nnd_count", "status"]);
    let mut terms = Table::new(
        "terms",
        &["tuple_id", "j", "prime", "inverse", "a", "sign", "dist_sq", "formula_sq", "nearest_is_origin", "unique_nearest", "formula_matches"],
    );
    let mut cert_fail = None;
    let mut nnd_fail = None;
    let mut single = None;
    for (id, (primes, outcome)) in tuples.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok(c) => {
                if c.nnd_count < c.k() && nnd_fail.is_none() {
                    nnd_fail = Some((format!("|NND| = {} < k = {}", c.nnd_count, c.k()), json!(c)));
                }
                summary.push(vec![
                    json!(id),
                    joined(&c.primes),
                    json!(c.n_points),
                    json!(c.k()),
                    rational(&c.s),
                    joined(&c.indices),
                    joined(&c.signs),
                    json!(c.nnd_count),
                    text("certified"),
                ]);
                for (j, v) in c.verdicts.iter().enumerate() {
                    terms.push(vec![
                        json!(id),
                        json!(j),
                        json!(c.primes[j]),
                        json!(c.inverses[j]),
                        json!(c.indices[j]),
                        json!(c.signs[j]),
                        rational(&c.distances_sq[j]),
                        rational(&c.formula_sq[j]),
                        json!(v.nearest_is_origin),
                        json!(v.unique_nearest),
                        json!(v.formula_matches),
                    ]);
                }
                if tuples.len() == 1 {
                    single = Some(c);
                }
            }
            Err(e @ (GapError::CertificateFailure { .. } | GapError::Overflow(_))) => {
                if cert_fail.is_none() {
                    let s_text = args.s.clone().unwrap_or_else(|| "1/(2kN^2)".into());
                    cert_fail = Some((e.to_string(), json!({ "primes": primes, "s": s_text, "error": e.to_string() })));
                }
                let n: u64 = primes.iter().product();
                summary.push(vec![json!(id), joined(primes), json!(n), json!(primes.len()), Value::Null, text(""), text(""), Value::Null, text("failed")]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut tables = vec![summary, terms];
    if let (true, Some(c)) = (args.points, &single) {
        let mut orbit = Table::new("orbit", &["i", "coords"]);
        for (i, p) in c.orbit().points.iter().enumerate() {
            orbit.push(vec![json!(i), joined(p.0.iter().map(|q| gapscope_core::rational::format_rational(q)))]);
        }
        tables.push(orbit);
    }
    let checked = tuples.len();
    Ok(Report {
        tables,
        assertions: vec![
            Assertion::check("many-gaps certificate", checked, "nearest neighbors, exact distances and distinctness verified", cert_fail),
            Assertion::check("nnd classes >= k", checked, "every orbit has at least k nearest-neighbor distances", nnd_fail),
        ],
    })
}
