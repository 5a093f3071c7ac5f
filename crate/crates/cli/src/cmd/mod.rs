//! One module per subcommand. Every parameter struct doubles as the JSON
//! config schema: unknown keys are rejected and missing keys take the flag
//! defaults.

pub mod geo;
pub mod klein;
pub mod orbit;
pub mod packing;
pub mod three_gap;
pub mod torus_gaps;

use clap::{Args, FromArgMatches};
use gapscope_core::model::ModelSpace;
use gapscope_core::packing::PackingSpace;
use gapscope_core::rational::{format_rational, parse_rational};
use gapscope_core::torus::TorusLattice;
use gapscope_core::Rational;
use serde_json::Value;

use crate::{usage, CliError};

/// Defaults exactly as clap would fill them in for an empty command line.
pub(crate) fn clap_default<T: Args + FromArgMatches>() -> T {
    let cmd = T::augment_args(clap::Command::new("defaults"));
    T::from_arg_matches(&cmd.get_matches_from(["defaults"])).expect("flag defaults parse")
}

macro_rules! default_from_flags {
    ($t:ty) => {
        impl Default for $t {
            fn default() -> Self {
                crate::cmd::clap_default()
            }
        }
    };
}
pub(crate) use default_from_flags;

pub(crate) fn text(s: impl ToString) -> Value {
    Value::String(s.to_string())
}

pub(crate) fn rational(q: &Rational) -> Value {
    Value::String(format_rational(q))
}

pub(crate) fn joined<T: ToString>(items: impl IntoIterator<Item = T>) -> Value {
    Value::String(items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"))
}

pub(crate) fn parse_rationals(text: &str) -> Result<Vec<Rational>, CliError> {
    text.split(',').map(|t| parse_rational(t.trim()).map_err(CliError::from)).collect()
}

pub(crate) fn v3(name: &str, xs: &[f64]) -> Result<[f64; 3], CliError> {
    match xs {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => usage(format!("--{name} needs three coordinates, got {}", xs.len())),
    }
}

fn split_desc(desc: &str) -> (&str, &str) {
    desc.split_once(':').map(|(k, a)| (k.trim(), a.trim())).unwrap_or((desc.trim(), ""))
}

fn numbers(desc: &str, args: &str) -> Result<Vec<f64>, CliError> {
    if args.is_empty() {
        return Ok(Vec::new());
    }
    args.split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad number {a:?} in {desc:?}"))))
        .collect()
}

fn dimension(desc: &str, x: f64) -> Result<usize, CliError> {
    if x >= 1.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        usage(format!("bad dimension in {desc:?}"))
    }
}

/// `sphere:k[,R]`, `rp:k`, `euclidean:k`, `hyperbolic:k,kappa`,
/// `torus:L1,...,Lk` (rational sides) or `product:A+B+...`.
pub fn parse_model_space(desc: &str) -> Result<ModelSpace, CliError> {
    let (kind, args) = split_desc(desc);
    if kind == "product" {
        let factors = args.split('+').map(parse_model_space).collect::<Result<Vec<_>, _>>()?;
        return Ok(gapscope_core::model::product_space(factors)?);
    }
    if kind == "torus" {
        return Ok(ModelSpace::Torus(TorusLattice::rectangular(parse_rationals(args)?)?));
    }
    let nums = numbers(desc, args)?;
    Ok(match (kind, nums.as_slice()) {
        ("sphere", [k]) => ModelSpace::sphere(dimension(desc, *k)?),
        ("sphere", [k, r]) if *r > 0.0 => ModelSpace::Sphere { k: dimension(desc, *k)?, radius: *r },
        ("rp", [k]) => ModelSpace::Projective { k: dimension(desc, *k)? },
        ("euclidean", [k]) => ModelSpace::Euclidean { k: dimension(desc, *k)? },
        ("hyperbolic", [k, kappa]) => ModelSpace::hyperbolic(dimension(desc, *k)?, *kappa)?,
        _ => return usage(format!("unknown space {desc:?}")),
    })
}

/// `euclidean:k`, `sphere:k` or `hyperbolic:k,kappa`.
pub fn parse_packing_space(desc: &str) -> Result<PackingSpace, CliError> {
    let (kind, args) = split_desc(desc);
    let nums = numbers(desc, args)?;
    Ok(match (kind, nums.as_slice()) {
        ("euclidean", [k]) => PackingSpace::Euclidean { k: dimension(desc, *k)? },
        ("sphere", [k]) => PackingSpace::Sphere { k: dimension(desc, *k)? },
        ("hyperbolic", [k, kappa]) if *kappa < 0.0 => PackingSpace::Hyperbolic { k: dimension(desc, *k)?, kappa: *kappa },
        _ => return usage(format!("unknown packing space {desc:?}")),
    })
}
