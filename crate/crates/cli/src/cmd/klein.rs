use clap::Args;
use gapscope_core::klein::{klein_geodesic_intersections, unfold_into_domain, KleinGeodesic, KleinQuotient};
use gapscope_core::rational::parse_rational;
use gapscope_core::Rational;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{default_from_flags, joined, parse_rationals, rational};
use crate::{usage, Assertion, CliError, Ctx, Report, Table};

/// A geodesic segment on the flat Klein bottle `[0, W] x [0, H]` with the
/// glide identification `(x, y) ~ (x + W, -y)`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KleinArgs {
    #[arg(long, default_value = "1")]
    pub width: String,

    #[arg(long, default_value = "1")]
    pub height: String,

    /// Rational start point `x,y`.
    #[arg(long, default_value = "1/7,2/9")]
    pub start: String,

    /// Integer direction `(run, rise)`.
    #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
    pub rise: i64,

    #[arg(long, default_value_t = 3, allow_negative_numbers = true)]
    pub run: i64,

    /// Rational arc length.
    #[arg(long, default_value = "19/2")]
    pub length: String,
}

default_from_flags!(KleinArgs);

impl KleinArgs {
    pub fn build(&self) -> Result<(KleinQuotient, KleinGeodesic), CliError> {
        let k = KleinQuotient::new(parse_rational(&self.width)?, parse_rational(&self.height)?)?;
        let start: Vec<Rational> = parse_rationals(&self.start)?;
        let [x, y] = start[..] else {
            return usage("--start needs two coordinates");
        };
        let g = KleinGeodesic::from_slope([x, y], self.rise, self.run, parse_rational(&self.length)?)?;
        Ok((k, g))
    }
}

pub fn run(args: &KleinArgs, _ctx: Ctx) -> Result<Report, CliError> {
    let (k, g) = args.build()?;
    let found = klein_geodesic_intersections(&k, &g);
    let mut crossings =
        Table::new("klein", &["index", "s", "t", "s_arc", "t_arc", "cos_angle", "angle", "point", "element_a", "element_b"]);
    let mut bad = None;
    for (i, c) in found.crossings.iter().enumerate() {
        let gap = k.distance_sq(&g.at(&c.s), &g.at(&c.t));
        let cos = if c.cos_angle < Rational::from_integer(0) { -c.cos_angle } else { c.cos_angle };
        if (gap != Rational::from_integer(0) || cos == Rational::from_integer(1)) && bad.is_none() {
            bad = Some((format!("crossing {i} is not a transverse coincidence"), json!({ "params": args, "crossing": c })));
        }
        crossings.push(vec![
            json!(i),
            rational(&c.s),
            rational(&c.t),
            json!(c.s_arc),
            json!(c.t_arc),
            rational(&c.cos_angle),
            json!(c.angle),
            joined(c.point.iter().map(gapscope_core::rational::format_rational)),
            json!(c.element.0),
            json!(c.element.1),
        ]);
    }
    let mut pieces = Table::new("pieces", &["index", "u_from", "u_to", "from", "to"]);
    for (i, p) in unfold_into_domain(&k, &g).iter().enumerate() {
        pieces.push(vec![
            json!(i),
            rational(&p.u_from),
            rational(&p.u_to),
            joined(p.from.iter().map(gapscope_core::rational::format_rational)),
            joined(p.to.iter().map(gapscope_core::rational::format_rational)),
        ]);
    }
    let mut overlaps = Table::new("overlaps", &["element_a", "element_b"]);
    for o in &found.overlaps {
        overlaps.push(vec![json!(o.element.0), json!(o.element.1)]);
    }
    let checked = found.crossings.len();
    Ok(Report {
        tables: vec![crossings, pieces, overlaps],
        assertions: vec![Assertion::check(
            "exact transverse crossings",
            checked,
            "both branches meet in the quotient at a nonzero angle",
            bad,
        )],
    })
}
