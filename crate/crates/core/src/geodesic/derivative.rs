//! Second derivatives of `f^2` where
//! `f(x, y) = dist(gamma(s + x + s y), gamma(t + x + t y))` at a
//! self-intersection `gamma(s) = gamma(t)` with crossing angle `alpha`.

use serde::Serialize;

use super::distance::intrinsic_distance;
use super::intersect::{CurvePiece, IntersectionRecord};
use super::surface::Surface;
use crate::error::{domain, GapError, Result};
use crate::klein::{KleinCrossing, KleinGeodesic, KleinQuotient};

pub const DEFAULT_XIS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeTriple {
    /// Along `(1, 0)`.
    pub d1: f64,
    /// Along `(0, 1)`.
    pub d2: f64,
    /// Along `(1, 1)`.
    pub d3: f64,
}

impl DerivativeTriple {
    pub fn as_array(&self) -> [f64; 3] {
        [self.d1, self.d2, self.d3]
    }

    /// Largest `|a - b| / max(|b|, floor)` over the three components.
    pub fn max_relative_error(&self, exact: &DerivativeTriple, floor: f64) -> f64 {
        self.as_array()
            .iter()
            .zip(exact.as_array())
            .map(|(a, b)| (a - b).abs() / b.abs().max(floor))
            .fold(0.0, f64::max)
    }
}

pub fn derivative_triple_analytic(s: f64, t: f64, alpha: f64) -> DerivativeTriple {
    let c = alpha.cos();
    let d1 = 4.0 - 4.0 * c;
    let d2 = 2.0 * s * s + 2.0 * t * t - 4.0 * s * t * c;
    DerivativeTriple { d1, d2, d3: d2 + d1 * (1.0 + s + t) }
}

/// Central second differences of `f2` along the three directions at each
/// `xi`, combined by two rounds of Richardson extrapolation when three
/// halving steps are given.
pub fn fd_triple<F>(f2: F, xis: &[f64]) -> Result<DerivativeTriple>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if xis.is_empty() || xis.iter().any(|x| !(*x > 0.0)) {
        return domain("finite-difference steps must be positive");
    }
    let center = f2(0.0, 0.0)?;
    let mut out = [0.0; 3];
    for (slot, (dx, dy)) in out.iter_mut().zip([(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]) {
        let diffs = xis
            .iter()
            .map(|&xi| Ok((f2(xi * dx, xi * dy)? - 2.0 * center + f2(-xi * dx, -xi * dy)?) / (xi * xi)))
            .collect::<Result<Vec<f64>>>()?;
        *slot = richardson(&diffs);
    }
    Ok(DerivativeTriple { d1: out[0], d2: out[1], d3: out[2] })
}

/// Eliminates the `xi^2` and `xi^4` error terms for successive halvings.
fn richardson(d: &[f64]) -> f64 {
    match d {
        [a] => *a,
        [a, b] => (4.0 * b - a) / 3.0,
        [a, b, c, ..] => {
            let r1 = (4.0 * b - a) / 3.0;
            let r2 = (4.0 * c - b) / 3.0;
            (16.0 * r2 - r1) / 15.0
        }
        [] => f64::NAN,
    }
}

/// Finite-difference triple on a surface, with `gamma` read off the
/// interpolated trajectory and distances from boundary-value shooting.
pub fn derivative_triple_fd(
    surface: &Surface,
    curve: &CurvePiece,
    record: &IntersectionRecord,
    eps_match: f64,
    xis: &[f64],
) -> Result<DerivativeTriple> {
    let (s, t) = (record.s, record.t);
    if !(s < t) || (curve.eval(s).0 - curve.eval(t).0).norm() > eps_match {
        return domain("not a certified self-intersection");
    }
    fd_triple(
        |x, y| {
            let a = curve.eval(s + x + s * y).0;
            let b = curve.eval(t + x + t * y).0;
            let est = intrinsic_distance(surface, &a, &b, None)?;
            if est.warned() {
                return Err(GapError::Domain(format!("shooting failed at offsets ({x}, {y})")));
            }
            Ok(est.distance * est.distance)
        },
        xis,
    )
}

/// Finite-difference triple on the flat Klein bottle using exact crossing
/// data and the quotient distance.
pub fn derivative_triple_fd_klein(
    k: &KleinQuotient,
    g: &KleinGeodesic,
    crossing: &KleinCrossing,
    xis: &[f64],
) -> Result<DerivativeTriple> {
    let (s, t) = (crossing.s_arc, crossing.t_arc);
    fd_triple(
        |x, y| {
            let d = k.distance_f64(g.at_arc_f64(s + x + s * y), g.at_arc_f64(t + x + t * y));
            Ok(d * d)
        },
        xis,
    )
}
