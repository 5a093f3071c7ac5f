//! Circle rotations: the classical gap count and the nearest-neighbor count
//! of the orbit `{c + i*p mod 1 : i = 0..=n}` on the circle of circumference 1.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{GapError, Result};
use crate::metric::{ClusterPolicy, MetricOracle, NndSpectrum, OracleMode};
use crate::rational::{format_rational, parse_rational, rem_euclid, serde_rational, to_f64, Rational};

/// Upper bound on distinct gaps and on distinct nearest-neighbor distances.
pub const THREE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Rotation {
    Rational(#[serde(with = "serde_rational")] Rational),
    Real(f64),
}

impl Rotation {
    /// `"a/b"` or a decimal is exact; a leading `~` forces floating mode
    /// (`"~0.618"`); `golden` and `sqrt2` name the fractional parts of the
    /// golden ratio and of the square root of two.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        match text {
            "golden" => return Ok(Rotation::Real((5f64.sqrt() - 1.0) / 2.0)),
            "sqrt2" => return Ok(Rotation::Real(2f64.sqrt() - 1.0)),
            _ => {}
        }
        if let Some(real) = text.strip_prefix('~') {
            let v: f64 = real.parse().map_err(|_| GapError::Parse(format!("bad real {real:?}")))?;
            if !v.is_finite() {
                return Err(GapError::Parse(format!("non-finite rotation {real:?}")));
            }
            return Ok(Rotation::Real(v));
        }
        parse_rational(text).map(Rotation::Rational)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rotation::Rational(q) => to_f64(q),
            Rotation::Real(x) => *x,
        }
    }

    pub fn reduced(&self) -> Self {
        match self {
            Rotation::Rational(q) => Rotation::Rational(rem_euclid(q, &Rational::one())),
            Rotation::Real(x) => Rotation::Real(x.rem_euclid(1.0)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Rotation::Rational(q) => format_rational(q),
            Rotation::Real(x) => format!("~{x}"),
        }
    }
}

/// A length on the circle: exact in rational mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ArcLength {
    Exact(#[serde(with = "serde_rational")] Rational),
    Real(f64),
}

impl ArcLength {
    pub fn to_f64(&self) -> f64 {
        match self {
            ArcLength::Exact(q) => to_f64(q),
            ArcLength::Real(x) => *x,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ArcLength::Exact(q) => format_rational(q),
            ArcLength::Real(x) => format!("{x:.17e}"),
        }
    }
}

impl PartialOrd for ArcLength {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ArcLength::Exact(a), ArcLength::Exact(b)) => a.partial_cmp(b),
            (ArcLength::Real(a), ArcLength::Real(b)) => a.partial_cmp(b),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

/// Orbit residues: integer numerators over a common denominator, or floats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Residues {
    Exact { denom: i128, numers: Vec<i128> },
    Real(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationOrbit {
    pub rotation: Rotation,
    pub offset: Rotation,
    pub n: usize,
    pub residues: Residues,
}

/// Sorted distinct residues with their multiplicities in the orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinctResidues {
    pub residues: Residues,
    pub multiplicity: Vec<usize>,
}

impl DistinctResidues {
    pub fn len(&self) -> usize {
        self.multiplicity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multiplicity.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.residues, Residues::Exact { .. })
    }

    /// Gap from the `i`th residue to the next one, cyclically.
    fn gap_after(&self, i: usize) -> ArcLength {
        let m = self.len();
        match &self.residues {
            Residues::Exact { denom, numers } => {
                let next = if i + 1 == m { numers[0] + denom } else { numers[i + 1] };
                ArcLength::Exact(Rational::new(next - numers[i], *denom))
            }
            Residues::Real(xs) => {
                let next = if i + 1 == m { xs[0] + 1.0 } else { xs[i + 1] };
                ArcLength::Real(next - xs[i])
            }
        }
    }

    pub fn as_rationals(&self) -> Option<Vec<Rational>> {
        match &self.residues {
            Residues::Exact { denom, numers } => Some(numers.iter().map(|&a| Rational::new(a, *denom)).collect()),
            Residues::Real(_) => None,
        }
    }

    pub fn as_f64(&self) -> Vec<f64> {
        match &self.residues {
            Residues::Exact { denom, numers } => numers.iter().map(|&a| a as f64 / *denom as f64).collect(),
            Residues::Real(xs) => xs.clone(),
        }
    }
}

impl RotationOrbit {
    pub fn distinct(&self) -> DistinctResidues {
        match &self.residues {
            Residues::Exact { denom, numers } => {
                let mut sorted = numers.clone();
                sorted.sort_unstable();
                let (vals, mult) = run_lengths(&sorted);
                DistinctResidues { residues: Residues::Exact { denom: *denom, numers: vals }, multiplicity: mult }
            }
            Residues::Real(xs) => {
                let mut sorted = xs.clone();
                sorted.sort_by(f64::total_cmp);
                let (vals, mult) = run_lengths(&sorted);
                DistinctResidues { residues: Residues::Real(vals), multiplicity: mult }
            }
        }
    }
}

fn run_lengths<T: PartialEq + Copy>(sorted: &[T]) -> (Vec<T>, Vec<usize>) {
    let mut vals: Vec<T> = Vec::new();
    let mut mult = Vec::new();
    for &x in sorted {
        if vals.last() == Some(&x) {
            *mult.last_mut().expect("paired with vals") += 1;
        } else {
            vals.push(x);
            mult.push(1);
        }
    }
    (vals, mult)
}

pub fn rotation_orbit(p: Rotation, n: usize) -> Result<RotationOrbit> {
    rotation_orbit_with_offset(p, Rotation::Rational(Rational::zero()), n)
}

/// `{offset + i*p mod 1 : i = 0..=n}`; exact when both inputs are rational.
pub fn rotation_orbit_with_offset(p: Rotation, offset: Rotation, n: usize) -> Result<RotationOrbit> {
    if n == 0 {
        return Err(GapError::Domain("orbit length n must be at least 1".into()));
    }
    let (p, offset) = (p.reduced(), offset.reduced());
    let residues = match (p, offset) {
        (Rotation::Rational(a), Rotation::Rational(c)) => {
            let denom = a.denom().lcm(c.denom());
            let step = a.numer() * (denom / a.denom());
            let start = c.numer() * (denom / c.denom());
            let mut numers = Vec::with_capacity(n + 1);
            let mut cur = start;
            for _ in 0..=n {
                numers.push(cur);
                cur += step;
                if cur >= denom {
                    cur -= denom;
                }
            }
            Residues::Exact { denom, numers }
        }
        _ => {
            let (a, c) = (p.to_f64(), offset.to_f64());
            Residues::Real((0..=n).map(|i| (c + i as f64 * a).rem_euclid(1.0)).collect())
        }
    };
    Ok(RotationOrbit { rotation: p, offset, n, residues })
}

fn require_two(d: &DistinctResidues) -> Result<()> {
    if d.len() < 2 {
        return Err(GapError::DegenerateOrbit(format!("{} distinct residue(s); need at least 2", d.len())));
    }
    Ok(())
}

/// Sorted distinct gap values between cyclically consecutive residues,
/// wraparound gap included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSpectrum {
    pub gaps: Vec<ArcLength>,
    pub exact: bool,
}

impl GapSpectrum {
    pub fn count(&self) -> usize {
        self.gaps.len()
    }
}

pub fn circular_gap_spectrum(orbit: &RotationOrbit) -> Result<GapSpectrum> {
    gap_spectrum_of(&orbit.distinct(), ClusterPolicy::default())
}

pub fn gap_spectrum_of(d: &DistinctResidues, policy: ClusterPolicy) -> Result<GapSpectrum> {
    require_two(d)?;
    let mut gaps: Vec<ArcLength> = (0..d.len()).map(|i| d.gap_after(i)).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let exact = d.is_exact();
    let mut distinct: Vec<ArcLength> = Vec::new();
    for g in gaps {
        let merge = match (distinct.last(), exact, policy) {
            (None, _, _) => false,
            (Some(prev), true, _) => *prev == g,
            (Some(prev), false, ClusterPolicy::Tolerance(tau)) => {
                g.to_f64() - prev.to_f64() <= tau * prev.to_f64().max(1.0)
            }
            (Some(prev), false, ClusterPolicy::Exact) => *prev == g,
        };
        if !merge {
            distinct.push(g);
        }
    }
    if exact && distinct.len() > THREE {
        return Err(GapError::BoundViolated {
            bound: THREE,
            observed: distinct.len(),
            context: "circular gap count of a rational rotation orbit".into(),
        });
    }
    Ok(GapSpectrum { gaps: distinct, exact })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleMetric {
    /// `min(|x - y|, 1 - |x - y|)`.
    Arc,
    /// Euclidean chord of the unit-circumference circle drawn with unit radius:
    /// `2 sin(pi * arc)`. Always floating.
    Chord,
}

impl std::str::FromStr for CircleMetric {
    type Err = GapError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arc" => Ok(CircleMetric::Arc),
            "chord" => Ok(CircleMetric::Chord),
            other => Err(GapError::Parse(format!("unknown circle metric {other:?}"))),
        }
    }
}

/// Exact arc-length oracle on rational residues; the brute-force reference
/// for [`geometric_nnd_count`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ArcMetric;

impl MetricOracle<Rational> for ArcMetric {
    type Value = Rational;

    fn distance(&self, a: &Rational, b: &Rational) -> Rational {
        let d = rem_euclid(&(a - b), &Rational::one());
        let e = Rational::one() - d;
        if d < e {
            d
        } else {
            e
        }
    }

    fn to_real(&self, value: &Rational) -> f64 {
        to_f64(value)
    }

    fn mode(&self) -> OracleMode {
        OracleMode::Exact
    }
}

/// Floating arc or chord oracle on residues given as `f64`.
#[derive(Debug, Clone, Copy)]
pub struct FloatCircleMetric(pub CircleMetric);

impl MetricOracle<f64> for FloatCircleMetric {
    type Value = f64;

    fn distance(&self, a: &f64, b: &f64) -> f64 {
        let d = (a - b).rem_euclid(1.0);
        let arc = d.min(1.0 - d);
        match self.0 {
            CircleMetric::Arc => arc,
            CircleMetric::Chord => 2.0 * (PI * arc).sin(),
        }
    }

    fn to_real(&self, value: &f64) -> f64 {
        *value
    }

    fn mode(&self) -> OracleMode {
        OracleMode::Floating { err: 4.0 * f64::EPSILON }
    }
}

/// Nearest-neighbor spectrum of the distinct orbit points, in ascending
/// residue order. On the circle a nearest neighbor is always a cyclically
/// adjacent point, so this runs in O(m) after sorting. Exact arc mode asserts
/// `|NND| <= 3`.
pub fn geometric_nnd_count(orbit: &RotationOrbit, metric: CircleMetric) -> Result<NndSpectrum<ArcLength>> {
    let policy = match (metric, &orbit.residues) {
        (CircleMetric::Arc, Residues::Exact { .. }) => ClusterPolicy::Exact,
        _ => ClusterPolicy::default(),
    };
    geometric_nnd_of(&orbit.distinct(), metric, policy)
}

pub fn geometric_nnd_of(d: &DistinctResidues, metric: CircleMetric, policy: ClusterPolicy) -> Result<NndSpectrum<ArcLength>> {
    require_two(d)?;
    let m = d.len();
    let gaps: Vec<ArcLength> = (0..m).map(|i| d.gap_after(i)).collect();
    let to_metric = |g: ArcLength| -> ArcLength {
        let arc = match g {
            ArcLength::Exact(q) => {
                let other = Rational::one() - q;
                ArcLength::Exact(if q < other { q } else { other })
            }
            ArcLength::Real(x) => ArcLength::Real(x.min(1.0 - x)),
        };
        match metric {
            CircleMetric::Arc => arc,
            CircleMetric::Chord => ArcLength::Real(2.0 * (PI * arc.to_f64()).sin()),
        }
    };
    let mut values = Vec::with_capacity(m);
    let mut neighbors = Vec::with_capacity(m);
    for i in 0..m {
        let left_idx = (i + m - 1) % m;
        let right_idx = (i + 1) % m;
        let left = to_metric(gaps[left_idx]);
        let right = to_metric(gaps[i]);
        let (value, nb) = match left.partial_cmp(&right).unwrap_or(Ordering::Equal) {
            Ordering::Less => (left, left_idx),
            Ordering::Greater => (right, right_idx),
            Ordering::Equal => (left, left_idx.min(right_idx)),
        };
        values.push(value);
        neighbors.push(nb);
    }
    let real = values.iter().map(ArcLength::to_f64).collect();
    let spectrum = NndSpectrum::from_values(values, real, neighbors, policy)?;
    if d.is_exact() && metric == CircleMetric::Arc && spectrum.count() > THREE {
        return Err(GapError::BoundViolated {
            bound: THREE,
            observed: spectrum.count(),
            context: "nearest-neighbor count of a rational rotation orbit".into(),
        });
    }
    Ok(spectrum)
}

/// One row of a three-gap experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeGapReport {
    pub p: String,
    pub n: usize,
    pub distinct_points: usize,
    pub gap_count: usize,
    pub nnd_count: usize,
    pub gaps: Vec<String>,
    pub nnd_values: Vec<String>,
}

pub fn three_gap_report(p: Rotation, n: usize, metric: CircleMetric) -> Result<ThreeGapReport> {
    let orbit = rotation_orbit(p, n)?;
    let distinct = orbit.distinct();
    let gaps = gap_spectrum_of(&distinct, ClusterPolicy::default())?;
    let policy = match (metric, distinct.is_exact()) {
        (CircleMetric::Arc, true) => ClusterPolicy::Exact,
        _ => ClusterPolicy::default(),
    };
    let nnd = geometric_nnd_of(&distinct, metric, policy)?;
    Ok(ThreeGapReport {
        p: orbit.rotation.label(),
        n,
        distinct_points: distinct.len(),
        gap_count: gaps.count(),
        nnd_count: nnd.count(),
        gaps: gaps.gaps.iter().map(ArcLength::label).collect(),
        nnd_values: nnd.classes.iter().map(|c| c.representative.label()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::brute_force_spectrum;

    fn q(a: i128, b: i128) -> Rotation {
        Rotation::Rational(Rational::new(a, b))
    }

    fn exact(x: &ArcLength) -> Rational {
        match x {
            ArcLength::Exact(q) => *q,
            ArcLength::Real(_) => panic!("expected exact"),
        }
    }

    #[test]
    fn thirds() {
        let o = rotation_orbit(q(1, 3), 2).unwrap();
        assert_eq!(o.distinct().as_rationals().unwrap(), vec![Rational::zero(), Rational::new(1, 3), Rational::new(2, 3)]);
        let g = circular_gap_spectrum(&o).unwrap();
        assert_eq!(g.gaps.iter().map(exact).collect::<Vec<_>>(), vec![Rational::new(1, 3)]);
        assert_eq!(geometric_nnd_count(&o, CircleMetric::Arc).unwrap().count(), 1);
    }

    #[test]
    fn three_tenths() {
        let o = rotation_orbit(q(3, 10), 3).unwrap();
        let pts = o.distinct().as_rationals().unwrap();
        assert_eq!(pts, vec![Rational::zero(), Rational::new(3, 10), Rational::new(6, 10), Rational::new(9, 10)]);
        let g = circular_gap_spectrum(&o).unwrap();
        assert_eq!(g.gaps.iter().map(exact).collect::<Vec<_>>(), vec![Rational::new(1, 10), Rational::new(3, 10)]);
        let s = geometric_nnd_count(&o, CircleMetric::Arc).unwrap();
        let classes: Vec<Rational> = s.classes.iter().map(|c| exact(&c.representative)).collect();
        assert_eq!(classes, vec![Rational::new(1, 10), Rational::new(3, 10)]);
    }

    #[test]
    fn periodic_orbit_collapses_with_multiplicity() {
        let o = rotation_orbit(q(1, 3), 5).unwrap();
        let d = o.distinct();
        assert_eq!(d.len(), 3);
        assert_eq!(d.multiplicity, vec![2, 2, 2]);
    }

    #[test]
    fn two_sevenths_has_at_most_three_gaps() {
        // brute force over the five residues 0, 2/7, 4/7, 6/7, 1/7
        let o = rotation_orbit(q(2, 7), 4).unwrap();
        let pts = o.distinct().as_rationals().unwrap();
        assert_eq!(pts.len(), 5);
        let mut gaps: Vec<Rational> = (0..5)
            .map(|i| if i == 4 { pts[0] + Rational::one() - pts[4] } else { pts[i + 1] - pts[i] })
            .collect();
        gaps.sort();
        gaps.dedup();
        let g = circular_gap_spectrum(&o).unwrap();
        assert_eq!(g.gaps.iter().map(exact).collect::<Vec<_>>(), gaps);
        assert!(g.count() <= 3);
    }

    #[test]
    fn degenerate_orbit_is_rejected() {
        let o = rotation_orbit(q(0, 1), 4).unwrap();
        assert!(matches!(circular_gap_spectrum(&o), Err(GapError::DegenerateOrbit(_))));
        assert!(matches!(geometric_nnd_count(&o, CircleMetric::Arc), Err(GapError::DegenerateOrbit(_))));
        assert!(rotation_orbit(q(1, 2), 0).is_err());
    }

    #[test]
    fn rotation_reduces_mod_one() {
        let a = rotation_orbit(q(13, 10), 3).unwrap();
        let b = rotation_orbit(q(3, 10), 3).unwrap();
        assert_eq!(a.residues, b.residues);
    }

    #[test]
    fn adjacent_path_matches_brute_force() {
        for (a, b, n) in [(3, 10, 3), (5, 17, 12), (22, 97, 40), (1, 2, 1), (7, 9, 30)] {
            let o = rotation_orbit(q(a, b), n).unwrap();
            let fast = geometric_nnd_count(&o, CircleMetric::Arc).unwrap();
            let pts = o.distinct().as_rationals().unwrap();
            let brute = brute_force_spectrum(&pts, &ArcMetric).unwrap();
            let fast_vals: Vec<Rational> = fast.values.iter().map(exact).collect();
            assert_eq!(fast_vals, brute.values, "p = {a}/{b}, n = {n}");
            assert_eq!(fast.neighbors, brute.neighbors, "p = {a}/{b}, n = {n}");
            assert_eq!(fast.count(), brute.count());
        }
    }

    #[test]
    fn chord_metric_matches_float_brute_force() {
        let o = rotation_orbit(Rotation::Real((5f64.sqrt() - 1.0) / 2.0), 50).unwrap();
        let s = geometric_nnd_count(&o, CircleMetric::Chord).unwrap();
        let pts = o.distinct().as_f64();
        let brute = brute_force_spectrum(&pts, &FloatCircleMetric(CircleMetric::Chord)).unwrap();
        for (a, b) in s.real.iter().zip(&brute.real) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(s.count() <= 3);
    }

    #[test]
    fn rotation_parsing() {
        assert_eq!(Rotation::parse("355/113").unwrap(), q(355, 113));
        assert!(matches!(Rotation::parse("~0.25").unwrap(), Rotation::Real(_)));
        assert!(matches!(Rotation::parse("golden").unwrap(), Rotation::Real(_)));
        assert!(Rotation::parse("pi").is_err());
    }

    #[test]
    fn report_for_three_tenths() {
        let r = three_gap_report(q(3, 10), 3, CircleMetric::Arc).unwrap();
        assert_eq!(r.gap_count, 2);
        assert_eq!(r.nnd_count, 2);
        assert_eq!(r.nnd_values, vec!["1/10", "3/10"]);
    }
}
