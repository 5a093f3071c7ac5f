//! Nearest-neighbor distances of finite point sets and their distinct-value
//! spectra.
//!
//! A [`MetricOracle`] produces a comparable distance key for every pair of
//! points. Exact oracles return keys (rationals, integers, squared lengths)
//! whose equality is meaningful; floating oracles return `f64` together with
//! an advertised error bound. [`ClusterPolicy`] decides how per-point values
//! are merged into classes.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{domain, GapError, Result};
use crate::rational::{format_rational, parse_rational, to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", content = "tau", rename_all = "lowercase")]
pub enum ClusterPolicy {
    /// Values are merged only when their keys compare equal.
    Exact,
    /// Adjacent sorted values `v <= w` merge when `w - v <= tau * max(1, v)`.
    Tolerance(f64),
}

impl ClusterPolicy {
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;

    pub fn tolerance(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(ClusterPolicy::Tolerance(tau))
        } else {
            domain(format!("cluster tolerance must be positive, got {tau}"))
        }
    }
}

impl Default for ClusterPolicy {
    fn default() -> Self {
        ClusterPolicy::Tolerance(Self::DEFAULT_TOLERANCE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OracleMode {
    Exact,
    Floating { err: f64 },
}

pub trait MetricOracle<P: ?Sized>: Sync {
    /// Ordering key for a distance. Must be monotone in the true distance.
    type Value: Clone + PartialOrd + fmt::Debug + Send + Sync;

    fn distance(&self, a: &P, b: &P) -> Self::Value;

    /// The real distance a key stands for.
    fn to_real(&self, value: &Self::Value) -> f64;

    fn mode(&self) -> OracleMode;
}

/// Euclidean distance on `f64` coordinate vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl MetricOracle<Vec<f64>> for Euclidean {
    type Value = f64;

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    fn to_real(&self, value: &f64) -> f64 {
        *value
    }

    fn mode(&self) -> OracleMode {
        OracleMode::Floating { err: 1e-15 }
    }
}

/// Euclidean distance on rational coordinates; keys are exact squared lengths.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactEuclidean;

impl MetricOracle<Vec<Rational>> for ExactEuclidean {
    type Value = Rational;

    fn distance(&self, a: &Vec<Rational>, b: &Vec<Rational>) -> Rational {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    fn to_real(&self, value: &Rational) -> f64 {
        to_f64(value).sqrt()
    }

    fn mode(&self) -> OracleMode {
        OracleMode::Exact
    }
}

/// Adapts a plain distance closure into a floating oracle.
pub struct FnMetric<F> {
    f: F,
    err: f64,
}

impl<F> FnMetric<F> {
    pub fn new(f: F, err: f64) -> Self {
        FnMetric { f, err }
    }
}

impl<P, F> MetricOracle<P> for FnMetric<F>
where
    F: Fn(&P, &P) -> f64 + Sync,
{
    type Value = f64;

    fn distance(&self, a: &P, b: &P) -> f64 {
        (self.f)(a, b)
    }

    fn to_real(&self, value: &f64) -> f64 {
        *value
    }

    fn mode(&self) -> OracleMode {
        OracleMode::Floating { err: self.err }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor<V> {
    pub index: usize,
    pub value: V,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumClass<V> {
    pub representative: V,
    pub real: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NndSpectrum<V> {
    /// Per-point nearest-neighbor key, in input order.
    pub values: Vec<V>,
    pub real: Vec<f64>,
    /// Lowest-index nearest neighbor of each point.
    pub neighbors: Vec<usize>,
    pub class_of: Vec<usize>,
    /// Distinct classes with strictly increasing representatives.
    pub classes: Vec<SpectrumClass<V>>,
    pub policy: ClusterPolicy,
}

impl<V: Clone + PartialOrd + fmt::Debug> NndSpectrum<V> {
    /// Clusters per-point values that have already been computed.
    pub fn from_values(
        values: Vec<V>,
        real: Vec<f64>,
        neighbors: Vec<usize>,
        policy: ClusterPolicy,
    ) -> Result<Self> {
        if values.len() < 2 {
            return domain("a spectrum needs at least two points");
        }
        debug_assert_eq!(values.len(), real.len());
        let (classes, class_of) = cluster(&values, &real, policy);
        Ok(NndSpectrum { values, real, neighbors, class_of, classes, policy })
    }

    /// `|NND(X)|`.
    pub fn count(&self) -> usize {
        self.classes.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn class_reals(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.real).collect()
    }

    pub fn min_class(&self) -> f64 {
        self.classes.first().map(|c| c.real).unwrap_or(f64::NAN)
    }

    pub fn max_class(&self) -> f64 {
        self.classes.last().map(|c| c.real).unwrap_or(f64::NAN)
    }

    /// `point_index,nnd_value,class_index` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point_index,nnd_value,class_index\n");
        for (i, (r, c)) in self.real.iter().zip(&self.class_of).enumerate() {
            out.push_str(&format!("{i},{r:.17e},{c}\n"));
        }
        out
    }
}

fn cmp_partial<V: PartialOrd>(a: &V, b: &V) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

fn cluster<V: Clone + PartialOrd>(
    values: &[V],
    real: &[f64],
    policy: ClusterPolicy,
) -> (Vec<SpectrumClass<V>>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    match policy {
        ClusterPolicy::Exact => order.sort_by(|&a, &b| cmp_partial(&values[a], &values[b]).then(a.cmp(&b))),
        ClusterPolicy::Tolerance(_) => order.sort_by(|&a, &b| real[a].total_cmp(&real[b]).then(a.cmp(&b))),
    }
    let mut classes: Vec<SpectrumClass<V>> = Vec::new();
    let mut class_of = vec![0; values.len()];
    let mut prev: Option<usize> = None;
    for &i in &order {
        let merge = match (prev, policy) {
            (None, _) => false,
            (Some(p), ClusterPolicy::Exact) => values[p] == values[i],
            (Some(p), ClusterPolicy::Tolerance(tau)) => real[i] - real[p] <= tau * real[p].max(1.0),
        };
        if merge {
            classes.last_mut().expect("class exists").count += 1;
        } else {
            classes.push(SpectrumClass { representative: values[i].clone(), real: real[i], count: 1 });
        }
        class_of[i] = classes.len() - 1;
        prev = Some(i);
    }
    (classes, class_of)
}

/// Nearest neighbor of the point at `index` among the other points.
pub fn nnd_of_index<P, M>(index: usize, points: &[P], metric: &M) -> Result<Neighbor<M::Value>>
where
    M: MetricOracle<P>,
{
    if points.len() < 2 {
        return domain("nearest neighbor needs at least two points");
    }
    if index >= points.len() {
        return domain(format!("index {index} out of range for {} points", points.len()));
    }
    let x = &points[index];
    let mut best: Option<Neighbor<M::Value>> = None;
    for (j, y) in points.iter().enumerate() {
        if j == index {
            continue;
        }
        let d = metric.distance(x, y);
        let better = match &best {
            None => true,
            Some(b) => cmp_partial(&d, &b.value) == Ordering::Less,
        };
        if better {
            best = Some(Neighbor { index: j, value: d });
        }
    }
    Ok(best.expect("at least one other point"))
}

/// Nearest neighbor of `x`, which must be a member of `points`. The first
/// occurrence of `x` is taken as its own index.
pub fn nnd_of_point<P, M>(x: &P, points: &[P], metric: &M) -> Result<Neighbor<M::Value>>
where
    P: PartialEq,
    M: MetricOracle<P>,
{
    if points.len() < 2 {
        return domain("nearest neighbor needs at least two points");
    }
    let index = points
        .iter()
        .position(|p| p == x)
        .ok_or_else(|| GapError::Domain("point is not a member of the set".into()))?;
    nnd_of_index(index, points, metric)
}

/// Per-point nearest neighbors followed by clustering. Rows are evaluated in
/// parallel when the `parallel` feature is on; results do not depend on it.
pub fn nnd_spectrum<P, M>(points: &[P], metric: &M, policy: ClusterPolicy) -> Result<NndSpectrum<M::Value>>
where
    P: Sync,
    M: MetricOracle<P>,
{
    if points.len() < 2 {
        return domain("a spectrum needs at least two points");
    }
    let row = |i: usize| nnd_of_index(i, points, metric).expect("validated above");
    #[cfg(feature = "parallel")]
    let nearest: Vec<Neighbor<M::Value>> = {
        use rayon::prelude::*;
        (0..points.len()).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let nearest: Vec<Neighbor<M::Value>> = (0..points.len()).map(row).collect();

    let real = nearest.iter().map(|n| metric.to_real(&n.value)).collect();
    let neighbors = nearest.iter().map(|n| n.index).collect();
    let values = nearest.into_iter().map(|n| n.value).collect();
    NndSpectrum::from_values(values, real, neighbors, policy)
}

/// Reference O(n²) implementation: every unordered pair is evaluated once,
/// sequentially, and classes use exact key equality.
pub fn brute_force_spectrum<P, M>(points: &[P], metric: &M) -> Result<NndSpectrum<M::Value>>
where
    M: MetricOracle<P>,
{
    let n = points.len();
    if n < 2 {
        return domain("a spectrum needs at least two points");
    }
    let mut best: Vec<Option<(usize, M::Value)>> = vec![None; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = metric.distance(&points[i], &points[j]);
            for (a, b) in [(i, j), (j, i)] {
                let replace = match &best[a] {
                    None => true,
                    Some((_, v)) => cmp_partial(&d, v) == Ordering::Less,
                };
                if replace {
                    best[a] = Some((b, d.clone()));
                }
            }
        }
    }
    let mut values = Vec::with_capacity(n);
    let mut neighbors = Vec::with_capacity(n);
    for slot in best {
        let (j, v) = slot.expect("n >= 2");
        neighbors.push(j);
        values.push(v);
    }
    let real = values.iter().map(|v| metric.to_real(v)).collect();
    NndSpectrum::from_values(values, real, neighbors, ClusterPolicy::Exact)
}

/// Spectrum of an isometry orbit `x_0, ..., x_n` from its displacement
/// profile `d[m - 1] = dist(x_0, x_m)`, `m = 1..=n`.
///
/// For an isometry `dist(x_i, x_j) = dist(x_0, x_{|i-j|})`, so the nearest
/// neighbor distance of `x_i` is the minimum of the profile over
/// `1..=max(i, n - i)`. Runs in O(n).
pub fn orbit_spectrum<V, F>(displacements: &[V], to_real: F, policy: ClusterPolicy) -> Result<NndSpectrum<V>>
where
    V: Clone + PartialOrd + fmt::Debug,
    F: Fn(&V) -> f64,
{
    let n = displacements.len();
    if n == 0 {
        return domain("an orbit spectrum needs at least two points");
    }
    let d = |m: usize| &displacements[m - 1];
    // prefix minima over 1..=m, the largest argmin, and the smallest argmin
    let mut pmin = vec![0usize; n + 1];
    let mut last_arg = vec![0usize; n + 1];
    let mut first_arg = vec![0usize; n + 1];
    for m in 1..=n {
        if m == 1 {
            pmin[1] = 1;
            last_arg[1] = 1;
            first_arg[1] = 1;
            continue;
        }
        match cmp_partial(d(m), d(pmin[m - 1])) {
            Ordering::Less => {
                pmin[m] = m;
                last_arg[m] = m;
                first_arg[m] = m;
            }
            Ordering::Equal => {
                pmin[m] = pmin[m - 1];
                last_arg[m] = m;
                first_arg[m] = first_arg[m - 1];
            }
            Ordering::Greater => {
                pmin[m] = pmin[m - 1];
                last_arg[m] = last_arg[m - 1];
                first_arg[m] = first_arg[m - 1];
            }
        }
    }
    let mut values = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let reach = i.max(n - i);
        let best = d(pmin[reach]).clone();
        // lowest index: look left first, as far left as possible
        let neighbor = if i >= 1 && cmp_partial(d(pmin[i]), &best) == Ordering::Equal {
            i - last_arg[i]
        } else {
            i + first_arg[n - i]
        };
        values.push(best);
        neighbors.push(neighbor);
    }
    let real = values.iter().map(&to_real).collect();
    NndSpectrum::from_values(values, real, neighbors, policy)
}

/// Parses one point per line; coordinates are `p/q` rationals or decimals
/// separated by whitespace or commas. Blank lines and `#` comments are skipped.
pub fn parse_point_set(text: &str) -> Result<Vec<Vec<Rational>>> {
    let mut points = Vec::new();
    let mut dim = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let coords = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| GapError::Parse(format!("line {}: {e}", lineno + 1)))?;
        match dim {
            None => dim = Some(coords.len()),
            Some(k) if k != coords.len() => {
                return Err(GapError::Parse(format!(
                    "line {}: expected {k} coordinates, found {}",
                    lineno + 1,
                    coords.len()
                )))
            }
            _ => {}
        }
        points.push(coords);
    }
    Ok(points)
}

pub fn format_point_set(points: &[Vec<Rational>]) -> String {
    let mut out = String::new();
    for p in points {
        let line: Vec<String> = p.iter().map(format_rational).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
