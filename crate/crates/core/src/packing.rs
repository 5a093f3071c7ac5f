//! Packing numbers `P(M, r)`: the largest number of points pairwise at least
//! `r` apart inside an open `r`-ball. Greedy search gives certified lower
//! bounds; the upper bounds come from `P(E^k) <= 3^k`.
//!
//! Balls are centered at the origin of `E^k`, at `e_0` on the unit sphere and
//! at the hyperboloid apex `e_0 / sqrt(-kappa)`. Euclidean candidates live on
//! the grid `r * m / 2^20` with integer `m`, so every Euclidean comparison is
//! an exact integer comparison.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::rational::{format_rational, Rational};

/// Resolution of the Euclidean candidate grid, in units of `r`.
pub const GRID_BITS: u32 = 20;
const GRID: i64 = 1 << GRID_BITS;

/// Pairwise distances within this much of `r` are reported as boundary cases.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PackingSpace {
    Euclidean { k: usize },
    Sphere { k: usize },
    Hyperbolic { k: usize, kappa: f64 },
}

impl PackingSpace {
    pub fn dim(&self) -> usize {
        match *self {
            PackingSpace::Euclidean { k } | PackingSpace::Sphere { k } | PackingSpace::Hyperbolic { k, .. } => k,
        }
    }

    fn coords(&self) -> usize {
        match self {
            PackingSpace::Euclidean { k } => *k,
            _ => self.dim() + 1,
        }
    }

    pub fn center(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.coords()];
        match self {
            PackingSpace::Euclidean { .. } => {}
            PackingSpace::Sphere { .. } => c[0] = 1.0,
            PackingSpace::Hyperbolic { kappa, .. } => c[0] = 1.0 / (-kappa).sqrt(),
        }
        c
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            PackingSpace::Euclidean { .. } => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            PackingSpace::Sphere { .. } => {
                let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                let sum: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
                2.0 * diff.atan2(sum)
            }
            PackingSpace::Hyperbolic { kappa, .. } => {
                let c = (-kappa).sqrt();
                let mut chord = -(a[0] - b[0]) * (a[0] - b[0]);
                for (x, y) in a[1..].iter().zip(&b[1..]) {
                    chord += (x - y) * (x - y);
                }
                2.0 / c * (c * chord.max(0.0).sqrt() / 2.0).asinh()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            PackingSpace::Euclidean { k } => format!("e{k}"),
            PackingSpace::Sphere { k } => format!("s{k}"),
            PackingSpace::Hyperbolic { k, kappa } => format!("h{k}:{kappa}"),
        }
    }

    fn validate(&self, r: f64) -> Result<()> {
        if self.dim() == 0 {
            return domain("dimension must be at least 1");
        }
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("radius must be positive, got {r}"));
        }
        if let PackingSpace::Hyperbolic { kappa, .. } = self {
            if !(*kappa < 0.0) {
                return domain(format!("hyperbolic curvature must be negative, got {kappa}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    OutsideBall { index: usize, distance: f64 },
    TooClose { i: usize, j: usize, distance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingVerdict {
    pub valid: bool,
    pub violation: Option<Violation>,
    /// Pairs whose distance is within `BOUNDARY_TOL` of `r`.
    pub boundary_pairs: usize,
}

/// Checks the packing conditions in floating point. Pairwise distances in
/// `[r - 1e-12, r)` are accepted and counted as boundary pairs.
pub fn verify_packing(space: &PackingSpace, center: &[f64], r: f64, points: &[Vec<f64>]) -> PackingVerdict {
    let mut boundary_pairs = 0;
    let fail = |v| PackingVerdict { valid: false, violation: Some(v), boundary_pairs: 0 };
    for (index, p) in points.iter().enumerate() {
        let distance = space.distance(center, p);
        if !(distance < r) {
            return fail(Violation::OutsideBall { index, distance });
        }
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let distance = space.distance(&points[i], &points[j]);
            if distance < r - BOUNDARY_TOL {
                return fail(Violation::TooClose { i, j, distance });
            }
            if distance < r + BOUNDARY_TOL {
                boundary_pairs += 1;
            }
        }
    }
    PackingVerdict { valid: true, violation: None, boundary_pairs }
}

/// Exact Euclidean check on rational coordinates.
pub fn verify_packing_exact(center: &[Rational], r: &Rational, points: &[Vec<Rational>]) -> PackingVerdict {
    let sq = |a: &[Rational], b: &[Rational]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<Rational>();
    let r2 = r * r;
    let real = |q: Rational| crate::rational::to_f64(&q).sqrt();
    let fail = |v| PackingVerdict { valid: false, violation: Some(v), boundary_pairs: 0 };
    for (index, p) in points.iter().enumerate() {
        let d = sq(center, p);
        if d >= r2 {
            return fail(Violation::OutsideBall { index, distance: real(d) });
        }
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = sq(&points[i], &points[j]);
            if d < r2 {
                return fail(Violation::TooClose { i, j, distance: real(d) });
            }
        }
    }
    PackingVerdict { valid: true, violation: None, boundary_pairs: 0 }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingResult {
    pub space: PackingSpace,
    pub radius: f64,
    pub center: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Euclidean points as exact `p/q` strings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_points: Option<Vec<Vec<String>>>,
    pub count: usize,
    pub pairwise: Vec<Vec<f64>>,
    pub center_distances: Vec<f64>,
    pub boundary_pairs: usize,
    pub trials: usize,
    pub candidates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreedyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Candidate points sampled per trial.
    pub candidates: usize,
}

impl GreedyOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        GreedyOptions { trials, seed, candidates: 256 }
    }
}

/// Per-trial seed, independent of scheduling order.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (trial as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Candidates {
    Grid(Vec<Vec<i64>>),
    Real(Vec<Vec<f64>>),
}

fn unit_direction(k: usize, rng: &mut StdRng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-300 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Geodesic polar sampling with radial density `J(rho)^(k-1)`.
fn polar_sample(space: &PackingSpace, r: f64, rng: &mut StdRng) -> Vec<f64> {
    let k = space.dim();
    let (jac, limit): (Box<dyn Fn(f64) -> f64>, f64) = match *space {
        PackingSpace::Sphere { .. } => (Box::new(f64::sin), r.min(PI)),
        PackingSpace::Hyperbolic { kappa, .. } => {
            let c = (-kappa).sqrt();
            (Box::new(move |t: f64| (c * t).sinh() / c), r)
        }
        PackingSpace::Euclidean { .. } => unreachable!("Euclidean candidates use the grid"),
    };
    // the radial density is increasing on [0, limit] except past pi/2 on the sphere
    let peak = match space {
        PackingSpace::Sphere { .. } => jac(limit.min(PI / 2.0)),
        _ => jac(limit),
    }
    .powi(k as i32 - 1);
    let rho = loop {
        let rho = rng.random_range(0.0..limit);
        if k == 1 || rng.random::<f64>() * peak <= jac(rho).powi(k as i32 - 1) {
            break rho;
        }
    };
    let dir = unit_direction(k, rng);
    let mut p = vec![0.0; k + 1];
    match *space {
        PackingSpace::Sphere { .. } => {
            p[0] = rho.cos();
            for (slot, d) in p[1..].iter_mut().zip(&dir) {
                *slot = rho.sin() * d;
            }
        }
        PackingSpace::Hyperbolic { kappa, .. } => {
            let c = (-kappa).sqrt();
            p[0] = (c * rho).cosh() / c;
            for (slot, d) in p[1..].iter_mut().zip(&dir) {
                *slot = (c * rho).sinh() / c * d;
            }
        }
        PackingSpace::Euclidean { .. } => unreachable!(),
    }
    p
}

fn sample_candidates(space: &PackingSpace, r: f64, m: usize, rng: &mut StdRng) -> Candidates {
    match space {
        PackingSpace::Euclidean { k } => {
            let limit = (GRID as i128) * (GRID as i128);
            let mut out = Vec::with_capacity(m);
            while out.len() < m {
                let g: Vec<i64> = (0..*k).map(|_| rng.random_range(-GRID + 1..GRID)).collect();
                if g.iter().map(|&x| x as i128 * x as i128).sum::<i128>() < limit {
                    out.push(g);
                }
            }
            Candidates::Grid(out)
        }
        _ => {
            let mut out = Vec::with_capacity(m);
            while out.len() < m {
                let p = polar_sample(space, r, rng);
                if space.distance(&space.center(), &p) < r {
                    out.push(p);
                }
            }
            Candidates::Real(out)
        }
    }
}

/// Maximal independent set of the conflict graph, always taking a vertex of
/// least remaining degree (lowest index on ties).
fn min_degree_independent_set(n: usize, conflict: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if conflict(i, j) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut chosen = Vec::new();
    loop {
        let pick = (0..n).filter(|&i| alive[i]).min_by_key(|&i| (degree[i], i));
        let Some(v) = pick else { break };
        chosen.push(v);
        let mut removed = vec![v];
        removed.extend(adj[v].iter().copied().filter(|&u| alive[u]));
        for &u in &removed {
            alive[u] = false;
        }
        for &u in &removed {
            for &w in &adj[u] {
                if alive[w] {
                    degree[w] -= 1;
                }
            }
        }
    }
    chosen
}

struct Trial {
    points: Vec<Vec<f64>>,
    grid: Option<Vec<Vec<i64>>>,
}

fn run_trial(space: &PackingSpace, r: f64, opts: &GreedyOptions, trial: usize) -> Trial {
    let mut rng = StdRng::seed_from_u64(trial_seed(opts.seed, trial));
    let mut trial = match sample_candidates(space, r, opts.candidates, &mut rng) {
        Candidates::Grid(g) => {
            let limit = (GRID as i128) * (GRID as i128);
            let close = |a: &[i64], b: &[i64]| {
                a.iter().zip(b).map(|(x, y)| (x - y) as i128 * (x - y) as i128).sum::<i128>() < limit
            };
            let chosen = min_degree_independent_set(g.len(), |i, j| close(&g[i], &g[j]));
            let grid: Vec<Vec<i64>> = chosen.iter().map(|&i| g[i].clone()).collect();
            let points = grid.iter().map(|p| p.iter().map(|&m| r * m as f64 / GRID as f64).collect()).collect();
            Trial { points, grid: Some(grid) }
        }
        Candidates::Real(c) => {
            let chosen = min_degree_independent_set(c.len(), |i, j| space.distance(&c[i], &c[j]) < r);
            Trial { points: chosen.iter().map(|&i| c[i].clone()).collect(), grid: None }
        }
    };
    canonical_order(&mut trial);
    trial
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn canonical_order(t: &mut Trial) {
    let mut idx: Vec<usize> = (0..t.points.len()).collect();
    idx.sort_by(|&a, &b| cmp_points(&t.points[a], &t.points[b]));
    t.points = idx.iter().map(|&i| t.points[i].clone()).collect();
    if let Some(g) = &t.grid {
        t.grid = Some(idx.iter().map(|&i| g[i].clone()).collect());
    }
}

/// Larger count wins; equal counts go to the lexicographically smaller
/// certificate, which makes the reduction independent of trial order.
fn better(a: Trial, b: Trial) -> Trial {
    match b.points.len().cmp(&a.points.len()) {
        Ordering::Greater => b,
        Ordering::Less => a,
        Ordering::Equal => {
            let ord = a
                .points
                .iter()
                .zip(&b.points)
                .map(|(x, y)| cmp_points(x, y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal);
            if ord == Ordering::Greater {
                b
            } else {
                a
            }
        }
    }
}

pub fn greedy_packing(space: &PackingSpace, r: f64, opts: &GreedyOptions) -> Result<PackingResult> {
    space.validate(r)?;
    if opts.trials == 0 || opts.candidates == 0 {
        return domain("need at least one trial and one candidate");
    }
    let run = |t: usize| run_trial(space, r, opts, t);
    #[cfg(feature = "parallel")]
    let best = {
        use rayon::prelude::*;
        (0..opts.trials).into_par_iter().map(run).reduce_with(better)
    };
    #[cfg(not(feature = "parallel"))]
    let best = (0..opts.trials).map(run).reduce(better);
    let best = best.expect("at least one trial");
    finish(space, r, best, opts)
}

fn finish(space: &PackingSpace, r: f64, best: Trial, opts: &GreedyOptions) -> Result<PackingResult> {
    let center = space.center();
    let exact_points = best.grid.as_ref().map(|g| grid_rationals(g, r));
    if let Some(exact) = &exact_points {
        let zero = vec![Rational::from_integer(0); space.dim()];
        let r_exact = Rational::approximate_float(r).filter(|q| crate::rational::to_f64(q) == r);
        // the grid itself is exact in units of r; r only needs to be a dyadic f64
        if let Some(rq) = r_exact {
            let verdict = verify_packing_exact(&zero, &rq, exact);
            if !verdict.valid {
                return Err(crate::error::GapError::Domain(format!("greedy produced an invalid packing: {verdict:?}")));
            }
        }
    }
    let verdict = verify_packing(space, &center, r, &best.points);
    if !verdict.valid && best.grid.is_none() {
        return Err(crate::error::GapError::Domain(format!("greedy produced an invalid packing: {verdict:?}")));
    }
    let pairwise = best.points.iter().map(|a| best.points.iter().map(|b| space.distance(a, b)).collect()).collect();
    let center_distances = best.points.iter().map(|p| space.distance(&center, p)).collect();
    Ok(PackingResult {
        space: *space,
        radius: r,
        center,
        count: best.points.len(),
        exact_points: exact_points.map(|pts| pts.iter().map(|p| p.iter().map(format_rational).collect()).collect()),
        points: best.points,
        pairwise,
        center_distances,
        boundary_pairs: verdict.boundary_pairs,
        trials: opts.trials,
        candidates: opts.candidates,
        seed: opts.seed,
    })
}

fn grid_rationals(grid: &[Vec<i64>], r: f64) -> Vec<Vec<Rational>> {
    let rq = Rational::approximate_float(r).unwrap_or_else(|| Rational::from_integer(0));
    grid.iter()
        .map(|p| p.iter().map(|&m| rq * Rational::new(m as i128, GRID as i128)).collect())
        .collect()
}

/// Grid coordinates of a Euclidean result, exact in units of `r`.
pub fn euclidean_grid(result: &PackingResult) -> Option<Vec<Vec<Rational>>> {
    let exact = result.exact_points.as_ref()?;
    exact
        .iter()
        .map(|p| p.iter().map(|s| crate::rational::parse_rational(s).ok()).collect::<Option<Vec<_>>>())
        .collect()
}

pub fn euclidean_packing_bound(k: usize) -> Result<usize> {
    if k == 0 {
        return domain("dimension must be at least 1");
    }
    3usize.checked_pow(k as u32).ok_or_else(|| crate::error::GapError::Overflow("3^k".into()))
}

/// The orbit NND bound `P + 1`.
pub fn nnd_bound_from_packing(p: usize) -> Result<usize> {
    if p == 0 {
        return domain("a packing number is at least 1");
    }
    Ok(p + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanEntry {
    pub radius: f64,
    /// Best fresh greedy count at this radius.
    pub greedy_count: usize,
    /// Count of the previous certificate pushed out radially.
    pub nested_count: usize,
    pub count: usize,
    pub certificate: PackingResult,
}

/// Pushes a hyperbolic configuration out along geodesic rays from the center,
/// `rho -> lambda rho`. For `lambda >= 1` this never shrinks a distance by
/// more than the factor `lambda`, since `sinh(lambda rho) >= lambda sinh(rho)`.
pub fn rescale_radially(space: &PackingSpace, points: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
    let PackingSpace::Hyperbolic { kappa, .. } = *space else {
        return points.to_vec();
    };
    let c = (-kappa).sqrt();
    points
        .iter()
        .map(|p| {
            let spatial = p[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
            let rho = (c * spatial).asinh() / c;
            let mut q = vec![0.0; p.len()];
            q[0] = (c * lambda * rho).cosh() / c;
            if spatial > 0.0 {
                let scale = (c * lambda * rho).sinh() / c / spatial;
                for (slot, x) in q[1..].iter_mut().zip(&p[1..]) {
                    *slot = x * scale;
                }
            }
            q
        })
        .collect()
}

/// Greedy counts in `H^k_kappa` at increasing radii, where each radius also
/// inherits the rescaled certificate of the previous one. Reported counts are
/// therefore nondecreasing by construction, and each is re-verified.
pub fn hyperbolic_monotonicity_scan(kappa: f64, k: usize, radii: &[f64], opts: &GreedyOptions) -> Result<Vec<ScanEntry>> {
    if !(kappa < 0.0) {
        return domain(format!("hyperbolic curvature must be negative, got {kappa}"));
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return domain("radii must be nonempty and strictly increasing");
    }
    let space = PackingSpace::Hyperbolic { k, kappa };
    let mut out: Vec<ScanEntry> = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let fresh = greedy_packing(&space, r, &GreedyOptions { seed: trial_seed(opts.seed, 1 << 20 | i), ..*opts })?;
        let greedy_count = fresh.count;
        let mut nested_count = 0;
        let mut certificate = fresh;
        if let Some(prev) = out.last() {
            let lambda = r / prev.radius;
            let moved = rescale_radially(&space, &prev.certificate.points, lambda);
            let verdict = verify_packing(&space, &space.center(), r, &moved);
            if verdict.valid {
                nested_count = moved.len();
                if nested_count > certificate.count {
                    let mut t = Trial { points: moved, grid: None };
                    canonical_order(&mut t);
                    certificate = finish(&space, r, t, opts)?;
                }
            }
        }
        out.push(ScanEntry { radius: r, greedy_count, nested_count, count: certificate.count, certificate });
    }
    Ok(out)
}
