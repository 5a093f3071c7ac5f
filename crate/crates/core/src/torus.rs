//! Flat tori `R^k / Γ` in exact rational arithmetic.
//!
//! Rectangular lattices (side lengths `p_1..p_k`) reduce distance to a
//! per-coordinate wrap. General bases (k ≤ 4) use depth-first closest-vector
//! enumeration pruned by Gram–Schmidt lengths; candidates are scored exactly.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{domain, GapError, Result};
use crate::metric::{orbit_spectrum, ClusterPolicy, MetricOracle, NndSpectrum, OracleMode};
use crate::rational::{rem_euclid, serde_rational, to_f64, Rational};

pub const MAX_GENERAL_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum TorusLattice {
    Rectangular {
        sides: Vec<Rational>,
    },
    General {
        /// Rows are the generating translations.
        basis: Vec<Vec<Rational>>,
        inverse: Vec<Vec<Rational>>,
        gs_norms_sq: Vec<f64>,
        /// `mu[j][i] = <b_j, b*_i> / |b*_i|^2` for `j > i`.
        mu: Vec<Vec<f64>>,
        gs: Vec<Vec<f64>>,
    },
}

/// Canonical representative: reduced into the fundamental box or
/// parallelepiped of its lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TorusPoint(#[serde(with = "serde_rational::vec")] pub Vec<Rational>);

impl TorusPoint {
    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }
}

impl TorusLattice {
    pub fn rectangular(sides: Vec<Rational>) -> Result<Self> {
        if sides.is_empty() {
            return domain("a torus needs dimension k >= 1");
        }
        if sides.iter().any(|s| !s.is_positive()) {
            return domain("side lengths must be positive");
        }
        Ok(TorusLattice::Rectangular { sides })
    }

    pub fn rectangular_int(sides: &[i128]) -> Result<Self> {
        Self::rectangular(sides.iter().map(|&s| Rational::from_integer(s)).collect())
    }

    pub fn general(basis: Vec<Vec<Rational>>) -> Result<Self> {
        let k = basis.len();
        if k == 0 {
            return domain("a torus needs dimension k >= 1");
        }
        if k > MAX_GENERAL_DIM {
            return Err(GapError::UnsupportedDimension { k, max: MAX_GENERAL_DIM });
        }
        if basis.iter().any(|row| row.len() != k) {
            return domain("basis must be a square k x k matrix");
        }
        let inverse = invert(&basis).ok_or_else(|| GapError::Domain("basis is singular".into()))?;
        let rows: Vec<Vec<f64>> = basis.iter().map(|r| r.iter().map(to_f64).collect()).collect();
        let mut gs: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut norms = Vec::with_capacity(k);
        let mut mu = vec![vec![0.0; k]; k];
        for j in 0..k {
            let mut v = rows[j].clone();
            for i in 0..j {
                let m = dot(&rows[j], &gs[i]) / norms[i];
                mu[j][i] = m;
                for (vc, gc) in v.iter_mut().zip(&gs[i]) {
                    *vc -= m * gc;
                }
            }
            norms.push(dot(&v, &v));
            gs.push(v);
        }
        Ok(TorusLattice::General { basis, inverse, gs_norms_sq: norms, mu, gs })
    }

    pub fn dim(&self) -> usize {
        match self {
            TorusLattice::Rectangular { sides } => sides.len(),
            TorusLattice::General { basis, .. } => basis.len(),
        }
    }

    /// Every lattice here is rational, so distances are always exact.
    pub fn is_exact(&self) -> bool {
        true
    }

    pub fn point(&self, coords: Vec<Rational>) -> Result<TorusPoint> {
        if coords.len() != self.dim() {
            return domain(format!("expected {} coordinates, got {}", self.dim(), coords.len()));
        }
        Ok(self.canonical(coords))
    }

    pub fn point_int(&self, coords: &[i128]) -> Result<TorusPoint> {
        self.point(coords.iter().map(|&c| Rational::from_integer(c)).collect())
    }

    fn canonical(&self, coords: Vec<Rational>) -> TorusPoint {
        match self {
            TorusLattice::Rectangular { sides } => {
                TorusPoint(coords.iter().zip(sides).map(|(c, s)| rem_euclid(c, s)).collect())
            }
            TorusLattice::General { basis, inverse, .. } => {
                let k = basis.len();
                let coef: Vec<Rational> = (0..k)
                    .map(|i| (0..k).map(|j| coords[j] * inverse[j][i]).sum::<Rational>())
                    .map(|c| c - c.floor())
                    .collect();
                TorusPoint((0..k).map(|j| (0..k).map(|i| coef[i] * basis[i][j]).sum()).collect())
            }
        }
    }

    /// Exact squared quotient distance.
    pub fn distance_sq(&self, x: &TorusPoint, y: &TorusPoint) -> Result<Rational> {
        if x.0.len() != self.dim() || y.0.len() != self.dim() {
            return domain("point dimension does not match the lattice");
        }
        Ok(match self {
            TorusLattice::Rectangular { sides } => x
                .0
                .iter()
                .zip(&y.0)
                .zip(sides)
                .map(|((a, b), s)| {
                    let d = rem_euclid(&(a - b), s);
                    let e = s - d;
                    let m = if d < e { d } else { e };
                    m * m
                })
                .sum(),
            TorusLattice::General { .. } => self.closest_vector_sq(&x.0, &y.0),
        })
    }

    fn closest_vector_sq(&self, x: &[Rational], y: &[Rational]) -> Rational {
        let TorusLattice::General { basis, inverse, gs_norms_sq, mu, gs } = self else {
            unreachable!("general lattices only")
        };
        let k = basis.len();
        let w: Vec<Rational> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        // Babai rounding gives the first upper bound.
        let coef: Vec<Rational> = (0..k).map(|i| (0..k).map(|j| w[j] * inverse[j][i]).sum()).collect();
        let z0: Vec<i128> = coef.iter().map(|c| c.round().to_integer()).collect();
        let mut best = residual_sq(&w, basis, &z0);
        let wf: Vec<f64> = w.iter().map(to_f64).collect();
        let tau: Vec<f64> = (0..k).map(|i| dot(&wf, &gs[i]) / gs_norms_sq[i]).collect();
        let mut z = vec![0i128; k];
        enumerate_level(k as isize - 1, 0.0, &tau, mu, gs_norms_sq, &w, basis, &mut z, &mut best);
        best
    }

    pub fn distance(&self, x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
        self.distance_sq(x, y).map(|d| to_f64(&d).sqrt())
    }

    pub fn translate(&self, p: &TorusPoint, v: &[Rational], times: i128) -> TorusPoint {
        let coords = p.0.iter().zip(v).map(|(a, b)| a + b * Rational::from_integer(times)).collect();
        self.canonical(coords)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual_sq(w: &[Rational], basis: &[Vec<Rational>], z: &[i128]) -> Rational {
    (0..w.len())
        .map(|j| {
            let c = w[j] - z.iter().zip(basis).map(|(zi, row)| row[j] * Rational::from_integer(*zi)).sum::<Rational>();
            c * c
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn enumerate_level(
    level: isize,
    partial: f64,
    tau: &[f64],
    mu: &[Vec<f64>],
    norms: &[f64],
    w: &[Rational],
    basis: &[Vec<Rational>],
    z: &mut [i128],
    best: &mut Rational,
) {
    if level < 0 {
        let cand = residual_sq(w, basis, z);
        if cand < *best {
            *best = cand;
        }
        return;
    }
    let i = level as usize;
    let k = z.len();
    let center = tau[i] - ((i + 1)..k).map(|j| mu[j][i] * z[j] as f64).sum::<f64>();
    // slack keeps float rounding from pruning the exact optimum
    let bound = to_f64(best) * (1.0 + 1e-9) + 1e-12 - partial;
    if bound < 0.0 {
        return;
    }
    let half = (bound / norms[i]).sqrt();
    let lo = (center - half).floor() as i128;
    let hi = (center + half).ceil() as i128;
    for zi in lo..=hi {
        let diff = center - zi as f64;
        let next = partial + norms[i] * diff * diff;
        if next > to_f64(best) * (1.0 + 1e-9) + 1e-12 {
            continue;
        }
        z[i] = zi;
        enumerate_level(level - 1, next, tau, mu, norms, w, basis, z, best);
    }
    z[i] = 0;
}

/// Gauss–Jordan inverse over the rationals.
fn invert(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let k = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut inv: Vec<Vec<Rational>> =
        (0..k).map(|i| (0..k).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..k {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for j in 0..k {
                    let (ac, ic) = (a[col][j], inv[col][j]);
                    a[r][j] -= f * ac;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    Some(inv)
}

impl MetricOracle<TorusPoint> for TorusLattice {
    type Value = Rational;

    fn distance(&self, a: &TorusPoint, b: &TorusPoint) -> Rational {
        self.distance_sq(a, b).expect("points belong to this lattice")
    }

    fn to_real(&self, value: &Rational) -> f64 {
        to_f64(value).sqrt()
    }

    fn mode(&self) -> OracleMode {
        OracleMode::Exact
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationOrbit {
    pub points: Vec<TorusPoint>,
    /// `v` is a lattice vector, so every point coincides with the first.
    pub degenerate: bool,
}

/// `x_i = p0 + i*v` reduced to canonical form, `i = 0..=n`.
pub fn translation_orbit(lattice: &TorusLattice, v: &[Rational], p0: &TorusPoint, n: usize) -> Result<TranslationOrbit> {
    if n == 0 {
        return domain("orbit length n must be at least 1");
    }
    if v.len() != lattice.dim() {
        return domain("step vector dimension does not match the lattice");
    }
    let mut points = Vec::with_capacity(n + 1);
    let mut cur = p0.clone();
    let step = lattice.canonical(v.to_vec());
    for _ in 0..=n {
        points.push(cur.clone());
        cur = lattice.canonical(cur.0.iter().zip(&step.0).map(|(a, b)| a + b).collect());
    }
    let degenerate = step.0.iter().all(|c| c.is_zero());
    Ok(TranslationOrbit { points, degenerate })
}

/// Spectrum of a translation orbit through the isometry identity
/// `dist(x_i, x_j) = dist(x_0, x_{|i-j|})`; exact, O(n).
pub fn translation_orbit_spectrum(lattice: &TorusLattice, orbit: &TranslationOrbit) -> Result<NndSpectrum<Rational>> {
    let x0 = &orbit.points[0];
    let disp: Vec<Rational> = orbit.points[1..].iter().map(|x| lattice.distance_sq(x0, x)).collect::<Result<_>>()?;
    orbit_spectrum(&disp, |v| to_f64(v).sqrt(), ClusterPolicy::Exact)
}

/// Perturbation size for [`many_gaps_construction`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// `s = 1 / (2 k N^2)`.
    Auto,
    Value(Rational),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapVerdict {
    pub j: usize,
    /// `x_0` is a nearest neighbor of `x_{a_j}` (and the lowest-index one).
    pub nearest_is_origin: bool,
    /// No other orbit point ties with `x_0`.
    pub unique_nearest: bool,
    /// `dist(x_{a_j}, x_0)^2 == 1 - 2 a_j s + k (a_j s)^2`.
    pub formula_matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManyGapsCertificate {
    pub primes: Vec<u64>,
    /// `N`, the product of the primes and the orbit size.
    pub n_points: u64,
    /// `pi_j`, the inverse of `N / p_j` modulo `p_j`.
    pub inverses: Vec<u64>,
    pub indices: Vec<u64>,
    pub signs: Vec<i8>,
    #[serde(with = "serde_rational")]
    pub s: Rational,
    #[serde(with = "serde_rational::vec")]
    pub step: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub distances_sq: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub formula_sq: Vec<Rational>,
    pub verdicts: Vec<GapVerdict>,
    pub distinct: bool,
    /// Distances strictly decrease as `a_j` increases.
    pub decreasing: bool,
    /// `|NND(X)|` of the full `N`-point orbit.
    pub nnd_count: usize,
}

impl ManyGapsCertificate {
    pub fn k(&self) -> usize {
        self.primes.len()
    }

    pub fn lattice(&self) -> TorusLattice {
        TorusLattice::rectangular(self.primes.iter().map(|&p| Rational::from_integer(p as i128)).collect())
            .expect("primes are positive")
    }

    /// The orbit `x_0..x_{N-1}` as exact torus points, for cross-checks and
    /// emission. Memory is O(kN).
    pub fn orbit(&self) -> TranslationOrbit {
        let lattice = self.lattice();
        let origin = TorusPoint(vec![Rational::zero(); self.k()]);
        translation_orbit(&lattice, &self.step, &origin, (self.n_points - 1) as usize).expect("valid step")
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let e = (a as i128).extended_gcd(&(m as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m as i128) as u64)
}

/// Builds the flat torus with prime side lengths, the perturbed diagonal
/// translation, and verifies exactly that the `k` points `x_{a_j}` have `x_0`
/// as nearest neighbor at pairwise distinct distances.
///
/// Distances are evaluated in integer arithmetic over the common denominator
/// of `s`, walking the orbit once: O(kN) time, O(k) memory.
pub fn many_gaps_construction(primes: &[u64], s: Perturbation) -> Result<ManyGapsCertificate> {
    let k = primes.len();
    if k == 0 {
        return domain("need at least one prime");
    }
    for (i, &p) in primes.iter().enumerate() {
        if p % 2 == 0 || !is_prime(p) {
            return domain(format!("{p} is not an odd prime"));
        }
        if primes[..i].contains(&p) {
            return domain(format!("prime {p} is repeated"));
        }
    }
    let n_points = primes
        .iter()
        .try_fold(1u64, |acc, &p| acc.checked_mul(p))
        .filter(|&n| n < (1 << 40))
        .ok_or_else(|| GapError::Overflow("product of primes too large".into()))?;
    let s = match s {
        Perturbation::Auto => Rational::new(1, 2 * k as i128 * (n_points as i128).pow(2)),
        Perturbation::Value(v) if v.is_positive() => v,
        Perturbation::Value(v) => return domain(format!("perturbation s must be positive, got {v}")),
    };

    let mut inverses = Vec::with_capacity(k);
    let mut indices = Vec::with_capacity(k);
    let mut signs = Vec::with_capacity(k);
    for (j, &p) in primes.iter().enumerate() {
        let cofactor = n_points / p;
        let pi = mod_inverse(cofactor % p, p).expect("distinct primes are coprime");
        let a = pi.max(p - pi) * cofactor;
        debug_assert!(2 * a >= n_points - 1 && a < n_points);
        // (a, ..., a) must reduce to delta * e_j on the integer lattice
        let mut sign = None;
        for (i, &q) in primes.iter().enumerate() {
            let r = a % q;
            if i == j {
                sign = match r {
                    1 => Some(1i8),
                    r if r == q - 1 => Some(-1i8),
                    _ => None,
                };
            } else if r != 0 {
                sign = None;
                break;
            }
        }
        let sign = sign.ok_or_else(|| GapError::CertificateFailure {
            j,
            reason: format!("(a_j,...,a_j) with a_j = {a} does not reduce to ±e_j"),
        })?;
        inverses.push(pi);
        indices.push(a);
        signs.push(sign);
    }
    let step: Vec<Rational> = signs.iter().map(|&d| Rational::one() - s * Rational::from_integer(d as i128)).collect();

    // Integer frame: coordinate j of x_m is c_j(m) / den, modulo p_j * den.
    let (sn, den) = (*s.numer(), *s.denom());
    let moduli: Vec<i128> = primes.iter().map(|&p| p as i128 * den).collect();
    let headroom = moduli.iter().map(|m| (*m as f64 / 2.0).powi(2)).sum::<f64>();
    if moduli.iter().any(|&m| m > 1i128 << 62) || headroom > 2f64.powi(125) {
        return Err(GapError::Overflow("denominator of s too large for the exact orbit walk".into()));
    }
    let moduli: Vec<i64> = moduli.iter().map(|&m| m as i64).collect();
    let steps: Vec<i64> = signs
        .iter()
        .zip(&moduli)
        .map(|(&d, &m)| ((den - sn * d as i128).rem_euclid(m as i128)) as i64)
        .collect();

    let mut coord = vec![0i64; k];
    let mut event: Vec<(u64, usize)> = indices.iter().enumerate().map(|(j, &a)| (a, j)).collect();
    event.sort_unstable();
    let mut next_event = 0;
    let mut raw = vec![0i128; k];
    let mut strict_before = vec![false; k];
    let mut origin_ok = vec![false; k];
    // NND of x_i is the prefix minimum up to max(i, N-1-i); those reaches
    // cover [ceil((N-1)/2), N-1], so count distinct prefix minima there.
    let reach_lo = n_points / 2;
    let mut prefix_min = i128::MAX;
    let mut nnd_count = 0usize;
    for m in 1..n_points {
        let mut d2: i128 = 0;
        for j in 0..k {
            let mut c = coord[j] + steps[j];
            if c >= moduli[j] {
                c -= moduli[j];
            }
            coord[j] = c;
            let w = c.min(moduli[j] - c) as i128;
            d2 += w * w;
        }
        while next_event < k && event[next_event].0 == m {
            let j = event[next_event].1;
            raw[j] = d2;
            strict_before[j] = d2 < prefix_min;
            origin_ok[j] = d2 <= prefix_min;
            next_event += 1;
        }
        if d2 < prefix_min {
            prefix_min = d2;
            if m >= reach_lo {
                nnd_count += 1;
            }
        } else if m == reach_lo {
            nnd_count += 1;
        }
    }

    let den_sq = Rational::from_integer(den * den);
    let distances_sq: Vec<Rational> = raw.iter().map(|&r| Rational::from_integer(r) / den_sq).collect();
    let kk = Rational::from_integer(k as i128);
    let formula_sq: Vec<Rational> = indices
        .iter()
        .map(|&a| {
            let a_s = Rational::from_integer(a as i128) * s;
            Rational::one() - Rational::from_integer(2) * a_s + kk * a_s * a_s
        })
        .collect();
    let verdicts: Vec<GapVerdict> = (0..k)
        .map(|j| GapVerdict {
            j,
            nearest_is_origin: origin_ok[j],
            unique_nearest: strict_before[j],
            formula_matches: distances_sq[j] == formula_sq[j],
        })
        .collect();
    // events are sorted by a_j, so consecutive pairs test monotonicity
    let decreasing = event.windows(2).all(|w| distances_sq[w[1].1] < distances_sq[w[0].1]);
    let distinct = (0..k).all(|j| ((j + 1)..k).all(|l| distances_sq[j] != distances_sq[l]));

    let cert = ManyGapsCertificate {
        primes: primes.to_vec(),
        n_points,
        inverses,
        indices,
        signs,
        s,
        step,
        distances_sq,
        formula_sq,
        verdicts,
        distinct,
        decreasing,
        nnd_count,
    };
    for v in &cert.verdicts {
        if !v.nearest_is_origin {
            return Err(GapError::CertificateFailure { j: v.j, reason: "x_0 is not the nearest neighbor of x_{a_j}".into() });
        }
        if !v.formula_matches {
            return Err(GapError::CertificateFailure {
                j: v.j,
                reason: format!(
                    "squared distance {} differs from 1 - 2 a_j s + k (a_j s)^2 = {}",
                    cert.distances_sq[v.j], cert.formula_sq[v.j]
                ),
            });
        }
    }
    if !cert.distinct {
        let j = (0..k)
            .find(|&j| (0..k).any(|l| l != j && cert.distances_sq[j] == cert.distances_sq[l]))
            .unwrap_or(0);
        return Err(GapError::CertificateFailure { j, reason: "distances dist(x_{a_j}, x_0) are not distinct".into() });
    }
    if cert.nnd_count < k {
        return Err(GapError::CertificateFailure {
            j: k - 1,
            reason: format!("|NND(X)| = {} is smaller than k = {k}", cert.nnd_count),
        });
    }
    Ok(cert)
}

/// Exact spectrum of the full certificate orbit by the O(N) orbit identity
/// on generic torus distances. Intended for moderate N.
pub fn certificate_spectrum(cert: &ManyGapsCertificate) -> Result<NndSpectrum<Rational>> {
    let lattice = cert.lattice();
    translation_orbit_spectrum(&lattice, &cert.orbit())
}

pub fn to_u64(q: &Rational) -> Option<u64> {
    if q.is_integer() {
        q.to_integer().to_u64()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{brute_force_spectrum, nnd_of_index};

    fn r(a: i128, b: i128) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn unit_square_half_diagonal() {
        let l = TorusLattice::rectangular_int(&[1, 1]).unwrap();
        let x = l.point_int(&[0, 0]).unwrap();
        let y = l.point(vec![r(1, 2), r(1, 2)]).unwrap();
        assert_eq!(l.distance_sq(&x, &y).unwrap(), r(1, 2));
    }

    #[test]
    fn wrapping_on_three_by_five() {
        let l = TorusLattice::rectangular_int(&[3, 5]).unwrap();
        let o = l.point_int(&[0, 0]).unwrap();
        let a = l.point(vec![r(5, 2), r(0, 1)]).unwrap();
        let b = l.point_int(&[1, 0]).unwrap();
        assert_eq!(l.distance_sq(&o, &a).unwrap(), r(1, 4));
        assert_eq!(l.distance_sq(&o, &b).unwrap(), r(1, 1));
    }

    #[test]
    fn general_basis_matches_rectangular_on_diagonal_basis() {
        let rect = TorusLattice::rectangular_int(&[3, 5]).unwrap();
        let gen = TorusLattice::general(vec![vec![r(3, 1), r(0, 1)], vec![r(0, 1), r(5, 1)]]).unwrap();
        let pts = [[r(1, 3), r(9, 2)], [r(29, 10), r(1, 7)], [r(0, 1), r(5, 2)]];
        for a in &pts {
            for b in &pts {
                let (xa, xb) = (rect.point(a.to_vec()).unwrap(), rect.point(b.to_vec()).unwrap());
                let (ya, yb) = (gen.point(a.to_vec()).unwrap(), gen.point(b.to_vec()).unwrap());
                assert_eq!(rect.distance_sq(&xa, &xb).unwrap(), gen.distance_sq(&ya, &yb).unwrap());
            }
        }
    }

    #[test]
    fn general_rejects_high_dimension_and_singular_bases() {
        let eye = |k: usize| (0..k).map(|i| (0..k).map(|j| if i == j { r(1, 1) } else { r(0, 1) }).collect()).collect();
        assert!(matches!(TorusLattice::general(eye(5)), Err(GapError::UnsupportedDimension { k: 5, max: 4 })));
        assert!(TorusLattice::general(vec![vec![r(1, 1), r(2, 1)], vec![r(2, 1), r(4, 1)]]).is_err());
        assert!(TorusLattice::rectangular(vec![r(0, 1)]).is_err());
    }

    #[test]
    fn circle_as_one_torus() {
        let l = TorusLattice::rectangular_int(&[1]).unwrap();
        let o = translation_orbit(&l, &[r(1, 3)], &l.point_int(&[0]).unwrap(), 2).unwrap();
        let xs: Vec<Rational> = o.points.iter().map(|p| p.0[0]).collect();
        assert_eq!(xs, vec![r(0, 1), r(1, 3), r(2, 3)]);
        assert!(!o.degenerate);
    }

    #[test]
    fn diagonal_step_generates_all_lattice_points() {
        let l = TorusLattice::rectangular_int(&[3, 5]).unwrap();
        let o = translation_orbit(&l, &[r(1, 1), r(1, 1)], &l.point_int(&[0, 0]).unwrap(), 14).unwrap();
        let mut seen: Vec<(i128, i128)> = o.points.iter().map(|p| (p.0[0].to_integer(), p.0[1].to_integer())).collect();
        seen.sort();
        let all: Vec<(i128, i128)> = (0..3).flat_map(|a| (0..5).map(move |b| (a, b))).collect();
        assert_eq!(seen, all);
    }

    #[test]
    fn zero_step_is_degenerate() {
        let l = TorusLattice::rectangular_int(&[3, 5]).unwrap();
        let o = translation_orbit(&l, &[r(3, 1), r(0, 1)], &l.point_int(&[1, 1]).unwrap(), 3).unwrap();
        assert!(o.degenerate);
        assert!(o.points.iter().all(|p| *p == o.points[0]));
    }

    #[test]
    fn three_five_certificate() {
        let c = many_gaps_construction(&[3, 5], Perturbation::Auto).unwrap();
        assert_eq!(c.n_points, 15);
        assert_eq!(c.inverses, vec![2, 2]);
        assert_eq!(c.indices, vec![10, 9]);
        assert_eq!(c.signs, vec![1, -1]);
        assert!(c.distinct && c.decreasing);
        assert!(c.nnd_count >= 2);
    }

    #[test]
    fn three_five_with_fixed_s() {
        let c = many_gaps_construction(&[3, 5], Perturbation::Value(r(1, 900))).unwrap();
        assert_eq!(c.distances_sq[1], r(9802, 10000));
        assert_eq!(c.distances_sq[0], Rational::one() - r(1, 45) + r(1, 4050));
        assert!(c.distances_sq.iter().all(|d| *d < Rational::one()));
        // generic torus distance agrees
        let orbit = c.orbit();
        let l = c.lattice();
        assert_eq!(l.distance_sq(&orbit.points[9], &orbit.points[0]).unwrap(), c.distances_sq[1]);
        assert_eq!(l.distance_sq(&orbit.points[10], &orbit.points[0]).unwrap(), c.distances_sq[0]);
    }

    #[test]
    fn nearest_neighbor_of_x10_is_x0() {
        let c = many_gaps_construction(&[3, 5], Perturbation::Value(r(1, 900))).unwrap();
        let l = c.lattice();
        let orbit = c.orbit();
        let nb = nnd_of_index(10, &orbit.points, &l).unwrap();
        assert_eq!(nb.index, 0);
        let expected = 1.0 - 20.0 / 900.0 + 2.0 * (10.0f64 / 900.0).powi(2);
        assert!((l.to_real(&nb.value) - expected.sqrt()).abs() < 1e-15);
        assert!((l.to_real(&nb.value) - 0.988951).abs() < 1e-6);
    }

    #[test]
    fn certificate_matches_brute_force_orbit() {
        for primes in [vec![3u64, 5], vec![3, 7], vec![5, 7], vec![3, 5, 7], vec![11], vec![3, 11]] {
            let c = many_gaps_construction(&primes, Perturbation::Auto).unwrap();
            let l = c.lattice();
            let orbit = c.orbit();
            let brute = brute_force_spectrum(&orbit.points, &l).unwrap();
            assert_eq!(brute.count(), c.nnd_count, "primes {primes:?}");
            for (j, &a) in c.indices.iter().enumerate() {
                assert_eq!(brute.neighbors[a as usize], 0, "primes {primes:?}, j = {j}");
                assert_eq!(brute.values[a as usize], c.distances_sq[j]);
            }
            assert_eq!(certificate_spectrum(&c).unwrap().values, brute.values);
        }
    }

    #[test]
    fn rejects_bad_prime_lists() {
        assert!(many_gaps_construction(&[3, 3], Perturbation::Auto).is_err());
        assert!(many_gaps_construction(&[2, 3], Perturbation::Auto).is_err());
        assert!(many_gaps_construction(&[9], Perturbation::Auto).is_err());
        assert!(many_gaps_construction(&[], Perturbation::Auto).is_err());
        assert!(many_gaps_construction(&[3], Perturbation::Value(r(-1, 2))).is_err());
    }

    #[test]
    fn large_s_fails_with_index() {
        let err = many_gaps_construction(&[3, 5], Perturbation::Value(r(1, 5))).unwrap_err();
        assert!(matches!(err, GapError::CertificateFailure { .. }), "{err:?}");
    }
}
