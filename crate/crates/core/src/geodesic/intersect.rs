use std::collections::{BTreeSet, HashMap};

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use super::integrate::GeodesicTrajectory;
use super::surface::V3;
use crate::error::{domain, Result};
use crate::klein::{unfold_into_domain, KleinGeodesic, KleinQuotient};
use crate::rational::to_f64;

pub const DEFAULT_THETA_MIN: f64 = 1e-3;

/// A smooth piece of a curve sampled at increasing parameters, with unit
/// velocities. A trajectory is one piece; an unfolded quotient geodesic is
/// one piece per visit to the fundamental domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePiece {
    pub s: Vec<f64>,
    pub x: Vec<V3>,
    pub v: Vec<V3>,
}

impl CurvePiece {
    pub fn from_trajectory(traj: &GeodesicTrajectory) -> Self {
        CurvePiece { s: traj.times.clone(), x: traj.positions.clone(), v: traj.velocities.clone() }
    }

    fn range(&self) -> (f64, f64) {
        (self.s[0], *self.s.last().expect("nonempty piece"))
    }

    /// Cubic Hermite evaluation; `t` is clamped into the piece.
    pub fn eval(&self, t: f64) -> (V3, V3) {
        let (lo, hi) = self.range();
        let t = t.clamp(lo, hi);
        let i = match self.s.binary_search_by(|a| a.total_cmp(&t)) {
            Ok(i) => return (self.x[i], self.v[i]),
            Err(i) => i.clamp(1, self.s.len() - 1) - 1,
        };
        let dt = self.s[i + 1] - self.s[i];
        let u = (t - self.s[i]) / dt;
        let (p0, p1, m0, m1) = (self.x[i], self.x[i + 1], self.v[i] * dt, self.v[i + 1] * dt);
        let (u2, u3) = (u * u, u * u * u);
        let p = p0 * (2.0 * u3 - 3.0 * u2 + 1.0) + m0 * (u3 - 2.0 * u2 + u) + p1 * (-2.0 * u3 + 3.0 * u2) + m1 * (u3 - u2);
        let dp = (p0 * (6.0 * u2 - 6.0 * u) + m0 * (3.0 * u2 - 4.0 * u + 1.0) + p1 * (-6.0 * u2 + 6.0 * u) + m1 * (3.0 * u2 - 2.0 * u))
            / dt;
        (p, dp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionRecord {
    pub s: f64,
    pub t: f64,
    pub location: [f64; 3],
    /// Angle between the two unit tangents, in `(0, pi)`.
    pub angle: f64,
    pub gap: f64,
    pub site: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbiguousApproach {
    pub s: f64,
    pub t: f64,
    pub angle: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionSite {
    pub location: [f64; 3],
    /// Number of branch pairs crossing here.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub records: Vec<IntersectionRecord>,
    pub sites: Vec<IntersectionSite>,
    pub total_multiplicity: usize,
    pub ambiguous: Vec<AmbiguousApproach>,
    pub eps_match: f64,
    pub theta_min: f64,
}

impl IntersectionReport {
    pub fn count(&self) -> usize {
        self.records.len()
    }
}

/// Closest points of segments `p0p1` and `q0q1` as fractions along each.
fn segment_closest(p0: &V3, p1: &V3, q0: &V3, q1: &V3) -> (f64, f64, f64) {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let (a, e, f) = (d1.dot(&d1), d2.dot(&d2), d2.dot(&r));
    let (mut sa, mut tb);
    if a <= 1e-300 && e <= 1e-300 {
        return (0.0, 0.0, r.norm());
    }
    if a <= 1e-300 {
        sa = 0.0;
        tb = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-300 {
            tb = 0.0;
            sa = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            sa = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            tb = (b * sa + f) / e;
            if tb < 0.0 {
                tb = 0.0;
                sa = (-c / a).clamp(0.0, 1.0);
            } else if tb > 1.0 {
                tb = 1.0;
                sa = ((b - c) / a).clamp(0.0, 1.0);
            }
        }
    }
    let gap = (p0 + d1 * sa - (q0 + d2 * tb)).norm();
    (sa, tb, gap)
}

type SegId = (usize, usize);

fn candidate_pairs(pieces: &[CurvePiece], eps: f64) -> BTreeSet<(SegId, SegId)> {
    let longest = pieces
        .iter()
        .flat_map(|p| p.x.windows(2).map(|w| (w[1] - w[0]).norm()))
        .fold(0.0, f64::max);
    let cell = (longest + eps).max(1e-12);
    let key = |c: f64| (c / cell).floor() as i64;
    let mut grid: HashMap<(i64, i64, i64), Vec<SegId>> = HashMap::new();
    for (pi, piece) in pieces.iter().enumerate() {
        for si in 0..piece.x.len().saturating_sub(1) {
            let (a, b) = (piece.x[si], piece.x[si + 1]);
            let lo = a.inf(&b).add_scalar(-eps);
            let hi = a.sup(&b).add_scalar(eps);
            for i in key(lo.x)..=key(hi.x) {
                for j in key(lo.y)..=key(hi.y) {
                    for k in key(lo.z)..=key(hi.z) {
                        grid.entry((i, j, k)).or_default().push((pi, si));
                    }
                }
            }
        }
    }
    let mut pairs = BTreeSet::new();
    for bucket in grid.values() {
        for (n, &a) in bucket.iter().enumerate() {
            for &b in &bucket[n + 1..] {
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                if a.0 == b.0 && b.1 <= a.1 + 1 {
                    continue;
                }
                pairs.insert((a, b));
            }
        }
    }
    pairs
}

/// Gauss-Newton on `gamma_a(s) = gamma_b(t)`.
fn refine(pa: &CurvePiece, pb: &CurvePiece, mut s: f64, mut t: f64) -> (f64, f64) {
    for _ in 0..30 {
        let (xa, va) = pa.eval(s);
        let (xb, vb) = pb.eval(t);
        let r = xa - xb;
        let jtj = Matrix2::new(va.dot(&va), -va.dot(&vb), -va.dot(&vb), vb.dot(&vb));
        let jtr = Vector2::new(va.dot(&r), -vb.dot(&r));
        let Some(d) = jtj.lu().solve(&(-jtr)) else { break };
        s += d[0];
        t += d[1];
        if d.norm() < 1e-15 * (1.0 + s.abs() + t.abs()) {
            break;
        }
    }
    (s, t)
}

/// Transverse self-intersections of a curve given as pieces. Candidate
/// segment pairs come from a uniform spatial hash; each candidate is refined
/// on the Hermite interpolants. Crossings with `sin(angle) < sin(theta_min)`
/// are reported as ambiguous instead of counted.
pub fn count_crossings(pieces: &[CurvePiece], eps_match: f64, theta_min: f64) -> Result<IntersectionReport> {
    if !(eps_match > 0.0) || !(theta_min > 0.0 && theta_min < std::f64::consts::FRAC_PI_2) {
        return domain("need eps_match > 0 and 0 < theta_min < pi/2");
    }
    if pieces.iter().any(|p| p.s.len() < 2) {
        return domain("every piece needs at least two samples");
    }
    let mut found: Vec<(f64, f64, V3, f64, f64)> = Vec::new();
    let mut ambiguous: Vec<AmbiguousApproach> = Vec::new();
    for ((pa, sa), (pb, sb)) in candidate_pairs(pieces, eps_match) {
        let (a, b) = (&pieces[pa], &pieces[pb]);
        let (fa, fb, gap) = segment_closest(&a.x[sa], &a.x[sa + 1], &b.x[sb], &b.x[sb + 1]);
        if gap > eps_match {
            continue;
        }
        let s0 = a.s[sa] + fa * (a.s[sa + 1] - a.s[sa]);
        let t0 = b.s[sb] + fb * (b.s[sb + 1] - b.s[sb]);
        // a unit-speed curve is always this close to itself nearby
        if pa == pb && (t0 - s0).abs() <= 4.0 * eps_match {
            continue;
        }
        let (va, vb) = (a.eval(s0).1, b.eval(t0).1);
        let cos0 = va.dot(&vb) / (va.norm() * vb.norm());
        let sin0 = (1.0 - cos0 * cos0).max(0.0).sqrt();
        if sin0 < theta_min.sin() {
            ambiguous.push(AmbiguousApproach { s: s0, t: t0, angle: cos0.clamp(-1.0, 1.0).acos(), gap });
            continue;
        }
        let (s, t) = refine(a, b, s0, t0);
        let (alo, ahi) = a.range();
        let (blo, bhi) = b.range();
        if s < alo || s > ahi || t < blo || t > bhi || (pa == pb && (t - s).abs() <= 4.0 * eps_match) {
            continue;
        }
        let ((xa, va), (xb, vb)) = (a.eval(s), b.eval(t));
        let gap = (xa - xb).norm();
        if gap > eps_match {
            continue;
        }
        let cos = (va.dot(&vb) / (va.norm() * vb.norm())).clamp(-1.0, 1.0);
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        found.push((s, t, (xa + xb) / 2.0, cos.acos(), gap));
    }
    // one crossing may be seen by several neighboring segment pairs
    found.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut unique: Vec<(f64, f64, V3, f64, f64)> = Vec::new();
    for f in found {
        let dup = unique.iter().rev().take_while(|u| f.0 - u.0 < 1e-7).any(|u| (u.1 - f.1).abs() < 1e-7);
        if !dup {
            unique.push(f);
        }
    }
    ambiguous.sort_by(|x, y| x.s.total_cmp(&y.s).then(x.t.total_cmp(&y.t)));
    ambiguous.dedup_by(|x, y| (x.s - y.s).abs() < eps_match && (x.t - y.t).abs() < eps_match);

    let mut sites: Vec<IntersectionSite> = Vec::new();
    let mut records = Vec::with_capacity(unique.len());
    for (s, t, loc, angle, gap) in unique {
        let site = match sites.iter().position(|st| (V3::from(st.location) - loc).norm() <= eps_match) {
            Some(i) => {
                sites[i].multiplicity += 1;
                i
            }
            None => {
                sites.push(IntersectionSite { location: loc.into(), multiplicity: 1 });
                sites.len() - 1
            }
        };
        records.push(IntersectionRecord { s, t, location: loc.into(), angle, gap, site });
    }
    let total_multiplicity = sites.iter().map(|s| s.multiplicity).sum();
    Ok(IntersectionReport { records, sites, total_multiplicity, ambiguous, eps_match, theta_min })
}

pub fn count_self_intersections(traj: &GeodesicTrajectory, eps_match: f64, theta_min: f64) -> Result<IntersectionReport> {
    count_crossings(&[CurvePiece::from_trajectory(traj)], eps_match, theta_min)
}

/// Samples a Klein-bottle geodesic piecewise inside the fundamental domain
/// (embedded as `z = 0`), at spacing at most `h`, parameterized by arc length.
pub fn klein_pieces(k: &KleinQuotient, g: &KleinGeodesic, h: f64) -> Vec<CurvePiece> {
    let speed = g.speed();
    unfold_into_domain(k, g)
        .into_iter()
        .filter(|p| p.u_to > p.u_from)
        .map(|p| {
            let from = V3::new(to_f64(&p.from[0]), to_f64(&p.from[1]), 0.0);
            let to = V3::new(to_f64(&p.to[0]), to_f64(&p.to[1]), 0.0);
            let (s0, s1) = (to_f64(&p.u_from) * speed, to_f64(&p.u_to) * speed);
            let dir = (to - from).normalize();
            let m = ((s1 - s0) / h).ceil().max(1.0) as usize;
            let mut piece = CurvePiece { s: Vec::new(), x: Vec::new(), v: Vec::new() };
            for i in 0..=m {
                let f = i as f64 / m as f64;
                piece.s.push(s0 + f * (s1 - s0));
                piece.x.push(from + (to - from) * f);
                piece.v.push(dir);
            }
            piece
        })
        .collect()
}
