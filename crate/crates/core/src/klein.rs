//! The flat Klein bottle: the plane modulo the glide reflection
//! `(x, y) -> (x + w, -y)` and the translation `(x, y) -> (x, y + h)`.
//!
//! Every group element has the form `(x, y) -> (x + a w, (-1)^a y + b h)`,
//! indexed here by `(a, b)`. Straight lines in the plane are the geodesics;
//! their self-intersections on the quotient are the pairs `s < t` with
//! `line(t) = g(line(s))` for some group element `g`.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::rational::{rem_euclid, serde_rational, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KleinQuotient {
    #[serde(with = "serde_rational")]
    pub width: Rational,
    #[serde(with = "serde_rational")]
    pub height: Rational,
}

pub type PlanePoint = [Rational; 2];

impl KleinQuotient {
    pub fn new(width: Rational, height: Rational) -> Result<Self> {
        if !width.is_positive() || !height.is_positive() {
            return domain("Klein bottle widths must be positive");
        }
        Ok(KleinQuotient { width, height })
    }

    /// Unit square fundamental domain.
    pub fn standard() -> Self {
        KleinQuotient { width: Rational::one(), height: Rational::one() }
    }

    pub fn apply(&self, (a, b): (i64, i64), p: &PlanePoint) -> PlanePoint {
        let y = if a.rem_euclid(2) == 0 { p[1] } else { -p[1] };
        [p[0] + self.width * Rational::from_integer(a as i128), y + self.height * Rational::from_integer(b as i128)]
    }

    /// Representative in `[0, w) x [0, h)`.
    pub fn canonical(&self, p: &PlanePoint) -> PlanePoint {
        let a = (p[0] / self.width).floor().to_integer() as i64;
        let moved = self.apply((-a, 0), p);
        [moved[0], rem_euclid(&moved[1], &self.height)]
    }

    /// Exact squared quotient distance by enumerating group elements within
    /// `ceil(best / min(w, h)) + 1` steps of the identity.
    pub fn distance_sq(&self, p: &PlanePoint, q: &PlanePoint) -> Rational {
        let (p, q) = (self.canonical(p), self.canonical(q));
        let sq = |u: &PlanePoint, v: &PlanePoint| {
            let (dx, dy) = (u[0] - v[0], u[1] - v[1]);
            dx * dx + dy * dy
        };
        let mut best = sq(&p, &q);
        let short = if self.width < self.height { self.width } else { self.height };
        let radius = (to_f64(&best).sqrt() / to_f64(&short)).ceil() as i64 + 1;
        for a in -radius..=radius {
            for b in -radius..=radius {
                let d = sq(&p, &self.apply((a, b), &q));
                if d < best {
                    best = d;
                }
            }
        }
        best
    }

    /// Floating counterpart of [`Self::distance_sq`] for perturbed samples.
    pub fn distance_f64(&self, p: [f64; 2], q: [f64; 2]) -> f64 {
        let (w, h) = (to_f64(&self.width), to_f64(&self.height));
        let canon = |p: [f64; 2]| {
            let a = (p[0] / w).floor();
            let y = if (a as i64).rem_euclid(2) == 0 { p[1] } else { -p[1] };
            [p[0] - a * w, y.rem_euclid(h)]
        };
        let (p, q) = (canon(p), canon(q));
        let mut best = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let radius = (best / w.min(h)).ceil() as i64 + 1;
        for a in -radius..=radius {
            for b in -radius..=radius {
                let y = if a.rem_euclid(2) == 0 { q[1] } else { -q[1] };
                let img = [q[0] + a as f64 * w, y + b as f64 * h];
                best = best.min(((p[0] - img[0]).powi(2) + (p[1] - img[1]).powi(2)).sqrt());
            }
        }
        best
    }
}

/// A geodesic segment `start + u * (dx, dy)`, `u` in `[0, U]`, with arc
/// length `L = U * |(dx, dy)|`. Direction components are integers so
/// intersection parameters stay rational.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KleinGeodesic {
    #[serde(with = "serde_rational::vec")]
    pub start: Vec<Rational>,
    pub direction: [i64; 2],
    #[serde(with = "serde_rational")]
    pub length: Rational,
}

impl KleinGeodesic {
    /// From a slope `rise/run` (run 0 means vertical).
    pub fn from_slope(start: PlanePoint, rise: i64, run: i64, length: Rational) -> Result<Self> {
        if rise == 0 && run == 0 {
            return domain("slope direction must be nonzero");
        }
        if !length.is_positive() {
            return domain("geodesic length must be positive");
        }
        let (dx, dy) = if run < 0 || (run == 0 && rise < 0) { (-run, -rise) } else { (run, rise) };
        Ok(KleinGeodesic { start: start.to_vec(), direction: [dx, dy], length })
    }

    pub fn speed_sq(&self) -> i128 {
        let [dx, dy] = self.direction;
        dx as i128 * dx as i128 + dy as i128 * dy as i128
    }

    pub fn speed(&self) -> f64 {
        (self.speed_sq() as f64).sqrt()
    }

    /// Position at line parameter `u` (not arc length).
    pub fn at(&self, u: &Rational) -> PlanePoint {
        [
            self.start[0] + u * Rational::from_integer(self.direction[0] as i128),
            self.start[1] + u * Rational::from_integer(self.direction[1] as i128),
        ]
    }

    pub fn at_arc_f64(&self, s: f64) -> [f64; 2] {
        let u = s / self.speed();
        [to_f64(&self.start[0]) + u * self.direction[0] as f64, to_f64(&self.start[1]) + u * self.direction[1] as f64]
    }

    fn param_in_range(&self, u: &Rational) -> bool {
        !u.is_negative() && *u * *u * Rational::from_integer(self.speed_sq()) <= self.length * self.length
    }

    fn param_length_f64(&self) -> f64 {
        to_f64(&self.length) / self.speed()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KleinCrossing {
    /// Line parameters with `s < t`; arc lengths are these times the speed.
    #[serde(with = "serde_rational")]
    pub s: Rational,
    #[serde(with = "serde_rational")]
    pub t: Rational,
    pub s_arc: f64,
    pub t_arc: f64,
    /// Exact cosine of the angle between the two branches.
    #[serde(with = "serde_rational")]
    pub cos_angle: Rational,
    pub angle: f64,
    #[serde(with = "serde_rational::vec")]
    pub point: Vec<Rational>,
    pub element: (i64, i64),
}

/// A group element carrying the segment onto itself with positive-length
/// overlap: the geodesic closes up instead of crossing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KleinOverlap {
    pub element: (i64, i64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KleinIntersections {
    pub crossings: Vec<KleinCrossing>,
    pub overlaps: Vec<KleinOverlap>,
}

/// Exact transverse self-intersections of a Klein-bottle geodesic segment,
/// sorted by `(s, t)`.
pub fn klein_geodesic_intersections(k: &KleinQuotient, g: &KleinGeodesic) -> KleinIntersections {
    let [dx, dy] = g.direction;
    let (qx, qy) = (Rational::from_integer(dx as i128), Rational::from_integer(dy as i128));
    let (w, h) = (k.width, k.height);
    let y0 = g.start[1];
    let umax = g.param_length_f64();
    let reach_a = ((dx.abs() as f64 * umax) / to_f64(&w)).ceil() as i64 + 1;
    let reach_b = ((2.0 * to_f64(&y0).abs() + 2.0 * dy.abs() as f64 * umax) / to_f64(&h)).ceil() as i64 + 2;
    let speed_sq = Rational::from_integer(g.speed_sq());
    let mut crossings = Vec::new();
    let mut overlaps = Vec::new();
    for a in -reach_a..=reach_a {
        let shift_x = w * Rational::from_integer(a as i128);
        for b in -reach_b..=reach_b {
            if a == 0 && b == 0 {
                continue;
            }
            let shift_y = h * Rational::from_integer(b as i128);
            if a.rem_euclid(2) == 0 {
                // translation by (a w, b h): parallel copy
                let parallel = shift_x * qy == shift_y * qx;
                if parallel {
                    let lambda = if dx != 0 { shift_x / qx } else { shift_y / qy };
                    if lambda * lambda * speed_sq < g.length * g.length {
                        overlaps.push(KleinOverlap { element: (a, b) });
                    }
                }
                continue;
            }
            // glide image: line(u) = g(line(v)) means
            //   dx (u - v) = a w  and  dy (u + v) = b h - 2 y0
            if dx == 0 {
                continue;
            }
            if dy == 0 {
                if shift_y == y0 * Rational::from_integer(2) {
                    let lambda = shift_x / qx;
                    if lambda * lambda * speed_sq < g.length * g.length {
                        overlaps.push(KleinOverlap { element: (a, b) });
                    }
                }
                continue;
            }
            let diff = shift_x / qx;
            let sum = (shift_y - y0 * Rational::from_integer(2)) / qy;
            let u = (sum + diff) / Rational::from_integer(2);
            let v = (sum - diff) / Rational::from_integer(2);
            if v.is_negative() || v >= u || !g.param_in_range(&u) {
                continue;
            }
            // pushforward of (dx, dy) under an odd element is (dx, -dy)
            let cos_angle = (qx * qx - qy * qy) / speed_sq;
            let speed = g.speed();
            crossings.push(KleinCrossing {
                s: v,
                t: u,
                s_arc: to_f64(&v) * speed,
                t_arc: to_f64(&u) * speed,
                cos_angle,
                angle: to_f64(&cos_angle).clamp(-1.0, 1.0).acos(),
                point: k.canonical(&g.at(&u)).to_vec(),
                element: (a, b),
            });
        }
    }
    crossings.sort_by(|x, y| x.s.cmp(&y.s).then(x.t.cmp(&y.t)));
    KleinIntersections { crossings, overlaps }
}

/// A straight piece of the geodesic inside the fundamental rectangle, with
/// the line parameters where it starts and ends.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPiece {
    pub from: PlanePoint,
    pub to: PlanePoint,
    pub u_from: Rational,
    pub u_to: Rational,
}

/// Cuts the geodesic at the edges of `[0, w] x [0, h]`, re-entering through
/// the glued edge each time. Exact.
pub fn unfold_into_domain(k: &KleinQuotient, g: &KleinGeodesic) -> Vec<DomainPiece> {
    let (w, h) = (k.width, k.height);
    let total_sq = g.length * g.length / Rational::from_integer(g.speed_sq());
    let mut p = k.canonical(&[g.start[0], g.start[1]]);
    let mut d = [Rational::from_integer(g.direction[0] as i128), Rational::from_integer(g.direction[1] as i128)];
    let mut u = Rational::zero();
    let mut pieces = Vec::new();
    loop {
        let hit = |pos: Rational, vel: Rational, hi: Rational| -> Option<Rational> {
            if vel.is_positive() {
                Some((hi - pos) / vel)
            } else if vel.is_negative() {
                Some(-pos / vel)
            } else {
                None
            }
        };
        let tx = hit(p[0], d[0], w);
        let ty = hit(p[1], d[1], h);
        let mut step = match (tx, ty) {
            (Some(a), Some(b)) => if a < b { a } else { b },
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("direction is nonzero"),
        };
        let end_u = u + step;
        let last = end_u * end_u >= total_sq;
        if last {
            step = remaining_param(g, &u);
        }
        let q = [p[0] + d[0] * step, p[1] + d[1] * step];
        pieces.push(DomainPiece { from: p, to: q, u_from: u, u_to: u + step });
        if last {
            break;
        }
        u += step;
        let mut next = q;
        if next[0] == w && d[0].is_positive() {
            next = [Rational::zero(), -next[1]];
            d[1] = -d[1];
        } else if next[0].is_zero() && d[0].is_negative() {
            next = [w, -next[1]];
            d[1] = -d[1];
        }
        next[1] = rem_euclid(&next[1], &h);
        if next[1].is_zero() && d[1].is_negative() {
            next[1] = h;
        }
        p = next;
    }
    pieces
}

/// Remaining line parameter from `u` to the end. Exact only when the arc
/// length is a rational multiple of the speed; otherwise rounded.
fn remaining_param(g: &KleinGeodesic, u: &Rational) -> Rational {
    let speed_sq = g.speed_sq();
    let root = (speed_sq as f64).sqrt().round() as i128;
    if root * root == speed_sq {
        g.length / Rational::from_integer(root) - u
    } else {
        let end = to_f64(&g.length) / (speed_sq as f64).sqrt();
        Rational::approximate_float(end).unwrap_or_else(Rational::zero) - u
    }
}
