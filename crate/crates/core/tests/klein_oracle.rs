//! Exact segment-arrangement oracle for Klein-bottle geodesics: cut the line
//! at every cell boundary of the plane, fold each piece into the fundamental
//! rectangle and intersect the folded pieces pairwise.

use std::collections::BTreeSet;

use gapscope_core::klein::{klein_geodesic_intersections, KleinGeodesic, KleinQuotient};
use gapscope_core::Rational;
use proptest::prelude::*;

type P = [Rational; 2];

struct Piece {
    a: P,
    b: P,
    u0: Rational,
    u1: Rational,
}

fn int(x: i128) -> Rational {
    Rational::from_integer(x)
}

fn cross(p: &P, q: &P) -> Rational {
    p[0] * q[1] - p[1] * q[0]
}

fn sub(p: &P, q: &P) -> P {
    [p[0] - q[0], p[1] - q[1]]
}

fn fold(w: Rational, h: Rational, start: &P, d: [i128; 2], umax: Rational) -> Vec<Piece> {
    let line = |u: Rational| -> P { [start[0] + u * int(d[0]), start[1] + u * int(d[1])] };
    let mut cuts = vec![Rational::from_integer(0), umax];
    for (axis, side) in [(0usize, w), (1usize, h)] {
        if d[axis] == 0 {
            continue;
        }
        let (lo, hi) = {
            let (p, q) = (line(Rational::from_integer(0))[axis] / side, line(umax)[axis] / side);
            if p < q { (p, q) } else { (q, p) }
        };
        let mut m = lo.ceil().to_integer();
        while int(m) <= hi {
            let u = (int(m) * side - start[axis]) / int(d[axis]);
            if u > Rational::from_integer(0) && u < umax {
                cuts.push(u);
            }
            m += 1;
        }
    }
    cuts.sort();
    cuts.dedup();
    cuts.windows(2)
        .map(|c| {
            let mid = line((c[0] + c[1]) / int(2));
            let a = (mid[0] / w).floor().to_integer();
            let sign = if a.rem_euclid(2) == 0 { int(1) } else { int(-1) };
            let b = ((sign * mid[1]) / h).floor();
            let map = |p: P| -> P { [p[0] - int(a) * w, sign * p[1] - b * h] };
            Piece { a: map(line(c[0])), b: map(line(c[1])), u0: c[0], u1: c[1] }
        })
        .collect()
}

/// Images of a point under the nine group elements nearest the identity.
fn neighbors(w: Rational, h: Rational, p: &P) -> Vec<P> {
    let mut out = Vec::new();
    for a in -1i128..=1 {
        for b in -1i128..=1 {
            let flip = a.rem_euclid(2) == 1;
            let y = if flip { -p[1] } else { p[1] };
            out.push([p[0] + int(a) * w, y + int(b) * h]);
        }
    }
    out
}

/// Transverse crossings as `(v, u, cos)` with `v < u` in line parameters.
fn oracle(w: Rational, h: Rational, start: &P, d: [i128; 2], umax: Rational) -> BTreeSet<(Rational, Rational, Rational)> {
    let pieces = fold(w, h, start, d, umax);
    let speed_sq = int(d[0] * d[0] + d[1] * d[1]);
    let mut found = BTreeSet::new();
    for (i, p) in pieces.iter().enumerate() {
        let dp = sub(&p.b, &p.a);
        for q in pieces.iter().skip(i) {
            for (qa, qb) in neighbors(w, h, &q.a).into_iter().zip(neighbors(w, h, &q.b)) {
                let dq = sub(&qb, &qa);
                let den = cross(&dp, &dq);
                if den == int(0) {
                    continue;
                }
                let r = sub(&qa, &p.a);
                let s = cross(&r, &dq) / den;
                let t = cross(&r, &dp) / den;
                let unit = int(0)..=int(1);
                if !unit.contains(&s) || !unit.contains(&t) {
                    continue;
                }
                let up = p.u0 + s * (p.u1 - p.u0);
                let uq = q.u0 + t * (q.u1 - q.u0);
                if up == uq {
                    continue;
                }
                // line-parameter velocities of both branches at the crossing
                let vp = [dp[0] / (p.u1 - p.u0), dp[1] / (p.u1 - p.u0)];
                let vq = [dq[0] / (q.u1 - q.u0), dq[1] / (q.u1 - q.u0)];
                let cos = (vp[0] * vq[0] + vp[1] * vq[1]) / speed_sq;
                let (v, u) = if up < uq { (up, uq) } else { (uq, up) };
                found.insert((v, u, cos));
            }
        }
    }
    found
}

const TRIPLES: [(i64, i64, i128); 6] = [(3, 4, 5), (4, 3, 5), (5, 12, 13), (12, 5, 13), (8, 15, 17), (1, 0, 1)];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn crossings_match_the_arrangement_oracle(
        which in 0usize..TRIPLES.len(),
        flip in any::<bool>(),
        w in (1i128..=3, 1i128..=2),
        h in (1i128..=3, 1i128..=2),
        sx in (0i128..40, 40i128..=40),
        sy in (1i128..97, 97i128..=97),
        len_num in 1i128..=32,
    ) {
        let (run, rise, hyp) = TRIPLES[which];
        let rise = if flip { -rise } else { rise };
        let k = KleinQuotient::new(Rational::new(w.0, w.1), Rational::new(h.0, h.1)).unwrap();
        let start = [Rational::new(sx.0, sx.1) * k.width, Rational::new(sy.0, sy.1) * k.height];
        let umax = Rational::new(len_num, 4);
        let g = KleinGeodesic::from_slope(start, rise, run, umax * int(hyp)).unwrap();
        let ours = klein_geodesic_intersections(&k, &g);
        let d = [g.direction[0] as i128, g.direction[1] as i128];
        let want = oracle(k.width, k.height, &[g.start[0], g.start[1]], d, umax);
        let got: BTreeSet<(Rational, Rational, Rational)> =
            ours.crossings.iter().map(|c| (c.s, c.t, c.cos_angle)).collect();
        prop_assert_eq!(got.len(), ours.crossings.len());
        prop_assert_eq!(got, want);
        for c in &ours.crossings {
            prop_assert_eq!(k.distance_sq(&g.at(&c.s), &g.at(&c.t)), int(0));
        }
    }
}
