use std::f64::consts::PI;

use gapscope_core::geodesic::{
    conjugate_points, count_self_intersections, derivative_triple_analytic, derivative_triple_fd,
    derivative_triple_fd_klein, integrate_geodesic, intrinsic_distance, sample_geodesic, surface_nnd, CurvePiece,
    DistanceMethod, Surface, V3, DEFAULT_XIS,
};
use gapscope_core::klein::{klein_geodesic_intersections, KleinGeodesic, KleinQuotient};
use gapscope_core::rational::to_f64;
use gapscope_core::torus::{translation_orbit, TorusLattice, TorusPoint};
use gapscope_core::{ClusterPolicy, Rational};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

fn great_circle(x0: &V3, v0: &V3, t: f64) -> V3 {
    x0 * t.cos() + v0 * t.sin()
}

fn random_frame(rng: &mut StdRng) -> (V3, V3) {
    let x = V3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
    let w = V3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let v = (w - x * x.dot(&w)).normalize();
    (x, v)
}

#[test]
fn sphere_error_shrinks_sixteenfold_when_h_halves() {
    let s = Surface::unit_sphere();
    let (x0, v0) = (V3::new(0.6, 0.0, 0.8), V3::y());
    let err = |h: f64| {
        let traj = integrate_geodesic(&s, &x0, &v0, 10.0, h).unwrap();
        traj.times
            .iter()
            .zip(&traj.positions)
            .map(|(t, x)| (x - great_circle(&x0, &v0, *t)).norm())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(0.1), err(0.05));
    let ratio = e1 / e2;
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} from {e1} and {e2}");
}

#[test]
fn residuals_stay_below_tolerance_on_every_builtin() {
    let cases = [
        (Surface::unit_sphere(), V3::new(1.0, 0.0, 0.0), V3::new(0.0, 0.6, 0.8)),
        (Surface::ellipsoid(1.0, 1.2, 1.5).unwrap(), V3::new(1.0, 0.0, 0.0), V3::new(0.0, 0.6, 0.8)),
        (Surface::Torus { major: 2.0, minor: 0.7 }, V3::new(2.7, 0.0, 0.0), V3::new(0.0, 0.8, 0.6)),
        (Surface::Plane, V3::zeros(), V3::new(0.6, 0.8, 0.0)),
    ];
    for (s, x0, v0) in cases {
        let traj = integrate_geodesic(&s, &x0, &v0, 50.0, 1e-3).unwrap();
        let (rf, rv) = traj.max_residuals();
        assert!(rf <= 1e-9 && rv <= 1e-9, "{s}: {rf} {rv}");
    }
}

#[test]
fn equatorial_ellipse_stays_planar() {
    let s = Surface::ellipsoid(1.0, 1.0, 1.5).unwrap();
    let traj = integrate_geodesic(&s, &V3::x(), &V3::y(), 40.0, 1e-3).unwrap();
    assert!(traj.positions.iter().all(|x| x.z.abs() <= 1e-9));
}

#[test]
fn sphere_quantities_match_closed_forms() {
    let s = Surface::unit_sphere();
    let round = Surface::Ellipsoid { a: 1.0, b: 1.0, c: 1.0 };
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..5 {
        let (x0, v0) = random_frame(&mut rng);
        let traj = integrate_geodesic(&s, &x0, &v0, 20.0, 1e-3).unwrap();
        let pts = sample_geodesic(&traj, 0.37, 50).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert!((p - great_circle(&x0, &v0, 0.37 * i as f64)).norm() <= 1e-8);
        }
        // shooting on a round ellipsoid against the arc-cosine formula
        let y = great_circle(&x0, &v0, 1.3) * 0.8 + x0.cross(&v0) * 0.6;
        let est = intrinsic_distance(&round, &x0, &y.normalize(), None).unwrap();
        assert_eq!(est.method, DistanceMethod::Refined);
        assert!((est.distance - x0.dot(&y.normalize()).acos()).abs() <= 1e-8);
        let conj = conjugate_points(&s, &x0, &v0, 4.0, 1e-3).unwrap();
        assert!((conj.first().unwrap() - PI).abs() <= 1e-8);
        let nnd = surface_nnd(&s, &pts, ClusterPolicy::default()).unwrap();
        assert!(nnd.spectrum.count() <= 3);
    }
}

#[test]
fn plane_samples_match_the_exact_torus_orbit() {
    let traj = integrate_geodesic(&Surface::Plane, &V3::zeros(), &V3::new(0.6, 0.8, 0.0), 60.0, 1e-3).unwrap();
    let pts = sample_geodesic(&traj, 0.5, 100).unwrap();
    let lattice = TorusLattice::rectangular_int(&[1, 1]).unwrap();
    let origin = TorusPoint(vec![Rational::from_integer(0); 2]);
    let orbit = translation_orbit(&lattice, &[Rational::new(3, 10), Rational::new(4, 10)], &origin, 100).unwrap();
    for (p, q) in pts.iter().zip(&orbit.points) {
        for (a, b) in [p.x, p.y].iter().zip(&q.0) {
            let d = (a - to_f64(b)).rem_euclid(1.0);
            assert!(d.min(1.0 - d) <= 1e-10, "{a} vs {b}");
        }
    }
}

/// Discrete geodesic by repeated midpoint averaging and projection along the
/// gradient onto the ellipsoid, for reference lengths.
fn polyline_length(a: f64, b: f64, c: f64, x: &V3, y: &V3, m: usize, sweeps: usize) -> f64 {
    let proj = |mut p: V3| {
        for _ in 0..3 {
            let f = (p.x / a).powi(2) + (p.y / b).powi(2) + (p.z / c).powi(2) - 1.0;
            let g = V3::new(2.0 * p.x / (a * a), 2.0 * p.y / (b * b), 2.0 * p.z / (c * c));
            p -= g * (f / g.norm_squared());
        }
        p
    };
    let mut pts: Vec<V3> = (0..=m).map(|i| proj(x + (y - x) * (i as f64 / m as f64))).collect();
    for _ in 0..sweeps {
        for i in 1..m {
            pts[i] = proj((pts[i - 1] + pts[i + 1]) / 2.0);
        }
    }
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

#[test]
fn ellipsoid_distances_match_the_polyline_oracle() {
    let (a, b, c) = (1.0, 1.2, 1.5);
    let s = Surface::ellipsoid(a, b, c).unwrap();
    let x = s.project(&V3::new(0.7, 0.5, 0.6)).unwrap();
    for target in [V3::new(0.5, 0.8, 0.5), V3::new(0.1, 0.9, 0.9), V3::new(0.8, 0.1, 0.9)] {
        let y = s.project(&target).unwrap();
        let est = intrinsic_distance(&s, &x, &y, None).unwrap();
        assert_eq!(est.method, DistanceMethod::Refined);
        // the inscribed polyline approaches from below at rate 1/m^2
        let coarse = polyline_length(a, b, c, &x, &y, 100, 40_000);
        let fine = polyline_length(a, b, c, &x, &y, 200, 160_000);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        assert!((est.distance - extrapolated).abs() <= 1e-7 * est.distance, "{} vs {extrapolated}", est.distance);
    }
}

#[test]
fn nearby_ellipsoid_points_refine_just_above_chordal() {
    let s = Surface::ellipsoid(1.0, 1.2, 1.5).unwrap();
    let mut rng = StdRng::seed_from_u64(17);
    for _ in 0..20 {
        let (x0, v0) = random_frame(&mut rng);
        let x = s.project(&x0).unwrap();
        let v = s.unit_tangent(&x, &v0).unwrap();
        let traj = integrate_geodesic(&s, &x, &v, 9e-4, 1e-4).unwrap();
        let y = traj.end().0;
        let est = intrinsic_distance(&s, &x, &y, None).unwrap();
        assert_eq!(est.method, DistanceMethod::Refined);
        assert!(est.distance >= est.chordal && est.distance <= est.chordal * (1.0 + 1e-4));
        assert!((est.distance - 9e-4).abs() <= 1e-12);
    }
}

#[test]
fn klein_finite_differences_match_the_analytic_triple() {
    let k = KleinQuotient::standard();
    for (rise, run, len) in [(4, 3, Rational::new(19, 2)), (1, 3, Rational::from_integer(3)), (3, 1, Rational::from_integer(6))] {
        let g = KleinGeodesic::from_slope([Rational::new(1, 7), Rational::new(2, 9)], rise, run, len).unwrap();
        let found = klein_geodesic_intersections(&k, &g);
        assert!(!found.crossings.is_empty());
        for c in &found.crossings {
            let fd = derivative_triple_fd_klein(&k, &g, c, &DEFAULT_XIS).unwrap();
            let exact = derivative_triple_analytic(c.s_arc, c.t_arc, c.angle);
            for (a, b) in fd.as_array().iter().zip(exact.as_array()) {
                assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn ellipsoid_finite_differences_match_the_analytic_triple() {
    let s = Surface::ellipsoid(1.0, 1.2, 1.5).unwrap();
    let x0 = s.project(&V3::new(1.0, 0.1, 0.2)).unwrap();
    let v0 = s.unit_tangent(&x0, &V3::new(0.0, 0.6, 0.8)).unwrap();
    let traj = integrate_geodesic(&s, &x0, &v0, 14.0, 1e-3).unwrap();
    let report = count_self_intersections(&traj, 1e-2, 1e-3).unwrap();
    assert!(!report.records.is_empty());
    let curve = CurvePiece::from_trajectory(&traj);
    for rec in report.records.iter().filter(|r| r.t + 2.0 * r.t * DEFAULT_XIS[0] < traj.length).take(3) {
        let fd = derivative_triple_fd(&s, &curve, rec, 1e-2, &DEFAULT_XIS).unwrap();
        let exact = derivative_triple_analytic(rec.s, rec.t, rec.angle);
        let err = fd.max_relative_error(&exact, 1e-12);
        assert!(err <= 1e-3, "record {rec:?}: {fd:?} vs {exact:?} ({err})");
    }
}

#[test]
fn analytic_triple_is_symmetric_in_s_and_t() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..100 {
        let (s, t, a) = (rng.random_range(0.1..5.0), rng.random_range(0.1..5.0), rng.random_range(0.01..PI));
        let (p, q) = (derivative_triple_analytic(s, t, a), derivative_triple_analytic(t, s, a));
        assert_eq!(p.d1, q.d1);
        assert!((p.d2 - q.d2).abs() <= 1e-12 * p.d2.abs().max(1.0));
        assert!((p.d3 - q.d3).abs() <= 1e-12 * p.d3.abs().max(1.0));
        // third component re-derived from the law of cosines
        let law = 2.0 * ((1.0 + s).powi(2) + (1.0 + t).powi(2) - 2.0 * (1.0 + s) * (1.0 + t) * a.cos());
        assert!((p.d3 - law).abs() <= 1e-12 * law.max(1.0));
    }
}

#[test]
fn ellipsoid_self_intersections_grow_with_length() {
    let s = Surface::ellipsoid(1.0, 1.2, 1.5).unwrap();
    let x0 = s.project(&V3::new(1.0, 0.1, 0.2)).unwrap();
    let v0 = s.unit_tangent(&x0, &V3::new(0.0, 0.6, 0.8)).unwrap();
    let traj = integrate_geodesic(&s, &x0, &v0, 40.0, 1e-3).unwrap();
    let mut prev = 0;
    for len in [10.0, 20.0, 30.0, 40.0] {
        let cut = integrate_geodesic(&s, &x0, &v0, len, 1e-3).unwrap();
        let n = count_self_intersections(&cut, 1e-2, 1e-3).unwrap().records.len();
        assert!(n >= prev);
        prev = n;
    }
    assert!(prev > 0 && traj.len() > 0);
}

#[test]
fn oblate_meridian_conjugate_time_is_stable() {
    let s = Surface::ellipsoid(1.0, 1.0, 1.5).unwrap();
    let (x0, v0) = (V3::x(), V3::z());
    let coarse = conjugate_points(&s, &x0, &v0, 6.0, 1e-3).unwrap().first().unwrap();
    let fine = conjugate_points(&s, &x0, &v0, 6.0, 5e-4).unwrap().first().unwrap();
    assert!((coarse - fine).abs() <= 1e-6, "{coarse} vs {fine}");
    assert!((fine - MERIDIAN_CONJUGATE_TIME).abs() <= 1e-6, "{fine}");
}

/// First conjugate time along the `x`-`z` meridian of the `(1, 1, 1.5)`
/// ellipsoid, pinned from the first converged run.
const MERIDIAN_CONJUGATE_TIME: f64 = 2.701_423_199;

#[test]
fn near_coincident_points_use_the_chord() {
    let s = Surface::ellipsoid(1.0, 1.2, 1.5).unwrap();
    let x = s.project(&V3::new(0.7, 0.5, 0.6)).unwrap();
    let v = s.unit_tangent(&x, &V3::new(0.3, -0.2, 0.4)).unwrap();
    for len in [1e-7, 5e-7] {
        let y = integrate_geodesic(&s, &x, &v, len, 1e-8).unwrap().end().0;
        let est = intrinsic_distance(&s, &x, &y, None).unwrap();
        assert_eq!(est.method, DistanceMethod::Chordal);
        assert!(!est.warned());
        // endpoint roundoff is absolute, about 1e-16
        assert!((est.distance - len).abs() <= 1e-15, "{} vs {len}", est.distance);
    }
}
