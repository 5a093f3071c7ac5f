use gapscope_core::model::{
    geodesic_involution, great_circle_rotation, isometry_orbit_spectrum, orbit, orbit_nnd_values, product_space,
    product_transvection, transvection, vector, ModelIsometry, ModelPoint, ModelSpace,
};
use gapscope_core::torus::TorusLattice;
use gapscope_core::{ClusterPolicy, GapError, Rational};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn vec_of(p: &ModelPoint) -> DVector<f64> {
    p.as_vector().expect("vector point").clone()
}

fn spaces() -> Vec<ModelSpace> {
    vec![
        ModelSpace::sphere(2),
        ModelSpace::sphere(4),
        ModelSpace::Sphere { k: 3, radius: 2.5 },
        ModelSpace::Projective { k: 2 },
        ModelSpace::Projective { k: 3 },
        ModelSpace::Euclidean { k: 3 },
        ModelSpace::hyperbolic(2, -1.0).unwrap(),
        ModelSpace::hyperbolic(3, -0.25).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn involutions_square_to_the_identity(seed in any::<u64>(), which in 0usize..8) {
        let space = &spaces()[which];
        let mut rng = StdRng::seed_from_u64(seed);
        let m = space.random_point(&mut rng);
        let x = space.random_point(&mut rng);
        let s = geodesic_involution(space, &m).unwrap();
        s.check_form(space).unwrap();
        let back = s.apply(space, &s.apply(space, &x).unwrap()).unwrap();
        prop_assert!(space.distance(&x, &back).unwrap() < 1e-9);
        // s_m fixes m
        prop_assert!(space.distance(&m, &s.apply(space, &m).unwrap()).unwrap() < 1e-9);
    }

    #[test]
    fn transvections_preserve_distance(seed in any::<u64>(), which in 0usize..8, step in 0.01f64..2.0) {
        let space = &spaces()[which];
        let mut rng = StdRng::seed_from_u64(seed);
        let p = space.random_point(&mut rng);
        let u = space.random_unit_tangent(&p, &mut rng).unwrap();
        let iso = transvection(space, &p, &u, step).unwrap();
        let (x, y) = (space.random_point(&mut rng), space.random_point(&mut rng));
        let before = space.distance(&x, &y).unwrap();
        let after = space.distance(&iso.apply(space, &x).unwrap(), &iso.apply(space, &y).unwrap()).unwrap();
        prop_assert!((before - after).abs() <= 1e-10 * before.max(1.0), "{before} vs {after}");
        // I(p) = exp_p(T u)
        let moved = iso.apply(space, &p).unwrap();
        let projective = matches!(space, ModelSpace::Projective { .. });
        let travelled = space.distance(&p, &moved).unwrap();
        prop_assert!(projective || (travelled - step.min(space_diameter(space))).abs() < 1e-9);
    }

    #[test]
    fn sphere_transvection_powers_match_closed_form(seed in any::<u64>(), k in 2usize..5, step in 0.05f64..3.0) {
        let space = ModelSpace::sphere(k);
        let mut rng = StdRng::seed_from_u64(seed);
        let p = space.random_point(&mut rng);
        let u = space.random_unit_tangent(&p, &mut rng).unwrap();
        let iso = transvection(&space, &p, &u, step).unwrap();
        let pts = orbit(&space, &iso, &p, 1000).unwrap();
        let (pv, uv) = (vec_of(&p), vec_of(&u));
        for (n, x) in pts.iter().enumerate() {
            let exact = great_circle_rotation(&pv, &uv, n as f64 * step) * &pv;
            prop_assert!((vec_of(x) - exact).amax() <= 1e-10, "n = {n}");
        }
    }

    #[test]
    fn nnd_values_are_symmetric_and_monotone(seed in any::<u64>(), which in 0usize..8, n in 3usize..80) {
        let space = &spaces()[which];
        let mut rng = StdRng::seed_from_u64(seed);
        let p = space.random_point(&mut rng);
        let u = space.random_unit_tangent(&p, &mut rng).unwrap();
        let iso = transvection(space, &p, &u, stable_step(space, 0.7, n)).unwrap();
        let pts = orbit(space, &iso, &p, n).unwrap();
        let spec = orbit_nnd_values(space, &pts).unwrap();
        for i in 0..=n {
            prop_assert!((spec.real[i] - spec.real[n - i]).abs() <= 1e-12 * spec.real[i].max(1.0));
        }
        for i in 1..=n / 2 {
            prop_assert!(spec.real[i] >= spec.real[i - 1] - 1e-12 * spec.real[i].max(1.0));
        }
        // adding a point can only shrink the smallest nearest-neighbor distance
        let shorter = orbit_nnd_values(space, &pts[..n]).unwrap();
        prop_assert!(spec.min_class() <= shorter.min_class() + 1e-12);
    }

    #[test]
    fn nonnegative_curvature_respects_the_bound(seed in any::<u64>(), which in 0usize..6, n in 2usize..120, step in 0.05f64..3.0) {
        let space = &spaces()[which];
        let mut rng = StdRng::seed_from_u64(seed);
        let p = space.random_point(&mut rng);
        let u = space.random_unit_tangent(&p, &mut rng).unwrap();
        let iso = transvection(space, &p, &u, step).unwrap();
        match isometry_orbit_spectrum(space, &iso, &p, n, ClusterPolicy::default()) {
            Ok(spec) => prop_assert!(spec.nnd_count <= 3usize.pow(space.dim() as u32) + 1),
            Err(GapError::DegenerateOrbit(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

/// Hyperboloid coordinates lose about `eps * exp(c rho)` of intrinsic
/// precision at distance `rho`, so hyperbolic orbits stay within `c rho <= 6`.
fn stable_step(space: &ModelSpace, step: f64, n: usize) -> f64 {
    match space {
        ModelSpace::Hyperbolic { kappa, .. } => step.min(6.0 / ((-kappa).sqrt() * n as f64)),
        _ => step,
    }
}

fn space_diameter(space: &ModelSpace) -> f64 {
    match space {
        ModelSpace::Sphere { radius, .. } => std::f64::consts::PI * radius,
        _ => f64::INFINITY,
    }
}

#[test]
fn hyperbolic_and_euclidean_geodesic_orbits_have_one_class() {
    let mut rng = StdRng::seed_from_u64(7);
    for space in [ModelSpace::hyperbolic(2, -1.0).unwrap(), ModelSpace::hyperbolic(4, -3.0).unwrap(), ModelSpace::Euclidean { k: 5 }] {
        let p = space.random_point(&mut rng);
        let u = space.random_unit_tangent(&p, &mut rng).unwrap();
        let step = stable_step(&space, 0.4, 30);
        let iso = transvection(&space, &p, &u, step).unwrap();
        let spec = isometry_orbit_spectrum(&space, &iso, &p, 30, ClusterPolicy::default()).unwrap();
        assert_eq!(spec.nnd_count, 1, "{}", space.label());
        assert!((spec.min_class() - step).abs() < 1e-9);
    }
}

#[test]
fn products_and_tori_respect_the_bound() {
    let torus = ModelSpace::Torus(TorusLattice::rectangular_int(&[1, 1]).unwrap());
    let space = product_space(vec![ModelSpace::sphere(2), ModelSpace::Projective { k: 2 }, torus.clone()]).unwrap();
    assert_eq!(space.dim(), 6);
    let p = ModelPoint::Tuple(vec![
        vector(&[1.0, 0.0, 0.0]),
        vector(&[0.0, 0.0, 1.0]),
        ModelPoint::Torus(TorusLattice::rectangular_int(&[1, 1]).unwrap().point_int(&[0, 0]).unwrap()),
    ]);
    let dirs = vec![
        vector(&[0.0, 1.0, 0.0]),
        vector(&[1.0, 0.0, 0.0]),
        ModelPoint::Torus(gapscope_core::torus::TorusPoint(vec![Rational::new(3, 5), Rational::new(4, 5)])),
    ];
    let iso = product_transvection(&space, &p, &dirs, &[0.6, 0.0, 0.8], 0.37).unwrap();
    let spec = isometry_orbit_spectrum(&space, &iso, &p, 300, ClusterPolicy::default()).unwrap();
    assert!(spec.nnd_count <= 3usize.pow(6) + 1);

    let shift = ModelIsometry::TorusTranslation(vec![Rational::new(2, 7), Rational::new(3, 11)]);
    let base = ModelPoint::Torus(TorusLattice::rectangular_int(&[1, 1]).unwrap().point_int(&[0, 0]).unwrap());
    let exact = isometry_orbit_spectrum(&torus, &shift, &base, 76, ClusterPolicy::Exact).unwrap();
    assert!(exact.exact && exact.distinct_points == 77 && exact.nnd_count <= 10);
}
