//! Constant-curvature model spaces, flat tori and their products, with
//! geodesic involutions, transvections and isometry-orbit spectra.
//!
//! Spheres and projective spaces use unit vectors in `R^{k+1}`; hyperbolic
//! space uses the hyperboloid `<x,x>_L = 1/kappa`, `x_0 > 0`, with the
//! Lorentz pairing `-x_0 y_0 + sum x_i y_i`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{domain, GapError, Result};
use crate::metric::{nnd_spectrum, ClusterPolicy, FnMetric, MetricOracle, NndSpectrum, OracleMode};
use crate::rational::{to_f64, Rational};
use crate::torus::{TorusLattice, TorusPoint};

pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const ISOMETRY_TOL: f64 = 1e-10;
/// Denominator of torus transvection steps.
pub const TORUS_STEP_GRID: i128 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpace {
    /// Round sphere of the given radius (curvature `1/radius^2`).
    Sphere { k: usize, radius: f64 },
    Projective { k: usize },
    Euclidean { k: usize },
    Hyperbolic { k: usize, kappa: f64 },
    Torus(TorusLattice),
    Product(Vec<ModelSpace>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelPoint {
    Vector(DVector<f64>),
    Torus(TorusPoint),
    Tuple(Vec<ModelPoint>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelIsometry {
    /// Orthogonal or Lorentz matrix acting linearly.
    Linear(DMatrix<f64>),
    /// `x -> A x + b` on Euclidean space.
    Rigid { rotation: DMatrix<f64>, translation: DVector<f64> },
    /// `x -> x + v` on a flat torus.
    TorusTranslation(Vec<Rational>),
    /// `x -> 2m - x` on a flat torus.
    TorusReflection(Vec<Rational>),
    Product(Vec<ModelIsometry>),
}

fn lorentz(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    -x[0] * y[0] + x.rows(1, x.len() - 1).dot(&y.rows(1, y.len() - 1))
}

fn lorentz_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::identity(n, n);
    j[(0, 0)] = -1.0;
    j
}

/// Angle between unit-length vectors, stable at both ends of `[0, pi]`.
fn sphere_angle(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    2.0 * (x - y).norm().atan2((x + y).norm())
}

impl ModelSpace {
    pub fn sphere(k: usize) -> Self {
        ModelSpace::Sphere { k, radius: 1.0 }
    }

    pub fn hyperbolic(k: usize, kappa: f64) -> Result<Self> {
        if !(kappa < 0.0 && kappa.is_finite()) {
            return domain(format!("hyperbolic curvature must be negative, got {kappa}"));
        }
        Ok(ModelSpace::Hyperbolic { k, kappa })
    }

    /// Intrinsic dimension; for products the sum over factors.
    pub fn dim(&self) -> usize {
        match self {
            ModelSpace::Sphere { k, .. }
            | ModelSpace::Projective { k }
            | ModelSpace::Euclidean { k }
            | ModelSpace::Hyperbolic { k, .. } => *k,
            ModelSpace::Torus(l) => l.dim(),
            ModelSpace::Product(fs) => fs.iter().map(|f| f.dim()).sum(),
        }
    }

    /// Length of the coordinate vector of a point.
    pub fn ambient_dim(&self) -> usize {
        match self {
            ModelSpace::Sphere { k, .. } | ModelSpace::Projective { k } | ModelSpace::Hyperbolic { k, .. } => k + 1,
            ModelSpace::Euclidean { k } => *k,
            ModelSpace::Torus(l) => l.dim(),
            ModelSpace::Product(fs) => fs.iter().map(|f| f.ambient_dim()).sum(),
        }
    }

    pub fn nonnegatively_curved(&self) -> bool {
        match self {
            ModelSpace::Hyperbolic { .. } => false,
            ModelSpace::Product(fs) => fs.iter().all(|f| f.nonnegatively_curved()),
            _ => true,
        }
    }

    /// Every distance is an exact rational square root.
    pub fn is_exact(&self) -> bool {
        match self {
            ModelSpace::Torus(l) => l.is_exact(),
            ModelSpace::Product(fs) => fs.iter().all(|f| f.is_exact()),
            _ => false,
        }
    }

    /// The orbit ceiling `3^k + 1` for nonnegatively curved spaces.
    pub fn nonnegative_curvature_bound(&self) -> Option<usize> {
        self.nonnegatively_curved().then(|| 3usize.pow(self.dim() as u32) + 1)
    }

    pub fn label(&self) -> String {
        match self {
            ModelSpace::Sphere { k, radius } if *radius == 1.0 => format!("s{k}"),
            ModelSpace::Sphere { k, radius } => format!("s{k}(r={radius})"),
            ModelSpace::Projective { k } => format!("rp{k}"),
            ModelSpace::Euclidean { k } => format!("e{k}"),
            ModelSpace::Hyperbolic { k, kappa } => format!("h{k}:{kappa}"),
            ModelSpace::Torus(l) => format!("torus{}", l.dim()),
            ModelSpace::Product(fs) => fs.iter().map(|f| f.label()).collect::<Vec<_>>().join("x"),
        }
    }

    pub fn validate(&self, x: &ModelPoint) -> Result<()> {
        match (self, x) {
            (ModelSpace::Sphere { k, radius }, ModelPoint::Vector(v)) => {
                check_len(v, k + 1)?;
                let err = (v.norm() - radius).abs();
                if err > NORMALIZATION_TOL * radius.max(1.0) {
                    return domain(format!("sphere point off by {err:e} from radius {radius}"));
                }
                Ok(())
            }
            (ModelSpace::Projective { k }, ModelPoint::Vector(v)) => {
                check_len(v, k + 1)?;
                let err = (v.norm() - 1.0).abs();
                if err > NORMALIZATION_TOL {
                    return domain(format!("projective representative has norm error {err:e}"));
                }
                Ok(())
            }
            (ModelSpace::Euclidean { k }, ModelPoint::Vector(v)) => check_len(v, *k),
            (ModelSpace::Hyperbolic { k, kappa }, ModelPoint::Vector(v)) => {
                check_len(v, k + 1)?;
                let err = (kappa * lorentz(v, v) - 1.0).abs();
                let scale = (v[0] * v[0] * -kappa).max(1.0);
                if v[0] <= 0.0 || err > NORMALIZATION_TOL * scale {
                    return domain(format!("not on the upper hyperboloid (error {err:e})"));
                }
                Ok(())
            }
            (ModelSpace::Torus(l), ModelPoint::Torus(p)) => {
                if p.0.len() != l.dim() {
                    return domain("torus point has the wrong dimension");
                }
                Ok(())
            }
            (ModelSpace::Product(fs), ModelPoint::Tuple(ps)) => {
                if fs.len() != ps.len() {
                    return domain("product point has the wrong number of factors");
                }
                fs.iter().zip(ps).try_for_each(|(f, p)| f.validate(p))
            }
            _ => domain(format!("point kind does not match space {}", self.label())),
        }
    }

    /// Pulls a point back onto the space after floating drift; canonicalizes
    /// projective representatives.
    pub fn project(&self, x: &ModelPoint) -> ModelPoint {
        match (self, x) {
            (ModelSpace::Sphere { radius, .. }, ModelPoint::Vector(v)) => ModelPoint::Vector(v * (radius / v.norm())),
            (ModelSpace::Projective { .. }, ModelPoint::Vector(v)) => ModelPoint::Vector(canonical_projective(&v.normalize())),
            (ModelSpace::Hyperbolic { kappa, .. }, ModelPoint::Vector(v)) => {
                let mut w = v.clone();
                let spatial = v.rows(1, v.len() - 1).norm_squared();
                w[0] = (spatial - 1.0 / kappa).sqrt();
                ModelPoint::Vector(w)
            }
            (ModelSpace::Product(fs), ModelPoint::Tuple(ps)) => {
                ModelPoint::Tuple(fs.iter().zip(ps).map(|(f, p)| f.project(p)).collect())
            }
            (ModelSpace::Torus(l), ModelPoint::Torus(p)) => ModelPoint::Torus(l.translate(p, &vec![Rational::zero(); p.0.len()], 0)),
            _ => x.clone(),
        }
    }

    /// Geodesic distance. Sphere values lie in `[0, pi r]`, projective values
    /// in `[0, pi/2]`.
    pub fn distance(&self, x: &ModelPoint, y: &ModelPoint) -> Result<f64> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub fn distance_unchecked(&self, x: &ModelPoint, y: &ModelPoint) -> f64 {
        match (self, x, y) {
            (ModelSpace::Sphere { radius, .. }, ModelPoint::Vector(a), ModelPoint::Vector(b)) => {
                radius * sphere_angle(&(a / *radius), &(b / *radius))
            }
            (ModelSpace::Projective { .. }, ModelPoint::Vector(a), ModelPoint::Vector(b)) => {
                let d = sphere_angle(a, b);
                d.min(PI - d)
            }
            (ModelSpace::Euclidean { .. }, ModelPoint::Vector(a), ModelPoint::Vector(b)) => (a - b).norm(),
            (ModelSpace::Hyperbolic { kappa, .. }, ModelPoint::Vector(a), ModelPoint::Vector(b)) => {
                // Poincare ball coordinates u = c x_s / (1 + c x_0), where
                // 1 - |u|^2 = 2 / (1 + c x_0) needs no cancellation
                let c = (-kappa).sqrt();
                let ball = |x: &DVector<f64>| x.rows(1, x.len() - 1) * (c / (1.0 + c * x[0]));
                let gap = (ball(a) - ball(b)).norm();
                let conformal = (2.0 / (1.0 + c * a[0])) * (2.0 / (1.0 + c * b[0]));
                2.0 / c * (gap / conformal.sqrt()).asinh()
            }
            (ModelSpace::Torus(l), ModelPoint::Torus(a), ModelPoint::Torus(b)) => {
                l.distance(a, b).expect("validated torus points")
            }
            (ModelSpace::Product(fs), ModelPoint::Tuple(a), ModelPoint::Tuple(b)) => fs
                .iter()
                .zip(a.iter().zip(b))
                .map(|(f, (p, q))| f.distance_unchecked(p, q).powi(2))
                .sum::<f64>()
                .sqrt(),
            _ => f64::NAN,
        }
    }

    /// Exact squared distance on tori and products of tori.
    pub fn distance_sq_exact(&self, x: &ModelPoint, y: &ModelPoint) -> Option<Rational> {
        match (self, x, y) {
            (ModelSpace::Torus(l), ModelPoint::Torus(a), ModelPoint::Torus(b)) => l.distance_sq(a, b).ok(),
            (ModelSpace::Product(fs), ModelPoint::Tuple(a), ModelPoint::Tuple(b)) => {
                let mut total = Rational::zero();
                for (f, (p, q)) in fs.iter().zip(a.iter().zip(b)) {
                    total += f.distance_sq_exact(p, q)?;
                }
                Some(total)
            }
            _ => None,
        }
    }

    /// Tangent-space membership of `w` at `p`.
    pub fn check_tangent(&self, p: &ModelPoint, w: &ModelPoint) -> Result<()> {
        match (self, p, w) {
            (ModelSpace::Sphere { radius, .. }, ModelPoint::Vector(p), ModelPoint::Vector(w)) => {
                let dot = p.dot(w) / radius;
                if dot.abs() > 1e-9 * w.norm().max(1.0) {
                    return domain(format!("vector is not tangent (inner product {dot:e})"));
                }
                Ok(())
            }
            (ModelSpace::Projective { .. }, ModelPoint::Vector(p), ModelPoint::Vector(w)) => {
                if p.dot(w).abs() > 1e-9 * w.norm().max(1.0) {
                    return domain("vector is not tangent");
                }
                Ok(())
            }
            (ModelSpace::Hyperbolic { .. }, ModelPoint::Vector(p), ModelPoint::Vector(w)) => {
                if lorentz(p, w).abs() > 1e-9 * w.norm().max(1.0) * p.norm() {
                    return domain("vector is not tangent to the hyperboloid");
                }
                Ok(())
            }
            (ModelSpace::Euclidean { k }, _, ModelPoint::Vector(w)) => check_len(w, *k),
            (ModelSpace::Torus(l), _, ModelPoint::Torus(w)) => {
                if w.0.len() != l.dim() {
                    return domain(format!("expected {} translation components, got {}", l.dim(), w.0.len()));
                }
                Ok(())
            }
            (ModelSpace::Product(fs), ModelPoint::Tuple(ps), ModelPoint::Tuple(ws)) => {
                fs.iter().zip(ps.iter().zip(ws)).try_for_each(|(f, (p, w))| f.check_tangent(p, w))
            }
            _ => domain("tangent vector kind does not match the space"),
        }
    }

    /// Riemannian norm of a tangent vector.
    pub fn tangent_norm(&self, w: &ModelPoint) -> f64 {
        match (self, w) {
            (ModelSpace::Hyperbolic { .. }, ModelPoint::Vector(w)) => lorentz(w, w).max(0.0).sqrt(),
            (ModelSpace::Product(fs), ModelPoint::Tuple(ws)) => {
                fs.iter().zip(ws).map(|(f, w)| f.tangent_norm(w).powi(2)).sum::<f64>().sqrt()
            }
            (_, ModelPoint::Vector(w)) => w.norm(),
            (_, ModelPoint::Torus(t)) => t.to_f64().iter().map(|c| c * c).sum::<f64>().sqrt(),
            (_, ModelPoint::Tuple(_)) => f64::NAN,
        }
    }

    /// Exponential map along the geodesic with initial velocity `w`.
    pub fn exp(&self, p: &ModelPoint, w: &ModelPoint) -> Result<ModelPoint> {
        match (self, p, w) {
            (ModelSpace::Sphere { radius, .. }, ModelPoint::Vector(p), ModelPoint::Vector(w)) => {
                let len = w.norm();
                if len == 0.0 {
                    return Ok(ModelPoint::Vector(p.clone()));
                }
                let a = len / radius;
                Ok(ModelPoint::Vector(p * a.cos() + w * (radius * a.sin() / len)))
            }
            (ModelSpace::Projective { .. }, ModelPoint::Vector(pv), ModelPoint::Vector(w)) => {
                let len = w.norm();
                let q = if len == 0.0 { pv.clone() } else { pv * len.cos() + w * (len.sin() / len) };
                Ok(ModelPoint::Vector(canonical_projective(&q)))
            }
            (ModelSpace::Euclidean { .. }, ModelPoint::Vector(p), ModelPoint::Vector(w)) => Ok(ModelPoint::Vector(p + w)),
            (ModelSpace::Hyperbolic { kappa, .. }, ModelPoint::Vector(p), ModelPoint::Vector(w)) => {
                let c = (-kappa).sqrt();
                let len = lorentz(w, w).max(0.0).sqrt();
                if len == 0.0 {
                    return Ok(ModelPoint::Vector(p.clone()));
                }
                Ok(ModelPoint::Vector(p * (c * len).cosh() + w * ((c * len).sinh() / (c * len))))
            }
            (ModelSpace::Product(fs), ModelPoint::Tuple(ps), ModelPoint::Tuple(ws)) => Ok(ModelPoint::Tuple(
                fs.iter().zip(ps.iter().zip(ws)).map(|(f, (p, w))| f.exp(p, w)).collect::<Result<_>>()?,
            )),
            _ => domain(format!("exponential map not available on {}", self.label())),
        }
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> ModelPoint {
        match self {
            ModelSpace::Sphere { k, radius } => ModelPoint::Vector(gaussian(*k + 1, rng).normalize() * *radius),
            ModelSpace::Projective { k } => ModelPoint::Vector(canonical_projective(&gaussian(*k + 1, rng).normalize())),
            ModelSpace::Euclidean { k } => ModelPoint::Vector(gaussian(*k, rng)),
            ModelSpace::Hyperbolic { k, kappa } => {
                let mut v = DVector::zeros(k + 1);
                v.rows_mut(1, *k).copy_from(&gaussian(*k, rng));
                let spatial = v.rows(1, *k).norm_squared();
                v[0] = (spatial - 1.0 / kappa).sqrt();
                ModelPoint::Vector(v)
            }
            ModelSpace::Torus(l) => {
                let coords = (0..l.dim()).map(|_| Rational::new(rng.random_range(0..1000), 1000)).collect();
                ModelPoint::Torus(l.point(coords).expect("dimension matches"))
            }
            ModelSpace::Product(fs) => ModelPoint::Tuple(fs.iter().map(|f| f.random_point(rng)).collect()),
        }
    }

    /// Uniformly random unit tangent vector at `p`.
    pub fn random_unit_tangent<R: Rng + ?Sized>(&self, p: &ModelPoint, rng: &mut R) -> Result<ModelPoint> {
        let raw = match (self, p) {
            (ModelSpace::Sphere { .. } | ModelSpace::Projective { .. }, ModelPoint::Vector(p)) => {
                let g = gaussian(p.len(), rng);
                let unit = p.normalize();
                ModelPoint::Vector(&g - &unit * unit.dot(&g))
            }
            (ModelSpace::Euclidean { k }, _) => ModelPoint::Vector(gaussian(*k, rng)),
            (ModelSpace::Hyperbolic { kappa, .. }, ModelPoint::Vector(p)) => {
                let g = gaussian(p.len(), rng);
                // remove the component along p in the Lorentz pairing
                ModelPoint::Vector(&g - p * (kappa * lorentz(p, &g)))
            }
            (ModelSpace::Product(fs), ModelPoint::Tuple(ps)) => {
                let parts: Vec<ModelPoint> =
                    fs.iter().zip(ps).map(|(f, p)| f.random_unit_tangent(p, rng)).collect::<Result<_>>()?;
                let scale = 1.0 / (parts.len() as f64).sqrt();
                return Ok(ModelPoint::Tuple(parts.iter().map(|w| scale_tangent(w, scale)).collect()));
            }
            _ => return domain(format!("no tangent sampler for {}", self.label())),
        };
        let len = self.tangent_norm(&raw);
        Ok(scale_tangent(&raw, 1.0 / len))
    }
}

fn check_len(v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() != n {
        return domain(format!("expected {n} coordinates, got {}", v.len()));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return domain("non-finite coordinate");
    }
    Ok(())
}

fn gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

fn scale_tangent(w: &ModelPoint, s: f64) -> ModelPoint {
    match w {
        ModelPoint::Vector(v) => ModelPoint::Vector(v * s),
        ModelPoint::Tuple(ws) => ModelPoint::Tuple(ws.iter().map(|w| scale_tangent(w, s)).collect()),
        ModelPoint::Torus(_) => w.clone(),
    }
}

/// Sign convention for projective classes: the first coordinate that is not
/// negligible is positive.
pub fn canonical_projective(v: &DVector<f64>) -> DVector<f64> {
    match v.iter().find(|c| c.abs() > NORMALIZATION_TOL) {
        Some(c) if *c < 0.0 => -v,
        _ => v.clone(),
    }
}

pub fn vector(coords: &[f64]) -> ModelPoint {
    ModelPoint::Vector(DVector::from_column_slice(coords))
}

impl ModelPoint {
    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            ModelPoint::Vector(v) => Some(v),
            _ => None,
        }
    }
}

impl ModelIsometry {
    pub fn apply(&self, space: &ModelSpace, x: &ModelPoint) -> Result<ModelPoint> {
        let out = match (self, space, x) {
            (ModelIsometry::Linear(m), _, ModelPoint::Vector(v)) => ModelPoint::Vector(m * v),
            (ModelIsometry::Rigid { rotation, translation }, _, ModelPoint::Vector(v)) => {
                ModelPoint::Vector(rotation * v + translation)
            }
            (ModelIsometry::TorusTranslation(t), ModelSpace::Torus(l), ModelPoint::Torus(p)) => {
                ModelPoint::Torus(l.translate(p, t, 1))
            }
            (ModelIsometry::TorusReflection(m), ModelSpace::Torus(l), ModelPoint::Torus(p)) => {
                let coords = m.iter().zip(&p.0).map(|(a, b)| a + a - b).collect();
                ModelPoint::Torus(l.point(coords)?)
            }
            (ModelIsometry::Product(gs), ModelSpace::Product(fs), ModelPoint::Tuple(ps)) => {
                if gs.len() != fs.len() || ps.len() != fs.len() {
                    return domain("product isometry has the wrong number of factors");
                }
                ModelPoint::Tuple(
                    gs.iter().zip(fs.iter().zip(ps)).map(|(g, (f, p))| g.apply(f, p)).collect::<Result<_>>()?,
                )
            }
            _ => return domain(format!("isometry does not act on {}", space.label())),
        };
        Ok(space.project(&out))
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &ModelIsometry) -> Result<ModelIsometry> {
        Ok(match (self, other) {
            (ModelIsometry::Linear(a), ModelIsometry::Linear(b)) => ModelIsometry::Linear(a * b),
            (ModelIsometry::Rigid { rotation: a, translation: s }, ModelIsometry::Rigid { rotation: b, translation: t }) => {
                ModelIsometry::Rigid { rotation: a * b, translation: a * t + s }
            }
            (ModelIsometry::TorusTranslation(a), ModelIsometry::TorusTranslation(b)) => {
                ModelIsometry::TorusTranslation(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (ModelIsometry::TorusReflection(a), ModelIsometry::TorusReflection(b)) => {
                // x -> 2a - (2b - x) = x + 2(a - b)
                ModelIsometry::TorusTranslation(a.iter().zip(b).map(|(x, y)| (x - y) * Rational::from_integer(2)).collect())
            }
            (ModelIsometry::Product(a), ModelIsometry::Product(b)) if a.len() == b.len() => {
                ModelIsometry::Product(a.iter().zip(b).map(|(x, y)| x.compose(y)).collect::<Result<_>>()?)
            }
            _ => return domain("cannot compose isometries of different kinds"),
        })
    }

    /// Checks that the matrix part preserves the relevant bilinear form.
    pub fn check_form(&self, space: &ModelSpace) -> Result<()> {
        let check = |m: &DMatrix<f64>, form: &DMatrix<f64>| {
            let err = (m.transpose() * form * m - form).amax();
            let scale = m.amax().powi(2).max(1.0);
            if err > NORMALIZATION_TOL * 10.0 * scale {
                domain(format!("isometry distorts the form by {err:e}"))
            } else {
                Ok(())
            }
        };
        match (self, space) {
            (ModelIsometry::Linear(m), ModelSpace::Hyperbolic { .. }) => check(m, &lorentz_form(m.nrows())),
            (ModelIsometry::Linear(m), _) => check(m, &DMatrix::identity(m.nrows(), m.nrows())),
            (ModelIsometry::Rigid { rotation, .. }, _) => check(rotation, &DMatrix::identity(rotation.nrows(), rotation.nrows())),
            (ModelIsometry::Product(gs), ModelSpace::Product(fs)) => gs.iter().zip(fs).try_for_each(|(g, f)| g.check_form(f)),
            _ => Ok(()),
        }
    }
}

/// The geodesic involution `s_m`, reversing every geodesic through `m`.
pub fn geodesic_involution(space: &ModelSpace, m: &ModelPoint) -> Result<ModelIsometry> {
    space.validate(m)?;
    Ok(match (space, m) {
        (ModelSpace::Sphere { radius, .. }, ModelPoint::Vector(v)) => {
            let n = v.len();
            ModelIsometry::Linear(v * v.transpose() * (2.0 / (radius * radius)) - DMatrix::identity(n, n))
        }
        (ModelSpace::Projective { .. }, ModelPoint::Vector(v)) => {
            let n = v.len();
            ModelIsometry::Linear(v * v.transpose() * 2.0 - DMatrix::identity(n, n))
        }
        (ModelSpace::Euclidean { k }, ModelPoint::Vector(v)) => {
            ModelIsometry::Rigid { rotation: -DMatrix::identity(*k, *k), translation: v * 2.0 }
        }
        (ModelSpace::Hyperbolic { kappa, .. }, ModelPoint::Vector(v)) => {
            let n = v.len();
            let jv = lorentz_form(n) * v;
            ModelIsometry::Linear(v * jv.transpose() * (2.0 * kappa) - DMatrix::identity(n, n))
        }
        (ModelSpace::Torus(_), ModelPoint::Torus(p)) => ModelIsometry::TorusReflection(p.0.clone()),
        (ModelSpace::Product(fs), ModelPoint::Tuple(ps)) => {
            ModelIsometry::Product(fs.iter().zip(ps).map(|(f, p)| geodesic_involution(f, p)).collect::<Result<_>>()?)
        }
        _ => return domain("point kind does not match the space"),
    })
}

/// `I = s_p o s_q` with `q = exp_p(-(T/2) u)`, so that `I^n(p) = exp_p(nT u)`.
///
/// On a flat torus this is the translation by `T u`, with `T` rounded to a
/// multiple of `2^-20` so the orbit stays exact.
pub fn transvection(space: &ModelSpace, p: &ModelPoint, u: &ModelPoint, step: f64) -> Result<ModelIsometry> {
    space.validate(p)?;
    space.check_tangent(p, u)?;
    if let (ModelSpace::Torus(_), ModelPoint::Torus(w)) = (space, u) {
        let scale = (step * TORUS_STEP_GRID as f64).round();
        if !scale.is_finite() || scale.abs() > 1e15 {
            return domain("torus step is out of range");
        }
        let t = Rational::new(scale as i128, TORUS_STEP_GRID);
        return Ok(ModelIsometry::TorusTranslation(w.0.iter().map(|c| c * t).collect()));
    }
    let len = space.tangent_norm(u);
    if (len - 1.0).abs() > 1e-9 {
        return domain(format!("direction must be a unit tangent, norm is {len}"));
    }
    let q = space.exp(p, &scale_tangent(u, -step / 2.0))?;
    let q = space.project(&q);
    geodesic_involution(space, p)?.compose(&geodesic_involution(space, &q)?)
}

/// Factorwise transvection along a geodesic with factor speeds `speeds`
/// (squares summing to one) and step `T`.
pub fn product_transvection(
    space: &ModelSpace,
    p: &ModelPoint,
    directions: &[ModelPoint],
    speeds: &[f64],
    step: f64,
) -> Result<ModelIsometry> {
    let (ModelSpace::Product(fs), ModelPoint::Tuple(ps)) = (space, p) else {
        return domain("product transvection needs a product space");
    };
    if fs.len() != directions.len() || fs.len() != speeds.len() {
        return domain("one direction and one speed per factor");
    }
    let total: f64 = speeds.iter().map(|c| c * c).sum();
    if (total - 1.0).abs() > 1e-9 {
        return domain(format!("speeds must have unit Euclidean norm, got {}", total.sqrt()));
    }
    let parts = fs
        .iter()
        .zip(ps)
        .zip(directions.iter().zip(speeds))
        .map(|((f, p), (u, c))| transvection(f, p, u, c * step))
        .collect::<Result<_>>()?;
    Ok(ModelIsometry::Product(parts))
}

/// Rotation by angle `T` in the plane spanned by `p` and `u`:
/// `I + sin T (u p^T - p u^T) + (cos T - 1)(p p^T + u u^T)`.
pub fn great_circle_rotation(p: &DVector<f64>, u: &DVector<f64>, step: f64) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::identity(n, n)
        + (u * p.transpose() - p * u.transpose()) * step.sin()
        + (p * p.transpose() + u * u.transpose()) * (step.cos() - 1.0)
}

pub fn product_space(factors: Vec<ModelSpace>) -> Result<ModelSpace> {
    if factors.is_empty() {
        return domain("a product needs at least one factor");
    }
    Ok(ModelSpace::Product(factors))
}

/// `I^i(p)` for `i = 0..=n`.
pub fn orbit(space: &ModelSpace, iso: &ModelIsometry, p: &ModelPoint, n: usize) -> Result<Vec<ModelPoint>> {
    space.validate(p)?;
    let mut points = Vec::with_capacity(n + 1);
    points.push(space.project(p));
    for i in 0..n {
        let next = iso.apply(space, &points[i])?;
        points.push(next);
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSpectrum {
    pub space: String,
    pub n: usize,
    pub distinct_points: usize,
    pub nnd_count: usize,
    pub class_values: Vec<f64>,
    pub exact: bool,
    pub bound: Option<usize>,
}

impl OrbitSpectrum {
    pub fn min_class(&self) -> f64 {
        self.class_values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max_class(&self) -> f64 {
        self.class_values.last().copied().unwrap_or(f64::NAN)
    }

    pub fn within_bound(&self) -> bool {
        self.bound.is_none_or(|b| self.nnd_count <= b)
    }
}

struct ExactModelMetric<'a>(&'a ModelSpace);

impl MetricOracle<ModelPoint> for ExactModelMetric<'_> {
    type Value = Rational;

    fn distance(&self, a: &ModelPoint, b: &ModelPoint) -> Rational {
        self.0.distance_sq_exact(a, b).expect("exact space")
    }

    fn to_real(&self, value: &Rational) -> f64 {
        to_f64(value).sqrt()
    }

    fn mode(&self) -> OracleMode {
        OracleMode::Exact
    }
}

/// Drops repeated orbit points: exactly on exact spaces, within `1e-9`
/// otherwise.
pub fn collapse_orbit(space: &ModelSpace, points: &[ModelPoint]) -> Vec<ModelPoint> {
    let mut kept: Vec<ModelPoint> = Vec::new();
    let exact = space.is_exact();
    for p in points {
        let repeated = kept.iter().any(|q| {
            if exact {
                space.distance_sq_exact(p, q).is_some_and(|d| d.is_zero())
            } else {
                space.distance_unchecked(p, q) <= 1e-9
            }
        });
        if !repeated {
            kept.push(p.clone());
        }
    }
    kept
}

/// NND spectrum of `{I^i(p) : i = 0..n}` after collapsing repeats. Fails
/// with `BoundViolated` when a nonnegatively curved space exceeds `3^k + 1`.
pub fn isometry_orbit_spectrum(
    space: &ModelSpace,
    iso: &ModelIsometry,
    p: &ModelPoint,
    n: usize,
    policy: ClusterPolicy,
) -> Result<OrbitSpectrum> {
    if n == 0 {
        return domain("orbit length must be at least 1");
    }
    let points = orbit(space, iso, p, n)?;
    let distinct = collapse_orbit(space, &points);
    if distinct.len() < 2 {
        return Err(GapError::DegenerateOrbit("the isometry fixes the base point".into()));
    }
    let (count, class_values, exact) = if space.is_exact() {
        let spec = nnd_spectrum(&distinct, &ExactModelMetric(space), ClusterPolicy::Exact)?;
        (spec.count(), spec.class_reals(), true)
    } else {
        let metric = FnMetric::new(|a: &ModelPoint, b: &ModelPoint| space.distance_unchecked(a, b), 1e-12);
        let spec = nnd_spectrum(&distinct, &metric, policy)?;
        (spec.count(), spec.class_reals(), false)
    };
    let result = OrbitSpectrum {
        space: space.label(),
        n,
        distinct_points: distinct.len(),
        nnd_count: count,
        class_values,
        exact,
        bound: space.nonnegative_curvature_bound(),
    };
    if !result.within_bound() {
        return Err(GapError::BoundViolated {
            bound: result.bound.unwrap_or(0),
            observed: count,
            context: format!("{} orbit with n = {n}", space.label()),
        });
    }
    Ok(result)
}

/// Per-point nearest-neighbor distances of an orbit, in orbit order, without
/// collapsing repeats.
pub fn orbit_nnd_values(space: &ModelSpace, points: &[ModelPoint]) -> Result<NndSpectrum<f64>> {
    let metric = FnMetric::new(|a: &ModelPoint, b: &ModelPoint| space.distance_unchecked(a, b), 1e-12);
    nnd_spectrum(points, &metric, ClusterPolicy::default())
}
