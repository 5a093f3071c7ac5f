use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::Serialize;

use crate::error::{domain, GapError, Result};

pub type V3 = Vector3<f64>;

/// Builtin level-set surfaces `F(x) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Surface {
    /// `|x|^2 - r^2`.
    Sphere { radius: f64 },
    /// `x^2/a^2 + y^2/b^2 + z^2/c^2 - 1`.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// `(sqrt(x^2 + y^2) - R)^2 + z^2 - r^2`.
    Torus { major: f64, minor: f64 },
    /// `z`, the flat chart shared by flat tori and Klein bottles.
    Plane,
}

impl Surface {
    pub fn unit_sphere() -> Self {
        Surface::Sphere { radius: 1.0 }
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<Self> {
        let s = Surface::Ellipsoid { a, b, c };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match *self {
            Surface::Sphere { radius } if !ok(radius) => domain("sphere radius must be positive"),
            Surface::Ellipsoid { a, b, c } if !(ok(a) && ok(b) && ok(c)) => domain("ellipsoid axes must be positive"),
            Surface::Torus { major, minor } if !(ok(minor) && major > minor && major.is_finite()) => {
                domain("torus of revolution needs R > r > 0")
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: &V3) -> f64 {
        match *self {
            Surface::Sphere { radius } => x.norm_squared() - radius * radius,
            Surface::Ellipsoid { a, b, c } => (x.x / a).powi(2) + (x.y / b).powi(2) + (x.z / c).powi(2) - 1.0,
            Surface::Torus { major, minor } => {
                let rho = x.x.hypot(x.y);
                (rho - major).powi(2) + x.z * x.z - minor * minor
            }
            Surface::Plane => x.z,
        }
    }

    pub fn gradient(&self, x: &V3) -> V3 {
        match *self {
            Surface::Sphere { .. } => 2.0 * x,
            Surface::Ellipsoid { a, b, c } => V3::new(2.0 * x.x / (a * a), 2.0 * x.y / (b * b), 2.0 * x.z / (c * c)),
            Surface::Torus { major, .. } => {
                let rho = x.x.hypot(x.y);
                let f = 2.0 * (1.0 - major / rho);
                V3::new(f * x.x, f * x.y, 2.0 * x.z)
            }
            Surface::Plane => V3::new(0.0, 0.0, 1.0),
        }
    }

    pub fn hessian(&self, x: &V3) -> Matrix3<f64> {
        match *self {
            Surface::Sphere { .. } => Matrix3::identity() * 2.0,
            Surface::Ellipsoid { a, b, c } => Matrix3::from_diagonal(&V3::new(2.0 / (a * a), 2.0 / (b * b), 2.0 / (c * c))),
            Surface::Torus { major, .. } => {
                let rho = x.x.hypot(x.y);
                let f = 2.0 * (1.0 - major / rho);
                let g = 2.0 * major / rho.powi(3);
                Matrix3::new(
                    f + g * x.x * x.x,
                    g * x.x * x.y,
                    0.0,
                    g * x.x * x.y,
                    f + g * x.y * x.y,
                    0.0,
                    0.0,
                    0.0,
                    2.0,
                )
            }
            Surface::Plane => Matrix3::zeros(),
        }
    }

    /// `-det [[H, g], [g^T, 0]] / |g|^4`.
    pub fn gauss_curvature(&self, x: &V3) -> f64 {
        let g = self.gradient(x);
        let h = self.hessian(x);
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&h);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&g);
        m.fixed_view_mut::<1, 3>(3, 0).copy_from(&g.transpose());
        -m.determinant() / g.norm_squared().powi(2)
    }

    /// Unit normal, or an error where the gradient vanishes.
    pub fn normal(&self, x: &V3) -> Result<V3> {
        let g = self.gradient(x);
        let n = g.norm();
        if !(n > 1e-12) {
            return Err(GapError::SingularSurface([x.x, x.y, x.z]));
        }
        Ok(g / n)
    }

    /// Newton iteration along the gradient onto `F = 0`.
    pub fn project(&self, x: &V3) -> Result<V3> {
        let mut p = *x;
        for _ in 0..50 {
            let f = self.value(&p);
            let g = self.gradient(&p);
            let gg = g.norm_squared();
            if !(gg > 1e-24) {
                return Err(GapError::SingularSurface([p.x, p.y, p.z]));
            }
            let step = g * (f / gg);
            p -= step;
            if step.norm() <= 1e-16 * p.norm().max(1.0) {
                break;
            }
        }
        Ok(p)
    }

    /// Removes the normal component and normalizes.
    pub fn unit_tangent(&self, x: &V3, v: &V3) -> Result<V3> {
        let n = self.normal(x)?;
        let t = v - n * n.dot(v);
        let len = t.norm();
        if !(len > 1e-12) {
            return domain("direction has no tangential component");
        }
        Ok(t / len)
    }

    /// Geodesic distance where a closed form exists.
    pub fn closed_form_distance(&self, x: &V3, y: &V3) -> Option<f64> {
        match *self {
            Surface::Sphere { radius } => Some(radius * 2.0 * (x - y).norm().atan2((x + y).norm())),
            Surface::Plane => Some((x - y).norm()),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Surface::Sphere { radius } if *radius == 1.0 => write!(f, "sphere"),
            Surface::Sphere { radius } => write!(f, "sphere:{radius}"),
            Surface::Ellipsoid { a, b, c } => write!(f, "ellipsoid:{a},{b},{c}"),
            Surface::Torus { major, minor } => write!(f, "torus:{major},{minor}"),
            Surface::Plane => write!(f, "plane"),
        }
    }
}

impl FromStr for Surface {
    type Err = GapError;

    /// `sphere`, `sphere:R`, `ellipsoid:a,b,c`, `torus:R,r`, `plane`.
    fn from_str(text: &str) -> Result<Self> {
        let (kind, args) = text.split_once(':').unwrap_or((text, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| GapError::Parse(format!("bad number {a:?} in {text:?}"))))
                .collect::<Result<_>>()?
        };
        let surface = match (kind.trim(), nums.as_slice()) {
            ("sphere", []) => Surface::unit_sphere(),
            ("sphere", [r]) => Surface::Sphere { radius: *r },
            ("ellipsoid", [a, b, c]) => Surface::Ellipsoid { a: *a, b: *b, c: *c },
            ("torus", [big, small]) => Surface::Torus { major: *big, minor: *small },
            ("plane", []) => Surface::Plane,
            _ => return Err(GapError::Parse(format!("unknown surface {text:?}"))),
        };
        surface.check()?;
        Ok(surface)
    }
}
