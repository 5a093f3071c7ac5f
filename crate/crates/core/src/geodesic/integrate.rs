use serde::Serialize;

use super::surface::{Surface, V3};
use crate::error::{domain, GapError, Result};

/// Largest constraint residual tolerated before projection.
pub const MAX_PRE_PROJECTION_RESIDUAL: f64 = 1e-6;

/// Geodesic state, optionally carrying a scalar Jacobi field `j` with
/// `j'' + K j = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: V3,
    pub v: V3,
    pub j: f64,
    pub dj: f64,
}

fn acceleration(s: &Surface, x: &V3, v: &V3) -> Result<V3> {
    let g = s.gradient(x);
    let gg = g.norm_squared();
    if !(gg > 1e-24) {
        return Err(GapError::SingularSurface([x.x, x.y, x.z]));
    }
    let vhv = v.dot(&(s.hessian(x) * v));
    Ok(-g * (vhv / gg))
}

fn derivative(s: &Surface, st: &State, jacobi: bool) -> Result<State> {
    let a = acceleration(s, &st.x, &st.v)?;
    let ddj = if jacobi { -s.gauss_curvature(&st.x) * st.j } else { 0.0 };
    Ok(State { x: st.v, v: a, j: st.dj, dj: ddj })
}

fn axpy(st: &State, h: f64, d: &State) -> State {
    State { x: st.x + d.x * h, v: st.v + d.v * h, j: st.j + d.j * h, dj: st.dj + d.dj * h }
}

/// One classical Runge-Kutta step of the ambient geodesic equation
/// `x'' = -(v^T H v / |grad F|^2) grad F`, without projection.
pub fn rk4_step(s: &Surface, st: &State, h: f64, jacobi: bool) -> Result<State> {
    let k1 = derivative(s, st, jacobi)?;
    let k2 = derivative(s, &axpy(st, h / 2.0, &k1), jacobi)?;
    let k3 = derivative(s, &axpy(st, h / 2.0, &k2), jacobi)?;
    let k4 = derivative(s, &axpy(st, h, &k3), jacobi)?;
    let w = h / 6.0;
    Ok(State {
        x: st.x + (k1.x + k2.x * 2.0 + k3.x * 2.0 + k4.x) * w,
        v: st.v + (k1.v + k2.v * 2.0 + k3.v * 2.0 + k4.v) * w,
        j: st.j + (k1.j + 2.0 * k2.j + 2.0 * k3.j + k4.j) * w,
        dj: st.dj + (k1.dj + 2.0 * k2.dj + 2.0 * k3.dj + k4.dj) * w,
    })
}

/// Step followed by projection of the position onto the surface and of the
/// velocity onto the unit tangent sphere.
pub fn projected_step(s: &Surface, st: &State, h: f64, jacobi: bool) -> Result<State> {
    let raw = rk4_step(s, st, h, jacobi)?;
    let residual = s.value(&raw.x).abs() / s.gradient(&raw.x).norm().max(1e-300);
    if !(residual <= MAX_PRE_PROJECTION_RESIDUAL) {
        return Err(GapError::StepSize { residual, h });
    }
    let x = s.project(&raw.x)?;
    let v = s.unit_tangent(&x, &raw.v)?;
    Ok(State { x, v, ..raw })
}

/// Validated initial state: the point within `1e-6` of the surface and the
/// velocity within `1e-6` of a unit tangent, both then snapped exactly.
pub fn initial_state(s: &Surface, x0: &V3, v0: &V3) -> Result<State> {
    s.check()?;
    let gn = s.gradient(x0).norm();
    if !(s.value(x0).abs() <= 1e-6 * gn.max(1.0)) {
        return domain("initial point is not on the surface");
    }
    let x = s.project(x0)?;
    let n = s.normal(&x)?;
    if n.dot(v0).abs() > 1e-6 || (v0.norm() - 1.0).abs() > 1e-6 {
        return domain("initial velocity must be a unit tangent vector");
    }
    let v = s.unit_tangent(&x, v0)?;
    Ok(State { x, v, j: 0.0, dj: 1.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicTrajectory {
    pub surface: Surface,
    pub h: f64,
    pub length: f64,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub positions: Vec<V3>,
    #[serde(skip)]
    pub velocities: Vec<V3>,
    /// `|F(x)|` after projection.
    pub res_f: Vec<f64>,
    /// `||x'| - 1|` after projection.
    pub res_v: Vec<f64>,
}

impl GeodesicTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> (V3, V3) {
        (self.positions[0], self.velocities[0])
    }

    pub fn end(&self) -> (V3, V3) {
        (*self.positions.last().expect("nonempty"), *self.velocities.last().expect("nonempty"))
    }

    pub fn max_residuals(&self) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        (m(&self.res_f), m(&self.res_v))
    }

    /// Integrates back from the endpoint and returns the distance to the
    /// start.
    pub fn reversal_error(&self) -> Result<f64> {
        let (x, v) = self.end();
        let back = integrate_geodesic(&self.surface, &x, &(-v), self.length, self.h)?;
        Ok((back.end().0 - self.positions[0]).norm())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,z,vx,vy,vz,resF,resV\n");
        for i in 0..self.len() {
            let (p, v) = (self.positions[i], self.velocities[i]);
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.3e},{:.3e}\n",
                self.times[i], p.x, p.y, p.z, v.x, v.y, v.z, self.res_f[i], self.res_v[i]
            ));
        }
        out
    }
}

/// Fixed-step integration to arc length `length`; the last step is shortened
/// to land on it exactly.
pub fn integrate_geodesic(s: &Surface, x0: &V3, v0: &V3, length: f64, h: f64) -> Result<GeodesicTrajectory> {
    if !(length >= 0.0 && length.is_finite()) {
        return domain("length must be finite and nonnegative");
    }
    if !(h > 0.0 && h.is_finite()) {
        return domain("step size must be positive");
    }
    let mut st = initial_state(s, x0, v0)?;
    let steps = (length / h).ceil() as usize;
    let mut traj = GeodesicTrajectory {
        surface: *s,
        h,
        length,
        times: Vec::with_capacity(steps + 1),
        positions: Vec::with_capacity(steps + 1),
        velocities: Vec::with_capacity(steps + 1),
        res_f: Vec::with_capacity(steps + 1),
        res_v: Vec::with_capacity(steps + 1),
    };
    let record = |traj: &mut GeodesicTrajectory, t: f64, st: &State| {
        traj.times.push(t);
        traj.positions.push(st.x);
        traj.velocities.push(st.v);
        traj.res_f.push(s.value(&st.x).abs());
        traj.res_v.push((st.v.norm() - 1.0).abs());
    };
    record(&mut traj, 0.0, &st);
    for i in 0..steps {
        let t0 = i as f64 * h;
        let t1 = if i + 1 == steps { length } else { (i + 1) as f64 * h };
        st = projected_step(s, &st, t1 - t0, false)?;
        record(&mut traj, t1, &st);
    }
    Ok(traj)
}
