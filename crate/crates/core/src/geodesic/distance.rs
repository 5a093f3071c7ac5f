use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use super::integrate::{initial_state, projected_step};
use super::surface::{Surface, V3};
use crate::error::Result;

pub const MAX_SHOOTING_ITERATIONS: usize = 100;

/// Below this chordal distance the chord is returned as the geodesic
/// distance. The two differ by a relative `K c^2 / 24`, below `1e-13 K`,
/// whereas shooting cannot recover a tangent direction from a gap this
/// close to projection noise.
pub const SHORT_RANGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    /// Straight-line distance in `R^3`; a lower bound.
    Chordal,
    ClosedForm,
    /// Boundary-value shooting converged.
    Refined,
    /// Shooting failed; the chordal value is returned instead.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub distance: f64,
    pub chordal: f64,
    pub method: DistanceMethod,
    pub iterations: usize,
}

impl DistanceEstimate {
    pub fn warned(&self) -> bool {
        self.method == DistanceMethod::Fallback
    }
}

/// Endpoint and velocity of the geodesic from `x` with unit direction `d`
/// after arc length `len`, integrated in steps no longer than `h_max`.
pub fn shoot(s: &Surface, x: &V3, d: &V3, len: f64, h_max: f64) -> Result<(V3, V3)> {
    let mut st = initial_state(s, x, d)?;
    if len == 0.0 {
        return Ok((st.x, st.v));
    }
    let (dir, len) = if len < 0.0 { (-1.0, -len) } else { (1.0, len) };
    st.v *= dir;
    let steps = ((len / h_max).ceil() as usize).max(16);
    let h = len / steps as f64;
    for _ in 0..steps {
        st = projected_step(s, &st, h, false)?;
    }
    Ok((st.x, st.v * dir))
}

/// Length of the geodesic joining `x` to `y`, found by Newton iteration on
/// the initial direction angle and the length. `hint` seeds the length when
/// given; otherwise the chordal distance does. Non-convergence falls back to
/// the chordal distance with the `Fallback` flag set.
pub fn intrinsic_distance(s: &Surface, x: &V3, y: &V3, hint: Option<f64>) -> Result<DistanceEstimate> {
    let chordal = (x - y).norm();
    let fallback = |iterations| DistanceEstimate { distance: chordal, chordal, method: DistanceMethod::Fallback, iterations };
    if chordal <= 1e-15 {
        return Ok(DistanceEstimate { distance: 0.0, chordal, method: DistanceMethod::Refined, iterations: 0 });
    }
    if chordal <= SHORT_RANGE {
        return Ok(DistanceEstimate { distance: chordal, chordal, method: DistanceMethod::Chordal, iterations: 0 });
    }
    let x = s.project(x)?;
    let n = s.normal(&x)?;
    let e1 = match s.unit_tangent(&x, &(y - x)) {
        Ok(t) => t,
        Err(_) => return Ok(fallback(0)),
    };
    let e2 = n.cross(&e1);
    let dir = |theta: f64| e1 * theta.cos() + e2 * theta.sin();
    let mut theta = 0.0;
    let mut len = hint.filter(|h| *h > 0.0).unwrap_or(chordal);
    let h_max = 2e-3;
    let tol = 1e-13 + 1e-13 * len;
    for it in 1..=MAX_SHOOTING_ITERATIONS {
        let Ok((end, vend)) = shoot(s, &x, &dir(theta), len, h_max) else { return Ok(fallback(it)) };
        let r = end - y;
        if r.norm() <= tol {
            let method = DistanceMethod::Refined;
            if len < chordal - 1e-9 {
                return Ok(fallback(it));
            }
            return Ok(DistanceEstimate { distance: len, chordal, method, iterations: it });
        }
        let dt = 1e-6;
        let Ok((ep, _)) = shoot(s, &x, &dir(theta + dt), len, h_max) else { return Ok(fallback(it)) };
        let Ok((em, _)) = shoot(s, &x, &dir(theta - dt), len, h_max) else { return Ok(fallback(it)) };
        let dtheta = (ep - em) / (2.0 * dt);
        // Gauss-Newton on the 3x2 system [dtheta, vend] * delta = -r
        let jtj = Matrix2::new(dtheta.dot(&dtheta), dtheta.dot(&vend), dtheta.dot(&vend), vend.dot(&vend));
        let jtr = Vector2::new(dtheta.dot(&r), vend.dot(&r));
        let Some(delta) = jtj.lu().solve(&(-jtr)) else { return Ok(fallback(it)) };
        // damp moves larger than half a radian or half the current length
        let scale = 1f64.min(0.5 / delta[0].abs()).min(0.5 * len / delta[1].abs());
        theta += delta[0] * scale;
        len += delta[1] * scale;
        if !(len > 0.0) || !len.is_finite() {
            return Ok(fallback(it));
        }
    }
    Ok(fallback(MAX_SHOOTING_ITERATIONS))
}

/// Closed form where the surface has one, shooting otherwise.
pub fn surface_distance(s: &Surface, x: &V3, y: &V3, hint: Option<f64>) -> Result<DistanceEstimate> {
    match s.closed_form_distance(x, y) {
        Some(d) => Ok(DistanceEstimate { distance: d, chordal: (x - y).norm(), method: DistanceMethod::ClosedForm, iterations: 0 }),
        None => intrinsic_distance(s, x, y, hint),
    }
}
