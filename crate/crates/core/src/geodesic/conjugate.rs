use serde::Serialize;

use super::integrate::{initial_state, projected_step, rk4_step, State};
use super::surface::{Surface, V3};
use crate::error::{domain, Result};

/// Bisection stops once the bracket is this narrow.
pub const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateReport {
    pub surface: Surface,
    pub max_length: f64,
    pub h: f64,
    /// Arc lengths `t > 0` where the Jacobi field `j` with `j(0) = 0`,
    /// `j'(0) = 1` vanishes.
    pub times: Vec<f64>,
}

impl ConjugateReport {
    pub fn first(&self) -> Option<f64> {
        self.times.first().copied()
    }
}

/// Integrates `j'' + K(gamma(t)) j = 0` alongside the geodesic and reports
/// the sign changes of `j`, each refined by bisecting a single sub-step.
pub fn conjugate_points(s: &Surface, x0: &V3, v0: &V3, max_length: f64, h: f64) -> Result<ConjugateReport> {
    if !(max_length > 0.0 && max_length.is_finite()) || !(h > 0.0) {
        return domain("length and step must be positive");
    }
    let mut st = initial_state(s, x0, v0)?;
    let steps = (max_length / h).ceil() as usize;
    let mut times = Vec::new();
    for i in 0..steps {
        let t0 = i as f64 * h;
        let dt = if i + 1 == steps { max_length - t0 } else { h };
        let next = projected_step(s, &st, dt, true)?;
        if i > 0 && st.j != 0.0 && (next.j == 0.0 || next.j.signum() != st.j.signum()) {
            times.push(t0 + bisect(s, &st, dt)?);
        }
        st = next;
    }
    Ok(ConjugateReport { surface: *s, max_length, h, times })
}

fn bisect(s: &Surface, st: &State, dt: f64) -> Result<f64> {
    let sign0 = st.j.signum();
    let (mut lo, mut hi) = (0.0, dt);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if rk4_step(s, st, mid, true)?.j.signum() == sign0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
