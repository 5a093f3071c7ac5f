use super::integrate::GeodesicTrajectory;
use super::surface::V3;
use crate::error::{domain, GapError, Result};

/// Cubic Hermite interpolation of position and velocity at arc length `t`.
pub fn interpolate(traj: &GeodesicTrajectory, t: f64) -> Result<(V3, V3)> {
    let last = *traj.times.last().ok_or_else(|| GapError::Domain("empty trajectory".into()))?;
    if t < -1e-12 || t > last + 1e-12 {
        return Err(GapError::InsufficientLength { needed: t, available: last });
    }
    let t = t.clamp(0.0, last);
    let i = match traj.times.binary_search_by(|s| s.total_cmp(&t)) {
        Ok(i) => return Ok((traj.positions[i], traj.velocities[i])),
        Err(i) => i.clamp(1, traj.len() - 1) - 1,
    };
    let (t0, t1) = (traj.times[i], traj.times[i + 1]);
    let dt = t1 - t0;
    let u = (t - t0) / dt;
    let (p0, p1) = (traj.positions[i], traj.positions[i + 1]);
    let (m0, m1) = (traj.velocities[i] * dt, traj.velocities[i + 1] * dt);
    let (u2, u3) = (u * u, u * u * u);
    let p = p0 * (2.0 * u3 - 3.0 * u2 + 1.0) + m0 * (u3 - 2.0 * u2 + u) + p1 * (-2.0 * u3 + 3.0 * u2) + m1 * (u3 - u2);
    let dp = (p0 * (6.0 * u2 - 6.0 * u) + m0 * (3.0 * u2 - 4.0 * u + 1.0) + p1 * (-6.0 * u2 + 6.0 * u) + m1 * (3.0 * u2 - 2.0 * u))
        / dt;
    Ok((p, dp))
}

/// `gamma(0), gamma(T), ..., gamma(nT)`.
pub fn sample_geodesic(traj: &GeodesicTrajectory, step: f64, n: usize) -> Result<Vec<V3>> {
    if !(step > 0.0) {
        return domain("sample spacing must be positive");
    }
    let needed = step * n as f64;
    if needed > traj.length + 1e-12 * traj.length.max(1.0) {
        return Err(GapError::InsufficientLength { needed, available: traj.length });
    }
    (0..=n).map(|i| interpolate(traj, (i as f64 * step).min(traj.length)).map(|(p, _)| p)).collect()
}
