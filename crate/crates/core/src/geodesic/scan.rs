use serde::Serialize;

use super::distance::{intrinsic_distance, DistanceMethod};
use super::integrate::integrate_geodesic;
use super::sample::sample_geodesic;
use super::surface::{Surface, V3};
use crate::error::{domain, Result};
use crate::metric::{ClusterPolicy, NndSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoConfig {
    pub start: [f64; 3],
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    pub h: f64,
    pub policy: ClusterPolicy,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { h: 1e-3, policy: ClusterPolicy::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceNnd {
    pub spectrum: NndSpectrum<f64>,
    /// Boundary-value solves performed.
    pub refined_pairs: usize,
    /// Solves that fell back to the chordal distance.
    pub warnings: usize,
}

struct Row {
    value: f64,
    neighbor: usize,
    refined: usize,
    warnings: usize,
}

/// Nearest neighbors by intrinsic distance. Chordal distance never exceeds
/// the intrinsic one, so after refining the chordally nearest point only
/// points chordally closer than the best refined value can still win.
fn nearest_row(surface: &Surface, points: &[V3], i: usize) -> Result<Row> {
    let x = &points[i];
    if surface.closed_form_distance(x, x).is_some() {
        let mut best = Row { value: f64::INFINITY, neighbor: usize::MAX, refined: 0, warnings: 0 };
        for (j, y) in points.iter().enumerate() {
            if j != i {
                let d = surface.closed_form_distance(x, y).expect("closed form");
                if d < best.value {
                    best.value = d;
                    best.neighbor = j;
                }
            }
        }
        return Ok(best);
    }
    let chordal: Vec<f64> = points.iter().map(|y| (x - y).norm()).collect();
    let mut order: Vec<usize> = (0..points.len()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| chordal[a].total_cmp(&chordal[b]).then(a.cmp(&b)));
    let mut best = Row { value: f64::INFINITY, neighbor: usize::MAX, refined: 0, warnings: 0 };
    for j in order {
        if chordal[j] > best.value {
            break;
        }
        let est = intrinsic_distance(surface, x, &points[j], None)?;
        best.refined += 1;
        if est.method == DistanceMethod::Fallback {
            best.warnings += 1;
        }
        if est.distance < best.value || (est.distance == best.value && j < best.neighbor) {
            best.value = est.distance;
            best.neighbor = j;
        }
    }
    Ok(best)
}

pub fn surface_nnd(surface: &Surface, points: &[V3], policy: ClusterPolicy) -> Result<SurfaceNnd> {
    if points.len() < 2 {
        return domain("a spectrum needs at least two points");
    }
    let row = |i: usize| nearest_row(surface, points, i);
    #[cfg(feature = "parallel")]
    let rows: Vec<Row> = {
        use rayon::prelude::*;
        (0..points.len()).into_par_iter().map(row).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Row> = (0..points.len()).map(row).collect::<Result<_>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let spectrum = NndSpectrum::from_values(values.clone(), values, rows.iter().map(|r| r.neighbor).collect(), policy)?;
    Ok(SurfaceNnd {
        spectrum,
        refined_pairs: rows.iter().map(|r| r.refined).sum(),
        warnings: rows.iter().map(|r| r.warnings).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub config_id: usize,
    pub step: f64,
    pub n: usize,
    pub nnd_count: usize,
    pub refined_pairs: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub n: usize,
    pub max_nnd: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub surface: Surface,
    pub rows: Vec<ScanRow>,
    pub growth: Vec<GrowthPoint>,
}

impl ScanReport {
    pub fn max_nnd(&self) -> usize {
        self.rows.iter().map(|r| r.nnd_count).max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("config_id,T,n,nnd_count,refined_pairs,warnings\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.17e},{},{},{},{}\n", r.config_id, r.step, r.n, r.nnd_count, r.refined_pairs, r.warnings));
        }
        out
    }
}

fn scan_config(surface: &Surface, id: usize, cfg: &GeoConfig, steps: &[f64], ns: &[usize], opts: &ScanOptions) -> Result<Vec<ScanRow>> {
    let x0 = surface.project(&V3::from(cfg.start))?;
    let v0 = surface.unit_tangent(&x0, &V3::from(cfg.direction))?;
    let max_n = *ns.iter().max().expect("nonempty");
    let max_t = steps.iter().copied().fold(0.0, f64::max);
    let traj = integrate_geodesic(surface, &x0, &v0, max_t * max_n as f64, opts.h)?;
    let mut rows = Vec::new();
    for &step in steps {
        for &n in ns {
            let pts = sample_geodesic(&traj, step, n)?;
            let nnd = surface_nnd(surface, &pts, opts.policy)?;
            rows.push(ScanRow {
                config_id: id,
                step,
                n,
                nnd_count: nnd.spectrum.count(),
                refined_pairs: nnd.refined_pairs,
                warnings: nnd.warnings,
            });
        }
    }
    Ok(rows)
}

/// `|NND|` of `{gamma(iT) : i = 0..n}` over every configuration, spacing and
/// count, with the running maximum per `n`.
pub fn bgc_scan(surface: &Surface, configs: &[GeoConfig], steps: &[f64], ns: &[usize], opts: &ScanOptions) -> Result<ScanReport> {
    if configs.is_empty() || steps.is_empty() || ns.is_empty() {
        return domain("scan grids must be nonempty");
    }
    if steps.iter().any(|t| !(*t > 0.0)) || ns.iter().any(|&n| n == 0) {
        return domain("spacings must be positive and counts at least 1");
    }
    let per_config = |(id, cfg): (usize, &GeoConfig)| scan_config(surface, id, cfg, steps, ns, opts);
    #[cfg(feature = "parallel")]
    let nested: Vec<Vec<ScanRow>> = {
        use rayon::prelude::*;
        configs.par_iter().enumerate().map(per_config).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let nested: Vec<Vec<ScanRow>> = configs.iter().enumerate().map(per_config).collect::<Result<_>>()?;
    let rows: Vec<ScanRow> = nested.into_iter().flatten().collect();
    let mut sorted_ns = ns.to_vec();
    sorted_ns.sort_unstable();
    sorted_ns.dedup();
    let growth = sorted_ns
        .iter()
        .map(|&n| GrowthPoint { n, max_nnd: rows.iter().filter(|r| r.n == n).map(|r| r.nnd_count).max().unwrap_or(0) })
        .collect();
    Ok(ScanReport { surface: *surface, rows, growth })
}
