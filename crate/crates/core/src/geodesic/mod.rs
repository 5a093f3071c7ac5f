//! Numerical geodesics on implicit surfaces in `R^3`.

pub mod conjugate;
pub mod derivative;
pub mod distance;
pub mod integrate;
pub mod intersect;
pub mod isolated;
pub mod sample;
pub mod scan;
pub mod surface;

pub use conjugate::{conjugate_points, ConjugateReport};
pub use derivative::{derivative_triple_analytic, derivative_triple_fd, derivative_triple_fd_klein, DerivativeTriple, DEFAULT_XIS};
pub use distance::{intrinsic_distance, surface_distance, DistanceEstimate, DistanceMethod};
pub use integrate::{integrate_geodesic, GeodesicTrajectory};
pub use intersect::{count_crossings, DEFAULT_THETA_MIN, count_self_intersections, klein_pieces, CurvePiece, IntersectionRecord, IntersectionReport};
pub use isolated::{isolated_point_diagnostic, IsolationProfile};
pub use sample::{interpolate, sample_geodesic};
pub use scan::{bgc_scan, surface_nnd, GeoConfig, GrowthPoint, ScanOptions, ScanReport, ScanRow, SurfaceNnd};
pub use surface::{Surface, V3};
