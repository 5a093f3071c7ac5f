pub mod circle;
pub mod error;
pub mod geodesic;
pub mod klein;
pub mod metric;
pub mod model;
pub mod packing;
pub mod rational;
pub mod torus;

pub use error::{GapError, Result};
pub use metric::{ClusterPolicy, MetricOracle, NndSpectrum};
pub use rational::Rational;
