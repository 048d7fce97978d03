pub mod error;
pub mod experiment;
pub mod linalg;
pub mod locstat;
pub mod metrics;
pub mod qr;
pub mod rng;
pub mod scalar;
pub mod transport;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double precision instances of the generic types.
pub type LocalPolyFit64 = locstat::LocalPolyFit<f64>;
pub type LocalFitConfig64 = locstat::LocalFitConfig<f64>;
pub type TimeSeries64 = locstat::TimeSeries<f64>;
pub type MseCurve64 = locstat::MseCurve<f64>;
pub type QuantileFit64 = qr::QuantileFit<f64>;
pub type RegressionProblem64 = qr::RegressionProblem<f64>;
pub type WeightVector64 = weights::WeightVector<f64>;
pub type ForestModel64 = weights::ForestModel<f64>;
pub type SphericalGrid64 = transport::SphericalGrid<f64>;
pub type TransportPlan64 = transport::TransportPlan<f64>;
pub type QuantileAtlas64 = transport::QuantileAtlas<f64>;
pub type TubeSlice64 = transport::TubeSlice<f64>;
pub type ContourEval64 = metrics::ContourEval<f64>;
