//! Locally stationary quantile autoregression: simulation, local
//! polynomial fits and their asymptotics.

mod asymptotics;
pub mod dgp;
mod kernel;
mod local_fit;
mod mc;
mod simulate;

pub use asymptotics::{theorem2_asymptotics, Theorem2Asymptotics};
pub use kernel::{integrate, Kernel};
pub use local_fit::{global_fit, local_poly_fit, local_poly_fit_order, u_grid, LocalFitConfig, LocalPolyFit};
pub use mc::{conditional_quantile_path, mse_curve, MseCurve};
pub use simulate::{frozen_gamma, simulate_tvar, CoefFn, Innovation, InterceptFn, TimeSeries, TvARSpec};
