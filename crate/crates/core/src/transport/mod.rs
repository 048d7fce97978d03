//! Empirical conditional center-outward quantiles by discrete optimal
//! transport between a unit-ball grid and a weighted sample.

mod atlas;
mod grid;
mod minnorm;
mod network;
mod plan;
mod tube;

pub use atlas::{contour, extract_quantile_map, region, AtlasRecord, QuantileAtlas};
pub use grid::{build_grid, GridSpec, SphericalGrid};
pub use minnorm::min_norm_point;
pub use plan::{solve_ot, PlanEntry, TransportPlan};
pub use tube::{quantile_tube, TubeContour, TubeSlice};
