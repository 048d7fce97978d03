//! Conditional quantile contours and tubes on the scaled Gaussian model,
//! with the three weighting schemes side by side.

use std::time::Instant;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::metrics::{msrec, msret, population_radius, simulate_dgp15, ContourEval, DGPSpec15};
use crate::transport::{quantile_tube, GridSpec, TubeSlice};
use crate::weights::{fit_forest, ForestParams, WeightMethod, WeightSource};

#[derive(Debug, Clone)]
pub struct OtSettings {
    pub grid: GridSpec,
    pub grid_seed: u64,
    pub bandwidth: f64,
    pub k_nn: usize,
    pub forest: ForestParams,
    pub methods: Vec<WeightMethod>,
}

impl OtSettings {
    pub fn new(grid: GridSpec, bandwidth: f64, k_nn: usize, forest: ForestParams) -> Self {
        Self {
            grid,
            grid_seed: 0,
            bandwidth,
            k_nn,
            forest,
            methods: vec![WeightMethod::Kernel, WeightMethod::Knn, WeightMethod::Forest],
        }
    }

    pub fn only(mut self, methods: &[WeightMethod]) -> Self {
        self.methods = methods.to_vec();
        self
    }

    /// Grid level index of each `tau`.
    pub fn levels(&self, taus: &[f64]) -> Result<Vec<usize>> {
        taus.iter()
            .map(|&t| {
                self.grid
                    .level_for(t)
                    .ok_or_else(|| Error::Validation(format!("tau = {t} is not a level of the grid")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct OtTimings {
    pub forest_train: f64,
    /// Weights, transport and atlas per method, after training.
    pub query: Vec<(WeightMethod, f64)>,
}

#[derive(Debug, Clone)]
pub struct MethodTube {
    pub method: WeightMethod,
    pub slices: Vec<TubeSlice<f64>>,
}

/// Draws `(X, Y)` and traces the contours at `levels` for every method at
/// every point of `x_list`. The forest seed is derived from `data_seed`.
pub fn ot_tubes(
    m: usize,
    n: usize,
    data_seed: u64,
    x_list: &[Vec<f64>],
    levels: &[usize],
    settings: &OtSettings,
) -> Result<(Vec<MethodTube>, OtTimings)> {
    let (xs, ys) = simulate_dgp15::<f64>(&DGPSpec15::new(m, n, data_seed)?)?;
    tubes_on(&xs, &ys, crate::rng::split_seed(data_seed, "forest", 0), x_list, levels, settings)
}

pub fn tubes_on(
    xs: &Array2<f64>,
    ys: &Array2<f64>,
    forest_seed: u64,
    x_list: &[Vec<f64>],
    levels: &[usize],
    settings: &OtSettings,
) -> Result<(Vec<MethodTube>, OtTimings)> {
    let mut timings = OtTimings::default();
    let forest = if settings.methods.contains(&WeightMethod::Forest) {
        let start = Instant::now();
        let model = fit_forest(xs, ys, &settings.forest, forest_seed)?;
        timings.forest_train = start.elapsed().as_secs_f64();
        Some(model)
    } else {
        None
    };
    let mut out = Vec::new();
    for &method in &settings.methods {
        let source = match method {
            WeightMethod::Kernel => WeightSource::Kernel { bandwidth: settings.bandwidth },
            WeightMethod::Knn => WeightSource::Knn { k: settings.k_nn },
            WeightMethod::Forest => WeightSource::Forest(forest.as_ref().expect("forest trained")),
        };
        let start = Instant::now();
        let slices = quantile_tube(x_list, &source, &settings.grid, settings.grid_seed, levels, xs, ys)?;
        timings.query.push((method, start.elapsed().as_secs_f64()));
        out.push(MethodTube { method, slices });
    }
    Ok((out, timings))
}

/// Contour at grid level `level_index` of one slice against the true
/// circle of order `tau`.
pub fn contour_eval(slice: &TubeSlice<f64>, level_index: usize, tau: f64) -> Result<ContourEval<f64>> {
    let c = slice
        .contours
        .iter()
        .find(|c| c.level_index == level_index)
        .ok_or_else(|| Error::Validation(format!("no contour at level {level_index}")))?;
    ContourEval::new(c.points.clone(), population_radius(tau, &slice.x)?, tau)
}

pub fn slice_msrec(slice: &TubeSlice<f64>, level_index: usize, tau: f64) -> Result<f64> {
    Ok(msrec(&contour_eval(slice, level_index, tau)?))
}

pub fn tube_msret(slices: &[TubeSlice<f64>], level_index: usize, tau: f64) -> Result<f64> {
    let evals = slices.iter().map(|s| contour_eval(s, level_index, tau)).collect::<Result<Vec<_>>>()?;
    msret(&evals)
}
