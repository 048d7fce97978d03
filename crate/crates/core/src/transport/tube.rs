//! Quantile contours traced along a sequence of conditioning points.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use super::atlas::{extract_quantile_map, QuantileAtlas};
use super::grid::{build_grid, GridSpec};
use super::plan::solve_ot;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weights::WeightSource;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubeContour<T> {
    pub level_index: usize,
    pub level: T,
    pub points: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubeSlice<T> {
    pub x: Vec<T>,
    pub contours: Vec<TubeContour<T>>,
    pub atlas: QuantileAtlas<T>,
}

impl<T: Scalar> TubeSlice<T> {
    /// `(x_1, q_1, q_2)` triples of one contour, the coordinates in which
    /// a planar tube is drawn.
    pub fn projected(&self, level_index: usize) -> Option<Vec<[T; 3]>> {
        let c = self.contours.iter().find(|c| c.level_index == level_index)?;
        let x1 = *self.x.first()?;
        c.points.iter().map(|p| (p.len() >= 2).then(|| [x1, p[0], p[1]])).collect()
    }
}

/// Weights, plan and atlas at every `x` in `x_list`, keeping the contours
/// at `levels` (grid level indices).
pub fn quantile_tube<T: Scalar>(
    x_list: &[Vec<T>],
    source: &WeightSource<'_, T>,
    grid_spec: &GridSpec,
    grid_seed: u64,
    levels: &[usize],
    xs: &Array2<T>,
    ys: &Array2<T>,
) -> Result<Vec<TubeSlice<T>>> {
    if x_list.is_empty() {
        return Err(Error::Validation("no conditioning points".into()));
    }
    if xs.nrows() != ys.nrows() {
        return Err(Error::Shape(format!("X has {} rows, Y has {}", xs.nrows(), ys.nrows())));
    }
    if let Some(bad) = x_list.iter().find(|x| x.len() != xs.ncols()) {
        return Err(Error::Shape(format!("conditioning point of dimension {}, X has {}", bad.len(), xs.ncols())));
    }
    if let Some(&j) = levels.iter().find(|&&j| j == 0 || j > grid_spec.n_r) {
        return Err(Error::Domain(format!("level {j} outside 1..={}", grid_spec.n_r)));
    }
    let grid = build_grid::<T>(grid_spec, grid_seed)?;
    x_list
        .par_iter()
        .map(|x| {
            let w = source.weights_at(x, xs)?;
            let plan = solve_ot(&grid, ys, &w)?;
            let atlas = extract_quantile_map(&plan, &grid, ys)?;
            let contours = levels
                .iter()
                .map(|&j| Ok(TubeContour { level_index: j, level: grid.radii[j - 1], points: atlas.contour(j)? }))
                .collect::<Result<_>>()?;
            Ok(TubeSlice { x: x.clone(), contours, atlas })
        })
        .collect()
}
