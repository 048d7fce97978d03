//! Empirical center-outward quantiles read off an optimal plan.

use ndarray::Array2;
use serde::Serialize;

use super::grid::SphericalGrid;
use super::minnorm::min_norm_point;
use super::plan::TransportPlan;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const TIE_TOL: f64 = 1e-12;

/// Image of every grid point under the empirical quantile map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileAtlas<T> {
    /// `map[i]` is the quantile attached to grid point `i`.
    pub map: Vec<Vec<T>>,
    /// Radius of each grid point (0 for origin copies).
    pub levels: Vec<T>,
    pub level_index: Vec<usize>,
    pub direction_index: Vec<Option<usize>>,
    pub conditioning_point: Vec<T>,
    pub n_r: usize,
    pub n_s: usize,
}

/// One serialized grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtlasRecord<T> {
    /// Conditioning point, comma-joined.
    pub x: String,
    pub level: T,
    pub direction_index: Option<usize>,
    pub q: Vec<T>,
}

/// Each grid point goes to the sample receiving most of its mass. When
/// several samples are within `1e-12` of the maximum, the image is the
/// minimum-norm point of their convex hull.
pub fn extract_quantile_map<T: Scalar>(plan: &TransportPlan<T>, grid: &SphericalGrid<T>, samples: &Array2<T>) -> Result<QuantileAtlas<T>> {
    if plan.n_grid() != grid.len() || plan.n_samples() != samples.nrows() {
        return Err(Error::Shape(format!(
            "plan is {} x {}, grid has {} points and sample {} rows",
            plan.n_grid(),
            plan.n_samples(),
            grid.len(),
            samples.nrows()
        )));
    }
    let mut map = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let row = plan.row(i);
        let top = row.iter().map(|e| e.mass).fold(T::neg_infinity(), T::max);
        if row.is_empty() {
            return Err(Error::Internal(format!("grid point {i} carries no mass")));
        }
        let tied: Vec<usize> = row.iter().filter(|e| e.mass >= top - T::lit(TIE_TOL)).map(|e| e.j).collect();
        let image = if tied.len() == 1 {
            samples.row(tied[0]).to_vec()
        } else {
            let pts: Vec<Vec<T>> = tied.iter().map(|&j| samples.row(j).to_vec()).collect();
            let refs: Vec<&[T]> = pts.iter().map(|p| p.as_slice()).collect();
            min_norm_point(&refs)
        };
        map.push(image);
    }
    Ok(QuantileAtlas {
        map,
        levels: (0..grid.len()).map(|i| grid.level_of(i)).collect(),
        level_index: grid.level_index.clone(),
        direction_index: grid.direction_index.clone(),
        conditioning_point: plan.conditioning_point.clone(),
        n_r: grid.spec.n_r,
        n_s: grid.spec.n_s,
    })
}

impl<T: Scalar> QuantileAtlas<T> {
    fn check_level(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n_r {
            return Err(Error::Domain(format!("level {j} outside 1..={}", self.n_r)));
        }
        Ok(())
    }

    /// Images of the points at radius `j / (N_R + 1)`, by direction index.
    pub fn contour(&self, j: usize) -> Result<Vec<Vec<T>>> {
        self.check_level(j)?;
        Ok(self.map[(j - 1) * self.n_s..j * self.n_s].to_vec())
    }

    /// Images at levels `1..=j` followed by the origin copies.
    pub fn region(&self, j: usize) -> Result<Vec<Vec<T>>> {
        self.check_level(j)?;
        let mut pts = self.map[..j * self.n_s].to_vec();
        pts.extend_from_slice(&self.map[self.n_r * self.n_s..]);
        Ok(pts)
    }

    pub fn records(&self) -> Vec<AtlasRecord<T>> {
        let x = self.conditioning_point.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        (0..self.map.len())
            .map(|i| AtlasRecord { x: x.clone(), level: self.levels[i], direction_index: self.direction_index[i], q: self.map[i].clone() })
            .collect()
    }
}

/// Free-function form of [`QuantileAtlas::contour`].
pub fn contour<T: Scalar>(atlas: &QuantileAtlas<T>, j: usize) -> Result<Vec<Vec<T>>> {
    atlas.contour(j)
}

/// Free-function form of [`QuantileAtlas::region`].
pub fn region<T: Scalar>(atlas: &QuantileAtlas<T>, j: usize) -> Result<Vec<Vec<T>>> {
    atlas.region(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::transport::grid::{build_grid, GridSpec};
    use crate::transport::plan::{solve_ot, PlanEntry};
    use crate::weights::{WeightMethod, WeightVector};
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn uniform(n: usize) -> WeightVector<f64> {
        WeightVector::new(vec![1.0 / n as f64; n], WeightMethod::Knn, vec![0.5]).unwrap()
    }

    fn atlas_for(spec: GridSpec, y: &Array2<f64>, w: &WeightVector<f64>) -> QuantileAtlas<f64> {
        let g = build_grid(&spec, 1).unwrap();
        let plan = solve_ot(&g, y, w).unwrap();
        extract_quantile_map(&plan, &g, y).unwrap()
    }

    fn hand_plan(entries: Vec<PlanEntry<f64>>, n: usize) -> TransportPlan<f64> {
        TransportPlan {
            entries,
            objective: 0.0,
            row_marginal: vec![1.0],
            col_marginal: vec![1.0 / n as f64; n],
            conditioning_point: vec![],
            iterations: 0,
            min_reduced_cost: 0.0,
        }
    }

    #[test]
    fn argmax_and_tie_rule() {
        let g = build_grid::<f64>(&GridSpec::new(2, 1, 1, 0).unwrap(), 0).unwrap();
        let y = array![[1.0, 0.0], [-1.0, 0.0], [3.0, 3.0], [0.0, 7.0]];
        let single = hand_plan(vec![PlanEntry { i: 0, j: 2, mass: 0.7 }, PlanEntry { i: 0, j: 3, mass: 0.3 }], 4);
        assert_eq!(extract_quantile_map(&single, &g, &y).unwrap().map[0], vec![3.0, 3.0]);
        let tie = hand_plan(vec![PlanEntry { i: 0, j: 0, mass: 0.5 }, PlanEntry { i: 0, j: 1, mass: 0.5 }], 4);
        let img = &extract_quantile_map(&tie, &g, &y).unwrap().map[0];
        assert!(img[0].abs() < 1e-15 && img[1].abs() < 1e-15);
    }

    #[test]
    fn contours_and_regions() {
        let mut r = rng::seeded(4);
        let y = Array2::from_shape_fn((24, 2), |_| r.random_range(-1.0..1.0));
        let a = atlas_for(GridSpec::new(2, 2, 6, 1).unwrap(), &y, &uniform(24));
        let inner = a.contour(1).unwrap();
        assert_eq!(inner, a.map[..6].to_vec());
        let mut expect = inner.clone();
        expect.push(a.map[12].clone());
        assert_eq!(a.region(1).unwrap(), expect);
        assert_eq!(a.region(2).unwrap().len(), a.map.len());
        assert!(matches!(a.contour(0), Err(Error::Domain(_))));
        assert!(a.contour(3).is_err());
        assert_eq!(a.level_index[12], 0);
        assert_eq!(a.records()[12].level, 0.0);
        assert_eq!(a.records()[0].x, "0.5");
    }

    #[test]
    fn identical_samples_collapse_the_contour() {
        let y = Array2::from_shape_fn((5, 2), |(_, k)| k as f64 + 0.5);
        let a = atlas_for(GridSpec::new(2, 3, 8, 0).unwrap(), &y, &uniform(5));
        assert!(a.contour(2).unwrap().iter().all(|p| p == &vec![0.5, 1.5]));
    }

    #[test]
    fn one_dimensional_atlas_gives_order_statistics() {
        let y = array![[0.4], [-1.0], [2.5], [0.0], [1.1], [-0.2]];
        // +/- directions, three radii: points 0.25,-0.25,0.5,-0.5,0.75,-0.75
        let a = atlas_for(GridSpec::new(1, 3, 2, 0).unwrap(), &y, &uniform(6));
        let mut sorted: Vec<f64> = y.iter().copied().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let grid_order = [5, 3, 1, 0, 2, 4];
        let got: Vec<f64> = grid_order.iter().map(|&i| a.map[i][0]).collect();
        assert_eq!(got, sorted);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn translation_equivariance_nesting_and_determinism(seed in 0u64..100_000, n in 2usize..15, cx in -5.0f64..5.0, cy in -5.0f64..5.0) {
            let mut r = rng::seeded(seed);
            let y = Array2::from_shape_fn((n, 2), |_| r.random_range(-1.0..1.0));
            let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.1..1.0)).collect();
            let t: f64 = raw.iter().sum();
            let w = WeightVector::new(raw.iter().map(|v| v / t).collect(), WeightMethod::Kernel, vec![]).unwrap();
            let spec = GridSpec::new(2, 3, 5, 1).unwrap();
            let a = atlas_for(spec, &y, &w);
            prop_assert_eq!(&a, &atlas_for(spec, &y, &w));
            let shifted = Array2::from_shape_fn((n, 2), |(i, k)| y[[i, k]] + if k == 0 { cx } else { cy });
            let b = atlas_for(spec, &shifted, &w);
            for (p, q) in a.map.iter().zip(&b.map) {
                prop_assert!((p[0] + cx - q[0]).abs() < 1e-9 && (p[1] + cy - q[1]).abs() < 1e-9);
            }
            for j in 1..3 {
                let small = a.region(j).unwrap();
                let big = a.region(j + 1).unwrap();
                prop_assert!(small.iter().all(|p| big.contains(p)));
                prop_assert!(small.len() <= big.len());
            }
        }
    }
}
