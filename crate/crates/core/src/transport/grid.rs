//! Discretization of the unit ball: `N_R` spheres times `N_S` directions
//! plus `N_0` copies of the origin.

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n_r: usize,
    pub n_s: usize,
    pub n_0: usize,
}

impl GridSpec {
    pub fn new(d: usize, n_r: usize, n_s: usize, n_0: usize) -> Result<Self> {
        let spec = Self { d, n_r, n_s, n_0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n_r == 0 || self.n_s == 0 {
            return Err(Error::Validation(format!(
                "grid needs d, N_R, N_S >= 1 (got {}, {}, {})",
                self.d, self.n_r, self.n_s
            )));
        }
        if self.n_0 >= self.n_r.min(self.n_s) {
            return Err(Error::Validation(format!(
                "N_0 = {} must be below min(N_R, N_S) = {}",
                self.n_0,
                self.n_r.min(self.n_s)
            )));
        }
        Ok(())
    }

    /// `N = N_R N_S + N_0`.
    pub fn size(&self) -> usize {
        self.n_r * self.n_s + self.n_0
    }

    /// Radius `j / (N_R + 1)` of level `j`.
    pub fn level(&self, j: usize) -> f64 {
        j as f64 / (self.n_r + 1) as f64
    }

    /// Level index whose radius equals `tau`, if any.
    pub fn level_for(&self, tau: f64) -> Option<usize> {
        let j = (tau * (self.n_r + 1) as f64).round();
        (j >= 1.0 && j <= self.n_r as f64 && (self.level(j as usize) - tau).abs() < 1e-12).then_some(j as usize)
    }
}

/// Grid points `g_1..g_N`. Point `(j - 1) N_S + s` sits at radius
/// `j / (N_R + 1)` along direction `s`; the origin copies come last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphericalGrid<T> {
    pub spec: GridSpec,
    /// `N x d`.
    pub points: Array2<T>,
    pub radii: Vec<T>,
    /// `N_S x d` unit vectors.
    pub directions: Array2<T>,
    /// Level of each point, `0` for origin copies.
    pub level_index: Vec<usize>,
    pub direction_index: Vec<Option<usize>>,
}

impl<T: Scalar> SphericalGrid<T> {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Radius carried by point `i`.
    pub fn level_of(&self, i: usize) -> T {
        match self.level_index[i] {
            0 => T::zero(),
            j => self.radii[j - 1],
        }
    }
}

/// Builds the grid.
///
/// Directions: `d = 1` alternates `+1, -1`; `d = 2` uses the angles
/// `2 pi s / N_S`; `d >= 3` draws normalized Gaussian vectors from `seed`
/// (the seed is ignored otherwise).
pub fn build_grid<T: Scalar>(spec: &GridSpec, seed: u64) -> Result<SphericalGrid<T>> {
    spec.validate()?;
    let GridSpec { d, n_r, n_s, n_0 } = *spec;
    let mut directions = Array2::zeros((n_s, d));
    match d {
        1 => {
            for s in 0..n_s {
                directions[[s, 0]] = if s % 2 == 0 { T::one() } else { -T::one() };
            }
        }
        2 => {
            for s in 0..n_s {
                let a = 2.0 * std::f64::consts::PI * s as f64 / n_s as f64;
                directions[[s, 0]] = T::lit(a.cos());
                directions[[s, 1]] = T::lit(a.sin());
            }
        }
        _ => {
            let mut rng = rng::seeded(seed);
            for s in 0..n_s {
                loop {
                    let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 1e-12 {
                        for (k, x) in v.iter().enumerate() {
                            directions[[s, k]] = T::lit(x / norm);
                        }
                        break;
                    }
                }
            }
        }
    }
    let radii: Vec<T> = (1..=n_r).map(|j| T::lit(spec.level(j))).collect();
    let n = spec.size();
    let mut points = Array2::zeros((n, d));
    let mut level_index = Vec::with_capacity(n);
    let mut direction_index = Vec::with_capacity(n);
    for (j, &r) in radii.iter().enumerate() {
        for s in 0..n_s {
            let row = j * n_s + s;
            for k in 0..d {
                points[[row, k]] = r * directions[[s, k]];
            }
            level_index.push(j + 1);
            direction_index.push(Some(s));
        }
    }
    for _ in 0..n_0 {
        level_index.push(0);
        direction_index.push(None);
    }
    Ok(SphericalGrid { spec: *spec, points, radii, directions, level_index, direction_index })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_planar_grid() {
        let g: SphericalGrid<f64> = build_grid(&GridSpec::new(2, 2, 4, 0).unwrap(), 0).unwrap();
        assert_eq!(g.len(), 8);
        let expect = [(1.0 / 3.0, 0.0), (0.0, 1.0 / 3.0), (-1.0 / 3.0, 0.0), (0.0, -1.0 / 3.0)];
        for (s, (a, b)) in expect.iter().enumerate() {
            assert!((g.points[[s, 0]] - a).abs() < 1e-15 && (g.points[[s, 1]] - b).abs() < 1e-15);
            assert!((g.points[[4 + s, 0]] - 2.0 * a).abs() < 1e-15);
        }
        assert_eq!(g.level_index, vec![1, 1, 1, 1, 2, 2, 2, 2]);
    }

    #[test]
    fn single_point_grid() {
        let g: SphericalGrid<f64> = build_grid(&GridSpec::new(2, 1, 1, 0).unwrap(), 0).unwrap();
        assert_eq!(g.points.as_slice().unwrap(), &[0.5, 0.0]);
    }

    #[test]
    fn mean_radius_is_one_half() {
        let g: SphericalGrid<f64> = build_grid(&GridSpec::new(2, 20, 50, 0).unwrap(), 0).unwrap();
        let mean = g.points.rows().into_iter().map(|r| r.dot(&r).sqrt()).sum::<f64>() / g.len() as f64;
        assert!((mean - 0.5).abs() < 0.02);
    }

    #[test]
    fn random_directions_are_unit_and_seeded() {
        let spec = GridSpec::new(4, 3, 7, 2).unwrap();
        let a: SphericalGrid<f64> = build_grid(&spec, 5).unwrap();
        let b: SphericalGrid<f64> = build_grid(&spec, 5).unwrap();
        assert_eq!(a, b);
        for r in a.directions.rows() {
            assert!((r.dot(&r) - 1.0).abs() < 1e-12);
        }
        assert_eq!(a.len(), 23);
        assert!(a.points.rows().into_iter().all(|r| r.dot(&r) < 1.0));
        assert_eq!(&a.level_index[21..], &[0, 0]);
        assert_ne!(a.directions, build_grid::<f64>(&spec, 6).unwrap().directions);
    }

    #[test]
    fn origin_copies_are_bounded() {
        assert!(GridSpec::new(2, 3, 3, 3).is_err());
        assert!(GridSpec::new(2, 3, 2, 1).is_ok());
        assert!(GridSpec::new(0, 3, 2, 0).is_err());
    }

    #[test]
    fn levels_map_back_to_tau() {
        let s = GridSpec::new(2, 9, 100, 0).unwrap();
        assert_eq!(s.level_for(0.2), Some(2));
        assert_eq!(s.level_for(0.6), Some(6));
        assert_eq!(s.level_for(0.25), None);
    }
}
