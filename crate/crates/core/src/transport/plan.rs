//! Optimal coupling of the grid with a weighted sample.

use ndarray::Array2;
use serde::Serialize;

use super::grid::SphericalGrid;
use super::network::solve_transport;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanEntry<T> {
    /// Grid point.
    pub i: usize,
    /// Sample.
    pub j: usize,
    pub mass: T,
}

/// Solution of `min sum_ij |Y_j - g_i|^2 / 2 pi_ij` over couplings with row
/// sums `1/N` and column sums `w_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan<T> {
    /// Positive entries sorted by `(i, j)`.
    pub entries: Vec<PlanEntry<T>>,
    pub objective: T,
    pub row_marginal: Vec<T>,
    pub col_marginal: Vec<T>,
    pub conditioning_point: Vec<T>,
    pub iterations: usize,
    /// Smallest reduced cost over all grid/sample pairs with positive
    /// weight; nonnegative up to rounding at an optimum.
    pub min_reduced_cost: T,
}

impl<T: Scalar> TransportPlan<T> {
    pub fn n_grid(&self) -> usize {
        self.row_marginal.len()
    }

    pub fn n_samples(&self) -> usize {
        self.col_marginal.len()
    }

    pub fn row_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.n_grid()];
        for e in &self.entries {
            s[e.i] = s[e.i] + e.mass;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.n_samples()];
        for e in &self.entries {
            s[e.j] = s[e.j] + e.mass;
        }
        s
    }

    /// Largest deviation from either marginal.
    pub fn marginal_error(&self) -> T {
        let rows = self.row_sums().into_iter().zip(&self.row_marginal).map(|(a, &b)| (a - b).abs());
        let cols = self.col_sums().into_iter().zip(&self.col_marginal).map(|(a, &b)| (a - b).abs());
        rows.chain(cols).fold(T::zero(), T::max)
    }

    /// Entries of grid point `i`.
    pub fn row(&self, i: usize) -> &[PlanEntry<T>] {
        let lo = self.entries.partition_point(|e| e.i < i);
        let hi = self.entries.partition_point(|e| e.i <= i);
        &self.entries[lo..hi]
    }

    pub fn dense(&self) -> Array2<T> {
        let mut m = Array2::zeros((self.n_grid(), self.n_samples()));
        for e in &self.entries {
            m[[e.i, e.j]] = e.mass;
        }
        m
    }
}

fn cost<T: Scalar>(g: ndarray::ArrayView1<T>, y: ndarray::ArrayView1<T>) -> T {
    T::lit(0.5) * g.iter().zip(y.iter()).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b))
}

/// Exact optimal plan by network simplex. Samples with zero weight are
/// left out of the problem and receive no mass.
pub fn solve_ot<T: Scalar>(grid: &SphericalGrid<T>, samples: &Array2<T>, weights: &WeightVector<T>) -> Result<TransportPlan<T>> {
    weights.validate()?;
    let n = samples.nrows();
    if weights.len() != n {
        return Err(Error::Shape(format!("{} weights for {n} samples", weights.len())));
    }
    if samples.ncols() != grid.points.ncols() {
        return Err(Error::Shape(format!("samples in R^{}, grid in R^{}", samples.ncols(), grid.points.ncols())));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite sample value".into()));
    }
    let big_n = grid.len();
    let keep = weights.support();
    let supply = vec![T::one() / T::from_usize_lossy(big_n); big_n];
    let demand: Vec<T> = keep.iter().map(|&j| weights.weights[j]).collect();
    // rescale so that both sides carry the same total in floating point
    let total: T = demand.iter().copied().sum();
    let s_total: T = supply.iter().copied().sum();
    let demand: Vec<T> = demand.iter().map(|&d| d * s_total / total).collect();
    let mut costs = Vec::with_capacity(big_n * keep.len());
    for g in grid.points.rows() {
        for &j in &keep {
            costs.push(cost(g, samples.row(j)));
        }
    }
    let sol = solve_transport(&supply, &demand, &costs)?;

    let cols = keep.len();
    let cutoff = T::epsilon() * T::lit(64.0) / T::from_usize_lossy(big_n);
    let mut entries = Vec::new();
    let mut objective = T::zero();
    let mut min_rc = T::infinity();
    let mut slack = T::zero();
    for i in 0..big_n {
        for (c, &j) in keep.iter().enumerate() {
            let e = i * cols + c;
            let rc = costs[e] + sol.potential[i] - sol.potential[big_n + c];
            min_rc = min_rc.min(rc);
            let f = sol.flow[e];
            if f > cutoff {
                entries.push(PlanEntry { i, j, mass: f });
                objective = objective + costs[e] * f;
                slack = slack.max(rc.abs());
            }
        }
    }
    let c_max = costs.iter().copied().fold(T::zero(), T::max);
    let tol = T::lit(1e-9) * (T::one() + c_max);
    if min_rc < -tol || slack > tol {
        return Err(Error::Internal(format!(
            "transport certificate failed: min reduced cost {min_rc:e}, slackness {slack:e} after {} pivots",
            sol.iterations
        )));
    }
    let plan = TransportPlan {
        entries,
        objective,
        row_marginal: supply,
        col_marginal: weights.weights.clone(),
        conditioning_point: weights.conditioning_point.clone(),
        iterations: sol.iterations,
        min_reduced_cost: min_rc,
    };
    debug_assert!(plan.marginal_error() <= T::lit(1e-9), "marginals off by {}", plan.marginal_error());
    Ok(plan)
}

/// Minimum of the transportation objective over all vertices of the
/// polytope, by enumerating every set of `N + n - 1` cells.
#[cfg(test)]
pub(crate) fn brute_force_objective(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    use crate::linalg::Lu;
    let (r, c) = (supply.len(), demand.len());
    let cells = r * c;
    let basis = r + c - 1;
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..basis).collect();
    loop {
        // equations: all row sums and the first c - 1 column sums
        let mut a = Array2::<f64>::zeros((basis, basis));
        for (k, &cell) in pick.iter().enumerate() {
            let (i, j) = (cell / c, cell % c);
            a[[i, k]] = 1.0;
            if j + 1 < c {
                a[[r + j, k]] = 1.0;
            }
        }
        let rhs: Vec<f64> = supply.iter().chain(&demand[..c - 1]).copied().collect();
        if let Ok(lu) = Lu::factor(&a) {
            let f = lu.solve(&rhs);
            let col_last: f64 = pick.iter().zip(&f).filter(|(cell, _)| *cell % c == c - 1).map(|(_, v)| v).sum();
            if f.iter().all(|&v| v >= -1e-12) && (col_last - demand[c - 1]).abs() < 1e-9 {
                best = best.min(pick.iter().zip(&f).map(|(&cell, &v)| cost[cell] * v).sum());
            }
        }
        // next combination
        let mut k = basis;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if pick[k] < cells - basis + k {
                break;
            }
        }
        pick[k] += 1;
        for t in k + 1..basis {
            pick[t] = pick[t - 1] + 1;
        }
    }
}
