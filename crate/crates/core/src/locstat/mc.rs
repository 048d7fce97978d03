//! Monte Carlo summaries of local fits.

use serde::Serialize;

use super::local_fit::LocalPolyFit;
use super::simulate::TimeSeries;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-`u` mean squared error of `theta0`, per coefficient and averaged
/// over coefficients.
#[derive(Debug, Clone, Serialize)]
pub struct MseCurve<T> {
    pub u: Vec<T>,
    /// `per_coef[j][g]`: MSE of coefficient `j` at grid point `g`.
    pub per_coef: Vec<Vec<T>>,
    pub aggregate: Vec<T>,
}

impl<T: Scalar> MseCurve<T> {
    /// Mean of coefficient `j`'s curve over grid points selected by `keep`.
    pub fn mean_where(&self, j: usize, keep: impl Fn(T) -> bool) -> T {
        let picked: Vec<T> = self.u.iter().zip(&self.per_coef[j]).filter(|(u, _)| keep(**u)).map(|(_, v)| *v).collect();
        let n = T::from_usize_lossy(picked.len().max(1));
        picked.into_iter().sum::<T>() / n
    }
}

/// `MSE(u) = mean over runs (theta0_hat(u) - theta(u))^2`.
///
/// `fits[r][g]` is run `r` at grid point `g`; every run must use the same grid.
pub fn mse_curve<T: Scalar>(fits: &[Vec<LocalPolyFit<T>>], truth_fn: impl Fn(T) -> Vec<T>) -> Result<MseCurve<T>> {
    let first = fits.first().ok_or_else(|| Error::Shape("no Monte Carlo runs".into()))?;
    let grid: Vec<T> = first.iter().map(|f| f.u).collect();
    let q = first.first().map(|f| f.theta0().len()).unwrap_or(0);
    for run in fits {
        if run.len() != grid.len() || run.iter().zip(&grid).any(|(f, &u)| f.u != u || f.theta0().len() != q) {
            return Err(Error::Shape("runs do not share the same u grid".into()));
        }
    }
    let runs = T::from_usize_lossy(fits.len());
    let mut per_coef = vec![vec![T::zero(); grid.len()]; q];
    for (g, &u) in grid.iter().enumerate() {
        let truth = truth_fn(u);
        if truth.len() != q {
            return Err(Error::Shape(format!("truth has {} coefficients, fits {q}", truth.len())));
        }
        for run in fits {
            for (j, (&est, &t)) in run[g].theta0().iter().zip(&truth).enumerate() {
                per_coef[j][g] = per_coef[j][g] + (est - t) * (est - t);
            }
        }
    }
    for curve in per_coef.iter_mut() {
        curve.iter_mut().for_each(|v| *v = *v / runs);
    }
    let qn = T::from_usize_lossy(q.max(1));
    let aggregate = (0..grid.len()).map(|g| per_coef.iter().map(|c| c[g]).sum::<T>() / qn).collect();
    Ok(MseCurve { u: grid, per_coef, aggregate })
}

/// `Q_tau(X_i | F_{i-1}) = theta(i/n)' U_i` for `i = 1..=n`.
pub fn conditional_quantile_path<T: Scalar>(series: &TimeSeries<T>, theta_fn: impl Fn(f64) -> Vec<T>) -> Result<Vec<T>> {
    let n = series.len();
    (1..=n)
        .map(|i| {
            let theta = theta_fn(i as f64 / n as f64);
            if theta.is_empty() {
                return Err(Error::Shape("empty coefficient vector".into()));
            }
            let u = series.regressors(i, theta.len() - 1);
            Ok(u.iter().zip(&theta).fold(T::zero(), |s, (&a, &b)| s + a * b))
        })
        .collect()
}
