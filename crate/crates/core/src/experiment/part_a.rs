//! Time series experiments: the constant-versus-local scatter and the
//! Monte Carlo MSE curves of local polynomial estimators.

use rayon::prelude::*;

use crate::error::Result;
use crate::locstat::{
    conditional_quantile_path, dgp, global_fit, local_poly_fit, mse_curve, simulate_tvar, u_grid, LocalFitConfig,
    LocalPolyFit, MseCurve, TimeSeries,
};
use crate::metrics::{quantile_scatter_stats, ScatterStats};
use crate::rng::split_seed;

/// True and estimated conditional quantiles at the interior time points
/// `b <= i/n <= 1 - b` of one simulated path.
#[derive(Debug, Clone)]
pub struct ScatterOutcome {
    pub nonstationary: bool,
    pub tau: f64,
    /// 1-based time indices.
    pub index: Vec<usize>,
    pub truth: Vec<f64>,
    pub global: Vec<f64>,
    pub local: Vec<f64>,
    pub global_theta: Vec<f64>,
}

impl ScatterOutcome {
    pub fn global_stats(&self) -> Result<ScatterStats<f64>> {
        quantile_scatter_stats(&self.truth, &self.global)
    }

    pub fn local_stats(&self) -> Result<ScatterStats<f64>> {
        quantile_scatter_stats(&self.truth, &self.local)
    }
}

pub fn motivating_series(nonstationary: bool, n: usize, tau: f64, seed: u64) -> Result<TimeSeries<f64>> {
    let spec = if nonstationary { dgp::motivating_nonstationary(n, tau) } else { dgp::motivating_stationary(n, tau) };
    simulate_tvar(&spec, seed)
}

/// Global AR(1) fit and order-`k` local fits with bandwidth `b`.
pub fn motivating_case(nonstationary: bool, n: usize, tau: f64, b: f64, k: usize, seed: u64) -> Result<ScatterOutcome> {
    let series = motivating_series(nonstationary, n, tau, seed)?;
    let spec = series.spec.clone();
    let global_theta = global_fit(&series, 1, tau)?;
    let truth = conditional_quantile_path(&series, |u| spec.theta(u))?;
    let constant = conditional_quantile_path(&series, |_| global_theta.clone())?;
    let index: Vec<usize> =
        (1..=n).filter(|&i| (i as f64 / n as f64) >= b && (i as f64 / n as f64) <= 1.0 - b).collect();
    let local = index
        .par_iter()
        .map(|&i| {
            let fit = local_poly_fit(&series, &LocalFitConfig::new(i as f64 / n as f64, tau, k, b))?;
            let reg = series.regressors(i, 1);
            Ok(reg.iter().zip(fit.theta0()).map(|(a, t)| a * t).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScatterOutcome {
        nonstationary,
        tau,
        truth: index.iter().map(|&i| truth[i - 1]).collect(),
        global: index.iter().map(|&i| constant[i - 1]).collect(),
        index,
        local,
        global_theta,
    })
}

/// Fits of every order in `ks` on a common grid, for each run.
#[derive(Debug, Clone)]
pub struct McOutcome {
    pub ks: Vec<usize>,
    pub tau: f64,
    pub grid: Vec<f64>,
    /// `fits[k_index][run][g]`.
    pub fits: Vec<Vec<Vec<LocalPolyFit<f64>>>>,
    pub curves: Vec<MseCurve<f64>>,
}

/// Series `r` is drawn with seed `split_seed(seed, "locstat-mc", r)`.
pub fn locstat_mc(n: usize, tau: f64, b: f64, ks: &[usize], grid_points: usize, runs: usize, seed: u64) -> Result<McOutcome> {
    let spec = dgp::ar3_sine(n).with_tau(tau);
    let grid = u_grid(grid_points);
    let per_run = (0..runs)
        .into_par_iter()
        .map(|r| {
            let series: TimeSeries<f64> = simulate_tvar(&spec, split_seed(seed, "locstat-mc", r as u64))?;
            ks.iter()
                .map(|&k| {
                    grid.iter().map(|&u| local_poly_fit(&series, &LocalFitConfig::new(u, tau, k, b))).collect()
                })
                .collect::<Result<Vec<Vec<_>>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fits: Vec<Vec<Vec<LocalPolyFit<f64>>>> = vec![Vec::with_capacity(runs); ks.len()];
    for run in per_run {
        for (slot, f) in fits.iter_mut().zip(run) {
            slot.push(f);
        }
    }
    let curves = fits.iter().map(|f| mse_curve(f, |u| spec.theta(u))).collect::<Result<_>>()?;
    Ok(McOutcome { ks: ks.to_vec(), tau, grid, fits, curves })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_scatter() {
        let o = motivating_case(true, 400, 0.5, 0.2, 0, 3).unwrap();
        assert_eq!(o.index.first(), Some(&80));
        assert_eq!(o.index.last(), Some(&320));
        assert_eq!(o.truth.len(), o.local.len());
        assert!(o.local_stats().unwrap().correlation > 0.5);
    }

    #[test]
    fn small_mc_shapes() {
        let o = locstat_mc(300, 0.5, 0.2, &[0, 1], 5, 3, 1).unwrap();
        assert_eq!(o.fits.len(), 2);
        assert_eq!(o.fits[1].len(), 3);
        assert_eq!(o.fits[1][0].len(), 5);
        assert_eq!(o.curves[0].per_coef.len(), 4);
        let again = locstat_mc(300, 0.5, 0.2, &[0, 1], 5, 3, 1).unwrap();
        assert_eq!(o.fits, again.fits);
    }
}
