//! Local polynomial autoregression quantiles.

use ndarray::Array2;
use serde::Serialize;

use super::kernel::Kernel;
use super::simulate::TimeSeries;
use crate::error::{Error, Result};
use crate::qr::{self, fit_weighted_qr, RegressionProblem};
use crate::scalar::Scalar;

/// Where and how to localize one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalFitConfig<T> {
    /// Rescaled time in `(0, 1)`.
    pub u: T,
    pub tau: T,
    /// Polynomial order: 0 local constant, 1 local linear, 2 local quadratic.
    pub k: usize,
    pub bandwidth: T,
    pub kernel: Kernel,
}

impl<T: Scalar> LocalFitConfig<T> {
    pub fn new(u: T, tau: T, k: usize, bandwidth: T) -> Self {
        Self { u, tau, k, bandwidth, kernel: Kernel::default() }
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn at(mut self, u: T) -> Self {
        self.u = u;
        self
    }

    pub fn validate(&self) -> Result<()> {
        qr::validate_tau(self.tau)?;
        if !(self.u > T::zero() && self.u < T::one()) {
            return Err(Error::Domain(format!("rescaled time {} outside (0, 1)", self.u)));
        }
        if !(self.bandwidth > T::zero()) || !self.bandwidth.is_finite() {
            return Err(Error::Domain(format!("bandwidth {} must be positive", self.bandwidth)));
        }
        Ok(())
    }

    /// True when the window `[u - b, u + b]` leaves `[0, 1]`.
    pub fn is_boundary(&self) -> bool {
        self.u < self.bandwidth || self.u > T::one() - self.bandwidth
    }
}

/// Estimated coefficient stack at one `(u, tau)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalPolyFit<T> {
    /// `theta_stack[m]` estimates the `m`-th derivative of
    /// `theta(. | tau)` at `u`; `theta_stack[0]` is the plug-in
    /// conditional quantile coefficient vector.
    pub theta_stack: Vec<Vec<T>>,
    pub u: T,
    pub tau: T,
    pub k: usize,
    pub bandwidth: T,
    /// Observations with positive kernel weight.
    pub effective_n: usize,
    /// Window clipped by the ends of the sample.
    pub boundary: bool,
    pub objective: T,
}

impl<T: Scalar> LocalPolyFit<T> {
    pub fn theta0(&self) -> &[T] {
        &self.theta_stack[0]
    }
}

/// Fits the order-`k` local polynomial quantile autoregression of order
/// `spec.p` at `config.u`.
pub fn local_poly_fit<T: Scalar>(series: &TimeSeries<T>, config: &LocalFitConfig<T>) -> Result<LocalPolyFit<T>> {
    local_poly_fit_order(series, series.spec.p(), config)
}

/// As [`local_poly_fit`] with an explicit AR order `p`.
///
/// Observation `i` (1-based) sits at time `i/n`, has regressors
/// `U_i = (1, X_{i-1}, ..., X_{i-p})` and weight `K((i/n - u) / b)`.
/// Block `m` of the design is `((i/n - u)/b)^m / m! * U_i`; its
/// coefficients are divided by `b^m` afterwards, which is the same
/// optimization problem with better conditioned columns.
pub fn local_poly_fit_order<T: Scalar>(series: &TimeSeries<T>, p: usize, config: &LocalFitConfig<T>) -> Result<LocalPolyFit<T>> {
    config.validate()?;
    let n = series.len();
    if n < p + 1 {
        return Err(Error::Validation(format!("series of length {n} for AR order {p}")));
    }
    let k = config.k;
    let q = (k + 1) * (p + 1);
    let nf = T::from_usize_lossy(n);
    let b = config.bandwidth;

    let mut rows = Vec::new();
    let mut response = Vec::new();
    let mut weights = Vec::new();
    let mut factorial = vec![T::one(); k + 1];
    for m in 1..=k {
        factorial[m] = factorial[m - 1] * T::from_usize_lossy(m);
    }
    for i in 1..=n {
        let v = (T::from_usize_lossy(i) / nf - config.u) / b;
        let kw = config.kernel.eval(v);
        if kw <= T::zero() {
            continue;
        }
        let reg = series.regressors(i, p);
        let mut pow = T::one();
        for m in 0..=k {
            let c = pow / factorial[m];
            rows.extend(reg.iter().map(|&x| c * x));
            pow = pow * v;
        }
        response.push(series.values[i - 1]);
        weights.push(kw);
    }
    let effective_n = weights.len();
    if effective_n < q {
        return Err(Error::DegenerateWindow(format!(
            "{effective_n} observations in the window at u = {} for {q} coefficients",
            config.u
        )));
    }
    let design = Array2::from_shape_vec((effective_n, q), rows).expect("row-major design");
    let problem = RegressionProblem::with_weights(design, response, weights, config.tau)?;
    let fit = fit_weighted_qr(&problem)?;

    let mut scale = T::one();
    let theta_stack = (0..=k)
        .map(|m| {
            let block: Vec<T> = fit.theta[m * (p + 1)..(m + 1) * (p + 1)].iter().map(|&t| t / scale).collect();
            scale = scale * b;
            block
        })
        .collect();
    Ok(LocalPolyFit {
        theta_stack,
        u: config.u,
        tau: config.tau,
        k,
        bandwidth: b,
        effective_n,
        boundary: config.is_boundary(),
        objective: fit.objective,
    })
}

/// Global (constant coefficient) autoregression quantile on the full sample.
pub fn global_fit<T: Scalar>(series: &TimeSeries<T>, p: usize, tau: T) -> Result<Vec<T>> {
    let n = series.len();
    let rows: Vec<T> = (1..=n).flat_map(|i| series.regressors(i, p)).collect();
    let design = Array2::from_shape_vec((n, p + 1), rows).expect("row-major design");
    let problem = RegressionProblem::new(design, series.values.clone(), tau)?;
    Ok(fit_weighted_qr(&problem)?.theta)
}

/// `n` equidistant points `g / (n + 1)`, `g = 1..=n`, strictly inside `(0, 1)`.
pub fn u_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|g| g as f64 / (points + 1) as f64).collect()
}
