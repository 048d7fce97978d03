//! Asymptotic bias and variance of the local polynomial estimator.

use ndarray::Array2;
use serde::Serialize;

use super::local_fit::LocalFitConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, Lu};
use crate::scalar::Scalar;

/// Centering and spread of `theta0_hat(u | tau)`:
///
/// * `bias = b^{k+1} theta^{(k+1)}(u) / (k+1)! * int v^{k+1} K(v) dv`
/// * `variance = Gamma(u)^{-1} tau (1 - tau) kappa_2 / (f_tau(0)^2 n b)`
#[derive(Debug, Clone, Serialize)]
pub struct Theorem2Asymptotics<T> {
    pub bias: Vec<T>,
    pub variance: Array2<T>,
    pub kappa2: T,
    pub kernel_moment: T,
}

pub fn theorem2_asymptotics<T: Scalar>(
    config: &LocalFitConfig<T>,
    gamma_u: &Array2<T>,
    f_tau_0: T,
    theta_deriv: &[T],
    n: usize,
) -> Result<Theorem2Asymptotics<T>> {
    config.validate()?;
    if !(f_tau_0 > T::zero()) {
        return Err(Error::Domain("innovation density at zero must be positive".into()));
    }
    let (r, c) = gamma_u.dim();
    if r != c || theta_deriv.len() != r {
        return Err(Error::Shape(format!(
            "gamma is {r}x{c}, derivative has length {}",
            theta_deriv.len()
        )));
    }
    if n == 0 {
        return Err(Error::Validation("sample size must be positive".into()));
    }
    let scale = gamma_u.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !linalg::is_symmetric(gamma_u, T::lit(1e-10) * (T::one() + scale)) {
        return Err(Error::Validation("gamma(u) must be symmetric".into()));
    }
    let order = config.k + 1;
    let kernel_moment = T::lit(config.kernel.moment(order as u32));
    let kappa2 = T::lit(config.kernel.kappa2());
    let fact: f64 = (1..=order).map(|m| m as f64).product();
    let b = config.bandwidth;
    let lead = b.powi(order as i32) / T::lit(fact) * kernel_moment;
    let bias = theta_deriv.iter().map(|&d| d * lead).collect();

    let inv = Lu::factor(gamma_u)?.inverse();
    let tau = config.tau;
    let factor = tau * (T::one() - tau) * kappa2 / (f_tau_0 * f_tau_0 * T::from_usize_lossy(n) * b);
    // symmetrize away rounding noise from the inverse
    let variance = Array2::from_shape_fn((r, r), |(i, j)| T::lit(0.5) * (inv[[i, j]] + inv[[j, i]]) * factor);
    Ok(Theorem2Asymptotics { bias, variance, kappa2, kernel_moment })
}
