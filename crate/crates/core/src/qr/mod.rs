//! Check loss, weighted linear quantile regression and the stationary
//! asymptotic variance of autoregression quantiles.

mod simplex;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{self, Lu};
use crate::scalar::Scalar;

pub use simplex::fit_weighted_qr;

/// Probability level of a check loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckLossParams<T> {
    tau: T,
}

impl<T: Scalar> CheckLossParams<T> {
    pub fn new(tau: T) -> Result<Self> {
        validate_tau(tau)?;
        Ok(Self { tau })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn loss(&self, u: T) -> T {
        rho(u, self.tau)
    }
}

pub(crate) fn validate_tau<T: Scalar>(tau: T) -> Result<()> {
    if tau > T::zero() && tau < T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability level {tau} outside (0, 1)")))
    }
}

/// `rho_tau(u) = u (tau - 1{u < 0})` without validating `tau`.
#[inline]
pub(crate) fn rho<T: Scalar>(u: T, tau: T) -> T {
    if u < T::zero() {
        u * (tau - T::one())
    } else {
        u * tau
    }
}

/// The check function `rho_tau(u) = u (tau - 1{u < 0})`.
pub fn check_loss<T: Scalar>(u: T, tau: T) -> Result<T> {
    validate_tau(tau)?;
    Ok(rho(u, tau))
}

/// A weighted linear quantile regression problem
/// `min_theta sum_i w_i rho_tau(y_i - x_i' theta)`.
#[derive(Debug, Clone)]
pub struct RegressionProblem<T> {
    design: Array2<T>,
    response: Vec<T>,
    weights: Vec<T>,
    tau: T,
}

impl<T: Scalar> RegressionProblem<T> {
    /// Unit-weight problem.
    pub fn new(design: Array2<T>, response: Vec<T>, tau: T) -> Result<Self> {
        let n = response.len();
        Self::with_weights(design, response, vec![T::one(); n], tau)
    }

    pub fn with_weights(design: Array2<T>, response: Vec<T>, weights: Vec<T>, tau: T) -> Result<Self> {
        validate_tau(tau)?;
        let (n, q) = design.dim();
        if q == 0 {
            return Err(Error::Validation("design has no columns".into()));
        }
        if response.len() != n || weights.len() != n {
            return Err(Error::Shape(format!(
                "design has {n} rows, response {} and weights {}",
                response.len(),
                weights.len()
            )));
        }
        if n < q {
            return Err(Error::Validation(format!("{n} observations for {q} coefficients")));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::Validation("weights must be finite and nonnegative".into()));
        }
        let positive = weights.iter().filter(|w| **w > T::zero()).count();
        if positive < q {
            return Err(Error::Validation(format!(
                "{positive} positive weights for {q} coefficients"
            )));
        }
        if design.iter().chain(response.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite design or response value".into()));
        }
        Ok(Self { design, response, weights, tau })
    }

    pub fn design(&self) -> &Array2<T> {
        &self.design
    }

    pub fn response(&self) -> &[T] {
        &self.response
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    pub fn n_coef(&self) -> usize {
        self.design.ncols()
    }

    pub fn residual(&self, i: usize, theta: &[T]) -> T {
        let row = self.design.row(i);
        self.response[i] - row.iter().zip(theta).fold(T::zero(), |s, (&x, &t)| s + x * t)
    }

    /// Weighted check loss at `theta`.
    pub fn objective(&self, theta: &[T]) -> T {
        (0..self.n_obs())
            .map(|i| self.weights[i] * rho(self.residual(i, theta), self.tau))
            .sum()
    }

    /// Directional derivative of the objective at `theta` along `dir`.
    ///
    /// Residuals within `zero_tol` (relative to the row scale) count as
    /// interpolated, so the kink contributes `w rho(-x'dir)`.
    pub fn directional_derivative(&self, theta: &[T], dir: &[T]) -> T {
        let tau = self.tau;
        let mut total = T::zero();
        for i in 0..self.n_obs() {
            let w = self.weights[i];
            if w == T::zero() {
                continue;
            }
            let row = self.design.row(i);
            let slope = row.iter().zip(dir).fold(T::zero(), |s, (&x, &d)| s + x * d);
            let r = self.residual(i, theta);
            if r.abs() <= self.zero_tol(i, theta) {
                total = total + w * rho(-slope, tau);
            } else if r > T::zero() {
                total = total - w * tau * slope;
            } else {
                total = total + w * (T::one() - tau) * slope;
            }
        }
        total
    }

    pub(crate) fn zero_tol(&self, i: usize, theta: &[T]) -> T {
        let row = self.design.row(i);
        let mag = row
            .iter()
            .zip(theta)
            .fold(self.response[i].abs(), |s, (&x, &t)| s + (x * t).abs());
        T::lit(1e-10) * (T::one() + mag)
    }

    /// Smallest directional derivative over the coordinate directions
    /// `+e_j` and `-e_j`; nonnegative (up to rounding) at a minimizer.
    pub fn coordinate_certificate(&self, theta: &[T]) -> T {
        let q = self.n_coef();
        let mut worst = T::infinity();
        let mut dir = vec![T::zero(); q];
        for j in 0..q {
            for s in [T::one(), -T::one()] {
                dir.iter_mut().for_each(|d| *d = T::zero());
                dir[j] = s;
                worst = worst.min(self.directional_derivative(theta, &dir));
            }
        }
        worst
    }
}

/// Solution of a [`RegressionProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFit<T> {
    pub theta: Vec<T>,
    /// Weighted check loss at `theta`.
    pub objective: T,
    /// Observations with zero residual (original indices, ascending).
    pub active_set: Vec<usize>,
    /// Simplex pivots taken.
    pub iterations: usize,
}

impl<T: Scalar> QuantileFit<T> {
    /// Checks the coordinate subgradient condition at the tolerance
    /// `1e-8 * max(1, |objective|)`.
    pub fn is_certified(&self, problem: &RegressionProblem<T>) -> bool {
        let scale = T::one().max(self.objective.abs());
        problem.coordinate_certificate(&self.theta) >= -T::lit(1e-8) * scale
    }
}

/// Inputs of the stationary asymptotic variance `Gamma^{-1} tau (1 - tau) / f^2`.
#[derive(Debug, Clone)]
pub struct StationaryAsyVar<T> {
    pub gamma: Array2<T>,
    pub tau: T,
    /// Innovation density at its `tau`-quantile.
    pub density_at_quantile: T,
}

impl<T: Scalar> StationaryAsyVar<T> {
    pub fn new(gamma: Array2<T>, tau: T, density_at_quantile: T) -> Result<Self> {
        validate_tau(tau)?;
        if !(density_at_quantile > T::zero()) {
            return Err(Error::Domain("density at the quantile must be positive".into()));
        }
        let scale = gamma.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !linalg::is_symmetric(&gamma, T::lit(1e-10) * (T::one() + scale)) {
            return Err(Error::Validation("gamma must be square and symmetric".into()));
        }
        Ok(Self { gamma, tau, density_at_quantile })
    }
}

/// `v(tau) = Gamma^{-1} tau (1 - tau) / f(F^{-1}(tau))^2`.
pub fn stationary_asy_var<T: Scalar>(spec: &StationaryAsyVar<T>) -> Result<Array2<T>> {
    let inv = Lu::factor(&spec.gamma)?.inverse();
    let f = spec.density_at_quantile;
    let factor = spec.tau * (T::one() - spec.tau) / (f * f);
    Ok(inv.mapv(|v| v * factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn check_loss_examples() {
        assert_eq!(check_loss(2.0, 0.5).unwrap(), 1.0);
        assert!((check_loss(-1.0f64, 0.3).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(check_loss(0.0, 0.9).unwrap(), 0.0);
        assert!(matches!(check_loss(1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(check_loss(1.0, 0.0), Err(Error::Domain(_))));
        assert!(CheckLossParams::new(-0.2f32).is_err());
    }

    #[test]
    fn asy_var_examples() {
        let eye = Array2::<f64>::eye(2);
        let v = stationary_asy_var(&StationaryAsyVar::new(eye.clone(), 0.5, 1.0).unwrap()).unwrap();
        assert!((v[[0, 0]] - 0.25).abs() < 1e-15 && v[[0, 1]] == 0.0);

        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let v = stationary_asy_var(&StationaryAsyVar::new(eye, 0.5, phi0).unwrap()).unwrap();
        assert!((v[[0, 0]] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((v[[1, 1]] - 1.5708).abs() < 1e-4);

        let g: Array2<f64> = array![[1.0, 0.0], [0.0, 4.0]];
        let v = stationary_asy_var(&StationaryAsyVar::new(g, 0.25, 1.0).unwrap()).unwrap();
        assert!((v[[0, 0]] - 0.1875).abs() < 1e-15);
        assert!((v[[1, 1]] - 0.046875).abs() < 1e-15);
    }

    #[test]
    fn asy_var_rejects_singular_gamma() {
        let g = array![[1.0, 1.0], [1.0, 1.0]];
        let spec = StationaryAsyVar::new(g, 0.5, 1.0).unwrap();
        assert!(matches!(stationary_asy_var(&spec), Err(Error::Singular(_))));
        assert!(StationaryAsyVar::new(Array2::<f64>::eye(2), 0.5, 0.0).is_err());
    }

    #[test]
    fn problem_validation() {
        let x = array![[1.0], [1.0]];
        assert!(RegressionProblem::new(x.clone(), vec![1.0], 0.5).is_err());
        assert!(RegressionProblem::with_weights(x.clone(), vec![1.0, 2.0], vec![0.0, 0.0], 0.5).is_err());
        assert!(RegressionProblem::with_weights(x.clone(), vec![1.0, 2.0], vec![-1.0, 2.0], 0.5).is_err());
        assert!(RegressionProblem::new(x, vec![1.0, 2.0], 1.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn check_loss_is_convex(u1 in -50.0f64..50.0, u2 in -50.0f64..50.0, lam in 0.0f64..=1.0, tau in 0.01f64..0.99) {
            let mid = check_loss(lam * u1 + (1.0 - lam) * u2, tau).unwrap();
            let chord = lam * check_loss(u1, tau).unwrap() + (1.0 - lam) * check_loss(u2, tau).unwrap();
            prop_assert!(mid <= chord + 1e-12);
        }

        #[test]
        fn check_loss_zero_only_at_origin(u in -10.0f64..10.0, tau in 0.01f64..0.99) {
            let l = check_loss(u, tau).unwrap();
            prop_assert!(l >= 0.0);
            prop_assert_eq!(l == 0.0, u == 0.0);
        }
    }
}
