//! Data generating processes used by the experiments.

use std::f64::consts::PI;
use std::sync::Arc;

use super::simulate::{CoefFn, TvARSpec};

/// Stationary AR(1) with `phi_1 = 0.5`.
pub fn motivating_stationary(n: usize, tau: f64) -> TvARSpec {
    let mut s = TvARSpec::stationary(&[0.5], n).with_tau(tau);
    s.label = "ar1-stationary".into();
    s
}

/// AR(1) with `phi_1(u) = 0.1 u + 0.85 u^2.5`.
pub fn motivating_nonstationary(n: usize, tau: f64) -> TvARSpec {
    let phi: CoefFn = Arc::new(|u: f64| 0.1 * u + 0.85 * u.powf(2.5));
    TvARSpec::new("ar1-power", vec![phi], n).with_tau(tau)
}

/// `phi_2(u) = 0.2 + 0.2 sin(18 u) + 0.608 u - 0.032 (u + 1)^3`.
pub fn ar3_phi2(u: f64) -> f64 {
    0.2 + 0.2 * (18.0 * u).sin() + 0.608 * u - 0.032 * (u + 1.0).powi(3)
}

/// AR(3) with `phi_1 = phi_2 / 10`, `phi_3 = phi_2 / 3` and Gaussian
/// innovations; the median case has zero intercept.
pub fn ar3_sine(n: usize) -> TvARSpec {
    let phi1: CoefFn = Arc::new(|u| ar3_phi2(u) / 10.0);
    let phi2: CoefFn = Arc::new(ar3_phi2);
    let phi3: CoefFn = Arc::new(|u| ar3_phi2(u) / 3.0);
    TvARSpec::new("ar3-sine", vec![phi1, phi2, phi3], n)
}

/// AR(1) with `phi_1(u) = 0.3 + 0.2 sin(2 pi u)`.
pub fn smooth_ar1(n: usize) -> TvARSpec {
    let phi: CoefFn = Arc::new(|u: f64| 0.3 + 0.2 * (2.0 * PI * u).sin());
    TvARSpec::new("ar1-sine", vec![phi], n)
}

/// Derivatives of `theta(u)` for [`smooth_ar1`]: order `r` of
/// `(alpha, phi_1)` with zero intercept.
pub fn smooth_ar1_derivative(u: f64, r: u32) -> Vec<f64> {
    let w = 2.0 * PI;
    let phase = (r % 4) as f64 * PI / 2.0;
    let d = if r == 0 { 0.3 + 0.2 * (w * u).sin() } else { 0.2 * w.powi(r as i32) * (w * u + phase).sin() };
    vec![0.0, d]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_processes_are_stable() {
        for spec in [motivating_stationary(10, 0.5), motivating_nonstationary(10, 0.15), ar3_sine(10), smooth_ar1(10)] {
            spec.validate().unwrap();
            assert!(spec.stability_sup() < 1.0);
        }
        assert!((motivating_nonstationary(10, 0.5).phi(1.0)[0] - 0.95).abs() < 1e-12);
        assert!((ar3_phi2(0.0) - 0.168).abs() < 1e-12);
    }

    #[test]
    fn smooth_ar1_derivatives_by_finite_differences() {
        let h = 1e-4;
        for &u in &[0.2, 0.5, 0.7] {
            let f = |x: f64| smooth_ar1_derivative(x, 0)[1];
            let d1 = (f(u + h) - f(u - h)) / (2.0 * h);
            let d2 = (f(u + h) - 2.0 * f(u) + f(u - h)) / (h * h);
            assert!((d1 - smooth_ar1_derivative(u, 1)[1]).abs() < 1e-6);
            assert!((d2 - smooth_ar1_derivative(u, 2)[1]).abs() < 1e-3);
        }
    }
}
