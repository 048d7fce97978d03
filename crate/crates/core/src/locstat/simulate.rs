//! Time-varying coefficient AR(p) processes.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::scalar::Scalar;

pub type CoefFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type InterceptFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Number of pre-sample values kept with a simulated path.
const PRESAMPLE: usize = 16;

/// Number of grid points used to check coefficient stability.
const STABILITY_GRID: usize = 1000;

/// Innovation law `F` of the raw draws `e_i`.
#[derive(Clone)]
pub enum Innovation {
    StandardNormal,
    /// Inverse-transform sampling from a quantile function; `density`
    /// is only needed for asymptotic variances.
    Custom {
        label: String,
        quantile: CoefFn,
        density: Option<CoefFn>,
    },
}

impl Innovation {
    /// `F^{-1}(p)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Innovation::StandardNormal => standard_normal().inverse_cdf(p),
            Innovation::Custom { quantile, .. } => quantile(p),
        }
    }

    /// `f(F^{-1}(tau))`, when a density is known.
    pub fn density_at_quantile(&self, tau: f64) -> Option<f64> {
        match self {
            Innovation::StandardNormal => {
                let n = standard_normal();
                Some(n.pdf(n.inverse_cdf(tau)))
            }
            Innovation::Custom { density, quantile, .. } => density.as_ref().map(|f| f(quantile(tau))),
        }
    }

    fn draw(&self, rng: &mut Rng) -> f64 {
        match self {
            Innovation::StandardNormal => StandardNormal.sample(rng),
            Innovation::Custom { quantile, .. } => {
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                quantile(u)
            }
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Innovation::StandardNormal => "standard-normal",
            Innovation::Custom { label, .. } => label,
        }
    }
}

impl fmt::Debug for Innovation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid normal")
}

/// A time-varying AR(p) model
/// `X_i = alpha(i/n | tau) + sum_j phi_j(i/n) X_{i-j} + eps_i(tau)`,
/// where `eps_i(tau) = e_i - F^{-1}(tau)` has zero `tau`-quantile.
#[derive(Clone)]
pub struct TvARSpec {
    pub label: String,
    pub phi_fns: Vec<CoefFn>,
    /// `alpha(u | tau)`; defaults to `F^{-1}(tau)` (zero location intercept).
    pub alpha_fn: Option<InterceptFn>,
    pub innovation: Innovation,
    pub tau: f64,
    pub n: usize,
    pub burn_in: usize,
}

impl fmt::Debug for TvARSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TvARSpec")
            .field("label", &self.label)
            .field("p", &self.p())
            .field("innovation", &self.innovation)
            .field("tau", &self.tau)
            .field("n", &self.n)
            .field("burn_in", &self.burn_in)
            .finish()
    }
}

impl TvARSpec {
    pub fn new(label: impl Into<String>, phi_fns: Vec<CoefFn>, n: usize) -> Self {
        Self {
            label: label.into(),
            phi_fns,
            alpha_fn: None,
            innovation: Innovation::StandardNormal,
            tau: 0.5,
            n,
            burn_in: 0,
        }
    }

    /// Constant-coefficient AR(p).
    pub fn stationary(phi: &[f64], n: usize) -> Self {
        let fns = phi.iter().map(|&c| Arc::new(move |_u: f64| c) as CoefFn).collect();
        Self::new("stationary", fns, n)
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_innovation(mut self, innovation: Innovation) -> Self {
        self.innovation = innovation;
        self
    }

    pub fn with_alpha(mut self, alpha: InterceptFn) -> Self {
        self.alpha_fn = Some(alpha);
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn p(&self) -> usize {
        self.phi_fns.len()
    }

    pub fn alpha(&self, u: f64) -> f64 {
        match &self.alpha_fn {
            Some(f) => f(u, self.tau),
            None => self.innovation.quantile(self.tau),
        }
    }

    pub fn phi(&self, u: f64) -> Vec<f64> {
        self.phi_fns.iter().map(|f| f(u)).collect()
    }

    /// `theta(u | tau) = (alpha(u | tau), phi_1(u), ..., phi_p(u))`.
    pub fn theta(&self, u: f64) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.p() + 1);
        t.push(self.alpha(u));
        t.extend(self.phi(u));
        t
    }

    /// `sup_u sum_j |phi_j(u)|` over a 1000-point grid on `[0, 1]`.
    pub fn stability_sup(&self) -> f64 {
        (0..STABILITY_GRID)
            .map(|g| g as f64 / (STABILITY_GRID - 1) as f64)
            .map(|u| self.phi_fns.iter().map(|f| f(u).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p() == 0 {
            return Err(Error::Validation("AR order must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Validation("sample size must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Domain(format!("tau = {} outside (0, 1)", self.tau)));
        }
        let sup = self.stability_sup();
        if !(sup < 1.0) {
            return Err(Error::Validation(format!(
                "unstable coefficients: sup_u sum_j |phi_j(u)| = {sup:.6} >= 1"
            )));
        }
        Ok(())
    }
}

/// A simulated path `X_1, ..., X_n` with the values preceding `X_1`.
#[derive(Debug, Clone)]
pub struct TimeSeries<T> {
    pub values: Vec<T>,
    /// `presample[k]` is `X_{-k}` (so `presample[0] = X_0`).
    pub presample: Vec<T>,
    pub spec: Arc<TvARSpec>,
    pub seed: u64,
}

impl<T: Scalar> TimeSeries<T> {
    /// Wraps observed data; values before `X_1` are taken as zero.
    pub fn from_values(values: Vec<T>, spec: TvARSpec) -> Self {
        let spec = spec.with_n(values.len());
        Self { values, presample: vec![T::zero(); PRESAMPLE], spec: Arc::new(spec), seed: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `X_i` for any integer `i <= n` (pre-sample values beyond the
    /// stored window are zero, the initial condition).
    pub fn x(&self, i: i64) -> T {
        if i >= 1 {
            self.values[(i - 1) as usize]
        } else {
            self.presample.get((-i) as usize).copied().unwrap_or_else(T::zero)
        }
    }

    /// `U_i = (1, X_{i-1}, ..., X_{i-p})` for `i` in `1..=n`.
    pub fn regressors(&self, i: usize, p: usize) -> Vec<T> {
        let mut u = Vec::with_capacity(p + 1);
        u.push(T::one());
        u.extend((1..=p).map(|j| self.x(i as i64 - j as i64)));
        u
    }
}

/// Simulates `spec` from `X_{1-p} = ... = X_0 = 0`, discarding
/// `burn_in` steps (run with the `u = 0` coefficients) before recording.
pub fn simulate_tvar<T: Scalar>(spec: &TvARSpec, seed: u64) -> Result<TimeSeries<T>> {
    spec.validate()?;
    let p = spec.p();
    let n = spec.n;
    let shift = spec.innovation.quantile(spec.tau);
    let mut rng = rng::seeded(seed);
    let total = spec.burn_in + n;
    let mut path = vec![0.0f64; PRESAMPLE.max(p) + total];
    let offset = PRESAMPLE.max(p);
    for step in 0..total {
        let i = step as i64 - spec.burn_in as i64 + 1;
        let u = if i >= 1 { i as f64 / n as f64 } else { 0.0 };
        let at = offset + step;
        let mut x = spec.alpha(u);
        for (j, f) in spec.phi_fns.iter().enumerate() {
            x += f(u) * path[at - 1 - j];
        }
        x += spec.innovation.draw(&mut rng) - shift;
        path[at] = x;
    }
    let first = offset + spec.burn_in;
    let values = path[first..].iter().map(|&v| T::lit(v)).collect();
    let presample = (1..=PRESAMPLE).map(|k| T::lit(path[first - k])).collect();
    Ok(TimeSeries { values, presample, spec: Arc::new(spec.clone()), seed })
}

/// `Gamma(u) = E[U_i(u) U_i(u)']` of the stationary process with the
/// coefficients frozen at `u`, by averaging over `steps` simulated steps
/// (after 1000 discarded ones).
pub fn frozen_gamma(spec: &TvARSpec, u: f64, steps: usize, seed: u64) -> Result<Array2<f64>> {
    spec.validate()?;
    let p = spec.p();
    let phi = spec.phi(u);
    let alpha = spec.alpha(u);
    let shift = spec.innovation.quantile(spec.tau);
    let mut rng = rng::seeded(seed);
    let mut lags = vec![0.0f64; p];
    let mut gamma = Array2::<f64>::zeros((p + 1, p + 1));
    let warm = 1000;
    let mut reg = vec![0.0; p + 1];
    for step in 0..warm + steps {
        reg[0] = 1.0;
        reg[1..].copy_from_slice(&lags);
        if step >= warm {
            for a in 0..=p {
                for b in 0..=p {
                    gamma[[a, b]] += reg[a] * reg[b];
                }
            }
        }
        let x = alpha + phi.iter().zip(&lags).map(|(f, l)| f * l).sum::<f64>()
            + spec.innovation.draw(&mut rng)
            - shift;
        lags.rotate_right(1);
        if p > 0 {
            lags[0] = x;
        }
    }
    Ok(gamma.mapv(|v| v / steps as f64))
}
