//! Simulation design with spherical conditional contours, radius errors of
//! estimated contours and tubes, and scatter summaries for conditional
//! quantile paths.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qr;
use crate::rng;
use crate::scalar::Scalar;

/// `X ~ U([-1, 1]^m)`, `Y = (|X_1| + ... + |X_m|) e`, `e ~ N(0, I_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DGPSpec15 {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

impl DGPSpec15 {
    pub fn new(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Validation(format!("need m, n >= 1 (got {m}, {n})")));
        }
        Ok(Self { m, n, seed })
    }
}

/// `s(x) = sum_j |x_j|`.
pub fn scale<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |s, v| s + v.abs())
}

pub fn simulate_dgp15<T: Scalar>(spec: &DGPSpec15) -> Result<(Array2<T>, Array2<T>)> {
    let spec = DGPSpec15::new(spec.m, spec.n, spec.seed)?;
    let mut r = rng::seeded(spec.seed);
    let mut x = Array2::zeros((spec.n, spec.m));
    let mut y = Array2::zeros((spec.n, 2));
    for i in 0..spec.n {
        let mut s = 0.0;
        for k in 0..spec.m {
            let v: f64 = r.random_range(-1.0..1.0);
            x[[i, k]] = T::lit(v);
            s += v.abs();
        }
        for k in 0..2 {
            let e: f64 = StandardNormal.sample(&mut r);
            y[[i, k]] = T::lit(s * e);
        }
    }
    Ok((x, y))
}

/// Radius of the `tau` contour at `x`: `s(x) sqrt(-2 ln(1 - tau))`, since
/// `|e|^2` is chi-square with two degrees of freedom.
pub fn population_radius<T: Scalar>(tau: T, x: &[T]) -> Result<T> {
    qr::validate_tau(tau)?;
    Ok(scale(x) * (-T::lit(2.0) * (-tau).ln_1p()).sqrt())
}

/// Conditioning points `(t_k, 0.5, ..., 0.5)` with `t_k` equally spaced on
/// `[-0.9, 0.9]`.
pub fn tube_design(m: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let t = if count == 1 { 0.0 } else { -0.9 + 1.8 * k as f64 / (count - 1) as f64 };
            std::iter::once(t).chain(std::iter::repeat_n(0.5, m - 1)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourEval<T> {
    pub points: Vec<Vec<T>>,
    pub population_radius: T,
    pub level: T,
}

impl<T: Scalar> ContourEval<T> {
    pub fn new(points: Vec<Vec<T>>, population_radius: T, level: T) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("contour has no points".into()));
        }
        if !(population_radius > T::zero()) {
            return Err(Error::Domain(format!("population radius {population_radius} must be positive")));
        }
        Ok(Self { points, population_radius, level })
    }
}

/// `MSREC = (1/N_S) sum_j (|Y_j| - R)^2`.
pub fn msrec<T: Scalar>(eval: &ContourEval<T>) -> T {
    let r = eval.population_radius;
    let total: T = eval
        .points
        .iter()
        .map(|p| {
            let e = p.iter().fold(T::zero(), |s, &v| s + v * v).sqrt() - r;
            e * e
        })
        .sum();
    total / T::from_usize_lossy(eval.points.len())
}

/// `MSRET = (1/N_x) sum_k MSREC(x_k) / R(x_k)^2`.
pub fn msret<T: Scalar>(evals: &[ContourEval<T>]) -> Result<T> {
    if evals.is_empty() {
        return Err(Error::Validation("no contours to average".into()));
    }
    let mut total = T::zero();
    for e in evals {
        if !(e.population_radius > T::zero()) {
            return Err(Error::Domain("zero population radius".into()));
        }
        total = total + msrec(e) / (e.population_radius * e.population_radius);
    }
    Ok(total / T::from_usize_lossy(evals.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterStats<T> {
    pub rmse: T,
    /// Mean of `est - true`.
    pub bias: T,
    pub correlation: T,
}

pub fn quantile_scatter_stats<T: Scalar>(true_q: &[T], est_q: &[T]) -> Result<ScatterStats<T>> {
    if true_q.len() != est_q.len() {
        return Err(Error::Shape(format!("{} true values, {} estimates", true_q.len(), est_q.len())));
    }
    if true_q.is_empty() {
        return Err(Error::Shape("empty vectors".into()));
    }
    let n = T::from_usize_lossy(true_q.len());
    let mt = true_q.iter().copied().sum::<T>() / n;
    let me = est_q.iter().copied().sum::<T>() / n;
    let (mut se, mut bias, mut stt, mut see, mut ste) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (&t, &e) in true_q.iter().zip(est_q) {
        se = se + (e - t) * (e - t);
        bias = bias + (e - t);
        stt = stt + (t - mt) * (t - mt);
        see = see + (e - me) * (e - me);
        ste = ste + (t - mt) * (e - me);
    }
    let correlation = if stt > T::zero() && see > T::zero() {
        ste / (stt * see).sqrt()
    } else if true_q == est_q {
        T::one()
    } else {
        T::nan()
    };
    Ok(ScatterStats { rmse: (se / n).sqrt(), bias: bias / n, correlation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring(r: f64, k: usize) -> Vec<Vec<f64>> {
        (0..k).map(|s| {
            let a = s as f64;
            vec![r * a.cos(), r * a.sin()]
        }).collect()
    }

    #[test]
    fn radius_examples() {
        assert!((population_radius(0.2f64, &[0.7, 0.7]).unwrap() - 0.9353).abs() < 5e-5);
        let tau = 1.0 - (-0.5f64).exp();
        assert!((population_radius(tau, &[1.0]).unwrap() - 1.0).abs() < 1e-14);
        assert!(population_radius(1e-12, &[1.0]).unwrap() < 1e-5);
        assert!(population_radius(1.0, &[1.0]).is_err());
    }

    #[test]
    fn radius_matches_monte_carlo() {
        let mut r = rng::seeded(15);
        let mut norms: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut r);
                let b: f64 = StandardNormal.sample(&mut r);
                1.4 * (a * a + b * b).sqrt()
            })
            .collect();
        norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for tau in [0.2, 0.4, 0.6] {
            let emp = norms[(tau * norms.len() as f64) as usize];
            let exact = population_radius(tau, &[0.7, 0.7]).unwrap();
            assert!((emp / exact - 1.0).abs() < 0.01, "tau {tau}: {emp} vs {exact}");
        }
    }

    #[test]
    fn msrec_examples() {
        let on = ContourEval::new(ring(0.8, 7), 0.8, 0.4).unwrap();
        assert!(msrec(&on) < 1e-30);
        let mut pts = ring(2.0, 3);
        pts.push(vec![3.0, 0.0]);
        let e = ContourEval::new(pts, 2.0, 0.4).unwrap();
        assert!((msrec(&e) - 0.25).abs() < 1e-14);
        assert!(ContourEval::new(vec![], 1.0, 0.2).is_err());
        assert!(ContourEval::new(ring(1.0, 2), 0.0, 0.2).is_err());
    }

    #[test]
    fn msret_examples() {
        let zero = ContourEval::new(ring(1.5, 5), 1.5, 0.2).unwrap();
        assert!(msret(&[zero.clone(), zero]).unwrap() < 1e-30);
        // every point at the origin: MSREC = R^2
        let far = ContourEval::new(vec![vec![0.0f64, 0.0]; 4], 1.3, 0.2).unwrap();
        assert!((msret(&[far]).unwrap() - 1.0).abs() < 1e-14);
        assert!(msret::<f64>(&[]).is_err());
    }

    #[test]
    fn scatter_examples() {
        let t = [1.0f64, 2.0, 4.0];
        let s = quantile_scatter_stats(&t, &t).unwrap();
        assert_eq!((s.rmse, s.bias), (0.0, 0.0));
        assert!((s.correlation - 1.0).abs() < 1e-15);
        let shifted: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
        let s = quantile_scatter_stats(&t, &shifted).unwrap();
        assert!((s.rmse - 1.0).abs() < 1e-15 && (s.bias - 1.0).abs() < 1e-15);
        assert!(quantile_scatter_stats(&t, &[1.0]).is_err());
    }

    #[test]
    fn dgp_shapes_and_independence() {
        let (x, y) = simulate_dgp15::<f64>(&DGPSpec15::new(1, 100_000, 3).unwrap()).unwrap();
        assert_eq!((x.dim(), y.dim()), ((100_000, 1), (100_000, 2)));
        assert!(x.iter().all(|v| v.abs() <= 1.0));
        let n = 100_000.0;
        let (m1, m2) = (y.column(0).sum() / n, y.column(1).sum() / n);
        let cov = y.rows().into_iter().map(|r| (r[0] - m1) * (r[1] - m2)).sum::<f64>() / n;
        let v1 = y.column(0).iter().map(|a| (a - m1).powi(2)).sum::<f64>() / n;
        let v2 = y.column(1).iter().map(|a| (a - m2).powi(2)).sum::<f64>() / n;
        assert!((cov / (v1 * v2).sqrt()).abs() < 0.01);
        let (x2, _) = simulate_dgp15::<f64>(&DGPSpec15::new(1, 100_000, 3).unwrap()).unwrap();
        assert_eq!(x, x2);
        assert!(DGPSpec15::new(0, 5, 0).is_err());
    }

    #[test]
    fn tube_design_layout() {
        let d = tube_design(5, 20);
        assert_eq!(d.len(), 20);
        assert_eq!(d[0], vec![-0.9, 0.5, 0.5, 0.5, 0.5]);
        assert!((d[19][0] - 0.9f64).abs() < 1e-15);
        assert!((d[1][0] - d[0][0] - 1.8 / 19.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn msrec_scales_quadratically_and_msret_is_invariant(r in 0.1f64..3.0, c in 0.1f64..10.0, noise in proptest::collection::vec(-0.5f64..0.5, 1..12)) {
            let pts: Vec<Vec<f64>> = noise.iter().enumerate().map(|(s, e)| vec![(r + e) * (s as f64).cos(), (r + e) * (s as f64).sin()]).collect();
            let a = ContourEval::new(pts.clone(), r, 0.2).unwrap();
            let b = ContourEval::new(pts.iter().map(|p| vec![c * p[0], c * p[1]]).collect(), c * r, 0.2).unwrap();
            prop_assert!((msrec(&b) - c * c * msrec(&a)).abs() <= 1e-9 * (1.0 + msrec(&b)));
            prop_assert!((msret(&[b.clone()]).unwrap() - msret(&[a.clone()]).unwrap()).abs() <= 1e-9);
            let both = msret(&[a.clone(), b.clone()]).unwrap();
            let mean = 0.5 * (msret(&[a]).unwrap() + msret(&[b]).unwrap());
            prop_assert!((both - mean).abs() <= 1e-12);
        }

        #[test]
        fn radius_is_monotone_and_homogeneous(t1 in 0.01f64..0.98, dt in 0.001f64..0.01, x in proptest::collection::vec(-1.0f64..1.0, 1..5), c in 0.1f64..5.0) {
            prop_assume!(x.iter().any(|v| *v != 0.0));
            let r1 = population_radius(t1, &x).unwrap();
            prop_assert!(population_radius(t1 + dt, &x).unwrap() > r1);
            let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
            prop_assert!((population_radius(t1, &cx).unwrap() - c * r1).abs() < 1e-12 * (1.0 + c * r1));
        }
    }
}
