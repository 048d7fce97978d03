//! Conditional weights `w_j(x)` on a training sample: Gaussian kernel,
//! k nearest neighbours and a multivariate random forest.

mod forest;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use forest::{fit_forest, forest_weights, ForestModel, ForestParams, Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMethod {
    Kernel,
    Knn,
    Forest,
}

impl WeightMethod {
    pub fn name(self) -> &'static str {
        match self {
            WeightMethod::Kernel => "kernel",
            WeightMethod::Knn => "knn",
            WeightMethod::Forest => "forest",
        }
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector<T> {
    pub weights: Vec<T>,
    pub method: WeightMethod,
    pub conditioning_point: Vec<T>,
}

impl<T: Scalar> WeightVector<T> {
    pub fn new(weights: Vec<T>, method: WeightMethod, conditioning_point: Vec<T>) -> Result<Self> {
        let w = Self { weights, method, conditioning_point };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::Validation("empty weight vector".into()));
        }
        if self.weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::Validation("weights must be finite and nonnegative".into()));
        }
        let total: T = self.weights.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) {
            return Err(Error::Validation(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices with positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.weights[j] > T::zero()).collect()
    }
}

fn check_point<T: Scalar>(x: &[T], sample: &Array2<T>) -> Result<()> {
    if sample.nrows() == 0 {
        return Err(Error::Validation("empty training sample".into()));
    }
    if x.len() != sample.ncols() {
        return Err(Error::Shape(format!("query has dimension {}, sample {}", x.len(), sample.ncols())));
    }
    Ok(())
}

fn sq_dist<T: Scalar>(x: &[T], row: ArrayView1<T>) -> T {
    row.iter().zip(x).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b))
}

/// `w_i = K((X_i - x)/b) / sum_j K((X_j - x)/b)` with `K` the standard
/// Gaussian density on `R^m` (its constant cancels).
pub fn kernel_weights<T: Scalar>(x: &[T], sample: &Array2<T>, bandwidth: T) -> Result<WeightVector<T>> {
    check_point(x, sample)?;
    if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
        return Err(Error::Domain(format!("bandwidth {bandwidth} must be positive")));
    }
    let h2 = T::lit(2.0) * bandwidth * bandwidth;
    let raw: Vec<T> = sample.rows().into_iter().map(|r| (-sq_dist(x, r) / h2).exp()).collect();
    let total: T = raw.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::DegenerateNeighborhood(format!(
            "every Gaussian kernel value underflows at bandwidth {bandwidth}"
        )));
    }
    let weights = raw.into_iter().map(|v| v / total).collect();
    Ok(WeightVector { weights, method: WeightMethod::Kernel, conditioning_point: x.to_vec() })
}

/// Weight `1/k` on the `k` nearest samples; equal distances resolve to the
/// smaller index.
pub fn knn_weights<T: Scalar>(x: &[T], sample: &Array2<T>, k: usize) -> Result<WeightVector<T>> {
    check_point(x, sample)?;
    let n = sample.nrows();
    if k == 0 || k > n {
        return Err(Error::Validation(format!("k = {k} outside 1..={n}")));
    }
    let dist: Vec<T> = sample.rows().into_iter().map(|r| sq_dist(x, r)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap().then(a.cmp(&b)));
    let mut weights = vec![T::zero(); n];
    let share = T::one() / T::from_usize_lossy(k);
    for &i in &order[..k] {
        weights[i] = share;
    }
    Ok(WeightVector { weights, method: WeightMethod::Knn, conditioning_point: x.to_vec() })
}

/// How to weight the training sample at a query point.
#[derive(Debug, Clone, Copy)]
pub enum WeightSource<'a, T> {
    Kernel { bandwidth: T },
    Knn { k: usize },
    Forest(&'a ForestModel<T>),
}

impl<T: Scalar> WeightSource<'_, T> {
    pub fn method(&self) -> WeightMethod {
        match self {
            WeightSource::Kernel { .. } => WeightMethod::Kernel,
            WeightSource::Knn { .. } => WeightMethod::Knn,
            WeightSource::Forest(_) => WeightMethod::Forest,
        }
    }

    pub fn weights_at(&self, x: &[T], sample: &Array2<T>) -> Result<WeightVector<T>> {
        match *self {
            WeightSource::Kernel { bandwidth } => kernel_weights(x, sample, bandwidth),
            WeightSource::Knn { k } => knn_weights(x, sample, k),
            WeightSource::Forest(model) => {
                if model.n_train != sample.nrows() {
                    return Err(Error::Shape(format!(
                        "forest trained on {} rows, sample has {}",
                        model.n_train,
                        sample.nrows()
                    )));
                }
                forest_weights(model, x)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn kernel_examples() {
        let one = array![[0.3, 0.1]];
        assert_eq!(kernel_weights(&[0.0, 0.0], &one, 0.1).unwrap().weights, vec![1.0]);
        let two = array![[1.0], [-1.0]];
        assert_eq!(kernel_weights(&[0.0], &two, 0.5).unwrap().weights, vec![0.5, 0.5]);
        let far = array![[100.0], [-100.0]];
        assert!(matches!(kernel_weights(&[0.0], &far, 0.1), Err(Error::DegenerateNeighborhood(_))));
        assert!(kernel_weights(&[0.0], &two, 0.0).is_err());
        assert!(kernel_weights(&[0.0, 1.0], &two, 1.0).is_err());
    }

    #[test]
    fn knn_examples() {
        let s: Array2<f64> = array![[0.0], [1.0], [-2.0], [3.0], [4.0], [-1.0]];
        let all = knn_weights(&[0.0], &s, 6).unwrap();
        assert!(all.weights.iter().all(|&w| (w - 1.0 / 6.0).abs() < 1e-15));
        let one = knn_weights(&[2.9], &s, 1).unwrap();
        assert_eq!(one.support(), vec![3]);
        // rows 1 and 5 tie at distance 1 for the second slot
        let two = knn_weights(&[0.0], &s, 2).unwrap();
        assert_eq!(two.support(), vec![0, 1]);
        assert!(knn_weights(&[0.0], &s, 0).is_err());
        assert!(knn_weights(&[0.0], &s, 7).is_err());
    }

    #[test]
    fn knn_tie_matches_exhaustive_sort() {
        // samples 2 and 5 (1-based) are equidistant at the k-th rank
        let s = array![[0.0, 0.0], [2.0, 0.0], [0.1, 0.0], [5.0, 5.0], [0.0, 2.0], [3.0, 3.0]];
        let w = knn_weights(&[0.0, 0.0], &s, 3).unwrap();
        assert_eq!(w.support(), vec![0, 1, 2]);
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![0.5, 0.5], WeightMethod::Kernel, vec![]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6], WeightMethod::Kernel, vec![]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5], WeightMethod::Kernel, vec![]).is_err());
    }

    fn sample_strategy() -> impl Strategy<Value = (Array2<f64>, Vec<f64>)> {
        (1usize..30, 1usize..4).prop_flat_map(|(n, m)| {
            (
                proptest::collection::vec(-1.0f64..1.0, n * m).prop_map(move |v| Array2::from_shape_vec((n, m), v).unwrap()),
                proptest::collection::vec(-1.0f64..1.0, m),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn kernel_and_knn_are_on_the_simplex((s, x) in sample_strategy(), b in 0.3f64..2.0, kf in 0.0f64..1.0) {
            let kw = kernel_weights(&x, &s, b).unwrap();
            prop_assert!(kw.validate().is_ok());
            let k = 1 + (kf * (s.nrows() - 1) as f64) as usize;
            let nw = knn_weights(&x, &s, k).unwrap();
            prop_assert!(nw.validate().is_ok());
            prop_assert_eq!(nw.support().len(), k);
        }

        #[test]
        fn knn_is_local((s, x) in sample_strategy(), kf in 0.0f64..1.0) {
            let k = 1 + (kf * (s.nrows() - 1) as f64) as usize;
            let w = knn_weights(&x, &s, k).unwrap();
            let mut d: Vec<f64> = s.rows().into_iter().map(|r| sq_dist(&x, r)).collect();
            let dist = d.clone();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let kth = d[k - 1];
            for j in 0..s.nrows() {
                if dist[j] > kth {
                    prop_assert_eq!(w.weights[j], 0.0);
                }
            }
        }

        #[test]
        fn shrinking_bandwidth_concentrates((s, x) in sample_strategy(), b in 0.5f64..2.0, shrink in 0.3f64..1.0) {
            let dist: Vec<f64> = s.rows().into_iter().map(|r| sq_dist(&x, r)).collect();
            let nearest = (0..s.nrows()).min_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap()).unwrap();
            let wide = kernel_weights(&x, &s, b).unwrap();
            let narrow = kernel_weights(&x, &s, b * shrink).unwrap();
            prop_assert!(narrow.weights[nearest] >= wide.weights[nearest] - 1e-12);
        }
    }
}
