//! Wolfe's minimum-norm point in the convex hull of a finite point set.

use ndarray::Array2;

use crate::linalg::{dot, Lu};
use crate::scalar::Scalar;

const MAX_ITER: usize = 100;

/// Affine combination of `pts[s]` closest to the origin.
fn affine_minimizer<T: Scalar>(pts: &[&[T]], set: &[usize]) -> Option<Vec<T>> {
    let k = set.len();
    let mut a = Array2::zeros((k + 1, k + 1));
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            a[[r, c]] = dot(pts[i], pts[j]);
        }
        a[[r, k]] = T::one();
        a[[k, r]] = T::one();
    }
    let mut rhs = vec![T::zero(); k + 1];
    rhs[k] = T::one();
    let sol = Lu::factor(&a).ok()?.solve(&rhs);
    Some(sol[..k].to_vec())
}

fn combine<T: Scalar>(pts: &[&[T]], set: &[usize], lambda: &[T]) -> Vec<T> {
    let d = pts[set[0]].len();
    let mut x = vec![T::zero(); d];
    for (&i, &l) in set.iter().zip(lambda) {
        for (xv, &p) in x.iter_mut().zip(pts[i]) {
            *xv = *xv + l * p;
        }
    }
    x
}

/// Point of smallest Euclidean norm in `conv(points)`.
///
/// Stops when `|x|^2 - min_j x'p_j <= 1e-12 max_j |p_j|^2` or after 100
/// major cycles.
pub fn min_norm_point<T: Scalar>(points: &[&[T]]) -> Vec<T> {
    assert!(!points.is_empty(), "min-norm point of an empty set");
    let scale = points.iter().map(|p| dot(p, p)).fold(T::zero(), T::max);
    let tol = T::lit(1e-12) * scale.max(T::min_positive_value());
    let start = (0..points.len())
        .min_by(|&a, &b| dot(points[a], points[a]).partial_cmp(&dot(points[b], points[b])).unwrap())
        .unwrap();
    let mut set = vec![start];
    let mut lambda = vec![T::one()];
    let mut x = points[start].to_vec();

    for _ in 0..MAX_ITER {
        let xx = dot(&x, &x);
        let (j, xp) = (0..points.len())
            .map(|j| (j, dot(&x, points[j])))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if xx - xp <= tol || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(T::zero());
        loop {
            let Some(alpha) = affine_minimizer(points, &set) else {
                return x;
            };
            if alpha.iter().all(|&a| a > T::zero()) {
                lambda = alpha;
                x = combine(points, &set, &lambda);
                break;
            }
            let mut theta = T::one();
            for (&l, &a) in lambda.iter().zip(&alpha) {
                if a <= T::zero() && l - a > T::zero() {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, &a) in lambda.iter_mut().zip(&alpha) {
                *l = (T::one() - theta) * *l + theta * a;
            }
            let keep: Vec<usize> = (0..set.len()).filter(|&r| lambda[r] > T::lit(1e-15)).collect();
            set = keep.iter().map(|&r| set[r]).collect();
            lambda = keep.iter().map(|&r| lambda[r]).collect();
            let total: T = lambda.iter().copied().sum();
            lambda.iter_mut().for_each(|l| *l = *l / total);
            x = combine(points, &set, &lambda);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mnp(pts: &[[f64; 2]]) -> Vec<f64> {
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        min_norm_point(&refs)
    }

    #[test]
    fn segment_through_origin() {
        let x = mnp(&[[1.0, 0.0], [-1.0, 0.0]]);
        assert!(x[0].abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn projection_onto_a_segment() {
        let x = mnp(&[[1.0, 1.0], [1.0, -1.0]]);
        assert!((x[0] - 1.0).abs() < 1e-14 && x[1].abs() < 1e-14);
    }

    #[test]
    fn vertex_is_nearest() {
        let x = mnp(&[[2.0, 1.0], [3.0, 1.0], [2.5, 4.0]]);
        assert_eq!(x, vec![2.0, 1.0]);
    }

    #[test]
    fn triangle_around_origin() {
        let x = mnp(&[[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]]);
        assert!(x.iter().all(|v| v.abs() < 1e-12), "{x:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn satisfies_the_optimality_condition(raw in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..6)) {
            let pts: Vec<[f64; 2]> = raw.iter().map(|&(a, b)| [a, b]).collect();
            let x = mnp(&pts);
            let xx = x[0] * x[0] + x[1] * x[1];
            for p in &pts {
                prop_assert!(x[0] * p[0] + x[1] * p[1] >= xx - 1e-9);
            }
            // no vertex is closer than the returned point
            for p in &pts {
                prop_assert!(xx <= p[0] * p[0] + p[1] * p[1] + 1e-12);
            }
        }
    }
}
