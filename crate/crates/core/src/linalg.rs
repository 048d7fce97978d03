//! Small dense linear algebra: LU with partial pivoting.
//!
//! The systems solved here are tiny (at most a dozen unknowns for the
//! local polynomial designs, `d x d` covariances in the forest), so a
//! straightforward row-major LU is all that is needed.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// LU factorization `P A = L U` of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    // Packed L (unit diagonal, below) and U (on and above the diagonal).
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factorizes `a`. Fails with [`Error::Singular`] when a pivot is
    /// negligible relative to the largest entry of `a`.
    pub fn factor(a: &Array2<T>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols {
            return Err(Error::Shape(format!("LU of a {rows}x{cols} matrix")));
        }
        let n = rows;
        // ndarray iterates in logical (row-major) order for any layout.
        let mut lu: Vec<T> = a.iter().copied().collect();
        let scale = lu.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if scale == T::zero() {
            return Err(Error::Singular("zero matrix".into()));
        }
        let tol = scale * T::epsilon() * T::from_usize_lossy(n.max(1)) * T::lit(16.0);
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, T::neg_infinity()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= tol {
                return Err(Error::Singular(format!("pivot {k} is {pmax:e}")));
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] = lu[i * n + j] - f * u;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // A^T = U^T L^T P, so solve U^T z = b, L^T y = z, x = P^T y.
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s = s - self.lu[j * n + i] * z[j];
            }
            z[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s = s - self.lu[j * n + i] * z[j];
            }
            z[i] = s;
        }
        let mut x = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }

    pub fn inverse(&self) -> Array2<T> {
        let n = self.n;
        let mut inv = Array2::zeros((n, n));
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[[i, j]] = col[i];
            }
        }
        inv
    }
}

/// Inverse of a square matrix.
pub fn invert<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>> {
    Ok(Lu::factor(a)?.inverse())
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub(crate) fn is_symmetric<T: Scalar>(a: &Array2<T>, tol: T) -> bool {
    let (r, c) = a.dim();
    r == c && (0..r).all(|i| (0..i).all(|j| (a[[i, j]] - a[[j, i]]).abs() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_and_inverts() {
        let a = array![[4.0, 3.0, 0.0], [6.0, 3.0, 1.0], [0.0, 2.0, 5.0]];
        let lu = Lu::factor(&a).unwrap();
        let x = lu.solve(&[1.0, 2.0, 3.0]);
        let r: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[[i, j]] * x[j]).sum()).collect();
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-12);
        }
        let y = lu.solve_transpose(&[1.0, -1.0, 0.5]);
        let r: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[[j, i]] * y[j]).sum()).collect();
        for (ri, bi) in r.iter().zip([1.0, -1.0, 0.5]) {
            assert!((ri - bi).abs() < 1e-12);
        }
        let inv = lu.inverse();
        let id = a.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[[i, j]] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn detects_singularity() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(Lu::factor(&a), Err(Error::Singular(_))));
    }
}
