//! Exact solver for weighted linear quantile regression.
//!
//! The solver walks the vertices of the check-loss polyhedron: a vertex
//! is a basis of `q` interpolated observations. In LP terms this is the
//! dual simplex on the bounded-variable dual
//!
//! ```text
//! max  sum_i y_i a_i   s.t.  X' a = 0,   (tau - 1) w_i <= a_i <= tau w_i
//! ```
//!
//! with a long-step ratio test: each pivot moves along an edge to the
//! exact minimizer of the (piecewise-linear) loss on that edge, flipping
//! every residual sign it passes. Leaving rows are chosen by largest dual
//! infeasibility; after a zero-length (degenerate) step the choice falls
//! back to the smallest row index, which rules out cycling.

use std::cmp::Ordering;

use ndarray::Array2;

use super::{rho, QuantileFit, RegressionProblem};
use crate::error::{Error, Result};
use crate::linalg::{dot, Lu};
use crate::scalar::Scalar;

const UPPER: i8 = 1;
const LOWER: i8 = -1;
const BASIC: i8 = 0;

/// Solves `min_theta sum_i w_i rho_tau(y_i - x_i' theta)` exactly.
///
/// Rows with zero weight are dropped first. The returned point is an
/// optimal basic solution; the rule above makes it a deterministic
/// function of the inputs.
pub fn fit_weighted_qr<T: Scalar>(problem: &RegressionProblem<T>) -> Result<QuantileFit<T>> {
    let q = problem.n_coef();
    let tau = problem.tau();
    let keep: Vec<usize> = (0..problem.n_obs())
        .filter(|&i| problem.weights()[i] > T::zero())
        .collect();
    let m = keep.len();
    let rows: Vec<Vec<T>> = keep
        .iter()
        .map(|&i| problem.design().row(i).to_vec())
        .collect();
    let y: Vec<T> = keep.iter().map(|&i| problem.response()[i]).collect();
    let w: Vec<T> = keep.iter().map(|&i| problem.weights()[i]).collect();

    let mut basis = initial_basis(&rows, &y, &w)?;
    let mut state = vec![LOWER; m];
    for &b in &basis {
        state[b] = BASIC;
    }

    let w_max = w.iter().copied().fold(T::zero(), T::max);
    let dual_tol = T::lit(1e-10) * w_max;
    let max_iter = 50 * m + 1000;
    let mut degenerate_last = false;
    let mut residual = vec![T::zero(); m];
    let mut iterations = 0usize;

    loop {
        let xb = basis_matrix(&rows, &basis);
        let lu = Lu::factor(&xb)?;
        let yb: Vec<T> = basis.iter().map(|&b| y[b]).collect();
        let theta = lu.solve(&yb);

        for i in 0..m {
            if state[i] == BASIC {
                residual[i] = T::zero();
                continue;
            }
            let r = y[i] - dot(&rows[i], &theta);
            residual[i] = r;
            if r.abs() > zero_tol(&rows[i], y[i], &theta) {
                state[i] = if r > T::zero() { UPPER } else { LOWER };
            }
        }

        // Dual values of the basic rows: X_B' a_B = -sum_N a_i x_i.
        let mut g = vec![T::zero(); q];
        for i in 0..m {
            if state[i] == BASIC {
                continue;
            }
            let a = bound_value(state[i], w[i], tau);
            for (gj, &xj) in g.iter_mut().zip(&rows[i]) {
                *gj = *gj + a * xj;
            }
        }
        let neg_g: Vec<T> = g.iter().map(|v| -*v).collect();
        let a_basic = lu.solve_transpose(&neg_g);

        // Pick the leaving basic row.
        let mut leave: Option<(usize, T, T)> = None; // (basis slot, sigma, violation)
        for (k, &b) in basis.iter().enumerate() {
            let lo = (tau - T::one()) * w[b];
            let hi = tau * w[b];
            let a = a_basic[k];
            let (viol, sigma) = if a < lo - dual_tol {
                (lo - a, T::one())
            } else if a > hi + dual_tol {
                (a - hi, -T::one())
            } else {
                continue;
            };
            let better = match leave {
                None => true,
                Some((kk, _, v)) => {
                    if degenerate_last {
                        b < basis[kk]
                    } else {
                        viol > v || (viol == v && b < basis[kk])
                    }
                }
            };
            if better {
                leave = Some((k, sigma, viol));
            }
        }

        let Some((k, sigma, viol)) = leave else {
            let objective = (0..m).map(|i| w[i] * rho(residual[i], tau)).sum();
            let active_set = (0..m)
                .filter(|&i| {
                    state[i] == BASIC || residual[i].abs() <= zero_tol(&rows[i], y[i], &theta)
                })
                .map(|i| keep[i])
                .collect();
            return Ok(QuantileFit { theta, objective, active_set, iterations });
        };

        iterations += 1;
        if iterations > max_iter {
            return Err(Error::Internal(format!(
                "quantile regression simplex exceeded {max_iter} pivots"
            )));
        }

        // Edge direction: basic row k leaves with residual -sigma * t.
        let mut e = vec![T::zero(); q];
        e[k] = T::one();
        let dir: Vec<T> = lu.solve(&e).into_iter().map(|v| v * sigma).collect();

        let mut breaks: Vec<(T, usize, T)> = Vec::new(); // (t, row, slope increment)
        for i in 0..m {
            if state[i] == BASIC {
                continue;
            }
            let alpha = dot(&rows[i], &dir);
            if alpha == T::zero() || (state[i] == UPPER) != (alpha > T::zero()) {
                continue;
            }
            let t = (residual[i] / alpha).max(T::zero());
            breaks.push((t, i, w[i] * alpha.abs()));
        }
        breaks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

        let mut slope = -viol;
        let mut entering = None;
        for (pos, &(t, i, inc)) in breaks.iter().enumerate() {
            slope = slope + inc;
            if slope >= T::zero() {
                entering = Some((pos, t, i));
                break;
            }
        }
        let Some((pos, step, enter)) = entering else {
            return Err(Error::Internal("unbounded quantile regression direction".into()));
        };
        for &(_, i, _) in &breaks[..pos] {
            state[i] = -state[i];
        }
        let leaving_row = basis[k];
        state[leaving_row] = if sigma > T::zero() { LOWER } else { UPPER };
        state[enter] = BASIC;
        basis[k] = enter;
        degenerate_last = step <= T::epsilon();
    }
}

#[inline]
fn bound_value<T: Scalar>(state: i8, w: T, tau: T) -> T {
    if state == UPPER {
        tau * w
    } else {
        (tau - T::one()) * w
    }
}

fn zero_tol<T: Scalar>(row: &[T], y: T, theta: &[T]) -> T {
    let mag = row.iter().zip(theta).fold(y.abs(), |s, (&x, &t)| s + (x * t).abs());
    T::lit(1e-10) * (T::one() + mag)
}

fn basis_matrix<T: Scalar>(rows: &[Vec<T>], basis: &[usize]) -> Array2<T> {
    let q = basis.len();
    Array2::from_shape_fn((q, q), |(i, j)| rows[basis[i]][j])
}

/// Starting vertex: `q` linearly independent rows, taken greedily in
/// order of increasing weighted-least-squares residual.
fn initial_basis<T: Scalar>(rows: &[Vec<T>], y: &[T], w: &[T]) -> Result<Vec<usize>> {
    let q = rows[0].len();
    let mut xtwx = Array2::<T>::zeros((q, q));
    let mut xtwy = vec![T::zero(); q];
    for ((row, &yi), &wi) in rows.iter().zip(y).zip(w) {
        for a in 0..q {
            xtwy[a] = xtwy[a] + wi * row[a] * yi;
            for b in 0..q {
                xtwx[[a, b]] = xtwx[[a, b]] + wi * row[a] * row[b];
            }
        }
    }
    let lu = Lu::factor(&xtwx)
        .map_err(|_| Error::Singular("design is rank deficient on positive-weight rows".into()))?;
    let theta0 = lu.solve(&xtwy);

    let mut order: Vec<(T, usize)> = rows
        .iter()
        .zip(y)
        .enumerate()
        .map(|(i, (row, &yi))| ((yi - dot(row, &theta0)).abs(), i))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

    // Modified Gram-Schmidt over the accepted rows.
    let mut ortho: Vec<Vec<T>> = Vec::with_capacity(q);
    let mut basis = Vec::with_capacity(q);
    for &(_, i) in &order {
        let row = &rows[i];
        let norm0 = dot(row, row).sqrt();
        if norm0 == T::zero() {
            continue;
        }
        let mut v = row.clone();
        for o in &ortho {
            let c = dot(&v, o);
            for (vj, &oj) in v.iter_mut().zip(o) {
                *vj = *vj - c * oj;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > T::lit(1e-7) * norm0 {
            v.iter_mut().for_each(|x| *x = *x / norm);
            ortho.push(v);
            basis.push(i);
            if basis.len() == q {
                return Ok(basis);
            }
        }
    }
    Err(Error::Singular("design is rank deficient on positive-weight rows".into()))
}
