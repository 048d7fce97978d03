//! Primal network simplex for the balanced transportation problem.
//!
//! Sources `0..N`, sinks `N..N+n` and an artificial root joined to every
//! node by an arc of cost `M > max c / 2`, so that no optimal flow routes
//! through the root. The spanning tree is kept strongly feasible (the
//! leaving arc is the last blocking arc met walking the cycle in its
//! orientation), which excludes cycling on degenerate pivots. Entering
//! arcs come from block pricing.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const TREE: u8 = 0;
const LOWER: u8 = 1;
const NONE: usize = usize::MAX;

pub(crate) struct TransportSolution<T> {
    /// Row-major `N x n` flows.
    pub flow: Vec<T>,
    /// Potentials of the sources and sinks.
    pub potential: Vec<T>,
    pub iterations: usize,
}

struct Network<'a, T> {
    rows: usize,
    cols: usize,
    cost: &'a [T],
    art_cost: T,
    flow: Vec<T>,
    state: Vec<u8>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// `pred[v]` is oriented from `v` to its parent.
    up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<T>,
    children: Vec<Vec<usize>>,
}

impl<T: Scalar> Network<'_, T> {
    fn real_arcs(&self) -> usize {
        self.rows * self.cols
    }

    fn root(&self) -> usize {
        self.rows + self.cols
    }

    fn source(&self, e: usize) -> usize {
        let m = self.real_arcs();
        if e < m {
            e / self.cols
        } else if e < m + self.rows {
            e - m
        } else {
            self.root()
        }
    }

    fn target(&self, e: usize) -> usize {
        let m = self.real_arcs();
        if e < m {
            self.rows + e % self.cols
        } else if e < m + self.rows {
            self.root()
        } else {
            e - m
        }
    }

    fn arc_cost(&self, e: usize) -> T {
        if e < self.real_arcs() {
            self.cost[e]
        } else {
            self.art_cost
        }
    }

    fn reduced_cost(&self, e: usize) -> T {
        self.arc_cost(e) + self.pi[self.source(e)] - self.pi[self.target(e)]
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        a
    }

    fn detach(&mut self, parent: usize, child: usize) {
        let list = &mut self.children[parent];
        let pos = list.iter().position(|&c| c == child).expect("tree child");
        list.swap_remove(pos);
    }

    /// Pushes `delta` around the cycle closed by `enter`, swaps `enter`
    /// for the blocking arc and re-hangs the separated subtree.
    fn pivot(&mut self, enter: usize) -> Result<()> {
        let first = self.source(enter);
        let second = self.target(enter);
        let join = self.join(first, second);

        let mut delta = T::infinity();
        let mut out = NONE;
        let mut side = 0;
        let mut u = first;
        while u != join {
            if self.up[u] && self.flow[self.pred[u]] < delta {
                delta = self.flow[self.pred[u]];
                out = u;
                side = 1;
            }
            u = self.parent[u];
        }
        u = second;
        while u != join {
            if !self.up[u] && self.flow[self.pred[u]] <= delta {
                delta = self.flow[self.pred[u]];
                out = u;
                side = 2;
            }
            u = self.parent[u];
        }
        if out == NONE {
            return Err(Error::Internal("unbounded transportation cycle".into()));
        }

        self.flow[enter] = self.flow[enter] + delta;
        for (start, sign) in [(first, -T::one()), (second, T::one())] {
            let mut u = start;
            while u != join {
                let e = self.pred[u];
                let s = if self.up[u] { sign } else { -sign };
                self.flow[e] = self.flow[e] + s * delta;
                u = self.parent[u];
            }
        }
        let leave = self.pred[out];
        self.flow[leave] = T::zero();
        self.state[leave] = LOWER;
        self.state[enter] = TREE;

        let (hang, anchor) = if side == 1 { (first, second) } else { (second, first) };
        let out_parent = self.parent[out];
        self.detach(out_parent, out);
        let mut w = hang;
        let mut new_parent = anchor;
        let mut new_pred = enter;
        let mut new_up = self.source(enter) == hang;
        loop {
            let old_parent = self.parent[w];
            let old_pred = self.pred[w];
            let old_up = self.up[w];
            self.parent[w] = new_parent;
            self.pred[w] = new_pred;
            self.up[w] = new_up;
            self.children[new_parent].push(w);
            if w == out {
                break;
            }
            self.detach(old_parent, w);
            new_parent = w;
            new_pred = old_pred;
            new_up = !old_up;
            w = old_parent;
        }
        self.refresh(hang);
        Ok(())
    }

    /// Recomputes depth and potential over the subtree rooted at `top`.
    fn refresh(&mut self, top: usize) {
        let mut stack = vec![top];
        while let Some(v) = stack.pop() {
            let p = self.parent[v];
            let c = self.arc_cost(self.pred[v]);
            self.pi[v] = if self.up[v] { self.pi[p] - c } else { self.pi[p] + c };
            self.depth[v] = self.depth[p] + 1;
            stack.extend_from_slice(&self.children[v]);
        }
    }
}

/// Solves `min sum c_ij f_ij` subject to row sums `supply` and column sums
/// `demand` (all strictly positive, equal totals). `cost` is row-major.
pub(crate) fn solve_transport<T: Scalar>(supply: &[T], demand: &[T], cost: &[T]) -> Result<TransportSolution<T>> {
    let rows = supply.len();
    let cols = demand.len();
    assert_eq!(cost.len(), rows * cols);
    let c_max = cost.iter().fold(T::zero(), |m, &c| m.max(c.abs()));
    let art_cost = c_max + T::one();
    let real = rows * cols;
    let nodes = rows + cols + 1;
    let root = rows + cols;
    let arcs = real + rows + cols;

    let mut net = Network {
        rows,
        cols,
        cost,
        art_cost,
        flow: vec![T::zero(); arcs],
        state: vec![LOWER; arcs],
        parent: vec![root; nodes],
        pred: vec![NONE; nodes],
        up: vec![false; nodes],
        depth: vec![1; nodes],
        pi: vec![T::zero(); nodes],
        children: vec![Vec::new(); nodes],
    };
    net.parent[root] = NONE;
    net.depth[root] = 0;
    net.children[root] = (0..root).collect();
    for (i, &s) in supply.iter().enumerate() {
        let e = real + i;
        net.flow[e] = s;
        net.state[e] = TREE;
        net.pred[i] = e;
        net.up[i] = true;
        net.pi[i] = -art_cost;
    }
    for (j, &d) in demand.iter().enumerate() {
        let e = real + rows + j;
        net.flow[e] = d;
        net.state[e] = TREE;
        net.pred[rows + j] = e;
        net.pi[rows + j] = art_cost;
    }

    let eps = T::lit(1e-11) * (T::one() + c_max);
    let block = ((arcs as f64).sqrt().ceil() as usize).max(10);
    let max_iter = 200 * nodes * (1 + (nodes as f64).log2() as usize) + 10 * arcs;
    let mut next = 0;
    let mut iterations = 0;
    loop {
        let mut best = NONE;
        let mut min = -eps;
        let mut count = block;
        for k in 0..arcs {
            let e = (next + k) % arcs;
            if net.state[e] == LOWER {
                let rc = net.reduced_cost(e);
                if rc < min {
                    min = rc;
                    best = e;
                }
            }
            count -= 1;
            if count == 0 {
                if best != NONE {
                    next = e + 1;
                    break;
                }
                count = block;
            }
        }
        if best == NONE {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::Internal(format!(
                "network simplex did not converge in {iterations} pivots ({rows} x {cols})"
            )));
        }
        net.pivot(best)?;
        iterations += 1;
    }

    let total = supply.iter().copied().sum::<T>();
    let residual = net.flow[real..].iter().copied().sum::<T>();
    if residual > T::lit(1e-9) * total {
        return Err(Error::Internal(format!("artificial flow {residual:e} left after {iterations} pivots")));
    }
    let mut flow = net.flow;
    flow.truncate(real);
    net.pi.truncate(root);
    Ok(TransportSolution { flow, potential: net.pi, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_prefers_the_diagonal() {
        let sol = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(sol.flow, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn single_sink_takes_everything() {
        let sol = solve_transport(&[0.25; 4], &[1.0], &[3.0, 1.0, 4.0, 1.0]).unwrap();
        assert_eq!(sol.flow, vec![0.25; 4]);
    }

    #[test]
    fn unbalanced_sizes() {
        // sink 0 is cheap for row 0, sink 1 for row 1 but sink 1 is small
        let cost = [0.0, 5.0, 1.0, 2.0, 0.0, 1.0];
        let sol = solve_transport(&[0.5, 0.5], &[0.3, 0.2, 0.5], &cost).unwrap();
        let obj: f64 = sol.flow.iter().zip(&cost).map(|(f, c)| f * c).sum();
        // row 0 -> sink 0 (0.3) + sink 2 (0.2); row 1 -> sink 1 (0.2) + sink 2 (0.3)
        assert!((obj - 0.5).abs() < 1e-14, "{obj}");
    }
}
