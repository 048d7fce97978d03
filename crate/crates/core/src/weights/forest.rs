//! Multivariate regression forest with a Mahalanobis split criterion.
//!
//! A node with responses `Y_i` (bootstrap copies counted) and covariance
//! `S` is split where the within-child scatter
//! `sum_child sum_i (Y_i - Ybar_child)' (S + lambda I)^{-1} (Y_i - Ybar_child)`
//! is smallest, `lambda = 1e-6 tr(S) / d`. With responses centered at the
//! node mean this is the split maximizing `s' M s (1/n_L + 1/n_R)`, where
//! `s` is the left child's sum.

use ndarray::Array2;
use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{WeightMethod, WeightVector};
use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    /// Number of trees `B`.
    pub n_trees: usize,
    pub min_leaf: usize,
    /// Candidate features per split; `None` means `ceil(m / 3)`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 200, min_leaf: 5, mtry: None, bootstrap: true, max_depth: None }
    }
}

impl ForestParams {
    pub fn mtry_for(&self, m: usize) -> usize {
        self.mtry.unwrap_or_else(|| m.div_ceil(3).max(1))
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.n_trees == 0 || self.min_leaf == 0 {
            return Err(Error::Validation("forest needs B >= 1 and min_leaf >= 1".into()));
        }
        let mtry = self.mtry_for(m);
        if mtry == 0 || mtry > m {
            return Err(Error::Validation(format!("mtry = {mtry} outside 1..={m}")));
        }
        Ok(())
    }
}

/// Tree node. Children are indices into [`Tree::nodes`]; a query goes
/// left when `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node<T> {
    Split { feature: usize, threshold: T, left: usize, right: usize },
    /// Training rows in the leaf, repeated by bootstrap multiplicity.
    Leaf { members: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn leaf_of(&self, x: &[T]) -> &[usize] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { members } => return members,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<T> {
    pub trees: Vec<Tree<T>>,
    pub params: ForestParams,
    pub seed: u64,
    pub n_train: usize,
    /// Covariate dimension.
    pub m: usize,
    /// Response dimension.
    pub d: usize,
}

impl<T: Scalar + Serialize + for<'de> Deserialize<'de>> ForestModel<T> {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s).map_err(|e| Error::Validation(format!("bad forest file: {e}")))?;
        for tree in &model.trees {
            for node in &tree.nodes {
                match node {
                    Node::Split { feature, left, right, .. } => {
                        if *feature >= model.m || *left >= tree.nodes.len() || *right >= tree.nodes.len() {
                            return Err(Error::Validation("forest file has dangling node references".into()));
                        }
                    }
                    Node::Leaf { members } => {
                        if members.is_empty() || members.iter().any(|&j| j >= model.n_train) {
                            return Err(Error::Validation("forest file has an invalid leaf".into()));
                        }
                    }
                }
            }
        }
        Ok(model)
    }
}

struct Grower<'a, T> {
    x: &'a Array2<T>,
    y: &'a Array2<T>,
    params: &'a ForestParams,
    mtry: usize,
}

struct Split<T> {
    feature: usize,
    threshold: T,
    score: T,
}

impl<T: Scalar> Grower<'_, T> {
    fn grow(&self, rng: &mut rng::Rng) -> Tree<T> {
        let n = self.x.nrows();
        let rows: Vec<usize> = if self.params.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut nodes = vec![Node::Leaf { members: Vec::new() }];
        let mut stack = vec![(0usize, rows, 0usize)];
        while let Some((at, rows, depth)) = stack.pop() {
            let split = if self.params.max_depth.is_some_and(|cap| depth >= cap) {
                None
            } else {
                self.best_split(&rows, rng)
            };
            match split {
                Some(s) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[[i, s.feature]] <= s.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { members: Vec::new() });
                    nodes.push(Node::Leaf { members: Vec::new() });
                    nodes[at] = Node::Split { feature: s.feature, threshold: s.threshold, left, right: left + 1 };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
                None => {
                    let mut members = rows;
                    members.sort_unstable();
                    nodes[at] = Node::Leaf { members };
                }
            }
        }
        Tree { nodes }
    }

    fn best_split(&self, rows: &[usize], rng: &mut rng::Rng) -> Option<Split<T>> {
        let n = rows.len();
        let min_leaf = self.params.min_leaf;
        if n < 2 * min_leaf {
            return None;
        }
        let d = self.y.ncols();
        let nf = T::from_usize_lossy(n);
        let mut mean = vec![T::zero(); d];
        for &i in rows {
            for k in 0..d {
                mean[k] = mean[k] + self.y[[i, k]];
            }
        }
        mean.iter_mut().for_each(|v| *v = *v / nf);
        let z: Vec<Vec<T>> = rows.iter().map(|&i| (0..d).map(|k| self.y[[i, k]] - mean[k]).collect()).collect();
        let mut cov = Array2::<T>::zeros((d, d));
        for zi in &z {
            for a in 0..d {
                for b in 0..d {
                    cov[[a, b]] = cov[[a, b]] + zi[a] * zi[b];
                }
            }
        }
        let denom = T::from_usize_lossy(n - 1);
        cov.mapv_inplace(|v| v / denom);
        let trace = (0..d).fold(T::zero(), |s, k| s + cov[[k, k]]);
        if !(trace > T::zero()) {
            return None;
        }
        let lambda = T::lit(1e-6) * trace / T::from_usize_lossy(d);
        for k in 0..d {
            cov[[k, k]] = cov[[k, k]] + lambda;
        }
        let metric = Lu::factor(&cov).ok()?.inverse();

        let m = self.x.ncols();
        let features = index::sample(rng, m, self.mtry).into_vec();
        let mut best: Option<Split<T>> = None;
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = vec![T::zero(); d];
        for &f in &features {
            order.sort_by(|&a, &b| {
                self.x[[rows[a], f]].partial_cmp(&self.x[[rows[b], f]]).unwrap().then(rows[a].cmp(&rows[b]))
            });
            s.iter_mut().for_each(|v| *v = T::zero());
            for t in 0..n - 1 {
                let zi = &z[order[t]];
                for k in 0..d {
                    s[k] = s[k] + zi[k];
                }
                let nl = t + 1;
                if nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let lo = self.x[[rows[order[t]], f]];
                let hi = self.x[[rows[order[t + 1]], f]];
                if !(lo < hi) {
                    continue;
                }
                let mut quad = T::zero();
                for a in 0..d {
                    for b in 0..d {
                        quad = quad + s[a] * metric[[a, b]] * s[b];
                    }
                }
                let score = quad * (T::one() / T::from_usize_lossy(nl) + T::one() / T::from_usize_lossy(n - nl));
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mut threshold = T::lit(0.5) * (lo + hi);
                    if !(threshold < hi) {
                        threshold = lo;
                    }
                    best = Some(Split { feature: f, threshold, score });
                }
            }
        }
        best
    }
}

/// Grows `B` trees; tree `b` draws from the stream `split_seed(seed, "tree", b)`.
pub fn fit_forest<T: Scalar>(x: &Array2<T>, y: &Array2<T>, params: &ForestParams, seed: u64) -> Result<ForestModel<T>> {
    let (n, m) = x.dim();
    let d = y.ncols();
    if m == 0 || d == 0 {
        return Err(Error::Validation(format!("forest needs m, d >= 1 (got {m}, {d})")));
    }
    if y.nrows() != n {
        return Err(Error::Shape(format!("X has {n} rows, Y has {}", y.nrows())));
    }
    params.validate(m)?;
    if n < params.min_leaf {
        return Err(Error::Validation(format!("{n} samples for min_leaf = {}", params.min_leaf)));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite training value".into()));
    }
    let grower = Grower { x, y, params, mtry: params.mtry_for(m) };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|b| grower.grow(&mut rng::seeded(rng::split_seed(seed, "tree", b as u64))))
        .collect();
    Ok(ForestModel { trees, params: *params, seed, n_train: n, m, d })
}

/// `w_j(x) = (1/B) sum_b #{j in L_b(x)} / |L_b(x)|`.
pub fn forest_weights<T: Scalar>(model: &ForestModel<T>, x: &[T]) -> Result<WeightVector<T>> {
    if x.len() != model.m {
        return Err(Error::Shape(format!("query has dimension {}, forest {}", x.len(), model.m)));
    }
    let mut weights = vec![T::zero(); model.n_train];
    let b = T::from_usize_lossy(model.trees.len());
    for tree in &model.trees {
        let leaf = tree.leaf_of(x);
        let share = T::one() / (T::from_usize_lossy(leaf.len()) * b);
        for &j in leaf {
            weights[j] = weights[j] + share;
        }
    }
    Ok(WeightVector { weights, method: WeightMethod::Forest, conditioning_point: x.to_vec() })
}
