//! Random forest of Gini-split decision trees.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax_lowest, check_dim, LabeledSet};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per node; `None` means `round(sqrt(d))`.
    pub mtry: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            mtry: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        counts: Vec<u32>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes stored in an arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_counts(&self, x: &[f64]) -> &[u32] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the leaf reached by `x`; ties go to the lowest class.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_lowest(self.leaf_counts(x))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
    pub n_features: usize,
    pub params: ForestParams,
    pub mtry: usize,
    pub seed: u64,
}

impl ForestModel {
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        check_dim(self.n_features, x)?;
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        Ok(votes)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax_lowest(&self.votes(x)?))
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.trees.len() as f64;
        Ok(self.votes(x)?.into_iter().map(|v| v as f64 / n).collect())
    }
}

/// Gini impurity `1 - sum p_c^2` of a class-count vector.
pub fn gini(counts: &[u32], total: u32) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Parent impurity minus the size-weighted child impurities.
    pub decrease: f64,
}

/// Best Gini split of `rows` over `features`, thresholds at midpoints of
/// adjacent distinct values (`x <= threshold` goes left). Both children must
/// hold at least `min_leaf` rows. Candidates are scanned in ascending feature
/// order, then ascending threshold; only a strictly larger decrease replaces
/// the incumbent.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &[usize],
    features: &[usize],
    n_classes: usize,
    min_leaf: usize,
) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let n = rows.len() as u32;
    let mut parent = vec![0u32; n_classes];
    for &r in rows {
        parent[y[r]] += 1;
    }
    let parent_gini = gini(&parent, n);
    let min_leaf = min_leaf.max(1) as u32;

    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    let mut best: Option<Split> = None;
    let mut order = rows.to_vec();
    let mut left = vec![0u32; n_classes];
    let mut right = vec![0u32; n_classes];
    for &f in &sorted_features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        left.fill(0);
        right.copy_from_slice(&parent);
        for k in 0..order.len() - 1 {
            let c = y[order[k]];
            left[c] += 1;
            right[c] -= 1;
            let (lo, hi) = (x[order[k]][f], x[order[k + 1]][f]);
            if lo == hi {
                continue;
            }
            let nl = k as u32 + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let weighted = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
            let decrease = parent_gini - weighted;
            if best.is_none_or(|b| decrease > b.decrease) {
                let mut threshold = (lo + hi) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    decrease,
                });
            }
        }
    }
    best
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let mut counts = vec![0u32; self.n_classes];
        for &r in rows {
            counts[self.y[r]] += 1;
        }
        self.nodes.push(Node::Leaf { counts });
        self.nodes.len() - 1
    }

    fn build<R: Rng>(&mut self, rows: &[usize], depth: usize, rng: &mut R) -> usize {
        let first = self.y[rows[0]];
        let pure = rows.iter().all(|&r| self.y[r] == first);
        if pure || depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf.max(1) {
            return self.leaf(rows);
        }
        let d = self.x[0].len();
        let features = sample(rng, d, self.mtry).into_vec();
        let split = best_split(self.x, self.y, rows, &features, self.n_classes, self.params.min_leaf);
        let Some(split) = split.filter(|s| s.decrease > 1e-12) else {
            return self.leaf(rows);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: Vec::new() });
        let left = self.build(&l, depth + 1, rng);
        let right = self.build(&r, depth + 1, rng);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        slot
    }
}

/// Trains `n_trees` trees on bootstrap samples. Tree `i` draws all of its
/// randomness from `(seed, i)`, so trees can be built in parallel.
pub fn fit_rf(train: &LabeledSet, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("forest needs at least one tree".into()));
    }
    train.check_finite()?;
    let d = train.dim();
    if d == 0 {
        return Err(Error::InvalidParameter("feature dimension is zero".into()));
    }
    let mtry = params
        .mtry
        .unwrap_or_else(|| (d as f64).sqrt().round() as usize)
        .clamp(1, d);
    let n = train.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, stream::FOREST_TREE, t as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x: train.x(),
                y: train.y(),
                n_classes: train.n_classes(),
                params,
                mtry,
                nodes: Vec::new(),
            };
            builder.build(&rows, 0, &mut rng);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_classes: train.n_classes(),
        n_features: d,
        params: *params,
        mtry,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn separable_one_feature() {
        let x: Vec<Vec<f64>> = (-10..10).map(|i| vec![i as f64 + 0.5]).collect();
        let y: Vec<usize> = x.iter().map(|r| usize::from(r[0] > 0.0)).collect();
        let train = LabeledSet::new(x.clone(), y.clone(), names(2)).unwrap();
        for seed in [0, 1, 99] {
            let m = fit_rf(&train, &ForestParams::default(), seed).unwrap();
            for (row, &label) in x.iter().zip(&y) {
                assert_eq!(m.predict(row).unwrap(), label);
            }
        }
    }

    #[test]
    fn single_class() {
        let train = LabeledSet::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1, 1, 1], names(3)).unwrap();
        let m = fit_rf(&train, &ForestParams::default(), 5).unwrap();
        assert_eq!(m.predict(&[-100.0]).unwrap(), 1);
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn constant_features_give_single_leaves() {
        let train = LabeledSet::new(vec![vec![1.0, 1.0]; 6], vec![0, 1, 0, 1, 0, 1], names(2)).unwrap();
        let m = fit_rf(&train, &ForestParams::default(), 3).unwrap();
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[4, 0], 4), 0.0);
        assert!((gini(&[2, 2], 4) - 0.5).abs() < 1e-15);
        assert!((gini(&[1, 1, 1], 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn min_leaf_respected() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let y = vec![0, 1, 1, 1, 1];
        let s = best_split(&x, &y, &[0, 1, 2, 3, 4], &[0], 2, 2).unwrap();
        assert_eq!(s.threshold, 1.5);
        let s1 = best_split(&x, &y, &[0, 1, 2, 3, 4], &[0], 2, 1).unwrap();
        assert_eq!(s1.threshold, 0.5);
    }
}
