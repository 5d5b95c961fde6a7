//! Bagged CART trees with Gini impurity splits.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chi2::FeatureSelector;
use crate::model::{ModelKind, ModelParams, TrainedModel, SCHEMA_VERSION};
use crate::schema::Dataset;
use crate::{MlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `floor(sqrt(d))`, at least 1.
    pub feature_subsample: Option<usize>,
    /// Draw a bootstrap sample per tree; otherwise every tree sees all rows.
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    pub fn with_seed(seed: u64) -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            feature_subsample: None,
            bootstrap: true,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        /// Position within the model's selected features.
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

/// Index of the largest count; ties go to the lowest index.
pub(crate) fn argmax_first<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl Tree {
    pub fn leaf_counts(&self, x: &[f64]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return counts,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_first(self.leaf_counts(x))
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }
}

/// Split quality as the fraction `num / den` of
/// `sum_c L_c^2 / n_L + sum_c R_c^2 / n_R`; larger means lower weighted
/// Gini impurity. Compared exactly by cross-multiplication.
#[derive(Clone, Copy)]
struct Quality {
    num: u128,
    den: u128,
}

impl Quality {
    fn new(left: &[u64], right: &[u64]) -> Self {
        let nl: u64 = left.iter().sum();
        let nr: u64 = right.iter().sum();
        let sl: u128 = left.iter().map(|&c| (c as u128) * (c as u128)).sum();
        let sr: u128 = right.iter().map(|&c| (c as u128) * (c as u128)).sum();
        Quality {
            num: sl * nr as u128 + sr * nl as u128,
            den: nl as u128 * nr as u128,
        }
    }

    fn better_than(&self, other: &Quality) -> bool {
        self.num * other.den > other.num * self.den
    }
}

pub(crate) struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    params: ForestParams,
    m: usize,
}

pub(crate) struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
}

impl<'a> Builder<'a> {
    pub(crate) fn new(x: &'a [Vec<f64>], y: &'a [usize], n_classes: usize, params: ForestParams) -> Self {
        let d = x.first().map(Vec::len).unwrap_or(0);
        let m = params
            .feature_subsample
            .unwrap_or(((d as f64).sqrt().floor() as usize).max(1))
            .clamp(1, d.max(1));
        Builder {
            x,
            y,
            n_classes,
            params,
            m,
        }
    }

    fn counts(&self, idx: &[usize]) -> Vec<u64> {
        let mut c = vec![0u64; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    /// Best Gini split over `features` (ascending), ties to the lower
    /// feature index then the lower threshold.
    pub(crate) fn best_split(&self, idx: &[usize], features: &[usize]) -> Option<BestSplit> {
        let total = self.counts(idx);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<(Quality, BestSplit)> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for &f in features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left = vec![0u64; self.n_classes];
            for k in 0..order.len() - 1 {
                left[self.y[order[k]]] += 1;
                let lo = self.x[order[k]][f];
                let hi = self.x[order[k + 1]][f];
                if lo == hi {
                    continue;
                }
                let nl = k + 1;
                if nl < min_leaf || order.len() - nl < min_leaf {
                    continue;
                }
                let right: Vec<u64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let q = Quality::new(&left, &right);
                if best.as_ref().map(|(b, _)| q.better_than(b)).unwrap_or(true) {
                    best = Some((
                        q,
                        BestSplit {
                            feature: f,
                            threshold: lo + (hi - lo) / 2.0,
                        },
                    ));
                }
            }
        }
        best.map(|(_, s)| s)
    }

    fn grow(&self, nodes: &mut Vec<Node>, idx: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let at = nodes.len();
        let counts = self.counts(idx);
        nodes.push(Node::Leaf {
            counts: counts.iter().map(|&c| c as u32).collect(),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let deep = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || deep || idx.len() < 2 * self.params.min_leaf.max(1) {
            return at;
        }
        let d = self.x[0].len();
        let mut features: Vec<usize> = if self.m >= d {
            (0..d).collect()
        } else {
            sample(rng, d, self.m).into_vec()
        };
        features.sort_unstable();
        let Some(split) = self.best_split(idx, &features) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let left = self.grow(nodes, &l, depth + 1, rng);
        let right = self.grow(nodes, &r, depth + 1, rng);
        nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }

    pub(crate) fn tree(&self, index: usize) -> Tree {
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        rng.set_stream(index as u64);
        let n = self.x.len();
        let idx: Vec<usize> = if self.params.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut nodes = Vec::new();
        self.grow(&mut nodes, &idx, 0, &mut rng);
        Tree { nodes }
    }
}

pub(crate) fn fit_matrix(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: ForestParams) -> Vec<Tree> {
    let b = Builder::new(x, y, n_classes, params);
    (0..params.n_trees).into_par_iter().map(|i| b.tree(i)).collect()
}

pub(crate) fn vote(trees: &[Tree], x: &[f64], n_classes: usize) -> usize {
    let mut votes = vec![0u32; n_classes];
    for t in trees {
        votes[t.predict(x)] += 1;
    }
    argmax_first(&votes)
}

pub fn fit_forest(train: &Dataset, selector: &FeatureSelector, params: &ForestParams) -> Result<TrainedModel> {
    let y = train.label_indices()?;
    let present: std::collections::BTreeSet<usize> = y.iter().copied().collect();
    if present.len() < 2 {
        return Err(MlError::SingleClass);
    }
    if params.n_trees == 0 {
        return Err(MlError::Schema("forest needs at least one tree".into()));
    }
    let x = crate::model::select_rows(&train.rows, &selector.selected);
    let trees = fit_matrix(&x, &y, train.classes.len(), *params);
    Ok(TrainedModel {
        schema_version: SCHEMA_VERSION,
        kind: ModelKind::Forest,
        classes: train.classes.clone(),
        feature_indices: selector.selected.clone(),
        seed: params.seed,
        params: ModelParams::Forest { trees },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(max_depth: Option<usize>) -> ForestParams {
        ForestParams {
            n_trees: 1,
            max_depth,
            min_leaf: 1,
            feature_subsample: Some(usize::MAX),
            bootstrap: false,
            seed: 0,
        }
    }

    #[test]
    fn memorizes_consistent_data() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 7 % 11) as f64, (i % 4) as f64]).collect();
        let y: Vec<usize> = (0..30).map(|i| (i * 7 % 11 + i % 4) % 3).collect();
        let trees = fit_matrix(&x, &y, 3, single(None));
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(vote(&trees, r, 3), l);
        }
    }

    #[test]
    fn contradictory_rows_predict_majority() {
        let x = vec![vec![1.0], vec![1.0], vec![1.0], vec![5.0]];
        let y = vec![1, 1, 0, 0];
        let trees = fit_matrix(&x, &y, 2, single(None));
        assert_eq!(vote(&trees, &[1.0], 2), 1);
        assert_eq!(vote(&trees, &[5.0], 2), 0);
    }

    #[test]
    fn vote_tie_goes_to_first_class() {
        let x = vec![vec![1.0], vec![1.0]];
        let trees = fit_matrix(&x, &[1, 0], 2, single(None));
        assert_eq!(vote(&trees, &[1.0], 2), 0);
    }

    #[test]
    fn parallel_equals_sequential() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![(i * 13 % 17) as f64, (i * 5 % 7) as f64, i as f64]).collect();
        let y: Vec<usize> = (0..60).map(|i| usize::from(i * 13 % 17 > 8)).collect();
        let p = ForestParams { n_trees: 8, ..ForestParams::with_seed(9) };
        let b = Builder::new(&x, &y, 2, p);
        let seq: Vec<Tree> = (0..8).map(|i| b.tree(i)).collect();
        assert_eq!(fit_matrix(&x, &y, 2, p), seq);
        assert_eq!(fit_matrix(&x, &y, 2, p), fit_matrix(&x, &y, 2, p));
        assert_ne!(b.tree(0), b.tree(1));
    }
}
