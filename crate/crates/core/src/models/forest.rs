//! Random forest of Gini decision trees.
//!
//! Each tree draws a bootstrap sample and, at every split, a random subset
//! of `⌈√d⌉` features. Tree `i` uses stream `i` of a ChaCha generator seeded
//! with the forest seed, so parallel and sequential training agree.

use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classification_matrices, Classifier, LabeledWindow};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", rename_all = "snake_case")]
pub enum TreeNode<T: Real> {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: T,
        /// child for `x[feature] <= threshold`
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DecisionTree<T: Real> {
    pub nodes: Vec<TreeNode<T>>,
}

impl<T: Real> DecisionTree<T> {
    pub fn predict(&self, x: &[T]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { class } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T: Real>(t: &DecisionTree<T>, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ForestModel<T: Real> {
    pub trees: Vec<DecisionTree<T>>,
    pub n_trees: usize,
    pub max_depth: usize,
    pub class_labels: Vec<String>,
    pub n_features: usize,
    pub seed: u64,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / nf).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Builder<'a, T: Real> {
    x: &'a Array2<T>,
    y: &'a [usize],
    n_classes: usize,
    mtry: usize,
    cfg: &'a ForestConfig,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode<T>>,
    scratch: Vec<(T, usize)>,
}

impl<T: Real> Builder<'_, T> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &r in &rows {
            counts[self.y[r]] += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            class: majority(&counts),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.cfg.max_depth || rows.len() < self.cfg.min_samples_split.max(2) {
            return id;
        }

        let d = self.x.ncols();
        let mut features: Vec<usize> = index::sample(&mut self.rng, d, self.mtry).into_vec();
        features.sort_unstable();

        let n = rows.len();
        let mut best: Option<(f64, usize, T)> = None;
        for &f in &features {
            self.scratch.clear();
            self.scratch
                .extend(rows.iter().map(|&r| (self.x[[r, f]], self.y[r])));
            self.scratch
                .sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            let mut left = vec![0usize; self.n_classes];
            let mut right = counts.clone();
            for i in 0..n - 1 {
                let (v, c) = self.scratch[i];
                left[c] += 1;
                right[c] -= 1;
                let next = self.scratch[i + 1].0;
                if next <= v {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                let score = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                let threshold = v + (next - v) * T::lit(0.5);
                let better = match best {
                    None => true,
                    Some((s, _, _)) => score < s,
                };
                if better {
                    best = Some((score, f, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.x[[r, feature]] <= threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

pub fn train_forest<T: Real>(
    data: &[LabeledWindow<T>],
    cfg: &ForestConfig,
) -> Result<ForestModel<T>> {
    if cfg.n_trees == 0 || cfg.max_depth == 0 {
        return Err(Error::InvalidConfig(
            "n_trees and max_depth must be positive".into(),
        ));
    }
    let (x, y, labels) = classification_matrices(data)?;
    let (n, d) = x.dim();
    if d == 0 {
        return Err(Error::InvalidInput("no features".into()));
    }
    let mtry = ((d as f64).sqrt().ceil() as usize).clamp(1, d);
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut b = Builder {
                x: &x,
                y: &y,
                n_classes: labels.len(),
                mtry,
                cfg,
                rng,
                nodes: Vec::new(),
                scratch: Vec::with_capacity(n),
            };
            b.build(rows, 0);
            DecisionTree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_trees: cfg.n_trees,
        max_depth: cfg.max_depth,
        class_labels: labels,
        n_features: d,
        seed: cfg.seed,
    })
}

impl<T: Real> ForestModel<T> {
    pub fn votes(&self, x: &[T]) -> Result<Vec<usize>> {
        if x.len() != self.n_features {
            return Err(Error::dim("forest query", self.n_features, x.len()));
        }
        let mut v = vec![0usize; self.class_labels.len()];
        for t in &self.trees {
            v[t.predict(x)] += 1;
        }
        Ok(v)
    }
}

impl<T: Real> Classifier<T> for ForestModel<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    fn predict_index(&self, x: &[T]) -> Result<usize> {
        Ok(majority(&self.votes(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<LabeledWindow<f64>> {
        (0..60)
            .map(|i| {
                let c = i % 2;
                let off = if c == 0 { -5.0 } else { 5.0 };
                let jitter = ((i * 37) % 11) as f64 / 20.0;
                LabeledWindow::classification(
                    vec![off + jitter, -off + jitter, jitter],
                    if c == 0 { "a" } else { "b" },
                )
            })
            .collect()
    }

    #[test]
    fn separable_blobs_are_learned() {
        let data = blobs();
        let cfg = ForestConfig {
            n_trees: 15,
            ..ForestConfig::default()
        };
        let m = train_forest(&data, &cfg).unwrap();
        for w in &data {
            assert_eq!(
                m.predict_label(&w.features).unwrap(),
                w.gesture.as_deref().unwrap()
            );
        }
    }

    #[test]
    fn depth_is_bounded() {
        let data: Vec<LabeledWindow<f64>> = (0..200)
            .map(|i| {
                LabeledWindow::classification(vec![(i * 7919 % 200) as f64], format!("c{}", i % 3))
            })
            .collect();
        let cfg = ForestConfig {
            n_trees: 3,
            max_depth: 4,
            ..ForestConfig::default()
        };
        let m = train_forest(&data, &cfg).unwrap();
        assert!(m.trees.iter().all(|t| t.depth() <= 4));
    }

    #[test]
    fn vote_ties_go_to_first_label() {
        assert_eq!(majority(&[2, 2, 1]), 0);
        assert_eq!(majority(&[1, 3, 3]), 1);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = vec![LabeledWindow::classification(vec![0.0f64], "only"); 4];
        assert!(matches!(
            train_forest(&data, &ForestConfig::default()),
            Err(Error::DegenerateLabels(_))
        ));
    }
}
