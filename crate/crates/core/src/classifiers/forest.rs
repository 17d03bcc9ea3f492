//! Random forest of entropy-split decision trees.
//!
//! Each tree is grown on a bootstrap sample until every leaf is pure or holds
//! fewer than two samples. At every node the features are visited in a random
//! order and the search stops after `max_features` non-constant features have
//! been scored; the split with the largest information gain wins (first one
//! on ties). Samples with `x ≤ threshold` go left.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Targets;
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaxFeatures {
    /// `⌈√d⌉`
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Fixed(m) => m,
        };
        m.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 10,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Class index: 0 positive, 1 negative.
    Leaf { class: usize },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict_class(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(params: &ForestParams, x: &DenseMatrix, y: &Targets, seed: u64) -> Self {
        let mut seeder = ChaCha8Rng::seed_from_u64(seed);
        let max_features = params.max_features.resolve(x.cols());
        let trees = (0..params.n_trees.max(1))
            .map(|_| {
                let mut rng = ChaCha8Rng::seed_from_u64(seeder.gen());
                let n = x.rows();
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow_tree(x, &y.class_index, samples, max_features, &mut rng)
            })
            .collect();
        RandomForest { trees }
    }

    /// Fraction of trees voting `[positive, negative]`.
    pub fn votes(&self, row: &[f64]) -> [f64; 2] {
        let pos = self.trees.iter().filter(|t| t.predict_class(row) == 0).count();
        let total = self.trees.len() as f64;
        let p = pos as f64 / total;
        [p, (self.trees.len() - pos) as f64 / total]
    }
}

fn entropy(pos: usize, neg: usize) -> f64 {
    let n = (pos + neg) as f64;
    if n == 0.0 {
        return 0.0;
    }
    [pos, neg]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn majority(counts: [usize; 2]) -> usize {
    if counts[0] >= counts[1] {
        0
    } else {
        1
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best threshold split of `samples` on `feature`, or `None` if the feature
/// is constant there.
fn best_split_on(
    x: &DenseMatrix,
    classes: &[usize],
    samples: &[usize],
    feature: usize,
    parent_entropy: f64,
    totals: [usize; 2],
) -> Option<Candidate> {
    let mut values: Vec<(f64, usize)> = samples.iter().map(|&s| (x.get(s, feature), classes[s])).collect();
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    if values.first()?.0 == values.last()?.0 {
        return None;
    }
    let n = values.len() as f64;
    let mut left = [0usize; 2];
    let mut best: Option<Candidate> = None;
    for i in 0..values.len() - 1 {
        left[values[i].1] += 1;
        if values[i].0 == values[i + 1].0 {
            continue;
        }
        let right = [totals[0] - left[0], totals[1] - left[1]];
        let n_left = (left[0] + left[1]) as f64;
        let child = (n_left / n) * entropy(left[0], left[1]) + ((n - n_left) / n) * entropy(right[0], right[1]);
        let gain = parent_entropy - child;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(Candidate {
                feature,
                threshold: (values[i].0 + values[i + 1].0) / 2.0,
                gain,
            });
        }
    }
    best
}

fn grow_tree(
    x: &DenseMatrix,
    classes: &[usize],
    samples: Vec<usize>,
    max_features: usize,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let mut nodes = vec![Node::Leaf { class: 0 }];
    let mut stack = vec![(0usize, samples)];
    let mut features: Vec<usize> = (0..x.cols()).collect();
    while let Some((at, samples)) = stack.pop() {
        let mut counts = [0usize; 2];
        for &s in &samples {
            counts[classes[s]] += 1;
        }
        let leaf = Node::Leaf {
            class: majority(counts),
        };
        if samples.len() < 2 || counts[0] == 0 || counts[1] == 0 {
            nodes[at] = leaf;
            continue;
        }
        let parent_entropy = entropy(counts[0], counts[1]);
        features.shuffle(rng);
        let mut best: Option<Candidate> = None;
        let mut scored = 0;
        for &f in &features {
            if scored == max_features {
                break;
            }
            if let Some(c) = best_split_on(x, classes, &samples, f, parent_entropy, counts) {
                scored += 1;
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            // every feature is constant over these samples
            nodes[at] = leaf;
            continue;
        };
        let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&s| x.get(s, split.feature) <= split.threshold);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { class: 0 });
        nodes.push(Node::Leaf { class: 0 });
        nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        stack.push((right, right_samples));
        stack.push((left, left_samples));
    }
    DecisionTree { nodes }
}
