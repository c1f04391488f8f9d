use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::{DecisionTree, ForestError, RandomForest, Sample, TreeNode};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainConfig {
    pub trees: usize,
    /// Maximum number of splits on any root-to-leaf path.
    pub max_height: usize,
    /// Features drawn per split; `None` means `ceil(sqrt(features))`.
    pub candidate_features: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            trees: 30,
            max_height: 4,
            candidate_features: None,
        }
    }
}

impl TrainConfig {
    pub fn candidates_for(&self, features: usize) -> usize {
        self.candidate_features
            .unwrap_or_else(|| (features as f64).sqrt().ceil() as usize)
            .clamp(1, features.max(1))
    }
}

fn check_shard(data: &[Sample]) -> Result<usize, ForestError> {
    let first = data.first().ok_or(ForestError::EmptyShard)?;
    let width = first.features.len();
    for s in data {
        if s.features.len() != width {
            return Err(ForestError::FeatureCount {
                expected: width,
                found: s.features.len(),
            });
        }
        if s.label != 1 && s.label != -1 {
            return Err(ForestError::BadLabel(s.label));
        }
    }
    Ok(width)
}

/// CART on exactly the given samples (no resampling).
pub fn train_tree<R: Rng + ?Sized>(
    data: &[Sample],
    max_height: usize,
    candidates: usize,
    rng: &mut R,
) -> Result<DecisionTree, ForestError> {
    let width = check_shard(data)?;
    let mut builder = Builder {
        data,
        width,
        max_height,
        candidates: candidates.clamp(1, width.max(1)),
        rng,
        nodes: Vec::new(),
    };
    builder.grow((0..data.len()).collect(), 0);
    DecisionTree::from_nodes(builder.nodes)
}

/// `config.trees` trees, each on a bootstrap resample of the shard's size.
pub fn train_forest<R: Rng + ?Sized>(
    data: &[Sample],
    config: &TrainConfig,
    rng: &mut R,
) -> Result<RandomForest, ForestError> {
    let width = check_shard(data)?;
    let candidates = config.candidates_for(width);
    let mut trees = Vec::with_capacity(config.trees);
    for _ in 0..config.trees {
        let resample: Vec<Sample> = (0..data.len()).map(|_| data[rng.gen_range(0..data.len())].clone()).collect();
        trees.push(train_tree(&resample, config.max_height, candidates, rng)?);
    }
    Ok(RandomForest::new(trees))
}

struct Builder<'a, R: ?Sized> {
    data: &'a [Sample],
    width: usize,
    max_height: usize,
    candidates: usize,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
}

struct Split {
    feature: usize,
    threshold: i64,
    impurity: f64,
}

impl<R: Rng + ?Sized> Builder<'_, R> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let positives = idx.iter().filter(|&&i| self.data[i].label == 1).count();
        let negatives = idx.len() - positives;
        let label = if positives >= negatives { 1 } else { -1 };
        self.nodes.push(TreeNode::Leaf { label });
        if positives == 0 || negatives == 0 || idx.len() < 2 || depth >= self.max_height {
            return at;
        }
        let Some(split) = self.best_split(&idx) else {
            return at;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.data[i].features[split.feature] < split.threshold);
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        self.nodes[at] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }

    /// Best Gini split over a random feature subset; if every drawn feature is
    /// constant on this node, the remaining features are tried in order.
    fn best_split(&mut self, idx: &[usize]) -> Option<Split> {
        let drawn = sample_indices(self.rng, self.width, self.candidates).into_vec();
        let best = self.best_among(idx, drawn.iter().copied());
        if best.is_some() {
            return best;
        }
        let rest = (0..self.width).filter(|f| !drawn.contains(f));
        self.best_among(idx, rest)
    }

    fn best_among(&self, idx: &[usize], features: impl Iterator<Item = usize>) -> Option<Split> {
        let mut best: Option<Split> = None;
        for feature in features {
            if let Some(candidate) = self.best_threshold(idx, feature) {
                if best.as_ref().is_none_or(|b| candidate.impurity < b.impurity) {
                    best = Some(candidate);
                }
            }
        }
        best
    }

    fn best_threshold(&self, idx: &[usize], feature: usize) -> Option<Split> {
        let mut column: Vec<(i64, i8)> =
            idx.iter().map(|&i| (self.data[i].features[feature], self.data[i].label)).collect();
        column.sort_unstable();
        let n = column.len();
        let total_pos = column.iter().filter(|(_, y)| *y == 1).count();
        let mut left_pos = 0;
        let mut best: Option<Split> = None;
        for i in 0..n - 1 {
            if column[i].1 == 1 {
                left_pos += 1;
            }
            let (a, b) = (column[i].0, column[i + 1].0);
            if a == b {
                continue;
            }
            let left_n = i + 1;
            let impurity = weighted_gini(left_pos, left_n, total_pos - left_pos, n - left_n);
            if best.as_ref().is_none_or(|s| impurity < s.impurity) {
                best = Some(Split {
                    feature,
                    threshold: midpoint_above(a, b),
                    impurity,
                });
            }
        }
        best
    }
}

/// Sum over both sides of `size · gini`; smaller is better.
fn weighted_gini(left_pos: usize, left_n: usize, right_pos: usize, right_n: usize) -> f64 {
    let side = |pos: usize, n: usize| {
        let p = pos as f64 / n as f64;
        n as f64 * 2.0 * p * (1.0 - p)
    };
    side(left_pos, left_n) + side(right_pos, right_n)
}

/// `ceil((a + b) / 2)` for `a < b`, so `a < threshold <= b`.
fn midpoint_above(a: i64, b: i64) -> i64 {
    let sum = a + b;
    sum.div_euclid(2) + sum.rem_euclid(2)
}
