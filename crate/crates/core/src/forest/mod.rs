//! Plaintext random forests: CART training on a local shard, prediction by
//! vote sum, node-wise encryption, and a line-oriented text format.
//!
//! Feature values and split thresholds are integers at the fixed-point scale
//! used for encryption, so plaintext and encrypted traversal compare exactly
//! the same numbers. A split sends a sample left iff `x[feature] < threshold`.

mod encrypted;
mod train;

use std::fmt::Write as _;

pub use encrypted::{encrypt_forest, encrypt_tree, EncryptedForest, EncryptedNode, EncryptedTree};
pub use train::{train_forest, train_tree, TrainConfig};

use crate::crypto::CryptoError;

#[derive(Debug, thiserror::Error)]
pub enum ForestError {
    #[error("cannot train on an empty shard")]
    EmptyShard,
    #[error("sample has {found} features, expected {expected}")]
    FeatureCount { expected: usize, found: usize },
    #[error("label {0} is not -1 or +1")]
    BadLabel(i8),
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// One record: fixed-point features and a label in {-1, +1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub features: Vec<i64>,
    pub label: i8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: i64,
        left: usize,
        right: usize,
    },
    Leaf {
        label: i8,
    },
}

/// Nodes in preorder with the root at index 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Checks that children exist, come after their parent, and that every
    /// node is reachable exactly once.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self, ForestError> {
        for node in &nodes {
            if let TreeNode::Leaf { label } = node {
                if *label != 1 && *label != -1 {
                    return Err(ForestError::BadLabel(*label));
                }
            }
        }
        check_topology(nodes.len(), |i| match nodes[i] {
            TreeNode::Split { left, right, .. } => Some((left, right)),
            TreeNode::Leaf { .. } => None,
        })?;
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Split { .. })).count()
    }

    /// Longest root-to-leaf path, counted in splits.
    pub fn height(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Vote in {-1, +1}.
    pub fn predict(&self, features: &[i64]) -> i8 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { label } => return label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if features[feature] < threshold { left } else { right },
            }
        }
    }

    /// Indices of the nodes visited for `features`, root first.
    pub fn path(&self, features: &[i64]) -> Vec<usize> {
        let mut out = vec![0];
        let mut i = 0;
        while let TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } = self.nodes[i]
        {
            i = if features[feature] < threshold { left } else { right };
            out.push(i);
        }
        out
    }
}

/// Shared structural validation for plaintext and encrypted trees.
pub(crate) fn check_topology(
    len: usize,
    children: impl Fn(usize) -> Option<(usize, usize)>,
) -> Result<(), ForestError> {
    if len == 0 {
        return Err(ForestError::Malformed("tree has no nodes".into()));
    }
    let mut seen = vec![false; len];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut visited = 0;
    while let Some(i) = stack.pop() {
        visited += 1;
        if let Some((l, r)) = children(i) {
            for c in [l, r] {
                if c >= len {
                    return Err(ForestError::Malformed(format!("node {i} points to missing node {c}")));
                }
                if c <= i || seen[c] {
                    return Err(ForestError::Malformed(format!("node {c} reached twice or before its parent")));
                }
                seen[c] = true;
                stack.push(c);
            }
        }
    }
    if visited != len {
        return Err(ForestError::Malformed(format!("{} unreachable nodes", len - visited)));
    }
    Ok(())
}

/// Vote sum of a forest and the class it implies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForestVote {
    pub vote_sum: i64,
    pub trees: usize,
}

impl ForestVote {
    /// `+1` iff the mean vote is `>= 0`; the sign of the sum decides it.
    pub fn class(self) -> i8 {
        class_of_vote_sum(self.vote_sum)
    }

    pub fn mean(self) -> f64 {
        self.vote_sum as f64 / self.trees as f64
    }
}

pub fn class_of_vote_sum(vote_sum: i64) -> i8 {
    if vote_sum >= 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn new(trees: Vec<DecisionTree>) -> Self {
        Self { trees }
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(DecisionTree::len).sum()
    }

    pub fn vote(&self, features: &[i64]) -> ForestVote {
        ForestVote {
            vote_sum: self.trees.iter().map(|t| i64::from(t.predict(features))).sum(),
            trees: self.trees.len(),
        }
    }

    pub fn predict(&self, features: &[i64]) -> i8 {
        self.vote(features).class()
    }

    /// Union of several forests, in order; the federated model's plaintext twin.
    pub fn union<'a>(forests: impl IntoIterator<Item = &'a RandomForest>) -> Self {
        Self {
            trees: forests.into_iter().flat_map(|f| f.trees.iter().cloned()).collect(),
        }
    }

    /// One line per node: `index split feature threshold left right` or
    /// `index leaf label`, each tree introduced by `tree <i> nodes <count>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, tree) in self.trees.iter().enumerate() {
            writeln!(out, "tree {t} nodes {}", tree.len()).unwrap();
            for (i, node) in tree.nodes.iter().enumerate() {
                match node {
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => writeln!(out, "{i} split {feature} {threshold} {left} {right}").unwrap(),
                    TreeNode::Leaf { label } => writeln!(out, "{i} leaf {label}").unwrap(),
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ForestError> {
        let bad = |line: &str| ForestError::Malformed(format!("cannot parse line {line:?}"));
        let mut trees = Vec::new();
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        while let Some(header) = lines.next() {
            let parts: Vec<&str> = header.split_whitespace().collect();
            let count: usize = match parts.as_slice() {
                ["tree", _, "nodes", n] => n.parse().map_err(|_| bad(header))?,
                _ => return Err(bad(header)),
            };
            let mut nodes = Vec::with_capacity(count);
            for expected in 0..count {
                let line = lines.next().ok_or_else(|| ForestError::Malformed("truncated tree".into()))?;
                let parts: Vec<&str> = line.split_whitespace().collect();
                let index: usize = parts.first().and_then(|p| p.parse().ok()).ok_or_else(|| bad(line))?;
                if index != expected {
                    return Err(bad(line));
                }
                let node = match parts[1..] {
                    ["split", f, w, l, r] => TreeNode::Split {
                        feature: f.parse().map_err(|_| bad(line))?,
                        threshold: w.parse().map_err(|_| bad(line))?,
                        left: l.parse().map_err(|_| bad(line))?,
                        right: r.parse().map_err(|_| bad(line))?,
                    },
                    ["leaf", c] => TreeNode::Leaf {
                        label: c.parse().map_err(|_| bad(line))?,
                    },
                    _ => return Err(bad(line)),
                };
                nodes.push(node);
            }
            trees.push(DecisionTree::from_nodes(nodes)?);
        }
        Ok(Self { trees })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(threshold: i64) -> DecisionTree {
        DecisionTree::from_nodes(vec![
            TreeNode::Split {
                feature: 0,
                threshold,
                left: 1,
                right: 2,
            },
            TreeNode::Leaf { label: -1 },
            TreeNode::Leaf { label: 1 },
        ])
        .unwrap()
    }

    #[test]
    fn strictly_less_goes_left() {
        let t = stump(5);
        assert_eq!(t.predict(&[4]), -1);
        assert_eq!(t.predict(&[5]), 1);
        assert_eq!(t.path(&[5]), vec![0, 2]);
    }

    #[test]
    fn tied_vote_is_positive() {
        let f = RandomForest::new(vec![stump(5), stump(10)]);
        let v = f.vote(&[7]);
        assert_eq!(v.vote_sum, 0);
        assert_eq!(v.class(), 1);
        assert_eq!(v.mean(), 0.0);
    }

    #[test]
    fn constant_forest_predicts_its_leaf() {
        let leaf = DecisionTree::from_nodes(vec![TreeNode::Leaf { label: 1 }]).unwrap();
        let f = RandomForest::new(vec![leaf.clone(), leaf.clone(), leaf]);
        assert_eq!(f.vote(&[0]).mean(), 1.0);
        assert_eq!(f.predict(&[0]), 1);
    }

    #[test]
    fn rejects_dangling_and_shared_children() {
        let dangling = vec![
            TreeNode::Split {
                feature: 0,
                threshold: 1,
                left: 1,
                right: 7,
            },
            TreeNode::Leaf { label: 1 },
        ];
        assert!(matches!(DecisionTree::from_nodes(dangling), Err(ForestError::Malformed(_))));
        let shared = vec![
            TreeNode::Split {
                feature: 0,
                threshold: 1,
                left: 1,
                right: 1,
            },
            TreeNode::Leaf { label: 1 },
        ];
        assert!(DecisionTree::from_nodes(shared).is_err());
        assert!(matches!(
            DecisionTree::from_nodes(vec![TreeNode::Leaf { label: 0 }]),
            Err(ForestError::BadLabel(0))
        ));
    }

    #[test]
    fn text_roundtrip() {
        let f = RandomForest::new(vec![stump(-3), DecisionTree::from_nodes(vec![TreeNode::Leaf { label: -1 }]).unwrap()]);
        let text = f.to_text();
        assert!(text.contains("0 split 0 -3 1 2"));
        assert_eq!(RandomForest::from_text(&text).unwrap(), f);
        assert!(RandomForest::from_text("tree 0 nodes 2\n0 leaf 1\n").is_err());
    }
}
