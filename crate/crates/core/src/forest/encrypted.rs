use rand::RngCore;

use super::{check_topology, DecisionTree, ForestError, RandomForest, TreeNode};
use crate::crypto::{enc, Ciphertext, KeyId, PlainScalar, PublicKey, SystemParams};

/// Same topology and feature indices as the source; split thresholds are
/// encrypted at the scaled tag and leaf labels at the unit tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncryptedNode {
    Split {
        feature: usize,
        threshold: Ciphertext,
        left: usize,
        right: usize,
    },
    Leaf {
        label: Ciphertext,
    },
}

impl EncryptedNode {
    pub fn weight(&self) -> &Ciphertext {
        match self {
            EncryptedNode::Split { threshold, .. } => threshold,
            EncryptedNode::Leaf { label } => label,
        }
    }

    /// The node with its weight replaced, e.g. after a key transformation.
    pub fn with_weight(&self, weight: Ciphertext) -> Self {
        match self {
            EncryptedNode::Split {
                feature, left, right, ..
            } => EncryptedNode::Split {
                feature: *feature,
                threshold: weight,
                left: *left,
                right: *right,
            },
            EncryptedNode::Leaf { .. } => EncryptedNode::Leaf { label: weight },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedTree {
    nodes: Vec<EncryptedNode>,
}

impl EncryptedTree {
    pub fn from_nodes(nodes: Vec<EncryptedNode>) -> Result<Self, ForestError> {
        check_topology(nodes.len(), |i| match nodes[i] {
            EncryptedNode::Split { left, right, .. } => Some((left, right)),
            EncryptedNode::Leaf { .. } => None,
        })?;
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[EncryptedNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Rebuilds the plaintext tree given a decryption function.
    pub fn decrypt_with<E>(
        &self,
        mut decrypt: impl FnMut(&Ciphertext) -> Result<i64, E>,
    ) -> Result<DecisionTree, ForestError>
    where
        ForestError: From<E>,
    {
        let nodes = self
            .nodes
            .iter()
            .map(|node| {
                Ok(match node {
                    EncryptedNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => TreeNode::Split {
                        feature: *feature,
                        threshold: decrypt(threshold)?,
                        left: *left,
                        right: *right,
                    },
                    EncryptedNode::Leaf { label } => {
                        let value = decrypt(label)?;
                        TreeNode::Leaf {
                            label: i8::try_from(value)
                                .map_err(|_| ForestError::Malformed(format!("leaf decrypts to {value}")))?,
                        }
                    }
                })
            })
            .collect::<Result<Vec<_>, ForestError>>()?;
        DecisionTree::from_nodes(nodes)
    }
}

/// A DI's forest with every weight under one key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedForest {
    pub key: KeyId,
    pub trees: Vec<EncryptedTree>,
}

impl EncryptedForest {
    pub fn node_count(&self) -> usize {
        self.trees.iter().map(EncryptedTree::len).sum()
    }

    pub fn decrypt_with<E>(
        &self,
        mut decrypt: impl FnMut(&Ciphertext) -> Result<i64, E>,
    ) -> Result<RandomForest, ForestError>
    where
        ForestError: From<E>,
    {
        let trees = self
            .trees
            .iter()
            .map(|t| t.decrypt_with(&mut decrypt))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RandomForest::new(trees))
    }
}

pub fn encrypt_tree<R: RngCore + ?Sized>(
    params: &SystemParams,
    tree: &DecisionTree,
    pk: &PublicKey,
    rng: &mut R,
) -> Result<EncryptedTree, ForestError> {
    let nodes = tree
        .nodes()
        .iter()
        .map(|node| {
            Ok(match *node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => EncryptedNode::Split {
                    feature,
                    threshold: enc(params, pk, PlainScalar::scaled(threshold), rng)?,
                    left,
                    right,
                },
                TreeNode::Leaf { label } => EncryptedNode::Leaf {
                    label: enc(params, pk, PlainScalar::unit(i64::from(label)), rng)?,
                },
            })
        })
        .collect::<Result<Vec<_>, ForestError>>()?;
    EncryptedTree::from_nodes(nodes)
}

pub fn encrypt_forest<R: RngCore + ?Sized>(
    params: &SystemParams,
    forest: &RandomForest,
    pk: &PublicKey,
    rng: &mut R,
) -> Result<EncryptedForest, ForestError> {
    let trees = forest
        .trees
        .iter()
        .map(|t| encrypt_tree(params, t, pk, rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EncryptedForest {
        key: pk.id.clone(),
        trees,
    })
}
