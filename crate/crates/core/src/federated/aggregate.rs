use std::borrow::Cow;

use super::{FederatedError, FederatedModel, LocalModelStore};
use crate::crypto::{ct_add, Ciphertext};
use crate::forest::{EncryptedForest, EncryptedNode, EncryptedTree};
use crate::protocols::{scom, stra, ProtocolContext, ProtocolLog, Scope};

/// Transforms every node weight of `forest` to the common key, one STRA
/// session per node not already under it.
pub fn normalize_forest(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    forest: &EncryptedForest,
    log: &mut ProtocolLog,
) -> Result<EncryptedForest, FederatedError> {
    let mut trees = Vec::with_capacity(forest.trees.len());
    for (t, tree) in forest.trees.iter().enumerate() {
        let tree_scope = scope.index("tree", t as u64);
        let mut nodes = Vec::with_capacity(tree.len());
        for (j, node) in tree.nodes().iter().enumerate() {
            let weight = node.weight();
            if weight.key == ctx.common {
                nodes.push(node.clone());
                continue;
            }
            let mut session = ctx.open(&tree_scope.index("node", j as u64));
            let moved = stra(&mut session, weight, &ctx.common)?;
            log.absorb(session.finish());
            nodes.push(node.with_weight(moved));
        }
        trees.push(EncryptedTree::from_nodes(nodes)?);
    }
    Ok(EncryptedForest {
        key: ctx.common.clone(),
        trees,
    })
}

/// Brings the chosen local forests under the common key, in store order.
pub fn secure_aggregation(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    store: &LocalModelStore,
    include: &[usize],
    log: &mut ProtocolLog,
) -> Result<FederatedModel, FederatedError> {
    let mut forests = Vec::with_capacity(include.len());
    let mut contributors = Vec::with_capacity(include.len());
    for &i in include {
        let (island, forest) = store
            .entries
            .get(i)
            .ok_or_else(|| FederatedError::Malformed(format!("no local model {i}")))?;
        forests.push(normalize_forest(ctx, &scope.index("island", i as u64), forest, log)?);
        contributors.push(island.clone());
    }
    Ok(FederatedModel { forests, contributors })
}

/// Walks one encrypted tree with SCOM at every split (left iff feature <
/// threshold) and returns the leaf label under the common key.
pub fn secure_prediction(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    tree: &EncryptedTree,
    features: &[Ciphertext],
    log: &mut ProtocolLog,
) -> Result<Ciphertext, FederatedError> {
    let nodes = tree.nodes();
    let mut i = 0;
    loop {
        match &nodes[i] {
            EncryptedNode::Leaf { label } => {
                if label.key == ctx.common {
                    return Ok(label.clone());
                }
                let mut session = ctx.open(&scope.child("leaf"));
                let moved = stra(&mut session, label, &ctx.common)?;
                log.absorb(session.finish());
                return Ok(moved);
            }
            EncryptedNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let value = features.get(*feature).ok_or_else(|| {
                    FederatedError::Malformed(format!("split on feature {feature} but sample has {}", features.len()))
                })?;
                let mut session = ctx.open(&scope.index("node", i as u64));
                let outcome = scom(&mut session, value, threshold)?;
                log.absorb(session.finish());
                i = if outcome.left_is_less() { *left } else { *right };
            }
        }
    }
}

/// Homomorphic sum of every tree's vote.
pub fn secure_vote_sum<'f>(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    forests: impl IntoIterator<Item = &'f EncryptedForest>,
    features: &[Ciphertext],
    log: &mut ProtocolLog,
) -> Result<Ciphertext, FederatedError> {
    let mut sum: Option<Ciphertext> = None;
    for (f, forest) in forests.into_iter().enumerate() {
        let forest_scope = scope.index("forest", f as u64);
        for (t, tree) in forest.trees.iter().enumerate() {
            let vote = secure_prediction(ctx, &forest_scope.index("tree", t as u64), tree, features, log)?;
            sum = Some(match sum {
                None => vote,
                Some(acc) => ct_add(ctx.params(), &acc, &vote)?,
            });
        }
    }
    sum.ok_or(FederatedError::EmptyModel)
}

pub(crate) fn normalized<'c>(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    values: &'c [Ciphertext],
    log: &mut ProtocolLog,
) -> Result<Cow<'c, [Ciphertext]>, FederatedError> {
    if values.iter().all(|c| c.key == ctx.common) {
        return Ok(Cow::Borrowed(values));
    }
    let mut out = Vec::with_capacity(values.len());
    for (i, c) in values.iter().enumerate() {
        if c.key == ctx.common {
            out.push(c.clone());
            continue;
        }
        let mut session = ctx.open(&scope.index("feature", i as u64));
        out.push(stra(&mut session, c, &ctx.common)?);
        log.absorb(session.finish());
    }
    Ok(Cow::Owned(out))
}
