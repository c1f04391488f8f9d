use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::aggregate::{normalize_forest, secure_aggregation, secure_vote_sum};
use super::{EncryptedSample, FederatedError, FederatedModel, LocalModelStore, ValidationSet};
use crate::crypto::{ct_add, ct_neg, ct_scalar_mul_i64, trivial, Ciphertext, ScaleTag, SystemParams};
use crate::forest::EncryptedForest;
use crate::protocols::{sadd, scom, smul, PartyId, ProtocolContext, ProtocolLog, Scope};

#[derive(Clone, Debug, PartialEq)]
pub struct DefenseConfig {
    /// Threshold on `Σ_k (y_k − ŷ_k)²` over the validation set, with `ŷ` the mean vote.
    pub theta: f64,
    /// Runs the per-island MSE pipelines on the rayon pool.
    pub parallel: bool,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        Self {
            theta: 80.0,
            parallel: false,
        }
    }
}

impl DefenseConfig {
    pub fn new(theta: f64) -> Result<Self, FederatedError> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(FederatedError::Malformed(format!("threshold must be positive, got {theta}")));
        }
        Ok(Self {
            theta,
            parallel: false,
        })
    }

    /// `ceil(Θ·t²)`, the threshold on vote-sum residuals of a `t`-tree forest.
    pub fn scaled_threshold(&self, trees: usize) -> i64 {
        let t = trees as f64;
        (self.theta * t * t).ceil() as i64
    }

    /// Both the summed squared residuals (at most `4t²` per sample) and the
    /// threshold must stay inside the plaintext domain.
    pub fn check_domain(&self, params: &SystemParams, trees: usize, validation_size: usize) -> Result<(), FederatedError> {
        let t = trees as i128;
        let worst = 4 * t * t * validation_size as i128;
        let bound = i128::from(params.domain_bound());
        if worst > bound || i128::from(self.scaled_threshold(trees)) > bound {
            return Err(FederatedError::Overflow(format!(
                "t = {trees}, |D_val| = {validation_size}, threshold = {}, bound = {bound}",
                self.scaled_threshold(trees)
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DefenseDecision {
    pub island: PartyId,
    pub index: usize,
    pub trees: usize,
    pub threshold: i64,
    /// Encrypted `Σ_k (t·y_k − Σ votes)²` under the common key.
    pub mse: Ciphertext,
    pub kept: bool,
    /// SHA-256 over the comparison session's message digests, when transcripts are on.
    pub scom_digest: Option<String>,
}

#[derive(Clone, Debug)]
pub struct DefenseOutcome {
    pub decisions: Vec<DefenseDecision>,
}

impl DefenseOutcome {
    pub fn kept(&self) -> Vec<usize> {
        self.decisions.iter().filter(|d| d.kept).map(|d| d.index).collect()
    }

    pub fn dropped(&self) -> Vec<usize> {
        self.decisions.iter().filter(|d| !d.kept).map(|d| d.index).collect()
    }

    /// CSV with one row per island. `mse` holds audit values at the mean-vote
    /// scale when the caller can provide them.
    pub fn report(&self, mse: &[Option<f64>]) -> String {
        let mut out = String::from("island,trees,threshold,kept,mse,scom_digest\n");
        for (i, d) in self.decisions.iter().enumerate() {
            let value = mse.get(i).copied().flatten().map(|v| format!("{v:.6}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                d.island,
                d.trees,
                d.threshold,
                if d.kept { "kept" } else { "dropped" },
                value,
                d.scom_digest.as_deref().unwrap_or("")
            ));
        }
        out
    }
}

/// `[[ (t·y − Σ votes)² ]]` for one validation sample.
pub fn secure_mse_sample(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    forest: &EncryptedForest,
    sample: &EncryptedSample,
    log: &mut ProtocolLog,
) -> Result<Ciphertext, FederatedError> {
    let params = ctx.params();
    let votes = secure_vote_sum(ctx, &scope.child("vote"), [forest], &sample.features, log)?;
    let scaled_label = ct_scalar_mul_i64(params, &sample.label, forest.trees.len() as i64);
    let mut session = ctx.open(&scope.child("residual"));
    let residual = sadd(&mut session, &scaled_label, &ct_neg(params, &votes))?;
    log.absorb(session.finish());
    let mut session = ctx.open(&scope.child("square"));
    let squared = smul(&mut session, &residual, &residual)?;
    log.absorb(session.finish());
    Ok(squared)
}

fn judge_island(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    index: usize,
    island: &PartyId,
    forest: &EncryptedForest,
    validation: &ValidationSet,
    config: &DefenseConfig,
) -> Result<(DefenseDecision, ProtocolLog), FederatedError> {
    let params = ctx.params();
    let mut log = ProtocolLog::new(ctx.mode);
    let scope = scope.index("island", index as u64);
    // Node weights are moved to the common key once instead of inside every comparison.
    let forest = normalize_forest(ctx, &scope.child("normalize"), forest, &mut log)?;
    let mut total: Option<Ciphertext> = None;
    for (k, sample) in validation.samples.iter().enumerate() {
        let term = secure_mse_sample(ctx, &scope.index("sample", k as u64), &forest, sample, &mut log)?;
        total = Some(match total {
            None => term,
            Some(acc) => ct_add(params, &acc, &term)?,
        });
    }
    let mse = total.ok_or_else(|| FederatedError::Malformed("empty validation set".into()))?;
    let trees = forest.trees.len();
    let threshold = config.scaled_threshold(trees);
    let threshold_ct = trivial(params, &ctx.common, threshold, ScaleTag::Unit);
    let mut session = ctx.open(&scope.child("decision"));
    let outcome = scom(&mut session, &mse, &threshold_ct)?;
    let session_log = session.finish();
    let scom_digest = (!session_log.records.is_empty()).then(|| {
        let mut h = Sha256::new();
        for r in &session_log.records {
            h.update(r.digest.as_bytes());
        }
        hex::encode(h.finalize())
    });
    log.absorb(session_log);
    Ok((
        DefenseDecision {
            island: island.clone(),
            index,
            trees,
            threshold,
            mse,
            kept: outcome.left_is_less(),
            scom_digest,
        },
        log,
    ))
}

/// Runs the encrypted MSE pipeline for every local model and compares each
/// total with its threshold. All protocol traffic goes to `log`.
pub fn judge_models(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    store: &LocalModelStore,
    validation: &ValidationSet,
    config: &DefenseConfig,
    log: &mut ProtocolLog,
) -> Result<DefenseOutcome, FederatedError> {
    if validation.is_empty() {
        return Err(FederatedError::Malformed("empty validation set".into()));
    }
    for (_, forest) in &store.entries {
        config.check_domain(ctx.params(), forest.trees.len(), validation.len())?;
    }
    let defense_scope = scope.child("defense");
    let judge = |(i, (island, forest)): (usize, &(PartyId, EncryptedForest))| {
        judge_island(ctx, &defense_scope, i, island, forest, validation, config)
    };
    let results: Vec<_> = if config.parallel {
        store.entries.par_iter().enumerate().map(judge).collect()
    } else {
        store.entries.iter().enumerate().map(judge).collect()
    };
    let mut decisions = Vec::with_capacity(results.len());
    for result in results {
        let (decision, island_log) = result?;
        log.merge(island_log);
        decisions.push(decision);
    }
    Ok(DefenseOutcome { decisions })
}

/// Aggregates the models the defense kept, or fails if it kept none.
pub fn aggregate_kept(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    store: &LocalModelStore,
    outcome: DefenseOutcome,
    log: &mut ProtocolLog,
) -> Result<(FederatedModel, DefenseOutcome), FederatedError> {
    let kept = outcome.kept();
    if kept.is_empty() {
        return Err(FederatedError::FederationEmpty {
            thresholds: outcome.decisions.iter().map(|d| d.threshold).collect(),
            islands: outcome.decisions.iter().map(|d| d.island.clone()).collect(),
            outcome: Box::new(outcome),
        });
    }
    let model = secure_aggregation(ctx, &scope.child("aggregation"), store, &kept, log)?;
    Ok((model, outcome))
}

/// Keeps every local model whose encrypted validation MSE is below its
/// threshold, then aggregates the kept ones.
///
/// Protocol traffic of the MSE and comparison steps goes to `defense_log`;
/// the key transformation of kept models goes to `aggregation_log`.
pub fn secure_defense(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    store: &LocalModelStore,
    validation: &ValidationSet,
    config: &DefenseConfig,
    defense_log: &mut ProtocolLog,
    aggregation_log: &mut ProtocolLog,
) -> Result<(FederatedModel, DefenseOutcome), FederatedError> {
    let outcome = judge_models(ctx, scope, store, validation, config, defense_log)?;
    aggregate_kept(ctx, scope, store, outcome, aggregation_log)
}
