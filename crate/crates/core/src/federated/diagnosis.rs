use rand::RngCore;

use super::aggregate::{normalized, secure_vote_sum};
use super::{FederatedError, FederatedModel};
use crate::crypto::{enc, sdec, wdec, Ciphertext, PartialDecryption, PlainScalar, PublicKey, ScaleTag, SystemParams, TrapdoorShare};
use crate::forest::class_of_vote_sum;
use crate::protocols::{ProtocolContext, ProtocolLog, Scope};

/// A diagnosis request: fixed-point features encrypted under the user's key.
#[derive(Clone, Debug)]
pub struct DiagnosisRequest {
    pub features: Vec<Ciphertext>,
}

pub fn encrypt_request<R: RngCore + ?Sized>(
    params: &SystemParams,
    pk_user: &PublicKey,
    features: &[i64],
    rng: &mut R,
) -> Result<DiagnosisRequest, FederatedError> {
    let features = features
        .iter()
        .map(|&v| enc(params, pk_user, PlainScalar::scaled(v), rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DiagnosisRequest { features })
}

/// Encrypted vote sum under the common key with CP's partial decryption attached.
#[derive(Clone, Debug)]
pub struct DiagnosisResult {
    pub vote_sum: Ciphertext,
    pub cp_partial: PartialDecryption,
    pub trees: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RevealedClass {
    pub vote_sum: i64,
    pub class: i8,
}

/// Runs every tree of the federated model on the request and sums the votes.
pub fn diagnose(
    ctx: &ProtocolContext<'_>,
    scope: &Scope,
    model: &FederatedModel,
    request: &DiagnosisRequest,
    log: &mut ProtocolLog,
) -> Result<DiagnosisResult, FederatedError> {
    if model.tree_count() == 0 {
        return Err(FederatedError::EmptyModel);
    }
    let features = normalized(ctx, &scope.child("request"), &request.features, log)?;
    let vote_sum = secure_vote_sum(ctx, &scope.child("vote"), &model.forests, &features, log)?;
    let cp_partial = sdec(ctx.params(), ctx.initiator.share(&ctx.common)?, &vote_sum)?;
    Ok(DiagnosisResult {
        vote_sum,
        cp_partial,
        trees: model.tree_count(),
    })
}

/// The user's side: completes the joint decryption and thresholds at zero.
pub fn reveal_result(
    params: &SystemParams,
    result: &DiagnosisResult,
    share: &TrapdoorShare,
) -> Result<RevealedClass, FederatedError> {
    let own = sdec(params, share, &result.vote_sum)?;
    let vote_sum = wdec(params, &result.cp_partial, &own, ScaleTag::Unit)?.value;
    if vote_sum.unsigned_abs() > result.trees as u64 {
        return Err(FederatedError::Malformed(format!(
            "vote sum {vote_sum} exceeds the tree count {}",
            result.trees
        )));
    }
    Ok(RevealedClass {
        vote_sum,
        class: class_of_vote_sum(vote_sum),
    })
}
