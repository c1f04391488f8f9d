//! CP's pipeline over encrypted forests: key transformation of local models,
//! the validation-MSE defense, encrypted traversal and diagnosis.
//!
//! Vote sums are never divided by the tree count. The defense compares
//! `Σ_k (t·y_k − Σ votes)²` with `ceil(Θ·t²)`, which orders models exactly as the
//! mean-vote MSE compared with `Θ` does, and the diagnosis class is the sign of
//! the vote sum.

mod aggregate;
mod defense;
mod diagnosis;

pub use aggregate::{normalize_forest, secure_aggregation, secure_prediction, secure_vote_sum};
pub use defense::{aggregate_kept, judge_models, secure_defense, secure_mse_sample, DefenseConfig, DefenseDecision, DefenseOutcome};
pub use diagnosis::{diagnose, encrypt_request, reveal_result, DiagnosisRequest, DiagnosisResult, RevealedClass};

use rand::RngCore;

use crate::crypto::{enc, Ciphertext, CryptoError, KeyId, PlainScalar, PublicKey, SystemParams};
use crate::forest::{EncryptedForest, ForestError, Sample};
use crate::protocols::{PartyId, ProtocolError};

#[derive(Debug, thiserror::Error)]
pub enum FederatedError {
    #[error("every local model was rejected by the defense (islands {islands:?}, thresholds {thresholds:?})")]
    FederationEmpty {
        islands: Vec<PartyId>,
        thresholds: Vec<i64>,
        /// Carries the encrypted MSE values for callers able to audit them.
        outcome: Box<DefenseOutcome>,
    },
    #[error("the federated model has no trees")]
    EmptyModel,
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("configuration would overflow the plaintext domain: {0}")]
    Overflow(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Encrypted local forests, one per data island, each under its owner's key.
#[derive(Clone, Debug, Default)]
pub struct LocalModelStore {
    pub entries: Vec<(PartyId, EncryptedForest)>,
}

impl LocalModelStore {
    pub fn push(&mut self, island: PartyId, forest: EncryptedForest) {
        self.entries.push((island, forest));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Forests under the common key and the islands that contributed them.
#[derive(Clone, Debug)]
pub struct FederatedModel {
    pub forests: Vec<EncryptedForest>,
    pub contributors: Vec<PartyId>,
}

impl FederatedModel {
    pub fn tree_count(&self) -> usize {
        self.forests.iter().map(|f| f.trees.len()).sum()
    }

    pub fn node_count(&self) -> usize {
        self.forests.iter().map(EncryptedForest::node_count).sum()
    }
}

/// A sample with fixed-point features (scaled tag) and a unit-tag label.
#[derive(Clone, Debug)]
pub struct EncryptedSample {
    pub features: Vec<Ciphertext>,
    pub label: Ciphertext,
}

/// Validation records under the common key.
#[derive(Clone, Debug)]
pub struct ValidationSet {
    pub key: KeyId,
    pub samples: Vec<EncryptedSample>,
}

impl ValidationSet {
    pub fn encrypt<R: RngCore + ?Sized>(
        params: &SystemParams,
        pk: &PublicKey,
        samples: &[Sample],
        rng: &mut R,
    ) -> Result<Self, FederatedError> {
        let samples = samples
            .iter()
            .map(|s| {
                let features = s
                    .features
                    .iter()
                    .map(|&v| enc(params, pk, PlainScalar::scaled(v), rng))
                    .collect::<Result<Vec<_>, _>>()?;
                let label = enc(params, pk, PlainScalar::unit(i64::from(s.label)), rng)?;
                Ok(EncryptedSample { features, label })
            })
            .collect::<Result<Vec<_>, FederatedError>>()?;
        Ok(Self {
            key: pk.id.clone(),
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
