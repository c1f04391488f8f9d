//! The all-plaintext twin of the encrypted pipeline, used to check it.

use super::experiment::{prepare_local, ExperimentConfig, LocalStage};
use super::metrics::{compute_metrics, Confusion};
use super::HarnessError;
use crate::federated::DefenseConfig;
use crate::forest::{class_of_vote_sum, RandomForest, Sample};

/// `Σ_k (t·y_k − Σ votes)²`, the quantity the defense computes under encryption.
pub fn scaled_validation_error(forest: &RandomForest, validation: &[Sample]) -> i64 {
    let t = forest.trees.len() as i64;
    validation
        .iter()
        .map(|s| {
            let r = t * i64::from(s.label) - forest.vote(&s.features).vote_sum;
            r * r
        })
        .sum()
}

/// `Σ_k (y_k − mean vote)²`.
pub fn validation_mse(forest: &RandomForest, validation: &[Sample]) -> f64 {
    let t = forest.trees.len() as f64;
    scaled_validation_error(forest, validation) as f64 / (t * t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleOutcome {
    pub kept: Vec<usize>,
    pub vote_sums: Vec<i64>,
    pub predictions: Vec<i8>,
}

/// Trim by plaintext MSE against the same integer threshold (when `defense`
/// is given), take the union of the kept forests, and classify by vote sign.
pub fn plaintext_pipeline(
    forests: &[RandomForest],
    validation: &[Sample],
    test: &[Sample],
    defense: Option<&DefenseConfig>,
) -> OracleOutcome {
    let kept: Vec<usize> = (0..forests.len())
        .filter(|&i| match defense {
            Some(config) => {
                scaled_validation_error(&forests[i], validation) < config.scaled_threshold(forests[i].trees.len())
            }
            None => true,
        })
        .collect();
    let union = RandomForest::union(kept.iter().map(|&i| &forests[i]));
    let vote_sums: Vec<i64> = test.iter().map(|s| union.vote(&s.features).vote_sum).collect();
    let predictions = vote_sums.iter().map(|&v| class_of_vote_sum(v)).collect();
    OracleOutcome {
        kept,
        vote_sums,
        predictions,
    }
}

/// Plaintext result of an experiment configuration, without keys or encryption.
#[derive(Clone, Debug)]
pub struct ReferenceRun {
    pub stage: LocalStage,
    pub oracle: OracleOutcome,
    pub confusion: Confusion,
    /// `Σ_k (y_k − mean vote)²` per island.
    pub mse: Vec<f64>,
}

/// Same split, attack and training as [`run_experiment`](super::run_experiment),
/// then the plaintext pipeline in place of the encrypted one.
pub fn plaintext_reference(config: &ExperimentConfig) -> Result<ReferenceRun, HarnessError> {
    let stage = prepare_local(config)?;
    let defense = config.defense.then_some(DefenseConfig {
        theta: config.theta,
        parallel: false,
    });
    let oracle = plaintext_pipeline(&stage.forests, &stage.split.validation, &stage.split.test, defense.as_ref());
    let truth: Vec<i8> = stage.split.test.iter().map(|s| s.label).collect();
    let confusion = compute_metrics(&oracle.predictions, &truth);
    let mse = stage.forests.iter().map(|f| validation_mse(f, &stage.split.validation)).collect();
    Ok(ReferenceRun {
        stage,
        oracle,
        confusion,
        mse,
    })
}
