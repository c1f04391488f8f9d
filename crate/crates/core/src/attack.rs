//! Label-flip poisoning: a fraction of the data islands clone part of their
//! shard and flip the clones' labels (`y -> -y`).

use std::fmt::Write as _;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::forest::Sample;

// Guards ceil/floor of products like 0.3 * 100 against representation error.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AttackError {
    #[error("clone fraction {0} must lie in (0, 1)")]
    BetaOutOfRange(f64),
    #[error("malicious fraction {0} must lie in [0, 1)")]
    AlphaOutOfRange(f64),
    #[error("data island {index} does not exist (n = {n})")]
    UnknownIsland { index: usize, n: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Explicit 0-based island indices; overrides random selection.
    pub malicious: Option<Vec<usize>>,
}

impl AttackConfig {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            malicious: None,
        }
    }
}

/// Per-island record of what was injected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardPoisoning {
    pub island: usize,
    pub clean_size: usize,
    pub injected: usize,
    /// Injected clones whose label became +1 (originally -1).
    pub flipped_to_positive: usize,
    pub flipped_to_negative: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoisonReport {
    pub alpha: f64,
    pub beta: f64,
    pub malicious: Vec<usize>,
    pub shards: Vec<ShardPoisoning>,
}

impl PoisonReport {
    pub fn none() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            malicious: Vec::new(),
            shards: Vec::new(),
        }
    }

    /// `key=value` lines: one header line, then one line per poisoned island.
    pub fn to_text(&self) -> String {
        let ids: Vec<String> = self.malicious.iter().map(|i| i.to_string()).collect();
        let mut out = format!(
            "attack alpha={} beta={} malicious=[{}]\n",
            self.alpha,
            self.beta,
            ids.join(",")
        );
        for s in &self.shards {
            writeln!(
                out,
                "island={} clean_size={} injected={} flipped_to_positive={} flipped_to_negative={}",
                s.island, s.clean_size, s.injected, s.flipped_to_positive, s.flipped_to_negative
            )
            .unwrap();
        }
        out
    }
}

pub fn malicious_count(n: usize, alpha: f64) -> usize {
    ((alpha * n as f64) + ROUNDING_SLACK).floor() as usize
}

pub fn injected_count(size: usize, beta: f64) -> usize {
    ((beta * size as f64) - ROUNDING_SLACK).ceil() as usize
}

/// `floor(α·n)` distinct island indices, sorted.
pub fn select_malicious<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Result<Vec<usize>, AttackError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(AttackError::AlphaOutOfRange(alpha));
    }
    let mut chosen = sample_indices(rng, n, malicious_count(n, alpha)).into_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Appends `ceil(β·|shard|)` label-flipped clones of distinct random samples.
pub fn poison_shard<R: Rng + ?Sized>(
    shard: &[Sample],
    beta: f64,
    rng: &mut R,
) -> Result<(Vec<Sample>, ShardPoisoning), AttackError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(AttackError::BetaOutOfRange(beta));
    }
    let count = injected_count(shard.len(), beta);
    let mut out = shard.to_vec();
    let mut report = ShardPoisoning {
        island: 0,
        clean_size: shard.len(),
        injected: count,
        flipped_to_positive: 0,
        flipped_to_negative: 0,
    };
    for i in sample_indices(rng, shard.len(), count).into_vec() {
        let source = &shard[i];
        let flipped = -source.label;
        if flipped == 1 {
            report.flipped_to_positive += 1;
        } else {
            report.flipped_to_negative += 1;
        }
        out.push(Sample {
            features: source.features.clone(),
            label: flipped,
        });
    }
    Ok((out, report))
}

/// Poisons the selected islands' shards in place.
pub fn apply_attack<R: Rng + ?Sized>(
    shards: &mut [Vec<Sample>],
    config: &AttackConfig,
    rng: &mut R,
) -> Result<PoisonReport, AttackError> {
    let n = shards.len();
    let malicious = match &config.malicious {
        Some(ids) => {
            if let Some(&index) = ids.iter().find(|&&i| i >= n) {
                return Err(AttackError::UnknownIsland { index, n });
            }
            let mut ids = ids.clone();
            ids.sort_unstable();
            ids.dedup();
            ids
        }
        None => select_malicious(n, config.alpha, rng)?,
    };
    let mut report = PoisonReport {
        alpha: config.alpha,
        beta: config.beta,
        malicious: malicious.clone(),
        shards: Vec::new(),
    };
    for &island in &malicious {
        let (poisoned, mut record) = poison_shard(&shards[island], config.beta, rng)?;
        record.island = island;
        shards[island] = poisoned;
        report.shards.push(record);
    }
    Ok(report)
}
