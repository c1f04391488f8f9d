use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::dataset::load_named;
use super::metrics::{compute_metrics, Confusion};
use super::parties::{island_key, Federation, FederationConfig, Role};
use super::split::{split_dataset, DataSplit};
use super::HarnessError;
use crate::attack::{apply_attack, AttackConfig, PoisonReport};
use crate::crypto::{DEFAULT_BLIND_BITS, DEFAULT_DOMAIN_BITS, DEFAULT_SCALE};
use crate::federated::{
    aggregate_kept, diagnose, encrypt_request, judge_models, reveal_result, secure_aggregation, DefenseConfig, DefenseOutcome,
    FederatedModel, LocalModelStore, ValidationSet,
};
use crate::forest::{encrypt_forest, train_forest, RandomForest, Sample, TrainConfig};
use crate::protocols::{PartyId, ProtocolCounters, ProtocolLog, Scope, TranscriptMode};
use crate::rng::RngStream;

/// The `data/` directory of this source tree.
pub fn default_data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data"))
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub data_dir: PathBuf,
    pub islands: usize,
    /// Records per island; falls back to the schema's value, then 100.
    pub shard_size: Option<usize>,
    pub trees: usize,
    pub height: usize,
    pub key_bits: u32,
    pub scale: i64,
    pub validation_size: usize,
    /// Test on a random subset of the holdout instead of all of it.
    pub test_size: Option<usize>,
    pub theta: f64,
    pub attack: Option<AttackConfig>,
    pub defense: bool,
    pub seed: u64,
    pub transcript: TranscriptMode,
    pub parallel: bool,
    /// Island (0-based) that answers for the common key during the defense.
    pub defense_helper: usize,
}

impl ExperimentConfig {
    pub fn new(dataset: &str) -> Self {
        Self {
            dataset: dataset.to_string(),
            data_dir: default_data_dir(),
            islands: 3,
            shard_size: None,
            trees: 30,
            height: 4,
            key_bits: 512,
            scale: DEFAULT_SCALE,
            validation_size: 100,
            test_size: None,
            theta: 80.0,
            attack: None,
            defense: true,
            seed: 0,
            transcript: TranscriptMode::Off,
            parallel: false,
            defense_helper: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct PhaseCounters {
    pub aggregation: ProtocolCounters,
    pub defense: ProtocolCounters,
    pub diagnosis: ProtocolCounters,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTimings {
    pub keygen: Duration,
    pub training: Duration,
    pub encryption: Duration,
    pub defense: Duration,
    pub aggregation: Duration,
    pub diagnosis: Duration,
}

#[derive(Clone, Debug)]
pub struct IslandReport {
    pub island: PartyId,
    pub malicious: bool,
    pub shard_size: usize,
    pub trees: usize,
    pub nodes: usize,
    pub kept: bool,
    /// `Σ_k (y_k − mean vote)²` on the validation set, from plaintext shadows (audit builds).
    pub mse: Option<f64>,
    /// The defense's encrypted MSE decrypted at the same scale (audit builds with the defense on).
    pub mse_decrypted: Option<f64>,
}

/// Plaintext copies kept by the orchestrator for oracle checks.
#[cfg(feature = "audit")]
#[derive(Clone, Debug)]
pub struct Shadow {
    pub shards: Vec<Vec<Sample>>,
    pub forests: Vec<RandomForest>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub shard_size: usize,
    pub confusion: Confusion,
    pub predictions: Vec<i8>,
    pub vote_sums: Vec<i64>,
    pub truth: Vec<i8>,
    pub islands: Vec<IslandReport>,
    pub poison: PoisonReport,
    pub defense: Option<DefenseOutcome>,
    pub model_trees: usize,
    pub model_nodes: usize,
    pub counters: PhaseCounters,
    pub timings: PhaseTimings,
    pub transcript: ProtocolLog,
    #[cfg(feature = "audit")]
    pub shadow: Shadow,
}

impl ExperimentOutcome {
    pub fn kept(&self) -> Vec<usize> {
        (0..self.islands.len()).filter(|&i| self.islands[i].kept).collect()
    }

    pub fn malicious(&self) -> Vec<usize> {
        (0..self.islands.len()).filter(|&i| self.islands[i].malicious).collect()
    }

    pub fn accuracy(&self) -> f64 {
        self.confusion.accuracy()
    }
}

/// Plaintext state before any encryption: the split, the (possibly poisoned)
/// shards and the local forests trained on them.
#[derive(Clone, Debug)]
pub struct LocalStage {
    pub shard_size: usize,
    pub split: DataSplit,
    pub shards: Vec<Vec<Sample>>,
    pub poison: PoisonReport,
    pub forests: Vec<RandomForest>,
}

/// Loads, splits, poisons and trains. Draws only from the `split`, `attack`
/// and `train` forks of the run's root stream.
pub fn prepare_local(config: &ExperimentConfig) -> Result<LocalStage, HarnessError> {
    let root = RngStream::from_seed(config.seed);
    let dataset = load_named(&config.data_dir, &config.dataset)?;
    let samples = dataset.samples(config.scale);
    let shard_size = config.shard_size.or(dataset.default_shard_size).unwrap_or(100);
    let split = split_dataset(
        &samples,
        config.islands,
        shard_size,
        config.validation_size,
        config.test_size,
        &mut root.fork("split"),
    )?;
    let mut shards = split.shards.clone();
    let poison = match &config.attack {
        Some(attack) => apply_attack(&mut shards, attack, &mut root.fork("attack"))?,
        None => PoisonReport::none(),
    };
    let train = TrainConfig {
        trees: config.trees,
        max_height: config.height,
        candidate_features: None,
    };
    let forests = shards
        .iter()
        .enumerate()
        .map(|(i, shard)| train_forest(shard, &train, &mut root.fork_indexed("train", i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LocalStage {
        shard_size,
        split,
        shards,
        poison,
        forests,
    })
}

/// Steps ① to ⑧: keys, optional poisoning, local training and encryption,
/// defense or plain aggregation, then one encrypted diagnosis per test record.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let mut timings = PhaseTimings::default();
    let root = RngStream::from_seed(config.seed);

    let clock = Instant::now();
    let local = prepare_local(config)?;
    timings.training = clock.elapsed();
    let LocalStage {
        shard_size,
        split,
        shards,
        poison,
        forests,
    } = local;

    let clock = Instant::now();
    let federation = Federation::setup(
        &FederationConfig {
            islands: config.islands,
            key_bits: config.key_bits,
            domain_bits: DEFAULT_DOMAIN_BITS,
            blind_bits: DEFAULT_BLIND_BITS,
            scale: config.scale,
            defense_helper: config.defense_helper,
        },
        &root.fork("keys"),
    )?;
    let params = &federation.params;
    timings.keygen = clock.elapsed();

    let clock = Instant::now();
    let mut store = LocalModelStore::default();
    for (i, forest) in forests.iter().enumerate() {
        let pk = federation.ring.get(&island_key(i + 1))?;
        let encrypted = encrypt_forest(params, forest, pk, &mut root.fork_indexed("encrypt", i as u64))?;
        store.push(PartyId::new(&Role::Di(i + 1).to_string()), encrypted);
    }
    let common_pk = federation.ring.get(&federation.common_key())?;
    let validation = ValidationSet::encrypt(params, common_pk, &split.validation, &mut root.fork("curator"))?;
    timings.encryption = clock.elapsed();

    let training_ctx = federation.training_context(config.transcript)?;
    let mut defense_log = ProtocolLog::new(config.transcript);
    let mut aggregation_log = ProtocolLog::new(config.transcript);
    let (model, defense): (FederatedModel, Option<DefenseOutcome>) = if config.defense {
        let clock = Instant::now();
        let defense_config = DefenseConfig {
            theta: config.theta,
            parallel: config.parallel,
        };
        let outcome = judge_models(
            &training_ctx,
            &Scope::root("training"),
            &store,
            &validation,
            &defense_config,
            &mut defense_log,
        )?;
        timings.defense = clock.elapsed();
        let clock = Instant::now();
        let (model, outcome) =
            aggregate_kept(&training_ctx, &Scope::root("training"), &store, outcome, &mut aggregation_log)?;
        timings.aggregation = clock.elapsed();
        (model, Some(outcome))
    } else {
        let clock = Instant::now();
        let all: Vec<usize> = (0..store.len()).collect();
        let model = secure_aggregation(
            &training_ctx,
            &Scope::root("training").child("aggregation"),
            &store,
            &all,
            &mut aggregation_log,
        )?;
        timings.aggregation = clock.elapsed();
        (model, None)
    };

    let clock = Instant::now();
    let diagnosis_ctx = federation.diagnosis_context(config.transcript)?;
    let pk_user = federation.ring.get(&federation.user_key())?;
    let user_rng = root.fork("user");
    let diagnose_one = |(k, sample): (usize, &Sample)| -> Result<(i64, i8, ProtocolLog), HarnessError> {
        let mut log = ProtocolLog::new(config.transcript);
        let request = encrypt_request(params, pk_user, &sample.features, &mut user_rng.fork_indexed("request", k as u64))?;
        let scope = Scope::root("diagnosis").index("request", k as u64);
        let result = diagnose(&diagnosis_ctx, &scope, &model, &request, &mut log)?;
        let revealed = reveal_result(params, &result, federation.user_share())?;
        Ok((revealed.vote_sum, revealed.class, log))
    };
    let answers: Vec<_> = if config.parallel {
        split.test.par_iter().enumerate().map(diagnose_one).collect()
    } else {
        split.test.iter().enumerate().map(diagnose_one).collect()
    };
    let mut diagnosis_log = ProtocolLog::new(config.transcript);
    let mut vote_sums = Vec::with_capacity(answers.len());
    let mut predictions = Vec::with_capacity(answers.len());
    for answer in answers {
        let (vote_sum, class, log) = answer?;
        vote_sums.push(vote_sum);
        predictions.push(class);
        diagnosis_log.merge(log);
    }
    timings.diagnosis = clock.elapsed();

    let truth: Vec<i8> = split.test.iter().map(|s| s.label).collect();
    let confusion = compute_metrics(&predictions, &truth);
    let counters = PhaseCounters {
        aggregation: aggregation_log.counters,
        defense: defense_log.counters,
        diagnosis: diagnosis_log.counters,
    };
    let mut transcript = ProtocolLog::new(config.transcript);
    transcript.merge(defense_log);
    transcript.merge(aggregation_log);
    transcript.merge(diagnosis_log);

    let islands = island_reports(&federation, &forests, &shards, &poison, &model, defense.as_ref(), &split.validation);
    Ok(ExperimentOutcome {
        config: config.clone(),
        shard_size,
        confusion,
        predictions,
        vote_sums,
        truth,
        islands,
        poison,
        model_trees: model.tree_count(),
        model_nodes: model.node_count(),
        defense,
        counters,
        timings,
        transcript,
        #[cfg(feature = "audit")]
        shadow: Shadow {
            shards,
            forests,
            validation: split.validation,
            test: split.test,
        },
    })
}

#[allow(unused_variables)]
fn island_reports(
    federation: &Federation,
    forests: &[RandomForest],
    shards: &[Vec<Sample>],
    poison: &PoisonReport,
    model: &FederatedModel,
    defense: Option<&DefenseOutcome>,
    validation: &[Sample],
) -> Vec<IslandReport> {
    forests
        .iter()
        .enumerate()
        .map(|(i, forest)| {
            let island = PartyId::new(&Role::Di(i + 1).to_string());
            let kept = model.contributors.contains(&island);
            #[cfg(feature = "audit")]
            let (mse, mse_decrypted) = {
                let t = forest.trees.len() as f64;
                let decrypted = defense
                    .and_then(|d| d.decisions.get(i))
                    .and_then(|d| federation.audit.value(&d.mse).ok())
                    .map(|v| v as f64 / (t * t));
                (Some(super::oracle::validation_mse(forest, validation)), decrypted)
            };
            #[cfg(not(feature = "audit"))]
            let (mse, mse_decrypted) = (None, None);
            IslandReport {
                island,
                malicious: poison.malicious.contains(&i),
                shard_size: shards[i].len(),
                trees: forest.trees.len(),
                nodes: forest.node_count(),
                kept,
                mse,
                mse_decrypted,
            }
        })
        .collect()
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn joined<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct MetricsRow {
    dataset: String,
    seed: u64,
    islands: usize,
    shard_size: usize,
    trees: usize,
    height: usize,
    key_bits: u32,
    alpha: String,
    beta: String,
    defense: bool,
    theta: String,
    validation_size: usize,
    test_size: usize,
    malicious: String,
    kept: String,
    dropped: String,
    n_kept: usize,
    accuracy: String,
    recall: String,
    specificity: String,
    tp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    tn: usize,
    fp: usize,
    mse: String,
    aggregation_stra: u64,
    defense_stra: u64,
    defense_sadd: u64,
    defense_smul: u64,
    defense_scom: u64,
    diagnosis_stra: u64,
    diagnosis_scom: u64,
}

impl MetricsRow {
    fn from_outcome(o: &ExperimentOutcome) -> Self {
        let c = &o.config;
        let (alpha, beta) = c.attack.as_ref().map_or((0.0, 0.0), |a| (a.alpha, a.beta));
        let name = |i: &usize| o.islands[*i].island.to_string();
        Self {
            dataset: c.dataset.clone(),
            seed: c.seed,
            islands: c.islands,
            shard_size: o.shard_size,
            trees: c.trees,
            height: c.height,
            key_bits: c.key_bits,
            alpha: fixed(alpha),
            beta: fixed(beta),
            defense: c.defense,
            theta: fixed(c.theta),
            validation_size: c.validation_size,
            test_size: o.truth.len(),
            malicious: joined(o.malicious().iter().map(name)),
            kept: joined(o.kept().iter().map(name)),
            dropped: joined((0..o.islands.len()).filter(|i| !o.islands[*i].kept).map(|i| name(&i))),
            n_kept: o.kept().len(),
            accuracy: fixed(o.confusion.accuracy()),
            recall: fixed(o.confusion.recall()),
            specificity: fixed(o.confusion.specificity()),
            tp: o.confusion.tp,
            fn_: o.confusion.fn_,
            tn: o.confusion.tn,
            fp: o.confusion.fp,
            mse: joined(o.islands.iter().map(|r| r.mse.map(fixed).unwrap_or_default())),
            aggregation_stra: o.counters.aggregation.stra,
            defense_stra: o.counters.defense.stra,
            defense_sadd: o.counters.defense.sadd,
            defense_smul: o.counters.defense.smul,
            defense_scom: o.counters.defense.scom,
            diagnosis_stra: o.counters.diagnosis.stra,
            diagnosis_scom: o.counters.diagnosis.scom,
        }
    }
}

/// One row per run; contains no wall-clock values, so reruns are byte-identical.
pub fn write_metrics_csv<'a, W: Write>(
    outcomes: impl IntoIterator<Item = &'a ExperimentOutcome>,
    out: W,
) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_writer(out);
    for o in outcomes {
        writer.serialize(MetricsRow::from_outcome(o)).map_err(|e| HarnessError::Output(e.to_string()))?;
    }
    writer.flush().map_err(|e| HarnessError::Output(e.to_string()))
}

#[derive(Serialize)]
struct TimingRow {
    dataset: String,
    seed: u64,
    key_bits: u32,
    alpha: String,
    beta: String,
    defense: bool,
    keygen_s: String,
    training_s: String,
    encryption_s: String,
    defense_s: String,
    aggregation_s: String,
    diagnosis_s: String,
}

pub fn write_timing_csv<'a, W: Write>(
    outcomes: impl IntoIterator<Item = &'a ExperimentOutcome>,
    out: W,
) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_writer(out);
    for o in outcomes {
        let c = &o.config;
        let (alpha, beta) = c.attack.as_ref().map_or((0.0, 0.0), |a| (a.alpha, a.beta));
        let t = &o.timings;
        let secs = |d: Duration| format!("{:.3}", d.as_secs_f64());
        writer
            .serialize(TimingRow {
                dataset: c.dataset.clone(),
                seed: c.seed,
                key_bits: c.key_bits,
                alpha: fixed(alpha),
                beta: fixed(beta),
                defense: c.defense,
                keygen_s: secs(t.keygen),
                training_s: secs(t.training),
                encryption_s: secs(t.encryption),
                defense_s: secs(t.defense),
                aggregation_s: secs(t.aggregation),
                diagnosis_s: secs(t.diagnosis),
            })
            .map_err(|e| HarnessError::Output(e.to_string()))?;
    }
    writer.flush().map_err(|e| HarnessError::Output(e.to_string()))
}
