use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedforest::attack::AttackConfig;
use fedforest::crypto::{DEFAULT_BLIND_BITS, DEFAULT_DOMAIN_BITS, DEFAULT_SCALE};
use fedforest::harness::{
    default_data_dir, prepare_local, run_experiment, write_metrics_csv, write_timing_csv, ExperimentConfig,
    ExperimentOutcome, Federation, FederationConfig, HarnessError,
};
use fedforest::protocols::TranscriptMode;
use fedforest::rng::RngStream;

#[derive(Parser)]
#[command(name = "fedforest", version, about = "Encrypted federated random forests with a poisoning defense")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate system parameters and party keys; writes the public material.
    Keygen(KeygenArgs),
    /// Train the islands' local forests in plaintext and write them as text.
    Train(RunArgs),
    /// Poison the islands' shards and print what was injected.
    Attack(RunArgs),
    /// Run the pipeline through the defense and write the per-island decisions.
    Defend(RunArgs),
    /// Run the full pipeline and write one diagnosis per test record.
    Diagnose(RunArgs),
    /// Run every combination of the listed seeds, alphas and betas; write metrics CSV.
    Experiment(RunArgs),
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long, default_value_t = 512)]
    key_bits: u32,
    #[arg(long, default_value_t = 3)]
    n_dis: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value = "heart")]
    dataset: String,
    /// Directory holding `<dataset>.toml` and its CSV.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    n_dis: usize,
    #[arg(long)]
    shard_size: Option<usize>,
    #[arg(long, default_value_t = 30)]
    trees: usize,
    #[arg(long, default_value_t = 4)]
    height: usize,
    #[arg(long, default_value_t = 512)]
    key_bits: u32,
    /// Fraction of malicious islands; a comma list runs a sweep.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    alpha: Vec<f64>,
    /// Fraction of each malicious shard cloned with flipped labels; a comma list runs a sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 80.0)]
    theta: f64,
    #[arg(long, default_value_t = 100)]
    val_size: usize,
    /// Test on a random subset of the holdout.
    #[arg(long)]
    test_size: Option<usize>,
    /// Seed, or a comma list of seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    #[arg(long)]
    no_defense: bool,
    /// Run per-island defense pipelines and diagnoses on all cores.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-phase wall-clock CSV.
    #[arg(long)]
    timing: Option<PathBuf>,
    /// JSON-lines log of every protocol message (digests only).
    #[arg(long)]
    transcript: Option<PathBuf>,
}

impl RunArgs {
    fn configs(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &seed in &self.seed {
            for &alpha in &self.alpha {
                let betas: &[f64] = if alpha > 0.0 { &self.beta } else { &[0.0] };
                for &beta in betas {
                    let mut c = ExperimentConfig::new(&self.dataset);
                    c.data_dir = self.data_dir.clone().unwrap_or_else(default_data_dir);
                    c.islands = self.n_dis;
                    c.shard_size = self.shard_size;
                    c.trees = self.trees;
                    c.height = self.height;
                    c.key_bits = self.key_bits;
                    c.theta = self.theta;
                    c.validation_size = self.val_size;
                    c.test_size = self.test_size;
                    c.defense = !self.no_defense;
                    c.seed = seed;
                    c.parallel = self.parallel;
                    c.attack = (alpha > 0.0).then(|| AttackConfig::new(alpha, beta));
                    if self.transcript.is_some() {
                        c.transcript = TranscriptMode::Digest;
                    }
                    out.push(c);
                }
            }
        }
        out
    }
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn keygen(args: &KeygenArgs) -> CliResult {
    let federation = Federation::setup(
        &FederationConfig {
            islands: args.n_dis,
            key_bits: args.key_bits,
            domain_bits: DEFAULT_DOMAIN_BITS,
            blind_bits: DEFAULT_BLIND_BITS,
            scale: DEFAULT_SCALE,
            defense_helper: 0,
        },
        &RngStream::from_seed(args.seed).fork("keys"),
    )?;
    output(&args.out)?.write_all(federation.public_material().to_text().as_bytes())?;
    Ok(())
}

fn train(args: &RunArgs) -> CliResult {
    let mut out = output(&args.out)?;
    for config in args.configs() {
        let stage = prepare_local(&config)?;
        for (i, (shard, forest)) in stage.shards.iter().zip(&stage.forests).enumerate() {
            writeln!(out, "# seed {} island DI{} records {}", config.seed, i + 1, shard.len())?;
            out.write_all(forest.to_text().as_bytes())?;
        }
    }
    Ok(())
}

fn attack(args: &RunArgs) -> CliResult {
    let mut out = output(&args.out)?;
    for config in args.configs() {
        let stage = prepare_local(&config)?;
        writeln!(out, "# seed {}", config.seed)?;
        out.write_all(stage.poison.to_text().as_bytes())?;
    }
    Ok(())
}

fn run_all(args: &RunArgs) -> Result<Vec<ExperimentOutcome>, HarnessError> {
    args.configs().iter().map(run_experiment).collect()
}

fn write_side_outputs(args: &RunArgs, outcomes: &[ExperimentOutcome]) -> CliResult {
    if let Some(path) = &args.timing {
        write_timing_csv(outcomes, BufWriter::new(File::create(path)?))?;
    }
    if let Some(path) = &args.transcript {
        let mut text = String::new();
        for o in outcomes {
            text.push_str(&o.transcript.to_jsonl());
        }
        fs::write(path, text)?;
    }
    Ok(())
}

fn defend(args: &RunArgs) -> CliResult {
    if args.no_defense {
        return Err("defend needs the defense; drop --no-defense".into());
    }
    let outcomes = run_all(args)?;
    let mut out = output(&args.out)?;
    for o in &outcomes {
        let defense = o.defense.as_ref().expect("defense ran");
        let mse: Vec<Option<f64>> = o.islands.iter().map(|r| r.mse).collect();
        writeln!(out, "# seed {} alpha {:?}", o.config.seed, o.config.attack.as_ref().map(|a| (a.alpha, a.beta)))?;
        out.write_all(defense.report(&mse).as_bytes())?;
    }
    write_side_outputs(args, &outcomes)
}

fn diagnose(args: &RunArgs) -> CliResult {
    let outcomes = run_all(args)?;
    let mut out = output(&args.out)?;
    writeln!(out, "seed,record,vote_sum,predicted,truth")?;
    for o in &outcomes {
        for (k, ((v, p), y)) in o.vote_sums.iter().zip(&o.predictions).zip(&o.truth).enumerate() {
            writeln!(out, "{},{k},{v},{p},{y}", o.config.seed)?;
        }
    }
    write_side_outputs(args, &outcomes)
}

fn experiment(args: &RunArgs) -> CliResult {
    let outcomes = run_all(args)?;
    write_metrics_csv(&outcomes, output(&args.out)?)?;
    write_side_outputs(args, &outcomes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Train(a) => train(a),
        Command::Attack(a) => attack(a),
        Command::Defend(a) => defend(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
