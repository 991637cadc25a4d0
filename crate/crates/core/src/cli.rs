//! `hmlet` command line: prepare, train, evaluate, analyze.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{analyze, FullAnalysis, SimilarityEmbedding};
use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricsReport};
use crate::graph::{
    build_adjacency, kcore_filter, load_interactions, read_prepared, split, write_prepared,
    EdgeListFormat, InteractionGraph, PreparedStats, Split, SplitRatios,
};
use crate::model::{
    checkpoint_id, forward, layer_plan, Checkpoint, ForwardMode, LayerSelection, ModelConfig,
    VariantName,
};
use crate::numerics::Activation;
use crate::trainer::{train_with_hook, TauSchedule, TrainConfig};

pub const SEED_ENV: &str = "HMLET_SEED";
pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const CHECKPOINT_FILE: &str = "best.ckpt";

#[derive(Debug, Parser)]
#[command(
    name = "hmlet",
    version,
    about = "Gated linear/non-linear graph collaborative filtering"
)]
pub struct Cli {
    /// Worker threads; 1 gives bit-reproducible runs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter and split a raw interaction file.
    Prepare(PrepareArgs),
    /// Train a model on prepared data.
    Train(TrainArgs),
    /// Top-k metrics of a checkpoint.
    Evaluate(EvaluateArgs),
    /// Node-class and centrality report of a checkpoint.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Auto,
    Pairs,
    Grouped,
}

impl From<FormatArg> for EdgeListFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Auto => EdgeListFormat::Auto,
            FormatArg::Pairs => EdgeListFormat::Pairs,
            FormatArg::Grouped => EdgeListFormat::Grouped,
        }
    }
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Raw interactions: `user item` pairs or `user item item ...` lines.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: FormatArg,
    /// Minimum degree of the k-core filter; 0 disables it.
    #[arg(long, default_value_t = 10)]
    pub kcore: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `prepare`.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the log and checkpoint.
    #[arg(long)]
    pub out: PathBuf,
    /// `key = value` file with training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<VariantName>,
    #[arg(long)]
    pub activation: Option<Activation>,
    /// Give the gating MLP a hidden layer.
    #[arg(long)]
    pub hidden_gate: bool,
    /// Maximum number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tau_decay: Option<f64>,
    #[arg(long)]
    pub tau_schedule: Option<TauSchedule>,
    #[arg(long)]
    pub eval_k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SimilarityArg {
    Final,
    ResidualMean,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Embedding used for neighbor cosine similarity.
    #[arg(long, value_enum, default_value = "final")]
    pub similarity: SimilarityArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything `train` needs beyond the data.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            model: ModelConfig::new(layer_plan(VariantName::End)),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: bad value '{value}' for {key}")))
}

impl RunConfig {
    /// Applies a `key = value` settings text. Blank lines and `#` comments
    /// are ignored; unknown keys are an error.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected 'key = value'")))?;
            let (key, value) = (key.trim(), value.trim());
            let t = &mut self.train;
            match key {
                "learning_rate" => t.learning_rate = parse_value(key, value, line)?,
                "lambda_l2" => t.lambda_l2 = parse_value(key, value, line)?,
                "batch_size" => t.batch_size = parse_value(key, value, line)?,
                "dropout_rate" => t.dropout_rate = parse_value(key, value, line)?,
                "tau0" => t.tau0 = parse_value(key, value, line)?,
                "tau_min" => t.tau_min = parse_value(key, value, line)?,
                "tau_decay" => t.tau_decay = parse_value(key, value, line)?,
                "tau_schedule" => t.tau_schedule = value.parse()?,
                "max_epochs" => t.max_epochs = parse_value(key, value, line)?,
                "patience" => t.patience = parse_value(key, value, line)?,
                "dim" => t.dim = parse_value(key, value, line)?,
                "eval_k" => t.eval_k = parse_value(key, value, line)?,
                "seed" => t.seed = parse_value(key, value, line)?,
                "variant" => self.model.variant = value.parse()?,
                "activation" => self.model.activation = value.parse()?,
                "hidden_gate" => self.model.hidden_gate = parse_value(key, value, line)?,
                other => return Err(Error::Config(format!("line {line}: unknown key '{other}'"))),
            }
        }
        Ok(())
    }

    /// Defaults, then the config file, then `HMLET_SEED`, then flags.
    pub fn resolve(args: &TrainArgs, env_seed: Option<&str>) -> Result<Self> {
        let mut rc = RunConfig::default();
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            rc.apply_config_text(&text)?;
        }
        if let Some(s) = env_seed {
            rc.train.seed = s.trim().parse().map_err(|_| {
                Error::Config(format!("{SEED_ENV} is not an unsigned integer: '{s}'"))
            })?;
        }
        let t = &mut rc.train;
        macro_rules! flag {
            ($field:ident, $arg:expr) => {
                if let Some(v) = $arg {
                    t.$field = v;
                }
            };
        }
        flag!(max_epochs, args.epochs);
        flag!(patience, args.patience);
        flag!(dim, args.dim);
        flag!(learning_rate, args.lr);
        flag!(lambda_l2, args.lambda);
        flag!(batch_size, args.batch_size);
        flag!(dropout_rate, args.dropout);
        flag!(tau0, args.tau0);
        flag!(tau_min, args.tau_min);
        flag!(tau_decay, args.tau_decay);
        flag!(tau_schedule, args.tau_schedule);
        flag!(eval_k, args.eval_k);
        flag!(seed, args.seed);
        if let Some(v) = args.variant {
            rc.model.variant = layer_plan(v);
        }
        if let Some(a) = args.activation {
            rc.model.activation = a;
        }
        if args.hidden_gate {
            rc.model.hidden_gate = true;
        }
        rc.train.validate()?;
        Ok(rc)
    }
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} directory {} does not exist",
            path.display()
        )))
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_prepare(args: &PrepareArgs) -> Result<()> {
    let seed = match (args.seed, env_seed()) {
        (Some(s), _) => s,
        (None, Some(s)) => s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} is not an unsigned integer: '{s}'")))?,
        (None, None) => TrainConfig::default().seed,
    };
    if !args.input.is_file() {
        return Err(Error::Config(format!(
            "input file {} does not exist",
            args.input.display()
        )));
    }
    let raw = load_interactions(File::open(&args.input)?, args.format.into())?;
    let filtered = if args.kcore > 0 {
        kcore_filter(&raw, args.kcore)?
    } else {
        raw
    };
    let graph = split(&filtered, SplitRatios::default(), seed)?;
    let stats = PreparedStats::of(&graph, args.kcore, seed);
    write_prepared(&args.out, &graph, &stats)?;
    eprintln!(
        "prepared {} users, {} items, {} interactions, sparsity {:.5}%",
        stats.users,
        stats.items,
        stats.interactions,
        100.0 * stats.sparsity
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    variant: VariantName,
    epochs: usize,
    best_epoch: usize,
    best_val_ndcg: f64,
    checkpoint: String,
    #[serde(rename = "checkpoint-id")]
    checkpoint_id: String,
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let rc = RunConfig::resolve(args, env_seed().as_deref())?;
    require_dir(&args.data, "data")?;
    let graph = read_prepared(&args.data)?;
    fs::create_dir_all(&args.out)?;
    let ckpt_path = args.out.join(CHECKPOINT_FILE);
    let mut log = BufWriter::new(File::create(args.out.join(TRAIN_LOG))?);
    let mut best_bytes = Vec::new();

    let outcome = train_with_hook(&graph, &rc.train, &rc.model, |record, improved| {
        serde_json::to_writer(&mut log, record)?;
        log.write_all(b"\n")?;
        if let Some(params) = improved {
            best_bytes = Checkpoint {
                num_users: graph.num_users(),
                num_items: graph.num_items(),
                config: rc.model,
                params: params.clone(),
            }
            .to_bytes();
            fs::write(&ckpt_path, &best_bytes)?;
        }
        Ok(())
    })?;
    log.flush()?;
    eprintln!(
        "{} epochs, best validation NDCG@{} {:.4} at epoch {}",
        outcome.log.len(),
        rc.train.eval_k,
        outcome.best_val_ndcg,
        outcome.best_epoch
    );
    emit_json(
        &TrainSummary {
            variant: rc.model.variant.name,
            epochs: outcome.log.len(),
            best_epoch: outcome.best_epoch,
            best_val_ndcg: outcome.best_val_ndcg,
            checkpoint: CHECKPOINT_FILE.to_string(),
            checkpoint_id: checkpoint_id(&best_bytes),
        },
        None,
    )
}

fn load_checkpoint(path: &Path, graph: &InteractionGraph) -> Result<(Checkpoint, String)> {
    let bytes = fs::read(path).map_err(|e| {
        Error::Checkpoint(format!("cannot read checkpoint {}: {e}", path.display()))
    })?;
    let ckpt = Checkpoint::from_bytes(&bytes)?;
    if ckpt.num_users != graph.num_users() || ckpt.num_items != graph.num_items() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} users / {} items, data has {} / {}",
            ckpt.num_users,
            ckpt.num_items,
            graph.num_users(),
            graph.num_items()
        )));
    }
    Ok((ckpt, checkpoint_id(&bytes)))
}

#[derive(Debug, Serialize)]
pub struct EvaluationReport {
    #[serde(flatten)]
    pub metrics: MetricsReport,
    pub split: String,
    pub variant: VariantName,
    #[serde(rename = "checkpoint-id")]
    pub checkpoint_id: String,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    require_dir(&args.data, "data")?;
    let graph = read_prepared(&args.data)?;
    let (ckpt, id) = load_checkpoint(&args.checkpoint, &graph)?;
    let adj = build_adjacency(&graph)?;
    let metrics = evaluate(&ckpt.params, &ckpt.config, &adj, &graph, args.split, args.k)?;
    let split = match args.split {
        Split::Val => "val",
        Split::Test => "test",
    };
    emit_json(
        &EvaluationReport {
            metrics,
            split: split.to_string(),
            variant: ckpt.config.variant.name,
            checkpoint_id: id,
        },
        args.out.as_deref(),
    )
}

#[derive(Debug, Serialize)]
pub struct AnalyzeOutput {
    pub variant: VariantName,
    #[serde(rename = "checkpoint-id")]
    pub checkpoint_id: String,
    #[serde(flatten)]
    pub analysis: FullAnalysis,
}

/// Layers x {linear, non-linear} selection table.
pub fn gate_ratio_table(ratios: &[LayerSelection]) -> String {
    let mut s = String::from("layer  linear(%)  non-linear(%)\n");
    for r in ratios {
        let tag = if r.gated { "" } else { "  (fixed)" };
        s.push_str(&format!(
            "{:>5}  {:>9.2}  {:>13.2}{tag}\n",
            r.layer, r.linear, r.nonlinear
        ));
    }
    s
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    require_dir(&args.data, "data")?;
    let graph = read_prepared(&args.data)?;
    let (ckpt, id) = load_checkpoint(&args.checkpoint, &graph)?;
    let adj = build_adjacency(&graph)?;
    let trace = forward(
        &adj,
        &ckpt.params,
        &ckpt.config,
        1.0,
        ForwardMode::Eval,
        None,
    )?;
    let embedding = match args.similarity {
        SimilarityArg::Final => SimilarityEmbedding::Final,
        SimilarityArg::ResidualMean => SimilarityEmbedding::ResidualMean,
    };
    let analysis = analyze(&trace, &graph, embedding)?;
    eprint!("{}", gate_ratio_table(&analysis.gate_ratios));
    emit_json(
        &AnalyzeOutput {
            variant: ckpt.config.variant.name,
            checkpoint_id: id,
            analysis,
        },
        args.out.as_deref(),
    )
}

fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Prepare(a) => cmd_prepare(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Analyze(a) => cmd_analyze(a),
    }
}

/// 2 for usage and configuration problems, 1 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli.command))),
        None => dispatch(&cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
