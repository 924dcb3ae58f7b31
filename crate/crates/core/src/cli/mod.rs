//! The `pcse` command line: batch verbs over a flat key-value config.
//!
//! Every verb resolves its configuration as defaults < `--config` file <
//! `--set` overrides < dedicated flags, and writes the resolved result to
//! `config.snapshot` in its output directory. Failures print one line
//! `error\t<kind>\t<message>` to stderr and exit nonzero.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

use crate::embeddings::{SentenceEncoder, ToyEncoder};
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_file};
use crate::lexical_metrics::{pairwise_histogram, PairMetric};
use crate::pattern_sim::{
    generate_dataset, read_corpus, HttpChatClient, HybridDataset, LlmClient, MockClient,
    PatternSource, QuadrupleExample,
};
use crate::repr_metrics::{rfd, Trajectory};
use crate::train_eval::{grid_search, top_k_average, train, StsEvalSet, TOP_K};

#[derive(Debug, Parser)]
#[command(
    name = "pcse",
    version,
    about = "Pattern-simulated contrastive sentence embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML config file (flat dotted keys or tables).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Use the deterministic offline generator instead of a remote LLM.
    #[arg(long, global = true)]
    pub mock_llm: bool,
    /// Override one config key, e.g. `--set train.beta=0.5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Build a hybrid dataset from a corpus with LLM-simulated patterns.
    Generate,
    /// Train an encoder and record its metric trajectory.
    Train,
    /// Summarize trajectories as `run_label rfd_u rfd_a top5_spearman` rows.
    Rfd {
        /// trajectory.csv files or run directories containing one.
        #[arg(required = true)]
        trajectories: Vec<PathBuf>,
    },
    /// Density histogram of a pairwise metric over a dataset.
    Hist {
        /// Hybrid dataset file (defaults to `data.dataset`).
        dataset: Option<PathBuf>,
        #[arg(long)]
        metric: Option<String>,
        /// `positive` (anchor, positive) or `negative` (anchor, negative).
        #[arg(long)]
        polarity: Option<String>,
    },
    /// Train one run per hyperparameter cell and report the best.
    Grid,
}

/// Resolves the configuration for a parsed command line.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for assignment in &common.overrides {
        cfg.set_str(assignment)?;
    }
    if let Some(out) = &common.out {
        cfg.set("out", toml::Value::String(out.display().to_string()))?;
    }
    if let Some(seed) = common.seed {
        let seed =
            i64::try_from(seed).map_err(|_| Error::Config(format!("seed {seed} is too large")))?;
        cfg.set("seed", toml::Value::Integer(seed))?;
    }
    if common.mock_llm {
        cfg.set("llm.mock", toml::Value::Boolean(true))?;
    }
    Ok(cfg)
}

/// Parses `args` (including the program name) and runs the verb. Returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("error\tusage\t{first}");
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error\t{}\t{}", e.kind(), one_line(&e.to_string()));
            match e {
                Error::Config(_) | Error::Argument(_) | Error::Unsupported(_) => 2,
                _ => 1,
            }
        }
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(&cli.common)?;
    match &cli.verb {
        Verb::Generate => verb_generate(&cfg),
        Verb::Train => verb_train(&cfg),
        Verb::Rfd { trajectories } => {
            let tsv = verb_rfd(trajectories)?;
            if let Some(out) = &cli.common.out {
                write_file(&out.join("rfd_scatter.tsv"), tsv.as_bytes())?;
            }
            print!("{tsv}");
            Ok(())
        }
        Verb::Hist {
            dataset,
            metric,
            polarity,
        } => {
            let mut cfg = cfg;
            if let Some(d) = dataset {
                cfg.set("data.dataset", toml::Value::String(d.display().to_string()))?;
            }
            if let Some(m) = metric {
                cfg.set("hist.metric", toml::Value::String(m.clone()))?;
            }
            if let Some(p) = polarity {
                cfg.set("hist.polarity", toml::Value::String(p.clone()))?;
            }
            verb_hist(&cfg).map(|_| ())
        }
        Verb::Grid => verb_grid(&cfg),
    }
}

/// The path under `key`, which must name an existing file.
fn input_path(cfg: &RunConfig, key: &str) -> Result<PathBuf> {
    let path = cfg.path(key)?;
    if !path.is_file() {
        return Err(Error::Config(format!(
            "`{key}` file not found: {}",
            path.display()
        )));
    }
    Ok(path)
}

fn write_snapshot(cfg: &RunConfig, dir: &Path, name: &str) -> Result<()> {
    write_file(&dir.join(name), cfg.snapshot().as_bytes())
}

fn llm_client(cfg: &RunConfig) -> Result<Box<dyn LlmClient + Sync>> {
    if cfg.bool("llm.mock") {
        return Ok(Box::new(MockClient::new(cfg.seed())));
    }
    Ok(Box::new(HttpChatClient::from_env(
        cfg.str("llm.endpoint"),
        cfg.str("llm.model"),
        cfg.str("llm.api_key_env"),
        cfg.llm_timeout(),
    )?))
}

/// Writes `dataset.jsonl` and `generation_report.json`.
pub fn verb_generate(cfg: &RunConfig) -> Result<()> {
    let gen_cfg = cfg.generation_config()?;
    if gen_cfg.hierarchical && gen_cfg.pattern == crate::pattern_sim::PatternKind::Nli {
        return Err(Error::Unsupported(
            "hierarchical generation needs the STS pattern (NLI has no intermediate sentence)"
                .into(),
        ));
    }
    let corpus = read_corpus(&input_path(cfg, "data.corpus")?)?;
    let source =
        PatternSource::read_jsonl(&input_path(cfg, "data.pattern_source")?, gen_cfg.pattern)?;
    let client = llm_client(cfg)?;
    let out = generate_dataset(&corpus, &source, &gen_cfg, client.as_ref())?;

    let dir = cfg.out_dir();
    out.dataset.write_jsonl(&dir.join("dataset.jsonl"))?;
    let report = serde_json::to_string_pretty(&out.report)
        .map_err(|e| Error::Data(format!("serializing generation report: {e}")))?;
    write_file(
        &dir.join("generation_report.json"),
        format!("{report}\n").as_bytes(),
    )?;
    write_snapshot(cfg, &dir, "config.snapshot")
}

/// The training set: `data.dataset` if set, otherwise `data.corpus` with
/// every sentence as a corpus-only record.
fn training_data(cfg: &RunConfig) -> Result<HybridDataset> {
    let domain = cfg.domain()?;
    if !cfg.str("data.dataset").is_empty() {
        return HybridDataset::read_jsonl(&input_path(cfg, "data.dataset")?, domain);
    }
    if !cfg.str("data.corpus").is_empty() {
        let corpus = read_corpus(&input_path(cfg, "data.corpus")?)?;
        return HybridDataset::from_examples(
            corpus
                .into_iter()
                .map(QuadrupleExample::corpus_only)
                .collect(),
            domain,
            cfg.str("pattern.kind").parse()?,
        );
    }
    Err(Error::Config(
        "set `data.dataset` or `data.corpus` to train".into(),
    ))
}

pub fn rfd_text(traj: &Trajectory) -> Result<String> {
    let r = rfd(traj)?;
    Ok(format!("rfd_a = {}\nrfd_u = {}\n", r.rfd_a, r.rfd_u))
}

/// Writes `trajectory.csv`, `rfd.txt`, `best.txt`, `encoder.json` and
/// `config.snapshot`.
pub fn verb_train(cfg: &RunConfig) -> Result<()> {
    let train_cfg = cfg.train_config()?;
    let dataset = training_data(cfg)?;
    let evalset = StsEvalSet::read_jsonl(&input_path(cfg, "data.eval")?)?;
    let encoder = cfg.encoder_handle()?.load(cfg.seed())?;
    let out = train(&train_cfg, &dataset, encoder, &evalset)?;

    let dir = cfg.out_dir();
    write_file(
        &dir.join("trajectory.csv"),
        out.trajectory.to_csv_string()?.as_bytes(),
    )?;
    write_file(&dir.join("rfd.txt"), rfd_text(&out.trajectory)?.as_bytes())?;
    let best = top_k_average(&out.trajectory, TOP_K)?;
    write_file(
        &dir.join("best.txt"),
        format!("top{TOP_K}_spearman = {best}\n").as_bytes(),
    )?;
    write_file(&dir.join("encoder.json"), out.encoder.to_json()?.as_bytes())?;
    write_snapshot(cfg, &dir, "config.snapshot")
}

pub const RFD_SCATTER_HEADER: &str = "run_label\trfd_u\trfd_a\ttop5_spearman";

/// A run directory resolves to its `trajectory.csv`; the label is the run
/// directory name, or the file stem for other file names.
fn trajectory_file(path: &Path) -> (PathBuf, String) {
    let file = if path.is_dir() {
        path.join("trajectory.csv")
    } else {
        path.to_path_buf()
    };
    let label = if file.file_name().is_some_and(|n| n == "trajectory.csv") {
        file.parent().and_then(Path::file_name)
    } else {
        file.file_stem()
    }
    .map_or_else(
        || file.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    (file, label)
}

/// One scatter row per trajectory, in input order.
pub fn verb_rfd(paths: &[PathBuf]) -> Result<String> {
    if paths.is_empty() {
        return Err(Error::Argument("rfd needs at least one trajectory".into()));
    }
    let mut out = format!("{RFD_SCATTER_HEADER}\n");
    for path in paths {
        let (file, label) = trajectory_file(path);
        let traj = Trajectory::read_csv_file(&file)?;
        let r = rfd(&traj)?;
        let top = top_k_average(&traj, TOP_K)?;
        writeln!(out, "{label}\t{}\t{}\t{top}", r.rfd_u, r.rfd_a).expect("writing to a String");
    }
    Ok(out)
}

fn pairs_for(dataset: &HybridDataset, polarity: &str) -> Result<Vec<(String, String)>> {
    let pick: fn(&QuadrupleExample) -> Option<&String> = match polarity {
        "positive" => |e| e.positive.as_ref(),
        "negative" => |e| e.negative.as_ref(),
        other => {
            return Err(Error::Config(format!(
                "unknown polarity `{other}` (expected positive or negative)"
            )))
        }
    };
    let pairs: Vec<(String, String)> = dataset
        .examples
        .iter()
        .filter_map(|e| pick(e).map(|s| (e.anchor.clone(), s.clone())))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Data(format!("dataset has no {polarity} pairs")));
    }
    Ok(pairs)
}

/// Writes `hist_<polarity>_<metric>.tsv` and returns its path.
pub fn verb_hist(cfg: &RunConfig) -> Result<PathBuf> {
    let dataset = HybridDataset::read_jsonl(&input_path(cfg, "data.dataset")?, cfg.domain()?)?;
    let metric: PairMetric = cfg.str("hist.metric").parse()?;
    let polarity = cfg.str("hist.polarity");
    let pairs = pairs_for(&dataset, polarity)?;
    let encoder: Option<ToyEncoder> = match metric {
        PairMetric::Mer => None,
        PairMetric::Cs => Some(match cfg.str("hist.encoder") {
            "" => cfg.encoder_handle()?.load(cfg.seed())?,
            _ => ToyEncoder::from_json(&read_to_string(&input_path(cfg, "hist.encoder")?)?)?,
        }),
    };
    let hist = pairwise_histogram(
        &pairs,
        metric,
        encoder.as_ref().map(|e| e as &dyn SentenceEncoder),
        cfg.usize("hist.bins"),
    )?;
    let metric_name = match metric {
        PairMetric::Mer => "mer",
        PairMetric::Cs => "cs",
    };
    let dir = cfg.out_dir();
    let path = dir.join(format!("hist_{polarity}_{metric_name}.tsv"));
    write_file(&path, hist.to_tsv().as_bytes())?;
    write_snapshot(cfg, &dir, "config.snapshot")?;
    Ok(path)
}

/// Writes `grid_report.tsv` and `best_config.snapshot` (the resolved config
/// with the winning cell applied).
pub fn verb_grid(cfg: &RunConfig) -> Result<()> {
    let grid = cfg.grid_spec()?;
    let base = cfg.train_config()?;
    let dataset = training_data(cfg)?;
    let evalset = StsEvalSet::read_jsonl(&input_path(cfg, "data.eval")?)?;
    let handle = cfg.encoder_handle()?;
    let seed = cfg.seed();
    let report = grid_search(
        &grid,
        &base,
        &dataset,
        |_| handle.load(seed),
        &evalset,
        cfg.usize("grid.jobs"),
    )?;

    let dir = cfg.out_dir();
    write_file(&dir.join("grid_report.tsv"), report.to_tsv().as_bytes())?;
    write_snapshot(cfg, &dir, "config.snapshot")?;
    let best = report
        .best_cell()
        .ok_or_else(|| Error::Training {
            batch: 0,
            message: format!("all {} grid cells failed", report.results.len()),
        })?
        .cell;
    let mut best_cfg = cfg.clone();
    for (key, value) in [
        ("train.learning_rate", best.learning_rate),
        ("train.m1", best.m1),
        ("train.m2", best.m2),
        ("train.beta", best.beta),
    ] {
        best_cfg.set(key, toml::Value::Float(value))?;
    }
    write_snapshot(&best_cfg, &dir, "best_config.snapshot")
}
