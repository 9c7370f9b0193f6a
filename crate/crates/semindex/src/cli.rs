//! The `semindex` binary: subcommands for dataset synthesis, index lifecycle,
//! querying, evaluation and parameter sweeps.
//!
//! Flags can also come from a `key = value` config file (`--config`); explicit
//! flags win. All randomness derives from `--seed` through named sub-seeds,
//! so every command is reproducible.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::dataset::{
    read_features, read_ground_truth, read_labels, synth_dataset, write_features,
    write_ground_truth, write_labels, FeatureSet, GroundTruth, LabelMatrix, SyntheticConfig,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, ConfigEcho, MetricsReport};
use crate::index::{
    build_index, cooccurrence_matrix, merge_labels, split_index, IndexParams, SemanticIndex,
};
use crate::math::sub_seed;
use crate::persist::{load_index, save_index};
use crate::quant::{build_flat_pq, build_residual_pq, ResidualPq};
use crate::search::{ivf_attach_pq, ivf_build, Engine, Metric, QuerySet};

const DEFAULT_ALPHA: u32 = 5;
const DEFAULT_BETA: u32 = 5;
const DEFAULT_L: u32 = 10;
const DEFAULT_TAU: f64 = 0.1;
const DEFAULT_PQ_M: u32 = 8;
const DEFAULT_PQ_K: u32 = 8;
const DEFAULT_R_LIST: &str = "1,10,100";
const DEFAULT_K_COARSE: u32 = 1000;
const DEFAULT_COOC_K: usize = 5;

#[derive(Parser)]
#[command(
    name = "semindex",
    about = "Label-partitioned inverted index for nearest-neighbor retrieval",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset bundle.
    Synth(SynthArgs),
    /// Build an index from features + labels (optionally merged cells and a PQ block).
    Build(CommonArgs),
    /// Re-cluster an existing index's labels into fewer cells and rebuild it.
    Merge(CommonArgs),
    /// Split each partition into sub-cells for pruning.
    Split(CommonArgs),
    /// Rank queries against an index and print one line per query.
    Query(CommonArgs),
    /// Evaluate a strategy against ground truth; prints a JSON report.
    Eval(CommonArgs),
    /// Evaluate a grid of parameters; prints CSV rows.
    Sweep(CommonArgs),
}

#[derive(Args, Default)]
struct SynthArgs {
    /// Directory that receives db.fvec, queries.fvec, db.lbl, queries.lbl, gt.txt.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_db: Option<usize>,
    #[arg(long)]
    n_queries: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n_labels: Option<u32>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    label_noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optional key = value file supplying defaults for absent flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Database feature file (.fvec).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Database label file (.lbl).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Query feature file (.fvec).
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Query label file (.lbl).
    #[arg(long)]
    query_labels: Option<PathBuf>,
    /// Ground-truth text file.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Index file to read (query/eval/split/merge) .
    #[arg(long)]
    index: Option<PathBuf>,
    /// Output path (index file for build/merge/split, CSV for sweep).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append the evaluation row to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<u32>,
    #[arg(long)]
    beta: Option<u32>,
    /// Sub-cell pruning fraction in (0, 1]; used when the index carries a
    /// split structure and the strategy is `semantic`.
    #[arg(long)]
    tau: Option<f64>,
    /// Sub-cells per partition for `split`.
    #[arg(long = "L")]
    l: Option<u32>,
    /// Merge the label partitions into this many cells at build time.
    #[arg(long)]
    merge_cells: Option<u32>,
    /// Attach a residual PQ block at build time.
    #[arg(long, default_value_t = false)]
    pq: bool,
    #[arg(long)]
    pq_m: Option<u32>,
    #[arg(long)]
    pq_k: Option<u32>,
    /// Top-k used for the co-occurrence statistics when merging.
    #[arg(long)]
    cooc_k: Option<usize>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    nprobe: Option<u32>,
    /// Coarse cells for the IVF baselines.
    #[arg(long)]
    k_coarse: Option<u32>,
    /// Comma-separated recall cutoffs, e.g. 1,10,100.
    #[arg(long = "R")]
    r_list: Option<String>,
    /// Results per query printed by `query` (defaults to the largest R).
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Alpha grid for `sweep`, e.g. 1,5,10.
    #[arg(long)]
    alphas: Option<String>,
    /// Beta grid for `sweep`.
    #[arg(long)]
    betas: Option<String>,
    /// Tau grid for `sweep`; switches the sweep to a beta x tau grid.
    #[arg(long)]
    taus: Option<String>,
    /// Optional key = value file supplying defaults for absent flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Values from a `key = value` config file; consulted only for flags the
/// command line left unset.
struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!(
                        "{}:{}: expected key = value",
                        path.display(),
                        no + 1
                    ))
                })?;
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(ConfigFile { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("config key {key}: cannot parse {raw:?}"))
            }),
        }
    }
}

macro_rules! resolve {
    ($cli:expr, $file:expr, $key:literal) => {
        match $cli.clone() {
            Some(v) => Some(v),
            None => $file.get($key)?,
        }
    };
    ($cli:expr, $file:expr, $key:literal, $default:expr) => {
        match $cli.clone() {
            Some(v) => v,
            None => $file.get($key)?.unwrap_or($default),
        }
    };
}

/// Fully resolved run configuration: command-line flags merged over the
/// config file merged over defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub query_labels: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub alpha: u32,
    pub beta: u32,
    pub tau: Option<f64>,
    pub l: u32,
    pub merge_cells: Option<u32>,
    pub pq: bool,
    pub pq_m: u32,
    pub pq_k: u32,
    pub cooc_k: usize,
    pub metric: Metric,
    pub strategy: String,
    pub nprobe: u32,
    pub k_coarse: u32,
    pub r_list: Vec<usize>,
    pub top: Option<usize>,
    pub seed: u64,
    pub alphas: Vec<u32>,
    pub betas: Vec<u32>,
    pub taus: Vec<f64>,
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Param(format!("bad {what} list entry {s:?}")))
        })
        .collect()
}

impl RunConfig {
    fn from_args(args: &CommonArgs) -> Result<Self> {
        let file = ConfigFile::load(args.config.as_deref())?;
        let metric_raw: String = resolve!(args.metric, file, "metric", "l2".to_string());
        let r_raw: String = resolve!(args.r_list, file, "R", DEFAULT_R_LIST.to_string());
        let alphas_raw: Option<String> = resolve!(args.alphas, file, "alphas");
        let betas_raw: Option<String> = resolve!(args.betas, file, "betas");
        let taus_raw: Option<String> = resolve!(args.taus, file, "taus");
        Ok(RunConfig {
            features: resolve!(args.features, file, "features"),
            labels: resolve!(args.labels, file, "labels"),
            queries: resolve!(args.queries, file, "queries"),
            query_labels: resolve!(args.query_labels, file, "query-labels"),
            gt: resolve!(args.gt, file, "gt"),
            index: resolve!(args.index, file, "index"),
            out: resolve!(args.out, file, "out"),
            csv: resolve!(args.csv, file, "csv"),
            alpha: resolve!(args.alpha, file, "alpha", DEFAULT_ALPHA),
            beta: resolve!(args.beta, file, "beta", DEFAULT_BETA),
            tau: resolve!(args.tau, file, "tau"),
            l: resolve!(args.l, file, "L", DEFAULT_L),
            merge_cells: resolve!(args.merge_cells, file, "merge-cells"),
            pq: args.pq || file.get::<bool>("pq")?.unwrap_or(false),
            pq_m: resolve!(args.pq_m, file, "pq-m", DEFAULT_PQ_M),
            pq_k: resolve!(args.pq_k, file, "pq-k", DEFAULT_PQ_K),
            cooc_k: resolve!(args.cooc_k, file, "cooc-k", DEFAULT_COOC_K),
            metric: metric_raw.parse()?,
            strategy: resolve!(args.strategy, file, "strategy", "exhaustive".to_string()),
            nprobe: resolve!(args.nprobe, file, "nprobe", DEFAULT_BETA),
            k_coarse: resolve!(args.k_coarse, file, "k-coarse", DEFAULT_K_COARSE),
            r_list: parse_list(&r_raw, "R")?,
            top: resolve!(args.top, file, "top"),
            seed: resolve!(args.seed, file, "seed", 0),
            alphas: alphas_raw.map(|s| parse_list(&s, "alpha")).transpose()?.unwrap_or_default(),
            betas: betas_raw.map(|s| parse_list(&s, "beta")).transpose()?.unwrap_or_default(),
            taus: taus_raw.map(|s| parse_list(&s, "tau")).transpose()?.unwrap_or_default(),
        })
    }

    fn need(&self, field: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
        field
            .clone()
            .ok_or_else(|| Error::Config(format!("--{flag} is required for this command")))
    }
}

/// Entry point used by the binary. Returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Build(args) => cmd_build(&RunConfig::from_args(&args)?),
        Command::Merge(args) => cmd_merge(&RunConfig::from_args(&args)?),
        Command::Split(args) => cmd_split(&RunConfig::from_args(&args)?),
        Command::Query(args) => cmd_query(&RunConfig::from_args(&args)?, &mut std::io::stdout()),
        Command::Eval(args) => cmd_eval(&RunConfig::from_args(&args)?),
        Command::Sweep(args) => cmd_sweep(&RunConfig::from_args(&args)?),
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let out: PathBuf = match args.out.clone() {
        Some(v) => v,
        None => file
            .get::<PathBuf>("out")?
            .ok_or_else(|| Error::Config("--out directory is required".into()))?,
    };
    let cfg = SyntheticConfig {
        n_db: resolve!(args.n_db, file, "n-db", 1000),
        n_queries: resolve!(args.n_queries, file, "n-queries", 100),
        d: resolve!(args.d, file, "d", 32),
        n_labels: resolve!(args.n_labels, file, "n-labels", 100),
        clusters: resolve!(args.clusters, file, "clusters", 20),
        label_noise: resolve!(args.label_noise, file, "label-noise", 0.1),
        seed: resolve!(args.seed, file, "seed", 0),
    };
    let data = synth_dataset(&cfg)?;
    std::fs::create_dir_all(&out)?;
    let files = json!({
        "db_features": out.join("db.fvec"),
        "query_features": out.join("queries.fvec"),
        "db_labels": out.join("db.lbl"),
        "query_labels": out.join("queries.lbl"),
        "ground_truth": out.join("gt.txt"),
    });
    write_features(out.join("db.fvec"), &data.db)?;
    write_features(out.join("queries.fvec"), &data.queries)?;
    write_labels(out.join("db.lbl"), &data.db_labels)?;
    write_labels(out.join("queries.lbl"), &data.query_labels)?;
    write_ground_truth(out.join("gt.txt"), &data.ground_truth)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "n_db": cfg.n_db,
            "n_queries": cfg.n_queries,
            "d": cfg.d,
            "n_labels": cfg.n_labels,
            "clusters": cfg.clusters,
            "label_noise": cfg.label_noise,
            "seed": cfg.seed,
            "files": files,
        }))
        .expect("summary serializes")
    );
    Ok(())
}

/// Bucketed histogram of posting-list lengths (powers of two).
fn list_histogram(lists: &[Vec<u64>]) -> serde_json::Value {
    let mut buckets: std::collections::BTreeMap<u64, usize> = std::collections::BTreeMap::new();
    for list in lists {
        let len = list.len() as u64;
        let bucket = if len == 0 { 0 } else { 1u64 << (63 - len.leading_zeros()) };
        *buckets.entry(bucket).or_default() += 1;
    }
    json!(buckets
        .into_iter()
        .map(|(b, c)| {
            let label = if b == 0 {
                "0".to_string()
            } else {
                format!("{}-{}", b, 2 * b - 1)
            };
            (label, c)
        })
        .collect::<std::collections::BTreeMap<String, usize>>())
}

fn build_summary(index: &SemanticIndex, pq: bool) -> serde_json::Value {
    json!({
        "n": index.n_items(),
        "n_labels": index.params.n_labels,
        "alpha": index.params.alpha,
        "cells": index.n_cells(),
        "merged": index.mapping.is_some(),
        "split": index.split.as_ref().map(|s| s.l),
        "pq": pq,
        "posting_entries": index.lists.iter().map(|l| l.len()).sum::<usize>(),
        "list_length_histogram": list_histogram(&index.lists),
    })
}

pub fn cmd_build(cfg: &RunConfig) -> Result<()> {
    let labels = read_labels(cfg.need(&cfg.labels, "labels")?)?;
    let out = cfg.need(&cfg.out.clone().or(cfg.index.clone()), "index")?;
    let params = IndexParams::new(cfg.alpha, labels.n_labels)?;
    let mapping = match cfg.merge_cells {
        Some(cells) => {
            let cooc = cooccurrence_matrix(&labels, cfg.cooc_k)?;
            Some(merge_labels(&cooc, cells)?)
        }
        None => None,
    };
    let index = build_index(&labels, params, mapping)?;
    let pq = if cfg.pq {
        let features = read_features(cfg.need(&cfg.features, "features")?)?;
        if features.n() != labels.n() {
            return Err(Error::Config(format!(
                "feature file has {} rows, label file has {}",
                features.n(),
                labels.n()
            )));
        }
        Some(build_residual_pq(
            &features,
            &index.lists,
            cfg.pq_m as usize,
            cfg.pq_k,
            sub_seed(cfg.seed, "pq"),
            Some(100_000),
        )?)
    } else {
        None
    };
    save_index(&out, &index, pq.as_ref())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&build_summary(&index, pq.is_some())).unwrap()
    );
    Ok(())
}

pub fn cmd_merge(cfg: &RunConfig) -> Result<()> {
    let (old, old_pq) = load_index(cfg.need(&cfg.index, "index")?)?;
    let labels = read_labels(cfg.need(&cfg.labels, "labels")?)?;
    let cells = cfg
        .merge_cells
        .ok_or_else(|| Error::Config("--merge-cells is required for merge".into()))?;
    let out = cfg.need(&cfg.out, "out")?;
    if old.split.is_some() || old_pq.is_some() {
        log::warn!("merge rebuilds the partitions; split and PQ blocks are dropped");
    }
    let cooc = cooccurrence_matrix(&labels, cfg.cooc_k)?;
    let mapping = merge_labels(&cooc, cells)?;
    let index = build_index(&labels, old.params, Some(mapping))?;
    save_index(&out, &index, None)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&build_summary(&index, false)).unwrap()
    );
    Ok(())
}

pub fn cmd_split(cfg: &RunConfig) -> Result<()> {
    let (index, pq) = load_index(cfg.need(&cfg.index, "index")?)?;
    let features = read_features(cfg.need(&cfg.features, "features")?)?;
    let out = cfg.need(&cfg.out.clone().or(cfg.index.clone()), "out")?;
    let split = split_index(&index, &features, cfg.l, sub_seed(cfg.seed, "split"))?;
    save_index(&out, &split, pq.as_ref())?;
    let sub_total: usize = split
        .split
        .as_ref()
        .map(|s| s.cells.iter().map(|c| c.lists.len()).sum())
        .unwrap_or(0);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "cells": split.n_cells(),
            "L": cfg.l,
            "sub_cells_total": sub_total,
            "pq": pq.is_some(),
        }))
        .unwrap()
    );
    Ok(())
}

/// Everything loaded for query/eval/sweep runs.
struct Workbench {
    db: Option<FeatureSet>,
    queries: FeatureSet,
    query_labels: Option<LabelMatrix>,
    gt: Option<GroundTruth>,
    index: Option<SemanticIndex>,
    pq: Option<ResidualPq>,
}

impl Workbench {
    fn load(cfg: &RunConfig, needs_gt: bool) -> Result<Self> {
        let queries = read_features(cfg.need(&cfg.queries, "queries")?)?;
        let db = cfg.features.as_ref().map(read_features).transpose()?;
        let query_labels = cfg.query_labels.as_ref().map(read_labels).transpose()?;
        let gt = if needs_gt {
            Some(read_ground_truth(cfg.need(&cfg.gt, "gt")?)?)
        } else {
            cfg.gt.as_ref().map(read_ground_truth).transpose()?
        };
        let (index, pq) = match &cfg.index {
            Some(path) => {
                let (i, p) = load_index(path)?;
                (Some(i), p)
            }
            None => (None, None),
        };
        Ok(Workbench {
            db,
            queries,
            query_labels,
            gt,
            index,
            pq,
        })
    }

    fn db(&self) -> Result<&FeatureSet> {
        self.db
            .as_ref()
            .ok_or_else(|| Error::Config("--features (database vectors) is required".into()))
    }

    fn index(&self) -> Result<&SemanticIndex> {
        self.index
            .as_ref()
            .ok_or_else(|| Error::Config("--index is required for this strategy".into()))
    }
}

/// Built baseline artifacts owned outside the borrowed `Engine`.
enum Prepared {
    None,
    Ivf(crate::search::IvfIndex),
    Flat(crate::quant::FlatPq),
}

fn prepare_engine<'a>(
    cfg: &RunConfig,
    bench: &'a Workbench,
    prepared: &'a mut Prepared,
) -> Result<Engine<'a>> {
    let beta = cfg.beta as usize;
    match cfg.strategy.as_str() {
        "exhaustive" => Ok(Engine::Exhaustive { db: bench.db()? }),
        "ivf" | "ivf-adc" => {
            let db = bench.db()?;
            let mut ivf = ivf_build(db, cfg.k_coarse as usize, sub_seed(cfg.seed, "kmeans"))?;
            if cfg.strategy == "ivf-adc" {
                ivf_attach_pq(
                    &mut ivf,
                    db,
                    cfg.pq_m as usize,
                    cfg.pq_k,
                    sub_seed(cfg.seed, "pq"),
                    Some(100_000),
                )?;
            }
            *prepared = Prepared::Ivf(ivf);
            let Prepared::Ivf(ivf) = prepared else { unreachable!() };
            if cfg.strategy == "ivf" {
                Ok(Engine::Ivf {
                    index: ivf,
                    db,
                    nprobe: cfg.nprobe as usize,
                })
            } else {
                Ok(Engine::IvfAdc {
                    index: ivf,
                    nprobe: cfg.nprobe as usize,
                })
            }
        }
        "adc" => {
            let db = bench.db()?;
            let flat = build_flat_pq(
                db,
                cfg.pq_m as usize,
                cfg.pq_k,
                sub_seed(cfg.seed, "pq"),
                Some(100_000),
            )?;
            *prepared = Prepared::Flat(flat);
            let Prepared::Flat(flat) = prepared else { unreachable!() };
            Ok(Engine::FlatAdc { storage: flat })
        }
        "semantic" => {
            let index = bench.index()?;
            // Pruning engages when the index carries a split structure; tau
            // defaults to 0.1 and tau = 1 disables pruning in effect.
            let tau = match (&index.split, cfg.tau) {
                (Some(_), tau) => Some(tau.unwrap_or(DEFAULT_TAU)),
                (None, Some(_)) => return Err(Error::MissingSplit),
                (None, None) => None,
            };
            Ok(Engine::Semantic {
                index,
                db: bench.db()?,
                beta,
                tau,
            })
        }
        "semantic-adc" => {
            let index = bench.index()?;
            let storage = bench.pq.as_ref().ok_or(Error::MissingPq)?;
            Ok(Engine::SemanticAdc {
                index,
                storage,
                beta,
            })
        }
        other => Err(Error::Config(format!(
            "unknown strategy {other:?} (expected exhaustive, ivf, ivf-adc, adc, semantic, semantic-adc)"
        ))),
    }
}

fn echo_for(cfg: &RunConfig, bench: &Workbench) -> ConfigEcho {
    let index_alpha = bench.index.as_ref().map(|i| i.params.alpha);
    ConfigEcho {
        strategy: cfg.strategy.clone(),
        metric: cfg.metric.to_string(),
        alpha: index_alpha.or(Some(cfg.alpha)),
        beta: match cfg.strategy.as_str() {
            "semantic" | "semantic-adc" => Some(cfg.beta),
            _ => None,
        },
        tau: match cfg.strategy.as_str() {
            "semantic" => cfg
                .tau
                .or_else(|| bench.index.as_ref().and_then(|i| i.split.as_ref()).map(|_| DEFAULT_TAU)),
            _ => None,
        },
        l: bench
            .index
            .as_ref()
            .and_then(|i| i.split.as_ref())
            .map(|s| s.l),
        m: match cfg.strategy.as_str() {
            "adc" | "ivf-adc" => Some(cfg.pq_m),
            "semantic-adc" => bench.pq.as_ref().map(|p| p.codebook.m as u32),
            _ => None,
        },
        k: match cfg.strategy.as_str() {
            "adc" | "ivf-adc" => Some(cfg.pq_k),
            "semantic-adc" => bench.pq.as_ref().map(|p| p.codebook.k_bits),
            _ => None,
        },
        nprobe: match cfg.strategy.as_str() {
            "ivf" | "ivf-adc" => Some(cfg.nprobe),
            _ => None,
        },
        merge_cells: cfg.merge_cells,
        seed: cfg.seed,
    }
}

pub fn cmd_query(cfg: &RunConfig, out: &mut impl std::io::Write) -> Result<()> {
    let bench = Workbench::load(cfg, false)?;
    let mut prepared = Prepared::None;
    let engine = prepare_engine(cfg, &bench, &mut prepared)?;
    let top = cfg
        .top
        .unwrap_or_else(|| cfg.r_list.iter().copied().max().unwrap_or(100));
    let gt = GroundTruth::default();
    let qs = QuerySet {
        queries: &bench.queries,
        query_labels: bench.query_labels.as_ref(),
        ground_truth: &gt,
    };
    for qid in 0..bench.queries.n() as u64 {
        let ranking = engine.search(&qs, qid, Some(top), cfg.metric)?;
        let mut line = String::new();
        write!(line, "{qid}:").unwrap();
        for (id, score) in ranking.items {
            write!(line, " {id}={score:.6}").unwrap();
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<()> {
    let report = eval_report(cfg)?;
    if let Some(csv) = &cfg.csv {
        append_csv(csv, &cfg.r_list, &report)?;
    }
    println!("{}", report.to_json());
    Ok(())
}

/// Runs one evaluation and returns the report (shared by eval and tests).
pub fn eval_report(cfg: &RunConfig) -> Result<MetricsReport> {
    let bench = Workbench::load(cfg, true)?;
    let mut prepared = Prepared::None;
    let engine = prepare_engine(cfg, &bench, &mut prepared)?;
    let qs = QuerySet {
        queries: &bench.queries,
        query_labels: bench.query_labels.as_ref(),
        ground_truth: bench.gt.as_ref().expect("eval loads ground truth"),
    };
    evaluate(&engine, &qs, cfg.metric, &cfg.r_list, echo_for(cfg, &bench))
}

fn append_csv(path: &Path, r_list: &[usize], report: &MetricsReport) -> Result<()> {
    use std::io::Write;
    let exists = path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if !exists {
        writeln!(file, "{}", MetricsReport::csv_header(r_list))?;
    }
    writeln!(file, "{}", report.csv_row())?;
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let labels_path = cfg.need(&cfg.labels, "labels")?;
    let labels = read_labels(&labels_path)?;
    let db = read_features(cfg.need(&cfg.features, "features")?)?;
    let queries = read_features(cfg.need(&cfg.queries, "queries")?)?;
    let query_labels = read_labels(cfg.need(&cfg.query_labels, "query-labels")?)?;
    let gt = read_ground_truth(cfg.need(&cfg.gt, "gt")?)?;
    let qs = QuerySet {
        queries: &queries,
        query_labels: Some(&query_labels),
        ground_truth: &gt,
    };

    let betas = if cfg.betas.is_empty() {
        vec![cfg.beta]
    } else {
        cfg.betas.clone()
    };
    let mut rows: Vec<MetricsReport> = Vec::new();
    if cfg.taus.is_empty() {
        // alpha x beta grid; the index is rebuilt per alpha.
        let alphas = if cfg.alphas.is_empty() {
            vec![cfg.alpha]
        } else {
            cfg.alphas.clone()
        };
        for &alpha in &alphas {
            let index = build_index(&labels, IndexParams::new(alpha, labels.n_labels)?, None)?;
            for &beta in &betas {
                let engine = Engine::Semantic {
                    index: &index,
                    db: &db,
                    beta: beta as usize,
                    tau: None,
                };
                let echo = ConfigEcho {
                    strategy: "semantic".into(),
                    metric: cfg.metric.to_string(),
                    alpha: Some(alpha),
                    beta: Some(beta),
                    seed: cfg.seed,
                    ..Default::default()
                };
                rows.push(evaluate(&engine, &qs, cfg.metric, &cfg.r_list, echo)?);
            }
        }
    } else {
        // beta x tau grid over a split index built at the configured alpha.
        let index = build_index(&labels, IndexParams::new(cfg.alpha, labels.n_labels)?, None)?;
        let index = split_index(&index, &db, cfg.l, sub_seed(cfg.seed, "split"))?;
        for &beta in &betas {
            for &tau in &cfg.taus {
                let engine = Engine::Semantic {
                    index: &index,
                    db: &db,
                    beta: beta as usize,
                    tau: Some(tau),
                };
                let echo = ConfigEcho {
                    strategy: "semantic".into(),
                    metric: cfg.metric.to_string(),
                    alpha: Some(cfg.alpha),
                    beta: Some(beta),
                    tau: Some(tau),
                    l: Some(cfg.l),
                    seed: cfg.seed,
                    ..Default::default()
                };
                rows.push(evaluate(&engine, &qs, cfg.metric, &cfg.r_list, echo)?);
            }
        }
    }

    println!("{}", MetricsReport::csv_header(&cfg.r_list));
    for row in &rows {
        println!("{}", row.csv_row());
    }
    if let Some(csv) = &cfg.csv {
        for row in &rows {
            append_csv(csv, &cfg.r_list, row)?;
        }
    }
    Ok(())
}
