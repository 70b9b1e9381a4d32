//! The `alrank` command line.
//!
//! Config precedence: `--profile` preset, then `--config` file, then
//! `--set key=value` overrides. Every subcommand writes only under its
//! output path, and identical inputs give identical bytes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::budget::{annotation_cost, compute_cost, CostConfig};
use crate::datamodel::{write_text, Corpus, QuerySet, Qrels, Run, SyntheticSpec, DEFAULT_RELEVANCE_THRESHOLD};
use crate::error::{Error, Result};
use crate::evaluation::{emit_reports, VariabilityRecord};
use crate::experiment::{
    collect_summaries, run_strategies, run_variability, untrained_baseline, DataBundle, ExperimentConfig, Profile,
    RunOptions, CORPUS_FILE, QRELS_FILE, TEST_FILE, TRAIN_FILE,
};
use crate::lexical::{Bm25Params, InvertedIndex};
use crate::selection::Strategy;

const THREADS_ENV: &str = "ALRANK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "alrank", version, about = "Budget-aware active learning for trainable rankers")]
pub struct Cli {
    /// Worker threads (default: $ALRANK_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 index from a collection file.
    BuildIndex {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        k1: f64,
        #[arg(long, default_value_t = 0.4)]
        b: f64,
    },
    /// BM25 top-k for every query, written as a TREC run.
    Retrieve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        k: usize,
        #[arg(long, default_value = "bm25")]
        tag: String,
    },
    /// Write a planted-topic data directory.
    MakeSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// JSON file with generator settings; missing keys keep defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Train on random subsets of several sizes and record test nDCG@10.
    RunVariability {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated sizes (default: `variability_sizes`).
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Repeats per size (default: `random_repeats`).
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Run the active-learning loop and write reports.
    RunAl {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// random, uncertainty, qbc, diversity or all.
        #[arg(long, default_value = "all")]
        strategy: String,
        /// Stop every run after this iteration (resume continues).
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Continue the runs in an output directory.
    Resume {
        #[command(flatten)]
        data: DataArgs,
        /// Overrides; anything that changes the config fails the fingerprint check.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Annotation and compute cost for given totals.
    CostCalc {
        #[arg(long)]
        assessments: u64,
        #[arg(long, default_value_t = 0.0)]
        gpu_hours: f64,
        /// Selection hours per iteration (default: the config's `cpu_hours`).
        #[arg(long)]
        cpu_hours: Option<f64>,
        #[arg(long, default_value_t = 1)]
        iteration: usize,
        /// `default` or a flat JSON file.
        #[arg(long, default_value = "default")]
        config: String,
    },
    /// Rebuild report files from a run directory and print the summary.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to `<in>/reports`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Data files: a directory in the `make-synthetic` layout, individual
/// paths, or both (paths win).
#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub train_queries: Option<PathBuf>,
    #[arg(long)]
    pub test_queries: Option<PathBuf>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// desk or full.
    #[arg(long, default_value = "desk")]
    pub profile: String,
    /// Flat JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::profile(self.profile.parse::<Profile>()?);
        if let Some(path) = &self.config {
            c = c.merge_file(path)?;
        }
        c.apply_sets(&self.sets)
    }
}

impl DataArgs {
    fn path(&self, explicit: &Option<PathBuf>, flag: &str, file: &str) -> Result<PathBuf> {
        if let Some(p) = explicit {
            return Ok(p.clone());
        }
        match &self.data {
            Some(dir) if dir.join(file).exists() => Ok(dir.join(file)),
            Some(dir) => Err(Error::invalid(format!("missing {flag}: {} has no {file}", dir.display()))),
            None => Err(Error::invalid(format!("missing {flag} (or --data with {file})"))),
        }
    }

    fn load(&self, bm25: Bm25Params) -> Result<DataBundle> {
        let corpus = self.path(&self.corpus, "--corpus", CORPUS_FILE)?;
        let train = self.path(&self.train_queries, "--train-queries", TRAIN_FILE)?;
        let test = self.path(&self.test_queries, "--test-queries", TEST_FILE)?;
        let qrels = self.path(&self.qrels, "--qrels", QRELS_FILE)?;
        let all_default = [&self.corpus, &self.train_queries, &self.test_queries, &self.qrels]
            .iter()
            .all(|p| p.is_none());
        match (&self.data, all_default) {
            // lets a saved index be reused
            (Some(dir), true) => DataBundle::load(dir, bm25),
            _ => DataBundle::new(
                Corpus::read_tsv(corpus)?,
                QuerySet::read_tsv(train)?,
                QuerySet::read_tsv(test)?,
                Qrels::read(qrels, DEFAULT_RELEVANCE_THRESHOLD)?,
                bm25,
            ),
        }
    }
}

fn parse_strategies(s: &str) -> Result<Vec<Strategy>> {
    if s == "all" {
        Ok(Strategy::ALL.to_vec())
    } else {
        s.split(',').map(|x| x.trim().parse()).collect()
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn emit(input: &Path, out: &Path, print: bool) -> Result<()> {
    let runs = collect_summaries(input)?;
    let var_path = input.join("variability.json");
    let variability: Vec<VariabilityRecord> = if var_path.exists() {
        serde_json::from_str(&crate::datamodel::read_text(&var_path)?)?
    } else {
        Vec::new()
    };
    if runs.is_empty() && variability.is_empty() {
        return Err(Error::invalid(format!("{} holds no runs or variability records", input.display())));
    }
    let alpha = match input.join("config.json") {
        p if p.exists() => ExperimentConfig::default().merge_file(&p)?.alpha,
        _ => ExperimentConfig::default().alpha,
    };
    let files = emit_reports(&runs, &variability, alpha, out)?;
    if print {
        print!("{}", crate::datamodel::read_text(&files.summary)?);
    }
    Ok(())
}

fn write_config(out: &Path, config: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_text(&out.join("config.json"), &config.to_json_pretty())
}

/// Strategies with a run directory under `out`.
fn strategies_in(out: &Path) -> Result<Vec<Strategy>> {
    let mut found = Vec::new();
    for s in Strategy::ALL {
        if out.join(crate::experiment::run_dir_name(s, 0)).exists() {
            found.push(s);
        }
    }
    if found.is_empty() {
        return Err(Error::Resume(format!("no runs found under {}", out.display())));
    }
    Ok(found)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildIndex { corpus, out, k1, b } => {
            let corpus = Corpus::read_tsv(&corpus)?;
            let index = crate::lexical::build_index(&corpus, Bm25Params { k1, b })?;
            index.save(&out)?;
            println!("indexed {} documents, {} terms -> {}", index.num_docs(), index.num_terms(), out.display());
        }
        Command::Retrieve { index, queries, out, k, tag } => {
            let index = InvertedIndex::load(&index)?;
            let queries = QuerySet::read_tsv(&queries)?;
            let mut run = Run::new(tag)?;
            for (q, text) in queries.iter() {
                run.insert(index.retrieve_topk(q, text, k));
            }
            run.write(&out)?;
            println!("retrieved {} queries -> {}", run.len(), out.display());
        }
        Command::MakeSynthetic { out, seed, spec } => {
            let spec: SyntheticSpec = match spec {
                Some(p) => serde_json::from_str(&crate::datamodel::read_text(&p)?)?,
                None => SyntheticSpec::default(),
            };
            let bundle = DataBundle::synthetic(&spec, seed, Bm25Params::default())?;
            bundle.save(&out)?;
            println!(
                "{} documents, {} train / {} test queries -> {}",
                bundle.corpus.len(),
                bundle.train.len(),
                bundle.test.len(),
                out.display()
            );
        }
        Command::RunVariability { data, config, out, sizes, repeats } => {
            let config = config.resolve()?;
            let bundle = data.load(config.bm25)?;
            let sizes = if sizes.is_empty() { config.variability_sizes.clone() } else { sizes };
            let repeats = repeats.unwrap_or(config.random_repeats);
            let records = run_variability(&config, &bundle, &sizes, repeats)?;
            write_config(&out, &config)?;
            crate::experiment::write_json_file(&out.join("variability.json"), &records)?;
            let baseline = untrained_baseline(&config, &bundle, repeats)?;
            emit(&out, &out.join("reports"), false)?;
            println!("untrained ranker nDCG@10: {baseline:.4}");
            for size in &sizes {
                let mut v: Vec<f64> = records.iter().filter(|r| r.size == *size).map(|r| r.ndcg10).collect();
                v.sort_by(f64::total_cmp);
                println!(
                    "size {size:>6}: min {:.4}  median {:.4}  max {:.4}",
                    v[0],
                    median(&v),
                    v[v.len() - 1]
                );
            }
        }
        Command::RunAl { data, config, out, strategy, stop_after } => {
            let config = config.resolve()?;
            let bundle = data.load(config.bm25)?;
            let strategies = parse_strategies(&strategy)?;
            run_strategies(&config, &bundle, &strategies, &out, RunOptions { stop_after })?;
            emit(&out, &out.join("reports"), true)?;
        }
        Command::Resume { data, sets, out } => {
            let config = ExperimentConfig::default()
                .merge_file(&out.join("config.json"))?
                .apply_sets(&sets)?;
            let bundle = data.load(config.bm25)?;
            let strategies = strategies_in(&out)?;
            run_strategies(&config, &bundle, &strategies, &out, RunOptions::default())?;
            emit(&out, &out.join("reports"), true)?;
        }
        Command::CostCalc { assessments, gpu_hours, cpu_hours, iteration, config } => {
            let cost = if config == "default" {
                CostConfig::default()
            } else {
                CostConfig::read(&config)?
            };
            let c_a = annotation_cost(assessments, &cost);
            let c_c = compute_cost(gpu_hours, cpu_hours.unwrap_or(cost.cpu_hours), iteration, &cost)?;
            println!("C_A={c_a:.2}");
            println!("C_C={c_c:.2}");
            println!("C={:.2}", c_a + c_c);
        }
        Command::Report { input, out } => {
            let out = out.unwrap_or_else(|| input.join("reports"));
            emit(&input, &out, true)?;
        }
    }
    Ok(())
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Parses `std::env::args`, runs, and maps errors to a one-line message
/// and exit code 1.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads(cli.threads).and_then(|t| {
        if let Some(n) = t {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        }
        run(cli)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("alrank: error: {e}");
            ExitCode::FAILURE
        }
    }
}
