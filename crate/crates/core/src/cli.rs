//! Command-line front end.
//!
//! Exit codes: 0 on success (including `--help`), 1 on usage errors, 2 when
//! the inputs are unreadable or invalid.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{
    best_of_n_select, bm25_major_select, kmeans_embed_select, latent_bayesian_select,
    random_select, Bm25Params, RetrainScorer, DEFAULT_CANDIDATES, DEFAULT_KMEANS_ITERS,
};
use crate::error::{ClgError, Result};
use crate::io::{load_pool, read_matrix, write_matrix, DemoPool, FileConfig, PoolSchema, RunConfig};
use crate::matcher::{
    brute_force_select, select_timed, Direction, SelectionResult, SelectionSpec,
    DEFAULT_MAX_SWAPS,
};
use crate::metrics::emit_report;
use crate::pipeline::{evaluate_selection, EvalSettings};
use crate::proxy::ProxyModel;
use crate::trainer::{compute_curriculum_gradients, train_concept, CheckpointSeries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "clg",
    version,
    about = "Select many-shot demonstrations by matching curriculum latent gradients",
    after_help = "Settings are resolved as: command-line flag, then --config file, then built-in default."
)]
pub struct Cli {
    /// Seed for model initialization, training and random baselines.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file of `key = value` settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the concept on a pool and write its checkpoints.
    Train {
        #[command(flatten)]
        pool: PoolArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the curriculum gradient matrix from a pool and checkpoints.
    Grads {
        #[command(flatten)]
        pool: PoolArg,
        #[arg(long)]
        checkpoints: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select n rows of a gradient matrix by gradient matching.
    Select {
        #[arg(long)]
        grads: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_SWAPS)]
        max_swaps: usize,
        #[arg(long, value_enum, default_value_t = DirectionArg::Minimize)]
        direction: DirectionArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a comparison selector.
    Baseline {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        pool: PoolArg,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Gradient matrix; when given, the matching distance is filled in.
        #[arg(long)]
        grads: Option<PathBuf>,
        /// Checkpoints file (latent-bayesian).
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Embedding matrix (kmeans); defaults to the pool features.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Candidate count (best-of-n).
        #[arg(long, default_value_t = DEFAULT_CANDIDATES as u64, value_parser = clap::value_parser!(u64).range(1..))]
        candidates: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score selection documents and write a CSV report.
    Eval {
        #[command(flatten)]
        pool: PoolArg,
        #[arg(long)]
        holdout: PathBuf,
        #[arg(long)]
        grads: PathBuf,
        /// Selection documents; one report row each, in the given order.
        #[arg(long = "selection", required = true)]
        selections: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive optimum for small matrices.
    Oracle {
        #[arg(long)]
        grads: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct PoolArg {
    /// Line-delimited JSON pool.
    #[arg(long)]
    pub pool: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Minimize,
    Maximize,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Minimize => Direction::Minimize,
            DirectionArg::Maximize => Direction::Maximize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Random,
    BestOfN,
    Kmeans,
    Bm25,
    LatentBayesian,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::resolve(&file, cli.seed, cli.threads.map(|t| t as usize))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let workers = builder
        .build()
        .map_err(|e| ClgError::Config(format!("thread pool: {e}")))?;
    workers.install(|| dispatch(cli.command, &cfg))
}

fn schema(cfg: &RunConfig) -> PoolSchema {
    PoolSchema {
        classes: cfg.classes,
        text_dim: cfg.text_dim,
    }
}

fn model_for(pool: &DemoPool, cfg: &RunConfig) -> Result<ProxyModel> {
    ProxyModel::new(
        pool.feature_dim(),
        pool.classes(),
        cfg.concept_rows,
        cfg.concept_cols,
        cfg.seed,
    )
}

fn read_checkpoints(path: &Path, cfg: &RunConfig) -> Result<CheckpointSeries> {
    CheckpointSeries::from_matrix(&read_matrix(path)?, cfg.concept_rows, cfg.concept_cols)
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Train { pool, out } => {
            let pool = load_pool(&pool.pool, schema(cfg))?;
            let model = model_for(&pool, cfg)?;
            let series = train_concept(&pool, &model, &cfg.train)?;
            write_matrix(&out, &series.to_matrix())
        }
        Command::Grads {
            pool,
            checkpoints,
            out,
        } => {
            let pool = load_pool(&pool.pool, schema(cfg))?;
            let model = model_for(&pool, cfg)?;
            let series = read_checkpoints(&checkpoints, cfg)?;
            let g = compute_curriculum_gradients(&pool, &model, &series)?;
            write_matrix(&out, g.matrix())
        }
        Command::Select {
            grads,
            n,
            max_swaps,
            direction,
            out,
        } => {
            let g = read_matrix(&grads)?;
            let spec = SelectionSpec::new(n as usize)
                .max_swaps(max_swaps)
                .direction(direction.into());
            let (result, t) = select_timed(&g, &spec)?;
            eprintln!(
                "greedy {:.1} ms, swaps {:.1} ms",
                t.greedy.as_secs_f64() * 1e3,
                t.swap.as_secs_f64() * 1e3
            );
            result.write(&out)
        }
        Command::Baseline {
            kind,
            pool,
            n,
            grads,
            checkpoints,
            embeddings,
            candidates,
            out,
        } => {
            let pool = load_pool(&pool.pool, schema(cfg))?;
            let n = n as usize;
            let g = grads.as_deref().map(read_matrix).transpose()?;
            let result = match kind {
                KindArg::Random => random_select(&pool, n, cfg.seed, None)?,
                KindArg::BestOfN => {
                    let model = model_for(&pool, cfg)?;
                    let scorer = RetrainScorer {
                        pool: &pool,
                        model: &model,
                        cfg: cfg.finetune,
                    };
                    best_of_n_select(&pool, n, candidates as usize, cfg.seed, &scorer, None)?.selection
                }
                KindArg::Kmeans => {
                    let emb = match &embeddings {
                        Some(p) => read_matrix(p)?,
                        None => pool.features().clone(),
                    };
                    if emb.rows() != pool.len() {
                        return Err(ClgError::dim(format!(
                            "embedding matrix has {} rows, pool has {} examples",
                            emb.rows(),
                            pool.len()
                        )));
                    }
                    kmeans_embed_select(&emb, n, cfg.seed, DEFAULT_KMEANS_ITERS)?.selection
                }
                KindArg::Bm25 => {
                    if let Some(e) = pool.examples().iter().find(|e| e.text.is_none()) {
                        return Err(ClgError::Featurization(format!(
                            "bm25 needs text, example {:?} has none",
                            e.id
                        )));
                    }
                    bm25_major_select(&pool.texts(), n, Bm25Params::default())?
                }
                KindArg::LatentBayesian => {
                    let path = checkpoints.as_deref().ok_or_else(|| {
                        ClgError::Config("latent-bayesian needs --checkpoints".into())
                    })?;
                    let model = model_for(&pool, cfg)?;
                    let series = read_checkpoints(path, cfg)?;
                    latent_bayesian_select(&pool, &model, series.last(), n)?
                }
            };
            let result = match &g {
                Some(g) => result.with_distance_from(g)?,
                None => result,
            };
            result.write(&out)
        }
        Command::Eval {
            pool,
            holdout,
            grads,
            selections,
            out,
        } => {
            let pool = load_pool(&pool.pool, schema(cfg))?;
            let holdout = load_pool(
                &holdout,
                PoolSchema {
                    classes: Some(pool.classes()),
                    ..schema(cfg)
                },
            )?;
            let model = model_for(&pool, cfg)?;
            let g = read_matrix(&grads)?;
            let g = crate::trainer::CurriculumGradientMatrix::from_matrix(g, model.concept_len())?;
            let settings = EvalSettings {
                finetune: cfg.finetune,
                alpha: cfg.alpha,
            };
            let mut reports = Vec::with_capacity(selections.len());
            for path in &selections {
                let sel = SelectionResult::read(path)?;
                reports.push(evaluate_selection(&pool, &holdout, &model, &g, &sel, &settings)?);
            }
            emit_report(&reports, &out)
        }
        Command::Oracle { grads, n, out } => {
            let g = read_matrix(&grads)?;
            brute_force_select(&g, n as usize)?.into_selection().write(&out)
        }
    }
}
