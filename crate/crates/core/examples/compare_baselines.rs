//! Runs gradient matching and every comparison selector on one synthetic
//! task and writes the evaluation CSV.
//!
//! ```text
//! cargo run --release --example compare_baselines -- report.csv
//! ```

use std::time::Instant;

use clg::baselines::{
    best_of_n_select, bm25_major_select, kmeans_embed_select, latent_bayesian_select,
    random_select, Bm25Params, RetrainScorer, DEFAULT_CANDIDATES, DEFAULT_KMEANS_ITERS,
};
use clg::metrics::emit_report;
use clg::pipeline::{prepare, timed_report, EvalSettings};
use clg::synth::{balanced_task, pool_and_holdout};
use clg::{ProxyModel, SelectionSpec, TrainConfig};

fn main() -> clg::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "compare_baselines.csv".to_string());
    let n = 128;
    let seed = 3;
    let model = ProxyModel::new(32, 4, 4, 10, seed)?;
    let (pool, holdout) = pool_and_holdout(&model, &balanced_task().with_text(), 2000, 400, seed)?;
    let prep = prepare(&pool, &model, &TrainConfig::default().with_seed(seed))?;
    let settings = EvalSettings::default();

    let mut reports = Vec::new();
    let (clg_sel, t) = prep.select(&SelectionSpec::new(n))?;
    reports.push(timed_report(&pool, &holdout, &model, &prep, &clg_sel, t.greedy + t.swap, &settings)?);

    let start = Instant::now();
    let sel = random_select(&pool, n, seed, None)?;
    reports.push(timed_report(&pool, &holdout, &model, &prep, &sel, start.elapsed(), &settings)?);

    let start = Instant::now();
    let scorer = RetrainScorer {
        pool: &pool,
        model: &model,
        cfg: settings.finetune,
    };
    let sel = best_of_n_select(&pool, n, DEFAULT_CANDIDATES, seed, &scorer, None)?.selection;
    reports.push(timed_report(&pool, &holdout, &model, &prep, &sel, start.elapsed(), &settings)?);

    let start = Instant::now();
    let sel = kmeans_embed_select(pool.features(), n, seed, DEFAULT_KMEANS_ITERS)?.selection;
    reports.push(timed_report(&pool, &holdout, &model, &prep, &sel, start.elapsed(), &settings)?);

    let start = Instant::now();
    let sel = bm25_major_select(&pool.texts(), n, Bm25Params::default())?;
    reports.push(timed_report(&pool, &holdout, &model, &prep, &sel, start.elapsed(), &settings)?);

    let start = Instant::now();
    let sel = latent_bayesian_select(&pool, &model, prep.checkpoints.last(), n)?;
    reports.push(timed_report(&pool, &holdout, &model, &prep, &sel, start.elapsed(), &settings)?);

    println!("{:<16} {:>11} {:>9} {:>9} {:>9}", "method", "l2", "kl", "ft nll", "match ms");
    for r in &reports {
        println!(
            "{:<16} {:>11.4e} {:>9.5} {:>9.5} {:>9.1}",
            r.method, r.l2_distance, r.label_kl, r.proxy_ft_holdout_nll, r.wall_ms_match
        );
    }
    emit_report(&reports, &out)?;
    println!("wrote {out}");
    Ok(())
}
