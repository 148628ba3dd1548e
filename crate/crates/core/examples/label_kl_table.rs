//! Label-distribution KL to the holdout for gradient matching, random
//! subsets and the likelihood-ranked selector, on balanced and skewed-
//! difficulty tasks.

use clg::baselines::{latent_bayesian_select, random_select};
use clg::io::DemoPool;
use clg::metrics::{label_kl, LabelDistribution, DEFAULT_ALPHA};
use clg::pipeline::prepare;
use clg::synth::{balanced_task, easy_class_task, pool_and_holdout, SynthTask};
use clg::{ProxyModel, SelectionSpec, TrainConfig};

fn kl(pool: &DemoPool, idx: &[usize], reference: &LabelDistribution) -> clg::Result<f64> {
    let labels: Vec<usize> = idx.iter().map(|&i| pool.label(i)).collect();
    let p = LabelDistribution::from_labels(&labels, pool.classes(), DEFAULT_ALPHA)?;
    label_kl(&p, reference)
}

fn row(name: &str, task: &SynthTask) -> clg::Result<()> {
    let n = 128;
    let model = ProxyModel::new(32, 4, 4, 10, 0)?;
    let (pool, holdout) = pool_and_holdout(&model, task, 2000, 400, 0)?;
    let reference = LabelDistribution::from_labels(&holdout.labels(), 4, DEFAULT_ALPHA)?;
    let prep = prepare(&pool, &model, &TrainConfig::default())?;

    let (sel, _) = prep.select(&SelectionSpec::new(n))?;
    let k_clg = kl(&pool, &sel.indices, &reference)?;
    let mut k_rand = 0.0;
    for s in 0..20 {
        k_rand += kl(&pool, &random_select(&pool, n, s, None)?.indices, &reference)?;
    }
    k_rand /= 20.0;
    let lb = latent_bayesian_select(&pool, &model, prep.checkpoints.last(), n)?;
    let k_lb = kl(&pool, &lb.indices, &reference)?;
    println!("{name:<10} {k_clg:>9.5} {k_rand:>9.5} {k_lb:>9.5}");
    Ok(())
}

fn main() -> clg::Result<()> {
    println!("{:<10} {:>9} {:>9} {:>9}", "task", "clg", "random", "latent-b");
    row("balanced", &balanced_task())?;
    row("easy-0", &easy_class_task())?;
    Ok(())
}
