//! Ablation: flip the matcher to pick the subset whose gradient is as far
//! as possible from the pool's, and compare both subsets after retraining
//! the concept on them.

use clg::matcher::Direction;
use clg::metrics::proxy_ft_eval;
use clg::pipeline::prepare;
use clg::synth::{balanced_task, pool_and_holdout};
use clg::{ProxyModel, SelectionSpec, TrainConfig};

fn main() -> clg::Result<()> {
    let ft = TrainConfig::finetune_default();
    println!("{:>4} {:>11} {:>11} {:>10} {:>10}", "seed", "d(min)", "d(max)", "nll(min)", "nll(max)");
    for seed in 0..8u64 {
        let model = ProxyModel::new(32, 4, 4, 10, seed)?;
        let (pool, holdout) = pool_and_holdout(&model, &balanced_task(), 300, 200, seed)?;
        let prep = prepare(&pool, &model, &TrainConfig::default().with_seed(seed))?;
        let (lo, _) = prep.select(&SelectionSpec::new(16))?;
        let (hi, _) = prep.select(&SelectionSpec::new(16).direction(Direction::Maximize))?;
        let nll_lo = proxy_ft_eval(&pool, &holdout, &model, &lo.indices, &ft.with_seed(seed))?;
        let nll_hi = proxy_ft_eval(&pool, &holdout, &model, &hi.indices, &ft.with_seed(seed))?;
        println!(
            "{seed:>4} {:>11.4e} {:>11.4e} {nll_lo:>10.5} {nll_hi:>10.5}",
            lo.distance, hi.distance
        );
    }
    Ok(())
}
