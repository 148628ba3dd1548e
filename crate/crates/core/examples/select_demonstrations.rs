//! End-to-end gradient matching: train, collect curriculum gradients,
//! pick `n` examples, and print how the objective evolved.

use clg::pipeline::prepare;
use clg::synth::{balanced_task, pool_and_holdout};
use clg::{ProxyModel, SelectionSpec, TrainConfig};

fn main() -> clg::Result<()> {
    let n = 64;
    let model = ProxyModel::new(32, 4, 4, 10, 1)?;
    let (pool, _) = pool_and_holdout(&model, &balanced_task(), 2000, 1, 1)?;
    let prep = prepare(&pool, &model, &TrainConfig::default())?;
    println!(
        "train {:.1} ms, gradients {:.1} ms",
        prep.train_time.as_secs_f64() * 1e3,
        prep.grads_time.as_secs_f64() * 1e3
    );

    let (sel, t) = prep.select(&SelectionSpec::new(n))?;
    println!(
        "greedy {:.1} ms, swaps {:.1} ms",
        t.greedy.as_secs_f64() * 1e3,
        t.swap.as_secs_f64() * 1e3
    );

    let g = &sel.greedy_trace;
    for i in [0, 1, 3, 7, 15, 31, n - 1] {
        println!("after {:>3} picks: {:.6e}", i + 1, g[i]);
    }
    println!("greedy distance {:.6e}", sel.greedy_distance);
    for (s, d) in sel.trace.iter().enumerate() {
        println!("swap {:>2}: {d:.6e}", s + 1);
    }
    println!("final distance  {:.6e} ({} swaps)", sel.distance, sel.swaps_performed);

    let mut counts = vec![0; pool.classes()];
    for &i in &sel.indices {
        counts[pool.label(i)] += 1;
    }
    println!("labels of the selection: {counts:?}");
    print!("{}", sel.to_json());
    Ok(())
}
