//! Trains the latent concept on a synthetic pool, then builds the
//! curriculum gradient matrix and stores it in the binary matrix format.

use clg::io::{read_matrix, write_matrix};
use clg::synth::{balanced_task, pool_and_holdout};
use clg::{compute_curriculum_gradients, train_concept, ProxyModel, TrainConfig};

fn main() -> clg::Result<()> {
    let model = ProxyModel::new(32, 4, 4, 10, 0)?;
    let (pool, _) = pool_and_holdout(&model, &balanced_task(), 1000, 1, 0)?;

    let cfg = TrainConfig::default();
    let series = train_concept(&pool, &model, &cfg)?;
    println!("epoch  mean loss");
    for (e, loss) in series.epoch_losses().iter().enumerate() {
        println!("{:>5}  {loss:.6}", e + 1);
    }

    let grads = compute_curriculum_gradients(&pool, &model, &series)?;
    let m = grads.matrix();
    println!(
        "gradient matrix: {} x {} ({} checkpoints of {} entries)",
        m.rows(),
        m.cols(),
        grads.checkpoint_count(),
        grads.concept_len()
    );
    let first = grads.block(0, 0);
    let last = grads.block(0, grads.checkpoint_count() - 1);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!(
        "example 0: |g| at z_0 = {:.5}, at z_E = {:.5}",
        norm(first),
        norm(last)
    );

    let dir = tempfile_dir();
    let path = dir.join("grads.clgm");
    write_matrix(&path, m)?;
    let back = read_matrix(&path)?;
    assert_eq!(&back, m);
    println!("wrote and re-read {}", path.display());
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("clg-example");
    std::fs::create_dir_all(&dir).expect("create temp dir");
    dir
}
