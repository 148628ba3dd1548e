//! How far greedy-plus-swap lands from the exhaustive optimum on small
//! random matrices, next to the best of many random subsets.

use clg::baselines::random_indices;
use clg::matcher::{brute_force_select, subset_distance};
use clg::{select, Matrix, SelectionSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> clg::Result<()> {
    let (rows, cols, n) = (14, 6, 5);
    println!("{:>4} {:>12} {:>12} {:>12} {:>7}", "seed", "optimum", "clg", "best random", "ratio");
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        let g = Matrix::from_vec(rows, cols, data)?;

        let opt = brute_force_select(&g, n)?;
        let ours = select(&g, &SelectionSpec::new(n))?;
        let mut best = f64::INFINITY;
        for _ in 0..200 {
            let idx = random_indices(rows, n, &mut rng)?;
            best = best.min(subset_distance(&g, &idx)?);
        }
        println!(
            "{seed:>4} {:>12.6} {:>12.6} {best:>12.6} {:>7.3}",
            opt.distance,
            ours.distance,
            ours.distance / opt.distance
        );
    }
    Ok(())
}
