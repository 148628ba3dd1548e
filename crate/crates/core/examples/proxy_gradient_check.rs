//! Compares the analytic concept gradient of the proxy loss with central
//! finite differences on a few random instances.

use clg::{ConceptEmbedding, ProxyModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;

fn main() -> clg::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("{:>4} {:>6} {:>12} {:>12}", "seed", "len", "|grad|", "rel err");
    for seed in 0..8u64 {
        let (d, c, k, h) = (12, 3, 2, 5);
        let model = ProxyModel::new(d, c, k, h, seed)?;
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = rng.random_range(0..c);
        let z = ConceptEmbedding::random_normal(k, h, 0.5, &mut rng);

        let g = model.grad_z(&z, &x, y)?;
        let mut fd = vec![0.0; z.flat().len()];
        for (j, slot) in fd.iter_mut().enumerate() {
            let mut plus = z.flat().to_vec();
            let mut minus = z.flat().to_vec();
            plus[j] += STEP;
            minus[j] -= STEP;
            let lp = model.nll_loss(&ConceptEmbedding::from_flat(k, h, plus)?, &x, y)?;
            let lm = model.nll_loss(&ConceptEmbedding::from_flat(k, h, minus)?, &x, y)?;
            *slot = (lp - lm) / (2.0 * STEP);
        }
        let norm = g.flat().iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = g
            .flat()
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
            / norm.max(1.0);
        println!("{seed:>4} {:>6} {norm:>12.6} {err:>12.3e}", fd.len());
    }
    Ok(())
}
