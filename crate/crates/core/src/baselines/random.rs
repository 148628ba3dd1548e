use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ClgError, Result};
use crate::io::DemoPool;
use crate::linalg::Matrix;
use crate::matcher::SelectionResult;

/// `n` distinct indices drawn uniformly from `0..total`, in draw order.
pub fn random_indices(total: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if n == 0 || n > total {
        return Err(ClgError::Infeasible {
            n,
            available: total,
        });
    }
    Ok(index::sample(rng, total, n).into_vec())
}

/// Seeded uniform sample without replacement. When `grads` is given the
/// matching distance of the sample is filled in.
pub fn random_select(
    pool: &DemoPool,
    n: usize,
    seed: u64,
    grads: Option<&Matrix>,
) -> Result<SelectionResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = random_indices(pool.len(), n, &mut rng)?;
    let r = SelectionResult::unscored("random", idx, Some(seed));
    match grads {
        Some(g) => r.with_distance_from(g),
        None => Ok(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{Example, PoolSchema};

    pub(crate) fn pool(n: usize, classes: usize) -> DemoPool {
        let ex = (0..n)
            .map(|i| Example {
                id: i.to_string(),
                label: i % classes,
                text: None,
                features: Some(vec![i as f64]),
            })
            .collect();
        DemoPool::new(ex, PoolSchema::default()).unwrap()
    }

    #[test]
    fn same_seed_same_indices() {
        let p = pool(50, 2);
        let a = random_select(&p, 10, 3, None).unwrap();
        let b = random_select(&p, 10, 3, None).unwrap();
        assert_eq!(a.indices, b.indices);
        assert_ne!(a.indices, random_select(&p, 10, 4, None).unwrap().indices);
        assert_eq!(a.seed, Some(3));
    }

    #[test]
    fn full_draw_is_a_permutation() {
        let p = pool(20, 2);
        let r = random_select(&p, 20, 1, None).unwrap();
        let mut s = r.indices.clone();
        s.sort_unstable();
        assert_eq!(s, (0..20).collect::<Vec<_>>());
        assert_ne!(r.indices, s);
    }

    #[test]
    fn infeasible() {
        let p = pool(5, 1);
        assert!(matches!(
            random_select(&p, 6, 0, None),
            Err(ClgError::Infeasible { .. })
        ));
    }

    #[test]
    fn class_frequencies_are_binomial() {
        // each class holds a quarter of the pool, so per-draw counts are
        // hypergeometric with mean n/4; over 1000 seeds the total count
        // stays within 3 sigma of 1000 * n / 4
        let p = pool(400, 4);
        let n = 16;
        let seeds = 1000;
        let mut counts = [0usize; 4];
        for seed in 0..seeds {
            for i in random_select(&p, n, seed, None).unwrap().indices {
                counts[p.label(i)] += 1;
            }
        }
        let trials = (seeds as usize * n) as f64;
        let mean = trials / 4.0;
        let sd = (trials * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sd, "{counts:?}");
        }
    }
}
