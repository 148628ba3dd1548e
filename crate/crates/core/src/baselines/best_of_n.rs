use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::random::random_indices;
use crate::error::{ClgError, Result};
use crate::io::DemoPool;
use crate::linalg::Matrix;
use crate::matcher::SelectionResult;
use crate::proxy::ProxyModel;
use crate::trainer::{mean_pool_nll, train_concept, TrainConfig};

/// Scores a candidate subset; lower is better.
pub trait SubsetScorer {
    fn score(&self, indices: &[usize]) -> Result<f64>;
}

impl<F> SubsetScorer for F
where
    F: Fn(&[usize]) -> Result<f64>,
{
    fn score(&self, indices: &[usize]) -> Result<f64> {
        self(indices)
    }
}

/// Retrains the concept on the candidate alone and reports its mean NLL
/// over the whole pool.
pub struct RetrainScorer<'a> {
    pub pool: &'a DemoPool,
    pub model: &'a ProxyModel,
    pub cfg: TrainConfig,
}

impl SubsetScorer for RetrainScorer<'_> {
    fn score(&self, indices: &[usize]) -> Result<f64> {
        let sub = self.pool.subset(indices)?;
        let series = train_concept(&sub, self.model, &self.cfg)?;
        mean_pool_nll(self.pool, self.model, series.last())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestOfN {
    pub selection: SelectionResult,
    /// Score of every candidate, in draw order.
    pub candidate_scores: Vec<f64>,
    pub winner: usize,
}

/// Draws `candidates` random `n`-subsets from one seeded stream (the first
/// equals [`random_select`](super::random_select) with the same seed) and
/// keeps the best-scoring one, earliest on ties.
pub fn best_of_n_select(
    pool: &DemoPool,
    n: usize,
    candidates: usize,
    seed: u64,
    scorer: &dyn SubsetScorer,
    grads: Option<&Matrix>,
) -> Result<BestOfN> {
    if candidates == 0 {
        return Err(ClgError::Config("best-of-n needs at least one candidate".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..candidates)
        .map(|_| random_indices(pool.len(), n, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut scores = Vec::with_capacity(candidates);
    for (c, idx) in draws.iter().enumerate() {
        let s = scorer.score(idx).map_err(|e| ClgError::Scoring {
            candidate: c,
            source: Box::new(e),
        })?;
        if !s.is_finite() {
            return Err(ClgError::Scoring {
                candidate: c,
                source: Box::new(ClgError::Numeric(format!("score {s} is not finite"))),
            });
        }
        scores.push(s);
    }
    let winner = (0..candidates)
        .reduce(|best, c| if scores[c] < scores[best] { c } else { best })
        .expect("candidates >= 1");
    let mut selection = SelectionResult::unscored("best-of-n", draws[winner].clone(), Some(seed));
    if let Some(g) = grads {
        selection = selection.with_distance_from(g)?;
    }
    Ok(BestOfN {
        selection,
        candidate_scores: scores,
        winner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::random_select;
    use crate::io::{Example, PoolSchema};

    fn pool(n: usize) -> DemoPool {
        let ex = (0..n)
            .map(|i| Example {
                id: i.to_string(),
                label: i % 2,
                text: None,
                features: Some(vec![i as f64 / n as f64, 1.0]),
            })
            .collect();
        DemoPool::new(ex, PoolSchema::default()).unwrap()
    }

    #[test]
    fn single_candidate_equals_random() {
        let p = pool(40);
        let scorer = |_: &[usize]| Ok(1.0);
        let b = best_of_n_select(&p, 7, 1, 11, &scorer, None).unwrap();
        assert_eq!(b.selection.indices, random_select(&p, 7, 11, None).unwrap().indices);
    }

    #[test]
    fn winner_has_minimum_score() {
        let p = pool(40);
        let scorer = |idx: &[usize]| Ok(idx.iter().sum::<usize>() as f64);
        let b = best_of_n_select(&p, 5, 5, 2, &scorer, None).unwrap();
        let min = b.candidate_scores.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(b.candidate_scores[b.winner], min);
        assert!(b.candidate_scores.iter().all(|&s| b.candidate_scores[b.winner] <= s));
        assert_eq!(
            b.selection.indices.iter().sum::<usize>() as f64,
            b.candidate_scores[b.winner]
        );
    }

    #[test]
    fn scorer_failure_names_candidate() {
        let p = pool(10);
        let scorer = |idx: &[usize]| {
            if idx.contains(&3) {
                Err(ClgError::Numeric("boom".into()))
            } else {
                Ok(0.0)
            }
        };
        match best_of_n_select(&p, 9, 3, 0, &scorer, None) {
            Err(ClgError::Scoring { candidate, .. }) => assert!(candidate < 3),
            other => panic!("expected scoring error, got {other:?}"),
        }
    }

    #[test]
    fn retrain_scorer_runs() {
        let p = pool(30);
        let m = ProxyModel::new(2, 2, 1, 2, 0).unwrap();
        let scorer = RetrainScorer {
            pool: &p,
            model: &m,
            cfg: TrainConfig::default(),
        };
        let b = best_of_n_select(&p, 8, 3, 5, &scorer, None).unwrap();
        assert_eq!(b.candidate_scores.len(), 3);
        assert!(b.candidate_scores.iter().all(|s| *s > 0.0));
    }
}
