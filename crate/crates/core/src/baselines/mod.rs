//! Comparison selectors.
//!
//! | kind              | needs                                  |
//! |-------------------|----------------------------------------|
//! | `random`          | pool size, seed                        |
//! | `best-of-n`       | pool, a [`SubsetScorer`], seed         |
//! | `kmeans`          | an embedding matrix                    |
//! | `bm25`            | raw text                               |
//! | `latent-bayesian` | pool, model and a trained concept      |

pub mod best_of_n;
pub mod bm25;
pub mod kmeans;
pub mod latent_bayesian;
pub mod random;

pub use best_of_n::{best_of_n_select, BestOfN, RetrainScorer, SubsetScorer};
pub use bm25::{bm25_major_select, Bm25Index, Bm25Params};
pub use kmeans::{kmeans_embed_select, KMeansSelection};
pub use latent_bayesian::{latent_bayesian_scores, latent_bayesian_select};
pub use random::{random_indices, random_select};

use crate::error::{ClgError, Result};

pub const DEFAULT_CANDIDATES: usize = 5;
pub const DEFAULT_KMEANS_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    Random { seed: u64 },
    BestOfN { candidates: usize, seed: u64 },
    KMeansEmbed { seed: u64, max_iters: usize },
    Bm25Major(Bm25Params),
    LatentBayesianProxy,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Random { .. } => "random",
            BaselineKind::BestOfN { .. } => "best-of-n",
            BaselineKind::KMeansEmbed { .. } => "kmeans",
            BaselineKind::Bm25Major(_) => "bm25-major",
            BaselineKind::LatentBayesianProxy => "latent-bayesian",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BaselineKind::BestOfN { candidates: 0, .. } => Err(ClgError::Config(
                "best-of-n needs at least one candidate".into(),
            )),
            BaselineKind::KMeansEmbed { max_iters: 0, .. } => {
                Err(ClgError::Config("kmeans needs max_iters >= 1".into()))
            }
            BaselineKind::Bm25Major(p) if !(p.k1 > 0.0) || !(0.0..=1.0).contains(&p.b) => Err(
                ClgError::Config(format!("invalid BM25 parameters k1 = {}, b = {}", p.k1, p.b)),
            ),
            _ => Ok(()),
        }
    }
}
