//! Many-shot demonstration selection by curriculum latent gradient matching.
//!
//! A small linear-softmax proxy with a trainable latent concept `z` stands in
//! for a language model. The concept is trained on the whole pool, each
//! example's loss gradient is recorded at every epoch checkpoint, and a
//! greedy-plus-swap matcher picks the `n` rows whose mean gradient is
//! closest to the mean over the pool.
//!
//! ```
//! use clg::{matcher::SelectionSpec, pipeline, proxy::ProxyModel, synth, trainer::TrainConfig};
//!
//! let model = ProxyModel::new(16, 2, 2, 4, 0).unwrap();
//! let (pool, _) = synth::pool_and_holdout(&model, &synth::separable_task(), 100, 10, 0).unwrap();
//! let prep = pipeline::prepare(&pool, &model, &TrainConfig::default()).unwrap();
//! let (sel, _) = prep.select(&SelectionSpec::new(8)).unwrap();
//! assert_eq!(sel.indices.len(), 8);
//! ```

pub mod baselines;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matcher;
pub mod metrics;
pub mod pipeline;
pub mod proxy;
pub mod synth;
pub mod trainer;

pub use error::{ClgError, Result};
pub use linalg::Matrix;
pub use matcher::{select, Direction, SelectionResult, SelectionSpec};
pub use proxy::{ConceptEmbedding, ProxyModel};
pub use trainer::{compute_curriculum_gradients, train_concept, TrainConfig};
