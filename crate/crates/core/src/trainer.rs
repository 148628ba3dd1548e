//! Latent concept learning and curriculum latent gradients.
//!
//! [`train_concept`] runs plain mini-batch SGD on the concept over the whole
//! pool and keeps a snapshot before training and after every epoch.
//! [`compute_curriculum_gradients`] then evaluates each example's single-example
//! loss gradient at every snapshot and concatenates them into one row.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ClgError, Result};
use crate::io::DemoPool;
use crate::linalg::{pairwise_row_mean, Matrix};
use crate::proxy::{ConceptEmbedding, ProxyModel};

/// Standard deviation of the initial concept entries.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds both the concept initialization and the per-epoch shuffles.
    pub seed: u64,
}

impl Default for TrainConfig {
    /// lr 1e-3, batch 64, 10 epochs.
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch_size: 64,
            epochs: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Settings for retraining a concept on a small selected subset before
    /// scoring it on held-out data: lr 0.2, batch 128, 20 epochs.
    pub fn finetune_default() -> Self {
        TrainConfig {
            lr: 0.2,
            batch_size: 128,
            epochs: 20,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        // lr = 0 is allowed: it freezes the concept at its initialization
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(ClgError::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(ClgError::Config("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(ClgError::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Concept snapshots `[z_0, z_1, …, z_E]` plus the mean training loss of
/// each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointSeries {
    checkpoints: Vec<ConceptEmbedding>,
    epoch_losses: Vec<f64>,
}

impl CheckpointSeries {
    pub fn new(checkpoints: Vec<ConceptEmbedding>, epoch_losses: Vec<f64>) -> Result<Self> {
        if checkpoints.is_empty() {
            return Err(ClgError::dim("a checkpoint series needs at least one entry"));
        }
        let shape = checkpoints[0].shape();
        if checkpoints.iter().any(|c| c.shape() != shape) {
            return Err(ClgError::dim("checkpoints have inconsistent shapes"));
        }
        if checkpoints.iter().any(|c| !c.is_finite()) {
            return Err(ClgError::Numeric("checkpoint contains non-finite values".into()));
        }
        Ok(CheckpointSeries {
            checkpoints,
            epoch_losses,
        })
    }

    pub fn checkpoints(&self) -> &[ConceptEmbedding] {
        &self.checkpoints
    }

    pub fn initial(&self) -> &ConceptEmbedding {
        &self.checkpoints[0]
    }

    pub fn last(&self) -> &ConceptEmbedding {
        self.checkpoints.last().expect("series is never empty")
    }

    pub fn epochs(&self) -> usize {
        self.checkpoints.len() - 1
    }

    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    /// One checkpoint per row, flattened. This is how series are stored on
    /// disk (in the shared matrix format).
    pub fn to_matrix(&self) -> Matrix {
        let rows: Vec<Vec<f64>> = self.checkpoints.iter().map(|c| c.flat().to_vec()).collect();
        Matrix::from_rows(&rows).expect("checkpoints share a shape")
    }

    /// Inverse of [`to_matrix`](Self::to_matrix). Epoch losses are not
    /// stored and come back empty.
    pub fn from_matrix(m: &Matrix, concept_rows: usize, concept_cols: usize) -> Result<Self> {
        if m.cols() != concept_rows * concept_cols {
            return Err(ClgError::dim(format!(
                "checkpoint width {} does not match concept shape {concept_rows}x{concept_cols}",
                m.cols()
            )));
        }
        let checkpoints = m
            .iter_rows()
            .map(|r| ConceptEmbedding::from_flat(concept_rows, concept_cols, r.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(checkpoints, Vec::new())
    }
}

fn check_pool(pool: &DemoPool, model: &ProxyModel) -> Result<()> {
    if pool.is_empty() {
        return Err(ClgError::EmptyPool);
    }
    if pool.feature_dim() != model.feature_dim() {
        return Err(ClgError::dim(format!(
            "pool has {} features, model expects {}",
            pool.feature_dim(),
            model.feature_dim()
        )));
    }
    if pool.classes() > model.classes() {
        return Err(ClgError::dim(format!(
            "pool has {} classes, model only {}",
            pool.classes(),
            model.classes()
        )));
    }
    Ok(())
}

/// Mini-batch SGD on the concept over `pool` for `cfg.epochs` epochs.
pub fn train_concept(
    pool: &DemoPool,
    model: &ProxyModel,
    cfg: &TrainConfig,
) -> Result<CheckpointSeries> {
    check_pool(pool, model)?;
    cfg.validate()?;
    let (rows, cols) = model.concept_shape();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z = ConceptEmbedding::random_normal(rows, cols, INIT_STD, &mut rng);

    let feature_logits: Vec<Vec<f64>> = (0..pool.len())
        .map(|i| model.feature_logits(pool.x(i)))
        .collect();

    let mut checkpoints = Vec::with_capacity(cfg.epochs + 1);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    checkpoints.push(z.clone());

    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut batch_grad = vec![0.0; model.concept_len()];
    let mut example_grad = vec![0.0; model.concept_len()];

    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let concept_logits = model.concept_logits(&z);
            batch_grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let y = pool.label(i);
                let lp = ProxyModel::log_probs_from_parts(&feature_logits[i], &concept_logits);
                let loss = -lp[y];
                if !loss.is_finite() {
                    return Err(ClgError::Divergence {
                        epoch,
                        batch: b + 1,
                        loss,
                    });
                }
                loss_sum += loss;
                model.grad_from_log_probs(&lp, y, &mut example_grad);
                for (acc, g) in batch_grad.iter_mut().zip(&example_grad) {
                    *acc += g;
                }
            }
            let step = cfg.lr / batch.len() as f64;
            for (zv, g) in z.flat_mut().iter_mut().zip(&batch_grad) {
                *zv -= step * g;
            }
            if !z.is_finite() {
                return Err(ClgError::Divergence {
                    epoch,
                    batch: b + 1,
                    loss: f64::NAN,
                });
            }
        }
        epoch_losses.push(loss_sum / pool.len() as f64);
        checkpoints.push(z.clone());
    }
    CheckpointSeries::new(checkpoints, epoch_losses)
}

/// Mean NLL of every example in `pool` under concept `z`.
pub fn mean_pool_nll(pool: &DemoPool, model: &ProxyModel, z: &ConceptEmbedding) -> Result<f64> {
    check_pool(pool, model)?;
    let mut total = 0.0;
    for i in 0..pool.len() {
        total += model.nll_loss(z, pool.x(i), pool.label(i))?;
    }
    Ok(total / pool.len() as f64)
}

/// `N × D` matrix of curriculum latent gradients with `D = k·h·(E+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumGradientMatrix {
    matrix: Matrix,
    concept_len: usize,
    checkpoints: usize,
}

impl CurriculumGradientMatrix {
    /// Wraps a matrix read back from disk. The width must be a positive
    /// multiple of `concept_len`.
    pub fn from_matrix(matrix: Matrix, concept_len: usize) -> Result<Self> {
        if concept_len == 0 || matrix.cols() == 0 || matrix.cols() % concept_len != 0 {
            return Err(ClgError::dim(format!(
                "gradient width {} is not a positive multiple of concept size {concept_len}",
                matrix.cols()
            )));
        }
        let checkpoints = matrix.cols() / concept_len;
        Ok(CurriculumGradientMatrix {
            matrix,
            concept_len,
            checkpoints,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn concept_len(&self) -> usize {
        self.concept_len
    }

    /// `E + 1`.
    pub fn checkpoint_count(&self) -> usize {
        self.checkpoints
    }

    /// The block of row `i` holding the gradient at checkpoint `e`.
    pub fn block(&self, i: usize, e: usize) -> &[f64] {
        &self.matrix.row(i)[e * self.concept_len..(e + 1) * self.concept_len]
    }
}

/// Evaluates every example's loss gradient at every checkpoint. Row order
/// follows the pool; blocks within a row follow checkpoint order.
pub fn compute_curriculum_gradients(
    pool: &DemoPool,
    model: &ProxyModel,
    ckpts: &CheckpointSeries,
) -> Result<CurriculumGradientMatrix> {
    check_pool(pool, model)?;
    if ckpts.initial().shape() != model.concept_shape() {
        return Err(ClgError::dim(format!(
            "checkpoint shape {:?} does not match model concept shape {:?}",
            ckpts.initial().shape(),
            model.concept_shape()
        )));
    }
    let concept_len = model.concept_len();
    let n_ckpt = ckpts.checkpoints().len();
    let width = concept_len * n_ckpt;
    let concept_logits: Vec<Vec<f64>> = ckpts
        .checkpoints()
        .iter()
        .map(|z| model.concept_logits(z))
        .collect();

    let mut matrix = Matrix::zeros(pool.len(), width);
    matrix
        .as_mut_slice()
        .par_chunks_mut(width.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            let feat = model.feature_logits(pool.x(i));
            let y = pool.label(i);
            for (block, cl) in row.chunks_mut(concept_len).zip(&concept_logits) {
                let lp = ProxyModel::log_probs_from_parts(&feat, cl);
                model.grad_from_log_probs(&lp, y, block);
            }
        });
    if !matrix.is_finite() {
        return Err(ClgError::Numeric("curriculum gradients are not finite".into()));
    }
    Ok(CurriculumGradientMatrix {
        matrix,
        concept_len,
        checkpoints: n_ckpt,
    })
}

fn validate_indices(rows: usize, indices: &[usize]) -> Result<()> {
    if indices.is_empty() {
        return Err(ClgError::EmptySelection);
    }
    let mut seen = vec![false; rows];
    for &i in indices {
        if i >= rows {
            return Err(ClgError::Index(format!(
                "index {i} out of range for {rows} rows"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(ClgError::Index(format!("duplicate index {i}")));
        }
    }
    Ok(())
}

/// Mean of the selected rows (all rows when `indices` is `None`), with
/// pairwise summation.
pub fn mean_gradient(g: &Matrix, indices: Option<&[usize]>) -> Result<Vec<f64>> {
    match indices {
        Some(idx) => {
            validate_indices(g.rows(), idx)?;
            Ok(pairwise_row_mean(g, idx))
        }
        None => {
            if g.rows() == 0 {
                return Err(ClgError::EmptySelection);
            }
            let all: Vec<usize> = (0..g.rows()).collect();
            Ok(pairwise_row_mean(g, &all))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{Example, PoolSchema};

    fn tiny_pool(n: usize, d: usize, classes: usize) -> DemoPool {
        let ex = (0..n)
            .map(|i| Example {
                id: format!("e{i}"),
                label: i % classes,
                text: None,
                features: Some((0..d).map(|j| ((i * 7 + j * 3) % 5) as f64 - 2.0).collect()),
            })
            .collect();
        DemoPool::new(
            ex,
            PoolSchema {
                classes: Some(classes),
                ..PoolSchema::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_lr_keeps_initialization() {
        let pool = tiny_pool(10, 3, 2);
        let m = ProxyModel::new(3, 2, 2, 3, 1).unwrap();
        let cfg = TrainConfig {
            lr: 0.0,
            epochs: 1,
            ..TrainConfig::default()
        };
        let s = train_concept(&pool, &m, &cfg).unwrap();
        assert_eq!(s.checkpoints().len(), 2);
        assert_eq!(s.checkpoints()[0], s.checkpoints()[1]);
    }

    #[test]
    fn checkpoint_count_ignores_batch_remainder() {
        let pool = tiny_pool(13, 3, 3);
        let m = ProxyModel::new(3, 3, 1, 4, 2).unwrap();
        for bs in [1, 5, 13, 64] {
            let cfg = TrainConfig {
                batch_size: bs,
                epochs: 3,
                lr: 0.1,
                seed: 4,
            };
            let s = train_concept(&pool, &m, &cfg).unwrap();
            assert_eq!(s.checkpoints().len(), 4);
            assert_eq!(s.epoch_losses().len(), 3);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let pool = tiny_pool(30, 4, 3);
        let m = ProxyModel::new(4, 3, 2, 2, 3).unwrap();
        let cfg = TrainConfig {
            lr: 0.05,
            batch_size: 7,
            epochs: 4,
            seed: 17,
        };
        let a = train_concept(&pool, &m, &cfg).unwrap();
        let b = train_concept(&pool, &m, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_pool_and_mismatched_model() {
        let pool = tiny_pool(4, 3, 2);
        let m = ProxyModel::new(5, 2, 2, 2, 0).unwrap();
        assert!(matches!(
            train_concept(&pool, &m, &TrainConfig::default()),
            Err(ClgError::Dimension(_))
        ));
    }

    #[test]
    fn divergence_names_epoch_and_batch() {
        let pool = tiny_pool(8, 2, 2);
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let m = ProxyModel::from_parts(1, 1, a, b, vec![0.0, 0.0]).unwrap();
        let cfg = TrainConfig {
            lr: 1e308,
            batch_size: 4,
            epochs: 3,
            seed: 0,
        };
        match train_concept(&pool, &m, &cfg) {
            Err(e @ ClgError::Divergence { epoch, batch, .. }) => {
                assert!((1..=3).contains(&epoch));
                assert!((1..=2).contains(&batch));
                let msg = e.to_string();
                assert!(msg.contains(&format!("epoch {epoch}, batch {batch}")), "{msg}");
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn gradient_width_is_concept_times_checkpoints() {
        let pool = tiny_pool(5, 3, 2);
        let m = ProxyModel::new(3, 2, 1, 3, 9).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let s = train_concept(&pool, &m, &cfg).unwrap();
        let g = compute_curriculum_gradients(&pool, &m, &s).unwrap();
        assert_eq!(g.matrix().cols(), 9);
        assert_eq!(g.matrix().rows(), 5);
        assert_eq!(g.checkpoint_count(), 3);
    }

    #[test]
    fn rows_match_grad_z_bit_exactly() {
        let pool = tiny_pool(9, 3, 3);
        let m = ProxyModel::new(3, 3, 2, 2, 5).unwrap();
        let cfg = TrainConfig {
            lr: 0.3,
            batch_size: 4,
            epochs: 3,
            seed: 2,
        };
        let s = train_concept(&pool, &m, &cfg).unwrap();
        let g = compute_curriculum_gradients(&pool, &m, &s).unwrap();
        for i in 0..pool.len() {
            for (e, z) in s.checkpoints().iter().enumerate() {
                let direct = m.grad_z(z, pool.x(i), pool.label(i)).unwrap();
                assert_eq!(g.block(i, e), direct.flat());
            }
        }
    }

    #[test]
    fn zero_concept_weights_give_zero_matrix() {
        let pool = tiny_pool(6, 2, 2);
        let a = Matrix::from_rows(&[vec![1.0, 0.5], vec![-0.5, 1.0]]).unwrap();
        let m = ProxyModel::from_parts(2, 2, a, Matrix::zeros(2, 4), vec![0.0, 0.0]).unwrap();
        let s = train_concept(&pool, &m, &TrainConfig::default()).unwrap();
        let g = compute_curriculum_gradients(&pool, &m, &s).unwrap();
        assert!(g.matrix().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singleton_pool_row_is_its_mean() {
        let pool = tiny_pool(1, 3, 1);
        let m = ProxyModel::new(3, 2, 1, 2, 0).unwrap();
        let s = train_concept(&pool, &m, &TrainConfig::default()).unwrap();
        let g = compute_curriculum_gradients(&pool, &m, &s).unwrap();
        assert_eq!(mean_gradient(g.matrix(), None).unwrap(), g.matrix().row(0));
    }

    #[test]
    fn checkpoint_shape_mismatch_rejected() {
        let pool = tiny_pool(3, 3, 2);
        let m = ProxyModel::new(3, 2, 2, 2, 0).unwrap();
        let other = ProxyModel::new(3, 2, 1, 3, 0).unwrap();
        let s = train_concept(&pool, &other, &TrainConfig::default()).unwrap();
        assert!(matches!(
            compute_curriculum_gradients(&pool, &m, &s),
            Err(ClgError::Dimension(_))
        ));
    }

    #[test]
    fn mean_gradient_cases() {
        let g = Matrix::from_rows(&[vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(mean_gradient(&g, Some(&[0, 1])).unwrap(), vec![2.0, 2.0]);
        assert_eq!(mean_gradient(&g, None).unwrap(), vec![2.0, 2.0]);
        assert_eq!(mean_gradient(&g, Some(&[1])).unwrap(), vec![3.0, 3.0]);
        assert!(matches!(
            mean_gradient(&g, Some(&[])),
            Err(ClgError::EmptySelection)
        ));
        assert!(matches!(
            mean_gradient(&g, Some(&[2])),
            Err(ClgError::Index(_))
        ));
        assert!(matches!(
            mean_gradient(&g, Some(&[0, 0])),
            Err(ClgError::Index(_))
        ));
    }

    #[test]
    fn checkpoint_matrix_roundtrip() {
        let pool = tiny_pool(6, 3, 2);
        let m = ProxyModel::new(3, 2, 2, 3, 1).unwrap();
        let s = train_concept(&pool, &m, &TrainConfig::default()).unwrap();
        let back = CheckpointSeries::from_matrix(&s.to_matrix(), 2, 3).unwrap();
        assert_eq!(back.checkpoints(), s.checkpoints());
        assert!(CheckpointSeries::from_matrix(&s.to_matrix(), 3, 3).is_err());
    }
}
