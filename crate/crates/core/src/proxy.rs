//! Frozen linear-softmax predictor standing in for the language model.
//!
//! The predictor scores class `c` for input `x` under concept `z` as
//!
//! ```text
//! s_c = A_c · x + B_c · flatten(z) + bias_c
//! ```
//!
//! and returns `log_softmax(s)`. Only `z` is ever trained; `A`, `B` and the
//! bias are drawn once from `init_seed` and never change.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ClgError, Result};
use crate::linalg::{dot, Matrix};

/// The latent task concept: a `k × h` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptEmbedding {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ConceptEmbedding {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ConceptEmbedding {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_flat(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(ClgError::dim(format!(
                "concept of shape {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(ClgError::Numeric(format!(
                "concept entry {pos} is not finite"
            )));
        }
        Ok(ConceptEmbedding { rows, cols, values })
    }

    /// Seeded Gaussian initialization with the given standard deviation.
    pub fn random_normal(rows: usize, cols: usize, std_dev: f64, rng: &mut impl rand::Rng) -> Self {
        let values = (0..rows * cols)
            .map(|_| {
                let v: f64 = StandardNormal.sample(rng);
                v * std_dev
            })
            .collect();
        ConceptEmbedding { rows, cols, values }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Frozen class-feature and class-concept weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyModel {
    feature_dim: usize,
    classes: usize,
    concept_rows: usize,
    concept_cols: usize,
    init_seed: u64,
    feature_weights: Matrix,
    concept_weights: Matrix,
    bias: Vec<f64>,
}

impl ProxyModel {
    /// Draws `A` (scaled by `1/sqrt(d)`) then `B` (scaled by `1/sqrt(k·h)`),
    /// both row-major from one ChaCha8 stream seeded with `init_seed`.
    /// The bias starts at zero.
    pub fn new(
        feature_dim: usize,
        classes: usize,
        concept_rows: usize,
        concept_cols: usize,
        init_seed: u64,
    ) -> Result<Self> {
        for (name, v) in [
            ("feature dimension", feature_dim),
            ("class count", classes),
            ("concept rows", concept_rows),
            ("concept columns", concept_cols),
        ] {
            if v == 0 {
                return Err(ClgError::dim(format!("{name} must be at least 1")));
            }
        }
        let concept_len = concept_rows * concept_cols;
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let a_scale = 1.0 / (feature_dim as f64).sqrt();
        let b_scale = 1.0 / (concept_len as f64).sqrt();
        let mut draw = |n: usize, scale: f64| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    v * scale
                })
                .collect()
        };
        let a = draw(classes * feature_dim, a_scale);
        let b = draw(classes * concept_len, b_scale);
        Ok(ProxyModel {
            feature_dim,
            classes,
            concept_rows,
            concept_cols,
            init_seed,
            feature_weights: Matrix::from_vec(classes, feature_dim, a)?,
            concept_weights: Matrix::from_vec(classes, concept_len, b)?,
            bias: vec![0.0; classes],
        })
    }

    /// Builds a model from explicit weights. Used by tests and fixtures that
    /// need hand-chosen parameters.
    pub fn from_parts(
        concept_rows: usize,
        concept_cols: usize,
        feature_weights: Matrix,
        concept_weights: Matrix,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let classes = feature_weights.rows();
        if classes == 0 || feature_weights.cols() == 0 || concept_rows * concept_cols == 0 {
            return Err(ClgError::dim("all dimensions must be at least 1"));
        }
        if concept_weights.rows() != classes
            || concept_weights.cols() != concept_rows * concept_cols
            || bias.len() != classes
        {
            return Err(ClgError::dim(format!(
                "inconsistent parts: A is {}x{}, B is {}x{}, bias has {} entries, concept {}x{}",
                feature_weights.rows(),
                feature_weights.cols(),
                concept_weights.rows(),
                concept_weights.cols(),
                bias.len(),
                concept_rows,
                concept_cols
            )));
        }
        if !feature_weights.is_finite()
            || !concept_weights.is_finite()
            || bias.iter().any(|v| !v.is_finite())
        {
            return Err(ClgError::Numeric("model parameters must be finite".into()));
        }
        Ok(ProxyModel {
            feature_dim: feature_weights.cols(),
            classes,
            concept_rows,
            concept_cols,
            init_seed: 0,
            feature_weights,
            concept_weights,
            bias,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn concept_shape(&self) -> (usize, usize) {
        (self.concept_rows, self.concept_cols)
    }

    pub fn concept_len(&self) -> usize {
        self.concept_rows * self.concept_cols
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn feature_weights(&self) -> &Matrix {
        &self.feature_weights
    }

    pub fn concept_weights(&self) -> &Matrix {
        &self.concept_weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn check_concept(&self, z: &ConceptEmbedding) -> Result<()> {
        if z.shape() != self.concept_shape() {
            return Err(ClgError::dim(format!(
                "concept shape {:?} does not match model {:?}",
                z.shape(),
                self.concept_shape()
            )));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(ClgError::dim(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.feature_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ClgError::Numeric("input contains non-finite values".into()));
        }
        Ok(())
    }

    fn check_label(&self, y: usize) -> Result<()> {
        if y >= self.classes {
            return Err(ClgError::Label {
                label: y,
                classes: self.classes,
            });
        }
        Ok(())
    }

    /// `A · x`, the concept-independent part of the logits.
    pub(crate) fn feature_logits(&self, x: &[f64]) -> Vec<f64> {
        self.feature_weights.iter_rows().map(|a| dot(a, x)).collect()
    }

    /// `B · flatten(z) + bias`.
    pub(crate) fn concept_logits(&self, z: &ConceptEmbedding) -> Vec<f64> {
        self.concept_weights
            .iter_rows()
            .zip(&self.bias)
            .map(|(b, c)| dot(b, z.flat()) + c)
            .collect()
    }

    /// Log-softmax of the summed logits, max-shifted.
    pub(crate) fn log_probs_from_parts(feature: &[f64], concept: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = feature.iter().zip(concept).map(|(a, b)| a + b).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        logits.iter().map(|s| s - lse).collect()
    }

    /// Writes `Σ_c (p_c − 1[c=y]) B_c` into `out`.
    pub(crate) fn grad_from_log_probs(&self, log_probs: &[f64], y: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (c, (lp, b)) in log_probs
            .iter()
            .zip(self.concept_weights.iter_rows())
            .enumerate()
        {
            let coeff = lp.exp() - if c == y { 1.0 } else { 0.0 };
            if coeff == 0.0 {
                continue;
            }
            for (o, bv) in out.iter_mut().zip(b) {
                *o += coeff * bv;
            }
        }
    }

    /// Class log-probabilities `log P(· | z, x)`.
    pub fn log_probs(&self, z: &ConceptEmbedding, x: &[f64]) -> Result<Vec<f64>> {
        self.check_concept(z)?;
        self.check_input(x)?;
        let out = Self::log_probs_from_parts(&self.feature_logits(x), &self.concept_logits(z));
        if out.iter().any(|v| !v.is_finite()) {
            return Err(ClgError::Numeric("log-probabilities are not finite".into()));
        }
        Ok(out)
    }

    /// Negative log-likelihood of label `y`.
    pub fn nll_loss(&self, z: &ConceptEmbedding, x: &[f64], y: usize) -> Result<f64> {
        self.check_label(y)?;
        let lp = self.log_probs(z, x)?;
        // -lp[y] can round to -0.0 when p_y == 1
        Ok((-lp[y]).max(0.0))
    }

    /// Analytic gradient of the NLL with respect to `z`.
    pub fn grad_z(&self, z: &ConceptEmbedding, x: &[f64], y: usize) -> Result<ConceptEmbedding> {
        self.check_label(y)?;
        let lp = self.log_probs(z, x)?;
        let mut g = ConceptEmbedding::zeros(self.concept_rows, self.concept_cols);
        self.grad_from_log_probs(&lp, y, g.flat_mut());
        Ok(g)
    }
}
