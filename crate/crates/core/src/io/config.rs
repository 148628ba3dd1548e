//! Flat `key = value` run configuration.
//!
//! Every key is optional. Precedence is command-line flag, then config file,
//! then the defaults below.

use std::path::Path;

use serde::Deserialize;

use crate::error::{ClgError, Result};
use crate::io::pool::DEFAULT_TEXT_DIM;
use crate::trainer::TrainConfig;

pub const DEFAULT_CONCEPT_ROWS: usize = 4;
pub const DEFAULT_CONCEPT_COLS: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub concept_rows: Option<usize>,
    pub concept_cols: Option<usize>,
    pub text_dim: Option<usize>,
    pub classes: Option<usize>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub ft_lr: Option<f64>,
    pub ft_batch_size: Option<usize>,
    pub ft_epochs: Option<usize>,
    pub threads: Option<usize>,
    pub alpha: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ClgError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ClgError::io(path, e))?;
        Self::parse(&text)
    }
}

/// Fully resolved settings for one CLI invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub concept_rows: usize,
    pub concept_cols: usize,
    pub text_dim: usize,
    pub classes: Option<usize>,
    pub train: TrainConfig,
    pub finetune: TrainConfig,
    pub threads: Option<usize>,
    pub alpha: f64,
}

impl RunConfig {
    /// Merges flag values over file values over defaults.
    pub fn resolve(
        file: &FileConfig,
        seed_flag: Option<u64>,
        threads_flag: Option<usize>,
    ) -> Result<Self> {
        let seed = seed_flag.or(file.seed).unwrap_or(0);
        let d = TrainConfig::default();
        let f = TrainConfig::finetune_default();
        let train = TrainConfig {
            lr: file.lr.unwrap_or(d.lr),
            batch_size: file.batch_size.unwrap_or(d.batch_size),
            epochs: file.epochs.unwrap_or(d.epochs),
            seed,
        };
        let finetune = TrainConfig {
            lr: file.ft_lr.unwrap_or(f.lr),
            batch_size: file.ft_batch_size.unwrap_or(f.batch_size),
            epochs: file.ft_epochs.unwrap_or(f.epochs),
            seed,
        };
        train.validate()?;
        finetune.validate()?;
        let cfg = RunConfig {
            seed,
            concept_rows: file.concept_rows.unwrap_or(DEFAULT_CONCEPT_ROWS),
            concept_cols: file.concept_cols.unwrap_or(DEFAULT_CONCEPT_COLS),
            text_dim: file.text_dim.unwrap_or(DEFAULT_TEXT_DIM),
            classes: file.classes,
            train,
            finetune,
            threads: threads_flag.or(file.threads),
            alpha: file.alpha.unwrap_or(crate::metrics::DEFAULT_ALPHA),
        };
        if cfg.concept_rows == 0 || cfg.concept_cols == 0 || cfg.text_dim == 0 {
            return Err(ClgError::Config(
                "concept_rows, concept_cols and text_dim must be at least 1".into(),
            ));
        }
        if !(cfg.alpha > 0.0 && cfg.alpha.is_finite()) {
            return Err(ClgError::Config("alpha must be positive".into()));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let file = FileConfig::parse("seed = 5\nlr = 0.01\nthreads = 3\n").unwrap();
        let cfg = RunConfig::resolve(&file, Some(9), None).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.train.lr, 0.01);
        assert_eq!(cfg.threads, Some(3));
        assert_eq!(cfg.train.epochs, 10);
        assert_eq!(cfg.train.batch_size, 64);
        assert_eq!(cfg.concept_rows, DEFAULT_CONCEPT_ROWS);

        let cfg = RunConfig::resolve(&file, None, Some(1)).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.threads, Some(1));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            FileConfig::parse("lerning_rate = 1.0"),
            Err(ClgError::Config(_))
        ));
    }

    #[test]
    fn invalid_values_rejected() {
        let file = FileConfig::parse("lr = -1.0").unwrap();
        assert!(RunConfig::resolve(&file, None, None).is_err());
        let file = FileConfig::parse("epochs = 0").unwrap();
        assert!(RunConfig::resolve(&file, None, None).is_err());
        let file = FileConfig::parse("concept_rows = 0").unwrap();
        assert!(RunConfig::resolve(&file, None, None).is_err());
    }
}
