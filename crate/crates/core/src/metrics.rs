//! Diagnostics for selected subsets: label-distribution KL, proxy
//! fine-tuning on the subset, and the CSV report.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ClgError, Result};
use crate::io::DemoPool;
use crate::proxy::ProxyModel;
use crate::trainer::{mean_pool_nll, train_concept, TrainConfig};

/// Additive smoothing applied to every class count before taking KL.
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    counts: Vec<usize>,
    probs: Vec<f64>,
}

impl LabelDistribution {
    /// `(count_c + alpha) / (total + C·alpha)`.
    pub fn from_counts(counts: Vec<usize>, alpha: f64) -> Result<Self> {
        if counts.is_empty() {
            return Err(ClgError::dim("label distribution needs at least one class"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ClgError::Config(format!("smoothing alpha must be positive, got {alpha}")));
        }
        let total: usize = counts.iter().sum();
        let denom = total as f64 + alpha * counts.len() as f64;
        let probs = counts.iter().map(|&c| (c as f64 + alpha) / denom).collect();
        Ok(LabelDistribution { counts, probs })
    }

    pub fn from_labels(labels: &[usize], classes: usize, alpha: f64) -> Result<Self> {
        let mut counts = vec![0usize; classes];
        for &y in labels {
            if y >= classes {
                return Err(ClgError::Label { label: y, classes });
            }
            counts[y] += 1;
        }
        Self::from_counts(counts, alpha)
    }

    /// A distribution given directly as probabilities (no counts, no
    /// smoothing).
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ClgError::Numeric("probabilities must be finite and non-negative".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ClgError::Numeric(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(LabelDistribution {
            counts: Vec::new(),
            probs,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn classes(&self) -> usize {
        self.probs.len()
    }
}

/// `KL(selected ‖ reference) = Σ_c p_c ln(p_c / q_c)`.
pub fn label_kl(selected: &LabelDistribution, reference: &LabelDistribution) -> Result<f64> {
    if selected.classes() != reference.classes() {
        return Err(ClgError::dim(format!(
            "class counts differ: {} vs {}",
            selected.classes(),
            reference.classes()
        )));
    }
    let mut kl = 0.0;
    for (&p, &q) in selected.probs().iter().zip(reference.probs()) {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += p * (p / q).ln();
    }
    Ok(kl.max(0.0))
}

/// Retrains a fresh concept on `pool[subset]` and returns its mean NLL on
/// `holdout`.
pub fn proxy_ft_eval(
    pool: &DemoPool,
    holdout: &DemoPool,
    model: &ProxyModel,
    subset: &[usize],
    cfg: &TrainConfig,
) -> Result<f64> {
    if holdout.is_empty() {
        return Err(ClgError::EmptySplit("holdout has no examples".into()));
    }
    let sub = pool.subset(subset)?;
    let holdout_ids: HashSet<&str> = holdout.examples().iter().map(|e| e.id.as_str()).collect();
    if let Some(e) = sub.examples().iter().find(|e| holdout_ids.contains(e.id.as_str())) {
        return Err(ClgError::Index(format!(
            "example {:?} appears in both the subset and the holdout",
            e.id
        )));
    }
    let series = train_concept(&sub, model, cfg)?;
    mean_pool_nll(holdout, model, series.last())
}

/// One row of the evaluation CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub n: usize,
    pub l2_distance: f64,
    pub label_kl: f64,
    pub proxy_ft_holdout_nll: f64,
    pub seed: Option<u64>,
    pub wall_ms_train: f64,
    pub wall_ms_grads: f64,
    pub wall_ms_match: f64,
}

pub const REPORT_HEADER: [&str; 9] = [
    "method",
    "n",
    "l2_distance",
    "label_kl",
    "proxy_ft_holdout_nll",
    "seed",
    "wall_ms_train",
    "wall_ms_grads",
    "wall_ms_match",
];

impl EvalReport {
    pub fn validate(&self) -> Result<()> {
        let metrics = [self.l2_distance, self.label_kl, self.proxy_ft_holdout_nll];
        if metrics.iter().any(|v| !v.is_finite()) {
            return Err(ClgError::Numeric(format!(
                "report for {} has non-finite metrics",
                self.method
            )));
        }
        let times = [self.wall_ms_train, self.wall_ms_grads, self.wall_ms_match];
        if times.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ClgError::Numeric(format!(
                "report for {} has invalid timings",
                self.method
            )));
        }
        Ok(())
    }
}

/// Writes one CSV row per report under a fixed header.
pub fn emit_report(reports: &[EvalReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for r in reports {
        r.validate()?;
    }
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => ClgError::io(path, e),
        other => ClgError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(io_err)?;
    w.write_record(REPORT_HEADER).map_err(io_err)?;
    for r in reports {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(|e| ClgError::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<EvalReport>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| ClgError::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    let header = r.headers().map_err(|e| ClgError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(REPORT_HEADER) {
        return Err(ClgError::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    r.deserialize()
        .enumerate()
        .map(|(i, rec)| {
            rec.map_err(|e| ClgError::Parse {
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}
