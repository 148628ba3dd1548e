//! Train → gradients → select → evaluate, with stage timings.

use std::time::{Duration, Instant};

use crate::error::{ClgError, Result};
use crate::io::DemoPool;
use crate::matcher::{select_timed, subset_distance, PhaseTimings, SelectionResult, SelectionSpec};
use crate::metrics::{label_kl, proxy_ft_eval, EvalReport, LabelDistribution, DEFAULT_ALPHA};
use crate::proxy::ProxyModel;
use crate::trainer::{
    compute_curriculum_gradients, train_concept, CheckpointSeries, CurriculumGradientMatrix,
    TrainConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    /// Settings for retraining on the selected subset.
    pub finetune: TrainConfig,
    pub alpha: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            finetune: TrainConfig::finetune_default(),
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// Everything the selectors need from one training run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub checkpoints: CheckpointSeries,
    pub grads: CurriculumGradientMatrix,
    pub train_time: Duration,
    pub grads_time: Duration,
}

pub fn prepare(pool: &DemoPool, model: &ProxyModel, train: &TrainConfig) -> Result<Prepared> {
    let t0 = Instant::now();
    let checkpoints = train_concept(pool, model, train)?;
    let t1 = Instant::now();
    let grads = compute_curriculum_gradients(pool, model, &checkpoints)?;
    let t2 = Instant::now();
    Ok(Prepared {
        checkpoints,
        grads,
        train_time: t1 - t0,
        grads_time: t2 - t1,
    })
}

impl Prepared {
    /// Runs gradient matching on the prepared matrix.
    pub fn select(&self, spec: &SelectionSpec) -> Result<(SelectionResult, PhaseTimings)> {
        select_timed(self.grads.matrix(), spec)
    }
}

/// Scores one selection: matching distance against `grads`, label KL
/// against the holdout labels, and holdout NLL after retraining on the
/// subset.
pub fn evaluate_selection(
    pool: &DemoPool,
    holdout: &DemoPool,
    model: &ProxyModel,
    grads: &CurriculumGradientMatrix,
    selection: &SelectionResult,
    settings: &EvalSettings,
) -> Result<EvalReport> {
    if selection.indices.is_empty() {
        return Err(ClgError::EmptySelection);
    }
    if grads.matrix().rows() != pool.len() {
        return Err(ClgError::dim(format!(
            "gradient matrix has {} rows, pool has {} examples",
            grads.matrix().rows(),
            pool.len()
        )));
    }
    let classes = pool.classes().max(holdout.classes());
    let selected_labels: Vec<usize> = selection.indices.iter().map(|&i| pool.label(i)).collect();
    let selected = LabelDistribution::from_labels(&selected_labels, classes, settings.alpha)?;
    let reference = LabelDistribution::from_labels(&holdout.labels(), classes, settings.alpha)?;
    Ok(EvalReport {
        method: selection.method.clone(),
        n: selection.indices.len(),
        l2_distance: subset_distance(grads.matrix(), &selection.indices)?,
        label_kl: label_kl(&selected, &reference)?,
        proxy_ft_holdout_nll: proxy_ft_eval(
            pool,
            holdout,
            model,
            &selection.indices,
            &settings.finetune,
        )?,
        seed: selection.seed,
        wall_ms_train: 0.0,
        wall_ms_grads: 0.0,
        wall_ms_match: 0.0,
    })
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// [`evaluate_selection`] plus the measured stage times.
pub fn timed_report(
    pool: &DemoPool,
    holdout: &DemoPool,
    model: &ProxyModel,
    prepared: &Prepared,
    selection: &SelectionResult,
    match_time: Duration,
    settings: &EvalSettings,
) -> Result<EvalReport> {
    let mut r = evaluate_selection(pool, holdout, model, &prepared.grads, selection, settings)?;
    r.wall_ms_train = ms(prepared.train_time);
    r.wall_ms_grads = ms(prepared.grads_time);
    r.wall_ms_match = ms(match_time);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::Direction;
    use crate::synth::{pool_and_holdout, separable_task};

    #[test]
    fn end_to_end_small() {
        let model = ProxyModel::new(12, 2, 2, 3, 0).unwrap();
        let (pool, holdout) = pool_and_holdout(&model, &separable_task(), 80, 40, 1).unwrap();
        let prep = prepare(&pool, &model, &TrainConfig::default()).unwrap();
        let (sel, t) = prep.select(&SelectionSpec::new(8)).unwrap();
        let settings = EvalSettings::default();
        let r = timed_report(&pool, &holdout, &model, &prep, &sel, t.greedy + t.swap, &settings)
            .unwrap();
        assert_eq!(r.method, "clg");
        assert_eq!(r.n, 8);
        assert!((r.l2_distance - sel.distance).abs() < 1e-12);
        r.validate().unwrap();

        let max = prep
            .select(&SelectionSpec::new(8).direction(Direction::Maximize))
            .unwrap()
            .0;
        assert!(max.distance > sel.distance);
    }

    #[test]
    fn overlapping_holdout_rejected() {
        let model = ProxyModel::new(6, 2, 1, 2, 0).unwrap();
        let (pool, _) = pool_and_holdout(&model, &separable_task(), 20, 5, 1).unwrap();
        let prep = prepare(&pool, &model, &TrainConfig::default()).unwrap();
        let sel = SelectionResult::unscored("x", vec![0, 1], None);
        let r = evaluate_selection(&pool, &pool, &model, &prep.grads, &sel, &EvalSettings::default());
        assert!(matches!(r, Err(ClgError::Index(_))));
    }
}
