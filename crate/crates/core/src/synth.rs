//! Seeded synthetic pools for tests, examples and the bundled fixture.
//!
//! Example `i` of class `y` gets `x = signal[y] · A_y / ‖A_y‖ + noise · ε`
//! with `ε ~ N(0, I)`, so the model's own feature weights decide how easy
//! each class is. With `with_text` set, each example also carries a short
//! text built from class words and shared filler words.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ClgError, Result};
use crate::io::{DemoPool, Example, PoolSchema};
use crate::proxy::ProxyModel;

const CLASS_WORDS: [&str; 8] = [
    "amber", "birch", "cobalt", "dune", "ember", "fjord", "garnet", "harbor",
];
const FILLER_VOCAB: usize = 40;
const SEPARABLE_MARGIN: f64 = 0.25;
const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTask {
    /// Per-class signal strength along that class's feature weights.
    pub signal: Vec<f64>,
    pub noise: f64,
    /// Label prior. `None` means labels cycle `0, 1, …, C−1` exactly.
    pub class_weights: Option<Vec<f64>>,
    pub with_text: bool,
    /// When set, examples are redrawn until `A_y·x − max_{c≠y} A_c·x` is at
    /// least this value, so the pool is linearly separable by `A`.
    pub min_margin: Option<f64>,
}

impl SynthTask {
    pub fn uniform(classes: usize, signal: f64, noise: f64) -> Self {
        SynthTask {
            signal: vec![signal; classes],
            noise,
            class_weights: None,
            with_text: false,
            min_margin: None,
        }
    }

    pub fn classes(&self) -> usize {
        self.signal.len()
    }

    pub fn with_text(mut self) -> Self {
        self.with_text = true;
        self
    }
}

/// Two classes, linearly separable by the model's feature weights with a
/// small margin but without saturating its probabilities.
pub fn separable_task() -> SynthTask {
    SynthTask {
        min_margin: Some(SEPARABLE_MARGIN),
        ..SynthTask::uniform(2, 1.5, 0.5)
    }
}

/// Four balanced classes of equal, moderate difficulty.
pub fn balanced_task() -> SynthTask {
    SynthTask::uniform(4, 2.0, 0.5)
}

/// Class 0 is far easier than the other three.
pub fn easy_class_task() -> SynthTask {
    SynthTask {
        signal: vec![8.0, 1.0, 1.0, 1.0],
        noise: 0.5,
        class_weights: None,
        with_text: false,
        min_margin: None,
    }
}

/// Draws `count` examples whose ids are `{prefix}{i}`.
pub fn generate(
    model: &ProxyModel,
    task: &SynthTask,
    count: usize,
    prefix: &str,
    seed: u64,
) -> Result<Vec<Example>> {
    let classes = task.classes();
    if classes == 0 || classes > model.classes() {
        return Err(ClgError::dim(format!(
            "task has {classes} classes, model supports {}",
            model.classes()
        )));
    }
    if !(task.noise >= 0.0 && task.noise.is_finite()) || task.signal.iter().any(|s| !s.is_finite())
    {
        return Err(ClgError::Config("signal and noise must be finite, noise >= 0".into()));
    }
    let weights = match &task.class_weights {
        Some(w) if w.len() != classes => {
            return Err(ClgError::dim("class_weights length differs from class count"))
        }
        Some(w) => Some(WeightedIndex::new(w).map_err(|e| ClgError::Config(e.to_string()))?),
        None => None,
    };

    let d = model.feature_dim();
    let directions: Vec<Vec<f64>> = (0..classes)
        .map(|c| {
            let row = model.feature_weights().row(c);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter().map(|v| v / norm.max(f64::MIN_POSITIVE)).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let y = match &weights {
            Some(w) => w.sample(&mut rng),
            None => i % classes,
        };
        let mut attempts = 0;
        let features = loop {
            let x: Vec<f64> = (0..d)
                .map(|j| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    task.signal[y] * directions[y][j] + task.noise * e
                })
                .collect();
            match task.min_margin {
                Some(m) if margin(model, &x, y) < m => {
                    attempts += 1;
                    if attempts == MAX_REDRAWS {
                        return Err(ClgError::Config(format!(
                            "no example of class {y} reached margin {m} in {MAX_REDRAWS} draws"
                        )));
                    }
                }
                _ => break x,
            }
        };
        let text = task.with_text.then(|| synth_text(y, &mut rng));
        out.push(Example {
            id: format!("{prefix}{i}"),
            label: y,
            text,
            features: Some(features),
        });
    }
    Ok(out)
}

fn margin(model: &ProxyModel, x: &[f64], y: usize) -> f64 {
    let a = model.feature_weights();
    let score = |c: usize| a.row(c).iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
    let own = score(y);
    let other = (0..model.classes())
        .filter(|&c| c != y)
        .map(score)
        .fold(f64::NEG_INFINITY, f64::max);
    own - other
}

fn synth_text(y: usize, rng: &mut ChaCha8Rng) -> String {
    let class_word = CLASS_WORDS[y % CLASS_WORDS.len()];
    let len = rng.random_range(4..12usize);
    let mut words = Vec::with_capacity(len + 2);
    words.push(class_word.to_string());
    for _ in 0..len {
        if rng.random_bool(0.25) {
            words.push(class_word.to_string());
        } else {
            words.push(format!("w{}", rng.random_range(0..FILLER_VOCAB)));
        }
    }
    words.join(" ")
}

/// Builds a pool/holdout pair from one task. Holdout ids are prefixed `h`
/// and pool ids `p`, so the two never overlap.
pub fn pool_and_holdout(
    model: &ProxyModel,
    task: &SynthTask,
    pool_size: usize,
    holdout_size: usize,
    seed: u64,
) -> Result<(DemoPool, DemoPool)> {
    let schema = PoolSchema {
        classes: Some(model.classes()),
        ..PoolSchema::default()
    };
    let pool = DemoPool::new(generate(model, task, pool_size, "p", seed)?, schema)?;
    let holdout = DemoPool::new(
        generate(model, task, holdout_size, "h", seed.wrapping_add(0x9e37_79b9))?,
        schema,
    )?;
    Ok((pool, holdout))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let m = ProxyModel::new(16, 4, 2, 4, 1).unwrap();
        let a = generate(&m, &balanced_task(), 40, "p", 3).unwrap();
        let b = generate(&m, &balanced_task(), 40, "p", 3).unwrap();
        assert_eq!(a, b);
        for c in 0..4 {
            assert_eq!(a.iter().filter(|e| e.label == c).count(), 10);
        }
    }

    #[test]
    fn signal_aligns_with_own_class() {
        let m = ProxyModel::new(32, 2, 2, 4, 7).unwrap();
        let ex = generate(&m, &SynthTask::uniform(2, 5.0, 0.0), 10, "p", 0).unwrap();
        for e in &ex {
            let x = e.features.as_ref().unwrap();
            let own: f64 = m.feature_weights().row(e.label).iter().zip(x).map(|(a, b)| a * b).sum();
            let norm = m.feature_weights().row(e.label).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((own - 5.0 * norm).abs() < 1e-9);
        }
    }

    #[test]
    fn text_mentions_class_word() {
        let m = ProxyModel::new(8, 2, 1, 2, 0).unwrap();
        let ex = generate(&m, &separable_task().with_text(), 6, "p", 0).unwrap();
        for e in &ex {
            assert!(e.text.as_ref().unwrap().starts_with(CLASS_WORDS[e.label]));
        }
    }

    #[test]
    fn separable_task_respects_margin() {
        let m = ProxyModel::new(16, 2, 2, 4, 3).unwrap();
        let ex = generate(&m, &separable_task(), 200, "p", 1).unwrap();
        for e in &ex {
            assert!(margin(&m, e.features.as_ref().unwrap(), e.label) >= SEPARABLE_MARGIN);
        }
    }

    #[test]
    fn impossible_margin_errors() {
        let m = ProxyModel::new(4, 2, 1, 2, 0).unwrap();
        let task = SynthTask {
            min_margin: Some(1e6),
            ..SynthTask::uniform(2, 1.0, 0.1)
        };
        assert!(matches!(generate(&m, &task, 1, "p", 0), Err(ClgError::Config(_))));
    }

    #[test]
    fn too_many_classes_rejected() {
        let m = ProxyModel::new(8, 2, 1, 2, 0).unwrap();
        assert!(generate(&m, &balanced_task(), 4, "p", 0).is_err());
    }

    #[test]
    fn pool_and_holdout_disjoint_ids() {
        let m = ProxyModel::new(8, 2, 1, 2, 0).unwrap();
        let (p, h) = pool_and_holdout(&m, &separable_task(), 5, 5, 0).unwrap();
        assert!(p.examples().iter().all(|e| e.id.starts_with('p')));
        assert!(h.examples().iter().all(|e| e.id.starts_with('h')));
    }
}
