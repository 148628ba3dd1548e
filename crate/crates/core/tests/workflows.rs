use clg::baselines::{best_of_n_select, latent_bayesian_select, random_select, RetrainScorer, SubsetScorer};
use clg::io::DemoPool;
use clg::metrics::{label_kl, proxy_ft_eval, LabelDistribution, DEFAULT_ALPHA};
use clg::pipeline::prepare;
use clg::synth::{easy_class_task, pool_and_holdout, separable_task};
use clg::trainer::mean_pool_nll;
use clg::{select, train_concept, Matrix, ProxyModel, SelectionSpec, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn separable() -> (ProxyModel, DemoPool, DemoPool) {
    let model = ProxyModel::new(32, 2, 4, 10, 0).unwrap();
    let (pool, holdout) = pool_and_holdout(&model, &separable_task(), 1000, 300, 0).unwrap();
    (model, pool, holdout)
}

#[test]
fn training_loss_mostly_decreases_on_separable_pool() {
    let (model, pool, _) = separable();
    let cfg = TrainConfig { lr: 1e-3, batch_size: 64, epochs: 10, seed: 0 };
    let series = train_concept(&pool, &model, &cfg).unwrap();
    let mut prev = mean_pool_nll(&pool, &model, series.initial()).unwrap();
    let mut non_increasing = 0;
    for &loss in series.epoch_losses() {
        if loss <= prev {
            non_increasing += 1;
        }
        prev = loss;
    }
    assert!(non_increasing >= 8, "{non_increasing}/10: {:?}", series.epoch_losses());
}

#[test]
fn best_of_five_beats_its_average_candidate() {
    let (model, pool, _) = separable();
    let cfg = TrainConfig::finetune_default();
    let scorer = RetrainScorer { pool: &pool, model: &model, cfg };
    let best = best_of_n_select(&pool, 128, 5, 4, &scorer, None).unwrap();

    // recompute each candidate independently
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut scores = Vec::new();
    for _ in 0..5 {
        let idx = clg::baselines::random_indices(pool.len(), 128, &mut rng).unwrap();
        let sub = pool.subset(&idx).unwrap();
        let z = train_concept(&sub, &model, &cfg).unwrap();
        scores.push(mean_pool_nll(&pool, &model, z.last()).unwrap());
    }
    assert_eq!(scores, best.candidate_scores);
    let winner = scorer.score(&best.selection.indices).unwrap();
    let mean = scores.iter().sum::<f64>() / 5.0;
    assert!(winner <= mean);
    assert!(scores.iter().all(|&s| winner <= s));
}

fn kl_of(pool: &DemoPool, idx: &[usize], reference: &LabelDistribution) -> f64 {
    let labels: Vec<usize> = idx.iter().map(|&i| pool.label(i)).collect();
    let p = LabelDistribution::from_labels(&labels, pool.classes(), DEFAULT_ALPHA).unwrap();
    label_kl(&p, reference).unwrap()
}

#[test]
fn likelihood_ranking_skews_toward_the_easy_class() {
    let model = ProxyModel::new(32, 4, 4, 10, 2).unwrap();
    let (pool, _) = pool_and_holdout(&model, &easy_class_task(), 800, 1, 2).unwrap();
    let reference = LabelDistribution::from_labels(&pool.labels(), 4, DEFAULT_ALPHA).unwrap();
    let series = train_concept(&pool, &model, &TrainConfig::default()).unwrap();
    let lb = latent_bayesian_select(&pool, &model, series.last(), 64).unwrap();
    let easy = lb.indices.iter().filter(|&&i| pool.label(i) == 0).count();
    assert!(easy > 64 / 2, "{easy} of 64 from the easy class");
    let k_lb = kl_of(&pool, &lb.indices, &reference);
    let k_rand = (0..20)
        .map(|s| kl_of(&pool, &random_select(&pool, 64, s, None).unwrap().indices, &reference))
        .sum::<f64>()
        / 20.0;
    assert!(k_lb > k_rand, "{k_lb} vs {k_rand}");
}

#[test]
fn finetune_eval_on_full_pool_matches_direct_computation() {
    let (model, pool, holdout) = separable();
    let cfg = TrainConfig::default();
    let all: Vec<usize> = (0..pool.len()).collect();
    let via_eval = proxy_ft_eval(&pool, &holdout, &model, &all, &cfg).unwrap();
    let z = train_concept(&pool, &model, &cfg).unwrap();
    let direct = mean_pool_nll(&holdout, &model, z.last()).unwrap();
    assert_eq!(via_eval, direct);

    let frozen = TrainConfig { lr: 0.0, ..cfg };
    let nll = proxy_ft_eval(&pool, &holdout, &model, &all[..10], &frozen).unwrap();
    let z0 = train_concept(&pool, &model, &frozen).unwrap();
    assert_eq!(nll, mean_pool_nll(&holdout, &model, z0.initial()).unwrap());
}

#[test]
fn subset_leaking_into_holdout_is_rejected() {
    let (model, pool, _) = separable();
    let leaked = pool.subset(&[0]).unwrap();
    let r = proxy_ft_eval(&pool, &leaked, &model, &[0, 1], &TrainConfig::default());
    assert!(matches!(r, Err(clg::ClgError::Index(_))));
}

#[test]
fn large_selection_beats_random_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (rows, cols, n) = (5000, 200, 128);
    let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    let g = Matrix::from_vec(rows, cols, data).unwrap();
    let sel = select(&g, &SelectionSpec::new(n)).unwrap();
    let mut total = 0.0;
    for s in 0..100 {
        let mut r = ChaCha8Rng::seed_from_u64(s);
        let idx = clg::baselines::random_indices(rows, n, &mut r).unwrap();
        total += clg::matcher::subset_distance(&g, &idx).unwrap();
    }
    assert!(sel.distance <= total / 100.0);
    assert!(sel.distance <= sel.greedy_distance);
}

#[test]
fn prepared_run_selects_distinct_rows() {
    let (model, pool, _) = separable();
    let prep = prepare(&pool, &model, &TrainConfig::default()).unwrap();
    let (sel, _) = prep.select(&SelectionSpec::new(64)).unwrap();
    let mut idx = sel.indices.clone();
    idx.sort_unstable();
    idx.dedup();
    assert_eq!(idx.len(), 64);
}
