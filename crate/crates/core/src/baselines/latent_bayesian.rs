use crate::baselines::bm25::top_n;
use crate::error::{ClgError, Result};
use crate::io::DemoPool;
use crate::matcher::SelectionResult;
use crate::proxy::{ConceptEmbedding, ProxyModel};

/// `log P(y_i | z, x_i)` for every example.
pub fn latent_bayesian_scores(
    pool: &DemoPool,
    model: &ProxyModel,
    z_final: &ConceptEmbedding,
) -> Result<Vec<f64>> {
    (0..pool.len())
        .map(|i| model.nll_loss(z_final, pool.x(i), pool.label(i)).map(|l| -l))
        .collect()
}

/// Top-`n` examples by likelihood of their own label under the trained
/// concept.
pub fn latent_bayesian_select(
    pool: &DemoPool,
    model: &ProxyModel,
    z_final: &ConceptEmbedding,
    n: usize,
) -> Result<SelectionResult> {
    if n == 0 || n > pool.len() {
        return Err(ClgError::Infeasible {
            n,
            available: pool.len(),
        });
    }
    let scores = latent_bayesian_scores(pool, model, z_final)?;
    Ok(SelectionResult::unscored(
        "latent-bayesian",
        top_n(&scores, n),
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{Example, PoolSchema};

    fn setup() -> (DemoPool, ProxyModel, ConceptEmbedding) {
        let ex = (0..12)
            .map(|i| Example {
                id: i.to_string(),
                label: i % 3,
                text: None,
                features: Some(vec![(i as f64).sin(), (i as f64).cos()]),
            })
            .collect();
        let pool = DemoPool::new(ex, PoolSchema::default()).unwrap();
        let model = ProxyModel::new(2, 3, 2, 2, 4).unwrap();
        let z = ConceptEmbedding::from_flat(2, 2, vec![0.1, -0.2, 0.3, 0.0]).unwrap();
        (pool, model, z)
    }

    #[test]
    fn full_selection() {
        let (p, m, z) = setup();
        let mut idx = latent_bayesian_select(&p, &m, &z, 12).unwrap().indices;
        idx.sort_unstable();
        assert_eq!(idx, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn scores_are_negated_losses() {
        let (p, m, z) = setup();
        let s = latent_bayesian_scores(&p, &m, &z).unwrap();
        for i in 0..p.len() {
            assert_eq!(s[i], -m.nll_loss(&z, p.x(i), p.label(i)).unwrap());
        }
        let top = latent_bayesian_select(&p, &m, &z, 4).unwrap().indices;
        let worst_top = top.iter().map(|&i| s[i]).fold(f64::INFINITY, f64::min);
        for i in (0..12).filter(|i| !top.contains(i)) {
            assert!(s[i] <= worst_top);
        }
    }

    #[test]
    fn shape_mismatch() {
        let (p, m, _) = setup();
        let z = ConceptEmbedding::zeros(1, 4);
        assert!(matches!(
            latent_bayesian_select(&p, &m, &z, 2),
            Err(ClgError::Dimension(_))
        ));
    }
}
