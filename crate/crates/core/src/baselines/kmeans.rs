//! Lloyd's k-means with k-means++ seeding, used to pick one representative
//! per cluster of a user-supplied embedding matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ClgError, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::matcher::SelectionResult;

/// Centroid movement below which Lloyd iterations stop.
pub const CONVERGENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansSelection {
    pub selection: SelectionResult,
    /// Set when every embedding is identical; the first `n` indices are
    /// returned in that case.
    pub degenerate: bool,
    /// Sum of squared distances to assigned centroids, one entry per Lloyd
    /// iteration (measured right after the assignment step).
    pub inertia_trace: Vec<f64>,
    pub centroids: Matrix,
}

fn nearest(centroids: &Matrix, point: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.iter_rows().enumerate() {
        let d = squared_distance(row, point);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = x.rows();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(first))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // every remaining point coincides with a chosen centroid
            (0..n).find(|&i| !taken[i]).expect("k <= n")
        };
        chosen.push(next);
        taken[next] = true;
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(x.row(i), x.row(next)));
        }
    }
    chosen
}

/// Clusters the rows of `embeddings` into `n` groups and returns, for each
/// centroid in order, the nearest embedding not already taken.
pub fn kmeans_embed_select(
    embeddings: &Matrix,
    n: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KMeansSelection> {
    let rows = embeddings.rows();
    if rows == 0 {
        return Err(ClgError::EmptyPool);
    }
    if n == 0 || n > rows {
        return Err(ClgError::Infeasible { n, available: rows });
    }
    if max_iters == 0 {
        return Err(ClgError::Config("max_iters must be at least 1".into()));
    }
    if !embeddings.is_finite() {
        return Err(ClgError::Numeric("embeddings contain non-finite values".into()));
    }
    let first = embeddings.row(0);
    if embeddings.iter_rows().all(|r| r == first) {
        return Ok(KMeansSelection {
            selection: SelectionResult::unscored("kmeans", (0..n).collect(), Some(seed)),
            degenerate: true,
            inertia_trace: Vec::new(),
            centroids: embeddings.select_rows(&vec![0; n]),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = plus_plus_init(embeddings, n, &mut rng);
    let mut centroids = embeddings.select_rows(&init);
    let mut assignment = vec![0usize; rows];
    let mut inertia_trace = Vec::new();
    let dim = embeddings.cols();

    for _ in 0..max_iters {
        let mut inertia = 0.0;
        for (i, a) in assignment.iter_mut().enumerate() {
            let (c, d) = nearest(&centroids, embeddings.row(i));
            *a = c;
            inertia += d;
        }
        inertia_trace.push(inertia);

        let mut sums = Matrix::zeros(n, dim);
        let mut counts = vec![0usize; n];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums.row_mut(c).iter_mut().zip(embeddings.row(i)) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..n {
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let new: Vec<f64> = sums.row(c).iter().map(|s| s * inv).collect();
            shift = shift.max(squared_distance(&new, centroids.row(c)).sqrt());
            centroids.row_mut(c).copy_from_slice(&new);
        }
        if shift < CONVERGENCE_TOL {
            break;
        }
    }

    let mut taken = vec![false; rows];
    let mut picks = Vec::with_capacity(n);
    for c in 0..n {
        let centre = centroids.row(c);
        let mut best: Option<(f64, usize)> = None;
        for i in (0..rows).filter(|&i| !taken[i]) {
            let d = squared_distance(embeddings.row(i), centre);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        let (_, i) = best.expect("n <= rows leaves an untaken point");
        taken[i] = true;
        picks.push(i);
    }
    Ok(KMeansSelection {
        selection: SelectionResult::unscored("kmeans", picks, Some(seed)),
        degenerate: false,
        inertia_trace,
        centroids,
    })
}
