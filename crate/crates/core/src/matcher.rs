//! Gradient matching: pick `n` rows whose mean is closest (in L2) to the
//! mean of all rows.
//!
//! [`select`] runs a greedy construction followed by at most `l` best-swap
//! refinement steps. [`Direction::Maximize`] reverses every comparison,
//! which yields the gradient-mismatching ablation. [`brute_force_select`]
//! enumerates all subsets and serves as the exact reference at small sizes.
//!
//! Candidate scoring uses expanded inner-product forms so each greedy step
//! and each swap scan cost `O(N·D)` and `O(N·n)` respectively. Accepted
//! distances are always recomputed from scratch, so reported values do not
//! depend on the scoring shortcuts.

use std::cmp::Ordering;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ClgError, Result};
use crate::linalg::{dot, pairwise_row_mean, squared_distance, squared_norm, Matrix};
use crate::trainer::mean_gradient;

/// Default cap on swap iterations.
pub const DEFAULT_MAX_SWAPS: usize = 32;

/// Largest Gram cache (entries) kept for the swap phase; beyond this the
/// cross products are recomputed on every scan.
const GRAM_CACHE_LIMIT: usize = 1 << 27;

/// Largest subset count [`brute_force_select`] will enumerate.
pub const BRUTE_FORCE_GUARD: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

impl Direction {
    /// `true` when `a` is strictly better than `b`.
    fn improves(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Minimize => a < b,
            Direction::Maximize => a > b,
        }
    }

    /// Orders scores so that the preferred one compares `Less`.
    fn rank(self, a: f64, b: f64) -> Ordering {
        match self {
            Direction::Minimize => a.total_cmp(&b),
            Direction::Maximize => b.total_cmp(&a),
        }
    }

    pub fn method_name(self) -> &'static str {
        match self {
            Direction::Minimize => "clg",
            Direction::Maximize => "clg-maximize",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = ClgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimize" => Ok(Direction::Minimize),
            "maximize" => Ok(Direction::Maximize),
            other => Err(ClgError::Config(format!("unknown direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionSpec {
    pub n: usize,
    pub max_swap_iters: usize,
    pub direction: Direction,
}

impl SelectionSpec {
    pub fn new(n: usize) -> Self {
        SelectionSpec {
            n,
            max_swap_iters: DEFAULT_MAX_SWAPS,
            direction: Direction::Minimize,
        }
    }

    pub fn max_swaps(mut self, l: usize) -> Self {
        self.max_swap_iters = l;
        self
    }

    pub fn direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    fn validate(&self, rows: usize) -> Result<()> {
        if rows == 0 {
            return Err(ClgError::EmptyPool);
        }
        if self.n == 0 || self.n > rows {
            return Err(ClgError::Infeasible {
                n: self.n,
                available: rows,
            });
        }
        Ok(())
    }
}

fn nan_as_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn null_as_nan<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// A chosen subset plus how it was reached.
///
/// `distance` and `greedy_distance` are `NaN` (serialized as `null`) for
/// selectors that never saw a gradient matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: String,
    pub n: usize,
    /// Row indices; for gradient matching, in greedy selection order with
    /// swapped-in rows taking the slot of the row they replaced.
    pub indices: Vec<usize>,
    #[serde(serialize_with = "nan_as_null", deserialize_with = "null_as_nan")]
    pub distance: f64,
    #[serde(serialize_with = "nan_as_null", deserialize_with = "null_as_nan")]
    pub greedy_distance: f64,
    pub swaps_performed: usize,
    pub seed: Option<u64>,
    /// Distance after each accepted swap.
    pub trace: Vec<f64>,
    /// Distance after each greedy addition (incremental mean). Not part of
    /// the on-disk document.
    #[serde(skip)]
    pub greedy_trace: Vec<f64>,
}

impl SelectionResult {
    /// A result for a selector that does not optimize the matching objective.
    pub fn unscored(method: &str, indices: Vec<usize>, seed: Option<u64>) -> Self {
        SelectionResult {
            method: method.to_string(),
            n: indices.len(),
            indices,
            distance: f64::NAN,
            greedy_distance: f64::NAN,
            swaps_performed: 0,
            seed,
            trace: Vec::new(),
            greedy_trace: Vec::new(),
        }
    }

    /// Fills `distance` and `greedy_distance` with the matching distance of
    /// the stored indices against `g`.
    pub fn with_distance_from(mut self, g: &Matrix) -> Result<Self> {
        let d = subset_distance(g, &self.indices)?;
        self.distance = d;
        self.greedy_distance = d;
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("selection results serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ClgError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| ClgError::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ClgError::io(path, e))?;
        Self::from_json(&text)
    }
}

/// `‖mean(all rows) − mean(rows[indices])‖₂`, both means computed from
/// scratch with pairwise summation over ascending indices.
pub fn subset_distance(g: &Matrix, indices: &[usize]) -> Result<f64> {
    let target = mean_gradient(g, None)?;
    subset_distance_to(g, &target, indices)
}

fn subset_distance_to(g: &Matrix, target: &[f64], indices: &[usize]) -> Result<f64> {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    let mean = mean_gradient(g, Some(&sorted))?;
    Ok(squared_distance(target, &mean).sqrt())
}

/// Wall time of the two phases of [`select`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub greedy: Duration,
    pub swap: Duration,
}

/// Shared per-matrix quantities.
struct MatchState<'a> {
    g: &'a Matrix,
    direction: Direction,
    target: Vec<f64>,
    row_sq: Vec<f64>,
    target_dot: Vec<f64>,
}

impl<'a> MatchState<'a> {
    fn new(g: &'a Matrix, direction: Direction) -> Result<Self> {
        let target = mean_gradient(g, None)?;
        let (row_sq, target_dot): (Vec<f64>, Vec<f64>) = (0..g.rows())
            .into_par_iter()
            .map(|j| {
                let r = g.row(j);
                (squared_norm(r), dot(&target, r))
            })
            .unzip();
        Ok(MatchState {
            g,
            direction,
            target,
            row_sq,
            target_dot,
        })
    }

    fn rows(&self) -> usize {
        self.g.rows()
    }

    /// `row_j · row_k` for every `j`.
    fn cross_column(&self, k: usize) -> Vec<f64> {
        let rk = self.g.row(k);
        (0..self.rows())
            .into_par_iter()
            .map(|j| dot(self.g.row(j), rk))
            .collect()
    }

    fn distance_from_scratch(&self, indices: &[usize]) -> f64 {
        subset_distance_to(self.g, &self.target, indices).expect("indices validated by caller")
    }

    fn residual_norm(&self, mean: &[f64]) -> f64 {
        squared_distance(&self.target, mean).sqrt()
    }
}

/// Gram columns `row_j · row_{S[slot]}`, slot-major.
struct GramCache {
    rows: usize,
    columns: Vec<Vec<f64>>,
}

impl GramCache {
    fn fits(rows: usize, n: usize) -> bool {
        rows.saturating_mul(n) <= GRAM_CACHE_LIMIT
    }
}

/// Picks the preferred `(score, index)` pair; ties go to the lower index.
fn better(direction: Direction, a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    match direction.rank(a.0, b.0).then(a.1.cmp(&b.1)) {
        Ordering::Greater => b,
        _ => a,
    }
}

struct GreedyOutcome {
    result: SelectionResult,
    mean: Vec<f64>,
    cache: Option<GramCache>,
}

fn greedy_phase(state: &MatchState<'_>, spec: &SelectionSpec) -> GreedyOutcome {
    let n_rows = state.rows();
    let dir = state.direction;
    let keep_cache = spec.max_swap_iters > 0 && GramCache::fits(n_rows, spec.n);
    let mut cache = keep_cache.then(|| GramCache {
        rows: n_rows,
        columns: Vec::with_capacity(spec.n),
    });

    let mut in_set = vec![false; n_rows];
    let mut selected = Vec::with_capacity(spec.n);
    // Σ_{k∈S} row_j · row_k
    let mut sum_dot = vec![0.0; n_rows];
    let mut mean = vec![0.0; state.g.cols()];
    let mut trace = Vec::with_capacity(spec.n);

    for step in 1..=spec.n {
        let inv = 1.0 / step as f64;
        let inv2 = inv * inv;
        // ‖t − (sum_S + row_j)/i‖² up to terms that do not depend on j
        let (_, pick) = (0..n_rows)
            .into_par_iter()
            .filter(|&j| !in_set[j])
            .map(|j| {
                let score = -2.0 * inv * state.target_dot[j]
                    + inv2 * (2.0 * sum_dot[j] + state.row_sq[j]);
                (score, j)
            })
            .reduce_with(|a, b| better(dir, a, b))
            .expect("at least one candidate remains");

        in_set[pick] = true;
        selected.push(pick);
        let column = state.cross_column(pick);
        sum_dot
            .par_iter_mut()
            .zip(&column)
            .for_each(|(s, c)| *s += c);
        if let Some(c) = cache.as_mut() {
            c.columns.push(column);
        }

        let keep = (step - 1) as f64 * inv;
        for (m, r) in mean.iter_mut().zip(state.g.row(pick)) {
            *m = keep * *m + inv * r;
        }
        trace.push(state.residual_norm(&mean));
    }

    let d = state.distance_from_scratch(&selected);
    GreedyOutcome {
        result: SelectionResult {
            method: dir.method_name().to_string(),
            n: spec.n,
            indices: selected,
            distance: d,
            greedy_distance: d,
            swaps_performed: 0,
            seed: None,
            trace: Vec::new(),
            greedy_trace: trace,
        },
        mean,
        cache,
    }
}

fn swap_phase(
    state: &MatchState<'_>,
    spec: &SelectionSpec,
    mut result: SelectionResult,
    mut mean: Vec<f64>,
    mut cache: Option<GramCache>,
) -> SelectionResult {
    let n_rows = state.rows();
    let n = result.indices.len();
    let dir = state.direction;
    if n == n_rows || spec.max_swap_iters == 0 {
        return result;
    }
    let mut in_set = vec![false; n_rows];
    for &i in &result.indices {
        in_set[i] = true;
    }
    let inv = 1.0 / n as f64;
    let inv2 = inv * inv;
    let mut d_old = result.distance;

    for _ in 0..spec.max_swap_iters {
        let residual: Vec<f64> = state.target.iter().zip(&mean).map(|(t, m)| t - m).collect();
        let rdot: Vec<f64> = (0..n_rows)
            .into_par_iter()
            .map(|j| dot(&residual, state.g.row(j)))
            .collect();
        let slots = &result.indices;

        // Change in ‖residual‖² when slot s (row k) is replaced by row j:
        // −(2/n)(r·row_j − r·row_k) + (‖row_j‖² + ‖row_k‖² − 2 row_j·row_k)/n²
        let best = (0..n_rows)
            .into_par_iter()
            .filter(|&j| !in_set[j])
            .map(|j| {
                let rj = state.g.row(j);
                let mut local: Option<(f64, usize, usize)> = None;
                for (s, &k) in slots.iter().enumerate() {
                    let cross = match cache.as_ref() {
                        Some(c) => c.columns[s][j],
                        None => dot(rj, state.g.row(k)),
                    };
                    let delta = -2.0 * inv * (rdot[j] - rdot[k])
                        + inv2 * (state.row_sq[j] + state.row_sq[k] - 2.0 * cross);
                    let replace = match local {
                        None => true,
                        Some((bd, _, bk)) => {
                            dir.rank(delta, bd).then(k.cmp(&slots[bk])) == Ordering::Less
                        }
                    };
                    if replace {
                        local = Some((delta, j, s));
                    }
                }
                local.expect("selection is non-empty")
            })
            .reduce_with(|a, b| {
                match dir
                    .rank(a.0, b.0)
                    .then(a.1.cmp(&b.1))
                    .then(slots[a.2].cmp(&slots[b.2]))
                {
                    Ordering::Greater => b,
                    _ => a,
                }
            });
        let Some((_, j, slot)) = best else { break };

        let k = result.indices[slot];
        let mut candidate = result.indices.clone();
        candidate[slot] = j;
        let d_new = state.distance_from_scratch(&candidate);
        if !dir.improves(d_new, d_old) {
            break;
        }

        result.indices = candidate;
        in_set[k] = false;
        in_set[j] = true;
        for ((m, rj), rk) in mean.iter_mut().zip(state.g.row(j)).zip(state.g.row(k)) {
            *m += (rj - rk) * inv;
        }
        if let Some(c) = cache.as_mut() {
            debug_assert_eq!(c.rows, n_rows);
            c.columns[slot] = state.cross_column(j);
        }
        d_old = d_new;
        result.distance = d_new;
        result.swaps_performed += 1;
        result.trace.push(d_new);
    }
    result
}

/// Greedy construction only: each step adds the unselected row whose
/// inclusion gives the best distance, lowest index on ties.
pub fn greedy_select(g: &Matrix, spec: &SelectionSpec) -> Result<SelectionResult> {
    spec.validate(g.rows())?;
    let state = MatchState::new(g, spec.direction)?;
    let mut spec = *spec;
    spec.max_swap_iters = 0;
    Ok(greedy_phase(&state, &spec).result)
}

/// Swap refinement starting from `start`: up to `spec.max_swap_iters`
/// rounds, each applying the best (add, remove) pair if it strictly
/// improves the distance.
pub fn local_optimize(
    g: &Matrix,
    start: &SelectionResult,
    spec: &SelectionSpec,
) -> Result<SelectionResult> {
    spec.validate(g.rows())?;
    let mut sorted = start.indices.clone();
    sorted.sort_unstable();
    // validates range, uniqueness and non-emptiness
    mean_gradient(g, Some(&sorted))?;
    let state = MatchState::new(g, spec.direction)?;
    let n = start.indices.len();
    let cache = (spec.max_swap_iters > 0 && GramCache::fits(g.rows(), n)).then(|| GramCache {
        rows: g.rows(),
        columns: start.indices.iter().map(|&k| state.cross_column(k)).collect(),
    });
    let mean = pairwise_row_mean(g, &start.indices);
    let d = state.distance_from_scratch(&start.indices);
    let mut result = start.clone();
    result.n = n;
    result.distance = d;
    if !result.greedy_distance.is_finite() {
        result.greedy_distance = d;
    }
    Ok(swap_phase(&state, spec, result, mean, cache))
}

/// Greedy construction followed by swap refinement.
pub fn select(g: &Matrix, spec: &SelectionSpec) -> Result<SelectionResult> {
    select_timed(g, spec).map(|(r, _)| r)
}

/// [`select`] that also reports the wall time of each phase.
pub fn select_timed(g: &Matrix, spec: &SelectionSpec) -> Result<(SelectionResult, PhaseTimings)> {
    spec.validate(g.rows())?;
    let t0 = Instant::now();
    let state = MatchState::new(g, spec.direction)?;
    let greedy = greedy_phase(&state, spec);
    let t1 = Instant::now();
    let result = swap_phase(&state, spec, greedy.result, greedy.mean, greedy.cache);
    let t2 = Instant::now();
    Ok((
        result,
        PhaseTimings {
            greedy: t1 - t0,
            swap: t2 - t1,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Ascending row indices of the optimal subset.
    pub indices: Vec<usize>,
    pub distance: f64,
}

impl BruteForceResult {
    pub fn into_selection(self) -> SelectionResult {
        SelectionResult {
            method: "brute-force".to_string(),
            n: self.indices.len(),
            indices: self.indices,
            distance: self.distance,
            greedy_distance: self.distance,
            swaps_performed: 0,
            seed: None,
            trace: Vec::new(),
            greedy_trace: Vec::new(),
        }
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exhaustive minimizer over all `n`-subsets, in lexicographic order, first
/// one wins on ties.
pub fn brute_force_select(g: &Matrix, n: usize) -> Result<BruteForceResult> {
    let rows = g.rows();
    if rows == 0 {
        return Err(ClgError::EmptyPool);
    }
    if n == 0 || n > rows {
        return Err(ClgError::Infeasible { n, available: rows });
    }
    let combinations = binomial(rows, n);
    if combinations > BRUTE_FORCE_GUARD {
        return Err(ClgError::TooLarge {
            combinations,
            guard: BRUTE_FORCE_GUARD,
        });
    }
    let target = mean_gradient(g, None)?;
    let mut combo: Vec<usize> = (0..n).collect();
    let mut best = (f64::INFINITY, combo.clone());
    loop {
        let d = squared_distance(&target, &pairwise_row_mean(g, &combo)).sqrt();
        if d < best.0 {
            best = (d, combo.clone());
        }
        // advance to the next combination in lexicographic order
        let Some(pos) = (0..n).rev().find(|&i| combo[i] < rows - n + i) else {
            break;
        };
        combo[pos] += 1;
        for i in pos + 1..n {
            combo[i] = combo[i - 1] + 1;
        }
    }
    Ok(BruteForceResult {
        indices: best.1,
        distance: best.0,
    })
}
