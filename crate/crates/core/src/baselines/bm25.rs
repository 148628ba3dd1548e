//! Okapi BM25 and the "major" selector: every example queries every other
//! example, and the candidates retrieved with the highest mean score win.

use std::collections::HashMap;

use crate::error::{ClgError, Result};
use crate::io::tokenize;
use crate::matcher::SelectionResult;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }
}

impl Bm25Params {
    fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(ClgError::Config(format!("k1 must be positive, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(ClgError::Config(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// Term statistics for a fixed document collection.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    docs: Vec<HashMap<String, usize>>,
    doc_len: Vec<usize>,
    avg_len: f64,
    doc_freq: HashMap<String, usize>,
    /// Occurrences of each term summed over all documents.
    total_count: HashMap<String, usize>,
}

impl Bm25Index {
    pub fn new<S: AsRef<str>>(texts: &[S], params: Bm25Params) -> Result<Self> {
        params.validate()?;
        if texts.is_empty() {
            return Err(ClgError::EmptyPool);
        }
        let mut docs = Vec::with_capacity(texts.len());
        let mut doc_len = Vec::with_capacity(texts.len());
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        let mut total_count: HashMap<String, usize> = HashMap::new();
        for t in texts {
            let toks = tokenize(t.as_ref());
            doc_len.push(toks.len());
            let mut tf: HashMap<String, usize> = HashMap::new();
            for tok in toks {
                *tf.entry(tok).or_default() += 1;
            }
            for (term, &c) in &tf {
                *doc_freq.entry(term.clone()).or_default() += 1;
                *total_count.entry(term.clone()).or_default() += c;
            }
            docs.push(tf);
        }
        if doc_freq.is_empty() {
            return Err(ClgError::Featurization("no tokens in any document".into()));
        }
        let avg_len = doc_len.iter().sum::<usize>() as f64 / texts.len() as f64;
        Ok(Bm25Index {
            params,
            docs,
            doc_len,
            avg_len,
            doc_freq,
            total_count,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// `max(0, ln((N − df + 0.5) / (df + 0.5)))`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        ((n - df + 0.5) / (df + 0.5)).ln().max(0.0)
    }

    /// Contribution of one query-term occurrence to document `doc`.
    pub fn term_weight(&self, term: &str, doc: usize) -> f64 {
        let tf = self.docs[doc].get(term).copied().unwrap_or(0) as f64;
        if tf == 0.0 {
            return 0.0;
        }
        let Bm25Params { k1, b } = self.params;
        let norm = if self.avg_len > 0.0 {
            1.0 - b + b * self.doc_len[doc] as f64 / self.avg_len
        } else {
            1.0
        };
        self.idf(term) * tf * (k1 + 1.0) / (tf + k1 * norm)
    }

    /// BM25 of `doc` for a tokenized query; repeated query tokens count
    /// once per occurrence.
    pub fn score<S: AsRef<str>>(&self, query: &[S], doc: usize) -> f64 {
        query.iter().map(|t| self.term_weight(t.as_ref(), doc)).sum()
    }

    /// Mean score of each document when every other document is used as
    /// the query (self-retrieval excluded).
    pub fn major_scores(&self) -> Vec<f64> {
        let n = self.docs.len();
        if n < 2 {
            return vec![0.0; n];
        }
        // Σ_{q≠d} score(q, d) = Σ_t w(t, d) · (occurrences of t in all queries but d)
        (0..n)
            .map(|d| {
                let mut terms: Vec<(&String, &usize)> = self.docs[d].iter().collect();
                terms.sort_unstable();
                let total: f64 = terms
                    .into_iter()
                    .map(|(t, &tf)| {
                        let others = self.total_count[t] - tf;
                        self.term_weight(t, d) * others as f64
                    })
                    .sum();
                total / (n - 1) as f64
            })
            .collect()
    }
}

/// Indices of the `n` largest scores, lowest index first among equals.
pub(crate) fn top_n(scores: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(n);
    order
}

/// Top-`n` documents by mean BM25 score as retrieved by the other examples.
pub fn bm25_major_select<S: AsRef<str>>(
    texts: &[S],
    n: usize,
    params: Bm25Params,
) -> Result<SelectionResult> {
    if n == 0 || n > texts.len() {
        return Err(ClgError::Infeasible {
            n,
            available: texts.len(),
        });
    }
    let index = Bm25Index::new(texts, params)?;
    let scores = index.major_scores();
    Ok(SelectionResult::unscored("bm25-major", top_n(&scores, n), None))
}
