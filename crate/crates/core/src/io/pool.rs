//! Training pools and their line-delimited JSON representation.
//!
//! Each non-blank line is one object:
//!
//! ```json
//! {"id": "ex-0", "label": 2, "text": "a short sentence"}
//! {"id": "ex-1", "label": 0, "features": [0.1, -0.3, 0.7]}
//! ```
//!
//! When `features` is present it is used as the model input; otherwise the
//! text is hashed into `text_dim` buckets.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ClgError, Result};
use crate::io::featurize::featurize;
use crate::linalg::Matrix;

pub const DEFAULT_TEXT_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
}

/// How raw examples become model inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolSchema {
    /// Number of classes; inferred as `max label + 1` when absent.
    pub classes: Option<usize>,
    /// Featurizer width for examples that only carry text.
    pub text_dim: usize,
}

impl Default for PoolSchema {
    fn default() -> Self {
        PoolSchema {
            classes: None,
            text_dim: DEFAULT_TEXT_DIM,
        }
    }
}

/// An ordered, validated training pool with resolved feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoPool {
    examples: Vec<Example>,
    classes: usize,
    features: Matrix,
}

impl DemoPool {
    pub fn new(examples: Vec<Example>, schema: PoolSchema) -> Result<Self> {
        Self::build(examples, schema, |i, message| ClgError::Parse {
            line: i + 1,
            message,
        })
    }

    fn build(
        examples: Vec<Example>,
        schema: PoolSchema,
        err_at: impl Fn(usize, String) -> ClgError,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(ClgError::EmptyPool);
        }
        if schema.text_dim == 0 {
            return Err(ClgError::Config("text_dim must be at least 1".into()));
        }
        let classes = match schema.classes {
            Some(0) => return Err(ClgError::Config("class count must be at least 1".into())),
            Some(c) => c,
            None => examples.iter().map(|e| e.label).max().unwrap_or(0) + 1,
        };
        let dim = examples
            .iter()
            .find_map(|e| e.features.as_ref().map(Vec::len))
            .unwrap_or(schema.text_dim);
        if dim == 0 {
            return Err(err_at(0, "feature vectors must be non-empty".into()));
        }

        let mut seen = HashSet::with_capacity(examples.len());
        let mut data = Vec::with_capacity(examples.len() * dim);
        for (i, e) in examples.iter().enumerate() {
            if !seen.insert(e.id.as_str()) {
                return Err(err_at(i, format!("duplicate id {:?}", e.id)));
            }
            if e.label >= classes {
                return Err(err_at(
                    i,
                    format!("label {} out of range for {classes} classes", e.label),
                ));
            }
            match (&e.features, &e.text) {
                (Some(f), _) => {
                    if f.len() != dim {
                        return Err(err_at(
                            i,
                            format!("feature vector has length {}, expected {dim}", f.len()),
                        ));
                    }
                    if f.iter().any(|v| !v.is_finite()) {
                        return Err(err_at(i, "non-finite feature value".into()));
                    }
                    data.extend_from_slice(f);
                }
                (None, Some(t)) => {
                    if dim != schema.text_dim {
                        return Err(err_at(
                            i,
                            format!(
                                "text-only example cannot be featurized to the pool's feature width {dim}"
                            ),
                        ));
                    }
                    data.extend(featurize(t, dim));
                }
                (None, None) => {
                    return Err(err_at(i, "example has neither text nor features".into()));
                }
            }
        }
        let features = Matrix::from_vec(examples.len(), dim, data)?;
        Ok(DemoPool {
            examples,
            classes,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn x(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> usize {
        self.examples[i].label
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label).collect()
    }

    /// Raw text per example; examples without text yield `""`.
    pub fn texts(&self) -> Vec<&str> {
        self.examples
            .iter()
            .map(|e| e.text.as_deref().unwrap_or(""))
            .collect()
    }

    /// A new pool holding the listed examples in the listed order, keeping
    /// this pool's class count and resolved features.
    pub fn subset(&self, indices: &[usize]) -> Result<DemoPool> {
        if indices.is_empty() {
            return Err(ClgError::EmptySelection);
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(ClgError::Index(format!(
                    "index {i} out of range for pool of {}",
                    self.len()
                )));
            }
            if !seen.insert(i) {
                return Err(ClgError::Index(format!("duplicate index {i}")));
            }
        }
        Ok(DemoPool {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            classes: self.classes,
            features: self.features.select_rows(indices),
        })
    }
}

#[derive(Deserialize)]
struct RawExample {
    id: Option<serde_json::Value>,
    label: Option<serde_json::Value>,
    text: Option<String>,
    features: Option<Vec<f64>>,
}

fn parse_line(line: &str) -> std::result::Result<Example, String> {
    let raw: RawExample = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = match raw.id {
        Some(serde_json::Value::String(s)) => s,
        Some(serde_json::Value::Number(n)) => n.to_string(),
        Some(other) => return Err(format!("id must be a string, got {other}")),
        None => return Err("missing field `id`".into()),
    };
    let label = match raw.label {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| format!("label must be a non-negative integer, got {v}"))?,
        None => return Err("missing field `label`".into()),
    };
    if raw.text.is_none() && raw.features.is_none() {
        return Err("missing field `text` or `features`".into());
    }
    Ok(Example {
        id,
        label: label as usize,
        text: raw.text,
        features: raw.features,
    })
}

/// Reads a line-delimited JSON pool, preserving file order.
pub fn load_pool(path: impl AsRef<Path>, schema: PoolSchema) -> Result<DemoPool> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| ClgError::io(path, e))?;
    let mut examples = Vec::new();
    let mut line_numbers = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ClgError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex = parse_line(&line).map_err(|message| ClgError::Parse {
            line: i + 1,
            message,
        })?;
        examples.push(ex);
        line_numbers.push(i + 1);
    }
    DemoPool::build(examples, schema, |idx, message| ClgError::Parse {
        line: line_numbers.get(idx).copied().unwrap_or(idx + 1),
        message,
    })
}

pub fn write_pool(path: impl AsRef<Path>, examples: &[Example]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| ClgError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in examples {
        let line = serde_json::to_string(e).expect("examples always serialize");
        writeln!(w, "{line}").map_err(|e| ClgError::io(path, e))?;
    }
    w.flush().map_err(|e| ClgError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(contents: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pool.jsonl");
        std::fs::write(&p, contents).unwrap();
        (dir, p)
    }

    #[test]
    fn empty_file_is_empty_pool() {
        let (_d, p) = write("");
        assert!(matches!(
            load_pool(&p, PoolSchema::default()),
            Err(ClgError::EmptyPool)
        ));
    }

    #[test]
    fn three_lines_in_order() {
        let (_d, p) = write(
            "{\"id\":\"a\",\"label\":1,\"text\":\"x y\"}\n\
             {\"id\":\"b\",\"label\":0,\"text\":\"z\"}\n\
             {\"id\":\"c\",\"label\":2,\"text\":\"\"}\n",
        );
        let pool = load_pool(&p, PoolSchema::default()).unwrap();
        assert_eq!(pool.len(), 3);
        let ids: Vec<&str> = pool.examples().iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(pool.classes(), 3);
        assert_eq!(pool.feature_dim(), DEFAULT_TEXT_DIM);
        assert_eq!(pool.x(1), featurize("z", DEFAULT_TEXT_DIM).as_slice());
    }

    #[test]
    fn label_equal_to_class_count_names_line() {
        let (_d, p) = write(
            "{\"id\":\"a\",\"label\":1,\"text\":\"x\"}\n\
             {\"id\":\"b\",\"label\":3,\"text\":\"y\"}\n",
        );
        let schema = PoolSchema {
            classes: Some(3),
            ..PoolSchema::default()
        };
        match load_pool(&p, schema) {
            Err(ClgError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("label 3"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_and_missing_fields() {
        let (_d, p) = write(
            "{\"id\":\"a\",\"label\":0,\"text\":\"x\"}\n\n{\"id\":\"a\",\"label\":0,\"text\":\"y\"}\n",
        );
        assert!(matches!(
            load_pool(&p, PoolSchema::default()),
            Err(ClgError::Parse { line: 3, .. })
        ));
        let (_d, p) = write("{\"id\":\"a\",\"text\":\"x\"}\n");
        assert!(matches!(
            load_pool(&p, PoolSchema::default()),
            Err(ClgError::Parse { line: 1, .. })
        ));
        let (_d, p) = write("{\"id\":\"a\",\"label\":0}\n");
        assert!(matches!(
            load_pool(&p, PoolSchema::default()),
            Err(ClgError::Parse { line: 1, .. })
        ));
        let (_d, p) = write("{\"id\":\"a\",\"label\":-1,\"text\":\"q\"}\n");
        assert!(load_pool(&p, PoolSchema::default()).is_err());
    }

    #[test]
    fn explicit_features_win_and_must_agree() {
        let (_d, p) = write(
            "{\"id\":\"a\",\"label\":0,\"features\":[1.0,2.0],\"text\":\"ignored\"}\n\
             {\"id\":\"b\",\"label\":1,\"features\":[3.0]}\n",
        );
        assert!(matches!(
            load_pool(&p, PoolSchema::default()),
            Err(ClgError::Parse { line: 2, .. })
        ));
        let (_d, p) = write("{\"id\":\"a\",\"label\":0,\"features\":[1.0,2.0],\"text\":\"t\"}\n");
        let pool = load_pool(&p, PoolSchema::default()).unwrap();
        assert_eq!(pool.x(0), &[1.0, 2.0]);
        assert_eq!(pool.texts(), vec!["t"]);
    }

    #[test]
    fn write_then_load_roundtrip() {
        let ex = vec![
            Example {
                id: "p".into(),
                label: 1,
                text: Some("hello world".into()),
                features: Some(vec![0.25, -1.5]),
            },
            Example {
                id: "q".into(),
                label: 0,
                text: None,
                features: Some(vec![1e-300, 7.0]),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.jsonl");
        write_pool(&p, &ex).unwrap();
        let pool = load_pool(&p, PoolSchema::default()).unwrap();
        assert_eq!(pool.examples(), ex.as_slice());
    }

    #[test]
    fn subset_keeps_order_and_classes() {
        let ex: Vec<Example> = (0..5)
            .map(|i| Example {
                id: format!("e{i}"),
                label: i % 3,
                text: None,
                features: Some(vec![i as f64]),
            })
            .collect();
        let pool = DemoPool::new(ex, PoolSchema::default()).unwrap();
        let sub = pool.subset(&[4, 0]).unwrap();
        assert_eq!(sub.classes(), 3);
        assert_eq!(sub.x(0), &[4.0]);
        assert_eq!(sub.label(1), 0);
        assert!(pool.subset(&[]).is_err());
        assert!(pool.subset(&[1, 1]).is_err());
        assert!(pool.subset(&[9]).is_err());
    }
}
