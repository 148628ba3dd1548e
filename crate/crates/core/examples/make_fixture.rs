//! Regenerates the bundled fixture in `fixtures/`.
//!
//! The pool and holdout are balanced 4-class synthetic tasks whose features
//! line up with the model the CLI builds under its defaults (seed 0,
//! concept 4×16). Each example also carries text, so the BM25 baseline runs
//! on the same files.
//!
//! ```text
//! cargo run --example make_fixture
//! ```

use std::path::Path;

use clg::io::config::{DEFAULT_CONCEPT_COLS, DEFAULT_CONCEPT_ROWS};
use clg::io::write_pool;
use clg::synth::{balanced_task, generate};
use clg::ProxyModel;

const FEATURE_DIM: usize = 16;
const CLASSES: usize = 4;

fn main() -> clg::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).expect("create fixtures dir");

    let model = ProxyModel::new(
        FEATURE_DIM,
        CLASSES,
        DEFAULT_CONCEPT_ROWS,
        DEFAULT_CONCEPT_COLS,
        0,
    )?;
    let task = balanced_task().with_text();
    let pool = generate(&model, &task, 240, "p", 11)?;
    let holdout = generate(&model, &task, 80, "h", 12)?;

    write_pool(dir.join("pool.jsonl"), &pool)?;
    write_pool(dir.join("holdout.jsonl"), &holdout)?;
    println!(
        "wrote {} pool and {} holdout examples to {}",
        pool.len(),
        holdout.len(),
        dir.display()
    );
    Ok(())
}
