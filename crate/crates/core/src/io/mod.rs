//! File formats, featurization and run configuration.

pub mod config;
pub mod featurize;
pub mod matrix_file;
pub mod pool;

pub use config::{FileConfig, RunConfig};
pub use featurize::{featurize, fnv1a64, tokenize};
pub use matrix_file::{decode_matrix, encode_matrix, read_matrix, write_matrix};
pub use pool::{load_pool, write_pool, DemoPool, Example, PoolSchema};
