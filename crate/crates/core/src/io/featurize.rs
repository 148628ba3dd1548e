//! Hashed bag-of-words featurizer.

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Lowercases and splits on ASCII whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_ascii_whitespace()
        .map(str::to_owned)
        .collect()
}

/// Token counts hashed into `dim` buckets, then L2-normalized.
/// Text without tokens maps to the zero vector.
///
/// # Panics
///
/// Panics if `dim == 0`.
pub fn featurize(text: &str, dim: usize) -> Vec<f64> {
    assert!(dim >= 1, "feature dimension must be at least 1");
    let mut v = vec![0.0; dim];
    for tok in tokenize(text) {
        let bucket = (fnv1a64(tok.as_bytes()) % dim as u64) as usize;
        v[bucket] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}
