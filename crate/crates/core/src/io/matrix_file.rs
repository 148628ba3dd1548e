//! Binary matrix container shared by gradient and embedding files.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `b"CLGM"`                |
//! | 4      | 4    | version (`u32`, currently 1)   |
//! | 8      | 8    | rows (`u64`)                   |
//! | 16     | 8    | cols (`u64`)                   |
//! | 24     | 1    | dtype (`1` = `f64`)            |
//! | 25     | 8·rows·cols | row-major `f64` payload |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{ClgError, Result};
use crate::linalg::Matrix;

pub const MAGIC: [u8; 4] = *b"CLGM";
pub const VERSION: u32 = 1;
pub const DTYPE_F64: u8 = 1;
pub const HEADER_LEN: usize = 25;

pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.as_slice().len() * 8);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    out.push(DTYPE_F64);
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Header {
    rows: usize,
    cols: usize,
    payload_len: usize,
}

fn parse_header(bytes: &[u8], available_payload: u64) -> Result<Header> {
    if bytes.len() < HEADER_LEN {
        return Err(ClgError::Format(format!(
            "truncated header: {} of {HEADER_LEN} bytes",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(ClgError::Format(format!(
            "bad magic {:?}, expected {:?}",
            &bytes[0..4],
            MAGIC
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(ClgError::Format(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let dtype = bytes[24];
    if dtype != DTYPE_F64 {
        return Err(ClgError::Format(format!("unsupported dtype flag {dtype}")));
    }
    let payload = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| ClgError::Format(format!("{rows} x {cols} overflows")))?;
    if payload != available_payload {
        return Err(ClgError::Format(format!(
            "header declares {rows} x {cols} ({payload} payload bytes) but {available_payload} are present"
        )));
    }
    let to_usize = |v: u64| {
        usize::try_from(v).map_err(|_| ClgError::Format(format!("{v} exceeds address space")))
    };
    Ok(Header {
        rows: to_usize(rows)?,
        cols: to_usize(cols)?,
        payload_len: to_usize(payload)?,
    })
}

fn decode_payload(h: &Header, payload: &[u8]) -> Result<Matrix> {
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(h.rows, h.cols, data)
}

/// Decodes an in-memory matrix file. Sizes are validated before any payload
/// buffer is allocated.
pub fn decode_matrix(bytes: &[u8]) -> Result<Matrix> {
    let available = bytes.len().saturating_sub(HEADER_LEN) as u64;
    let h = parse_header(bytes, available)?;
    decode_payload(&h, &bytes[HEADER_LEN..HEADER_LEN + h.payload_len])
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| ClgError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_matrix(m))
        .and_then(|_| w.flush())
        .map_err(|e| ClgError::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| ClgError::io(path, e))?;
    let file_len = file.metadata().map_err(|e| ClgError::io(path, e))?.len();
    let mut r = BufReader::new(file);
    let mut header = [0u8; HEADER_LEN];
    let got = read_up_to(&mut r, &mut header).map_err(|e| ClgError::io(path, e))?;
    let available = file_len.saturating_sub(HEADER_LEN as u64);
    let h = parse_header(&header[..got], available)?;
    let mut payload = vec![0u8; h.payload_len];
    r.read_exact(&mut payload).map_err(|e| ClgError::io(path, e))?;
    decode_payload(&h, &payload)
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix {
        let data: Vec<f64> = (0..35).map(|i| (i as f64).sin() * 1e3 - 0.1).collect();
        Matrix::from_vec(7, 5, data).unwrap()
    }

    #[test]
    fn roundtrip_in_memory_bit_exact() {
        let m = sample();
        let back = decode_matrix(&encode_matrix(&m)).unwrap();
        assert_eq!(back.rows(), 7);
        assert_eq!(back.cols(), 5);
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.clgm");
        let m = sample();
        write_matrix(&p, &m).unwrap();
        assert_eq!(read_matrix(&p).unwrap(), m);
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 25 + 35 * 8);
    }

    #[test]
    fn header_layout() {
        let bytes = encode_matrix(&Matrix::zeros(2, 3));
        assert_eq!(&bytes[0..4], b"CLGM");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..16], &[2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[16..24], &[3, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bytes[24], 1);
    }

    #[test]
    fn corrupt_magic_rejected() {
        let mut bytes = encode_matrix(&sample());
        bytes[0] = b'X';
        assert!(matches!(decode_matrix(&bytes), Err(ClgError::Format(_))));
    }

    #[test]
    fn wrong_version_and_dtype_rejected() {
        let mut bytes = encode_matrix(&sample());
        bytes[4] = 2;
        assert!(matches!(decode_matrix(&bytes), Err(ClgError::Format(_))));
        let mut bytes = encode_matrix(&sample());
        bytes[24] = 4;
        assert!(matches!(decode_matrix(&bytes), Err(ClgError::Format(_))));
    }

    #[test]
    fn truncated_rejected() {
        let bytes = encode_matrix(&sample());
        assert!(decode_matrix(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_matrix(&bytes[..10]).is_err());
    }

    #[test]
    fn huge_row_count_rejected_before_allocation() {
        let mut bytes = encode_matrix(&Matrix::zeros(1, 1));
        bytes[8..16].copy_from_slice(&1_000_000_000_000u64.to_le_bytes());
        bytes.resize(1024, 0);
        assert!(matches!(decode_matrix(&bytes), Err(ClgError::Format(_))));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("huge.clgm");
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_matrix(&p), Err(ClgError::Format(_))));
    }

    #[test]
    fn overflowing_dimensions_rejected() {
        let mut bytes = encode_matrix(&Matrix::zeros(1, 1));
        bytes[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        bytes[16..24].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(decode_matrix(&bytes), Err(ClgError::Format(_))));
    }
}
