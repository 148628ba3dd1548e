//! Writes a matrix in the shared binary format, shows the header bytes and
//! reads it back.

use clg::io::matrix_file::{decode_matrix, encode_matrix, HEADER_LEN};
use clg::Matrix;

fn main() -> clg::Result<()> {
    let m = Matrix::from_rows(&[vec![1.0, -2.5, 3.25], vec![0.0, f64::MIN_POSITIVE, 1e300]])?;
    let bytes = encode_matrix(&m);
    println!("{} bytes ({} header + {} payload)", bytes.len(), HEADER_LEN, bytes.len() - HEADER_LEN);
    for (i, chunk) in bytes[..HEADER_LEN].chunks(8).enumerate() {
        let hex: Vec<String> = chunk.iter().map(|b| format!("{b:02x}")).collect();
        println!("{:>3}: {}", i * 8, hex.join(" "));
    }
    let back = decode_matrix(&bytes)?;
    assert_eq!(back, m);
    println!("round trip ok: {} x {}", back.rows(), back.cols());

    let mut broken = bytes.clone();
    broken[0] = b'X';
    match decode_matrix(&broken) {
        Err(e) => println!("corrupt magic: {e}"),
        Ok(_) => unreachable!(),
    }
    match decode_matrix(&bytes[..bytes.len() - 3]) {
        Err(e) => println!("truncated: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
