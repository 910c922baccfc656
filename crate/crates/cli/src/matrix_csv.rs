//! Plain-text matrix files: one row per line, comma-separated, no header.
//! Values are written in scientific notation with 17 significant digits so
//! they read back bit-for-bit.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 24);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format_value(m[(r, c)]));
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str, origin: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(origin, idx + 1, format!("bad number '{}': {e}", field.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    origin,
                    idx + 1,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(origin, 0, "no matrix rows"));
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nr, nc, |r, c| rows[r][c]))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, &path.display().to_string())
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, format_matrix(m)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ragged_rows_are_rejected() {
        let err = parse_matrix("1,2\n3\n", "inline").unwrap_err();
        assert!(err.to_string().contains("inline:2"));
    }

    #[test]
    fn values_keep_twelve_digits() {
        let s = format_value(1.0 / 3.0);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 12);
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            let m = incoherent_core::rng::gaussian_matrix(rows, cols, &mut incoherent_core::rng::rng_from_seed(seed)) * 1e3;
            let back = parse_matrix(&format_matrix(&m), "t").unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
