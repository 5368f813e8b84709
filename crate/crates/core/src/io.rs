//! Plain-text sample I/O.
//!
//! Samples travel as CSV with one strictly positive decimal per line, LF
//! line endings and no header; the same format serves simulated output and
//! user-supplied data.

use crate::error::{CoreError, Result};
use std::io::{BufRead, Write};
use std::path::Path;

/// Reads one positive real per line. Errors name the offending line and
/// count nonpositive values.
pub fn read_positive_csv(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)
        .map_err(|e| CoreError::input(format!("cannot open {}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut values = Vec::new();
    let mut nonpositive = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line
            .map_err(|e| CoreError::input(format!("read failure in {}: {e}", path.display())))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|_| {
            CoreError::input(format!(
                "{}: line {} is not a number: {trimmed:?}",
                path.display(),
                idx + 1
            ))
        })?;
        if !value.is_finite() || value <= 0.0 {
            nonpositive += 1;
        }
        values.push(value);
    }
    if nonpositive > 0 {
        return Err(CoreError::input(format!(
            "{}: {nonpositive} nonpositive or non-finite value(s) rejected",
            path.display()
        )));
    }
    if values.is_empty() {
        return Err(CoreError::input(format!("{}: empty sample", path.display())));
    }
    Ok(values)
}

/// Writes one value per line in decimal notation with LF endings.
pub fn write_value_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CoreError::input(format!("cannot create {}: {e}", path.display())))?;
    let mut buffer = String::with_capacity(values.len() * 20);
    for v in values {
        buffer.push_str(&format!("{v}\n"));
    }
    file.write_all(buffer.as_bytes())
        .map_err(|e| CoreError::input(format!("write failure in {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_file(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("pileup-core-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn reads_plain_values() {
        let path = temp_file("ok.csv", "1.5\n0.25\n3\n");
        assert_eq!(read_positive_csv(&path).unwrap(), vec![1.5, 0.25, 3.0]);
    }

    #[test]
    fn rejects_header_with_line_number() {
        let path = temp_file("header.csv", "x\n1.0\n");
        let err = read_positive_csv(&path).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn rejects_empty_and_nonpositive() {
        let path = temp_file("empty.csv", "");
        assert!(read_positive_csv(&path)
            .unwrap_err()
            .to_string()
            .contains("empty sample"));
        let path = temp_file("neg.csv", "1.0\n-2.0\n0\n");
        let err = read_positive_csv(&path).unwrap_err();
        assert!(err.to_string().contains("2 nonpositive"), "{err}");
    }

    #[test]
    fn round_trip_is_lossless() {
        let values = vec![0.1234567890123, 2.5e-3, 17.0, 1.0000000000001];
        let path = temp_file("rt.csv", "");
        write_value_csv(&path, &values).unwrap();
        assert_eq!(read_positive_csv(&path).unwrap(), values);
        let raw = std::fs::read(&path).unwrap();
        assert!(!raw.contains(&b'\r'));
    }
}
