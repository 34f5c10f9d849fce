//! CSV and JSON writers.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

/// Writes a header line followed by one line per row.
pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()
}

/// Hex SHA-256 of the canonical config text.
pub fn config_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv(&p, "a,b", vec!["1,2".to_string(), "0.1,3".to_string()]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n1,2\n0.1,3\n");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
