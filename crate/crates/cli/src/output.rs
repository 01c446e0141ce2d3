use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// CSV number: scientific below 1e−3 in magnitude, shortest round-trip
/// decimal otherwise.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.abs() < 1e-3 && x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Rows of already formatted cells under a header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_csv)?;
        for r in &self.rows {
            w.write_record(r).map_err(io_csv)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    /// Github-style markdown table.
    pub fn to_markdown(&self) -> String {
        let mut s = format!("| {} |\n|{}\n", self.header.join(" | "), "---|".repeat(self.header.len()));
        for r in &self.rows {
            s.push_str(&format!("| {} |\n", r.join(" | ")));
        }
        s
    }
}

fn io_csv(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

pub fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    write_atomic(path, &table.to_csv()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(2.63e-8), "2.63e-8");
        assert_eq!(num(-5e-4), "-5e-4");
        assert_eq!(num(0.5768), "0.5768");
        assert_eq!(num(1e-3), "0.001");
        assert_eq!(num(12.0), "12");
    }

    #[test]
    fn markdown_shape() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.to_markdown(), "| a | b |\n|---|---|\n| 1 | 2 |\n");
        assert_eq!(t.to_csv().unwrap(), b"a,b\n1,2\n");
    }
}
