//! CSV output: fixed numeric format, LF line endings, atomic replacement of
//! the destination file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::CliError;

/// Scientific notation with 12 significant digits, the precision promised in
/// the column contract.
pub fn fmt_value(x: f64) -> String {
    format!("{x:.11e}")
}

/// In-memory CSV document. Rows are buffered so that nothing touches the
/// destination path until the computation has fully succeeded.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut text = String::with_capacity(256);
        text.push_str(header);
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, values: &[f64]) {
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{v:.11e}");
        }
        self.text.push('\n');
    }

    /// Writes through a temporary file in the destination directory and
    /// renames it into place. A failure at any point leaves no partial file
    /// behind.
    pub fn write_atomic(&self, path: &Path) -> Result<(), CliError> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::Builder::new()
            .prefix(".qbat-")
            .suffix(".tmp")
            .tempfile_in(dir)
            .map_err(|e| io_error(path, e))?;
        tmp.write_all(self.text.as_bytes())
            .map_err(|e| io_error(path, e))?;
        tmp.flush().map_err(|e| io_error(path, e))?;
        tmp.persist(path).map_err(|e| io_error(path, e.error))?;
        Ok(())
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_carry_twelve_significant_digits() {
        assert_eq!(fmt_value(50.0), "5.00000000000e1");
        assert_eq!(fmt_value(0.0), "0.00000000000e0");
        assert_eq!(fmt_value(-1.9435021), "-1.94350210000e0");
        let x = std::f64::consts::PI;
        let back: f64 = fmt_value(x).parse().unwrap();
        assert!((back - x).abs() < 1e-11);
    }

    #[test]
    fn rows_are_comma_separated_and_lf_terminated() {
        let mut csv = Csv::new("a,b");
        csv.row(&[1.0, 2.0]);
        assert_eq!(csv.text, "a,b\n1.00000000000e0,2.00000000000e0\n");
    }

    #[test]
    fn header_only_document_is_written_successfully() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        Csv::new("a,b").write_atomic(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
    }

    #[test]
    fn failed_write_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("out.csv");
        let mut csv = Csv::new("a");
        csv.row(&[1.0]);
        assert!(csv.write_atomic(&path).is_err());
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
