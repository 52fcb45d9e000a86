//! Streaming CSV ingestion with column-major buffering.

use std::fs::File;
use std::path::Path;

use cosci_core::DatasetMatrix;

use crate::error::{CliError, Result};

/// Reads a rectangular numeric CSV into a column-major matrix.
///
/// Rows are observations and columns are features; `transpose` flips that.
/// Feature names come from the header row when present (and not transposed),
/// otherwise they are generated as `f1..fp`. Non-finite and non-numeric
/// cells are rejected with their location.
pub fn ingest_matrix(path: &Path, has_header: bool, transpose: bool) -> Result<DatasetMatrix> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut header_names: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut width = 0usize;
    let mut data_rows = 0usize;

    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = reader
            .read_record(&mut record)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if first {
            first = false;
            if has_header {
                header_names = Some(record.iter().map(str::to_owned).collect());
                continue;
            }
        }
        if data_rows == 0 && columns.is_empty() {
            width = record.len();
            if !transpose {
                columns = vec![Vec::new(); width];
            }
        } else if record.len() != width {
            return Err(CliError::input(format!(
                "{}: line {line} has {} fields, expected {width}",
                path.display(),
                record.len()
            )));
        }
        let mut row = if transpose {
            Vec::with_capacity(width)
        } else {
            Vec::new()
        };
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                CliError::input(format!(
                    "{}: line {line}, column {}: '{field}' is not a number",
                    path.display(),
                    col + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::input(format!(
                    "{}: line {line}, column {}: non-finite value '{field}'",
                    path.display(),
                    col + 1
                )));
            }
            if transpose {
                row.push(value);
            } else {
                columns[col].push(value);
            }
        }
        if transpose {
            columns.push(row);
        }
        data_rows += 1;
    }

    if data_rows == 0 || width == 0 {
        return Err(CliError::input(format!(
            "{}: no data rows",
            path.display()
        )));
    }

    let mut matrix = DatasetMatrix::from_columns(columns, 0);
    if !transpose {
        if let Some(names) = header_names {
            matrix.names = names;
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use std::path::PathBuf;

    struct TempCsv(PathBuf);
    impl TempCsv {
        fn path(&self) -> &Path {
            &self.0
        }
    }
    impl Drop for TempCsv {
        fn drop(&mut self) {
            let _ = std::fs::remove_file(&self.0);
        }
    }

    fn write_temp(contents: &str) -> TempCsv {
        static COUNTER: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
        let unique = COUNTER.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let path = std::env::temp_dir().join(format!(
            "cosci-ingest-{}-{unique}.csv",
            std::process::id()
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        TempCsv(path)
    }

    #[test]
    fn header_and_shape() {
        let t = write_temp("a,b\n1,2\n3,4\n5,6\n");
        let m = ingest_matrix(t.path(), true, false).unwrap();
        assert_eq!((m.n, m.p()), (3, 2));
        assert_eq!(m.names, vec!["a", "b"]);
        assert_eq!(m.columns[0], vec![1.0, 3.0, 5.0]);

        let m = ingest_matrix(t.path(), true, true).unwrap();
        assert_eq!((m.n, m.p()), (2, 3));
        assert_eq!(m.names, vec!["f1", "f2", "f3"]);
        assert_eq!(m.columns[0], vec![1.0, 2.0]);
    }

    #[test]
    fn bad_cells_are_located() {
        let t = write_temp("1,2\n3,NaN\n");
        let err = ingest_matrix(t.path(), false, false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("column 2"), "{msg}");

        let t = write_temp("1,2\n3,oops\n");
        let err = ingest_matrix(t.path(), false, false).unwrap_err();
        assert!(err.to_string().contains("not a number"));

        let t = write_temp("1,2\n3\n");
        let err = ingest_matrix(t.path(), false, false).unwrap_err();
        assert!(err.to_string().contains("expected 2"));

        let t = write_temp("");
        assert!(ingest_matrix(t.path(), false, false).is_err());
    }

    #[test]
    fn exit_code_mapping() {
        let e = CliError::input("x");
        assert_eq!(e.exit_code(), 2);
        let e = CliError::Core(cosci_core::CoreError::fit("s", "m"));
        assert_eq!(e.exit_code(), 3);
        let e = CliError::Core(cosci_core::CoreError::CalibrationFailed {
            tolerance: 0.0,
            table: vec![],
        });
        assert_eq!(e.exit_code(), 4);
    }
}
