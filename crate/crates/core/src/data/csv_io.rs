//! CSV ingestion and emission.
//!
//! Format: UTF-8, comma-separated, header row `time,<label>,<label>,...`,
//! one row per time step, first cell the time label. Values are written with
//! Rust's shortest round-trip float formatting, so `read_csv . write_csv`
//! reproduces values exactly.

use std::path::Path;

use crate::data::SeriesTable;
use crate::error::{CsError, Result};

fn io_err(path: &Path, source: std::io::Error) -> CsError {
    CsError::IoFailure {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a wide series table.
pub fn read_csv(path: &Path) -> Result<SeriesTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(path, io),
            other => CsError::MalformedCsv(format!("{other:?}")),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| CsError::MalformedCsv(e.to_string()))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("time") {
        return Err(CsError::MalformedCsv(
            "header row must start with \"time\"".into(),
        ));
    }
    if headers.len() < 2 {
        return Err(CsError::MalformedCsv("no series columns".into()));
    }
    let column_labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CsError::MalformedCsv(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(CsError::MalformedCsv(format!(
                "row {} has {} cells, header has {}",
                row_idx + 1,
                record.len(),
                headers.len()
            )));
        }
        timestamps.push(record[0].to_string());
        for (col, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| CsError::NonNumericCell {
                row: row_idx + 1,
                column: column_labels[col].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(CsError::NonNumericCell {
                    row: row_idx + 1,
                    column: column_labels[col].clone(),
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
    }
    if timestamps.is_empty() {
        return Err(CsError::MalformedCsv("no data rows".into()));
    }
    SeriesTable::new(timestamps, column_labels, values)
}

/// Writes a table in the format [`read_csv`] accepts.
pub fn write_csv(table: &SeriesTable, path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(path, io),
            other => CsError::MalformedCsv(format!("{other:?}")),
        })?;
    let mut header = Vec::with_capacity(table.cols() + 1);
    header.push("time".to_string());
    header.extend(table.column_labels().iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| CsError::MalformedCsv(e.to_string()))?;
    let mut row = Vec::with_capacity(table.cols() + 1);
    for (t, stamp) in table.timestamps().iter().enumerate() {
        row.clear();
        row.push(stamp.clone());
        for c in 0..table.cols() {
            row.push(format!("{}", table.get(t, c)));
        }
        writer
            .write_record(&row)
            .map_err(|e| CsError::MalformedCsv(e.to_string()))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_well_formed_file() {
        let f = write_tmp("time,a,b\nt1,1.5,2\nt2,3,4.25\nt3,-1,0\n");
        let table = read_csv(f.path()).unwrap();
        assert_eq!(table.rows(), 3);
        assert_eq!(table.cols(), 2);
        assert_eq!(table.get(0, 0), 1.5);
        assert_eq!(table.get(2, 1), 0.0);
        assert_eq!(table.column_labels(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let f = write_tmp("time,a,b\nt1,1,abc\n");
        match read_csv(f.path()).unwrap_err() {
            CsError::NonNumericCell { row, column, value } => {
                assert_eq!(row, 1);
                assert_eq!(column, "b");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_header_rejected() {
        let f = write_tmp("stamp,a\nt1,1\n");
        assert!(matches!(
            read_csv(f.path()).unwrap_err(),
            CsError::MalformedCsv(_)
        ));
    }

    #[test]
    fn duplicate_column_rejected() {
        let f = write_tmp("time,a,a\nt1,1,2\n");
        assert!(matches!(
            read_csv(f.path()).unwrap_err(),
            CsError::DuplicateColumnLabel(_)
        ));
    }

    #[test]
    fn non_monotone_time_rejected() {
        let f = write_tmp("time,a\nt2,1\nt1,2\n");
        assert!(matches!(
            read_csv(f.path()).unwrap_err(),
            CsError::NonMonotoneTime { .. }
        ));
    }

    #[test]
    fn ragged_row_rejected() {
        let f = write_tmp("time,a,b\nt1,1\n");
        assert!(matches!(
            read_csv(f.path()).unwrap_err(),
            CsError::MalformedCsv(_)
        ));
    }

    #[test]
    fn write_read_round_trip_is_exact() {
        let table = SeriesTable::new(
            vec!["t1".into(), "t2".into()],
            vec!["a".into(), "b".into()],
            vec![0.1, 1.0 / 3.0, -2.5e-17, 123456.789],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&table, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(table, back);
    }
}
