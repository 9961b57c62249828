//! Dataset ingestion: wide tables, label schemas, CSV, synthetic generation.

mod csv_io;
mod schema;
mod synth;

pub use csv_io::{read_csv, write_csv};
pub use schema::{numbered_levels, Dimension, InternalAxis, StructuralSchema};
pub use synth::{generate_synthetic, synth_schema, SynthConfig};

use crate::error::{CsError, Result};

/// A wide 2-D table: rows are time steps, columns are labeled series.
///
/// Time labels are opaque strings ordered lexicographically; values are
/// row-major (`values[row * cols + col]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    timestamps: Vec<String>,
    column_labels: Vec<String>,
    values: Vec<f64>,
}

impl SeriesTable {
    pub fn new(
        timestamps: Vec<String>,
        column_labels: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != timestamps.len() * column_labels.len() {
            return Err(CsError::ShapeMismatch(format!(
                "table values length {} != {} rows x {} cols",
                values.len(),
                timestamps.len(),
                column_labels.len()
            )));
        }
        for (i, pair) in timestamps.windows(2).enumerate() {
            if pair[0] >= pair[1] {
                return Err(CsError::NonMonotoneTime {
                    row: i + 1,
                    prev: pair[0].clone(),
                    next: pair[1].clone(),
                });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for label in &column_labels {
            if !seen.insert(label.as_str()) {
                return Err(CsError::DuplicateColumnLabel(label.clone()));
            }
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CsError::NonFiniteValue("table"));
        }
        Ok(SeriesTable {
            timestamps,
            column_labels,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn cols(&self) -> usize {
        self.column_labels.len()
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn column_labels(&self) -> &[String] {
        &self.column_labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows() && col < self.cols());
        self.values[row * self.cols() + col]
    }

    /// Column index for a label, if present.
    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.column_labels.iter().position(|l| l == label)
    }

    /// Hex fingerprint over shape, labels, and value bytes. Two tables with
    /// the same fingerprint are bit-identical.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update((self.rows() as u64).to_le_bytes());
        hasher.update((self.cols() as u64).to_le_bytes());
        for t in &self.timestamps {
            hasher.update(t.as_bytes());
            hasher.update([0u8]);
        }
        for l in &self.column_labels {
            hasher.update(l.as_bytes());
            hasher.update([0u8]);
        }
        for v in &self.values {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
