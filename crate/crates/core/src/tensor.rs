//! Dense value types: 2-D panels, the time x event x region cuboid, and
//! forecast blocks, plus the reshaping and slicing primitives the rest of
//! the crate builds on.
//!
//! All values are `f64`; storage is row-major in the documented index order
//! (`[t][e][r]` for cuboids). Everything here is immutable after
//! construction and safe to share across threads.

use crate::data::{SeriesTable, StructuralSchema};
use crate::error::{CsError, Result};

/// A 2-D cross-section: rows x cols, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Panel {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows < 1 || cols < 1 {
            return Err(CsError::ShapeMismatch(format!(
                "panel extents must be >= 1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(CsError::ShapeMismatch(format!(
                "panel values length {} != {rows}x{cols}",
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CsError::NonFiniteValue("panel"));
        }
        Ok(Panel { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Panel {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.values[row * self.cols + col] = v;
    }
}

/// A 3-D block: time x event x region, stored `values[(t * e_len + e) * r_len + r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCuboid {
    t_len: usize,
    e_len: usize,
    r_len: usize,
    values: Vec<f64>,
}

impl DataCuboid {
    pub fn new(t_len: usize, e_len: usize, r_len: usize, values: Vec<f64>) -> Result<Self> {
        if t_len < 1 || e_len < 1 || r_len < 1 {
            return Err(CsError::ShapeMismatch(format!(
                "cuboid extents must be >= 1, got {t_len}x{e_len}x{r_len}"
            )));
        }
        if values.len() != t_len * e_len * r_len {
            return Err(CsError::ShapeMismatch(format!(
                "cuboid values length {} != {t_len}x{e_len}x{r_len}",
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CsError::NonFiniteValue("cuboid"));
        }
        Ok(DataCuboid {
            t_len,
            e_len,
            r_len,
            values,
        })
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn e_len(&self) -> usize {
        self.e_len
    }

    pub fn r_len(&self) -> usize {
        self.r_len
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, t: usize, e: usize, r: usize) -> f64 {
        debug_assert!(t < self.t_len && e < self.e_len && r < self.r_len);
        self.values[(t * self.e_len + e) * self.r_len + r]
    }

    /// The per-series history `[.., e, r]` as a contiguous vector.
    pub fn series(&self, e: usize, r: usize) -> Vec<f64> {
        (0..self.t_len).map(|t| self.get(t, e, r)).collect()
    }
}

/// Names of the cuboid's axes, time first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisOrder {
    names: Vec<String>,
}

impl AxisOrder {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.first().map(String::as_str) != Some("time") {
            return Err(CsError::InvalidConfig(
                "axis order must start with \"time\"".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(CsError::InvalidConfig(format!(
                    "duplicate axis name {n:?}"
                )));
            }
        }
        Ok(AxisOrder { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Predictions for the `horizon` steps after an input window, event x region
/// per step. Same storage layout as [`DataCuboid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastBlock {
    horizon: usize,
    e_len: usize,
    r_len: usize,
    values: Vec<f64>,
}

impl ForecastBlock {
    pub fn new(horizon: usize, e_len: usize, r_len: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != horizon * e_len * r_len {
            return Err(CsError::ShapeMismatch(format!(
                "forecast values length {} != {horizon}x{e_len}x{r_len}",
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CsError::NonFiniteValue("forecast"));
        }
        Ok(ForecastBlock {
            horizon,
            e_len,
            r_len,
            values,
        })
    }

    pub fn zeros(horizon: usize, e_len: usize, r_len: usize) -> Self {
        ForecastBlock {
            horizon,
            e_len,
            r_len,
            values: vec![0.0; horizon * e_len * r_len],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn e_len(&self) -> usize {
        self.e_len
    }

    pub fn r_len(&self) -> usize {
        self.r_len
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, h: usize, e: usize, r: usize) -> f64 {
        debug_assert!(h < self.horizon && e < self.e_len && r < self.r_len);
        self.values[(h * self.e_len + e) * self.r_len + r]
    }

    #[inline]
    pub fn set(&mut self, h: usize, e: usize, r: usize, v: f64) {
        debug_assert!(h < self.horizon && e < self.e_len && r < self.r_len);
        self.values[(h * self.e_len + e) * self.r_len + r] = v;
    }

    /// The predicted series `[.., e, r]` across the horizon.
    pub fn series(&self, e: usize, r: usize) -> Vec<f64> {
        (0..self.horizon).map(|h| self.get(h, e, r)).collect()
    }

    pub fn same_shape(&self, other: &ForecastBlock) -> bool {
        self.horizon == other.horizon && self.e_len == other.e_len && self.r_len == other.r_len
    }
}

/// Reshapes a wide table into the key-dimension cuboid.
///
/// `result[t][e][r] = table[t, column(e, r)]`; fails if the schema's grid is
/// not covered exactly once by the table's columns.
pub fn cuboid_from_table(table: &SeriesTable, schema: &StructuralSchema) -> Result<DataCuboid> {
    let coords = schema.resolve_columns(table.column_labels())?;
    let t_len = table.rows();
    let e_len = schema.event_len();
    let r_len = schema.region_len();
    let mut values = vec![0.0; t_len * e_len * r_len];
    for t in 0..t_len {
        for (col, &(e, r)) in coords.iter().enumerate() {
            values[(t * e_len + e) * r_len + r] = table.get(t, col);
        }
    }
    DataCuboid::new(t_len, e_len, r_len, values)
}

/// Flattens a cuboid back into a wide table under the schema's labels.
///
/// Inverse of [`cuboid_from_table`] for tables whose columns came from the
/// same schema: values round-trip bit for bit, column order is event-major.
pub fn table_from_cuboid(
    cuboid: &DataCuboid,
    schema: &StructuralSchema,
    timestamps: &[String],
) -> Result<SeriesTable> {
    if timestamps.len() != cuboid.t_len() {
        return Err(CsError::ShapeMismatch(format!(
            "{} timestamps for {} time steps",
            timestamps.len(),
            cuboid.t_len()
        )));
    }
    if schema.event_len() != cuboid.e_len() || schema.region_len() != cuboid.r_len() {
        return Err(CsError::ShapeMismatch(format!(
            "schema grid {}x{} != cuboid {}x{}",
            schema.event_len(),
            schema.region_len(),
            cuboid.e_len(),
            cuboid.r_len()
        )));
    }
    let mut labels = Vec::with_capacity(cuboid.e_len() * cuboid.r_len());
    let mut values = Vec::with_capacity(cuboid.values().len());
    for e in 0..cuboid.e_len() {
        for r in 0..cuboid.r_len() {
            labels.push(schema.label_of(e, r)?);
        }
    }
    for t in 0..cuboid.t_len() {
        for e in 0..cuboid.e_len() {
            for r in 0..cuboid.r_len() {
                values.push(cuboid.get(t, e, r));
            }
        }
    }
    SeriesTable::new(timestamps.to_vec(), labels, values)
}

/// The time x event panel at one region index.
pub fn slice_spatial(cuboid: &DataCuboid, r: usize) -> Result<Panel> {
    if r >= cuboid.r_len() {
        return Err(CsError::IndexOutOfRange {
            what: "region",
            index: r,
            len: cuboid.r_len(),
        });
    }
    let mut values = Vec::with_capacity(cuboid.t_len() * cuboid.e_len());
    for t in 0..cuboid.t_len() {
        for e in 0..cuboid.e_len() {
            values.push(cuboid.get(t, e, r));
        }
    }
    Panel::new(cuboid.t_len(), cuboid.e_len(), values)
}

/// The time x region panel at one event index (the other decomposition).
pub fn slice_event(cuboid: &DataCuboid, e: usize) -> Result<Panel> {
    if e >= cuboid.e_len() {
        return Err(CsError::IndexOutOfRange {
            what: "event",
            index: e,
            len: cuboid.e_len(),
        });
    }
    let mut values = Vec::with_capacity(cuboid.t_len() * cuboid.r_len());
    for t in 0..cuboid.t_len() {
        for r in 0..cuboid.r_len() {
            values.push(cuboid.get(t, e, r));
        }
    }
    Panel::new(cuboid.t_len(), cuboid.r_len(), values)
}

/// The sub-cuboid covering time steps `start .. start + length`.
pub fn time_window(cuboid: &DataCuboid, start: usize, length: usize) -> Result<DataCuboid> {
    if length < 1 {
        return Err(CsError::ShapeMismatch("window length must be >= 1".into()));
    }
    let end = start.checked_add(length).ok_or(CsError::IndexOutOfRange {
        what: "window end",
        index: usize::MAX,
        len: cuboid.t_len(),
    })?;
    if end > cuboid.t_len() {
        return Err(CsError::IndexOutOfRange {
            what: "window end",
            index: end,
            len: cuboid.t_len(),
        });
    }
    let stride = cuboid.e_len() * cuboid.r_len();
    let values = cuboid.values()[start * stride..end * stride].to_vec();
    DataCuboid::new(length, cuboid.e_len(), cuboid.r_len(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, numbered_levels, synth_schema, SynthConfig};
    use rand::Rng;

    fn small_table() -> (SeriesTable, StructuralSchema) {
        // 4 rows x 6 columns over 2 events x 3 regions; cell value encodes
        // (t, e, r) so index mapping is directly checkable.
        let schema = synth_schema(2, 3);
        let mut labels = Vec::new();
        for e in 0..2 {
            for r in 0..3 {
                labels.push(schema.label_of(e, r).unwrap());
            }
        }
        let mut values = Vec::new();
        for t in 0..4 {
            for e in 0..2 {
                for r in 0..3 {
                    values.push((100 * t + 10 * e + r) as f64);
                }
            }
        }
        let timestamps = (0..4).map(|t| format!("t{t}")).collect();
        (
            SeriesTable::new(timestamps, labels, values).unwrap(),
            schema,
        )
    }

    #[test]
    fn cuboid_matches_index_mapping() {
        let (table, schema) = small_table();
        let cuboid = cuboid_from_table(&table, &schema).unwrap();
        assert_eq!(
            (cuboid.t_len(), cuboid.e_len(), cuboid.r_len()),
            (4, 2, 3)
        );
        for t in 0..4 {
            for e in 0..2 {
                for r in 0..3 {
                    assert_eq!(cuboid.get(t, e, r), (100 * t + 10 * e + r) as f64);
                }
            }
        }
    }

    #[test]
    fn degenerate_single_cell() {
        let schema = synth_schema(1, 1);
        let table = SeriesTable::new(
            vec!["t0".into()],
            vec![schema.label_of(0, 0).unwrap()],
            vec![7.5],
        )
        .unwrap();
        let cuboid = cuboid_from_table(&table, &schema).unwrap();
        assert_eq!(cuboid.get(0, 0, 0), 7.5);
    }

    // Brute-force label lookup oracle on an ATD-shaped table.
    #[test]
    fn atd_shaped_cuboid_spot_checks() {
        let config = SynthConfig {
            t_len: 215,
            e_len: 20,
            r_len: 260,
            seed: 5,
            trend_amplitude: 2.0,
            seasonal_amplitude: 3.0,
            cross_region_mixing: 0.5,
            noise_std: 0.5,
        };
        let table = generate_synthetic(&config).unwrap();
        assert_eq!(table.cols(), 5200);
        let schema = synth_schema(20, 260);
        let cuboid = cuboid_from_table(&table, &schema).unwrap();

        let mut rng = crate::rng::seeded_rng(17);
        for _ in 0..100 {
            let t = rng.gen_range(0..215);
            let e = rng.gen_range(0..20);
            let r = rng.gen_range(0..260);
            // Oracle: resolve the label to its column by dictionary lookup.
            let label = format!("event{e:02}|region{r:03}");
            let col = table.column_index(&label).unwrap();
            assert_eq!(cuboid.get(t, e, r), table.get(t, col));
        }
    }

    #[test]
    fn table_round_trips_through_cuboid() {
        let (table, schema) = small_table();
        let cuboid = cuboid_from_table(&table, &schema).unwrap();
        let back = table_from_cuboid(&cuboid, &schema, table.timestamps()).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn spatial_slice_is_the_region_face() {
        let (table, schema) = small_table();
        let cuboid = cuboid_from_table(&table, &schema).unwrap();
        let panel = slice_spatial(&cuboid, 0).unwrap();
        assert_eq!((panel.rows(), panel.cols()), (4, 2));
        for t in 0..4 {
            for e in 0..2 {
                assert_eq!(panel.get(t, e), cuboid.get(t, e, 0));
            }
        }
        assert!(matches!(
            slice_spatial(&cuboid, 3),
            Err(CsError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn restacking_slices_reproduces_cuboid() {
        let (table, schema) = small_table();
        let cuboid = cuboid_from_table(&table, &schema).unwrap();
        for r in 0..cuboid.r_len() {
            let panel = slice_spatial(&cuboid, r).unwrap();
            for t in 0..cuboid.t_len() {
                for e in 0..cuboid.e_len() {
                    assert_eq!(panel.get(t, e), cuboid.get(t, e, r));
                }
            }
        }
        for e in 0..cuboid.e_len() {
            let panel = slice_event(&cuboid, e).unwrap();
            for t in 0..cuboid.t_len() {
                for r in 0..cuboid.r_len() {
                    assert_eq!(panel.get(t, r), cuboid.get(t, e, r));
                }
            }
        }
    }

    #[test]
    fn time_window_identity_and_composition() {
        let (table, schema) = small_table();
        let cuboid = cuboid_from_table(&table, &schema).unwrap();
        assert_eq!(time_window(&cuboid, 0, 4).unwrap(), cuboid);
        let w = time_window(&cuboid, 1, 3).unwrap();
        let inner = time_window(&w, 1, 2).unwrap();
        assert_eq!(inner, time_window(&cuboid, 2, 2).unwrap());
        assert!(matches!(
            time_window(&cuboid, 3, 2),
            Err(CsError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn window_holds_original_steps() {
        let schema = synth_schema(1, 1);
        let values: Vec<f64> = (0..10).map(|t| t as f64).collect();
        let cuboid = DataCuboid::new(10, 1, 1, values).unwrap();
        let w = time_window(&cuboid, 2, 3).unwrap();
        assert_eq!(w.values(), &[2.0, 3.0, 4.0]);
        let _ = schema;
    }

    #[test]
    fn axis_order_requires_time_first_and_unique() {
        assert!(AxisOrder::new(vec!["time".into(), "event".into(), "region".into()]).is_ok());
        assert!(AxisOrder::new(vec!["event".into(), "time".into()]).is_err());
        assert!(AxisOrder::new(vec!["time".into(), "x".into(), "x".into()]).is_err());
        let _ = numbered_levels("x", 2);
    }
}
