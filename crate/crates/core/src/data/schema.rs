//! Label-to-coordinate schemas.
//!
//! A wide table's column labels carry the non-time key dimensions, joined by
//! a delimiter (`"event03|region117"`). The schema declares those dimensions,
//! their ordered level lists, and how each source dimension folds onto the
//! two internal cuboid axes (event, region). Datasets with more than two
//! non-time dimensions group several source dimensions onto one axis; the
//! grouped coordinate is the mixed-radix index over that axis's dimensions
//! in declared order.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{CsError, Result};

/// Which internal cuboid axis a source dimension folds onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InternalAxis {
    Event,
    Region,
}

/// One non-time source dimension: a name, its ordered levels, and its axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub levels: Vec<String>,
    pub axis: InternalAxis,
}

/// Parsing rules mapping column labels onto (event, region) coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuralSchema {
    /// Separator between dimension levels inside a column label.
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    /// Non-time dimensions in label order.
    pub dimensions: Vec<Dimension>,
    /// Declares the values as count data; forecasts are then clamped at 0.
    #[serde(default)]
    pub count_data: bool,
}

fn default_delimiter() -> String {
    "|".to_string()
}

impl StructuralSchema {
    pub fn new(delimiter: &str, dimensions: Vec<Dimension>) -> Result<Self> {
        let schema = StructuralSchema {
            delimiter: delimiter.to_string(),
            dimensions,
            count_data: false,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delimiter.is_empty() {
            return Err(CsError::InvalidConfig("schema delimiter is empty".into()));
        }
        if self.dimensions.is_empty() {
            return Err(CsError::InvalidConfig(
                "schema declares no non-time dimensions".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for dim in &self.dimensions {
            if !seen.insert(dim.name.as_str()) {
                return Err(CsError::InvalidConfig(format!(
                    "duplicate dimension name {:?}",
                    dim.name
                )));
            }
            if dim.levels.is_empty() {
                return Err(CsError::InvalidConfig(format!(
                    "dimension {:?} has no levels",
                    dim.name
                )));
            }
            let mut level_seen = std::collections::HashSet::new();
            for level in &dim.levels {
                if !level_seen.insert(level.as_str()) {
                    return Err(CsError::InvalidConfig(format!(
                        "dimension {:?} has duplicate level {:?}",
                        dim.name, level
                    )));
                }
                if level.contains(&self.delimiter) {
                    return Err(CsError::InvalidConfig(format!(
                        "level {:?} of dimension {:?} contains the delimiter",
                        level, dim.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Axis names of the cuboid this schema produces, time first.
    pub fn axis_order(&self) -> crate::tensor::AxisOrder {
        let join = |axis: InternalAxis| {
            let names: Vec<&str> = self
                .dimensions
                .iter()
                .filter(|d| d.axis == axis)
                .map(|d| d.name.as_str())
                .collect();
            if names.is_empty() {
                match axis {
                    InternalAxis::Event => "event".to_string(),
                    InternalAxis::Region => "region".to_string(),
                }
            } else {
                names.join("+")
            }
        };
        crate::tensor::AxisOrder::new(vec![
            "time".to_string(),
            join(InternalAxis::Event),
            join(InternalAxis::Region),
        ])
        .expect("schema axes are unique")
    }

    /// Extent of the internal event axis: product over event-grouped dimensions.
    pub fn event_len(&self) -> usize {
        self.axis_len(InternalAxis::Event)
    }

    /// Extent of the internal region axis.
    pub fn region_len(&self) -> usize {
        self.axis_len(InternalAxis::Region)
    }

    fn axis_len(&self, axis: InternalAxis) -> usize {
        self.dimensions
            .iter()
            .filter(|d| d.axis == axis)
            .map(|d| d.levels.len())
            .product()
    }

    /// Resolves a column label to its (event, region) coordinate.
    pub fn coordinate_of(&self, label: &str) -> Result<(usize, usize)> {
        let parts: Vec<&str> = label.split(self.delimiter.as_str()).collect();
        if parts.len() != self.dimensions.len() {
            return Err(CsError::UnparsableLabel {
                label: label.to_string(),
                reason: format!(
                    "expected {} delimiter-separated parts, found {}",
                    self.dimensions.len(),
                    parts.len()
                ),
            });
        }
        let mut event = 0usize;
        let mut region = 0usize;
        for (dim, part) in self.dimensions.iter().zip(&parts) {
            let idx = dim.levels.iter().position(|l| l == part).ok_or_else(|| {
                CsError::UnparsableLabel {
                    label: label.to_string(),
                    reason: format!("{:?} is not a level of dimension {:?}", part, dim.name),
                }
            })?;
            match dim.axis {
                InternalAxis::Event => event = event * dim.levels.len() + idx,
                InternalAxis::Region => region = region * dim.levels.len() + idx,
            }
        }
        Ok((event, region))
    }

    /// Inverse of [`coordinate_of`]: the column label for a grid cell.
    ///
    /// [`coordinate_of`]: StructuralSchema::coordinate_of
    pub fn label_of(&self, event: usize, region: usize) -> Result<String> {
        let e_len = self.event_len();
        let r_len = self.region_len();
        if event >= e_len {
            return Err(CsError::IndexOutOfRange {
                what: "event",
                index: event,
                len: e_len,
            });
        }
        if region >= r_len {
            return Err(CsError::IndexOutOfRange {
                what: "region",
                index: region,
                len: r_len,
            });
        }
        // Unfold each axis index back into per-dimension level indices
        // (mixed radix, most-significant dimension first in declared order).
        let mut parts: Vec<Option<&str>> = vec![None; self.dimensions.len()];
        for axis in [InternalAxis::Event, InternalAxis::Region] {
            let mut rem = match axis {
                InternalAxis::Event => event,
                InternalAxis::Region => region,
            };
            let dims: Vec<usize> = (0..self.dimensions.len())
                .filter(|&i| self.dimensions[i].axis == axis)
                .collect();
            for &i in dims.iter().rev() {
                let n = self.dimensions[i].levels.len();
                parts[i] = Some(self.dimensions[i].levels[rem % n].as_str());
                rem /= n;
            }
        }
        let parts: Vec<&str> = parts.into_iter().map(|p| p.unwrap()).collect();
        Ok(parts.join(&self.delimiter))
    }

    /// Maps every column label to a coordinate, checking the grid is fully
    /// and uniquely populated.
    pub fn resolve_columns(&self, labels: &[String]) -> Result<Vec<(usize, usize)>> {
        let e_len = self.event_len();
        let r_len = self.region_len();
        let mut owner: HashMap<(usize, usize), &str> = HashMap::new();
        let mut coords = Vec::with_capacity(labels.len());
        for label in labels {
            let coord = self.coordinate_of(label)?;
            if let Some(first) = owner.insert(coord, label) {
                return Err(CsError::DuplicateCoordinate {
                    first: first.to_string(),
                    second: label.to_string(),
                });
            }
            coords.push(coord);
        }
        if labels.len() != e_len * r_len {
            // Some grid cell has no column; name the first hole.
            for e in 0..e_len {
                for r in 0..r_len {
                    if !owner.contains_key(&(e, r)) {
                        return Err(CsError::MissingCoordinate {
                            event: e,
                            region: r,
                            label: self.label_of(e, r)?,
                        });
                    }
                }
            }
        }
        Ok(coords)
    }
}

/// Zero-padded level labels: `prefix00 .. prefixNN`.
///
/// Width is the decimal width of `count - 1`, at least 2, so labels sort
/// lexicographically in index order.
pub fn numbered_levels(prefix: &str, count: usize) -> Vec<String> {
    let width = if count <= 1 {
        2
    } else {
        format!("{}", count - 1).len().max(2)
    };
    (0..count)
        .map(|i| format!("{prefix}{i:0width$}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_dim_schema(e: usize, r: usize) -> StructuralSchema {
        StructuralSchema::new(
            "|",
            vec![
                Dimension {
                    name: "event".into(),
                    levels: numbered_levels("event", e),
                    axis: InternalAxis::Event,
                },
                Dimension {
                    name: "region".into(),
                    levels: numbered_levels("region", r),
                    axis: InternalAxis::Region,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn coordinate_round_trip() {
        let schema = two_dim_schema(3, 4);
        for e in 0..3 {
            for r in 0..4 {
                let label = schema.label_of(e, r).unwrap();
                assert_eq!(schema.coordinate_of(&label).unwrap(), (e, r));
            }
        }
    }

    #[test]
    fn grouped_dimensions_fold_mixed_radix() {
        // Three source dimensions; device+language grouped onto the event axis.
        let schema = StructuralSchema::new(
            "|",
            vec![
                Dimension {
                    name: "device".into(),
                    levels: vec!["desktop".into(), "mobile".into()],
                    axis: InternalAxis::Event,
                },
                Dimension {
                    name: "language".into(),
                    levels: vec!["de".into(), "en".into(), "fr".into()],
                    axis: InternalAxis::Event,
                },
                Dimension {
                    name: "keyword".into(),
                    levels: vec!["k0".into(), "k1".into()],
                    axis: InternalAxis::Region,
                },
            ],
        )
        .unwrap();
        assert_eq!(schema.event_len(), 6);
        assert_eq!(schema.region_len(), 2);
        // mobile, fr -> event index 1*3 + 2 = 5
        assert_eq!(schema.coordinate_of("mobile|fr|k1").unwrap(), (5, 1));
        assert_eq!(schema.label_of(5, 1).unwrap(), "mobile|fr|k1");
    }

    #[test]
    fn unparsable_label_names_the_reason() {
        let schema = two_dim_schema(2, 2);
        let err = schema.coordinate_of("event00").unwrap_err();
        assert!(matches!(err, CsError::UnparsableLabel { .. }));
        let err = schema.coordinate_of("event00|region09").unwrap_err();
        assert!(matches!(err, CsError::UnparsableLabel { .. }));
    }

    #[test]
    fn resolve_detects_duplicates_and_holes() {
        let schema = two_dim_schema(1, 2);
        let dup = vec!["event00|region00".to_string(), "event00|region00".into()];
        assert!(matches!(
            schema.resolve_columns(&dup),
            Err(CsError::DuplicateCoordinate { .. })
        ));
        let hole = vec!["event00|region00".to_string()];
        assert!(matches!(
            schema.resolve_columns(&hole),
            Err(CsError::MissingCoordinate { .. })
        ));
    }

    #[test]
    fn axis_order_names_grouped_dimensions() {
        let schema = two_dim_schema(2, 2);
        assert_eq!(
            schema.axis_order().names(),
            &["time".to_string(), "event".into(), "region".into()]
        );
    }

    #[test]
    fn numbered_levels_sort_in_index_order() {
        let levels = numbered_levels("region", 260);
        assert_eq!(levels[0], "region000");
        assert_eq!(levels[259], "region259");
        let mut sorted = levels.clone();
        sorted.sort();
        assert_eq!(levels, sorted);
    }
}
