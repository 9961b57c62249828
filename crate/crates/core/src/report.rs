//! Backtest reports and their JSON serialization.
//!
//! The documented report layout:
//!
//! ```json
//! {
//!   "protocol": {"kind": "expanding", "initial_train": 100, "horizon": 4, "step": 1},
//!   "forecaster": "csnet3",
//!   "rng": "chacha8",
//!   "seed": 42,
//!   "config_hash": "...",
//!   "dataset_fingerprint": "...",
//!   "windows": [{"train_end": 100, "horizon": 4, "mase": 1.01, "mse": 2.5}, ...],
//!   "aggregate": {"mase": 1.0, "mse": 2.4, "skipped_series": 0}
//! }
//! ```
//!
//! A window whose forecaster failed carries `null` metrics and is excluded
//! from the aggregates; `skipped_series` counts (window, series) pairs whose
//! constant training range left MASE undefined.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CsError, Result};

/// Walk-forward evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BacktestProtocol {
    /// Training range grows from `initial_train` one `step` at a time.
    Expanding {
        initial_train: usize,
        horizon: usize,
        #[serde(default = "default_step")]
        step: usize,
    },
    /// Fixed-length training window slides forward by `step`.
    Sliding {
        window: usize,
        horizon: usize,
        #[serde(default = "default_step")]
        step: usize,
    },
}

fn default_step() -> usize {
    1
}

impl BacktestProtocol {
    pub fn expanding(initial_train: usize, horizon: usize) -> Self {
        BacktestProtocol::Expanding {
            initial_train,
            horizon,
            step: 1,
        }
    }

    pub fn sliding(window: usize, horizon: usize) -> Self {
        BacktestProtocol::Sliding {
            window,
            horizon,
            step: 1,
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            BacktestProtocol::Expanding { horizon, .. }
            | BacktestProtocol::Sliding { horizon, .. } => *horizon,
        }
    }

    pub fn step(&self) -> usize {
        match self {
            BacktestProtocol::Expanding { step, .. } | BacktestProtocol::Sliding { step, .. } => {
                *step
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (train, horizon, step) = match self {
            BacktestProtocol::Expanding {
                initial_train,
                horizon,
                step,
            } => (*initial_train, *horizon, *step),
            BacktestProtocol::Sliding {
                window,
                horizon,
                step,
            } => (*window, *horizon, *step),
        };
        if train < 1 || horizon < 1 || step < 1 {
            return Err(CsError::InvalidConfig(
                "protocol extents must all be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One evaluation window's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub train_end: usize,
    pub horizon: usize,
    /// `None` when every series' scale was undefined or the window failed.
    pub mase: Option<f64>,
    pub mse: Option<f64>,
    pub skipped_series: usize,
    /// Forecaster failure, recorded without aborting the run.
    pub error: Option<String>,
    /// Not serialized.
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub mase: Option<f64>,
    pub mse: Option<f64>,
    pub skipped_series: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub protocol: BacktestProtocol,
    pub forecaster: String,
    pub rng: String,
    pub seed: u64,
    pub config_hash: String,
    pub dataset_fingerprint: String,
    pub windows: Vec<WindowRecord>,
    pub aggregate: AggregateRecord,
}

impl BacktestReport {
    /// Aggregate = unweighted means of the defined window metrics.
    pub fn compute_aggregate(windows: &[WindowRecord]) -> AggregateRecord {
        let mases: Vec<f64> = windows.iter().filter_map(|w| w.mase).collect();
        let mses: Vec<f64> = windows.iter().filter_map(|w| w.mse).collect();
        AggregateRecord {
            mase: if mases.is_empty() {
                None
            } else {
                Some(mases.iter().sum::<f64>() / mases.len() as f64)
            },
            mse: if mses.is_empty() {
                None
            } else {
                Some(mses.iter().sum::<f64>() / mses.len() as f64)
            },
            skipped_series: windows.iter().map(|w| w.skipped_series).sum(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WindowJson {
    train_end: usize,
    horizon: usize,
    mase: Option<f64>,
    mse: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    protocol: BacktestProtocol,
    forecaster: String,
    rng: String,
    seed: u64,
    config_hash: String,
    dataset_fingerprint: String,
    windows: Vec<WindowJson>,
    aggregate: AggregateRecord,
}

/// Serializes a report to pretty JSON (stable key order, trailing newline).
pub fn report_to_json(report: &BacktestReport) -> String {
    let dto = ReportJson {
        protocol: report.protocol,
        forecaster: report.forecaster.clone(),
        rng: report.rng.clone(),
        seed: report.seed,
        config_hash: report.config_hash.clone(),
        dataset_fingerprint: report.dataset_fingerprint.clone(),
        windows: report
            .windows
            .iter()
            .map(|w| WindowJson {
                train_end: w.train_end,
                horizon: w.horizon,
                mase: w.mase,
                mse: w.mse,
            })
            .collect(),
        aggregate: report.aggregate,
    };
    let mut s = serde_json::to_string_pretty(&dto).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_report(report: &BacktestReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_json(report)).map_err(|source| CsError::IoFailure {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a report back; per-window error/wall-clock details are not part of
/// the JSON format and come back empty.
pub fn read_report(path: &Path) -> Result<BacktestReport> {
    let text = std::fs::read_to_string(path).map_err(|source| CsError::IoFailure {
        path: path.display().to_string(),
        source,
    })?;
    let dto: ReportJson =
        serde_json::from_str(&text).map_err(|e| CsError::MalformedCsv(format!("json: {e}")))?;
    Ok(BacktestReport {
        protocol: dto.protocol,
        forecaster: dto.forecaster,
        rng: dto.rng,
        seed: dto.seed,
        config_hash: dto.config_hash,
        dataset_fingerprint: dto.dataset_fingerprint,
        windows: dto
            .windows
            .into_iter()
            .map(|w| WindowRecord {
                train_end: w.train_end,
                horizon: w.horizon,
                mase: w.mase,
                mse: w.mse,
                skipped_series: 0,
                error: None,
                wall_clock_secs: 0.0,
            })
            .collect(),
        aggregate: dto.aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(train_end: usize, mase: f64, mse: f64) -> WindowRecord {
        WindowRecord {
            train_end,
            horizon: 4,
            mase: Some(mase),
            mse: Some(mse),
            skipped_series: 0,
            error: None,
            wall_clock_secs: 0.01,
        }
    }

    #[test]
    fn empty_report_serializes_with_null_aggregates() {
        let report = BacktestReport {
            protocol: BacktestProtocol::expanding(100, 4),
            forecaster: "persistence".into(),
            rng: "chacha8".into(),
            seed: 0,
            config_hash: "00".into(),
            dataset_fingerprint: "11".into(),
            windows: vec![],
            aggregate: BacktestReport::compute_aggregate(&[]),
        };
        let json = report_to_json(&report);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["windows"].as_array().unwrap().len(), 0);
        assert!(v["aggregate"]["mase"].is_null());
        assert!(v["aggregate"]["mse"].is_null());
        assert_eq!(v["protocol"]["kind"], "expanding");
        assert_eq!(v["protocol"]["initial_train"], 100);
    }

    #[test]
    fn two_window_aggregate_is_the_mean() {
        let windows = vec![record(100, 0.5, 2.0), record(101, 1.5, 4.0)];
        let agg = BacktestReport::compute_aggregate(&windows);
        assert_eq!(agg.mase, Some(1.0));
        assert_eq!(agg.mse, Some(3.0));
        let report = BacktestReport {
            protocol: BacktestProtocol::expanding(100, 4),
            forecaster: "var".into(),
            rng: "chacha8".into(),
            seed: 1,
            config_hash: "aa".into(),
            dataset_fingerprint: "bb".into(),
            windows,
            aggregate: agg,
        };
        let v: serde_json::Value = serde_json::from_str(&report_to_json(&report)).unwrap();
        assert_eq!(v["windows"].as_array().unwrap().len(), 2);
        assert_eq!(v["aggregate"]["mase"], 1.0);
    }

    #[test]
    fn failed_windows_are_excluded_from_aggregates() {
        let mut bad = record(102, 0.0, 0.0);
        bad.mase = None;
        bad.mse = None;
        bad.error = Some("boom".into());
        let windows = vec![record(100, 1.0, 2.0), bad];
        let agg = BacktestReport::compute_aggregate(&windows);
        assert_eq!(agg.mase, Some(1.0));
        assert_eq!(agg.mse, Some(2.0));
    }

    #[test]
    fn json_round_trip_preserves_documented_fields() {
        let report = BacktestReport {
            protocol: BacktestProtocol::sliding(170, 8),
            forecaster: "csnet1".into(),
            rng: "chacha8".into(),
            seed: 9,
            config_hash: "cafe".into(),
            dataset_fingerprint: "beef".into(),
            windows: vec![record(170, 0.9, 1.1)],
            aggregate: BacktestReport::compute_aggregate(&[record(170, 0.9, 1.1)]),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(&report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back.protocol, report.protocol);
        assert_eq!(back.forecaster, report.forecaster);
        assert_eq!(back.seed, report.seed);
        assert_eq!(back.aggregate, report.aggregate);
        assert_eq!(back.windows[0].mase, report.windows[0].mase);
        assert_eq!(back.dataset_fingerprint, report.dataset_fingerprint);
    }
}
