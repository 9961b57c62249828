//! Walk-forward backtesting.
//!
//! For every window the harness hands the forecaster only the training
//! slice (no-leakage by construction), scores each series' MASE against the
//! window's own training range and MSE against the held-out truth, and
//! aggregates per window, then across windows. Windows are independent and
//! evaluated in parallel; records are assembled in protocol order, so a run
//! is deterministic for a fixed seed regardless of thread count.

use rayon::prelude::*;

use crate::data::{SeriesTable, StructuralSchema};
use crate::error::{CsError, Result};
use crate::forecasters::ForecasterFactory;
use crate::metrics::{score_series, MetricInput, SeriesScore};
use crate::report::{BacktestProtocol, BacktestReport, WindowRecord};
use crate::rng::{derive_seed, RNG_ALGORITHM};
use crate::tensor::{cuboid_from_table, time_window, DataCuboid, ForecastBlock};

/// Number of evaluation windows the protocol yields on `t_len` steps.
pub fn count_windows(t_len: usize, protocol: &BacktestProtocol) -> Result<usize> {
    Ok(window_train_ends(t_len, protocol)?.len())
}

/// The train-end index of every window, in protocol order. `train_end = k`
/// means rows `0..k` (expanding) or the `window` rows before `k` (sliding)
/// are in-sample and rows `k..k+horizon` are scored.
pub fn window_train_ends(t_len: usize, protocol: &BacktestProtocol) -> Result<Vec<usize>> {
    protocol.validate()?;
    let (first, horizon, step) = match protocol {
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
    if t_len < first + horizon {
        return Err(CsError::InsufficientHistory {
            have: t_len,
            need: first + horizon,
        });
    }
    Ok((first..=t_len - horizon).step_by(step).collect())
}

fn training_slice(
    cuboid: &DataCuboid,
    protocol: &BacktestProtocol,
    train_end: usize,
) -> Result<DataCuboid> {
    match protocol {
        BacktestProtocol::Expanding { .. } => time_window(cuboid, 0, train_end),
        BacktestProtocol::Sliding { window, .. } => {
            time_window(cuboid, train_end - window, *window)
        }
    }
}

/// Scores every series of a forecast block against the held-out truth,
/// using the training slice for each series' naive scale.
fn score_window(
    training: &DataCuboid,
    truth: &DataCuboid,
    forecast: &ForecastBlock,
) -> Result<Vec<SeriesScore>> {
    let (e_len, r_len) = (training.e_len(), training.r_len());
    if forecast.e_len() != e_len
        || forecast.r_len() != r_len
        || forecast.horizon() != truth.t_len()
    {
        return Err(CsError::ShapeMismatch(
            "forecast block does not match the evaluation window".into(),
        ));
    }
    let mut scores = Vec::with_capacity(e_len * r_len);
    for e in 0..e_len {
        for r in 0..r_len {
            let in_sample = training.series(e, r);
            let truth_series = truth.series(e, r);
            let predicted = forecast.series(e, r);
            scores.push(score_series(&MetricInput {
                in_sample: &in_sample,
                truth: &truth_series,
                predicted: &predicted,
            })?);
        }
    }
    Ok(scores)
}

/// Runs the protocol: one fresh forecaster per window, fit on the training
/// slice only, scored on the following `horizon` rows. Individual window
/// failures are recorded and excluded from aggregates without aborting.
pub fn run_backtest(
    table: &SeriesTable,
    schema: &StructuralSchema,
    factory: &dyn ForecasterFactory,
    protocol: &BacktestProtocol,
    seed: u64,
    config_hash: &str,
) -> Result<BacktestReport> {
    let cuboid = cuboid_from_table(table, schema)?;
    let horizon = protocol.horizon();
    let ends = window_train_ends(cuboid.t_len(), protocol)?;

    let windows: Vec<WindowRecord> = ends
        .par_iter()
        .map(|&train_end| {
            let started = std::time::Instant::now();
            let outcome = (|| -> Result<(Option<f64>, f64, usize)> {
                let training = training_slice(&cuboid, protocol, train_end)?;
                let truth = time_window(&cuboid, train_end, horizon)?;
                let mut forecaster = factory.make(derive_seed(seed, train_end as u64));
                forecaster.fit(&training)?;
                let forecast = forecaster.predict(horizon)?;
                let scores = score_window(&training, &truth, &forecast)?;
                let defined: Vec<f64> = scores.iter().filter_map(|s| s.mase).collect();
                let mase = if defined.is_empty() {
                    None
                } else {
                    Some(defined.iter().sum::<f64>() / defined.len() as f64)
                };
                let mse = scores.iter().map(|s| s.mse).sum::<f64>() / scores.len() as f64;
                Ok((mase, mse, scores.len() - defined.len()))
            })();
            match outcome {
                Ok((mase, mse, skipped)) => WindowRecord {
                    train_end,
                    horizon,
                    mase,
                    mse: Some(mse),
                    skipped_series: skipped,
                    error: None,
                    wall_clock_secs: started.elapsed().as_secs_f64(),
                },
                Err(e) => WindowRecord {
                    train_end,
                    horizon,
                    mase: None,
                    mse: None,
                    skipped_series: 0,
                    error: Some(e.to_string()),
                    wall_clock_secs: started.elapsed().as_secs_f64(),
                },
            }
        })
        .collect();

    let aggregate = BacktestReport::compute_aggregate(&windows);
    Ok(BacktestReport {
        protocol: *protocol,
        forecaster: factory.name().to_string(),
        rng: RNG_ALGORITHM.to_string(),
        seed,
        config_hash: config_hash.to_string(),
        dataset_fingerprint: table.fingerprint(),
        windows,
        aggregate,
    })
}

/// One comparison row: forecaster name and its aggregate metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub forecaster: String,
    pub mase: Option<f64>,
    pub mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// `forecaster,mase,mse` CSV, rows in table order.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("forecaster,mase,mse\n");
        for row in &self.rows {
            let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
            out.push_str(&format!(
                "{},{},{}\n",
                row.forecaster,
                fmt(row.mase),
                fmt(row.mse)
            ));
        }
        out
    }
}

/// Ranks reports by aggregate MASE ascending. All reports must share the
/// protocol and dataset fingerprint.
pub fn compare(reports: &[BacktestReport]) -> Result<ComparisonTable> {
    let first = reports.first().ok_or_else(|| {
        CsError::InvalidConfig("compare needs at least one report".into())
    })?;
    for r in &reports[1..] {
        if r.protocol != first.protocol {
            return Err(CsError::ProtocolMismatch(format!(
                "{:?} vs {:?}",
                r.protocol, first.protocol
            )));
        }
        if r.dataset_fingerprint != first.dataset_fingerprint {
            return Err(CsError::ProtocolMismatch(format!(
                "dataset {} vs {}",
                r.dataset_fingerprint, first.dataset_fingerprint
            )));
        }
    }
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            forecaster: r.forecaster.clone(),
            mase: r.aggregate.mase,
            mse: r.aggregate.mse,
        })
        .collect();
    rows.sort_by(|a, b| match (a.mase, b.mase) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap(),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(ComparisonTable { rows })
}
