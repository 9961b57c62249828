//! Forecast accuracy metrics: MASE (primary) and MSE (secondary).

use crate::error::{CsError, Result};

/// One series' data for scoring: the training-range history that sets the
/// naive scale, plus the held-out truth and the prediction.
#[derive(Debug, Clone)]
pub struct MetricInput<'a> {
    pub in_sample: &'a [f64],
    pub truth: &'a [f64],
    pub predicted: &'a [f64],
}

/// Mean absolute scaled error: forecast MAE over the MAE of the in-sample
/// one-step naive forecast. Values below 1 beat naive persistence.
///
/// `UndefinedScale` when the in-sample series is constant (zero denominator).
pub fn mase(input: &MetricInput) -> Result<f64> {
    let h = input.truth.len();
    if h == 0 || input.predicted.len() != h {
        return Err(CsError::LengthMismatch {
            left: h,
            right: input.predicted.len(),
        });
    }
    let n = input.in_sample.len();
    if n < 2 {
        return Err(CsError::InsufficientHistory { have: n, need: 2 });
    }
    let naive_mae = input
        .in_sample
        .windows(2)
        .map(|pair| (pair[1] - pair[0]).abs())
        .sum::<f64>()
        / (n - 1) as f64;
    if naive_mae <= 0.0 {
        return Err(CsError::UndefinedScale);
    }
    let forecast_mae = input
        .truth
        .iter()
        .zip(input.predicted)
        .map(|(y, yhat)| (y - yhat).abs())
        .sum::<f64>()
        / h as f64;
    Ok(forecast_mae / naive_mae)
}

/// Mean squared error.
pub fn mse(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    if truth.is_empty() || truth.len() != predicted.len() {
        return Err(CsError::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    Ok(truth
        .iter()
        .zip(predicted)
        .map(|(y, yhat)| (y - yhat) * (y - yhat))
        .sum::<f64>()
        / truth.len() as f64)
}

/// One series' scores; `mase` is `None` when its scale was undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesScore {
    pub mase: Option<f64>,
    pub mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateMetrics {
    /// Unweighted mean over series with a defined MASE.
    pub mase: f64,
    /// Unweighted mean over all series.
    pub mse: f64,
    /// Series excluded from the MASE mean.
    pub skipped_series: usize,
}

/// Aggregates per-series scores: MASE averages over defined series only,
/// MSE over all of them.
pub fn aggregate_metrics(scores: &[SeriesScore]) -> Result<AggregateMetrics> {
    let defined: Vec<f64> = scores.iter().filter_map(|s| s.mase).collect();
    if defined.is_empty() {
        return Err(CsError::NoDefinedSeries);
    }
    let mase = defined.iter().sum::<f64>() / defined.len() as f64;
    let mse = scores.iter().map(|s| s.mse).sum::<f64>() / scores.len() as f64;
    Ok(AggregateMetrics {
        mase,
        mse,
        skipped_series: scores.len() - defined.len(),
    })
}

/// Scores one series end to end.
pub fn score_series(input: &MetricInput) -> Result<SeriesScore> {
    let mse_value = mse(input.truth, input.predicted)?;
    let mase_value = match mase(input) {
        Ok(v) => Some(v),
        Err(CsError::UndefinedScale) => None,
        Err(e) => return Err(e),
    };
    Ok(SeriesScore {
        mase: mase_value,
        mse: mse_value,
    })
}
