//! Weighted-sum ensembling of two forecasters, with the blend weight chosen
//! by grid search on validation windows.

use crate::error::{CsError, Result};
use crate::metrics::{aggregate_metrics, score_series, MetricInput};
use crate::tensor::{DataCuboid, ForecastBlock};

/// Blend weight on the first (neural) component, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleWeight(f64);

impl EnsembleWeight {
    pub fn new(w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(CsError::InvalidConfig(format!(
                "ensemble weight {w} outside [0, 1]"
            )));
        }
        Ok(EnsembleWeight(w))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `w * a + (1 - w) * b`, entrywise.
pub fn blend(a: &ForecastBlock, b: &ForecastBlock, w: EnsembleWeight) -> Result<ForecastBlock> {
    if !a.same_shape(b) {
        return Err(CsError::ShapeMismatch(
            "cannot blend blocks of different shapes".into(),
        ));
    }
    let w = w.value();
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| w * x + (1.0 - w) * y)
        .collect();
    ForecastBlock::new(a.horizon(), a.e_len(), a.r_len(), values)
}

/// One validation window: both candidates' forecasts, the held-out truth,
/// and the training-range cuboid that sets each series' MASE scale.
pub struct ValidationFold {
    pub a: ForecastBlock,
    pub b: ForecastBlock,
    pub truth: ForecastBlock,
    pub in_sample: DataCuboid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSelection {
    pub weight: EnsembleWeight,
    /// Aggregate validation MASE of the selected blend.
    pub validation_mase: f64,
}

/// Aggregate MASE of `w a + (1 - w) b` over the folds: per-window mean over
/// defined series, then mean over windows.
pub fn blended_validation_mase(folds: &[ValidationFold], w: EnsembleWeight) -> Result<f64> {
    if folds.is_empty() {
        return Err(CsError::NoDefinedSeries);
    }
    let mut total = 0.0;
    for fold in folds {
        let blended = blend(&fold.a, &fold.b, w)?;
        if !fold.truth.same_shape(&blended)
            || fold.in_sample.e_len() != blended.e_len()
            || fold.in_sample.r_len() != blended.r_len()
        {
            return Err(CsError::ShapeMismatch(
                "validation fold shapes disagree".into(),
            ));
        }
        let mut scores = Vec::with_capacity(blended.e_len() * blended.r_len());
        for e in 0..blended.e_len() {
            for r in 0..blended.r_len() {
                let in_sample = fold.in_sample.series(e, r);
                let truth = fold.truth.series(e, r);
                let predicted = blended.series(e, r);
                scores.push(score_series(&MetricInput {
                    in_sample: &in_sample,
                    truth: &truth,
                    predicted: &predicted,
                })?);
            }
        }
        total += aggregate_metrics(&scores)?.mase;
    }
    Ok(total / folds.len() as f64)
}

/// Grid search over w in {0, 0.05, ..., 1}, minimizing aggregate validation
/// MASE; exact ties break toward larger w (favoring the first model).
pub fn select_weight(folds: &[ValidationFold]) -> Result<WeightSelection> {
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=20u32 {
        let w = f64::from(i) / 20.0;
        let mase = blended_validation_mase(folds, EnsembleWeight(w))?;
        best = match best {
            Some((bw, bm)) if mase > bm => Some((bw, bm)),
            _ => Some((w, mase)),
        };
    }
    let (w, validation_mase) = best.unwrap();
    Ok(WeightSelection {
        weight: EnsembleWeight(w),
        validation_mase,
    })
}
