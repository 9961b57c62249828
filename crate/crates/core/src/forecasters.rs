//! Forecaster implementations behind the fit-then-predict contract the
//! backtest harness drives.

use crate::ensemble::{blend, select_weight, EnsembleWeight, ValidationFold};
use crate::error::{CsError, Result};
use crate::model::{predict as csnet_predict, train as csnet_train, CsNetConfig, TrainedCsNet};
use crate::rng::derive_seed;
use crate::tensor::{time_window, DataCuboid, ForecastBlock};
use crate::var::{var_forecast_cuboid, Blocking};

/// Fit-then-predict contract. `predict` must be deterministic after `fit`
/// for a fixed seed.
pub trait Forecaster: Send {
    fn fit(&mut self, history: &DataCuboid) -> Result<()>;
    fn predict(&self, horizon: usize) -> Result<ForecastBlock>;
}

/// Builds a fresh forecaster per backtest window.
pub trait ForecasterFactory: Sync {
    fn name(&self) -> &str;
    fn make(&self, seed: u64) -> Box<dyn Forecaster>;
}

/// Repeats the last observed value across the horizon.
#[derive(Debug, Default)]
pub struct PersistenceForecaster {
    last: Option<DataCuboid>,
}

impl Forecaster for PersistenceForecaster {
    fn fit(&mut self, history: &DataCuboid) -> Result<()> {
        self.last = Some(time_window(history, history.t_len() - 1, 1)?);
        Ok(())
    }

    fn predict(&self, horizon: usize) -> Result<ForecastBlock> {
        let last = self.last.as_ref().ok_or_else(|| {
            CsError::InvalidConfig("predict called before fit".into())
        })?;
        let (e_len, r_len) = (last.e_len(), last.r_len());
        let mut out = ForecastBlock::zeros(horizon, e_len, r_len);
        for h in 0..horizon {
            for e in 0..e_len {
                for r in 0..r_len {
                    out.set(h, e, r, last.get(0, e, r));
                }
            }
        }
        Ok(out)
    }
}

pub struct PersistenceFactory;

impl ForecasterFactory for PersistenceFactory {
    fn name(&self) -> &str {
        "persistence"
    }

    fn make(&self, _seed: u64) -> Box<dyn Forecaster> {
        Box::new(PersistenceForecaster::default())
    }
}

/// Blocked ridge VAR settings.
#[derive(Debug, Clone, Copy)]
pub struct VarSettings {
    pub lag_order: usize,
    pub ridge: f64,
    pub blocking: Blocking,
}

impl Default for VarSettings {
    fn default() -> Self {
        VarSettings {
            lag_order: 2,
            ridge: 0.1,
            blocking: Blocking::PerRegion,
        }
    }
}

pub struct VarForecaster {
    settings: VarSettings,
    history: Option<DataCuboid>,
}

impl VarForecaster {
    pub fn new(settings: VarSettings) -> Self {
        VarForecaster {
            settings,
            history: None,
        }
    }
}

impl Forecaster for VarForecaster {
    fn fit(&mut self, history: &DataCuboid) -> Result<()> {
        if history.t_len() <= self.settings.lag_order {
            return Err(CsError::InsufficientHistory {
                have: history.t_len(),
                need: self.settings.lag_order + 1,
            });
        }
        self.history = Some(history.clone());
        Ok(())
    }

    fn predict(&self, horizon: usize) -> Result<ForecastBlock> {
        let history = self.history.as_ref().ok_or_else(|| {
            CsError::InvalidConfig("predict called before fit".into())
        })?;
        var_forecast_cuboid(
            history,
            self.settings.lag_order,
            self.settings.ridge,
            horizon,
            self.settings.blocking,
        )
    }
}

pub struct VarFactory {
    pub settings: VarSettings,
}

impl ForecasterFactory for VarFactory {
    fn name(&self) -> &str {
        "var"
    }

    fn make(&self, _seed: u64) -> Box<dyn Forecaster> {
        Box::new(VarForecaster::new(self.settings))
    }
}

/// The neural forecaster (conv-only or full variant), trained from scratch
/// on each window's history.
pub struct CsNetForecaster {
    config: CsNetConfig,
    clamp_nonnegative: bool,
    trained: Option<(TrainedCsNet, DataCuboid)>,
}

impl CsNetForecaster {
    pub fn new(config: CsNetConfig, clamp_nonnegative: bool) -> Self {
        CsNetForecaster {
            config,
            clamp_nonnegative,
            trained: None,
        }
    }
}

impl Forecaster for CsNetForecaster {
    fn fit(&mut self, history: &DataCuboid) -> Result<()> {
        let run = csnet_train(history, &self.config)?;
        self.trained = Some((run.model, history.clone()));
        Ok(())
    }

    fn predict(&self, horizon: usize) -> Result<ForecastBlock> {
        let (model, history) = self.trained.as_ref().ok_or_else(|| {
            CsError::InvalidConfig("predict called before fit".into())
        })?;
        if horizon != model.config.horizon {
            return Err(CsError::IncompatibleModel(format!(
                "model emits horizon {}, asked for {horizon}",
                model.config.horizon
            )));
        }
        csnet_predict(history, model, self.clamp_nonnegative)
    }
}

/// Settings for the blended neural + VAR forecaster.
#[derive(Debug, Clone)]
pub struct EnsembleSettings {
    pub var: VarSettings,
    /// Trailing horizon-sized validation folds used to pick the weight.
    pub validation_folds: usize,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        EnsembleSettings {
            var: VarSettings::default(),
            validation_folds: 2,
        }
    }
}

/// Weighted blend of the neural net and a VAR baseline. The weight is
/// grid-searched on trailing validation folds carved from the training
/// range, then both models are refit on the full history.
pub struct EnsembleForecaster {
    net_config: CsNetConfig,
    settings: EnsembleSettings,
    clamp_nonnegative: bool,
    seed: u64,
    fitted: Option<FittedEnsemble>,
}

struct FittedEnsemble {
    net: TrainedCsNet,
    history: DataCuboid,
    weight: EnsembleWeight,
}

impl EnsembleForecaster {
    pub fn new(
        net_config: CsNetConfig,
        settings: EnsembleSettings,
        clamp_nonnegative: bool,
        seed: u64,
    ) -> Self {
        EnsembleForecaster {
            net_config,
            settings,
            clamp_nonnegative,
            seed,
            fitted: None,
        }
    }

    /// The blend weight chosen during the last fit.
    pub fn selected_weight(&self) -> Option<f64> {
        self.fitted.as_ref().map(|f| f.weight.value())
    }
}

impl Forecaster for EnsembleForecaster {
    fn fit(&mut self, history: &DataCuboid) -> Result<()> {
        let horizon = self.net_config.horizon;
        let t_len = history.t_len();
        // A fold ending at t - j*H must leave room to train both models.
        let min_fit = (self.net_config.window + horizon).max(self.settings.var.lag_order + 1);
        let mut folds = Vec::new();
        for j in (1..=self.settings.validation_folds).rev() {
            let fit_end = match t_len.checked_sub(j * horizon) {
                Some(end) if end >= min_fit => end,
                _ => continue,
            };
            let train_slice = time_window(history, 0, fit_end)?;
            let truth_slice = time_window(history, fit_end, horizon)?;
            let truth = ForecastBlock::new(
                horizon,
                history.e_len(),
                history.r_len(),
                truth_slice.values().to_vec(),
            )?;
            let mut fold_config = self.net_config.clone();
            fold_config.seed = derive_seed(self.seed, j as u64);
            let net = csnet_train(&train_slice, &fold_config)?.model;
            let a = csnet_predict(&train_slice, &net, self.clamp_nonnegative)?;
            let b = var_forecast_cuboid(
                &train_slice,
                self.settings.var.lag_order,
                self.settings.var.ridge,
                horizon,
                self.settings.var.blocking,
            )?;
            folds.push(ValidationFold {
                a,
                b,
                truth,
                in_sample: train_slice,
            });
        }
        let weight = if folds.is_empty() {
            // Too little history to validate; split the difference.
            EnsembleWeight::new(0.5)?
        } else {
            select_weight(&folds)?.weight
        };

        let mut final_config = self.net_config.clone();
        final_config.seed = derive_seed(self.seed, 0);
        let net = csnet_train(history, &final_config)?.model;
        self.fitted = Some(FittedEnsemble {
            net,
            history: history.clone(),
            weight,
        });
        Ok(())
    }

    fn predict(&self, horizon: usize) -> Result<ForecastBlock> {
        let fitted = self.fitted.as_ref().ok_or_else(|| {
            CsError::InvalidConfig("predict called before fit".into())
        })?;
        if horizon != fitted.net.config.horizon {
            return Err(CsError::IncompatibleModel(format!(
                "model emits horizon {}, asked for {horizon}",
                fitted.net.config.horizon
            )));
        }
        let a = csnet_predict(&fitted.history, &fitted.net, self.clamp_nonnegative)?;
        let b = var_forecast_cuboid(
            &fitted.history,
            self.settings.var.lag_order,
            self.settings.var.ridge,
            horizon,
            self.settings.var.blocking,
        )?;
        blend(&a, &b, fitted.weight)
    }
}

/// Factory over the CLI-visible model lineup.
pub enum ForecasterSpec {
    Persistence,
    Var(VarSettings),
    /// Convolution transform only.
    CsNet1 {
        config: CsNetConfig,
        clamp_nonnegative: bool,
    },
    /// Convolution net blended with VAR.
    CsNet2 {
        config: CsNetConfig,
        settings: EnsembleSettings,
        clamp_nonnegative: bool,
    },
    /// Attention encoder, convolution net, and VAR blend.
    CsNet3 {
        config: CsNetConfig,
        settings: EnsembleSettings,
        clamp_nonnegative: bool,
    },
}

impl ForecasterFactory for ForecasterSpec {
    fn name(&self) -> &str {
        match self {
            ForecasterSpec::Persistence => "persistence",
            ForecasterSpec::Var(_) => "var",
            ForecasterSpec::CsNet1 { .. } => "csnet1",
            ForecasterSpec::CsNet2 { .. } => "csnet2",
            ForecasterSpec::CsNet3 { .. } => "csnet3",
        }
    }

    fn make(&self, seed: u64) -> Box<dyn Forecaster> {
        match self {
            ForecasterSpec::Persistence => Box::new(PersistenceForecaster::default()),
            ForecasterSpec::Var(settings) => Box::new(VarForecaster::new(*settings)),
            ForecasterSpec::CsNet1 {
                config,
                clamp_nonnegative,
            } => {
                let mut config = config.clone();
                config.seed = seed;
                Box::new(CsNetForecaster::new(config, *clamp_nonnegative))
            }
            ForecasterSpec::CsNet2 {
                config,
                settings,
                clamp_nonnegative,
            }
            | ForecasterSpec::CsNet3 {
                config,
                settings,
                clamp_nonnegative,
            } => Box::new(EnsembleForecaster::new(
                config.clone(),
                settings.clone(),
                *clamp_nonnegative,
                seed,
            )),
        }
    }
}

/// Reference forecaster that reads the held-out truth out of the full
/// dataset. Only for harness validation: a correct no-leakage harness must
/// score it at exactly zero error.
pub struct OracleForecaster {
    full: DataCuboid,
    train_end: Option<usize>,
}

impl OracleForecaster {
    pub fn new(full: DataCuboid) -> Self {
        OracleForecaster {
            full,
            train_end: None,
        }
    }
}

impl Forecaster for OracleForecaster {
    fn fit(&mut self, history: &DataCuboid) -> Result<()> {
        self.train_end = Some(history.t_len());
        Ok(())
    }

    fn predict(&self, horizon: usize) -> Result<ForecastBlock> {
        let train_end = self.train_end.ok_or_else(|| {
            CsError::InvalidConfig("predict called before fit".into())
        })?;
        let truth = time_window(&self.full, train_end, horizon)?;
        ForecastBlock::new(
            horizon,
            self.full.e_len(),
            self.full.r_len(),
            truth.values().to_vec(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn persistence_repeats_the_last_row() {
        let values: Vec<f64> = (0..12).map(f64::from).collect();
        let cuboid = DataCuboid::new(3, 2, 2, values).unwrap();
        let mut f = PersistenceForecaster::default();
        f.fit(&cuboid).unwrap();
        let out = f.predict(3).unwrap();
        for h in 0..3 {
            for e in 0..2 {
                for r in 0..2 {
                    assert_eq!(out.get(h, e, r), cuboid.get(2, e, r));
                }
            }
        }
    }

    #[test]
    fn oracle_reads_exactly_the_following_rows() {
        let values: Vec<f64> = (0..20).map(f64::from).collect();
        let full = DataCuboid::new(10, 1, 2, values).unwrap();
        let mut f = OracleForecaster::new(full.clone());
        f.fit(&time_window(&full, 0, 6).unwrap()).unwrap();
        let out = f.predict(2).unwrap();
        for h in 0..2 {
            for r in 0..2 {
                assert_eq!(out.get(h, 0, r), full.get(6 + h, 0, r));
            }
        }
    }

    #[test]
    fn ensemble_fit_selects_a_weight_and_blends() {
        let mut rng = crate::rng::seeded_rng(81);
        let t_len = 40;
        let mut values = Vec::new();
        for t in 0..t_len {
            for _ in 0..2 {
                for _ in 0..2 {
                    values.push(5.0 + 0.3 * t as f64 + rng.gen_range(-0.2..0.2));
                }
            }
        }
        let cuboid = DataCuboid::new(t_len, 2, 2, values).unwrap();
        let mut config = CsNetConfig::new(crate::model::CsNetVariant::ConvOnly, 12, 2);
        config.n_kernels = 2;
        config.mlp_hidden = vec![8];
        config.epochs = 3;
        config.dropout = 0.0;
        let mut f = EnsembleForecaster::new(config, EnsembleSettings::default(), false, 7);
        f.fit(&cuboid).unwrap();
        let w = f.selected_weight().unwrap();
        assert!((0.0..=1.0).contains(&w));
        let out = f.predict(2).unwrap();
        assert_eq!((out.horizon(), out.e_len(), out.r_len()), (2, 2, 2));
    }

    #[test]
    fn csnet_forecaster_rejects_foreign_horizon() {
        let values: Vec<f64> = (0..80).map(|i| (i % 7) as f64).collect();
        let cuboid = DataCuboid::new(20, 2, 2, values).unwrap();
        let mut config = CsNetConfig::new(crate::model::CsNetVariant::ConvOnly, 8, 2);
        config.n_kernels = 2;
        config.mlp_hidden = vec![4];
        config.epochs = 1;
        let mut f = CsNetForecaster::new(config, false);
        f.fit(&cuboid).unwrap();
        assert!(matches!(
            f.predict(3),
            Err(CsError::IncompatibleModel(_))
        ));
    }
}
