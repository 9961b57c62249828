//! Command implementations. Each is a deterministic wrapper over the
//! library: identical config and seed produce identical artifacts.

use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use csforecast::backtest::{compare, run_backtest};
use csforecast::data::{generate_synthetic, read_csv, write_csv, SeriesTable, StructuralSchema};
use csforecast::ensemble::{blend, EnsembleWeight};
use csforecast::forecasters::ForecasterSpec;
use csforecast::model::{
    load_model, model_fingerprint, predict, save_model, train, CsNetVariant,
};
use csforecast::report::{read_report, write_report};
use csforecast::rng::RNG_ALGORITHM;
use csforecast::tensor::{cuboid_from_table, ForecastBlock};
use csforecast::var::var_forecast_cuboid;
use csforecast::{CsError, Result};

use crate::config::{ResolvedConfig, VariantName};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CsError + '_ {
    move |source| CsError::IoFailure {
        path: path.display().to_string(),
        source,
    }
}

fn ensure_out_dir(resolved: &ResolvedConfig) -> Result<PathBuf> {
    let dir = resolved.config.out_dir();
    let dir = if dir.is_absolute() {
        dir
    } else {
        resolved.base_dir.join(dir)
    };
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    Ok(dir)
}

/// Loads the configured dataset (CSV file or in-memory synthetic table).
pub fn load_table(resolved: &ResolvedConfig) -> Result<(SeriesTable, StructuralSchema)> {
    let config = &resolved.config;
    let schema = config.schema()?;
    let table = if let Some(csv) = &config.data.csv {
        let path = if csv.is_absolute() {
            csv.clone()
        } else {
            resolved.base_dir.join(csv)
        };
        read_csv(&path)?
    } else {
        generate_synthetic(config.data.synth.as_ref().unwrap())?
    };
    schema.resolve_columns(table.column_labels())?;
    Ok((table, schema))
}

#[derive(Serialize)]
struct SynthManifest<'a> {
    rng: &'static str,
    config_hash: &'a str,
    seed: u64,
    rows: usize,
    cols: usize,
    dataset_fingerprint: String,
}

pub struct SynthOutputs {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Writes the synthetic dataset plus a provenance manifest.
pub fn cmd_synth(resolved: &ResolvedConfig) -> Result<SynthOutputs> {
    let synth = resolved.config.data.synth.as_ref().ok_or_else(|| {
        CsError::InvalidConfig("synth command needs a [data.synth] section".into())
    })?;
    let table = generate_synthetic(synth)?;
    let dir = ensure_out_dir(resolved)?;
    let csv = dir.join("dataset.csv");
    write_csv(&table, &csv)?;
    let manifest_path = dir.join("synth_manifest.json");
    let manifest = SynthManifest {
        rng: RNG_ALGORITHM,
        config_hash: &resolved.config_hash,
        seed: synth.seed,
        rows: table.rows(),
        cols: table.cols(),
        dataset_fingerprint: table.fingerprint(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;
    info!("wrote {} ({} x {})", csv.display(), table.rows(), table.cols());
    Ok(SynthOutputs {
        csv,
        manifest: manifest_path,
    })
}

/// Trains the selected network variant and writes the model file.
pub fn cmd_train(resolved: &ResolvedConfig) -> Result<PathBuf> {
    let config = &resolved.config;
    let variant = config.variant()?;
    let net_variant = variant.net_variant().ok_or_else(|| {
        CsError::InvalidConfig(format!(
            "variant {} has no trainable network; pick csnet1, csnet2 or csnet3",
            variant.as_str()
        ))
    })?;
    let (table, schema) = load_table(resolved)?;
    let cuboid = cuboid_from_table(&table, &schema)?;
    let net_config = config
        .model_section()?
        .to_net_config(net_variant, config.seed);
    let run = train(&cuboid, &net_config)?;
    let dir = ensure_out_dir(resolved)?;
    let path = dir.join(format!("model_{}.bin", variant.as_str()));
    save_model(&run.model, &path)?;
    info!(
        "trained {} for {} epochs (final loss {:.6}); wrote {}",
        variant.as_str(),
        net_config.epochs,
        run.epoch_losses.last().copied().unwrap_or(f64::NAN),
        path.display()
    );
    Ok(path)
}

/// Forecasts the trailing window of the configured dataset with a trained
/// model; ensemble variants blend in a VAR forecast at the configured
/// weight. Emits a CSV with one row per horizon step.
pub fn cmd_forecast(resolved: &ResolvedConfig, model_path: &Path) -> Result<PathBuf> {
    let config = &resolved.config;
    let variant = config.variant()?;
    let (table, schema) = load_table(resolved)?;
    let cuboid = cuboid_from_table(&table, &schema)?;

    let (model, stored_fp) = load_model(model_path)?;
    if model.norm.e_len() != cuboid.e_len() || model.norm.r_len() != cuboid.r_len() {
        return Err(CsError::IncompatibleModel(format!(
            "model was trained on a {}x{} grid, data is {}x{}",
            model.norm.e_len(),
            model.norm.r_len(),
            cuboid.e_len(),
            cuboid.r_len()
        )));
    }
    if let (Some(section), Some(net_variant)) = (&config.model, variant.net_variant()) {
        let expected = model_fingerprint(
            &section.to_net_config(net_variant, model.config.seed),
            cuboid.e_len(),
            cuboid.r_len(),
        );
        if expected != stored_fp {
            return Err(CsError::IncompatibleModel(format!(
                "config hash mismatch: model file carries {stored_fp}, config implies {expected}"
            )));
        }
    }

    let clamp = schema.count_data;
    let net_forecast = predict(&cuboid, &model, clamp)?;
    let forecast = if variant.blends_var() {
        let var = config.var.clone().unwrap_or_default().to_settings();
        let weight = config
            .ensemble
            .clone()
            .unwrap_or_default()
            .forecast_weight;
        let var_forecast = var_forecast_cuboid(
            &cuboid,
            var.lag_order,
            var.ridge,
            model.config.horizon,
            var.blocking,
        )?;
        blend(&net_forecast, &var_forecast, EnsembleWeight::new(weight)?)?
    } else {
        net_forecast
    };

    let dir = ensure_out_dir(resolved)?;
    let path = dir.join(format!("forecast_{}.csv", variant.as_str()));
    write_forecast_csv(&forecast, &table, &path)?;
    info!("wrote {}", path.display());
    Ok(path)
}

/// Forecast CSV: same column layout as the dataset, rows labeled by
/// horizon step (`h0001`, `h0002`, ...).
fn write_forecast_csv(
    forecast: &ForecastBlock,
    table: &SeriesTable,
    path: &Path,
) -> Result<()> {
    let schema_cols = table.column_labels();
    if forecast.e_len() * forecast.r_len() != schema_cols.len() {
        return Err(CsError::ShapeMismatch(
            "forecast grid does not match the table columns".into(),
        ));
    }
    // Column order must mirror the source table; map through coordinates.
    let timestamps: Vec<String> = (0..forecast.horizon())
        .map(|h| format!("h{:04}", h + 1))
        .collect();
    let mut values = Vec::with_capacity(forecast.values().len());
    for h in 0..forecast.horizon() {
        for e in 0..forecast.e_len() {
            for r in 0..forecast.r_len() {
                values.push(forecast.get(h, e, r));
            }
        }
    }
    let out = SeriesTable::new(timestamps, schema_cols.to_vec(), values)?;
    write_csv(&out, path)
}

/// Runs the configured protocol for the selected variant and writes the
/// report JSON.
pub fn cmd_backtest(resolved: &ResolvedConfig) -> Result<PathBuf> {
    let config = &resolved.config;
    let variant = config.variant()?;
    let protocol = config.protocol.ok_or_else(|| {
        CsError::InvalidConfig("missing required [protocol] section".into())
    })?;
    let (table, schema) = load_table(resolved)?;
    let clamp = schema.count_data;

    let factory = match variant {
        VariantName::Persistence => ForecasterSpec::Persistence,
        VariantName::Var => {
            ForecasterSpec::Var(config.var.clone().unwrap_or_default().to_settings())
        }
        VariantName::Csnet1 => ForecasterSpec::CsNet1 {
            config: config
                .model_section()?
                .to_net_config(CsNetVariant::ConvOnly, config.seed),
            clamp_nonnegative: clamp,
        },
        VariantName::Csnet2 => ForecasterSpec::CsNet2 {
            config: config
                .model_section()?
                .to_net_config(CsNetVariant::ConvPlusVar, config.seed),
            settings: config.ensemble_settings(),
            clamp_nonnegative: clamp,
        },
        VariantName::Csnet3 => ForecasterSpec::CsNet3 {
            config: config
                .model_section()?
                .to_net_config(CsNetVariant::Full, config.seed),
            settings: config.ensemble_settings(),
            clamp_nonnegative: clamp,
        },
    };

    let report = run_backtest(
        &table,
        &schema,
        &factory,
        &protocol,
        config.seed,
        &resolved.config_hash,
    )?;
    let dir = ensure_out_dir(resolved)?;
    let path = dir.join(format!("report_{}.json", variant.as_str()));
    write_report(&report, &path)?;
    info!(
        "backtested {} over {} windows (aggregate MASE {:?}); wrote {}",
        variant.as_str(),
        report.windows.len(),
        report.aggregate.mase,
        path.display()
    );
    Ok(path)
}

/// Ranks previously written reports; returns the CSV text and optionally
/// writes it.
pub fn cmd_compare(report_paths: &[PathBuf], out: Option<&Path>) -> Result<String> {
    if report_paths.is_empty() {
        return Err(CsError::InvalidConfig(
            "compare needs at least one report path".into(),
        ));
    }
    let reports = report_paths
        .iter()
        .map(|p| read_report(p))
        .collect::<Result<Vec<_>>>()?;
    let table = compare(&reports)?;
    let csv = table.to_csv_string();
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
        }
        std::fs::write(path, &csv).map_err(io_err(path))?;
    }
    Ok(csv)
}
