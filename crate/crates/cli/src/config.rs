//! Run configuration: one TOML file drives every command; command-line
//! flags override file values (flag > file > default).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use csforecast::data::{
    numbered_levels, synth_schema, Dimension, InternalAxis, StructuralSchema, SynthConfig,
};
use csforecast::forecasters::{EnsembleSettings, VarSettings};
use csforecast::model::{CsNetConfig, CsNetVariant};
use csforecast::report::BacktestProtocol;
use csforecast::var::Blocking;
use csforecast::{CsError, Result};

/// CLI-visible forecaster lineup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Csnet1,
    Csnet2,
    Csnet3,
    Var,
    Persistence,
}

impl VariantName {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csnet1" => Ok(VariantName::Csnet1),
            "csnet2" => Ok(VariantName::Csnet2),
            "csnet3" => Ok(VariantName::Csnet3),
            "var" => Ok(VariantName::Var),
            "persistence" => Ok(VariantName::Persistence),
            other => Err(CsError::InvalidConfig(format!(
                "unknown variant {other:?}; expected csnet1|csnet2|csnet3|var|persistence"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VariantName::Csnet1 => "csnet1",
            VariantName::Csnet2 => "csnet2",
            VariantName::Csnet3 => "csnet3",
            VariantName::Var => "var",
            VariantName::Persistence => "persistence",
        }
    }

    /// Which network the variant trains, if any.
    pub fn net_variant(self) -> Option<CsNetVariant> {
        match self {
            VariantName::Csnet1 => Some(CsNetVariant::ConvOnly),
            VariantName::Csnet2 => Some(CsNetVariant::ConvPlusVar),
            VariantName::Csnet3 => Some(CsNetVariant::Full),
            VariantName::Var | VariantName::Persistence => None,
        }
    }

    pub fn blends_var(self) -> bool {
        matches!(self, VariantName::Csnet2 | VariantName::Csnet3)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
}

/// Level lists may be written out or generated from a prefix + count
/// (zero-padded, lexicographically ordered).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelSpec {
    List(Vec<String>),
    Pattern { prefix: String, count: usize },
}

impl LevelSpec {
    fn levels(&self) -> Vec<String> {
        match self {
            LevelSpec::List(levels) => levels.clone(),
            LevelSpec::Pattern { prefix, count } => numbered_levels(prefix, *count),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionSection {
    pub name: String,
    pub axis: InternalAxis,
    pub levels: LevelSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSection {
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default)]
    pub count_data: bool,
    pub dimensions: Vec<DimensionSection>,
}

fn default_delimiter() -> String {
    "|".into()
}

impl SchemaSection {
    pub fn to_schema(&self) -> Result<StructuralSchema> {
        let dims = self
            .dimensions
            .iter()
            .map(|d| Dimension {
                name: d.name.clone(),
                levels: d.levels.levels(),
                axis: d.axis,
            })
            .collect();
        let mut schema = StructuralSchema::new(&self.delimiter, dims)?;
        schema.count_data = self.count_data;
        Ok(schema)
    }
}

/// Network hyperparameters; the architecture variant comes from the
/// run-level `variant` selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub window: usize,
    pub horizon: usize,
    #[serde(default = "dm::n_kernels")]
    pub n_kernels: usize,
    #[serde(default = "dm::k_t")]
    pub k_t: usize,
    #[serde(default = "dm::k_s")]
    pub k_s: usize,
    #[serde(default = "dm::d_model")]
    pub d_model: usize,
    #[serde(default = "dm::n_heads")]
    pub n_heads: usize,
    #[serde(default = "dm::encoder_layers")]
    pub encoder_layers: usize,
    #[serde(default = "dm::mlp_hidden")]
    pub mlp_hidden: Vec<usize>,
    #[serde(default = "dm::dropout")]
    pub dropout: f64,
    #[serde(default = "dm::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "dm::l2")]
    pub l2: f64,
    #[serde(default = "dm::epochs")]
    pub epochs: usize,
    #[serde(default = "dm::batch_size")]
    pub batch_size: usize,
}

mod dm {
    pub fn n_kernels() -> usize {
        4
    }
    pub fn k_t() -> usize {
        3
    }
    pub fn k_s() -> usize {
        3
    }
    pub fn d_model() -> usize {
        16
    }
    pub fn n_heads() -> usize {
        2
    }
    pub fn encoder_layers() -> usize {
        1
    }
    pub fn mlp_hidden() -> Vec<usize> {
        vec![64]
    }
    pub fn dropout() -> f64 {
        0.1
    }
    pub fn learning_rate() -> f64 {
        1e-3
    }
    pub fn l2() -> f64 {
        1e-4
    }
    pub fn epochs() -> usize {
        50
    }
    pub fn batch_size() -> usize {
        8
    }
}

impl ModelSection {
    pub fn to_net_config(&self, variant: CsNetVariant, seed: u64) -> CsNetConfig {
        CsNetConfig {
            variant,
            window: self.window,
            horizon: self.horizon,
            n_kernels: self.n_kernels,
            k_t: self.k_t,
            k_s: self.k_s,
            d_model: self.d_model,
            n_heads: self.n_heads,
            encoder_layers: self.encoder_layers,
            mlp_hidden: self.mlp_hidden.clone(),
            dropout: self.dropout,
            learning_rate: self.learning_rate,
            l2: self.l2,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockingName {
    PerRegion,
    PerEvent,
}

impl From<BlockingName> for Blocking {
    fn from(b: BlockingName) -> Blocking {
        match b {
            BlockingName::PerRegion => Blocking::PerRegion,
            BlockingName::PerEvent => Blocking::PerEvent,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarSection {
    #[serde(default = "dv::lag_order")]
    pub lag_order: usize,
    #[serde(default = "dv::ridge")]
    pub ridge: f64,
    #[serde(default = "dv::blocking")]
    pub blocking: BlockingName,
}

mod dv {
    use super::BlockingName;
    pub fn lag_order() -> usize {
        2
    }
    pub fn ridge() -> f64 {
        0.1
    }
    pub fn blocking() -> BlockingName {
        BlockingName::PerRegion
    }
}

impl Default for VarSection {
    fn default() -> Self {
        VarSection {
            lag_order: dv::lag_order(),
            ridge: dv::ridge(),
            blocking: dv::blocking(),
        }
    }
}

impl VarSection {
    pub fn to_settings(&self) -> VarSettings {
        VarSettings {
            lag_order: self.lag_order,
            ridge: self.ridge,
            blocking: self.blocking.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "de::validation_folds")]
    pub validation_folds: usize,
    /// Blend weight used by one-shot `forecast` runs (backtests select it
    /// per window on validation folds instead).
    #[serde(default = "de::forecast_weight")]
    pub forecast_weight: f64,
}

mod de {
    pub fn validation_folds() -> usize {
        2
    }
    pub fn forecast_weight() -> f64 {
        0.5
    }
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            validation_folds: de::validation_folds(),
            forecast_weight: de::forecast_weight(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub variant: Option<VariantName>,
    pub data: DataSection,
    #[serde(default)]
    pub schema: Option<SchemaSection>,
    #[serde(default)]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub var: Option<VarSection>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default)]
    pub protocol: Option<BacktestProtocol>,
}

/// Command-line overrides (flag > file > default).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub variant: Option<String>,
}

/// A run configuration after applying overrides, plus its canonical hash.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: RunConfig,
    pub config_hash: String,
    /// Directory the config file lives in; relative data paths resolve
    /// against it.
    pub base_dir: PathBuf,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CsError::IoFailure {
        path: path.display().to_string(),
        source,
    })?;
    let mut config: RunConfig =
        toml::from_str(&text).map_err(|e| CsError::InvalidConfig(e.to_string()))?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.out_dir = Some(out.clone());
    }
    if let Some(variant) = &overrides.variant {
        config.variant = Some(VariantName::parse(variant)?);
    }
    config.validate()?;
    let config_hash = hash_config(&config);
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(ResolvedConfig {
        config,
        config_hash,
        base_dir,
    })
}

/// Canonical sha-256 over the resolved config's JSON form (struct field
/// order is fixed, so the hash is stable). The output directory is not part
/// of the experiment's identity and is excluded, so the same run written to
/// two places carries the same hash.
pub fn hash_config(config: &RunConfig) -> String {
    let mut semantic = config.clone();
    semantic.out_dir = None;
    let canonical = serde_json::to_string(&semantic).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.data.csv, &self.data.synth) {
            (Some(_), Some(_)) => Err(CsError::InvalidConfig(
                "specify exactly one data source: data.csv or data.synth, not both".into(),
            )),
            (None, None) => Err(CsError::InvalidConfig(
                "specify exactly one data source: data.csv or data.synth".into(),
            )),
            _ => Ok(()),
        }?;
        if let Some(synth) = &self.data.synth {
            synth.validate()?;
        }
        if self.data.csv.is_some() && self.schema.is_none() {
            return Err(CsError::InvalidConfig(
                "csv data needs a [schema] section".into(),
            ));
        }
        if let (Some(model), Some(protocol)) = (&self.model, &self.protocol) {
            if model.horizon != protocol.horizon() {
                return Err(CsError::InvalidConfig(format!(
                    "model.horizon {} != protocol horizon {}",
                    model.horizon,
                    protocol.horizon()
                )));
            }
        }
        Ok(())
    }

    /// The schema: explicit section, or the synth default grid.
    pub fn schema(&self) -> Result<StructuralSchema> {
        if let Some(section) = &self.schema {
            return section.to_schema();
        }
        match &self.data.synth {
            Some(synth) => Ok(synth_schema(synth.e_len, synth.r_len)),
            None => Err(CsError::InvalidConfig("no schema available".into())),
        }
    }

    pub fn variant(&self) -> Result<VariantName> {
        self.variant.ok_or_else(|| {
            CsError::InvalidConfig(
                "no variant selected (config `variant` or --variant)".into(),
            )
        })
    }

    pub fn model_section(&self) -> Result<&ModelSection> {
        self.model.as_ref().ok_or_else(|| {
            CsError::InvalidConfig("missing required [model] section".into())
        })
    }

    pub fn ensemble_settings(&self) -> EnsembleSettings {
        EnsembleSettings {
            var: self
                .var
                .clone()
                .unwrap_or_default()
                .to_settings(),
            validation_folds: self
                .ensemble
                .clone()
                .unwrap_or_default()
                .validation_folds,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}
