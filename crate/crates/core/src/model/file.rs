//! Versioned binary model files.
//!
//! Layout (all integers u64 little-endian, all reals IEEE-754 float64
//! little-endian; full table in `docs/model_format.md`):
//!
//! ```text
//! magic "CSNET01" | variant u8 | config ints | mlp widths | config reals |
//! epochs/batch/seed | e_len r_len | fingerprint (16 ascii hex bytes) |
//! norm means | norm stds | param count | flat parameters
//! ```
//!
//! Parameters are stored in [`CsNetParams::push_flat`] order.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{CsError, Result};
use crate::model::{CsNetConfig, CsNetParams, CsNetVariant, NormStats, TrainedCsNet};
use crate::rng::seeded_rng;

const MAGIC: &[u8; 7] = b"CSNET01";
const FINGERPRINT_LEN: usize = 16;

/// Hex fingerprint binding a model file to its configuration and data grid.
pub fn model_fingerprint(config: &CsNetConfig, e_len: usize, r_len: usize) -> String {
    let mut hasher = Sha256::new();
    let canonical = serde_json::to_string(config).expect("config serializes");
    hasher.update(canonical.as_bytes());
    hasher.update((e_len as u64).to_le_bytes());
    hasher.update((r_len as u64).to_le_bytes());
    let digest = hasher.finalize();
    digest[..FINGERPRINT_LEN / 2]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CsError + '_ {
    move |source| CsError::IoFailure {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_model(model: &TrainedCsNet, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    let c = &model.config;
    buf.push(match c.variant {
        CsNetVariant::ConvOnly => 0,
        CsNetVariant::ConvPlusVar => 1,
        CsNetVariant::Full => 2,
    });
    for v in [
        c.window,
        c.horizon,
        c.n_kernels,
        c.k_t,
        c.k_s,
        c.d_model,
        c.n_heads,
        c.encoder_layers,
        c.mlp_hidden.len(),
    ] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for w in &c.mlp_hidden {
        buf.extend_from_slice(&(*w as u64).to_le_bytes());
    }
    for v in [c.dropout, c.learning_rate, c.l2] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in [c.epochs as u64, c.batch_size as u64, c.seed] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let (e_len, r_len) = (model.norm.e_len(), model.norm.r_len());
    buf.extend_from_slice(&(e_len as u64).to_le_bytes());
    buf.extend_from_slice(&(r_len as u64).to_le_bytes());
    let fp = model_fingerprint(c, e_len, r_len);
    debug_assert_eq!(fp.len(), FINGERPRINT_LEN);
    buf.extend_from_slice(fp.as_bytes());
    for v in model.norm.mean().iter().chain(model.norm.std()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let flat = model.params.to_flat();
    buf.extend_from_slice(&(flat.len() as u64).to_le_bytes());
    for v in &flat {
        buf.extend_from_slice(&v.to_le_bytes());
    }

    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&buf).map_err(io_err(path))?;
    Ok(())
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(CsError::IncompatibleModel(
                "model file truncated".into(),
            ));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .map_err(|_| CsError::IncompatibleModel(format!("field {v} exceeds usize")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Loads and shape-checks a model file; also returns its fingerprint.
pub fn load_model(path: &Path) -> Result<(TrainedCsNet, String)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(io_err(path))?
        .read_to_end(&mut bytes)
        .map_err(io_err(path))?;
    let mut r = Reader {
        data: &bytes,
        pos: 0,
    };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(CsError::IncompatibleModel(format!(
            "{} is not a CSNET01 model file",
            path.display()
        )));
    }
    let variant = match r.take(1)?[0] {
        0 => CsNetVariant::ConvOnly,
        1 => CsNetVariant::ConvPlusVar,
        2 => CsNetVariant::Full,
        tag => {
            return Err(CsError::IncompatibleModel(format!(
                "unknown variant tag {tag}"
            )))
        }
    };
    let window = r.usize()?;
    let horizon = r.usize()?;
    let n_kernels = r.usize()?;
    let k_t = r.usize()?;
    let k_s = r.usize()?;
    let d_model = r.usize()?;
    let n_heads = r.usize()?;
    let encoder_layers = r.usize()?;
    let n_hidden = r.usize()?;
    let mlp_hidden = (0..n_hidden)
        .map(|_| r.usize())
        .collect::<Result<Vec<_>>>()?;
    let dropout = r.f64()?;
    let learning_rate = r.f64()?;
    let l2 = r.f64()?;
    let epochs = r.usize()?;
    let batch_size = r.usize()?;
    let seed = r.u64()?;
    let config = CsNetConfig {
        variant,
        window,
        horizon,
        n_kernels,
        k_t,
        k_s,
        d_model,
        n_heads,
        encoder_layers,
        mlp_hidden,
        dropout,
        learning_rate,
        l2,
        epochs,
        batch_size,
        seed,
    };
    config
        .validate()
        .map_err(|e| CsError::IncompatibleModel(format!("stored config invalid: {e}")))?;

    let e_len = r.usize()?;
    let r_len = r.usize()?;
    let stored_fp = String::from_utf8(r.take(FINGERPRINT_LEN)?.to_vec())
        .map_err(|_| CsError::IncompatibleModel("corrupt fingerprint".into()))?;
    let expected_fp = model_fingerprint(&config, e_len, r_len);
    if stored_fp != expected_fp {
        return Err(CsError::IncompatibleModel(format!(
            "fingerprint {stored_fp} does not match stored config ({expected_fp})"
        )));
    }
    let mean = r.f64_vec(e_len * r_len)?;
    let std = r.f64_vec(e_len * r_len)?;
    let norm = NormStats::from_raw(e_len, r_len, mean, std)?;

    let n_params = r.usize()?;
    let flat = r.f64_vec(n_params)?;
    if r.pos != bytes.len() {
        return Err(CsError::IncompatibleModel(
            "trailing bytes after parameters".into(),
        ));
    }
    // Rebuild the parameter skeleton, then overwrite with the stored values.
    let mut skeleton_rng = seeded_rng(0);
    let mut params = CsNetParams::init(&config, e_len, &mut skeleton_rng)?;
    if params.param_len() != n_params {
        return Err(CsError::IncompatibleModel(format!(
            "parameter count {n_params} does not match config ({})",
            params.param_len()
        )));
    }
    params.read_flat(&flat)?;
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(CsError::IncompatibleModel(
            "non-finite parameter values".into(),
        ));
    }

    Ok((
        TrainedCsNet {
            config,
            params,
            norm,
        },
        stored_fp,
    ))
}
