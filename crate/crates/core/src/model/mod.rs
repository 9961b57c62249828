//! The cross-sectional forecasting network.
//!
//! Pipeline per input window (time x event x region):
//! 1. Full variant only: at every time step, each region's event vector is
//!    embedded to `d_model`, a self-attention encoder runs across the region
//!    tokens, and the result is projected back to event space and added to
//!    the raw window (a residual, so the untrained encoder starts as a
//!    no-op perturbation), producing an enriched window of the same shape.
//! 2. For every region, the time x event cross-section is convolved with the
//!    shared kernel bank; feature maps are mean-pooled over time and
//!    concatenated into one feature vector per region.
//! 3. A shared MLP head (dropout on its input while training) maps each
//!    region's features to all `horizon x event` outputs at once.
//!
//! Training: per-series z-score normalization fitted on the training range,
//! stride-1 (window, horizon) sample pairs, mini-batch Adam on an MSE
//! objective with an L2 penalty on weights (biases exempt).

mod adam;
mod file;

pub use adam::{adam_step, AdamState};
pub use file::{load_model, model_fingerprint, save_model};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CsError, Result};
use crate::nn::{
    attention_backward_acc, attention_forward_tape, conv2d_backward, conv2d_forward_tape,
    dropout_mask, layer_norm_backward, layer_norm_forward, mlp_backward_acc, mlp_forward_tape,
    AttentionParams, AttentionTape, Conv2dTape, DenseLayer, FlatCursor, KernelBank, Mat,
    MlpParams, MlpTape,
};
use crate::rng::seeded_rng;
use crate::tensor::{slice_spatial, time_window, DataCuboid, ForecastBlock, Panel};

/// Ablation variants: convolution transform only, the same network destined
/// for a VAR blend, or the full model with the attention encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsNetVariant {
    ConvOnly,
    ConvPlusVar,
    Full,
}

impl CsNetVariant {
    /// Whether the network itself runs the attention encoder.
    pub fn uses_attention(self) -> bool {
        matches!(self, CsNetVariant::Full)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsNetConfig {
    pub variant: CsNetVariant,
    pub window: usize,
    pub horizon: usize,
    #[serde(default = "d::n_kernels")]
    pub n_kernels: usize,
    #[serde(default = "d::k_t")]
    pub k_t: usize,
    #[serde(default = "d::k_s")]
    pub k_s: usize,
    #[serde(default = "d::d_model")]
    pub d_model: usize,
    #[serde(default = "d::n_heads")]
    pub n_heads: usize,
    #[serde(default = "d::encoder_layers")]
    pub encoder_layers: usize,
    #[serde(default = "d::mlp_hidden")]
    pub mlp_hidden: Vec<usize>,
    #[serde(default = "d::dropout")]
    pub dropout: f64,
    #[serde(default = "d::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "d::l2")]
    pub l2: f64,
    #[serde(default = "d::epochs")]
    pub epochs: usize,
    #[serde(default = "d::batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

mod d {
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

impl CsNetConfig {
    pub fn new(variant: CsNetVariant, window: usize, horizon: usize) -> Self {
        CsNetConfig {
            variant,
            window,
            horizon,
            n_kernels: d::n_kernels(),
            k_t: d::k_t(),
            k_s: d::k_s(),
            d_model: d::d_model(),
            n_heads: d::n_heads(),
            encoder_layers: d::encoder_layers(),
            mlp_hidden: d::mlp_hidden(),
            dropout: d::dropout(),
            learning_rate: d::learning_rate(),
            l2: d::l2(),
            epochs: d::epochs(),
            batch_size: d::batch_size(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(CsError::InvalidConfig("horizon must be >= 1".into()));
        }
        if self.window <= self.k_t.max(self.horizon) {
            return Err(CsError::InvalidConfig(format!(
                "window {} must exceed max(k_t, horizon) = {}",
                self.window,
                self.k_t.max(self.horizon)
            )));
        }
        if self.k_t.is_multiple_of(2) || self.k_s.is_multiple_of(2) {
            return Err(CsError::InvalidConfig("kernel extents must be odd".into()));
        }
        if self.n_kernels < 1 {
            return Err(CsError::InvalidConfig("need at least one kernel".into()));
        }
        if self.variant.uses_attention() {
            if self.d_model == 0 || self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
                return Err(CsError::InvalidConfig(format!(
                    "d_model {} must be a positive multiple of n_heads {}",
                    self.d_model, self.n_heads
                )));
            }
            if self.encoder_layers < 1 {
                return Err(CsError::InvalidConfig(
                    "full variant needs at least one encoder layer".into(),
                ));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(CsError::InvalidRate(self.dropout));
        }
        if self.learning_rate <= 0.0 || self.l2 < 0.0 {
            return Err(CsError::InvalidConfig(
                "learning rate must be > 0 and l2 >= 0".into(),
            ));
        }
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(CsError::InvalidConfig(
                "epochs and batch size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One encoder layer: attention sublayer (add&norm inside) plus a
/// position-wise feed-forward sublayer with its own add&norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayerParams {
    pub attn: AttentionParams,
    pub ffn: MlpParams,
}

/// All trainable weights. The attention stack is present only in the full
/// variant. Flattening order (also the model-file order): embed, encoder
/// layers (attention then feed-forward each), unembed, kernel bank, head.
#[derive(Debug, Clone, PartialEq)]
pub struct CsNetParams {
    pub embed: Option<DenseLayer>,
    pub encoder: Vec<EncoderLayerParams>,
    pub unembed: Option<DenseLayer>,
    pub bank: KernelBank,
    pub head: MlpParams,
}

impl CsNetParams {
    pub fn init(config: &CsNetConfig, e_len: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        if e_len < 1 {
            return Err(CsError::ShapeMismatch("e_len must be >= 1".into()));
        }
        let (embed, encoder, unembed) = if config.variant.uses_attention() {
            let embed = DenseLayer {
                w: Mat::init_uniform(config.d_model, e_len, rng),
                b: vec![0.0; config.d_model],
            };
            let encoder = (0..config.encoder_layers)
                .map(|_| {
                    Ok(EncoderLayerParams {
                        attn: AttentionParams::init(config.d_model, config.n_heads, rng)?,
                        ffn: MlpParams::init(
                            &[config.d_model, 2 * config.d_model, config.d_model],
                            rng,
                        )?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let unembed = DenseLayer {
                w: Mat::init_uniform(e_len, config.d_model, rng),
                b: vec![0.0; e_len],
            };
            (Some(embed), encoder, Some(unembed))
        } else {
            (None, Vec::new(), None)
        };
        let bank = KernelBank::init(config.n_kernels, config.k_t, config.k_s, rng)?;
        let mut widths = vec![config.n_kernels * e_len];
        widths.extend_from_slice(&config.mlp_hidden);
        widths.push(config.horizon * e_len);
        let head = MlpParams::init(&widths, rng)?;
        Ok(CsNetParams {
            embed,
            encoder,
            unembed,
            bank,
            head,
        })
    }

    pub fn zeros_like(&self) -> Self {
        CsNetParams {
            embed: self.embed.as_ref().map(|l| DenseLayer {
                w: Mat::zeros(l.w.rows(), l.w.cols()),
                b: vec![0.0; l.b.len()],
            }),
            encoder: self
                .encoder
                .iter()
                .map(|l| EncoderLayerParams {
                    attn: l.attn.zeros_like(),
                    ffn: l.ffn.zeros_like(),
                })
                .collect(),
            unembed: self.unembed.as_ref().map(|l| DenseLayer {
                w: Mat::zeros(l.w.rows(), l.w.cols()),
                b: vec![0.0; l.b.len()],
            }),
            bank: KernelBank::zeros(self.bank.n_kernels(), self.bank.k_t(), self.bank.k_s())
                .unwrap(),
            head: self.head.zeros_like(),
        }
    }

    /// Event-axis width the parameters were built for.
    pub fn e_len(&self) -> usize {
        self.head.input_width() / self.bank.n_kernels()
    }

    pub fn param_len(&self) -> usize {
        let mut n = 0;
        if let Some(l) = &self.embed {
            n += l.w.rows() * l.w.cols() + l.b.len();
        }
        for layer in &self.encoder {
            n += layer.attn.param_len() + layer.ffn.param_len();
        }
        if let Some(l) = &self.unembed {
            n += l.w.rows() * l.w.cols() + l.b.len();
        }
        n += self.bank.param_len();
        n += self.head.param_len();
        n
    }

    pub fn push_flat(&self, out: &mut Vec<f64>) {
        if let Some(l) = &self.embed {
            l.w.push_flat(out);
            out.extend_from_slice(&l.b);
        }
        for layer in &self.encoder {
            layer.attn.push_flat(out);
            layer.ffn.push_flat(out);
        }
        if let Some(l) = &self.unembed {
            l.w.push_flat(out);
            out.extend_from_slice(&l.b);
        }
        self.bank.push_flat(out);
        self.head.push_flat(out);
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_len());
        self.push_flat(&mut out);
        out
    }

    pub fn read_flat(&mut self, flat: &[f64]) -> Result<()> {
        let mut cursor = FlatCursor::new(flat);
        if let Some(l) = &mut self.embed {
            l.w.read_flat(&mut cursor)?;
            cursor.take_into(&mut l.b)?;
        }
        for layer in &mut self.encoder {
            layer.attn.read_flat(&mut cursor)?;
            layer.ffn.read_flat(&mut cursor)?;
        }
        if let Some(l) = &mut self.unembed {
            l.w.read_flat(&mut cursor)?;
            cursor.take_into(&mut l.b)?;
        }
        self.bank.read_flat(&mut cursor)?;
        self.head.read_flat(&mut cursor)?;
        cursor.finish()
    }

    /// Sum of squared weights; biases excluded.
    pub fn weight_sq_sum(&self) -> f64 {
        let mut acc = 0.0;
        if let Some(l) = &self.embed {
            acc += l.w.data().iter().map(|w| w * w).sum::<f64>();
        }
        for layer in &self.encoder {
            acc += layer.attn.weight_sq_sum() + layer.ffn.weight_sq_sum();
        }
        if let Some(l) = &self.unembed {
            acc += l.w.data().iter().map(|w| w * w).sum::<f64>();
        }
        acc + self.bank.weight_sq_sum() + self.head.weight_sq_sum()
    }

    /// `self.weights += scale * other.weights`, biases untouched.
    /// Applies the L2 term's gradient when `self` holds gradients.
    pub fn add_scaled_weights(&mut self, other: &Self, scale: f64) {
        if let (Some(a), Some(b)) = (&mut self.embed, &other.embed) {
            a.w.add_scaled(&b.w, scale);
        }
        for (a, b) in self.encoder.iter_mut().zip(&other.encoder) {
            a.attn.add_scaled_weights(&b.attn, scale);
            a.ffn.add_scaled_weights(&b.ffn, scale);
        }
        if let (Some(a), Some(b)) = (&mut self.unembed, &other.unembed) {
            a.w.add_scaled(&b.w, scale);
        }
        self.bank.add_scaled_weights(&other.bank, scale);
        self.head.add_scaled_weights(&other.head, scale);
    }

    fn check_window(&self, window: &DataCuboid, config: &CsNetConfig) -> Result<()> {
        if window.t_len() != config.window {
            return Err(CsError::ShapeMismatch(format!(
                "window has {} steps, config expects {}",
                window.t_len(),
                config.window
            )));
        }
        if window.e_len() != self.e_len() {
            return Err(CsError::ShapeMismatch(format!(
                "window e_len {} != model e_len {}",
                window.e_len(),
                self.e_len()
            )));
        }
        if config.variant.uses_attention() != self.embed.is_some() {
            return Err(CsError::ShapeMismatch(
                "variant and parameter layout disagree on attention".into(),
            ));
        }
        Ok(())
    }
}

/// Dropout behavior for a forward pass.
pub enum ForwardMode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

struct EncoderLayerTape {
    attn: AttentionTape,
    ffn: Vec<MlpTape>,
    y2: Vec<Vec<f64>>,
    inv_std: Vec<f64>,
}

struct TimeStepTape {
    tokens: Vec<Vec<f64>>,
    layers: Vec<EncoderLayerTape>,
    encoder_out: Vec<Vec<f64>>,
}

struct RegionTape {
    conv: Conv2dTape,
    mask: Option<Vec<f64>>,
    mlp: MlpTape,
}

/// Forward intermediates for [`backward`].
pub struct ModelTape {
    time: Vec<TimeStepTape>,
    regions: Vec<RegionTape>,
    shape: (usize, usize, usize),
}

/// Runs the pipeline on one window (normalized scale).
pub fn forward(
    window: &DataCuboid,
    params: &CsNetParams,
    config: &CsNetConfig,
    mode: ForwardMode,
) -> Result<ForecastBlock> {
    let (out, _) = forward_tape(window, params, config, mode)?;
    Ok(out)
}

pub fn forward_tape(
    window: &DataCuboid,
    params: &CsNetParams,
    config: &CsNetConfig,
    mode: ForwardMode,
) -> Result<(ForecastBlock, ModelTape)> {
    params.check_window(window, config)?;
    let (w, e_len, r_len) = (window.t_len(), window.e_len(), window.r_len());
    let mut dropout_rng = match mode {
        ForwardMode::Eval => None,
        ForwardMode::Train(rng) => Some(rng),
    };

    // Spatial enrichment: attention across the region tokens, per time step.
    let mut time_tapes = Vec::new();
    let enriched = if config.variant.uses_attention() {
        let embed = params.embed.as_ref().unwrap();
        let unembed = params.unembed.as_ref().unwrap();
        let mut values = vec![0.0; w * e_len * r_len];
        for t in 0..w {
            let tokens: Vec<Vec<f64>> = (0..r_len)
                .map(|r| (0..e_len).map(|e| window.get(t, e, r)).collect())
                .collect();
            let mut h: Vec<Vec<f64>> = tokens
                .iter()
                .map(|x| {
                    let mut v = embed.w.matvec(x);
                    for (vi, b) in v.iter_mut().zip(&embed.b) {
                        *vi += b;
                    }
                    v
                })
                .collect();
            let mut layer_tapes = Vec::with_capacity(params.encoder.len());
            for layer in &params.encoder {
                let (y1, attn_tape) = attention_forward_tape(&h, &layer.attn)?;
                let mut ffn_tapes = Vec::with_capacity(r_len);
                let mut y2 = Vec::with_capacity(r_len);
                let mut inv_std = Vec::with_capacity(r_len);
                for token in &y1 {
                    let (f, tape) = mlp_forward_tape(token, &layer.ffn)?;
                    let u: Vec<f64> = token.iter().zip(&f).map(|(a, b)| a + b).collect();
                    let (norm, s) = layer_norm_forward(&u);
                    ffn_tapes.push(tape);
                    y2.push(norm);
                    inv_std.push(s);
                }
                layer_tapes.push(EncoderLayerTape {
                    attn: attn_tape,
                    ffn: ffn_tapes,
                    y2: y2.clone(),
                    inv_std,
                });
                h = y2;
            }
            for (r, hr) in h.iter().enumerate() {
                let mut y = unembed.w.matvec(hr);
                for (yi, b) in y.iter_mut().zip(&unembed.b) {
                    *yi += b;
                }
                for (e, ye) in y.iter().enumerate() {
                    values[(t * e_len + e) * r_len + r] = window.get(t, e, r) + ye;
                }
            }
            time_tapes.push(TimeStepTape {
                tokens,
                layers: layer_tapes,
                encoder_out: h,
            });
        }
        DataCuboid::new(w, e_len, r_len, values)?
    } else {
        window.clone()
    };

    // Per-region convolution, pooling, and the shared head.
    let mut forecast = ForecastBlock::zeros(config.horizon, e_len, r_len);
    let mut region_tapes = Vec::with_capacity(r_len);
    for r in 0..r_len {
        let panel = slice_spatial(&enriched, r)?;
        let (maps, conv_tape) = conv2d_forward_tape(&panel, &params.bank)?;
        let mut pooled = vec![0.0; config.n_kernels * e_len];
        for (n, map) in maps.iter().enumerate() {
            for e in 0..e_len {
                let mut acc = 0.0;
                for t in 0..w {
                    acc += map.get(t, e);
                }
                pooled[n * e_len + e] = acc / w as f64;
            }
        }
        let (features, mask) = match dropout_rng.as_deref_mut() {
            Some(rng) if config.dropout > 0.0 => {
                let mask = dropout_mask(pooled.len(), config.dropout, rng)?;
                let masked: Vec<f64> = pooled.iter().zip(&mask).map(|(v, m)| v * m).collect();
                (masked, Some(mask))
            }
            _ => (pooled, None),
        };
        let (out, mlp_tape) = mlp_forward_tape(&features, &params.head)?;
        for h in 0..config.horizon {
            for e in 0..e_len {
                forecast.set(h, e, r, out[h * e_len + e]);
            }
        }
        region_tapes.push(RegionTape {
            conv: conv_tape,
            mask,
            mlp: mlp_tape,
        });
    }

    let tape = ModelTape {
        time: time_tapes,
        regions: region_tapes,
        shape: (w, e_len, r_len),
    };
    Ok((forecast, tape))
}

/// Gradients of `sum(upstream . forecast)` w.r.t. parameters and the window.
pub fn backward(
    tape: &ModelTape,
    params: &CsNetParams,
    config: &CsNetConfig,
    upstream: &ForecastBlock,
) -> Result<(CsNetParams, DataCuboid)> {
    let mut grads = params.zeros_like();
    let d_window = backward_acc(tape, params, config, upstream, &mut grads)?;
    Ok((grads, d_window))
}

/// Backward pass accumulating parameter gradients into `acc` (mirroring
/// `params`); returns the window gradient.
pub fn backward_acc(
    tape: &ModelTape,
    params: &CsNetParams,
    config: &CsNetConfig,
    upstream: &ForecastBlock,
    acc: &mut CsNetParams,
) -> Result<DataCuboid> {
    let (w, e_len, r_len) = tape.shape;
    if upstream.horizon() != config.horizon
        || upstream.e_len() != e_len
        || upstream.r_len() != r_len
    {
        return Err(CsError::TapeMismatch(
            "upstream block does not match the recorded forward".into(),
        ));
    }
    if tape.regions.len() != r_len {
        return Err(CsError::TapeMismatch("tape/region count mismatch".into()));
    }
    let grads = acc;
    let mut d_enriched = vec![0.0; w * e_len * r_len];

    for (r, region) in tape.regions.iter().enumerate() {
        let mut d_out = vec![0.0; config.horizon * e_len];
        for h in 0..config.horizon {
            for e in 0..e_len {
                d_out[h * e_len + e] = upstream.get(h, e, r);
            }
        }
        let mut d_pooled = mlp_backward_acc(&region.mlp, &params.head, &d_out, &mut grads.head)?;
        if let Some(mask) = &region.mask {
            for (d, m) in d_pooled.iter_mut().zip(mask) {
                *d *= m;
            }
        }
        // Mean pooling spreads each gradient uniformly over the time axis.
        let mut d_maps = Vec::with_capacity(config.n_kernels);
        for n in 0..config.n_kernels {
            let mut map = Panel::zeros(w, e_len);
            for e in 0..e_len {
                let g = d_pooled[n * e_len + e] / w as f64;
                for t in 0..w {
                    map.set(t, e, g);
                }
            }
            d_maps.push(map);
        }
        let conv_grads = conv2d_backward(&region.conv, &params.bank, &d_maps)?;
        grads.bank.add_scaled_weights(&conv_grads.bank, 1.0);
        for (gb, cb) in grads
            .bank
            .bias_mut()
            .iter_mut()
            .zip(conv_grads.bank.bias())
        {
            *gb += cb;
        }
        for t in 0..w {
            for e in 0..e_len {
                d_enriched[(t * e_len + e) * r_len + r] = conv_grads.input.get(t, e);
            }
        }
    }

    let d_window = if config.variant.uses_attention() {
        let embed = params.embed.as_ref().unwrap();
        let unembed = params.unembed.as_ref().unwrap();
        let g_embed = grads.embed.as_mut().unwrap();
        let g_unembed = grads.unembed.as_mut().unwrap();
        let mut d_window = vec![0.0; w * e_len * r_len];
        for (t, step) in tape.time.iter().enumerate() {
            let mut d_h: Vec<Vec<f64>> = Vec::with_capacity(r_len);
            for r in 0..r_len {
                let d_y: Vec<f64> = (0..e_len)
                    .map(|e| d_enriched[(t * e_len + e) * r_len + r])
                    .collect();
                g_unembed.w.add_outer(&d_y, &step.encoder_out[r]);
                for (gb, dy) in g_unembed.b.iter_mut().zip(&d_y) {
                    *gb += dy;
                }
                d_h.push(unembed.w.matvec_t(&d_y));
            }
            for (l, layer) in params.encoder.iter().enumerate().rev() {
                let ltape = &step.layers[l];
                let g_layer = &mut grads.encoder[l];
                // Feed-forward sublayer backward (residual + layer norm).
                let mut d_y1 = Vec::with_capacity(r_len);
                for r in 0..r_len {
                    let du =
                        layer_norm_backward(&ltape.y2[r], ltape.inv_std[r], &d_h[r]);
                    let d_in =
                        mlp_backward_acc(&ltape.ffn[r], &layer.ffn, &du, &mut g_layer.ffn)?;
                    let dy1: Vec<f64> =
                        du.iter().zip(&d_in).map(|(a, b)| a + b).collect();
                    d_y1.push(dy1);
                }
                d_h = attention_backward_acc(&ltape.attn, &layer.attn, &d_y1, &mut g_layer.attn)?;
            }
            for r in 0..r_len {
                g_embed.w.add_outer(&d_h[r], &step.tokens[r]);
                for (gb, dh) in g_embed.b.iter_mut().zip(&d_h[r]) {
                    *gb += dh;
                }
                let dx = embed.w.matvec_t(&d_h[r]);
                for (e, dxe) in dx.iter().enumerate() {
                    // Residual: the raw window feeds the convolution stage
                    // directly as well as through the encoder.
                    d_window[(t * e_len + e) * r_len + r] =
                        d_enriched[(t * e_len + e) * r_len + r] + dxe;
                }
            }
        }
        DataCuboid::new(w, e_len, r_len, d_window)?
    } else {
        DataCuboid::new(w, e_len, r_len, d_enriched)?
    };

    Ok(d_window)
}

/// Training objective: mean squared error over all forecast entries plus
/// `l2 * sum(weights^2)` (biases excluded).
pub fn loss(
    forecast: &ForecastBlock,
    truth: &ForecastBlock,
    params: &CsNetParams,
    l2: f64,
) -> Result<f64> {
    if !forecast.same_shape(truth) {
        return Err(CsError::ShapeMismatch(
            "forecast and truth shapes differ".into(),
        ));
    }
    let n = forecast.values().len() as f64;
    let mse = forecast
        .values()
        .iter()
        .zip(truth.values())
        .map(|(f, t)| (f - t) * (f - t))
        .sum::<f64>()
        / n;
    Ok(mse + l2 * params.weight_sq_sum())
}

/// Gradient of the MSE term w.r.t. the forecast: `2 (f - t) / n`.
pub fn loss_forecast_grad(forecast: &ForecastBlock, truth: &ForecastBlock) -> Result<ForecastBlock> {
    if !forecast.same_shape(truth) {
        return Err(CsError::ShapeMismatch(
            "forecast and truth shapes differ".into(),
        ));
    }
    let n = forecast.values().len() as f64;
    let values = forecast
        .values()
        .iter()
        .zip(truth.values())
        .map(|(f, t)| 2.0 * (f - t) / n)
        .collect();
    ForecastBlock::new(forecast.horizon(), forecast.e_len(), forecast.r_len(), values)
}

/// Per-series mean/std fitted on a training range. A constant series
/// (std below `1e-12 * max(1, |mean|)`) normalizes to 0 and de-normalizes
/// back to its constant.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    e_len: usize,
    r_len: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl NormStats {
    pub fn fit(cuboid: &DataCuboid) -> NormStats {
        let (t_len, e_len, r_len) = (cuboid.t_len(), cuboid.e_len(), cuboid.r_len());
        let mut mean = vec![0.0; e_len * r_len];
        let mut std = vec![0.0; e_len * r_len];
        for e in 0..e_len {
            for r in 0..r_len {
                let mut sum = 0.0;
                for t in 0..t_len {
                    sum += cuboid.get(t, e, r);
                }
                let mu = sum / t_len as f64;
                let mut var = 0.0;
                for t in 0..t_len {
                    let d = cuboid.get(t, e, r) - mu;
                    var += d * d;
                }
                var /= t_len as f64;
                let sigma = var.sqrt();
                let idx = e * r_len + r;
                mean[idx] = mu;
                std[idx] = if sigma < 1e-12 * mu.abs().max(1.0) {
                    0.0
                } else {
                    sigma
                };
            }
        }
        NormStats {
            e_len,
            r_len,
            mean,
            std,
        }
    }

    pub fn from_raw(e_len: usize, r_len: usize, mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != e_len * r_len || std.len() != e_len * r_len {
            return Err(CsError::ShapeMismatch(
                "normalization statistics length mismatch".into(),
            ));
        }
        Ok(NormStats {
            e_len,
            r_len,
            mean,
            std,
        })
    }

    pub fn e_len(&self) -> usize {
        self.e_len
    }

    pub fn r_len(&self) -> usize {
        self.r_len
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    fn check(&self, e_len: usize, r_len: usize) -> Result<()> {
        if e_len != self.e_len || r_len != self.r_len {
            return Err(CsError::ShapeMismatch(format!(
                "normalization grid {}x{} does not match data {}x{}",
                self.e_len, self.r_len, e_len, r_len
            )));
        }
        Ok(())
    }

    pub fn normalize(&self, cuboid: &DataCuboid) -> Result<DataCuboid> {
        self.check(cuboid.e_len(), cuboid.r_len())?;
        let mut values = Vec::with_capacity(cuboid.values().len());
        for t in 0..cuboid.t_len() {
            for e in 0..self.e_len {
                for r in 0..self.r_len {
                    let idx = e * self.r_len + r;
                    let v = cuboid.get(t, e, r);
                    values.push(if self.std[idx] > 0.0 {
                        (v - self.mean[idx]) / self.std[idx]
                    } else {
                        0.0
                    });
                }
            }
        }
        DataCuboid::new(cuboid.t_len(), self.e_len, self.r_len, values)
    }

    pub fn denormalize(&self, block: &ForecastBlock) -> Result<ForecastBlock> {
        self.check(block.e_len(), block.r_len())?;
        let mut out = ForecastBlock::zeros(block.horizon(), self.e_len, self.r_len);
        for h in 0..block.horizon() {
            for e in 0..self.e_len {
                for r in 0..self.r_len {
                    let idx = e * self.r_len + r;
                    out.set(h, e, r, self.mean[idx] + self.std[idx] * block.get(h, e, r));
                }
            }
        }
        Ok(out)
    }
}

/// A trained network: configuration, weights, and its normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedCsNet {
    pub config: CsNetConfig,
    pub params: CsNetParams,
    pub norm: NormStats,
}

/// Training output with the per-epoch objective trace.
pub struct TrainingRun {
    pub model: TrainedCsNet,
    pub epoch_losses: Vec<f64>,
}

/// Number of stride-1 training samples in `t_len` steps.
pub fn sample_count(t_len: usize, config: &CsNetConfig) -> Result<usize> {
    let need = config.window + config.horizon;
    if t_len < need {
        return Err(CsError::InsufficientHistory { have: t_len, need });
    }
    Ok(t_len - need + 1)
}

/// Trains on all stride-1 (window, horizon) pairs with mini-batch Adam.
/// Deterministic given `config.seed`.
pub fn train(cuboid: &DataCuboid, config: &CsNetConfig) -> Result<TrainingRun> {
    config.validate()?;
    let n_samples = sample_count(cuboid.t_len(), config)?;
    let norm = NormStats::fit(cuboid);
    let normalized = norm.normalize(cuboid)?;

    let mut rng = seeded_rng(config.seed);
    let mut params = CsNetParams::init(config, cuboid.e_len(), &mut rng)?;
    let mut state = AdamState::new(params.param_len());
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    let mut order: Vec<usize> = (0..n_samples).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut batch_grads = params.zeros_like();
            let mut batch_loss = 0.0;
            let inv_b = 1.0 / batch.len() as f64;
            for &s in batch {
                let window = time_window(&normalized, s, config.window)?;
                let truth_slice = time_window(&normalized, s + config.window, config.horizon)?;
                let truth = ForecastBlock::new(
                    config.horizon,
                    cuboid.e_len(),
                    cuboid.r_len(),
                    truth_slice.values().to_vec(),
                )?;
                let (forecast, tape) =
                    forward_tape(&window, &params, config, ForwardMode::Train(&mut rng))?;
                batch_loss += loss(&forecast, &truth, &params, config.l2)?;
                let d_forecast = loss_forecast_grad(&forecast, &truth)?;
                // Batch-mean scaling folded into the upstream gradient so
                // sample gradients accumulate straight into the batch.
                let scaled = ForecastBlock::new(
                    config.horizon,
                    cuboid.e_len(),
                    cuboid.r_len(),
                    d_forecast.values().iter().map(|v| v * inv_b).collect(),
                )?;
                backward_acc(&tape, &params, config, &scaled, &mut batch_grads)?;
            }
            // L2 term gradient: 2 * l2 * w on weights, nothing on biases.
            batch_grads.add_scaled_weights(&params, 2.0 * config.l2);
            let mut flat = params.to_flat();
            let flat_grads = batch_grads.to_flat();
            adam_step(&mut flat, &flat_grads, &mut state, config.learning_rate)?;
            params.read_flat(&flat)?;
            epoch_loss += batch_loss / batch.len() as f64;
            n_batches += 1;
        }
        epoch_losses.push(epoch_loss / n_batches as f64);
    }

    Ok(TrainingRun {
        model: TrainedCsNet {
            config: config.clone(),
            params,
            norm,
        },
        epoch_losses,
    })
}

/// Forecasts the steps after the trailing window of `cuboid`.
///
/// Normalizes with the training statistics, runs the network in eval mode,
/// de-normalizes, and clamps at zero when `clamp_nonnegative` is set (count
/// data).
pub fn predict(
    cuboid: &DataCuboid,
    trained: &TrainedCsNet,
    clamp_nonnegative: bool,
) -> Result<ForecastBlock> {
    let w = trained.config.window;
    if cuboid.t_len() < w {
        return Err(CsError::InsufficientHistory {
            have: cuboid.t_len(),
            need: w,
        });
    }
    let tail = time_window(cuboid, cuboid.t_len() - w, w)?;
    let normalized = trained.norm.normalize(&tail)?;
    let out = forward(
        &normalized,
        &trained.params,
        &trained.config,
        ForwardMode::Eval,
    )?;
    let mut denorm = trained.norm.denormalize(&out)?;
    if clamp_nonnegative {
        let values: Vec<f64> = denorm.values().iter().map(|v| v.max(0.0)).collect();
        denorm = ForecastBlock::new(denorm.horizon(), denorm.e_len(), denorm.r_len(), values)?;
    }
    Ok(denorm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{attention_forward, conv2d_forward, finite_difference_check, mlp_forward};
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn random_cuboid(t: usize, e: usize, r: usize, seed: u64) -> DataCuboid {
        let mut rng = seeded_rng(seed);
        let values = (0..t * e * r).map(|_| rng.gen_range(-1.5..1.5)).collect();
        DataCuboid::new(t, e, r, values).unwrap()
    }

    fn small_config(variant: CsNetVariant) -> CsNetConfig {
        let mut config = CsNetConfig::new(variant, 8, 2);
        config.n_kernels = 2;
        config.d_model = 4;
        config.n_heads = 2;
        config.mlp_hidden = vec![6];
        config.dropout = 0.0;
        config
    }

    #[test]
    fn zero_window_zero_biases_gives_zero_forecast() {
        let config = small_config(CsNetVariant::ConvOnly);
        let mut rng = seeded_rng(1);
        // init leaves every bias at zero.
        let params = CsNetParams::init(&config, 3, &mut rng).unwrap();
        let window = DataCuboid::new(8, 3, 4, vec![0.0; 8 * 3 * 4]).unwrap();
        let out = forward(&window, &params, &config, ForwardMode::Eval).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_only_is_exactly_region_permutation_equivariant() {
        let config = small_config(CsNetVariant::ConvOnly);
        let mut rng = seeded_rng(2);
        let params = CsNetParams::init(&config, 3, &mut rng).unwrap();
        let window = random_cuboid(8, 3, 5, 7);
        let out = forward(&window, &params, &config, ForwardMode::Eval).unwrap();

        let mut perm: Vec<usize> = (0..5).collect();
        perm.shuffle(&mut rng);
        let mut values = vec![0.0; 8 * 3 * 5];
        for t in 0..8 {
            for e in 0..3 {
                for (dst, &src) in perm.iter().enumerate() {
                    values[(t * 3 + e) * 5 + dst] = window.get(t, e, src);
                }
            }
        }
        let permuted = DataCuboid::new(8, 3, 5, values).unwrap();
        let out_permuted = forward(&permuted, &params, &config, ForwardMode::Eval).unwrap();
        for h in 0..2 {
            for e in 0..3 {
                for (dst, &src) in perm.iter().enumerate() {
                    assert_eq!(out_permuted.get(h, e, dst), out.get(h, e, src));
                }
            }
        }
    }

    #[test]
    fn full_variant_region_swap_is_exactly_equivariant() {
        let config = small_config(CsNetVariant::Full);
        let mut rng = seeded_rng(3);
        let params = CsNetParams::init(&config, 3, &mut rng).unwrap();
        let window = random_cuboid(8, 3, 4, 9);
        let out = forward(&window, &params, &config, ForwardMode::Eval).unwrap();

        // Swap regions 0 and 1 (first-two swaps keep fp reductions exact).
        let mut values = vec![0.0; 8 * 3 * 4];
        for t in 0..8 {
            for e in 0..3 {
                for r in 0..4 {
                    let src = match r {
                        0 => 1,
                        1 => 0,
                        other => other,
                    };
                    values[(t * 3 + e) * 4 + r] = window.get(t, e, src);
                }
            }
        }
        let swapped = DataCuboid::new(8, 3, 4, values).unwrap();
        let out_swapped = forward(&swapped, &params, &config, ForwardMode::Eval).unwrap();
        for h in 0..2 {
            for e in 0..3 {
                assert_eq!(out_swapped.get(h, e, 0), out.get(h, e, 1));
                assert_eq!(out_swapped.get(h, e, 1), out.get(h, e, 0));
                assert_eq!(out_swapped.get(h, e, 2), out.get(h, e, 2));
                assert_eq!(out_swapped.get(h, e, 3), out.get(h, e, 3));
            }
        }
    }

    #[test]
    fn full_variant_arbitrary_region_permutation_within_tolerance() {
        let config = small_config(CsNetVariant::Full);
        let mut rng = seeded_rng(4);
        let params = CsNetParams::init(&config, 3, &mut rng).unwrap();
        let window = random_cuboid(8, 3, 5, 11);
        let out = forward(&window, &params, &config, ForwardMode::Eval).unwrap();
        let mut perm: Vec<usize> = (0..5).collect();
        perm.shuffle(&mut rng);
        let mut values = vec![0.0; 8 * 3 * 5];
        for t in 0..8 {
            for e in 0..3 {
                for (dst, &src) in perm.iter().enumerate() {
                    values[(t * 3 + e) * 5 + dst] = window.get(t, e, src);
                }
            }
        }
        let permuted = DataCuboid::new(8, 3, 5, values).unwrap();
        let out_permuted = forward(&permuted, &params, &config, ForwardMode::Eval).unwrap();
        for h in 0..2 {
            for e in 0..3 {
                for (dst, &src) in perm.iter().enumerate() {
                    assert!((out_permuted.get(h, e, dst) - out.get(h, e, src)).abs() < 1e-12);
                }
            }
        }
    }

    // Straight-line recomputation of the full pipeline: embed, attention
    // sublayer, feed-forward sublayer, unembed, convolution, mean pooling,
    // head, assembled here step by step without the tape machinery.
    #[test]
    fn forward_matches_straight_line_recomputation() {
        let mut config = small_config(CsNetVariant::Full);
        config.window = 12;
        let mut rng = seeded_rng(5);
        let params = CsNetParams::init(&config, 4, &mut rng).unwrap();
        let window = random_cuboid(12, 4, 5, 13);
        let out = forward(&window, &params, &config, ForwardMode::Eval).unwrap();

        let embed = params.embed.as_ref().unwrap();
        let unembed = params.unembed.as_ref().unwrap();
        let mut enriched = vec![0.0; 12 * 4 * 5];
        for t in 0..12 {
            let tokens: Vec<Vec<f64>> = (0..5)
                .map(|r| {
                    let x: Vec<f64> = (0..4).map(|e| window.get(t, e, r)).collect();
                    let mut h = embed.w.matvec(&x);
                    for (hv, b) in h.iter_mut().zip(&embed.b) {
                        *hv += b;
                    }
                    h
                })
                .collect();
            let mut h = tokens;
            for layer in &params.encoder {
                let y1 = attention_forward(&h, &layer.attn).unwrap();
                h = y1
                    .iter()
                    .map(|tok| {
                        let f = mlp_forward(tok, &layer.ffn).unwrap();
                        let u: Vec<f64> = tok.iter().zip(&f).map(|(a, b)| a + b).collect();
                        layer_norm_forward(&u).0
                    })
                    .collect();
            }
            for (r, hr) in h.iter().enumerate() {
                let mut y = unembed.w.matvec(hr);
                for (yv, b) in y.iter_mut().zip(&unembed.b) {
                    *yv += b;
                }
                for (e, ye) in y.iter().enumerate() {
                    enriched[(t * 4 + e) * 5 + r] = window.get(t, e, r) + ye;
                }
            }
        }
        let enriched = DataCuboid::new(12, 4, 5, enriched).unwrap();
        for r in 0..5 {
            let panel = slice_spatial(&enriched, r).unwrap();
            let maps = conv2d_forward(&panel, &params.bank).unwrap();
            let mut pooled = vec![0.0; 2 * 4];
            for (n, map) in maps.iter().enumerate() {
                for e in 0..4 {
                    pooled[n * 4 + e] =
                        (0..12).map(|t| map.get(t, e)).sum::<f64>() / 12.0;
                }
            }
            let head_out = mlp_forward(&pooled, &params.head).unwrap();
            for h in 0..2 {
                for e in 0..4 {
                    let expected = head_out[h * 4 + e];
                    assert!(
                        (out.get(h, e, r) - expected).abs() < 1e-10,
                        "pipeline mismatch at (h={h}, e={e}, r={r})"
                    );
                }
            }
        }
    }

    #[test]
    fn end_to_end_gradient_matches_finite_differences() {
        let config = small_config(CsNetVariant::Full);
        let mut rng = seeded_rng(6);
        let params = CsNetParams::init(&config, 3, &mut rng).unwrap();
        let window = random_cuboid(8, 3, 4, 15);
        let truth = ForecastBlock::new(
            2,
            3,
            4,
            (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let l2 = 1e-3;

        let (forecast, tape) = forward_tape(&window, &params, &config, ForwardMode::Eval).unwrap();
        let d_forecast = loss_forecast_grad(&forecast, &truth).unwrap();
        let (mut grads, d_window) = backward(&tape, &params, &config, &d_forecast).unwrap();
        grads.add_scaled_weights(&params, 2.0 * l2);

        let mut analytic = grads.to_flat();
        analytic.extend_from_slice(d_window.values());
        let mut point = params.to_flat();
        point.extend_from_slice(window.values());

        let proto = params.clone();
        let err = finite_difference_check(&point, &analytic, 1e-5, |flat| {
            let mut p = proto.clone();
            let split = p.param_len();
            p.read_flat(&flat[..split]).unwrap();
            let w = DataCuboid::new(8, 3, 4, flat[split..].to_vec()).unwrap();
            let f = forward(&w, &p, &config, ForwardMode::Eval).unwrap();
            loss(&f, &truth, &p, l2).unwrap()
        });
        assert!(err < 1e-4, "end-to-end gradient mismatch: {err}");
    }

    #[test]
    fn loss_trivial_cases_and_direct_sum_oracle() {
        let config = small_config(CsNetVariant::ConvOnly);
        let mut rng = seeded_rng(7);
        let params = CsNetParams::init(&config, 2, &mut rng).unwrap();
        let a = ForecastBlock::new(2, 2, 2, (0..8).map(|i| i as f64).collect()).unwrap();
        assert_eq!(loss(&a, &a, &params, 0.0).unwrap(), 0.0);

        let shifted =
            ForecastBlock::new(2, 2, 2, a.values().iter().map(|v| v + 1.0).collect()).unwrap();
        assert_eq!(loss(&a, &shifted, &params, 0.0).unwrap(), 1.0);

        let b = ForecastBlock::new(
            2,
            2,
            2,
            (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let l2 = 0.37;
        let direct: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / 8.0
            + l2 * params.weight_sq_sum();
        assert!((loss(&a, &b, &params, l2).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn sample_counts_match_enumeration() {
        let config = CsNetConfig::new(CsNetVariant::ConvOnly, 170, 8);
        assert_eq!(sample_count(215, &config).unwrap(), 38);
        assert_eq!(sample_count(178, &config).unwrap(), 1);
        assert!(matches!(
            sample_count(177, &config),
            Err(CsError::InsufficientHistory { .. })
        ));
        // Oracle: enumerate valid starts directly.
        let count = (0..215)
            .filter(|s| s + config.window + config.horizon <= 215)
            .count();
        assert_eq!(count, 38);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let mut config = small_config(CsNetVariant::ConvOnly);
        config.epochs = 3;
        config.dropout = 0.1;
        config.seed = 42;
        let cuboid = random_cuboid(20, 2, 3, 21);
        let a = train(&cuboid, &config).unwrap();
        let b = train(&cuboid, &config).unwrap();
        assert_eq!(a.model.params.to_flat(), b.model.params.to_flat());
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn loss_non_increasing_on_noiseless_linear_data() {
        for seed in 0..5 {
            let mut config = small_config(CsNetVariant::ConvOnly);
            config.window = 12;
            config.horizon = 2;
            config.epochs = 12;
            config.batch_size = usize::MAX; // full batch
            config.learning_rate = 1e-3;
            config.seed = seed;
            let mut values = Vec::new();
            for t in 0..40 {
                for e in 0..2 {
                    for r in 0..2 {
                        let slope = 0.5 + 0.25 * (e * 2 + r) as f64;
                        values.push(1.0 + slope * t as f64);
                    }
                }
            }
            let cuboid = DataCuboid::new(40, 2, 2, values).unwrap();
            let run = train(&cuboid, &config).unwrap();
            // Non-increasing from the second epoch on.
            for pair in run.epoch_losses.windows(2).skip(1) {
                assert!(
                    pair[1] <= pair[0] + 1e-12,
                    "seed {seed}: epoch loss rose {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn trained_model_beats_persistence_on_linear_trend() {
        let mut config = small_config(CsNetVariant::ConvOnly);
        config.window = 16;
        config.horizon = 4;
        config.epochs = 150;
        config.batch_size = 16;
        config.learning_rate = 3e-3;
        config.seed = 8;
        let (t_len, e_len, r_len) = (60, 2, 2);
        let mut values = Vec::new();
        for t in 0..t_len {
            for e in 0..e_len {
                for r in 0..r_len {
                    let slope = 0.4 + 0.3 * (e * r_len + r) as f64;
                    values.push(2.0 + slope * t as f64);
                }
            }
        }
        let cuboid = DataCuboid::new(t_len, e_len, r_len, values).unwrap();
        let train_slice = time_window(&cuboid, 0, t_len - 4).unwrap();
        let run = train(&train_slice, &config).unwrap();
        let forecast = predict(&train_slice, &run.model, false).unwrap();

        let mut model_se = 0.0;
        let mut persistence_se = 0.0;
        for h in 0..4 {
            for e in 0..e_len {
                for r in 0..r_len {
                    let truth = cuboid.get(t_len - 4 + h, e, r);
                    let last = train_slice.get(t_len - 5, e, r);
                    model_se += (forecast.get(h, e, r) - truth).powi(2);
                    persistence_se += (last - truth).powi(2);
                }
            }
        }
        assert!(
            model_se < persistence_se,
            "model MSE {model_se} not below persistence {persistence_se}"
        );
    }

    #[test]
    fn predict_constant_series_returns_the_constant() {
        let mut config = small_config(CsNetVariant::ConvOnly);
        config.epochs = 2;
        let cuboid = DataCuboid::new(16, 2, 2, vec![5.0; 16 * 2 * 2]).unwrap();
        let run = train(&cuboid, &config).unwrap();
        let forecast = predict(&cuboid, &run.model, false).unwrap();
        assert!(forecast.values().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn predict_bounds_and_determinism() {
        let mut config = small_config(CsNetVariant::ConvOnly);
        config.epochs = 2;
        config.dropout = 0.2;
        let cuboid = random_cuboid(16, 2, 2, 31);
        let run = train(&cuboid, &config).unwrap();
        let short = time_window(&cuboid, 0, 7).unwrap();
        assert!(matches!(
            predict(&short, &run.model, false),
            Err(CsError::InsufficientHistory { .. })
        ));
        let a = predict(&cuboid, &run.model, false).unwrap();
        let b = predict(&cuboid, &run.model, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normalization_round_trip() {
        let cuboid = random_cuboid(24, 3, 2, 41);
        let stats = NormStats::fit(&cuboid);
        let normalized = stats.normalize(&cuboid).unwrap();
        // Round trip through denormalize (reusing the forecast path).
        for t in 0..24 {
            let block = ForecastBlock::new(
                1,
                3,
                2,
                (0..6)
                    .map(|i| normalized.get(t, i / 2, i % 2))
                    .collect(),
            )
            .unwrap();
            let back = stats.denormalize(&block).unwrap();
            for e in 0..3 {
                for r in 0..2 {
                    assert!((back.get(0, e, r) - cuboid.get(t, e, r)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn clamp_applies_only_when_requested() {
        let mut config = small_config(CsNetVariant::ConvOnly);
        config.epochs = 1;
        let cuboid = random_cuboid(16, 2, 2, 51);
        let run = train(&cuboid, &config).unwrap();
        let unclamped = predict(&cuboid, &run.model, false).unwrap();
        let clamped = predict(&cuboid, &run.model, true).unwrap();
        for (u, c) in unclamped.values().iter().zip(clamped.values()) {
            assert_eq!(*c, u.max(0.0));
        }
    }
}
