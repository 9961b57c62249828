//! Fully connected fusion head: affine-ReLU chain, final layer affine.

use rand_chacha::ChaCha8Rng;

use crate::error::{CsError, Result};
use crate::nn::{FlatCursor, Mat};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Mat,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<DenseLayer>,
}

impl MlpParams {
    /// Builds layers chaining `widths[0] -> widths[1] -> ... -> widths.last()`.
    pub fn init(widths: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        if widths.len() < 2 {
            return Err(CsError::ShapeMismatch(
                "mlp needs at least input and output widths".into(),
            ));
        }
        if widths.contains(&0) {
            return Err(CsError::ShapeMismatch("mlp widths must be >= 1".into()));
        }
        let layers = widths
            .windows(2)
            .map(|pair| DenseLayer {
                w: Mat::init_uniform(pair[1], pair[0], rng),
                b: vec![0.0; pair[1]],
            })
            .collect();
        Ok(MlpParams { layers })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(CsError::ShapeMismatch("mlp needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].w.rows() != pair[1].w.cols() {
                return Err(CsError::ShapeMismatch(format!(
                    "consecutive layer shapes do not chain: {} -> {}",
                    pair[0].w.rows(),
                    pair[1].w.cols()
                )));
            }
        }
        for layer in &layers {
            if layer.b.len() != layer.w.rows() {
                return Err(CsError::ShapeMismatch("bias width != layer rows".into()));
            }
        }
        Ok(MlpParams { layers })
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer {
                    w: Mat::zeros(l.w.rows(), l.w.cols()),
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].w.cols()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().w.rows()
    }

    pub fn param_len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.rows() * l.w.cols() + l.b.len())
            .sum()
    }

    pub fn push_flat(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            layer.w.push_flat(out);
            out.extend_from_slice(&layer.b);
        }
    }

    pub fn read_flat(&mut self, cursor: &mut FlatCursor) -> Result<()> {
        for layer in &mut self.layers {
            layer.w.read_flat(cursor)?;
            cursor.take_into(&mut layer.b)?;
        }
        Ok(())
    }

    /// L2 norm contribution: weights only, biases excluded.
    pub fn weight_sq_sum(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.w.data().iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    /// `weights += scale * other.weights` (biases untouched).
    pub fn add_scaled_weights(&mut self, other: &Self, scale: f64) {
        debug_assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w.add_scaled(&b.w, scale);
        }
    }
}

pub struct MlpTape {
    input: Vec<f64>,
    /// Pre-activation of each hidden layer; the post-activation input of
    /// the next layer is `max(0, pre)`, recomputed in backward.
    pre: Vec<Vec<f64>>,
}

pub fn mlp_forward(input: &[f64], params: &MlpParams) -> Result<Vec<f64>> {
    let (out, _) = mlp_forward_tape(input, params)?;
    Ok(out)
}

pub fn mlp_forward_tape(input: &[f64], params: &MlpParams) -> Result<(Vec<f64>, MlpTape)> {
    if input.len() != params.input_width() {
        return Err(CsError::ShapeMismatch(format!(
            "mlp input width {} != {}",
            input.len(),
            params.input_width()
        )));
    }
    let mut tape = MlpTape {
        input: input.to_vec(),
        pre: Vec::with_capacity(params.layers.len() - 1),
    };
    let n_layers = params.layers.len();
    let mut x = input.to_vec();
    for (i, layer) in params.layers.iter().enumerate() {
        let mut z = layer.w.matvec(&x);
        for (zv, b) in z.iter_mut().zip(&layer.b) {
            *zv += b;
        }
        if i + 1 < n_layers {
            x = z.iter().map(|v| v.max(0.0)).collect();
            tape.pre.push(z);
        } else {
            x = z;
        }
    }
    Ok((x, tape))
}

pub struct MlpGrads {
    pub input: Vec<f64>,
    pub params: MlpParams,
}

pub fn mlp_backward(tape: &MlpTape, params: &MlpParams, upstream: &[f64]) -> Result<MlpGrads> {
    let mut grads = params.zeros_like();
    let input = mlp_backward_acc(tape, params, upstream, &mut grads)?;
    Ok(MlpGrads {
        input,
        params: grads,
    })
}

/// Backward pass accumulating parameter gradients into `acc` (which must
/// mirror `params`); returns the input gradient.
pub fn mlp_backward_acc(
    tape: &MlpTape,
    params: &MlpParams,
    upstream: &[f64],
    acc: &mut MlpParams,
) -> Result<Vec<f64>> {
    if upstream.len() != params.output_width() {
        return Err(CsError::TapeMismatch(format!(
            "upstream width {} != output width {}",
            upstream.len(),
            params.output_width()
        )));
    }
    if tape.pre.len() + 1 != params.layers.len() {
        return Err(CsError::TapeMismatch(
            "tape depth does not match parameters".into(),
        ));
    }
    let mut delta = upstream.to_vec();
    let mut relu_buf: Vec<f64> = Vec::new();
    for i in (0..params.layers.len()).rev() {
        let layer_in: &[f64] = if i == 0 {
            &tape.input
        } else {
            relu_buf.clear();
            relu_buf.extend(tape.pre[i - 1].iter().map(|v| v.max(0.0)));
            &relu_buf
        };
        let g = &mut acc.layers[i];
        g.w.add_outer(&delta, layer_in);
        for (gb, d) in g.b.iter_mut().zip(&delta) {
            *gb += d;
        }
        delta = params.layers[i].w.matvec_t(&delta);
        if i > 0 {
            for (d, z) in delta.iter_mut().zip(&tape.pre[i - 1]) {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            }
        }
    }
    Ok(delta)
}
