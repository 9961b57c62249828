//! Learnable 2-D convolution over cross-section panels.
//!
//! This is a true convolution (the kernel argument is index-reversed
//! relative to cross-correlation) with zero same-padding and centered odd
//! kernels, so each feature map stays aligned with the input panel:
//!
//! ```text
//! out[n](t, s) = bias[n] + sum_{x, y} f(x, y) * k_n(t - x + off_t, s - y + off_s)
//! ```
//!
//! with `off = (k - 1) / 2` and `f` treated as zero outside its extents.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CsError, Result};
use crate::nn::FlatCursor;
use crate::tensor::Panel;

/// The learnable kernel set: `n_kernels` kernels of odd extent
/// `k_t x k_s` plus one bias per kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    n_kernels: usize,
    k_t: usize,
    k_s: usize,
    /// `[n][kt][ks]` row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl KernelBank {
    pub fn new(n_kernels: usize, k_t: usize, k_s: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if n_kernels < 1 {
            return Err(CsError::ShapeMismatch("need at least one kernel".into()));
        }
        if k_t.is_multiple_of(2) || k_s.is_multiple_of(2) {
            return Err(CsError::ShapeMismatch(format!(
                "kernel extents must be odd, got {k_t}x{k_s}"
            )));
        }
        if weights.len() != n_kernels * k_t * k_s || bias.len() != n_kernels {
            return Err(CsError::ShapeMismatch(format!(
                "kernel bank arrays do not match {n_kernels} kernels of {k_t}x{k_s}"
            )));
        }
        if !weights.iter().chain(&bias).all(|v| v.is_finite()) {
            return Err(CsError::NonFiniteValue("kernel bank"));
        }
        Ok(KernelBank {
            n_kernels,
            k_t,
            k_s,
            weights,
            bias,
        })
    }

    pub fn zeros(n_kernels: usize, k_t: usize, k_s: usize) -> Result<Self> {
        KernelBank::new(
            n_kernels,
            k_t,
            k_s,
            vec![0.0; n_kernels * k_t * k_s],
            vec![0.0; n_kernels],
        )
    }

    /// Fan-scaled random weights, zero biases.
    pub fn init(n_kernels: usize, k_t: usize, k_s: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let fan = (k_t * k_s) as f64;
        let bound = (6.0 / (2.0 * fan)).sqrt();
        let weights = (0..n_kernels * k_t * k_s)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        KernelBank::new(n_kernels, k_t, k_s, weights, vec![0.0; n_kernels])
    }

    pub fn n_kernels(&self) -> usize {
        self.n_kernels
    }

    pub fn k_t(&self) -> usize {
        self.k_t
    }

    pub fn k_s(&self) -> usize {
        self.k_s
    }

    #[inline]
    pub fn weight(&self, n: usize, u: usize, v: usize) -> f64 {
        self.weights[(n * self.k_t + u) * self.k_s + v]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn param_len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn push_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.weights);
        out.extend_from_slice(&self.bias);
    }

    pub fn read_flat(&mut self, cursor: &mut FlatCursor) -> Result<()> {
        cursor.take_into(&mut self.weights)?;
        cursor.take_into(&mut self.bias)
    }

    /// Kernel weights only; biases are excluded from the L2 penalty.
    pub fn weight_sq_sum(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    /// `weights += scale * other.weights` (biases untouched).
    pub fn add_scaled_weights(&mut self, other: &Self, scale: f64) {
        debug_assert_eq!(self.weights.len(), other.weights.len());
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += scale * b;
        }
    }
}

/// Cached forward state for [`conv2d_backward`].
pub struct Conv2dTape {
    input: Panel,
    n_kernels: usize,
    k_t: usize,
    k_s: usize,
}

/// Gradients mirror the parameter/input shapes.
pub struct Conv2dGrads {
    pub input: Panel,
    pub bank: KernelBank,
}

/// Applies every kernel; returns `n_kernels` panels with the input's extents.
pub fn conv2d_forward(panel: &Panel, bank: &KernelBank) -> Result<Vec<Panel>> {
    let (maps, _) = conv2d_forward_tape(panel, bank)?;
    Ok(maps)
}

pub fn conv2d_forward_tape(panel: &Panel, bank: &KernelBank) -> Result<(Vec<Panel>, Conv2dTape)> {
    let (rows, cols) = (panel.rows(), panel.cols());
    let (off_t, off_s) = (bank.k_t / 2, bank.k_s / 2);
    let values = panel.values();
    let mut maps = Vec::with_capacity(bank.n_kernels);
    for n in 0..bank.n_kernels {
        let mut out = Panel::zeros(rows, cols);
        for t in 0..rows {
            // Cross-correlate with the index-reversed kernel; for odd
            // centered kernels this equals the true convolution. Valid
            // kernel indices keep x = t + off_t - u inside the panel.
            let u_lo = (t + off_t + 1).saturating_sub(rows);
            let u_hi = (t + off_t).min(bank.k_t - 1);
            for s in 0..cols {
                let v_lo = (s + off_s + 1).saturating_sub(cols);
                let v_hi = (s + off_s).min(bank.k_s - 1);
                let mut acc = bank.bias[n];
                for u in u_lo..=u_hi {
                    let x = t + off_t - u;
                    let prow = &values[x * cols..(x + 1) * cols];
                    let krow = &bank.weights[(n * bank.k_t + u) * bank.k_s..];
                    for v in v_lo..=v_hi {
                        acc += prow[s + off_s - v] * krow[v];
                    }
                }
                out.set(t, s, acc);
            }
        }
        maps.push(out);
    }
    let tape = Conv2dTape {
        input: panel.clone(),
        n_kernels: bank.n_kernels,
        k_t: bank.k_t,
        k_s: bank.k_s,
    };
    Ok((maps, tape))
}

/// Gradients of `sum(upstream . output)` w.r.t. the input panel and the bank.
pub fn conv2d_backward(
    tape: &Conv2dTape,
    bank: &KernelBank,
    upstream: &[Panel],
) -> Result<Conv2dGrads> {
    if bank.n_kernels != tape.n_kernels || bank.k_t != tape.k_t || bank.k_s != tape.k_s {
        return Err(CsError::TapeMismatch(
            "kernel bank does not match the recorded forward".into(),
        ));
    }
    if upstream.len() != tape.n_kernels {
        return Err(CsError::TapeMismatch(format!(
            "{} upstream maps for {} kernels",
            upstream.len(),
            tape.n_kernels
        )));
    }
    let (rows, cols) = (tape.input.rows(), tape.input.cols());
    for up in upstream {
        if up.rows() != rows || up.cols() != cols {
            return Err(CsError::TapeMismatch(
                "upstream extents do not match the recorded input".into(),
            ));
        }
    }
    let (off_t, off_s) = (tape.k_t / 2, tape.k_s / 2);
    let mut d_input = Panel::zeros(rows, cols);
    let mut d_bank = KernelBank::zeros(tape.n_kernels, tape.k_t, tape.k_s)?;

    for n in 0..tape.n_kernels {
        let up = &upstream[n];
        let mut d_bias = 0.0;
        for t in 0..rows {
            let u_lo = (t + off_t + 1).saturating_sub(rows);
            let u_hi = (t + off_t).min(tape.k_t - 1);
            for s in 0..cols {
                let g = up.get(t, s);
                if g == 0.0 {
                    continue;
                }
                d_bias += g;
                let v_lo = (s + off_s + 1).saturating_sub(cols);
                let v_hi = (s + off_s).min(tape.k_s - 1);
                for u in u_lo..=u_hi {
                    let x = t + off_t - u;
                    let dw_row = &mut d_bank.weights[(n * tape.k_t + u) * tape.k_s..];
                    let w_row = &bank.weights[(n * tape.k_t + u) * tape.k_s..];
                    for v in v_lo..=v_hi {
                        let y = s + off_s - v;
                        dw_row[v] += g * tape.input.get(x, y);
                        let di = d_input.get(x, y) + g * w_row[v];
                        d_input.set(x, y, di);
                    }
                }
            }
        }
        d_bank.bias[n] = d_bias;
    }
    Ok(Conv2dGrads {
        input: d_input,
        bank: d_bank,
    })
}
