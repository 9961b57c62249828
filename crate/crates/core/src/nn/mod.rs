//! Differentiable building blocks with explicit forward and backward passes.
//!
//! Every block caches its forward intermediates in a tape struct; the
//! matching backward consumes the tape and returns gradients of
//! `sum(upstream * output)` with respect to inputs and parameters.
//! Gradients share their parameter struct's shape so the same flattening
//! code serves the optimizer, the model file, and the finite-difference
//! harness in [`gradcheck`].

mod attention;
mod conv2d;
mod dropout;
mod gradcheck;
mod mlp;

pub use attention::{
    attention_backward, attention_backward_acc, attention_forward, attention_forward_tape,
    layer_norm_backward, layer_norm_forward, softmax_row, AttentionGrads, AttentionParams,
    AttentionTape, LAYER_NORM_EPS,
};
pub use conv2d::{
    conv2d_backward, conv2d_forward, conv2d_forward_tape, Conv2dGrads, Conv2dTape, KernelBank,
};
pub use dropout::{dropout_apply, dropout_mask, DropoutMode};
pub use gradcheck::finite_difference_check;
pub use mlp::{
    mlp_backward, mlp_backward_acc, mlp_forward, mlp_forward_tape, DenseLayer, MlpParams,
    MlpTape,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CsError, Result};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Dense matrix mapping `cols`-vectors to `rows`-vectors (`y = M x`), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CsError::ShapeMismatch(format!(
                "matrix data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Uniform fan-scaled init: entries in +-sqrt(6 / (fan_in + fan_out)).
    pub fn init_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// `y = M x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            y[r] = acc;
        }
        y
    }

    /// `y = M^T x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let xv = x[r];
            for (yc, w) in y.iter_mut().zip(row) {
                *yc += w * xv;
            }
        }
        y
    }

    /// `M += y x^T` (outer-product accumulation for weight gradients).
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for r in 0..self.rows {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            let yv = y[r];
            for (w, xv) in row.iter_mut().zip(x) {
                *w += yv * xv;
            }
        }
    }

    pub fn push_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.data);
    }

    pub fn read_flat(&mut self, cursor: &mut FlatCursor) -> Result<()> {
        cursor.take_into(&mut self.data)
    }

    /// `self += scale * other`, entrywise.
    pub fn add_scaled(&mut self, other: &Mat, scale: f64) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}

/// Sequential reader over a flat parameter vector.
pub struct FlatCursor<'a> {
    data: &'a [f64],
    pos: usize,
}

impl<'a> FlatCursor<'a> {
    pub fn new(data: &'a [f64]) -> Self {
        FlatCursor { data, pos: 0 }
    }

    pub fn take_into(&mut self, dst: &mut [f64]) -> Result<()> {
        let end = self.pos + dst.len();
        if end > self.data.len() {
            return Err(CsError::ShapeMismatch(format!(
                "flat parameter vector too short: need {end}, have {}",
                self.data.len()
            )));
        }
        dst.copy_from_slice(&self.data[self.pos..end]);
        self.pos = end;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(CsError::ShapeMismatch(format!(
                "flat parameter vector too long: consumed {}, have {}",
                self.pos,
                self.data.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    #[test]
    fn matvec_and_transpose_agree_with_direct_sums() {
        let m = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(m.matvec_t(&[1.0, -1.0]), vec![-3.0, -3.0, -3.0]);
    }

    #[test]
    fn outer_accumulation() {
        let mut m = Mat::zeros(2, 2);
        m.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(m.data(), &[3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn init_respects_fan_bound() {
        let mut rng = seeded_rng(3);
        let m = Mat::init_uniform(8, 4, &mut rng);
        let bound = (6.0 / 12.0f64).sqrt();
        assert!(m.data().iter().all(|w| w.abs() < bound));
        assert!(m.data().iter().any(|w| *w != 0.0));
    }

    #[test]
    fn cursor_detects_length_mismatch() {
        let flat = vec![1.0, 2.0, 3.0];
        let mut m = Mat::zeros(1, 2);
        let mut cursor = FlatCursor::new(&flat);
        m.read_flat(&mut cursor).unwrap();
        assert!(cursor.finish().is_err());
    }
}
