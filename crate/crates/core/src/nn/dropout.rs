//! Inverted dropout: train-time masking scaled by 1/(1-p) so evaluation is
//! the identity and expectations are preserved.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Eval,
}

/// Multiplicative mask: each entry is 0 with probability `p`, else 1/(1-p).
///
/// The mask doubles as the backward pass (multiply upstream gradients by it).
pub fn dropout_mask(len: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(CsError::InvalidRate(p));
    }
    if p == 0.0 {
        return Ok(vec![1.0; len]);
    }
    let keep_scale = 1.0 / (1.0 - p);
    Ok((0..len)
        .map(|_| {
            if rng.gen::<f64>() < p {
                0.0
            } else {
                keep_scale
            }
        })
        .collect())
}

pub fn dropout_apply(
    values: &[f64],
    p: f64,
    mode: DropoutMode,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(CsError::InvalidRate(p));
    }
    match mode {
        DropoutMode::Eval => Ok(values.to_vec()),
        DropoutMode::Train => {
            let mask = dropout_mask(values.len(), p, rng)?;
            Ok(values.iter().zip(&mask).map(|(v, m)| v * m).collect())
        }
    }
}
