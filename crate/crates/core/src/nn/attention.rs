//! Multi-head self-attention over an unordered token set.
//!
//! One sublayer of the classic encoder: per-head scaled dot-product
//! attention, head concatenation, a shared output projection, then a
//! residual connection and layer normalization. No positional encoding is
//! applied (the token axis is a set of regions, not a sequence), which
//! makes permutation equivariance a testable property. The position-wise
//! feed-forward sublayer is assembled on top of this block by the model.

use rand_chacha::ChaCha8Rng;

use crate::error::{CsError, Result};
use crate::nn::{FlatCursor, Mat};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Per-head query/key/value projections plus the shared output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    d_model: usize,
    n_heads: usize,
    wq: Vec<Mat>,
    wk: Vec<Mat>,
    wv: Vec<Mat>,
    wo: Mat,
}

impl AttentionParams {
    pub fn init(d_model: usize, n_heads: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Self::check_dims(d_model, n_heads)?;
        let d_head = d_model / n_heads;
        let proj = |rng: &mut ChaCha8Rng| -> Vec<Mat> {
            (0..n_heads)
                .map(|_| Mat::init_uniform(d_head, d_model, rng))
                .collect()
        };
        Ok(AttentionParams {
            d_model,
            n_heads,
            wq: proj(rng),
            wk: proj(rng),
            wv: proj(rng),
            wo: Mat::init_uniform(d_model, d_model, rng),
        })
    }

    pub fn zeros(d_model: usize, n_heads: usize) -> Result<Self> {
        Self::check_dims(d_model, n_heads)?;
        let d_head = d_model / n_heads;
        let proj = || (0..n_heads).map(|_| Mat::zeros(d_head, d_model)).collect();
        Ok(AttentionParams {
            d_model,
            n_heads,
            wq: proj(),
            wk: proj(),
            wv: proj(),
            wo: Mat::zeros(d_model, d_model),
        })
    }

    fn check_dims(d_model: usize, n_heads: usize) -> Result<()> {
        if d_model == 0 || n_heads == 0 || !d_model.is_multiple_of(n_heads) {
            return Err(CsError::ShapeMismatch(format!(
                "d_model {d_model} must be a positive multiple of n_heads {n_heads}"
            )));
        }
        Ok(())
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn n_heads(&self) -> usize {
        self.n_heads
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn zeros_like(&self) -> Self {
        AttentionParams::zeros(self.d_model, self.n_heads).unwrap()
    }

    pub fn param_len(&self) -> usize {
        3 * self.n_heads * self.d_head() * self.d_model + self.d_model * self.d_model
    }

    pub fn push_flat(&self, out: &mut Vec<f64>) {
        for group in [&self.wq, &self.wk, &self.wv] {
            for m in group {
                m.push_flat(out);
            }
        }
        self.wo.push_flat(out);
    }

    pub fn read_flat(&mut self, cursor: &mut FlatCursor) -> Result<()> {
        for group in [&mut self.wq, &mut self.wk, &mut self.wv] {
            for m in group {
                m.read_flat(cursor)?;
            }
        }
        self.wo.read_flat(cursor)
    }

    pub fn weight_sq_sum(&self) -> f64 {
        let heads: f64 = [&self.wq, &self.wk, &self.wv]
            .iter()
            .flat_map(|g| g.iter())
            .map(|m| m.data().iter().map(|w| w * w).sum::<f64>())
            .sum();
        heads + self.wo.data().iter().map(|w| w * w).sum::<f64>()
    }

    /// All projection matrices are weights; there are no biases here.
    pub fn add_scaled_weights(&mut self, other: &Self, scale: f64) {
        for h in 0..self.n_heads {
            self.wq[h].add_scaled(&other.wq[h], scale);
            self.wk[h].add_scaled(&other.wk[h], scale);
            self.wv[h].add_scaled(&other.wv[h], scale);
        }
        self.wo.add_scaled(&other.wo, scale);
    }
}

/// Stabilized softmax over one score row; rows sum to 1 within 1e-12 and
/// stay finite for inputs up to 1e4 in magnitude.
pub fn softmax_row(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Normalizes a vector to zero mean and unit variance (epsilon-guarded).
/// Returns the normalized vector and `1 / sqrt(var + eps)` for backward.
pub fn layer_norm_forward(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    (x.iter().map(|v| (v - mean) * inv_std).collect(), inv_std)
}

/// Input gradient of layer normalization given the normalized output `y`.
pub fn layer_norm_backward(y: &[f64], inv_std: f64, dy: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let mean_dy = dy.iter().sum::<f64>() / n;
    let mean_dy_y = dy.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n;
    y.iter()
        .zip(dy)
        .map(|(yv, dyv)| inv_std * (dyv - mean_dy - yv * mean_dy_y))
        .collect()
}

/// Cached forward state for [`attention_backward`]. Projections, weights,
/// inputs, and mixes are stored flat (`token * width + component`;
/// attention weights `query * n + key`).
pub struct AttentionTape {
    n: usize,
    x: Vec<f64>,
    q: Vec<Vec<f64>>,
    k: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    attn: Vec<Vec<f64>>,
    concat: Vec<f64>,
    y: Vec<Vec<f64>>,
    inv_std: Vec<f64>,
}

pub struct AttentionGrads {
    pub tokens: Vec<Vec<f64>>,
    pub params: AttentionParams,
}

pub fn attention_forward(tokens: &[Vec<f64>], params: &AttentionParams) -> Result<Vec<Vec<f64>>> {
    let (out, _) = attention_forward_tape(tokens, params)?;
    Ok(out)
}

pub fn attention_forward_tape(
    tokens: &[Vec<f64>],
    params: &AttentionParams,
) -> Result<(Vec<Vec<f64>>, AttentionTape)> {
    let n = tokens.len();
    if n == 0 {
        return Err(CsError::ShapeMismatch("empty token sequence".into()));
    }
    for t in tokens {
        if t.len() != params.d_model {
            return Err(CsError::ShapeMismatch(format!(
                "token width {} != d_model {}",
                t.len(),
                params.d_model
            )));
        }
    }
    let d_head = params.d_head();
    let d_model = params.d_model;
    let scale = 1.0 / (d_head as f64).sqrt();

    let mut q = Vec::with_capacity(params.n_heads);
    let mut k = Vec::with_capacity(params.n_heads);
    let mut v = Vec::with_capacity(params.n_heads);
    let mut attn = Vec::with_capacity(params.n_heads);
    let mut concat = vec![0.0; n * d_model];

    for h in 0..params.n_heads {
        let project = |m: &Mat| -> Vec<f64> {
            let mut out = vec![0.0; n * d_head];
            for (i, tok) in tokens.iter().enumerate() {
                let slot = &mut out[i * d_head..(i + 1) * d_head];
                for (a, o) in slot.iter_mut().enumerate() {
                    *o = crate::nn::dot(m.row(a), tok);
                }
            }
            out
        };
        let qh = project(&params.wq[h]);
        let kh = project(&params.wk[h]);
        let vh = project(&params.wv[h]);

        let mut ah = vec![0.0; n * n];
        for i in 0..n {
            let qi = &qh[i * d_head..(i + 1) * d_head];
            let row = &mut ah[i * n..(i + 1) * n];
            for (j, r) in row.iter_mut().enumerate() {
                *r = crate::nn::dot(qi, &kh[j * d_head..(j + 1) * d_head]) * scale;
            }
            softmax_row(row);
        }

        for i in 0..n {
            let slot = &mut concat[i * d_model + h * d_head..i * d_model + (h + 1) * d_head];
            let row = &ah[i * n..(i + 1) * n];
            for (j, w) in row.iter().enumerate() {
                let vj = &vh[j * d_head..(j + 1) * d_head];
                for (s, vd) in slot.iter_mut().zip(vj) {
                    *s += w * vd;
                }
            }
        }
        q.push(qh);
        k.push(kh);
        v.push(vh);
        attn.push(ah);
    }

    let mut y = Vec::with_capacity(n);
    let mut inv_std = Vec::with_capacity(n);
    let mut u = vec![0.0; d_model];
    for i in 0..n {
        let ci = &concat[i * d_model..(i + 1) * d_model];
        for (a, uv) in u.iter_mut().enumerate() {
            *uv = tokens[i][a] + crate::nn::dot(params.wo.row(a), ci);
        }
        let (yi, s) = layer_norm_forward(&u);
        y.push(yi);
        inv_std.push(s);
    }

    let mut x = Vec::with_capacity(n * d_model);
    for tok in tokens {
        x.extend_from_slice(tok);
    }
    let tape = AttentionTape {
        n,
        x,
        q,
        k,
        v,
        attn,
        concat,
        y: y.clone(),
        inv_std,
    };
    Ok((y, tape))
}

/// Gradients of `sum(upstream . output)` w.r.t. tokens and parameters.
pub fn attention_backward(
    tape: &AttentionTape,
    params: &AttentionParams,
    upstream: &[Vec<f64>],
) -> Result<AttentionGrads> {
    let mut d_params = params.zeros_like();
    let tokens = attention_backward_acc(tape, params, upstream, &mut d_params)?;
    Ok(AttentionGrads {
        tokens,
        params: d_params,
    })
}

/// Backward pass accumulating parameter gradients into `acc` (mirroring
/// `params`); returns the token gradients.
pub fn attention_backward_acc(
    tape: &AttentionTape,
    params: &AttentionParams,
    upstream: &[Vec<f64>],
    acc: &mut AttentionParams,
) -> Result<Vec<Vec<f64>>> {
    let n = tape.n;
    let d_model = params.d_model;
    if upstream.len() != n || upstream.iter().any(|u| u.len() != d_model) {
        return Err(CsError::TapeMismatch(
            "upstream shape does not match the recorded forward".into(),
        ));
    }
    if tape.q.len() != params.n_heads || tape.x.len() != n * d_model {
        return Err(CsError::TapeMismatch(
            "parameters do not match the recorded forward".into(),
        ));
    }
    let d_head = params.d_head();
    let scale = 1.0 / (d_head as f64).sqrt();

    let mut d_tokens = vec![vec![0.0; d_model]; n];

    // Residual + layer norm, then the output projection.
    let mut d_concat = vec![0.0; n * d_model];
    for i in 0..n {
        let du = layer_norm_backward(&tape.y[i], tape.inv_std[i], &upstream[i]);
        for (dt, d) in d_tokens[i].iter_mut().zip(&du) {
            *dt += d;
        }
        acc.wo.add_outer(&du, &tape.concat[i * d_model..(i + 1) * d_model]);
        // d_concat_i = Wo^T du, accumulated row by row.
        let dci = &mut d_concat[i * d_model..(i + 1) * d_model];
        for (a, dua) in du.iter().enumerate() {
            let row = params.wo.row(a);
            for (dc, w) in dci.iter_mut().zip(row) {
                *dc += dua * w;
            }
        }
    }

    let mut da = vec![0.0; n];
    for h in 0..params.n_heads {
        let qh = &tape.q[h];
        let kh = &tape.k[h];
        let vh = &tape.v[h];
        let ah = &tape.attn[h];

        let mut dq = vec![0.0; n * d_head];
        let mut dk = vec![0.0; n * d_head];
        let mut dv = vec![0.0; n * d_head];

        for i in 0..n {
            let dm = &d_concat[i * d_model + h * d_head..i * d_model + (h + 1) * d_head];
            let arow = &ah[i * n..(i + 1) * n];
            // Attention-weight gradients for row i, then softmax backward.
            for (j, daj) in da.iter_mut().enumerate() {
                let vj = &vh[j * d_head..(j + 1) * d_head];
                *daj = crate::nn::dot(dm, vj);
                let w = arow[j];
                let dvj = &mut dv[j * d_head..(j + 1) * d_head];
                for (dvd, dmd) in dvj.iter_mut().zip(dm) {
                    *dvd += w * dmd;
                }
            }
            let weighted = crate::nn::dot(arow, &da);
            for j in 0..n {
                let ds = arow[j] * (da[j] - weighted) * scale;
                let kj = &kh[j * d_head..(j + 1) * d_head];
                let qi = &qh[i * d_head..(i + 1) * d_head];
                let dqi = &mut dq[i * d_head..(i + 1) * d_head];
                for (dqd, kd) in dqi.iter_mut().zip(kj) {
                    *dqd += ds * kd;
                }
                let dkj = &mut dk[j * d_head..(j + 1) * d_head];
                for (dkd, qd) in dkj.iter_mut().zip(qi) {
                    *dkd += ds * qd;
                }
            }
        }

        for i in 0..n {
            let xi = &tape.x[i * d_model..(i + 1) * d_model];
            let dqi = &dq[i * d_head..(i + 1) * d_head];
            let dki = &dk[i * d_head..(i + 1) * d_head];
            let dvi = &dv[i * d_head..(i + 1) * d_head];
            acc.wq[h].add_outer(dqi, xi);
            acc.wk[h].add_outer(dki, xi);
            acc.wv[h].add_outer(dvi, xi);
            // dx += Wq^T dq + Wk^T dk + Wv^T dv, accumulated row by row.
            let dti = &mut d_tokens[i];
            for a in 0..d_head {
                let (gq, gk, gv) = (dqi[a], dki[a], dvi[a]);
                let rq = params.wq[h].row(a);
                let rk = params.wk[h].row(a);
                let rv = params.wv[h].row(a);
                for d in 0..d_model {
                    dti[d] += gq * rq[d] + gk * rk[d] + gv * rv[d];
                }
            }
        }
    }

    Ok(d_tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_difference_check;
    use crate::rng::seeded_rng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn random_tokens(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn softmax_rows_sum_to_one_and_stay_finite() {
        let mut rng = seeded_rng(5);
        for _ in 0..100 {
            let n = rng.gen_range(1..12);
            let mut row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1e4..1e4)).collect();
            softmax_row(&mut row);
            assert!(row.iter().all(|v| v.is_finite() && *v >= 0.0));
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "row sums to {sum}");
        }
    }

    #[test]
    fn single_token_output_is_projected_value_plus_residual_norm() {
        let mut rng = seeded_rng(6);
        let params = AttentionParams::init(4, 2, &mut rng).unwrap();
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = attention_forward(std::slice::from_ref(&x), &params).unwrap();

        // With one key the softmax weight is 1, so the pre-residual output
        // is OutProj of the concatenated per-head values.
        let mut concat = Vec::new();
        for h in 0..2 {
            concat.extend(params.wv[h].matvec(&x));
        }
        let o = params.wo.matvec(&concat);
        let u: Vec<f64> = x.iter().zip(&o).map(|(a, b)| a + b).collect();
        let (expected, _) = layer_norm_forward(&u);
        for (a, b) in out[0].iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn identical_tokens_get_identical_outputs() {
        let mut rng = seeded_rng(7);
        let params = AttentionParams::init(6, 3, &mut rng).unwrap();
        let token: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tokens = vec![token; 5];
        let (out, tape) = attention_forward_tape(&tokens, &params).unwrap();
        for w in tape.attn.iter().flat_map(|h| h.iter()) {
            assert!((w - 0.2).abs() < 1e-12, "attention row not uniform: {w}");
        }
        for o in &out[1..] {
            assert_eq!(o, &out[0]);
        }
    }

    // Independent straight-line oracle: full dense score/softmax/mix
    // recomputation with separately written loops.
    #[test]
    fn matches_dense_recomputation_oracle() {
        let mut rng = seeded_rng(9);
        let params = AttentionParams::init(6, 2, &mut rng).unwrap();
        let tokens = random_tokens(5, 6, &mut rng);
        let out = attention_forward(&tokens, &params).unwrap();

        let d_head = 3;
        for i in 0..5 {
            let mut concat = [0.0; 6];
            for h in 0..2 {
                let q: Vec<f64> = (0..d_head)
                    .map(|a| (0..6).map(|b| params.wq[h].get(a, b) * tokens[i][b]).sum())
                    .collect();
                let mut scores = [0.0; 5];
                for j in 0..5 {
                    let kj: Vec<f64> = (0..d_head)
                        .map(|a| (0..6).map(|b| params.wk[h].get(a, b) * tokens[j][b]).sum())
                        .collect();
                    scores[j] = q.iter().zip(&kj).map(|(a, b)| a * b).sum::<f64>()
                        / (d_head as f64).sqrt();
                }
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
                let denom: f64 = exps.iter().sum();
                for j in 0..5 {
                    let vj: Vec<f64> = (0..d_head)
                        .map(|a| (0..6).map(|b| params.wv[h].get(a, b) * tokens[j][b]).sum())
                        .collect();
                    for a in 0..d_head {
                        concat[h * d_head + a] += exps[j] / denom * vj[a];
                    }
                }
            }
            let mut u = [0.0; 6];
            for a in 0..6 {
                u[a] = tokens[i][a]
                    + (0..6).map(|b| params.wo.get(a, b) * concat[b]).sum::<f64>();
            }
            let mean = u.iter().sum::<f64>() / 6.0;
            let var = u.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 6.0;
            for a in 0..6 {
                let expected = (u[a] - mean) / (var + LAYER_NORM_EPS).sqrt();
                assert!(
                    (out[i][a] - expected).abs() < 1e-10,
                    "token {i} dim {a}: {} vs {expected}",
                    out[i][a]
                );
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = seeded_rng(10);
        let params = AttentionParams::init(4, 2, &mut rng).unwrap();
        let tokens = random_tokens(3, 4, &mut rng);
        let (_, tape) = attention_forward_tape(&tokens, &params).unwrap();
        let zeros = vec![vec![0.0; 4]; 3];
        let grads = attention_backward(&tape, &params, &zeros).unwrap();
        assert!(grads.tokens.iter().flatten().all(|&g| g == 0.0));
        let mut flat = Vec::new();
        grads.params.push_flat(&mut flat);
        assert!(flat.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = seeded_rng(11);
        for _ in 0..10 {
            let params = AttentionParams::init(4, 2, &mut rng).unwrap();
            let tokens = random_tokens(3, 4, &mut rng);
            let upstream = random_tokens(3, 4, &mut rng);

            let (_, tape) = attention_forward_tape(&tokens, &params).unwrap();
            let grads = attention_backward(&tape, &params, &upstream).unwrap();
            let mut analytic = Vec::new();
            grads.params.push_flat(&mut analytic);
            for t in &grads.tokens {
                analytic.extend_from_slice(t);
            }

            let mut point = Vec::new();
            params.push_flat(&mut point);
            for t in &tokens {
                point.extend_from_slice(t);
            }

            let proto = params.clone();
            let up = upstream.clone();
            let err = finite_difference_check(&point, &analytic, 1e-5, |flat| {
                let mut p = proto.clone();
                let split = p.param_len();
                let mut cursor = FlatCursor::new(&flat[..split]);
                p.read_flat(&mut cursor).unwrap();
                let toks: Vec<Vec<f64>> =
                    flat[split..].chunks(4).map(|c| c.to_vec()).collect();
                let out = attention_forward(&toks, &p).unwrap();
                out.iter()
                    .flatten()
                    .zip(up.iter().flatten())
                    .map(|(a, b)| a * b)
                    .sum()
            });
            assert!(err < 1e-4, "finite-difference mismatch: {err}");
        }
    }

    // Swapping the first two tokens only reorders the first two terms of
    // each cross-token reduction, which is exact in IEEE arithmetic, so the
    // equivariance check can demand bit equality.
    #[test]
    fn swap_first_two_tokens_is_exactly_equivariant() {
        let mut rng = seeded_rng(12);
        let params = AttentionParams::init(6, 2, &mut rng).unwrap();
        let tokens = random_tokens(5, 6, &mut rng);
        let mut swapped = tokens.clone();
        swapped.swap(0, 1);

        let out = attention_forward(&tokens, &params).unwrap();
        let out_swapped = attention_forward(&swapped, &params).unwrap();
        assert_eq!(out_swapped[0], out[1]);
        assert_eq!(out_swapped[1], out[0]);
        for i in 2..5 {
            assert_eq!(out_swapped[i], out[i]);
        }

        // Token gradients permute the same way.
        let upstream = random_tokens(5, 6, &mut rng);
        let mut upstream_swapped = upstream.clone();
        upstream_swapped.swap(0, 1);
        let (_, tape) = attention_forward_tape(&tokens, &params).unwrap();
        let (_, tape_swapped) = attention_forward_tape(&swapped, &params).unwrap();
        let g = attention_backward(&tape, &params, &upstream).unwrap();
        let gs = attention_backward(&tape_swapped, &params, &upstream_swapped).unwrap();
        assert_eq!(gs.tokens[0], g.tokens[1]);
        assert_eq!(gs.tokens[1], g.tokens[0]);
        for i in 2..5 {
            assert_eq!(gs.tokens[i], g.tokens[i]);
        }
    }

    // Arbitrary permutations reorder whole reductions; equivariance then
    // holds up to summation rounding, checked at 1e-12.
    #[test]
    fn arbitrary_permutations_equivariant_within_tolerance() {
        let mut rng = seeded_rng(13);
        let params = AttentionParams::init(4, 2, &mut rng).unwrap();
        let tokens = random_tokens(6, 4, &mut rng);
        let out = attention_forward(&tokens, &params).unwrap();
        for _ in 0..5 {
            let mut perm: Vec<usize> = (0..6).collect();
            perm.shuffle(&mut rng);
            let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| tokens[i].clone()).collect();
            let out_permuted = attention_forward(&permuted, &params).unwrap();
            for (dst, &src) in perm.iter().enumerate() {
                for d in 0..4 {
                    assert!(
                        (out_permuted[dst][d] - out[src][d]).abs() < 1e-12,
                        "permutation equivariance violated"
                    );
                }
            }
        }
    }

    #[test]
    fn layer_norm_backward_matches_finite_differences() {
        let mut rng = seeded_rng(14);
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let dy: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (y, inv_std) = layer_norm_forward(&x);
        let dx = layer_norm_backward(&y, inv_std, &dy);
        let err = finite_difference_check(&x, &dx, 1e-6, |p| {
            let (yp, _) = layer_norm_forward(p);
            yp.iter().zip(&dy).map(|(a, b)| a * b).sum()
        });
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn token_width_mismatch_rejected() {
        let mut rng = seeded_rng(15);
        let params = AttentionParams::init(4, 2, &mut rng).unwrap();
        let bad = vec![vec![0.0; 3]];
        assert!(matches!(
            attention_forward(&bad, &params),
            Err(CsError::ShapeMismatch(_))
        ));
    }
}
