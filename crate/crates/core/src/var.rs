//! Ridge-regularized vector autoregression.
//!
//! `y_t = c + A_1 y_{t-1} + ... + A_p y_{t-p} + e_t`, estimated by normal
//! equations on the lagged design matrix with an L2 penalty on the
//! coefficients (intercept unpenalized). A joint model over thousands of
//! series is infeasible with ~100-200 rows, so the cuboid driver fits one
//! independent block per region (or per event) and stacks the forecasts.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{CsError, Result};
use crate::nn::Mat;
use crate::tensor::{DataCuboid, ForecastBlock};

/// How the cuboid's series are grouped into jointly modeled blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Blocking {
    /// One VAR per region over its event vector (dimension `e_len`). Default.
    PerRegion,
    /// One VAR per event over its region vector (dimension `r_len`).
    PerEvent,
}

#[derive(Debug, Clone)]
pub struct VarModel {
    /// Lag order.
    p: usize,
    dim: usize,
    /// Coefficient matrices `A_1 .. A_p`, each `dim x dim`.
    coeffs: Vec<Mat>,
    intercept: Vec<f64>,
    ridge: f64,
}

impl VarModel {
    pub fn lag_order(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, lag: usize) -> &Mat {
        &self.coeffs[lag]
    }

    pub fn intercept(&self) -> &[f64] {
        &self.intercept
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Largest absolute coefficient entry across all lags.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|m| m.data().iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Least-squares fit with ridge `lambda` on coefficients.
///
/// `history` is T rows of d values, oldest first. Needs `T > p`;
/// at `lambda = 0` a rank-deficient design raises `SingularDesign`.
pub fn fit_var(history: &[Vec<f64>], p: usize, lambda: f64) -> Result<VarModel> {
    if p < 1 {
        return Err(CsError::InvalidConfig("lag order must be >= 1".into()));
    }
    if lambda < 0.0 {
        return Err(CsError::InvalidConfig("ridge must be >= 0".into()));
    }
    let t_len = history.len();
    if t_len <= p {
        return Err(CsError::InsufficientHistory {
            have: t_len,
            need: p + 1,
        });
    }
    let dim = history[0].len();
    if dim < 1 || history.iter().any(|row| row.len() != dim) {
        return Err(CsError::ShapeMismatch("ragged history rows".into()));
    }

    let n_obs = t_len - p;
    let k = 1 + p * dim;
    let mut x = DMatrix::<f64>::zeros(n_obs, k);
    let mut y = DMatrix::<f64>::zeros(n_obs, dim);
    for i in 0..n_obs {
        let t = i + p;
        x[(i, 0)] = 1.0;
        for lag in 0..p {
            for j in 0..dim {
                x[(i, 1 + lag * dim + j)] = history[t - lag - 1][j];
            }
        }
        for j in 0..dim {
            y[(i, j)] = history[t][j];
        }
    }

    let mut xtx = x.transpose() * &x;
    for j in 1..k {
        xtx[(j, j)] += lambda;
    }
    let xty = x.transpose() * y;
    let chol = Cholesky::new(xtx).ok_or(CsError::SingularDesign)?;
    let beta = chol.solve(&xty); // k x dim

    let intercept: Vec<f64> = (0..dim).map(|i| beta[(0, i)]).collect();
    let mut coeffs = Vec::with_capacity(p);
    for lag in 0..p {
        let mut a = Mat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                a.set(i, j, beta[(1 + lag * dim + j, i)]);
            }
        }
        coeffs.push(a);
    }
    if intercept.iter().any(|v| !v.is_finite())
        || coeffs.iter().any(|m| m.data().iter().any(|v| !v.is_finite()))
    {
        return Err(CsError::SingularDesign);
    }
    Ok(VarModel {
        p,
        dim,
        coeffs,
        intercept,
        ridge: lambda,
    })
}

/// Iterated one-step forecasts, feeding predictions back as inputs.
/// `tail` must hold at least the last `p` observations, oldest first.
pub fn forecast_var(model: &VarModel, tail: &[Vec<f64>], horizon: usize) -> Result<Vec<Vec<f64>>> {
    if tail.len() < model.p {
        return Err(CsError::InsufficientHistory {
            have: tail.len(),
            need: model.p,
        });
    }
    if tail.iter().any(|row| row.len() != model.dim) {
        return Err(CsError::ShapeMismatch("tail width != model dimension".into()));
    }
    let mut recent: Vec<Vec<f64>> = tail[tail.len() - model.p..].to_vec();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut next = model.intercept.clone();
        for lag in 0..model.p {
            let prev = &recent[recent.len() - 1 - lag];
            let contribution = model.coeffs[lag].matvec(prev);
            for (n, c) in next.iter_mut().zip(&contribution) {
                *n += c;
            }
        }
        recent.push(next.clone());
        recent.remove(0);
        out.push(next);
    }
    Ok(out)
}

/// The implied unconditional mean `(I - sum A_i)^-1 c` of a stable model.
pub fn implied_mean(model: &VarModel) -> Result<Vec<f64>> {
    let d = model.dim;
    let mut m = DMatrix::<f64>::identity(d, d);
    for a in &model.coeffs {
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] -= a.get(i, j);
            }
        }
    }
    let c = DMatrix::from_iterator(d, 1, model.intercept.iter().cloned());
    let solved = m.lu().solve(&c).ok_or(CsError::SingularDesign)?;
    Ok((0..d).map(|i| solved[(i, 0)]).collect())
}

/// Fits and forecasts each block independently and stacks the results.
pub fn var_forecast_cuboid(
    cuboid: &DataCuboid,
    p: usize,
    lambda: f64,
    horizon: usize,
    blocking: Blocking,
) -> Result<ForecastBlock> {
    let (e_len, r_len) = (cuboid.e_len(), cuboid.r_len());
    let mut out = ForecastBlock::zeros(horizon, e_len, r_len);
    match blocking {
        Blocking::PerRegion => {
            for r in 0..r_len {
                let rows: Vec<Vec<f64>> = (0..cuboid.t_len())
                    .map(|t| (0..e_len).map(|e| cuboid.get(t, e, r)).collect())
                    .collect();
                let model = fit_var(&rows, p, lambda)?;
                let fc = forecast_var(&model, &rows, horizon)?;
                for (h, row) in fc.iter().enumerate() {
                    for (e, v) in row.iter().enumerate() {
                        out.set(h, e, r, *v);
                    }
                }
            }
        }
        Blocking::PerEvent => {
            for e in 0..e_len {
                let rows: Vec<Vec<f64>> = (0..cuboid.t_len())
                    .map(|t| (0..r_len).map(|r| cuboid.get(t, e, r)).collect())
                    .collect();
                let model = fit_var(&rows, p, lambda)?;
                let fc = forecast_var(&model, &rows, horizon)?;
                for (h, row) in fc.iter().enumerate() {
                    for (r, v) in row.iter().enumerate() {
                        out.set(h, e, r, *v);
                    }
                }
            }
        }
    }
    Ok(out)
}
