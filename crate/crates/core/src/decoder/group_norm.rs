//! Single-group normalization: each sample (row) is normalized across all
//! units of the layer, then scaled by `gamma` and shifted by `beta`.

use crate::error::{Error, Result};
use crate::ndcore::Matrix;

pub const GROUP_NORM_EPS: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct GroupNormCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
}

pub fn group_norm_forward(h: &Matrix, gamma: &Matrix, beta: &Matrix) -> Result<(Matrix, GroupNormCache)> {
    let width = h.cols();
    if width < 2 {
        return Err(Error::InvalidArgument(format!("group norm needs width >= 2, got {width}")));
    }
    if gamma.shape() != (1, width) || beta.shape() != (1, width) {
        return Err(Error::ShapeMismatch { op: "group_norm_forward", left: h.shape(), right: gamma.shape() });
    }
    let mut normalized = Matrix::zeros(h.rows(), width);
    let mut out = Matrix::zeros(h.rows(), width);
    let mut inv_std = Vec::with_capacity(h.rows());
    let (g, b) = (gamma.as_slice(), beta.as_slice());
    for i in 0..h.rows() {
        let row = h.row(i);
        let mean = row.iter().sum::<f64>() / width as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / width as f64;
        let inv = 1.0 / (var + GROUP_NORM_EPS).sqrt();
        inv_std.push(inv);
        let xn = normalized.row_mut(i);
        for (x, v) in xn.iter_mut().zip(row) {
            *x = (v - mean) * inv;
        }
        let xn = normalized.row(i).to_vec();
        for (j, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = g[j] * xn[j] + b[j];
        }
    }
    Ok((out, GroupNormCache { normalized, inv_std }))
}

/// Returns `(d_input, d_gamma, d_beta)`.
pub fn group_norm_backward(upstream: &Matrix, cache: &GroupNormCache, gamma: &Matrix) -> Result<(Matrix, Matrix, Matrix)> {
    upstream.ensure_same_shape(&cache.normalized, "group_norm_backward")?;
    let width = upstream.cols();
    let g = gamma.as_slice();
    let mut d_gamma = vec![0.0; width];
    let mut d_beta = vec![0.0; width];
    let mut d_in = Matrix::zeros(upstream.rows(), width);
    let mut dxn = vec![0.0; width];
    for i in 0..upstream.rows() {
        let dy = upstream.row(i);
        let xn = cache.normalized.row(i);
        for j in 0..width {
            d_gamma[j] += dy[j] * xn[j];
            d_beta[j] += dy[j];
            dxn[j] = dy[j] * g[j];
        }
        let mean_d = dxn.iter().sum::<f64>() / width as f64;
        let mean_dx = dxn.iter().zip(xn).map(|(a, b)| a * b).sum::<f64>() / width as f64;
        let inv = cache.inv_std[i];
        for (j, o) in d_in.row_mut(i).iter_mut().enumerate() {
            *o = inv * (dxn[j] - mean_d - xn[j] * mean_dx);
        }
    }
    Ok((d_in, Matrix::row_vector(&d_gamma), Matrix::row_vector(&d_beta)))
}
