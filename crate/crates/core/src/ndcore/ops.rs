use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Exponential linear unit.
#[inline]
pub fn elu(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        alpha * x.exp_m1()
    }
}

/// Derivative of [`elu`]; `alpha · eˣ` on the non-positive side.
#[inline]
pub fn elu_grad(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        alpha * x.exp()
    }
}

/// Rescales every row with ℓ2 norm above 1 onto the unit sphere.
pub fn project_rows_unit_ball(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    project_rows_unit_ball_in_place(&mut out);
    out
}

pub fn project_rows_unit_ball_in_place(z: &mut Matrix) {
    for i in 0..z.rows() {
        let row = z.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 {
            row.iter_mut().for_each(|v| *v /= norm);
            // rounding can leave the norm one ulp above 1, which would make a
            // second projection move the row again
            while row.iter().map(|v| v * v).sum::<f64>().sqrt() > 1.0 {
                row.iter_mut().for_each(|v| *v *= 1.0 - f64::EPSILON);
            }
        }
    }
}

/// Central-difference gradient of `f` at `x`, one entry at a time.
pub fn finite_diff_grad(mut f: impl FnMut(&Matrix) -> f64, x: &Matrix, h: f64) -> Result<Matrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let mut probe = x.clone();
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for k in 0..x.as_slice().len() {
        let orig = probe.as_slice()[k];
        probe.as_mut_slice()[k] = orig + h;
        let up = f(&probe);
        probe.as_mut_slice()[k] = orig - h;
        let down = f(&probe);
        probe.as_mut_slice()[k] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFiniteValue);
        }
        grad.as_mut_slice()[k] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

/// Largest entrywise `|a − b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(a: &Matrix, b: &Matrix, floor: f64) -> Result<f64> {
    a.ensure_same_shape(b, "max_relative_error")?;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max))
}

/// Per-column location and scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

const DEGENERATE_SD: f64 = 1e-12;

impl ColumnStats {
    fn divisor(&self, j: usize) -> f64 {
        if self.sd[j] < DEGENERATE_SD {
            1.0
        } else {
            self.sd[j]
        }
    }

    pub fn select(&self, idx: &[usize]) -> Result<ColumnStats> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.mean.len()) {
            return Err(Error::IndexOutOfRange { index: bad, bound: self.mean.len() });
        }
        Ok(ColumnStats {
            mean: idx.iter().map(|&j| self.mean[j]).collect(),
            sd: idx.iter().map(|&j| self.sd[j]).collect(),
        })
    }
}

/// Sample mean and sample standard deviation (divisor n − 1) per column.
pub fn standardize_fit(x: &Matrix) -> Result<ColumnStats> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("standardization needs at least 2 rows, got {n}")));
    }
    let mean: Vec<f64> = x.column_sums().as_slice().iter().map(|s| s / n as f64).collect();
    let mut ss = vec![0.0; x.cols()];
    for i in 0..n {
        for (j, v) in x.row(i).iter().enumerate() {
            let d = v - mean[j];
            ss[j] += d * d;
        }
    }
    let sd = ss.into_iter().map(|s| (s / (n - 1) as f64).sqrt()).collect();
    Ok(ColumnStats { mean, sd })
}

/// `(x − mean) / sd` per column; degenerate columns are only centered.
pub fn standardize_apply(x: &Matrix, stats: &ColumnStats) -> Result<Matrix> {
    if stats.mean.len() != x.cols() || stats.sd.len() != x.cols() {
        return Err(Error::ShapeMismatch { op: "standardize_apply", left: x.shape(), right: (1, stats.mean.len()) });
    }
    Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| (x[(i, j)] - stats.mean[j]) / stats.divisor(j)))
}

pub fn standardize_invert(x: &Matrix, stats: &ColumnStats) -> Result<Matrix> {
    if stats.mean.len() != x.cols() {
        return Err(Error::ShapeMismatch { op: "standardize_invert", left: x.shape(), right: (1, stats.mean.len()) });
    }
    Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] * stats.divisor(j) + stats.mean[j]))
}
