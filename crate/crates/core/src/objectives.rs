//! Reconstruction objectives and their gradients w.r.t. the reconstructions.
//!
//! The feature-selection objective sums, per view, the ℓ2,1 norm (sum of
//! column ℓ2 norms) of the residual plus `λ_d` times the ℓ2,1 norm of the
//! reconstruction, optionally smoothed by a normalized graph Laplacian. Both
//! norms are evaluated as `Σ_j √(‖m_j‖² + ε²)` so that the gradient is defined
//! at zero columns. The refit and inference objectives are plain squared
//! Frobenius reconstruction errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndcore::Matrix;

pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_SMOOTHING_EPS: f64 = 1e-8;

/// Σ_j ‖m_j‖₂ over columns.
pub fn l21_norm(m: &Matrix) -> f64 {
    m.column_norms().into_iter().sum()
}

/// Σ_j √(‖m_j‖² + eps²)
pub fn l21_norm_smoothed(m: &Matrix, eps: f64) -> f64 {
    m.column_sq_sums().into_iter().map(|s| (s + eps * eps).sqrt()).sum()
}

/// Entry `(i, j)` is `m_ij / √(‖m_j‖² + eps²)`.
pub fn l21_grad_smoothed(m: &Matrix, eps: f64) -> Matrix {
    let inv: Vec<f64> = m.column_sq_sums().into_iter().map(|s| 1.0 / (s + eps * eps).sqrt()).collect();
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * inv[j])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage1LossConfig {
    pub lambdas: Vec<f64>,
    /// Empty, or one optional `p_d × p_d` smoothing operator per view.
    #[serde(default)]
    pub laplacians: Vec<Option<Matrix>>,
    pub smoothing_eps: f64,
}

impl Stage1LossConfig {
    pub fn new(views: usize) -> Self {
        Self { lambdas: vec![DEFAULT_LAMBDA; views], laplacians: Vec::new(), smoothing_eps: DEFAULT_SMOOTHING_EPS }
    }

    fn laplacian(&self, d: usize) -> Option<&Matrix> {
        self.laplacians.get(d).and_then(Option::as_ref)
    }

    fn validate(&self, views: &[Matrix], recons: &[Matrix]) -> Result<()> {
        check_pairs(views, recons)?;
        if self.lambdas.len() != views.len() {
            return Err(Error::InvalidArgument(format!("{} lambdas for {} views", self.lambdas.len(), views.len())));
        }
        if self.lambdas.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::InvalidArgument("lambdas must be non-negative".into()));
        }
        if !self.laplacians.is_empty() && self.laplacians.len() != views.len() {
            return Err(Error::InvalidArgument(format!("{} laplacians for {} views", self.laplacians.len(), views.len())));
        }
        if !(self.smoothing_eps > 0.0) {
            return Err(Error::InvalidArgument("smoothing eps must be positive".into()));
        }
        for (d, x) in views.iter().enumerate() {
            if let Some(l) = self.laplacian(d) {
                if l.shape() != (x.cols(), x.cols()) {
                    return Err(Error::ShapeMismatch { op: "laplacian", left: l.shape(), right: (x.cols(), x.cols()) });
                }
            }
        }
        Ok(())
    }
}

fn check_pairs(views: &[Matrix], recons: &[Matrix]) -> Result<()> {
    if views.len() != recons.len() {
        return Err(Error::InvalidArgument(format!("{} views but {} reconstructions", views.len(), recons.len())));
    }
    for (x, r) in views.iter().zip(recons) {
        x.ensure_same_shape(r, "reconstruction")?;
    }
    Ok(())
}

/// Feature-selection loss.
pub fn stage1_loss(views: &[Matrix], recons: &[Matrix], cfg: &Stage1LossConfig) -> Result<f64> {
    cfg.validate(views, recons)?;
    let eps = cfg.smoothing_eps;
    let mut total = 0.0;
    for (d, (x, g)) in views.iter().zip(recons).enumerate() {
        total += l21_norm_smoothed(&x.sub(g)?, eps);
        let penalized = match cfg.laplacian(d) {
            Some(l) => g.matmul(l)?,
            None => g.clone(),
        };
        total += cfg.lambdas[d] * l21_norm_smoothed(&penalized, eps);
    }
    Ok(total)
}

/// Per-view contribution to [`stage1_loss`] and its gradient w.r.t. that
/// view's reconstruction.
pub fn stage1_view_loss_and_grad(
    x: &Matrix,
    g: &Matrix,
    lambda: f64,
    laplacian: Option<&Matrix>,
    eps: f64,
) -> Result<(f64, Matrix)> {
    let residual = x.sub(g)?;
    let mut loss = l21_norm_smoothed(&residual, eps);
    let mut grad = l21_grad_smoothed(&residual, eps).scale(-1.0);
    let pen_grad = match laplacian {
        Some(l) => {
            let smoothed = g.matmul(l)?;
            loss += lambda * l21_norm_smoothed(&smoothed, eps);
            // d/dG ‖G·L‖ = S·Lᵀ
            l21_grad_smoothed(&smoothed, eps).matmul_t(l)?
        }
        None => {
            loss += lambda * l21_norm_smoothed(g, eps);
            l21_grad_smoothed(g, eps)
        }
    };
    for (a, b) in grad.as_mut_slice().iter_mut().zip(pen_grad.as_slice()) {
        *a += lambda * b;
    }
    Ok((loss, grad))
}

pub fn stage1_loss_and_grad(views: &[Matrix], recons: &[Matrix], cfg: &Stage1LossConfig) -> Result<(f64, Vec<Matrix>)> {
    cfg.validate(views, recons)?;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(views.len());
    for (d, (x, g)) in views.iter().zip(recons).enumerate() {
        let (l, gr) = stage1_view_loss_and_grad(x, g, cfg.lambdas[d], cfg.laplacian(d), cfg.smoothing_eps)?;
        total += l;
        grads.push(gr);
    }
    Ok((total, grads))
}

/// Σ_d ‖X′_d − R_d‖²_F
pub fn stage2_loss(views: &[Matrix], recons: &[Matrix]) -> Result<f64> {
    check_pairs(views, recons)?;
    let mut total = 0.0;
    for (x, r) in views.iter().zip(recons) {
        total += x.sub(r)?.frobenius_sq();
    }
    Ok(total)
}

/// Loss and `2·(R_d − X′_d)` per view.
pub fn stage2_loss_and_grad(views: &[Matrix], recons: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
    check_pairs(views, recons)?;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(views.len());
    for (x, r) in views.iter().zip(recons) {
        let diff = r.sub(x)?;
        total += diff.frobenius_sq();
        grads.push(diff.scale(2.0));
    }
    Ok((total, grads))
}

/// Inference loss on held-out views; same form as [`stage2_loss`].
pub fn stage3_loss(views: &[Matrix], recons: &[Matrix]) -> Result<f64> {
    stage2_loss(views, recons)
}
