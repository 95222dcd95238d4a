use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{DEFAULT_LAMBDA, DEFAULT_SMOOTHING_EPS};

pub const DEFAULT_HIDDEN_WIDTHS: [usize; 2] = [64, 256];

/// Hyperparameters of the three training stages and the downstream SVM.
///
/// Per-view lists (`hidden_widths`, `lambdas`, `lr_net`) may hold a single
/// entry, which then applies to every view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Number of latent components `K`.
    #[serde(alias = "K", alias = "k")]
    pub latent_dim: usize,
    pub hidden_widths: Vec<Vec<usize>>,
    pub lambdas: Vec<f64>,
    pub lr_net: Vec<f64>,
    pub lr_z: f64,
    /// Step size for the held-out latent code; falls back to `lr_z`.
    pub lr_test: Option<f64>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub r_fraction: f64,
    pub seed: u64,
    pub use_laplacian: bool,
    pub group_norm: bool,
    pub smoothing_eps: f64,
    pub svm_c: f64,
    /// RBF width; `None` means `1 / latent_dim`.
    pub svm_gamma: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            latent_dim: 2,
            hidden_widths: vec![DEFAULT_HIDDEN_WIDTHS.to_vec()],
            lambdas: vec![DEFAULT_LAMBDA],
            lr_net: vec![1e-3],
            lr_z: 1e-3,
            lr_test: None,
            max_iters: 1000,
            rel_tol: 1e-6,
            r_fraction: 0.10,
            seed: 0,
            use_laplacian: false,
            group_norm: false,
            smoothing_eps: DEFAULT_SMOOTHING_EPS,
            svm_c: 1.0,
            svm_gamma: None,
        }
    }
}

fn broadcast<T: Clone>(name: &str, values: &[T], views: usize) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0].clone(); views]),
        n if n == views => Ok(values.to_vec()),
        n => Err(Error::InvalidArgument(format!("{name} has {n} entries for {views} views"))),
    }
}

impl TrainConfig {
    pub fn hidden_for(&self, views: usize) -> Result<Vec<Vec<usize>>> {
        broadcast("hidden_widths", &self.hidden_widths, views)
    }

    pub fn lambdas_for(&self, views: usize) -> Result<Vec<f64>> {
        broadcast("lambdas", &self.lambdas, views)
    }

    pub fn lr_net_for(&self, views: usize) -> Result<Vec<f64>> {
        broadcast("lr_net", &self.lr_net, views)
    }

    pub fn lr_test(&self) -> f64 {
        self.lr_test.unwrap_or(self.lr_z)
    }

    pub fn svm_gamma(&self) -> f64 {
        self.svm_gamma.unwrap_or(1.0 / self.latent_dim as f64)
    }

    /// Largest admissible `K` for views with `feature_counts` columns:
    /// `min_d p_d · r`.
    pub fn latent_upper_bound(&self, feature_counts: &[usize]) -> f64 {
        feature_counts.iter().map(|&p| p as f64 * self.r_fraction).fold(f64::INFINITY, f64::min)
    }

    /// Checks every field against `views` views.
    pub fn validate(&self, views: usize) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::InvalidArgument("latent_dim must be at least 1".into()));
        }
        for h in self.hidden_for(views)? {
            if h.iter().any(|&w| w == 0) {
                return Err(Error::InvalidArgument("hidden widths must be positive".into()));
            }
            if self.group_norm && h.iter().any(|&w| w < 2) {
                return Err(Error::InvalidArgument("group norm needs hidden widths >= 2".into()));
            }
        }
        if self.lambdas_for(views)?.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::InvalidArgument("lambdas must be non-negative".into()));
        }
        let rates = self.lr_net_for(views)?;
        if rates.iter().chain([&self.lr_z, &self.lr_test()]).any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidArgument("learning rates must be positive".into()));
        }
        if !(self.r_fraction > 0.0 && self.r_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!("r_fraction must be in (0, 1], got {}", self.r_fraction)));
        }
        if !(self.rel_tol >= 0.0) || !(self.smoothing_eps > 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be >= 0 and smoothing_eps > 0".into()));
        }
        if !(self.svm_c > 0.0) || self.svm_gamma.is_some_and(|g| !(g > 0.0)) {
            return Err(Error::InvalidArgument("svm_c and svm_gamma must be positive".into()));
        }
        Ok(())
    }

    /// [`Self::validate`] plus the latent-dimension bound for full-width views.
    pub fn validate_for_selection(&self, feature_counts: &[usize]) -> Result<()> {
        self.validate(feature_counts.len())?;
        let bound = self.latent_upper_bound(feature_counts);
        if self.latent_dim as f64 > bound {
            return Err(Error::InvalidArgument(format!(
                "latent_dim {} exceeds the bound min_d p_d * r = {bound}",
                self.latent_dim
            )));
        }
        Ok(())
    }
}
