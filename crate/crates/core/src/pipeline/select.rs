use serde::{Deserialize, Serialize};

use crate::dataset::MultiviewDataset;
use crate::error::{Error, Result};
use crate::ndcore::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewSelection {
    /// Column ℓ2 norms of the reconstruction.
    pub scores: Vec<f64>,
    /// Selected columns, ascending.
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub views: Vec<ViewSelection>,
    pub r_fraction: f64,
}

impl FeatureSelection {
    pub fn indices(&self) -> Vec<Vec<usize>> {
        self.views.iter().map(|v| v.indices.clone()).collect()
    }
}

/// `⌈r·p⌉`, computed so that products such as `0.1 · 500` are not pushed
/// up by rounding error.
pub fn selection_size(p: usize, r_fraction: f64) -> usize {
    let exact = r_fraction * p as f64;
    let k = (exact - 1e-9 * exact.max(1.0)).ceil().max(0.0) as usize;
    k.clamp(1.min(p), p)
}

/// Columns in descending score order, ties to the lower index.
pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

pub fn rank_features(recons: &[Matrix], r_fraction: f64) -> Result<FeatureSelection> {
    if !(r_fraction > 0.0 && r_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("r_fraction must be in (0, 1], got {r_fraction}")));
    }
    let views = recons
        .iter()
        .map(|g| {
            let scores = g.column_norms();
            if scores.iter().any(|s| !s.is_finite()) {
                return Err(Error::NonFiniteValue);
            }
            let mut indices = rank_order(&scores);
            indices.truncate(selection_size(scores.len(), r_fraction));
            indices.sort_unstable();
            Ok(ViewSelection { scores, indices })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureSelection { views, r_fraction })
}

pub fn subset_views(data: &MultiviewDataset, selection: &[Vec<usize>]) -> Result<MultiviewDataset> {
    if selection.len() != data.n_views() {
        return Err(Error::InvalidArgument(format!("{} selections for {} views", selection.len(), data.n_views())));
    }
    let views = data.views().iter().zip(selection).map(|(v, idx)| v.select_columns(idx)).collect::<Result<Vec<_>>>()?;
    MultiviewDataset::new(views, data.labels().map(<[usize]>::to_vec))
}
