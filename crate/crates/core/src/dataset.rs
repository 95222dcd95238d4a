use crate::error::{Error, Result};
use crate::ndcore::{standardize_apply, standardize_fit, ColumnStats, Matrix};

/// Several views measured on the same samples, with optional class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiviewDataset {
    views: Vec<Matrix>,
    labels: Option<Vec<usize>>,
}

impl MultiviewDataset {
    pub fn new(views: Vec<Matrix>, labels: Option<Vec<usize>>) -> Result<Self> {
        let n = match views.first() {
            Some(v) => v.rows(),
            None => return Err(Error::InvalidArgument("dataset needs at least one view".into())),
        };
        if let Some((d, v)) = views.iter().enumerate().find(|(_, v)| v.rows() != n) {
            return Err(Error::InvalidArgument(format!("view {d} has {} samples, view 0 has {n}", v.rows())));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidArgument(format!("{} labels for {n} samples", l.len())));
            }
        }
        Ok(Self { views, labels })
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].rows()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn view(&self, d: usize) -> &Matrix {
        &self.views[d]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_counts(&self) -> Vec<usize> {
        self.views.iter().map(Matrix::cols).collect()
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        self.labels = None;
        Self::new(std::mem::take(&mut self.views), labels)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let views = self.views.iter().map(|v| v.select_rows(idx)).collect::<Result<Vec<_>>>()?;
        let labels = self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect());
        Self::new(views, labels)
    }

    pub fn fit_standardization(&self) -> Result<Vec<ColumnStats>> {
        self.views.iter().map(standardize_fit).collect()
    }

    pub fn standardized(&self, stats: &[ColumnStats]) -> Result<Self> {
        if stats.len() != self.views.len() {
            return Err(Error::InvalidArgument(format!("{} column stats for {} views", stats.len(), self.views.len())));
        }
        let views = self.views.iter().zip(stats).map(|(v, s)| standardize_apply(v, s)).collect::<Result<Vec<_>>>()?;
        Self::new(views, self.labels.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_sample_counts() {
        assert!(MultiviewDataset::new(vec![Matrix::zeros(3, 2), Matrix::zeros(4, 2)], None).is_err());
        assert!(MultiviewDataset::new(vec![Matrix::zeros(3, 2)], Some(vec![0, 1])).is_err());
        assert!(MultiviewDataset::new(vec![], None).is_err());
    }

    #[test]
    fn row_selection_carries_labels() {
        let v = Matrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64);
        let ds = MultiviewDataset::new(vec![v], Some(vec![0, 1, 1, 0])).unwrap();
        let sub = ds.select_rows(&[3, 1]).unwrap();
        assert_eq!(sub.labels(), Some(&[0, 1][..]));
        assert_eq!(sub.view(0).row(0), &[6.0, 7.0]);
    }
}
