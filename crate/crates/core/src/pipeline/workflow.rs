use super::config::TrainConfig;
use super::select::{rank_features, subset_views, FeatureSelection};
use super::train::{stage1_train, stage2_train, stage3_infer, FitResult};
use crate::dataset::MultiviewDataset;
use crate::downstream::{svm_fit, svm_predict, SvmModel, SvmParams};
use crate::error::{Error, Result};
use crate::ndcore::{ColumnStats, Matrix};

/// Outputs of every stage of one end-to-end run.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub standardization: Vec<ColumnStats>,
    pub stage1: FitResult,
    pub selection: FeatureSelection,
    pub stage2: FitResult,
    pub stage3: Option<FitResult>,
    pub classifier: Option<SvmModel>,
    pub predictions: Option<Vec<usize>>,
}

/// Standardize, select features, refit on the selection, and (given test
/// views) infer test latent codes. When the training data carries labels an
/// SVM is trained on the refit latent code and applied to the test codes.
pub fn run_pipeline(
    train: &MultiviewDataset,
    test: Option<&MultiviewDataset>,
    cfg: &TrainConfig,
    laplacians: Option<&[Option<Matrix>]>,
) -> Result<PipelineRun> {
    if let Some(t) = test {
        if t.feature_counts() != train.feature_counts() {
            return Err(Error::InvalidArgument("test views differ in width from training views".into()));
        }
    }
    let standardization = train.fit_standardization()?;
    let train_std = train.standardized(&standardization)?;
    let stage1 = stage1_train(&train_std, cfg, laplacians)?;
    let selection = rank_features(&stage1.reconstructions()?, cfg.r_fraction)?;
    let indices = selection.indices();
    let stage2 = stage2_train(&subset_views(&train_std, &indices)?, cfg)?;
    let classifier = match train.labels() {
        Some(labels) => Some(svm_fit(&stage2.latent, labels, &SvmParams::new(cfg.svm_c, cfg.svm_gamma()))?),
        None => None,
    };
    let (stage3, predictions) = match test {
        Some(t) => {
            let test_sel = subset_views(&t.standardized(&standardization)?, &indices)?;
            let fit = stage3_infer(&test_sel, &stage2.networks, cfg)?;
            let preds = classifier.as_ref().map(|m| svm_predict(m, &fit.latent)).transpose()?;
            (Some(fit), preds)
        }
        None => (None, None),
    };
    Ok(PipelineRun { standardization, stage1, selection, stage2, stage3, classifier, predictions })
}
