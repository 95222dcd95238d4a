//! Classification, clustering and scoring on learned latent codes.

pub mod kmeans;
pub mod metrics;
pub mod svm;

pub use kmeans::{kmeans, KMeansResult, DEFAULT_MAX_ITER, DEFAULT_N_INIT};
pub use metrics::{error_rate, roc_auc, selection_metrics, SelectionMetrics};
pub use svm::{svm_fit, svm_predict, BinarySvm, SvmModel, SvmParams, DEFAULT_MAX_PASSES, DEFAULT_SVM_C, DEFAULT_SVM_TOL};
