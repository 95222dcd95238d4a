//! The three training stages, feature ranking and hyperparameter search.
//!
//! Stage 1 fits one decoder per view from a shared latent code under an
//! ℓ2,1 penalty and ranks columns by the norm of their reconstruction.
//! Stage 2 refits on the selected columns with every latent row constrained
//! to the unit ball. Stage 3 keeps the stage-2 decoders fixed and infers the
//! latent code of new samples.

mod checkpoint;
mod config;
mod search;
mod select;
mod train;
mod workflow;

pub use checkpoint::{StageCheckpoint, CHECKPOINT_FORMAT_VERSION};
pub use config::{TrainConfig, DEFAULT_HIDDEN_WIDTHS};
pub use search::{expand_grid, random_search, SearchSpace};
pub use select::{rank_features, rank_order, selection_size, subset_views, FeatureSelection, ViewSelection};
pub use train::{
    stage1_train, stage1_train_observed, stage2_train, stage2_train_observed, stage3_infer, stage3_infer_observed, FitResult, Stage,
    TrainObserver,
};
pub use workflow::{run_pipeline, PipelineRun};
