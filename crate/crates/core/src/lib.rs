//! Deep multiview feature selection.
//!
//! Each view of a multiview dataset is reconstructed from a shared
//! low-dimensional latent code by its own feedforward decoder. A sparsity
//! penalty on the reconstructions ranks the columns of every view; the top
//! fraction is kept, the decoders are refit on it, and the resulting latent
//! codes feed downstream classifiers and clustering.

pub mod dataset;
pub mod decoder;
pub mod downstream;
pub mod error;
pub mod graphlap;
pub mod io;
pub mod ndcore;
pub mod objectives;
pub mod pipeline;
pub mod simgen;

pub use dataset::MultiviewDataset;
pub use decoder::{Activation, DecoderNetwork, LayerSpec};
pub use downstream::{KMeansResult, SelectionMetrics, SvmModel, SvmParams};
pub use error::{Error, Result};
pub use graphlap::{build_laplacian, GraphLaplacian, GraphSpec};
pub use ndcore::{ColumnStats, Matrix, Rng};
pub use pipeline::{FeatureSelection, FitResult, PipelineRun, Stage, StageCheckpoint, TrainConfig};
pub use simgen::{ScenarioTruth, Split, Topology};
