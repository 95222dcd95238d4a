use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::select::FeatureSelection;
use super::train::{FitResult, Stage};
use crate::decoder::{DecoderNetwork, NetworkRecord};
use crate::error::{Error, Result};
use crate::ndcore::{ColumnStats, Matrix};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Everything needed to resume from the end of one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCheckpoint {
    pub format_version: u32,
    pub stage: Stage,
    pub config: TrainConfig,
    /// Column statistics of the full-width training views.
    pub standardization: Vec<ColumnStats>,
    /// Selected columns per view; present from stage 2 on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<FeatureSelection>,
    pub networks: Vec<NetworkRecord>,
    pub latent: Matrix,
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    pub iterations_run: usize,
}

impl StageCheckpoint {
    pub fn new(fit: &FitResult, config: &TrainConfig, standardization: &[ColumnStats], selection: Option<&FeatureSelection>) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            stage: fit.stage,
            config: config.clone(),
            standardization: standardization.to_vec(),
            selection: selection.cloned(),
            networks: fit.networks.iter().map(NetworkRecord::from).collect(),
            latent: fit.latent.clone(),
            loss_trace: fit.loss_trace.clone(),
            converged: fit.converged,
            iterations_run: fit.iterations_run,
        }
    }

    pub fn networks(&self) -> Result<Vec<DecoderNetwork>> {
        self.networks.iter().map(DecoderNetwork::try_from).collect()
    }

    pub fn fit(&self) -> Result<FitResult> {
        Ok(FitResult {
            stage: self.stage,
            networks: self.networks()?,
            latent: self.latent.clone(),
            loss_trace: self.loss_trace.clone(),
            converged: self.converged,
            iterations_run: self.iterations_run,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cp: StageCheckpoint = serde_json::from_str(text)?;
        if cp.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported checkpoint format version {}", cp.format_version)));
        }
        if cp.stage != Stage::Selection && cp.selection.is_none() {
            return Err(Error::InvalidArgument("checkpoints after stage 1 must carry a selection".into()));
        }
        Ok(cp)
    }
}
