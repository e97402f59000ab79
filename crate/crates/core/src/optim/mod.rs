//! Training with Adam plus proximal group-lasso steps, hyperparameter sweeps
//! under a hard cap on surviving concepts, and post-hoc analysis.

mod adam;
mod analyze;
mod prox;
mod sweep;
mod train;

use serde::{Deserialize, Serialize};

use crate::features::Provenance;
use crate::gae::{Propagation, EMBED_DIM, HIDDEN_DIM};

pub use adam::{sgd_step, Adam, AdamConfig, OptimizerKind};
pub use analyze::{
    analyze, ConceptReport, FoundationShare, FramingStrength, GammaClass, GammaHistogram,
    SparsityReport, GAMMA_ENDPOINT,
};
pub use prox::{
    block_soft_threshold, group_lasso_penalty, prox_group_row, weighted_prox_newton, NewtonConfig,
};
pub use sweep::{sweep, threshold_curve, CellSummary, SweepGrid, SweepOutcome};
pub use train::{
    active_concepts, train, train_with_policy, Checkpoint, EpochRecord, TrainedModel,
    TrainingData,
};

pub const LEARNING_RATE_GRID: [f64; 4] = [1e-4, 3e-4, 1e-3, 3e-3];
pub const LAMBDA_GRID: [f64; 4] = [1e-4, 3e-4, 1e-3, 3e-3];
pub const MAX_EPOCHS: usize = 1000;
pub const DEFAULT_THETA: usize = 150;

/// Model family being trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Variant {
    /// agenda + framing mixture, graph convolutions
    #[default]
    #[serde(rename = "AF-SGAE")]
    AfSgae,
    /// agenda only
    #[serde(rename = "A-SGAE")]
    ASgae,
    /// framing only
    #[serde(rename = "F-SGAE")]
    FSgae,
    /// agenda + framing mixture without propagation
    #[serde(rename = "AF-SLAE")]
    AfSlae,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::AfSgae, Variant::ASgae, Variant::FSgae, Variant::AfSlae];

    pub fn provenance(self) -> Provenance {
        match self {
            Variant::ASgae => Provenance::AgendaOnly,
            Variant::FSgae => Provenance::FramingOnly,
            Variant::AfSgae | Variant::AfSlae => Provenance::Mixed,
        }
    }

    pub fn propagation(self) -> Propagation {
        match self {
            Variant::AfSlae => Propagation::Identity,
            _ => Propagation::Convolution,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::AfSgae => "AF-SGAE",
            Variant::ASgae => "A-SGAE",
            Variant::FSgae => "F-SGAE",
            Variant::AfSlae => "AF-SLAE",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    /// Hard cap on the number of surviving concepts.
    pub theta: usize,
    pub variant: Variant,
    pub seed: u64,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub optimizer: OptimizerKind,
    pub adam: AdamConfig,
    pub prox_newton: NewtonConfig,
    pub zero_row_tol: f64,
    /// z-score agenda and framing columns across nodes before mixing
    pub standardize: bool,
    /// score every node pair each epoch instead of sampled negatives (≤ 200 nodes)
    pub full_reconstruction: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: MAX_EPOCHS,
            learning_rate: 1e-3,
            lambda: 1e-3,
            theta: DEFAULT_THETA,
            variant: Variant::AfSgae,
            seed: 0,
            hidden_dim: HIDDEN_DIM,
            embed_dim: EMBED_DIM,
            optimizer: OptimizerKind::Adam,
            adam: AdamConfig::default(),
            prox_newton: NewtonConfig::default(),
            zero_row_tol: 1e-12,
            standardize: false,
            full_reconstruction: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |msg: String| Err(crate::Error::InvalidArgument(msg));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda {} must be >= 0", self.lambda));
        }
        if self.hidden_dim == 0 || self.embed_dim == 0 {
            return bad("layer widths must be positive".into());
        }
        if !(self.zero_row_tol >= 0.0) {
            return bad("zero_row_tol must be >= 0".into());
        }
        Ok(())
    }
}
