//! Training strategies over the simulated cluster: the coded strategy, full
//! replication and an uncoded baseline, plus the checkpointing training loop.

pub mod checkpoint;
pub mod codenet;
pub mod grid;
pub mod plain;
pub mod training;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{CostLedger, FaultInjector, FaultSite, NodeId, Noise, Step};
use crate::codec::CodecError;
use crate::dnn::{self, DnnError, LayerSpec};
use crate::linalg::Matrix;

pub use checkpoint::{Checkpoint, CheckpointError, LayerMeta};
pub use codenet::{codenet_layer_cost, CodeNet};
pub use grid::{BlockGrid, LayerGeom};
pub use plain::{plain_layer_cost, uncoded_equal_node_grid, PlainGrid};
pub use training::{run_training, IterationReport, RunContext, RunSummary, TrainError, TrainingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    CodeNet,
    Replication,
    Uncoded,
}

impl StrategyKind {
    pub fn code(self) -> u8 {
        match self {
            StrategyKind::CodeNet => 1,
            StrategyKind::Replication => 2,
            StrategyKind::Uncoded => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(StrategyKind::CodeNet),
            2 => Some(StrategyKind::Replication),
            3 => Some(StrategyKind::Uncoded),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::CodeNet => "codenet",
            StrategyKind::Replication => "replication",
            StrategyKind::Uncoded => "uncoded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Feedforward,
    Backprop,
}

/// A row (feedforward) or column (backprop) of the grid whose output the
/// decoder found erroneous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorFlag {
    pub layer: usize,
    pub stage: Stage,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RollbackCause {
    TooManyErrors,
    DetectionDisagreement,
    DecodeDisagreement,
    ReplicaMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Clean,
    Corrected(Vec<ErrorFlag>),
    RolledBack(RollbackCause),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Clean => "clean",
            Outcome::Corrected(_) => "corrected",
            Outcome::RolledBack(RollbackCause::TooManyErrors) => "rollback_too_many_errors",
            Outcome::RolledBack(RollbackCause::DetectionDisagreement) => "rollback_detection_disagreement",
            Outcome::RolledBack(RollbackCause::DecodeDisagreement) => "rollback_decode_disagreement",
            Outcome::RolledBack(RollbackCause::ReplicaMismatch) => "rollback_replica_mismatch",
        }
    }
}

/// Result of one iteration attempt. `loss` is the squared error of the
/// forward pass, absent when the attempt was abandoned before the output
/// was known.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub outcome: Outcome,
    pub loss: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error(transparent)]
    Dnn(#[from] DnnError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("grid {m}x{n} does not fit: {reason}")]
    Grid { m: usize, n: usize, reason: String },
    #[error("expected {expected} stored blocks, got {got}")]
    BlockCount { expected: usize, got: usize },
    #[error("stored block {index} has shape {got:?}, expected {expected:?}")]
    BlockShape {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
}

/// What a strategy sees of the cluster during one attempt.
pub struct StepContext<'a> {
    pub injector: &'a mut FaultInjector,
    pub ledger: &'a mut CostLedger,
    pub iteration: u64,
    pub cursor: u128,
}

impl StepContext<'_> {
    pub fn draw(&mut self, layer: usize, step: Step, node: NodeId) -> Option<Noise> {
        self.injector.draw(&FaultSite {
            iteration: self.iteration,
            cursor: self.cursor,
            layer,
            step,
            node,
        })
    }
}

pub trait Strategy {
    fn kind(&self) -> StrategyKind;

    fn specs(&self) -> &[LayerSpec];

    /// Nodes the strategy occupies.
    fn node_count(&self) -> usize;

    /// `(m, n, t)` recorded in checkpoints.
    fn grid_dims(&self) -> (usize, usize, usize);

    fn learning_rate(&self) -> f64;

    /// One SGD step on `(x, label)`.
    fn iterate(&mut self, ctx: &mut StepContext<'_>, x: &[f64], label: &[f64]) -> Attempt;

    /// Every stored block, in checkpoint scan order.
    fn stored_blocks(&self) -> Vec<Matrix>;

    fn load_blocks(&mut self, blocks: Vec<Matrix>) -> Result<(), StrategyError>;

    /// The weight matrices the strategy currently represents.
    fn logical_weights(&self) -> Vec<Matrix>;

    /// False when the state should not be written to a checkpoint.
    fn verify_for_checkpoint(&self, _ledger: &mut CostLedger) -> bool {
        true
    }

    /// Fault-free inference with the logical weights.
    fn predict(&self, x: &[f64]) -> Vec<f64> {
        let weights = self.logical_weights();
        let mut cur = x.to_vec();
        for (spec, w) in self.specs().iter().zip(&weights) {
            cur = spec.activation.apply(&w.matvec(&cur));
        }
        cur
    }
}

/// Checks the shape of blocks being loaded against the current ones.
pub(crate) fn check_blocks(current: &[Matrix], incoming: &[Matrix]) -> Result<(), StrategyError> {
    if current.len() != incoming.len() {
        return Err(StrategyError::BlockCount {
            expected: current.len(),
            got: incoming.len(),
        });
    }
    for (index, (a, b)) in current.iter().zip(incoming).enumerate() {
        if a.shape() != b.shape() {
            return Err(StrategyError::BlockShape {
                index,
                expected: a.shape(),
                got: b.shape(),
            });
        }
    }
    Ok(())
}

/// Applies a fired fault to a block product. Sparse noise lands on the
/// stored block before the product is formed; dense noise on the output.
pub(crate) fn faulty_product(
    noise: Option<Noise>,
    block: &mut Matrix,
    valid: (usize, usize),
    compute: impl FnOnce(&Matrix) -> Vec<f64>,
) -> Vec<f64> {
    match noise {
        None => compute(block),
        Some(mut n) => match n.kind() {
            crate::cluster::NoiseKind::SparseUniform { .. } => {
                n.corrupt_block(block, valid.0, valid.1);
                compute(block)
            }
            crate::cluster::NoiseKind::DenseGaussian { .. } => {
                let mut out = compute(block);
                n.corrupt(&mut out);
                out
            }
        },
    }
}

pub(crate) fn validate_specs(specs: &[LayerSpec]) -> Result<(), StrategyError> {
    dnn::validate_chain(specs)?;
    Ok(())
}
