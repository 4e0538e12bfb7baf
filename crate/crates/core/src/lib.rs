//! Simulator for coded, error-resilient model-parallel DNN training.

pub mod cluster;
pub mod codec;
pub mod dataset;
pub mod dnn;
pub mod linalg;
pub mod runtime_model;
pub mod strategies;

pub use cluster::{
    ClockMode, ClockParams, CoarseClock, CostLedger, CostParams, FaultInjector, FaultModel, FaultSpec, GridLayout,
    NodeId, NoiseKind, ScheduledFault, Step,
};
pub use codec::{BlockVector, CodecError, DecodeOutcome, DecodeStatus, MdsCode, Tolerances};
pub use dataset::Sample;
pub use dnn::{Activation, DnnError, DnnState, ForwardTrace, LayerSpec};
pub use linalg::Matrix;
pub use strategies::{
    run_training, CodeNet, IterationReport, Outcome, PlainGrid, RollbackCause, RunContext, RunSummary, Strategy,
    StrategyKind, TrainingConfig,
};
