//! The checkpointing training loop shared by all strategies.

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::cluster::{ClockMode, ClockParams, CoarseClock, CostLedger, FaultInjector};
use crate::dataset::Sample;
use crate::dnn;

use super::checkpoint::{Checkpoint, CheckpointError};
use super::{Outcome, RollbackCause, StepContext, Strategy, StrategyError};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Iterations to complete (`M`).
    pub iterations: u64,
    /// Checkpoint period `I_0`.
    pub checkpoint_period: u64,
    pub clock: ClockParams,
    /// Where checkpoints are persisted; in memory only when absent.
    pub checkpoint_path: Option<PathBuf>,
    /// Evaluate accuracy on the held-out set every this many iterations and
    /// after the last one.
    pub eval_every: Option<u64>,
    /// Gives up after this many attempts; a run stuck in repeated rollbacks
    /// otherwise never ends.
    pub max_attempts: Option<u128>,
}

impl TrainingConfig {
    pub fn new(iterations: u64, checkpoint_period: u64) -> Self {
        Self {
            iterations,
            checkpoint_period,
            clock: ClockParams::default(),
            checkpoint_path: None,
            eval_every: None,
            max_attempts: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("checkpoint period must be at least 1")]
    BadPeriod,
}

/// One attempt of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationReport {
    pub iteration: u64,
    /// Attempt counter, also the fault cursor.
    pub attempt: u128,
    pub outcome: String,
    /// Flagged `(layer, stage, index)` lines when corrected.
    pub flags: Vec<(usize, String, usize)>,
    pub loss: Option<f64>,
    /// Held-out accuracy, when evaluated after this attempt.
    pub accuracy: Option<f64>,
    /// Whether a checkpoint was written before this attempt.
    pub checkpointed: bool,
    pub coarse_delta: f64,
    pub coarse_time: f64,
    pub comm_time: f64,
    pub comp_time: f64,
    pub rollbacks: u64,
    #[serde(skip)]
    pub raw_outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    /// False when the attempt cap was hit before all iterations completed.
    pub completed: bool,
    pub iterations: u64,
    pub attempts: u128,
    pub clean: u64,
    pub corrected: u64,
    pub rollbacks: u64,
    pub checkpoints: u64,
    pub rollbacks_by_cause: Vec<(String, u64)>,
    pub coarse_time: f64,
    pub comm_time: f64,
    pub comp_time: f64,
    pub checkpoint_time: f64,
    pub faults_injected: u64,
    pub final_loss: Option<f64>,
    pub final_accuracy: Option<f64>,
}

/// Shared state of a run that callers may inspect afterwards.
pub struct RunContext<'a> {
    pub injector: &'a mut FaultInjector,
    pub ledger: &'a mut CostLedger,
}

fn cause_name(c: RollbackCause) -> &'static str {
    match c {
        RollbackCause::TooManyErrors => "too_many_errors",
        RollbackCause::DetectionDisagreement => "detection_disagreement",
        RollbackCause::DecodeDisagreement => "decode_disagreement",
        RollbackCause::ReplicaMismatch => "replica_mismatch",
    }
}

fn stage_name(s: super::Stage) -> &'static str {
    match s {
        super::Stage::Feedforward => "feedforward",
        super::Stage::Backprop => "backprop",
    }
}

/// Runs `config.iterations` SGD iterations over `train` (sample `k % len` at
/// iteration `k`), checkpointing every `I_0` iterations and rolling back to
/// the last checkpoint when an attempt fails. With `resume`, training
/// continues from that checkpoint. `on_report` sees every attempt.
pub fn run_training(
    strategy: &mut dyn Strategy,
    run: RunContext<'_>,
    train: &[Sample],
    eval: &[Sample],
    config: &TrainingConfig,
    resume: Option<Checkpoint>,
    mut on_report: impl FnMut(&IterationReport),
) -> Result<RunSummary, TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if config.checkpoint_period == 0 {
        return Err(TrainError::BadPeriod);
    }
    let RunContext { injector, ledger } = run;
    let mut clock = CoarseClock::new(config.clock);
    let mut causes: Vec<(RollbackCause, u64)> = Vec::new();
    let mut cursor: u128 = 0;
    let mut k: u64 = 0;
    let mut last: Option<Checkpoint> = None;

    if let Some(ck) = resume {
        ck.check_compatible(strategy)?;
        strategy.load_blocks(ck.blocks.clone())?;
        k = ck.iteration;
        cursor = ck.cursor;
        injector.skip_before(ck.iteration);
        last = Some(ck);
    }

    let mut final_loss = None;
    let mut final_accuracy = None;
    let evaluate =
        |s: &dyn Strategy| dnn::accuracy(eval.iter().map(|e| (e.x.as_slice(), e.y.as_slice())), |x| s.predict(x));

    let first_cursor = cursor;
    while k < config.iterations {
        if config.max_attempts.is_some_and(|cap| cursor - first_cursor >= cap) {
            break;
        }
        let mut coarse_delta = 0.0;
        let mut checkpointed = false;
        let due = k.is_multiple_of(config.checkpoint_period) && last.as_ref().is_none_or(|c| c.iteration != k);
        if due {
            if strategy.verify_for_checkpoint(ledger) {
                let ck = Checkpoint::capture(strategy, k, cursor);
                if let Some(path) = &config.checkpoint_path {
                    ck.save(path)?;
                }
                ledger.charge_checkpoint(config.clock.tau_cpt);
                coarse_delta += clock.advance(ClockMode::Checkpoint);
                last = Some(ck);
                checkpointed = true;
            } else {
                // Diverged replicas: the state is not worth saving.
                let ck = last.as_ref().expect("state at iteration 0 always verifies");
                strategy.load_blocks(ck.blocks.clone())?;
                coarse_delta += clock.advance(ClockMode::Rollback);
                bump(&mut causes, RollbackCause::ReplicaMismatch);
                let report = IterationReport {
                    iteration: k,
                    attempt: cursor,
                    outcome: Outcome::RolledBack(RollbackCause::ReplicaMismatch).label().to_string(),
                    flags: Vec::new(),
                    loss: None,
                    accuracy: None,
                    checkpointed: false,
                    coarse_delta,
                    coarse_time: clock.time(),
                    comm_time: ledger.comm_time(),
                    comp_time: ledger.comp_time(),
                    rollbacks: clock.rollbacks(),
                    raw_outcome: Outcome::RolledBack(RollbackCause::ReplicaMismatch),
                };
                on_report(&report);
                k = ck.iteration;
                cursor += 1;
                continue;
            }
        }

        let sample = &train[(k % train.len() as u64) as usize];
        let attempt = {
            let mut ctx = StepContext {
                injector,
                ledger,
                iteration: k,
                cursor,
            };
            strategy.iterate(&mut ctx, &sample.x, &sample.y)
        };
        let this_iteration = k;
        let mode = match &attempt.outcome {
            Outcome::Clean => {
                k += 1;
                ClockMode::ErrorFree
            }
            Outcome::Corrected(_) => {
                k += 1;
                ClockMode::CorrectAndRegenerate
            }
            Outcome::RolledBack(cause) => {
                bump(&mut causes, *cause);
                let ck = last.as_ref().expect("a checkpoint precedes every attempt");
                strategy.load_blocks(ck.blocks.clone())?;
                k = ck.iteration;
                ClockMode::Rollback
            }
        };
        coarse_delta += clock.advance(mode);
        cursor += 1;

        let advanced = !matches!(attempt.outcome, Outcome::RolledBack(_));
        if advanced {
            final_loss = attempt.loss;
        }
        let accuracy = match config.eval_every {
            Some(every)
                if advanced && !eval.is_empty() && every > 0 && (k.is_multiple_of(every) || k == config.iterations) =>
            {
                let a = evaluate(&*strategy);
                final_accuracy = Some(a);
                Some(a)
            }
            _ => None,
        };
        let flags = match &attempt.outcome {
            Outcome::Corrected(f) => f
                .iter()
                .map(|e| (e.layer, stage_name(e.stage).to_string(), e.index))
                .collect(),
            _ => Vec::new(),
        };
        let report = IterationReport {
            iteration: this_iteration,
            attempt: cursor - 1,
            outcome: attempt.outcome.label().to_string(),
            flags,
            loss: attempt.loss,
            accuracy,
            checkpointed,
            coarse_delta,
            coarse_time: clock.time(),
            comm_time: ledger.comm_time(),
            comp_time: ledger.comp_time(),
            rollbacks: clock.rollbacks(),
            raw_outcome: attempt.outcome,
        };
        on_report(&report);
    }

    if final_accuracy.is_none() && !eval.is_empty() && config.eval_every.is_some() {
        final_accuracy = Some(evaluate(&*strategy));
    }

    Ok(RunSummary {
        completed: k >= config.iterations,
        iterations: k,
        attempts: cursor,
        clean: clock.clean(),
        corrected: clock.corrected(),
        rollbacks: clock.rollbacks(),
        checkpoints: clock.checkpoints(),
        rollbacks_by_cause: causes.iter().map(|(c, n)| (cause_name(*c).to_string(), *n)).collect(),
        coarse_time: clock.time(),
        comm_time: ledger.comm_time(),
        comp_time: ledger.comp_time(),
        checkpoint_time: ledger.checkpoint_time(),
        faults_injected: injector.injected(),
        final_loss,
        final_accuracy,
    })
}

fn bump(causes: &mut Vec<(RollbackCause, u64)>, cause: RollbackCause) {
    match causes.iter_mut().find(|(c, _)| *c == cause) {
        Some((_, n)) => *n += 1,
        None => causes.push((cause, 1)),
    }
}
