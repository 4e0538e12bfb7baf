//! Soft-error injection.
//!
//! Every injection site is identified by the execution cursor (the number of
//! iteration attempts run so far, replays included), the layer, the step and
//! the node. Whether a site fires, and the noise it adds, are derived from a
//! hash of the root seed and that context, so one site's draws never depend
//! on how many other sites were visited.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::layout::GridLayout;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Step {
    /// Feedforward block product.
    O1,
    /// Backprop block product.
    O2,
    /// Rank-1 block update.
    O3,
    /// Evaluation of the consistency checks.
    Detect,
    /// Decoding after a failed check.
    Decode,
}

impl Step {
    fn code(self) -> u64 {
        match self {
            Step::O1 => 1,
            Step::O2 => 2,
            Step::O3 => 3,
            Step::Detect => 4,
            Step::Decode => 5,
        }
    }
}

/// A node of a grid; `replica` distinguishes the two mirrored grids of the
/// replication strategy and is 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub replica: u8,
    pub row: usize,
    pub col: usize,
}

impl NodeId {
    pub fn new(row: usize, col: usize) -> Self {
        Self { replica: 0, row, col }
    }

    pub fn replica(replica: u8, row: usize, col: usize) -> Self {
        Self { replica, row, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseKind {
    /// Adds `σ·N(0,1)` to every entry.
    DenseGaussian { sigma: f64 },
    /// Each entry is perturbed with probability `density` by a value drawn
    /// uniformly from `[lo, hi]`.
    SparseUniform { density: f64, lo: f64, hi: f64 },
}

impl NoiseKind {
    pub fn default_sparse() -> Self {
        NoiseKind::SparseUniform {
            density: 0.005,
            lo: -5.0,
            hi: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledFault {
    pub iteration: u64,
    pub layer: usize,
    pub step: Step,
    pub node: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FaultModel {
    None,
    /// Error Model 1: an explicit list of injection sites.
    Adversarial {
        schedule: Vec<ScheduledFault>,
        noise: NoiseKind,
    },
    /// Error Model 2: independent faults with probability `p` per node and
    /// block operation, and `p_verify` per node for check evaluation and
    /// decoding.
    Probabilistic {
        p: f64,
        p_verify: f64,
        noise: NoiseKind,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub model: FaultModel,
    pub seed: u64,
}

impl FaultSpec {
    pub fn none() -> Self {
        Self {
            model: FaultModel::None,
            seed: 0,
        }
    }

    pub fn probabilistic(p: f64, noise: NoiseKind, seed: u64) -> Self {
        Self {
            model: FaultModel::Probabilistic {
                p,
                p_verify: 0.0,
                noise,
            },
            seed,
        }
    }

    pub fn adversarial(schedule: Vec<ScheduledFault>, noise: NoiseKind, seed: u64) -> Self {
        Self {
            model: FaultModel::Adversarial { schedule, noise },
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), FaultError> {
        match &self.model {
            FaultModel::None => Ok(()),
            FaultModel::Adversarial { schedule, noise } => {
                validate_noise(noise)?;
                if let Some(f) = schedule
                    .iter()
                    .find(|f| !matches!(f.step, Step::O1 | Step::O2 | Step::O3))
                {
                    return Err(FaultError::ScheduledStep(f.step));
                }
                Ok(())
            }
            FaultModel::Probabilistic { p, p_verify, noise } => {
                for &q in [p, p_verify] {
                    if !(0.0..=1.0).contains(&q) {
                        return Err(FaultError::Probability(q));
                    }
                }
                validate_noise(noise)
            }
        }
    }

    /// Per (iteration, layer) the schedule may hold at most `t1 + t3` O1,
    /// `t2 + t3` O2 and `t3` O3 faults.
    pub fn validate_bounds(&self, layout: &GridLayout) -> Result<(), FaultError> {
        self.validate()?;
        let FaultModel::Adversarial { schedule, .. } = &self.model else {
            return Ok(());
        };
        let mut counts = std::collections::BTreeMap::new();
        for f in schedule {
            *counts.entry((f.iteration, f.layer, f.step)).or_insert(0usize) += 1;
        }
        for ((iteration, layer, step), count) in counts {
            let bound = match step {
                Step::O1 => layout.t1 + layout.t3,
                Step::O2 => layout.t2 + layout.t3,
                _ => layout.t3,
            };
            if count > bound {
                return Err(FaultError::Bound {
                    iteration,
                    layer,
                    step,
                    count,
                    bound,
                });
            }
        }
        Ok(())
    }
}

fn validate_noise(noise: &NoiseKind) -> Result<(), FaultError> {
    match *noise {
        NoiseKind::DenseGaussian { sigma } if sigma.is_finite() && sigma > 0.0 => Ok(()),
        NoiseKind::SparseUniform { density, lo, hi }
            if (0.0..=1.0).contains(&density) && lo.is_finite() && hi.is_finite() && lo < hi =>
        {
            Ok(())
        }
        _ => Err(FaultError::Noise),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaultError {
    #[error("fault probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("invalid noise parameters")]
    Noise,
    #[error("scheduled faults are limited to O1, O2 and O3, got {0:?}")]
    ScheduledStep(Step),
    #[error("iteration {iteration} layer {layer}: {count} {step:?} faults exceed the bound {bound}")]
    Bound {
        iteration: u64,
        layer: usize,
        step: Step,
        count: usize,
        bound: usize,
    },
}

/// Where a fault might fire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultSite {
    /// Logical iteration (used by schedules).
    pub iteration: u64,
    /// Execution attempt counter (used by random draws).
    pub cursor: u128,
    pub layer: usize,
    pub step: Step,
    pub node: NodeId,
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn site_hash(seed: u64, site: &FaultSite) -> u64 {
    let mut h = mix(seed);
    for word in [
        site.cursor as u64,
        (site.cursor >> 64) as u64,
        site.layer as u64,
        site.step.code(),
        site.node.replica as u64,
        site.node.row as u64,
        site.node.col as u64,
    ] {
        h = mix(h ^ word);
    }
    h
}

fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Noise for one fired site.
#[derive(Debug, Clone)]
pub struct Noise {
    kind: NoiseKind,
    rng: ChaCha8Rng,
}

impl Noise {
    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        Self {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn corrupt(&mut self, data: &mut [f64]) {
        for v in data.iter_mut() {
            *v += self.sample();
        }
    }

    /// Corrupts the top-left `rows × cols` region of `block`.
    pub fn corrupt_block(&mut self, block: &mut Matrix, rows: usize, cols: usize) {
        for r in 0..rows.min(block.rows()) {
            let width = cols.min(block.cols());
            for v in block.row_mut(r)[..width].iter_mut() {
                *v += self.sample();
            }
        }
    }

    fn sample(&mut self) -> f64 {
        match self.kind {
            NoiseKind::DenseGaussian { sigma } => sigma * self.rng.sample::<f64, _>(StandardNormal),
            NoiseKind::SparseUniform { density, lo, hi } => {
                if self.rng.random::<f64>() < density {
                    self.rng.random_range(lo..hi)
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FaultInjector {
    spec: FaultSpec,
    fired: BTreeSet<usize>,
    injected: u64,
}

impl FaultInjector {
    pub fn new(spec: FaultSpec) -> Self {
        Self {
            spec,
            fired: BTreeSet::new(),
            injected: 0,
        }
    }

    pub fn spec(&self) -> &FaultSpec {
        &self.spec
    }

    /// Faults injected so far.
    pub fn injected(&self) -> u64 {
        self.injected
    }

    pub fn is_active(&self) -> bool {
        !matches!(self.spec.model, FaultModel::None)
    }

    /// Marks schedule entries before `iteration` as already fired, as after
    /// resuming from a checkpoint taken at `iteration`.
    pub fn skip_before(&mut self, iteration: u64) {
        if let FaultModel::Adversarial { schedule, .. } = &self.spec.model {
            for (i, f) in schedule.iter().enumerate() {
                if f.iteration < iteration {
                    self.fired.insert(i);
                }
            }
        }
    }

    /// Noise to apply at `site`, if a fault fires there. A scheduled fault
    /// fires once, on the first attempt that reaches its site.
    pub fn draw(&mut self, site: &FaultSite) -> Option<Noise> {
        let seed = self.spec.seed;
        let noise = match &self.spec.model {
            FaultModel::None => None,
            FaultModel::Adversarial { schedule, noise } => {
                let hit = schedule.iter().enumerate().find(|(i, f)| {
                    !self.fired.contains(i)
                        && f.iteration == site.iteration
                        && f.layer == site.layer
                        && f.step == site.step
                        && f.node == site.node
                });
                match hit {
                    Some((i, _)) => {
                        self.fired.insert(i);
                        // Replica-blind, so mirrored schedules inject equal noise.
                        let mut key = *site;
                        key.node.replica = 0;
                        Some(Noise::new(*noise, mix(site_hash(seed, &key) ^ 0x5eed)))
                    }
                    None => None,
                }
            }
            FaultModel::Probabilistic { p, p_verify, noise } => {
                let prob = match site.step {
                    Step::O1 | Step::O2 | Step::O3 => *p,
                    Step::Detect | Step::Decode => *p_verify,
                };
                if prob <= 0.0 {
                    return None;
                }
                let h = site_hash(seed, site);
                (unit_interval(h) < prob).then(|| Noise::new(*noise, mix(h ^ 0x5eed)))
            }
        };
        if noise.is_some() {
            self.injected += 1;
        }
        noise
    }
}
