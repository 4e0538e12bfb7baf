//! The `train` subcommand.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use codenet_core::cluster::{CostLedger, FaultInjector, GridLayout};
use codenet_core::dataset::{self, Sample, CLASSES};
use codenet_core::dnn;
use codenet_core::runtime_model::ComplexityParams;
use codenet_core::strategies::{
    codenet_layer_cost, run_training, Checkpoint, CodeNet, IterationReport, PlainGrid, RunContext, RunSummary,
    Strategy, StrategyKind, TrainingConfig,
};
use serde::Serialize;

use crate::config::{DataSource, ExperimentConfig};
use crate::CliError;

pub const METRICS_HEADER: &str = "iter,outcome,loss,accuracy,coarse_time,comm_time,comp_time,rollbacks";
pub const CHECKPOINT_FILE: &str = "checkpoint.cdnt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const REPORT_FILE: &str = "run_report.json";
const MNIST_PIXELS: usize = 784;

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub resume: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeAccounting {
    pub base_nodes: usize,
    pub comparison_t: usize,
    pub codenet_nodes: usize,
    pub replication_nodes: usize,
    pub uncoded_equal_grid: (usize, usize),
    pub codenet_uses_fewer_nodes: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerComplexity {
    pub out_dim: usize,
    pub in_dim: usize,
    pub ledger_comm: f64,
    pub ledger_comp: f64,
    pub bound_comm: f64,
    pub bound_comp: f64,
    pub replication_comm: f64,
    pub replication_comp: f64,
    pub comm_ratio: f64,
    pub comp_ratio: f64,
    pub closed_form_comm_ratio: f64,
    pub closed_form_comp_ratio: f64,
    pub within_bounds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub strategy: &'static str,
    pub layers: Vec<usize>,
    pub grid: (usize, usize, usize),
    pub nodes: usize,
    pub seed: u64,
    pub resumed_from: Option<u64>,
    pub node_accounting: NodeAccounting,
    pub summary: RunSummary,
    pub complexity: Vec<LayerComplexity>,
    pub config: Vec<(String, String)>,
}

fn load_data(cfg: &ExperimentConfig) -> Result<(Vec<Sample>, Vec<Sample>), CliError> {
    match &cfg.data {
        DataSource::Mnist {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => {
            if cfg.layers[0] != MNIST_PIXELS || *cfg.layers.last().expect("validated") != CLASSES {
                return Err(CliError::Config(crate::config::ConfigError::Invalid {
                    key: "network.layers".into(),
                    msg: format!("MNIST needs {MNIST_PIXELS} inputs and {CLASSES} outputs"),
                }));
            }
            Ok((
                dataset::load_mnist(train_images, train_labels)?,
                dataset::load_mnist(test_images, test_labels)?,
            ))
        }
        DataSource::Synthetic { train, test, noise } => {
            let input = cfg.layers[0];
            let classes = *cfg.layers.last().expect("validated");
            let mut all = dataset::synthetic(train + test, input, classes, *noise, cfg.seed);
            let held_out = all.split_off(*train);
            Ok((all, held_out))
        }
    }
}

pub fn build_strategy(cfg: &ExperimentConfig) -> Result<Box<dyn Strategy>, CliError> {
    let specs = cfg.specs();
    let weights = dnn::init_weights(&specs, cfg.seed);
    let (m, n) = cfg.grid();
    Ok(match cfg.strategy {
        StrategyKind::CodeNet => Box::new(CodeNet::new(specs, &weights, m, n, cfg.t, cfg.eta)?),
        StrategyKind::Replication => Box::new(PlainGrid::replication(specs, &weights, m, n, cfg.eta)?),
        StrategyKind::Uncoded => Box::new(PlainGrid::uncoded(specs, &weights, m, n, cfg.eta)?),
    })
}

fn node_accounting(cfg: &ExperimentConfig) -> NodeAccounting {
    let t = cfg.comparison_t();
    let base = cfg.m * cfg.n;
    let codenet = GridLayout::symmetric(cfg.m, cfg.n, t)
        .map(|l| l.node_count())
        .unwrap_or(base);
    let replication = 2 * base;
    NodeAccounting {
        base_nodes: base,
        comparison_t: t,
        codenet_nodes: codenet,
        replication_nodes: replication,
        uncoded_equal_grid: codenet_core::strategies::uncoded_equal_node_grid(cfg.m, cfg.n, replication),
        codenet_uses_fewer_nodes: codenet < replication,
    }
}

/// Ledger cost of each fault-free coded layer against the closed-form
/// bounds and the replication baseline.
pub fn complexity(cfg: &ExperimentConfig) -> Vec<LayerComplexity> {
    let t = cfg.comparison_t();
    let (m, n) = (cfg.m, cfg.n);
    let p = (m * n) as f64;
    let p_hat = GridLayout::symmetric(m, n, t).map(|l| l.node_count()).unwrap_or(m * n) as f64;
    let last = cfg.layers.len() - 2;
    cfg.layers
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let (in_dim, out_dim) = (w[0], w[1]);
            let cost = codenet_layer_cost(cfg.costs, out_dim, in_dim, m, n, t, l > 0, l < last);
            let cp = ComplexityParams {
                p,
                p_hat,
                t: t as f64,
                n_l: out_dim as f64,
                n_prev: in_dim as f64,
                alpha: cfg.costs.alpha,
                beta: cfg.costs.beta,
                gamma: cfg.costs.gamma,
            };
            let (bound_comm, bound_comp) = (cp.codenet_comm(), cp.codenet_flops() * cfg.costs.gamma);
            let (replication_comm, replication_comp) =
                (cp.replication_comm(), cp.replication_flops() * cfg.costs.gamma);
            LayerComplexity {
                out_dim,
                in_dim,
                ledger_comm: cost.comm,
                ledger_comp: cost.comp,
                bound_comm,
                bound_comp,
                replication_comm,
                replication_comp,
                comm_ratio: cost.comm / replication_comm,
                comp_ratio: cost.comp / replication_comp,
                closed_form_comm_ratio: bound_comm / replication_comm,
                closed_form_comp_ratio: bound_comp / replication_comp,
                within_bounds: cost.comm <= bound_comm && cost.comp <= bound_comp,
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn metrics_row(r: &IterationReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.iteration + 1,
        r.outcome,
        opt(r.loss),
        opt(r.accuracy),
        r.coarse_time,
        r.comm_time,
        r.comp_time,
        r.rollbacks
    )
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Runs one experiment and writes `metrics.csv`, `run_report.json` and
/// checkpoints to the output directory.
pub fn run(mut cfg: ExperimentConfig, opts: &TrainOptions) -> Result<RunReport, CliError> {
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
        cfg.faults.seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.out_dir = out.clone();
    }
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let (train, test) = load_data(&cfg)?;
    let mut strategy = build_strategy(&cfg)?;
    let resume = match &opts.resume {
        Some(path) => Some(Checkpoint::load(path).map_err(|e| CliError::Checkpoint(path.clone(), e))?),
        None => None,
    };
    let resumed_from = resume.as_ref().map(|c| c.iteration);

    let mut injector = FaultInjector::new(cfg.faults.clone());
    let mut ledger = CostLedger::new(cfg.costs);
    let training = TrainingConfig {
        iterations: cfg.iterations,
        checkpoint_period: cfg.checkpoint_period,
        clock: cfg.clock,
        checkpoint_path: Some(cfg.out_dir.join(CHECKPOINT_FILE)),
        eval_every: Some(cfg.eval_every),
        max_attempts: Some(cfg.max_attempts.into()),
    };

    let metrics_path = cfg.out_dir.join(METRICS_FILE);
    let mut metrics = create(&metrics_path)?;
    let mut write_err: Option<std::io::Error> = None;
    if let Err(e) = writeln!(metrics, "{METRICS_HEADER}") {
        write_err = Some(e);
    }
    let mut emitted: Option<u64> = None;
    let summary = run_training(
        strategy.as_mut(),
        RunContext {
            injector: &mut injector,
            ledger: &mut ledger,
        },
        &train,
        &test,
        &training,
        resume,
        |r| {
            let advanced = !r.outcome.starts_with("rollback");
            if advanced && emitted.is_none_or(|e| r.iteration > e) && write_err.is_none() {
                emitted = Some(r.iteration);
                if let Err(e) = writeln!(metrics, "{}", metrics_row(r)) {
                    write_err = Some(e);
                }
            }
        },
    )?;
    if let Some(e) = write_err {
        return Err(CliError::io(&metrics_path, e));
    }
    metrics.flush().map_err(|e| CliError::io(&metrics_path, e))?;

    let report = RunReport {
        strategy: cfg.strategy.name(),
        layers: cfg.layers.clone(),
        grid: strategy.grid_dims(),
        nodes: strategy.node_count(),
        seed: cfg.seed,
        resumed_from,
        node_accounting: node_accounting(&cfg),
        summary,
        complexity: complexity(&cfg),
        config: cfg.entries.clone(),
    };
    let report_path = cfg.out_dir.join(REPORT_FILE);
    let mut out = create(&report_path)?;
    serde_json::to_writer_pretty(&mut out, &report)
        .map_err(std::io::Error::from)
        .and_then(|_| writeln!(out))
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(&report_path, e))?;
    Ok(report)
}
