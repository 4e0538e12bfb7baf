//! Line-oriented experiment configuration.
//!
//! ```text
//! [experiment]
//! strategy = codenet
//! iterations = 2000
//! [network]
//! layers = [784, 100, 100, 10]
//! m = 5
//! n = 4
//! t = 1
//! [faults]
//! model = probabilistic
//! p = 3e-4
//! [outputs]
//! dir = runs/codenet
//! ```

use std::path::{Path, PathBuf};

use codenet_core::cluster::{
    ClockParams, CostParams, FaultModel, FaultSpec, GridLayout, NodeId, NoiseKind, ScheduledFault, Step,
};
use codenet_core::dnn::{layer_chain, Activation, LayerSpec, DEFAULT_LEARNING_RATE};
use codenet_core::strategies::{uncoded_equal_node_grid, StrategyKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{key}: {msg}")]
    Invalid { key: String, msg: String },
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    Synthetic {
        train: usize,
        test: usize,
        noise: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategy: StrategyKind,
    pub layers: Vec<usize>,
    pub activation: Activation,
    pub m: usize,
    pub n: usize,
    pub t: usize,
    /// Uncoded runs widen the grid to the replication node count.
    pub equal_nodes: bool,
    pub eta: f64,
    pub checkpoint_period: u64,
    pub iterations: u64,
    pub eval_every: u64,
    /// Attempts before a run stuck in rollbacks is abandoned.
    pub max_attempts: u64,
    pub seed: u64,
    pub clock: ClockParams,
    pub costs: CostParams,
    pub faults: FaultSpec,
    pub data: DataSource,
    pub out_dir: PathBuf,
    /// Every `section.key = value` as written, in file order.
    pub entries: Vec<(String, String)>,
}

const KEYS: &[(&str, &[&str])] = &[
    (
        "experiment",
        &[
            "strategy",
            "iterations",
            "checkpoint_period",
            "eta",
            "seed",
            "eval_every",
            "max_attempts",
            "equal_nodes",
            "tau_f",
            "tau_b",
            "tau_cpt",
            "alpha",
            "beta",
            "gamma",
            "train_images",
            "train_labels",
            "test_images",
            "test_labels",
            "synthetic_train",
            "synthetic_test",
            "synthetic_noise",
        ],
    ),
    ("network", &["layers", "m", "n", "t", "activation"]),
    (
        "faults",
        &[
            "model", "p", "p_verify", "noise", "density", "lo", "hi", "sigma", "schedule", "seed",
        ],
    ),
    ("outputs", &["dir"]),
];

struct Raw {
    entries: Vec<(String, String, usize)>,
}

impl Raw {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| invalid(key, format!("cannot parse {v:?}"))),
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.parse(key)?.ok_or_else(|| invalid(key, "required"))
    }
}

fn tokenize(text: &str) -> Result<Raw, ConfigError> {
    let mut section: Option<String> = None;
    let mut entries = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::Parse {
                    line: line_no,
                    msg: format!("unknown section [{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: "expected `key = value`".into(),
            });
        };
        let Some(sec) = &section else {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: "key outside of a section".into(),
            });
        };
        let key = key.trim();
        let allowed = KEYS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("unknown key {sec}.{key}"),
            });
        }
        let value = value.trim().trim_matches('"').to_string();
        entries.push((format!("{sec}.{key}"), value, line_no));
    }
    Ok(Raw { entries })
}

fn parse_layers(v: &str) -> Result<Vec<usize>, ConfigError> {
    let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| invalid("network.layers", format!("cannot parse {v:?}")))
}

fn parse_step(s: &str) -> Option<Step> {
    match s.to_ascii_uppercase().as_str() {
        "O1" => Some(Step::O1),
        "O2" => Some(Step::O2),
        "O3" => Some(Step::O3),
        _ => None,
    }
}

/// `iteration:layer:step:row:col[:replica]`, comma separated.
fn parse_schedule(v: &str) -> Result<Vec<ScheduledFault>, ConfigError> {
    let bad = |e: &str| invalid("faults.schedule", format!("bad entry {e:?}"));
    v.split(',')
        .map(str::trim)
        .filter(|e| !e.is_empty())
        .map(|e| {
            let f: Vec<&str> = e.split(':').map(str::trim).collect();
            if f.len() != 5 && f.len() != 6 {
                return Err(bad(e));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad(e));
            let replica = if f.len() == 6 { num(f[5])? } else { 0 };
            Ok(ScheduledFault {
                iteration: f[0].parse().map_err(|_| bad(e))?,
                layer: num(f[1])?,
                step: parse_step(f[2]).ok_or_else(|| bad(e))?,
                node: NodeId::replica(u8::try_from(replica).map_err(|_| bad(e))?, num(f[3])?, num(f[4])?),
            })
        })
        .collect()
}

fn parse_strategy(v: &str) -> Result<StrategyKind, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "codenet" => Ok(StrategyKind::CodeNet),
        "replication" => Ok(StrategyKind::Replication),
        "uncoded" => Ok(StrategyKind::Uncoded),
        _ => Err(invalid("experiment.strategy", format!("unknown strategy {v:?}"))),
    }
}

fn parse_faults(raw: &Raw, seed: u64) -> Result<FaultSpec, ConfigError> {
    let noise = match raw.get("faults.noise").unwrap_or("sparse") {
        "sparse" => {
            let NoiseKind::SparseUniform { density, lo, hi } = NoiseKind::default_sparse() else {
                unreachable!("default noise is sparse")
            };
            NoiseKind::SparseUniform {
                density: raw.or("faults.density", density)?,
                lo: raw.or("faults.lo", lo)?,
                hi: raw.or("faults.hi", hi)?,
            }
        }
        "gaussian" => NoiseKind::DenseGaussian {
            sigma: raw.or("faults.sigma", 1.0)?,
        },
        other => return Err(invalid("faults.noise", format!("unknown noise {other:?}"))),
    };
    let seed = raw.or("faults.seed", seed)?;
    let model = match raw.get("faults.model").unwrap_or("none") {
        "none" => FaultModel::None,
        "probabilistic" => FaultModel::Probabilistic {
            p: raw.require("faults.p")?,
            p_verify: raw.or("faults.p_verify", 0.0)?,
            noise,
        },
        "adversarial" => FaultModel::Adversarial {
            schedule: parse_schedule(
                raw.get("faults.schedule")
                    .ok_or_else(|| invalid("faults.schedule", "required"))?,
            )?,
            noise,
        },
        other => return Err(invalid("faults.model", format!("unknown model {other:?}"))),
    };
    let spec = FaultSpec { model, seed };
    spec.validate().map_err(|e| invalid("faults", e.to_string()))?;
    Ok(spec)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw = tokenize(text)?;
        let strategy = parse_strategy(
            raw.get("experiment.strategy")
                .ok_or_else(|| invalid("experiment.strategy", "required"))?,
        )?;
        let layers = parse_layers(
            raw.get("network.layers")
                .ok_or_else(|| invalid("network.layers", "required"))?,
        )?;
        let activation = match raw.get("network.activation").unwrap_or("sigmoid") {
            "sigmoid" => Activation::Sigmoid,
            "identity" => Activation::Identity,
            other => return Err(invalid("network.activation", format!("unknown activation {other:?}"))),
        };
        let seed = raw.or("experiment.seed", 0u64)?;
        let defaults = ClockParams::default();
        let clock = ClockParams {
            tau_f: raw.or("experiment.tau_f", defaults.tau_f)?,
            tau_b: raw.or("experiment.tau_b", defaults.tau_b)?,
            tau_cpt: raw.or("experiment.tau_cpt", defaults.tau_cpt)?,
        };
        let cost_defaults = CostParams::default();
        let costs = CostParams {
            alpha: raw.or("experiment.alpha", cost_defaults.alpha)?,
            beta: raw.or("experiment.beta", cost_defaults.beta)?,
            gamma: raw.or("experiment.gamma", cost_defaults.gamma)?,
        };
        let data = match raw.get("experiment.train_images") {
            Some(ti) => DataSource::Mnist {
                train_images: ti.into(),
                train_labels: raw.require::<String>("experiment.train_labels")?.into(),
                test_images: raw.require::<String>("experiment.test_images")?.into(),
                test_labels: raw.require::<String>("experiment.test_labels")?.into(),
            },
            None => DataSource::Synthetic {
                train: raw.or("experiment.synthetic_train", 2000usize)?,
                test: raw.or("experiment.synthetic_test", 500usize)?,
                noise: raw.or("experiment.synthetic_noise", 0.3)?,
            },
        };
        let cfg = Self {
            strategy,
            layers,
            activation,
            m: raw.require("network.m")?,
            n: raw.require("network.n")?,
            t: raw.or("network.t", 0usize)?,
            equal_nodes: raw.or("experiment.equal_nodes", false)?,
            eta: raw.or("experiment.eta", DEFAULT_LEARNING_RATE)?,
            checkpoint_period: raw.or("experiment.checkpoint_period", 100u64)?,
            iterations: raw.require("experiment.iterations")?,
            eval_every: raw.or("experiment.eval_every", 100u64)?,
            max_attempts: raw.parse("experiment.max_attempts")?.unwrap_or(u64::MAX),
            seed,
            clock,
            costs,
            faults: parse_faults(&raw, seed)?,
            data,
            out_dir: raw.or::<String>("outputs.dir", "out".into())?.into(),
            entries: raw.entries.into_iter().map(|(k, v, _)| (k, v)).collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        layer_chain(&self.layers, self.activation)
    }

    /// Base grid the strategy actually runs on.
    pub fn grid(&self) -> (usize, usize) {
        if self.strategy == StrategyKind::Uncoded && self.equal_nodes {
            uncoded_equal_node_grid(self.m, self.n, 2 * self.m * self.n)
        } else {
            (self.m, self.n)
        }
    }

    /// Tolerance used for node and cost comparisons: the configured `t` for
    /// the coded strategy, 1 otherwise.
    pub fn comparison_t(&self) -> usize {
        if self.strategy == StrategyKind::CodeNet {
            self.t
        } else {
            1
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.layers.len() < 2 || self.layers.contains(&0) {
            return Err(invalid("network.layers", "need at least two positive sizes"));
        }
        if self.m == 0 || self.n == 0 {
            return Err(invalid("network.m", "grid dimensions must be positive"));
        }
        if self.t > 0 && self.strategy != StrategyKind::CodeNet {
            return Err(invalid("network.t", "t requires codenet"));
        }
        let (m, n) = self.grid();
        for w in self.layers.windows(2) {
            if w[1] < m || w[0] < n {
                return Err(invalid(
                    "network.layers",
                    format!("layer {}x{} is smaller than the {m}x{n} grid", w[1], w[0]),
                ));
            }
        }
        if self.iterations == 0 {
            return Err(invalid("experiment.iterations", "must be at least 1"));
        }
        if self.max_attempts == 0 {
            return Err(invalid("experiment.max_attempts", "must be at least 1"));
        }
        if self.checkpoint_period == 0 {
            return Err(invalid("experiment.checkpoint_period", "must be at least 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid("experiment.eta", "must be positive"));
        }
        let c = self.clock;
        if !(c.tau_f > 0.0 && c.tau_b >= c.tau_f && c.tau_cpt >= 0.0) {
            return Err(invalid("experiment.tau_b", "need 0 < tau_f <= tau_b and tau_cpt >= 0"));
        }
        if let DataSource::Synthetic { train, .. } = self.data {
            if train == 0 {
                return Err(invalid("experiment.synthetic_train", "must be at least 1"));
            }
        }
        if self.strategy == StrategyKind::CodeNet {
            let layout =
                GridLayout::symmetric(self.m, self.n, self.t).map_err(|e| invalid("network.m", e.to_string()))?;
            self.faults
                .validate_bounds(&layout)
                .map_err(|e| invalid("faults.schedule", e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        "[experiment]\nstrategy = uncoded\niterations = 1\n[network]\nlayers = [4, 3, 2]\nm = 1\nn = 1\nt = 0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.eta, 0.1);
        assert_eq!(c.checkpoint_period, 100);
        assert_eq!(c.layers, vec![4, 3, 2]);
        assert_eq!(c.entries.len(), 6);
    }

    #[test]
    fn t_needs_codenet() {
        let err = ExperimentConfig::parse(&MINIMAL.replace("t = 0", "t = 1")).unwrap_err();
        assert!(err.to_string().contains("t requires codenet"), "{err}");
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let err = ExperimentConfig::parse(&format!("{MINIMAL}colour = red\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 9, .. }), "{err}");
        let err = ExperimentConfig::parse("[experiment]\nstrategy codenet\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }));
    }

    #[test]
    fn schedule_entries() {
        let s = parse_schedule("5:0:O1:1:0, 7:2:o3:0:3:1").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].step, Step::O3);
        assert_eq!(s[1].node, NodeId::replica(1, 0, 3));
        assert!(parse_schedule("5:0:O4:1:0").is_err());
    }

    #[test]
    fn equal_node_uncoded_grid() {
        let text = MINIMAL
            .replace("layers = [4, 3, 2]", "layers = [784, 100, 100, 10]")
            .replace("m = 1\nn = 1", "m = 5\nn = 4")
            .replace("iterations = 1", "iterations = 1\nequal_nodes = true");
        let c = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c.grid(), (5, 8));
    }
}
