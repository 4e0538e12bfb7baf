//! Expected training time under random faults, and communication and
//! computation cost ratios of the coded scheme against replication.
//!
//! Each iteration is error-free with probability `p0`, correctable with
//! probability `p1` and uncorrectable otherwise. An error-free iteration
//! takes `τ_f`; any other takes `τ_b`. Uncorrectable iterations (and, for
//! replication, every faulty one) send the run back to the last checkpoint.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scheme {
    CodeNet,
    Replication,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("probabilities must lie in [0, 1] and sum to 1, got ({p0}, {p1}, {p2})")]
    Probabilities { p0: f64, p1: f64, p2: f64 },
    #[error("need 0 < tau_f <= tau_b and tau_cpt >= 0")]
    Times,
    #[error("checkpoint period and iteration count must be at least 1")]
    Period,
    #[error("no iteration can ever complete (q = 0)")]
    NeverCompletes,
    #[error("parameter grid is empty")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuntimeModelParams {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub tau_f: f64,
    pub tau_b: f64,
    pub tau_cpt: f64,
    /// Checkpoint period `I_0`.
    pub i0: u64,
    /// Total iterations `M`.
    pub iterations: u64,
}

impl RuntimeModelParams {
    /// Fault counts per iteration following a Poisson law with mean `λ`;
    /// only single faults count as correctable.
    pub fn poisson(lambda: f64, tau_f: f64, tau_b: f64, tau_cpt: f64, i0: u64, iterations: u64) -> Self {
        let p0 = (-lambda).exp();
        let p1 = lambda * p0;
        Self {
            p0,
            p1,
            p2: (1.0 - p0 - p1).max(0.0),
            tau_f,
            tau_b,
            tau_cpt,
            i0,
            iterations,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ps = [self.p0, self.p1, self.p2];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(ModelError::Probabilities {
                p0: self.p0,
                p1: self.p1,
                p2: self.p2,
            });
        }
        if !(self.tau_f > 0.0 && self.tau_b >= self.tau_f && self.tau_cpt >= 0.0) {
            return Err(ModelError::Times);
        }
        if self.i0 == 0 || self.iterations == 0 {
            return Err(ModelError::Period);
        }
        Ok(())
    }

    /// Probability that an iteration moves the run forward.
    pub fn q(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::CodeNet => self.p0 + self.p1,
            Scheme::Replication => self.p0,
        }
    }

    /// Expected duration of one iteration attempt.
    fn step_cost(&self) -> f64 {
        self.tau_f * self.p0 + self.tau_b * (1.0 - self.p0)
    }
}

/// Expected time to advance `k` iterations past a checkpoint,
/// `c Σ_{i=1}^{k} q^{-i}` with `c = τ_f p0 + τ_b (1 − p0)`.
pub fn expected_period_time(params: &RuntimeModelParams, scheme: Scheme, k: u64) -> Result<f64, ModelError> {
    params.validate()?;
    let q = params.q(scheme);
    if q <= 0.0 {
        return Err(ModelError::NeverCompletes);
    }
    let c = params.step_cost();
    let k = k as f64;
    if q >= 1.0 {
        return Ok(c * k);
    }
    // Σ_{i=1}^{k} q^{-i} = (q^{-k} − 1) / (1 − q)
    Ok(c * (q.powf(-k) - 1.0) / (1.0 - q))
}

/// Expected time for the whole run: `(M / I_0)(τ_cpt + E[T_{I_0}])`, with
/// `M / I_0` taken as a real number.
pub fn expected_time(params: &RuntimeModelParams, scheme: Scheme) -> Result<f64, ModelError> {
    let per = expected_period_time(params, scheme, params.i0)?;
    let periods = params.iterations as f64 / params.i0 as f64;
    Ok(periods * (params.tau_cpt + per))
}

/// Scans `I_0 ∈ 1..=M` and returns the minimizer (smallest on ties) and its
/// expected time.
pub fn optimize_checkpoint_period(params: &RuntimeModelParams, scheme: Scheme) -> Result<(u64, f64), ModelError> {
    let mut best: Option<(u64, f64)> = None;
    for i0 in 1..=params.iterations {
        let p = RuntimeModelParams { i0, ..*params };
        let t = expected_time(&p, scheme)?;
        if best.is_none_or(|(_, b)| t < b) {
            best = Some((i0, t));
        }
    }
    best.ok_or(ModelError::Period)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Monte-Carlo estimate of [`expected_period_time`] at `k = I_0` by
/// simulating the checkpoint-to-checkpoint chain `trials` times.
pub fn mc_expected_time(
    params: &RuntimeModelParams,
    scheme: Scheme,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, ModelError> {
    params.validate()?;
    if params.q(scheme) <= 0.0 {
        return Err(ModelError::NeverCompletes);
    }
    if trials == 0 {
        return Err(ModelError::Period);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        let mut state = 0;
        let mut time = 0.0;
        while state < params.i0 {
            let u: f64 = rng.random();
            if u < params.p0 {
                time += params.tau_f;
                state += 1;
            } else {
                time += params.tau_b;
                let correctable = u < params.p0 + params.p1;
                if scheme == Scheme::CodeNet && correctable {
                    state += 1;
                } else {
                    state = 0;
                }
            }
        }
        sum += time;
        sum_sq += time * time;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = if trials > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
    })
}

/// Per-layer cost parameters for the complexity comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityParams {
    /// Base node count `P`.
    pub p: f64,
    /// Coded node count `P̂`.
    pub p_hat: f64,
    pub t: f64,
    pub n_l: f64,
    pub n_prev: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ComplexityParams {
    /// Square grid of `p` base nodes with `P̂ = P + 4√P t`.
    pub fn square(p: usize, t: usize, n_l: usize, n_prev: usize, alpha: f64, beta: f64, gamma: f64) -> Self {
        let pf = p as f64;
        Self {
            p: pf,
            p_hat: pf + 4.0 * pf.sqrt() * t as f64,
            t: t as f64,
            n_l: n_l as f64,
            n_prev: n_prev as f64,
            alpha,
            beta,
            gamma,
        }
    }

    fn span(&self) -> f64 {
        (self.n_l + self.n_prev) / self.p.sqrt()
    }

    /// Communication time of one coded layer iteration.
    pub fn codenet_comm(&self) -> f64 {
        6.0 * self.alpha * self.p_hat.log2()
            + self.beta * (6.0 * self.t + 3.0) * self.span()
            + 2.0 * self.beta * self.p_hat * self.t
    }

    pub fn replication_comm(&self) -> f64 {
        2.0 * self.alpha * self.p.log2() + 2.0 * self.beta * self.span()
    }

    /// Flops per node of one coded layer iteration.
    pub fn codenet_flops(&self) -> f64 {
        6.0 * self.n_l * self.n_prev / self.p + (1.0 + 4.0 * self.t) * self.span() + 2.0 * self.p_hat * self.t
    }

    pub fn replication_flops(&self) -> f64 {
        6.0 * self.n_l * self.n_prev / self.p + self.span()
    }
}

/// `(comm_ratio, comp_ratio)` of the coded scheme over replication.
pub fn complexity_ratios(cp: &ComplexityParams) -> (f64, f64) {
    (
        cp.codenet_comm() / cp.replication_comm(),
        cp.codenet_flops() / cp.replication_flops(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub lambda: f64,
    pub i0_rep: u64,
    pub i0_codenet: u64,
    pub et_rep: f64,
    pub et_codenet: f64,
    pub ratio: f64,
}

pub const TRADEOFF_HEADER: &str = "lambda,i0_rep,i0_codenet,et_rep,et_codenet,ratio";

/// Optimized expected times of both schemes for each `λ`, with the
/// remaining parameters taken from `base`.
pub fn tradeoff_rows(lambdas: &[f64], base: &RuntimeModelParams) -> Result<Vec<TradeoffRow>, ModelError> {
    if lambdas.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    lambdas
        .iter()
        .map(|&lambda| {
            let p = RuntimeModelParams::poisson(lambda, base.tau_f, base.tau_b, base.tau_cpt, 1, base.iterations);
            let (i0_rep, et_rep) = optimize_checkpoint_period(&p, Scheme::Replication)?;
            let (i0_codenet, et_codenet) = optimize_checkpoint_period(&p, Scheme::CodeNet)?;
            Ok(TradeoffRow {
                lambda,
                i0_rep,
                i0_codenet,
                et_rep,
                et_codenet,
                ratio: et_rep / et_codenet,
            })
        })
        .collect()
}

fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the header and one line per row, LF-terminated.
pub fn write_tradeoff_csv<W: Write>(rows: &[TradeoffRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRADEOFF_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            sig17(r.lambda),
            r.i0_rep,
            r.i0_codenet,
            sig17(r.et_rep),
            sig17(r.et_codenet),
            sig17(r.ratio)
        )?;
    }
    Ok(())
}

/// Evenly spaced grid from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p0: f64, p1: f64, i0: u64) -> RuntimeModelParams {
        RuntimeModelParams {
            p0,
            p1,
            p2: 1.0 - p0 - p1,
            tau_f: 1.0,
            tau_b: 10.0,
            tau_cpt: 5.0,
            i0,
            iterations: 100,
        }
    }

    #[test]
    fn error_free_limit() {
        let p = params(1.0, 0.0, 10);
        assert_eq!(expected_time(&p, Scheme::CodeNet).unwrap(), 10.0 * 5.0 + 100.0);
        assert_eq!(optimize_checkpoint_period(&p, Scheme::CodeNet).unwrap().0, 100);
    }

    #[test]
    fn matches_recursion() {
        let p = params(0.7, 0.2, 1);
        let c = 0.7 + 10.0 * 0.3;
        let mut e = 0.0;
        for k in 1..=12 {
            e = (e + c) / 0.9;
            let closed = expected_period_time(&p, Scheme::CodeNet, k).unwrap();
            assert!((closed - e).abs() < 1e-9 * e, "k = {k}");
        }
    }

    #[test]
    fn schemes_agree_without_correctable_errors() {
        let p = params(0.8, 0.0, 7);
        assert_eq!(
            expected_time(&p, Scheme::CodeNet).unwrap(),
            expected_time(&p, Scheme::Replication).unwrap()
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            params(0.5, 0.6, 1).validate(),
            Err(ModelError::Probabilities { .. })
        ));
        assert_eq!(
            expected_time(&params(0.0, 0.0, 1), Scheme::CodeNet),
            Err(ModelError::NeverCompletes)
        );
    }

    #[test]
    fn csv_layout() {
        let base = RuntimeModelParams::poisson(0.0, 1.0, 1000.0, 1000.0, 1, 50);
        let rows = tradeoff_rows(&[0.5, 1.0], &base).unwrap();
        let mut buf = Vec::new();
        write_tradeoff_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], TRADEOFF_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn large_n_limits() {
        let cp = ComplexityParams::square(16, 1, 10_000_000, 10_000_000, 1e-5, 1e-9, 1e-11);
        let (comm, comp) = complexity_ratios(&cp);
        assert!((comm - 4.5).abs() / 4.5 < 0.01);
        assert!((comp - 1.0).abs() < 0.01);
        let zero = ComplexityParams::square(16, 0, 10_000_000, 10_000_000, 0.0, 1.0, 1.0);
        assert!((complexity_ratios(&zero).0 - 1.5).abs() < 1e-12);
    }
}
