//! The `verify-codec` subcommand.

use std::fmt::Write as _;

use codenet_core::codec::{correction_trials, TrialStats};
use codenet_core::MdsCode;

use crate::CliError;

/// Relative message error accepted for a correction.
pub const MAX_REL_ERROR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyRow {
    pub k: usize,
    pub t: usize,
    pub stats: TrialStats,
}

impl VerifyRow {
    pub fn pass(&self) -> bool {
        self.stats.all_pass(MAX_REL_ERROR)
    }
}

pub fn run(cases: &[(usize, usize)], trials: u64, block: usize, seed: u64) -> Result<Vec<VerifyRow>, CliError> {
    cases
        .iter()
        .map(|&(k, t)| {
            let code = MdsCode::cauchy(k, t).map_err(|e| CliError::Usage(e.to_string()))?;
            let stats = correction_trials(&code, block, trials, seed ^ ((k as u64) << 32 | t as u64));
            Ok(VerifyRow { k, t, stats })
        })
        .collect()
}

pub fn table(rows: &[VerifyRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>3} {:>7} {:>9} {:>12} {:>9} {:>9} {:>9} {:>7}  result",
        "k", "t", "trials", "corrected", "max_rel_err", "t+1_seen", "t+1_uncor", "t+1_true", "silent"
    );
    for r in rows {
        let s = &r.stats;
        let _ = writeln!(
            out,
            "{:>3} {:>3} {:>7} {:>9} {:>12.3e} {:>9} {:>9} {:>9} {:>7}  {}",
            r.k,
            r.t,
            s.trials,
            s.corrected,
            s.max_rel_error,
            s.over_detected,
            s.over_uncorrectable,
            s.over_corrected_to_truth,
            s.over_silent,
            if r.pass() { "PASS" } else { "FAIL" }
        );
    }
    out
}
