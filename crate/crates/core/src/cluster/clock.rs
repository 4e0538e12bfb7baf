use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockMode {
    ErrorFree,
    CorrectAndRegenerate,
    Rollback,
    Checkpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockParams {
    pub tau_f: f64,
    pub tau_b: f64,
    pub tau_cpt: f64,
}

impl Default for ClockParams {
    fn default() -> Self {
        Self {
            tau_f: 1.0,
            tau_b: 100.0,
            tau_cpt: 100.0,
        }
    }
}

/// Iteration-granular time: `τ_f` per clean iteration, `τ_b` per corrected
/// or rolled-back one and `τ_cpt` per checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseClock {
    params: ClockParams,
    time: f64,
    clean: u64,
    corrected: u64,
    rollbacks: u64,
    checkpoints: u64,
}

impl CoarseClock {
    pub fn new(params: ClockParams) -> Self {
        Self {
            params,
            time: 0.0,
            clean: 0,
            corrected: 0,
            rollbacks: 0,
            checkpoints: 0,
        }
    }

    pub fn params(&self) -> ClockParams {
        self.params
    }

    /// Advances the clock and returns the increment.
    pub fn advance(&mut self, mode: ClockMode) -> f64 {
        let dt = match mode {
            ClockMode::ErrorFree => {
                self.clean += 1;
                self.params.tau_f
            }
            ClockMode::CorrectAndRegenerate => {
                self.corrected += 1;
                self.params.tau_b
            }
            ClockMode::Rollback => {
                self.rollbacks += 1;
                self.params.tau_b
            }
            ClockMode::Checkpoint => {
                self.checkpoints += 1;
                self.params.tau_cpt
            }
        };
        self.time += dt;
        dt
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn clean(&self) -> u64 {
        self.clean
    }

    pub fn corrected(&self) -> u64 {
        self.corrected
    }

    pub fn rollbacks(&self) -> u64 {
        self.rollbacks
    }

    pub fn checkpoints(&self) -> u64 {
        self.checkpoints
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_free_run_with_checkpoints() {
        let p = ClockParams {
            tau_f: 2.0,
            tau_b: 50.0,
            tau_cpt: 30.0,
        };
        let mut c = CoarseClock::new(p);
        let (m, i0) = (20u64, 5u64);
        for k in 0..m {
            if k % i0 == 0 {
                c.advance(ClockMode::Checkpoint);
            }
            c.advance(ClockMode::ErrorFree);
        }
        assert_eq!(c.time(), (m / i0) as f64 * 30.0 + m as f64 * 2.0);
    }

    #[test]
    fn corrected_iteration_costs_tau_b() {
        let mut c = CoarseClock::new(ClockParams::default());
        let before = c.time();
        assert_eq!(c.advance(ClockMode::CorrectAndRegenerate), 100.0);
        assert_eq!(c.time() - before, 100.0);
        assert_eq!(c.corrected(), 1);
    }
}
