//! Derivative-free optimizers and the drivers built on them.
//!
//! [`direct_search`] is a DIRECT variant for noisy, budgeted costs,
//! [`local_refine`] a bound-clipped Nelder–Mead, [`feedback_loop`] the
//! simulated measure-and-update loop and [`exact_optimize`] the noiseless
//! multi-start optimizer used for sweeps.

mod direct;
mod exact;
mod feedback;
mod nelder_mead;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use direct::{direct_search, DirectResult, DirectSettings, RectInfo};
pub use exact::{
    exact_minimize, exact_optimize, exact_optimize_depths, exact_optimize_dicke, foat_optimal_xi2, ExactObjective, ExactResult,
    ExactSettings,
};
pub use feedback::{feedback_loop, FeedbackConfig, FeedbackResult};
pub use nelder_mead::{local_refine, LocalResult, LocalSettings};

use crate::error::{invalid, Result};
use crate::statevec::Bounds;

/// One noisy or exact cost evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub value: f64,
    /// Standard error of `value`; zero for exact costs.
    pub std_error: f64,
}

impl Sample {
    pub fn exact(value: f64) -> Self {
        Sample { value, std_error: 0.0 }
    }
}

/// Budget and search settings shared by the drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub bounds: Bounds,
    /// Total simulated experimental runs (shots) available.
    pub budget_runs: u64,
    /// Runs consumed by one cost evaluation.
    pub runs_per_evaluation: u64,
    pub direct: DirectSettings,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(bounds: Bounds, budget_runs: u64, runs_per_evaluation: u64, seed: u64) -> Result<Self> {
        let c = OptimizerConfig {
            bounds,
            budget_runs,
            runs_per_evaluation,
            direct: DirectSettings::default(),
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_evaluation == 0 {
            return Err(invalid("runs_per_evaluation must be positive"));
        }
        if self.budget_runs < self.runs_per_evaluation {
            return Err(invalid(format!(
                "budget of {} runs is smaller than one evaluation ({} runs)",
                self.budget_runs, self.runs_per_evaluation
            )));
        }
        self.direct.validate()
    }

    pub fn max_evaluations(&self) -> u64 {
        self.budget_runs / self.runs_per_evaluation
    }
}

/// One cost evaluation as seen by the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub evaluation: u64,
    pub iteration: u64,
    pub theta: Vec<f64>,
    /// Measured (or exact) cost of this evaluation.
    pub xi2_hat: f64,
    pub std_error: f64,
    pub runs_cumulative: u64,
    /// Running best of the kernel-smoothed cost at the incumbent.
    pub predicted_min: f64,
    /// Standard-error half-width around `predicted_min`.
    pub band: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
}

impl OptimizationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn runs_used(&self) -> u64 {
        self.records.last().map_or(0, |r| r.runs_cumulative)
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(OptimizationTrace { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_tiny_budget() {
        let b = Bounds::circuit(1, 1.0);
        assert!(OptimizerConfig::new(b.clone(), 99, 100, 0).is_err());
        assert!(OptimizerConfig::new(b.clone(), 100, 0, 0).is_err());
        assert_eq!(OptimizerConfig::new(b, 1_000, 100, 0).unwrap().max_evaluations(), 10);
    }

    #[test]
    fn trace_jsonl_round_trip() {
        let t = OptimizationTrace {
            records: vec![TraceRecord {
                evaluation: 0,
                iteration: 0,
                theta: vec![0.5, 1.0],
                xi2_hat: 0.9,
                std_error: 0.1,
                runs_cumulative: 100,
                predicted_min: 0.9,
                band: 0.1,
            }],
        };
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(OptimizationTrace::read_jsonl(&text).unwrap(), t);
    }
}
