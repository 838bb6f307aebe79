//! The simulated hybrid loop: prepare, run the circuit, measure a finite
//! number of shots, and let DIRECT choose the next parameters.
//!
//! A fraction of the budget is held back to re-measure the final incumbent;
//! the mean of those fresh measurements is the reported result, so that it
//! carries no selection bias from the search.

use super::{direct_search, DirectResult, OptimizerConfig, Sample, TraceRecord};
use crate::error::{invalid, Result};
use crate::lattice::InteractionMatrix;
use crate::measure::{measure_cost, MeasurementPlan, Penalty, DEGENERATE_SENTINEL};
use crate::rng;
use crate::statevec::{Axis, IsingSpectrum, ParamVector, StateVector, PREPARATION_ANGLE};

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackConfig {
    pub optimizer: OptimizerConfig,
    pub plan: MeasurementPlan,
    pub penalty: Option<Penalty>,
    /// Replace measurements by the exact measured cost `N⟨J_y²⟩/⟨J_x⟩²`.
    pub noiseless: bool,
    /// Fraction of the budget used to re-measure the final incumbent.
    pub validation_fraction: f64,
}

impl FeedbackConfig {
    /// Shots per evaluation from `plan`, running-mean DIRECT, 5 % validation.
    pub fn new(mut optimizer: OptimizerConfig, plan: MeasurementPlan) -> Result<Self> {
        optimizer.runs_per_evaluation = plan.shots as u64;
        optimizer.direct.resample = true;
        let c = FeedbackConfig {
            optimizer,
            plan,
            penalty: None,
            noiseless: false,
            validation_fraction: 0.05,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.optimizer.runs_per_evaluation != self.plan.shots as u64 {
            return Err(invalid("runs_per_evaluation must equal the shots per evaluation"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(invalid("validation_fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FeedbackResult {
    pub best: ParamVector,
    /// Reported cost at `best`: the validation mean, or DIRECT's running mean
    /// when no validation budget was left.
    pub final_xi2: f64,
    pub final_std_error: f64,
    pub validation_evaluations: u64,
    pub runs_used: u64,
    pub search: DirectResult,
}

/// Prepare `|↓⟩^⊗N`, apply `R_y(PREPARATION_ANGLE)` and the circuit.
pub(crate) fn prepare(ising: &IsingSpectrum, params: &ParamVector) -> Result<StateVector> {
    let mut s = StateVector::all_down(ising.n())?;
    s.apply_rotation(Axis::Y, PREPARATION_ANGLE);
    s.apply_circuit(ising, params)?;
    Ok(s)
}

fn evaluate(ising: &IsingSpectrum, cfg: &FeedbackConfig, theta: &[f64], index: u64) -> Result<Sample> {
    let params = ParamVector::new(theta.to_vec())?;
    let state = prepare(ising, &params)?;
    if cfg.noiseless {
        let m = state.collective_expectations();
        let value = m.xi2_along_y().unwrap_or(DEGENERATE_SENTINEL);
        let penalty = cfg.penalty.map_or(0.0, |p| p.value(m.mean[0].abs()));
        return Ok(Sample::exact(value + penalty));
    }
    let est = measure_cost(&state, &cfg.plan, cfg.penalty.as_ref(), rng::child_seed(cfg.optimizer.seed, index))?;
    Ok(Sample {
        value: est.cost(),
        std_error: if est.std_error.is_finite() { est.std_error } else { 0.0 },
    })
}

/// Run the loop for a circuit of `n_layers` layers on interactions `v`.
/// Deterministic given `config.optimizer.seed`.
pub fn feedback_loop(v: &InteractionMatrix, n_layers: usize, config: &FeedbackConfig) -> Result<FeedbackResult> {
    config.validate()?;
    if config.optimizer.bounds.dim() != 3 * n_layers {
        return Err(invalid("bounds do not match the number of layers"));
    }
    let ising = IsingSpectrum::new(v)?;
    let total = config.optimizer.max_evaluations();
    let validation = ((total as f64 * config.validation_fraction).floor() as u64).min(total - 1);
    let mut search_cfg = config.optimizer.clone();
    search_cfg.budget_runs = (total - validation) * search_cfg.runs_per_evaluation;

    let mut search = direct_search(|theta: &[f64], i| evaluate(&ising, config, theta, i), &search_cfg, None)?;

    let mut final_xi2 = search.best_value;
    let mut final_std_error = search.best_std_error;
    if validation > 0 {
        let last = search.trace.records.last().cloned().expect("at least one evaluation");
        let mut values = Vec::with_capacity(validation as usize);
        let mut err2 = 0.0;
        for k in 0..validation {
            let index = search.evaluations + k;
            let s = evaluate(&ising, config, &search.best_theta, index)?;
            values.push(s.value);
            err2 += s.std_error * s.std_error;
            search.trace.records.push(TraceRecord {
                evaluation: index,
                iteration: last.iteration + 1,
                theta: search.best_theta.clone(),
                xi2_hat: s.value,
                std_error: s.std_error,
                runs_cumulative: (index + 1) * search_cfg.runs_per_evaluation,
                predicted_min: last.predicted_min,
                band: last.band,
            });
        }
        let k = values.len() as f64;
        final_xi2 = values.iter().sum::<f64>() / k;
        // Scatter of the fresh measurements when available, else propagated errors.
        final_std_error = if values.len() > 1 {
            let var = values.iter().map(|x| (x - final_xi2).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            err2.sqrt() / k
        };
    }
    let runs_used = search.trace.runs_used();
    Ok(FeedbackResult {
        best: ParamVector::new(search.best_theta.clone())?,
        final_xi2,
        final_std_error,
        validation_evaluations: validation,
        runs_used,
        search,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, interaction_matrix};
    use crate::statevec::Bounds;

    fn setup(budget: u64, seed: u64) -> (InteractionMatrix, FeedbackConfig) {
        let g = build_chain(6, 1.0).unwrap();
        let v = interaction_matrix(&g, 2.0, 1.0).unwrap();
        let opt = OptimizerConfig::new(Bounds::circuit(1, 3.0), budget, 100, seed).unwrap();
        (v, FeedbackConfig::new(opt, MeasurementPlan::default()).unwrap())
    }

    #[test]
    fn one_evaluation_budget_gives_one_point() {
        let (v, c) = setup(100, 1);
        let r = feedback_loop(&v, 1, &c).unwrap();
        assert_eq!(r.search.trace.len(), 1);
        assert_eq!(r.runs_used, 100);
        assert_eq!(r.validation_evaluations, 0);
    }

    #[test]
    fn same_seed_same_trace() {
        let (v, c) = setup(5_000, 4);
        let a = feedback_loop(&v, 1, &c).unwrap();
        let b = feedback_loop(&v, 1, &c).unwrap();
        assert_eq!(a.search.trace, b.search.trace);
        assert_eq!(a.final_xi2, b.final_xi2);
        let (_, c2) = setup(5_000, 5);
        assert_ne!(feedback_loop(&v, 1, &c2).unwrap().search.trace, a.search.trace);
    }

    #[test]
    fn budget_accounting_is_exact() {
        let (v, c) = setup(20_000, 2);
        let r = feedback_loop(&v, 1, &c).unwrap();
        assert_eq!(r.runs_used, 20_000);
        assert_eq!(r.search.trace.len(), 200);
        assert_eq!(r.validation_evaluations, 10);
        let mut last = 0;
        for rec in &r.search.trace.records {
            assert!(rec.runs_cumulative > last);
            last = rec.runs_cumulative;
        }
        assert!(r.final_xi2 < 1.0);
    }

    #[test]
    fn preparation_gives_coherent_x() {
        let ising = IsingSpectrum::new(&InteractionMatrix::uniform(4, 1.0).unwrap()).unwrap();
        let s = prepare(&ising, &ParamVector::zeros(1)).unwrap();
        assert!((s.fidelity(&StateVector::coherent_x(4).unwrap()) - 1.0).abs() < 1e-12);
    }
}
