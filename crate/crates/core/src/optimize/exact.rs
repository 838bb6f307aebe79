//! Noiseless optimization: coarse DIRECT passes followed by multi-start
//! Nelder–Mead, for both engines.
//!
//! Layered circuits are additionally seeded from the best circuit whose
//! layers are all identical, found by DIRECT and Nelder–Mead in the space of
//! a single layer. That seed lands in a good basin far more often than random
//! starts in the full space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{direct_search, local_refine, DirectSettings, LocalSettings, OptimizerConfig, Sample};
use crate::dicke::{scan_minimum, DickeVector, OatOptimum};
use crate::error::{invalid, Result};
use crate::lattice::InteractionMatrix;
use crate::measure::DEGENERATE_SENTINEL;
use crate::rng;
use crate::statevec::{Bounds, IsingSpectrum, ParamVector, StateVector};

/// Quantity minimized by the exact optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactObjective {
    /// Rotation-invariant `ξ²`.
    #[default]
    Xi2,
    /// `N⟨J_y²⟩/⟨J_x⟩²`, the quantity the measurements estimate.
    Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactSettings {
    /// Evaluations spent in the coarse DIRECT pass over the full space.
    pub direct_evaluations: u64,
    /// Evaluations spent by DIRECT on the identical-layer seed; 0 disables it.
    pub uniform_seed_evaluations: u64,
    /// Extra Nelder–Mead starts drawn uniformly in the bounds.
    pub restarts: usize,
    pub local: LocalSettings,
    pub objective: ExactObjective,
    pub seed: u64,
}

impl Default for ExactSettings {
    fn default() -> Self {
        ExactSettings {
            direct_evaluations: 200,
            uniform_seed_evaluations: 300,
            restarts: 0,
            local: LocalSettings {
                initial_scale: 0.05,
                tolerance: 1e-6,
                max_evaluations: 1_500,
            },
            objective: ExactObjective::Xi2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactResult {
    pub theta: Vec<f64>,
    pub xi2: f64,
    pub evaluations: usize,
}

impl ExactResult {
    /// Parameters as a layered-circuit vector `(τ, ϑ, τ′)` per layer.
    pub fn params(&self) -> Result<ParamVector> {
        ParamVector::new(self.theta.clone())
    }
}

/// Minimize a deterministic `f` inside `bounds`. The starting points are the
/// DIRECT incumbent, the optional warm start, and `restarts` random points;
/// the warm start's value is an upper bound on the result.
pub fn exact_minimize<F>(f: F, bounds: &Bounds, warm_start: Option<&[f64]>, settings: &ExactSettings) -> Result<ExactResult>
where
    F: Fn(&[f64]) -> f64,
{
    minimize_from(f, bounds, warm_start, Vec::new(), settings)
}

fn minimize_from<F>(
    f: F,
    bounds: &Bounds,
    warm_start: Option<&[f64]>,
    extra_starts: Vec<Vec<f64>>,
    settings: &ExactSettings,
) -> Result<ExactResult>
where
    F: Fn(&[f64]) -> f64,
{
    let mut evaluations = 0usize;
    let mut best = (Vec::new(), f64::INFINITY);
    let consider = |x: Vec<f64>, v: f64, best: &mut (Vec<f64>, f64)| {
        if v < best.1 {
            *best = (x, v);
        }
    };

    let mut starts = extra_starts;
    if settings.direct_evaluations > 0 {
        let config = OptimizerConfig {
            bounds: bounds.clone(),
            budget_runs: settings.direct_evaluations,
            runs_per_evaluation: 1,
            direct: DirectSettings::default(),
            seed: settings.seed,
        };
        let r = direct_search(|x: &[f64], _| Ok(Sample::exact(f(x))), &config, warm_start)?;
        evaluations += r.evaluations as usize;
        starts.push(r.best_theta.clone());
        consider(r.best_theta, r.best_value, &mut best);
    }
    if let Some(w) = warm_start {
        let v = f(w);
        evaluations += 1;
        consider(w.to_vec(), v, &mut best);
        starts.push(w.to_vec());
    }
    let mut g = rng::root(settings.seed);
    for _ in 0..settings.restarts {
        let u: Vec<f64> = (0..bounds.dim()).map(|_| g.random::<f64>()).collect();
        starts.push(bounds.from_unit(&u));
    }
    if starts.is_empty() {
        return Err(invalid("exact optimization needs DIRECT evaluations, a warm start or restarts"));
    }
    for s in starts {
        let r = local_refine(&f, &s, bounds, &settings.local)?;
        evaluations += r.evaluations;
        consider(r.x, r.value, &mut best);
    }
    Ok(ExactResult {
        theta: best.0,
        xi2: best.1,
        evaluations,
    })
}

fn circuit_cost(ising: &IsingSpectrum, objective: ExactObjective) -> impl Fn(&[f64]) -> f64 + '_ {
    move |theta: &[f64]| {
        let Ok(p) = ParamVector::new(theta.to_vec()) else {
            return DEGENERATE_SENTINEL;
        };
        let Ok(mut s) = StateVector::coherent_x(ising.n()) else {
            return DEGENERATE_SENTINEL;
        };
        if s.apply_circuit(ising, &p).is_err() {
            return DEGENERATE_SENTINEL;
        }
        let m = s.collective_expectations();
        let v = match objective {
            ExactObjective::Xi2 => m.xi2(),
            ExactObjective::Measured => m.xi2_along_y(),
        };
        v.unwrap_or(DEGENERATE_SENTINEL)
    }
}

/// Best circuit whose `n_layers` layers all equal one point of `layer`.
fn uniform_seed<F>(f: &F, layer: &Bounds, n_layers: usize, settings: &ExactSettings) -> Result<Option<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64,
{
    if settings.uniform_seed_evaluations == 0 {
        return Ok(None);
    }
    let repeat = |x: &[f64]| -> Vec<f64> { x.iter().cycle().take(x.len() * n_layers).copied().collect() };
    let reduced = ExactSettings {
        direct_evaluations: settings.uniform_seed_evaluations,
        uniform_seed_evaluations: 0,
        restarts: 0,
        ..*settings
    };
    let r = exact_minimize(|x: &[f64]| f(&repeat(x)), layer, None, &reduced)?;
    Ok(Some(repeat(&r.theta)))
}

/// One circuit layer `(τ, ϑ, τ′)` with the total interaction budget split
/// evenly over `n_layers` layers.
fn layer_bounds(bounds: &Bounds, n_layers: usize) -> Result<Bounds> {
    let n = n_layers as f64;
    Bounds::new(
        bounds.lower[..3].to_vec(),
        vec![
            bounds.lower[0] + (bounds.upper[0] - bounds.lower[0]) / n,
            bounds.upper[1],
            bounds.lower[2] + (bounds.upper[2] - bounds.lower[2]) / n,
        ],
    )
}

fn optimize_circuit<F>(f: &F, n_layers: usize, bounds: &Bounds, warm: Option<&[f64]>, settings: &ExactSettings) -> Result<ExactResult>
where
    F: Fn(&[f64]) -> f64,
{
    let seed = uniform_seed(f, &layer_bounds(bounds, n_layers)?, n_layers, settings)?;
    minimize_from(f, bounds, warm, seed.into_iter().collect(), settings)
}

/// Optimize the layered circuit with `n_layers` layers on the exact engine.
pub fn exact_optimize(
    v: &InteractionMatrix,
    n_layers: usize,
    bounds: &Bounds,
    warm_start: Option<&ParamVector>,
    settings: &ExactSettings,
) -> Result<ExactResult> {
    if bounds.dim() != 3 * n_layers {
        return Err(invalid("bounds do not match the number of layers"));
    }
    let ising = IsingSpectrum::new(v)?;
    let cost = circuit_cost(&ising, settings.objective);
    optimize_circuit(&cost, n_layers, bounds, warm_start.map(|w| w.as_slice()), settings)
}

/// Optimize depths `1..=max_layers`, warm-starting depth `n + 1` from the
/// depth-`n` optimum padded with an identity layer. The results are
/// non-increasing in depth.
pub fn exact_optimize_depths(
    v: &InteractionMatrix,
    max_layers: usize,
    tau_max: f64,
    settings: &ExactSettings,
) -> Result<Vec<ExactResult>> {
    let ising = IsingSpectrum::new(v)?;
    let cost = circuit_cost(&ising, settings.objective);
    let mut out: Vec<ExactResult> = Vec::with_capacity(max_layers);
    for n in 1..=max_layers {
        let bounds = Bounds::circuit(n, tau_max);
        let warm = out.last().map(|r| {
            let mut t = r.theta.clone();
            t.resize(3 * n, 0.0);
            t
        });
        let r = optimize_circuit(&cost, n, &bounds, warm.as_deref(), settings)?;
        out.push(r);
    }
    Ok(out)
}

/// Best single `D_z(τ)` on `v` for `τ ∈ [0, tau_max]`: the finite-range
/// analogue of one-axis twisting.
pub fn foat_optimal_xi2(v: &InteractionMatrix, tau_max: f64, points: usize) -> Result<OatOptimum> {
    if !(tau_max > 0.0) || points < 2 {
        return Err(invalid("need tau_max > 0 and at least 2 scan points"));
    }
    let ising = IsingSpectrum::new(v)?;
    let start = StateVector::coherent_x(ising.n())?;
    let mut failure = None;
    let (tau, xi2) = scan_minimum(
        |t| {
            let mut s = start.clone();
            if let Err(e) = s.apply_dz(&ising, t) {
                failure.get_or_insert(e);
            }
            s.xi2_exact().unwrap_or(f64::INFINITY)
        },
        0.0,
        tau_max,
        points,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(OatOptimum { tau, xi2 }),
    }
}

/// Optimize the infinite-range circuit `Π R_x(ϑ_i) exp(−iτ_i J_z²)` on the
/// Dicke engine; `theta` holds `(τ_i, ϑ_i)` pairs.
pub fn exact_optimize_dicke(n_atoms: usize, n_layers: usize, tau_max: f64, settings: &ExactSettings) -> Result<ExactResult> {
    if n_layers == 0 {
        return Err(invalid("n_layers must be at least 1"));
    }
    let start = DickeVector::coherent_x(n_atoms)?;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for _ in 0..n_layers {
        lower.extend([0.0, 0.0]);
        upper.extend([tau_max, 2.0 * std::f64::consts::PI]);
    }
    let bounds = Bounds::new(lower, upper)?;
    let cost = |theta: &[f64]| {
        let pairs: Vec<(f64, f64)> = theta.chunks(2).map(|c| (c[0], c[1])).collect();
        let mut s = start.clone();
        s.simplified_circuit(&pairs);
        let m = s.collective_expectations();
        match settings.objective {
            ExactObjective::Xi2 => m.xi2(),
            ExactObjective::Measured => m.xi2_along_y(),
        }
        .unwrap_or(DEGENERATE_SENTINEL)
    };
    let layer = Bounds::new(vec![0.0, 0.0], vec![tau_max, 2.0 * std::f64::consts::PI])?;
    let seed = uniform_seed(&cost, &layer, n_layers, settings)?;
    minimize_from(cost, &bounds, None, seed.into_iter().collect(), settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::oat_optimal_xi2;
    use crate::lattice::{build_chain, interaction_matrix};

    fn quick() -> ExactSettings {
        ExactSettings {
            direct_evaluations: 120,
            uniform_seed_evaluations: 60,
            restarts: 1,
            local: LocalSettings {
                initial_scale: 0.05,
                tolerance: 1e-5,
                max_evaluations: 400,
            },
            ..ExactSettings::default()
        }
    }

    #[test]
    fn minimize_finds_shifted_bowl() {
        let b = Bounds::new(vec![0.0; 3], vec![4.0; 3]).unwrap();
        let r = exact_minimize(|x: &[f64]| x.iter().map(|v| (v - 1.3).powi(2)).sum(), &b, None, &quick()).unwrap();
        assert!(r.xi2 < 1e-8);
    }

    #[test]
    fn depth_monotone_on_chain() {
        let g = build_chain(6, 1.0).unwrap();
        let v = interaction_matrix(&g, 2.0, 1.0).unwrap();
        let rs = exact_optimize_depths(&v, 3, 3.0, &quick()).unwrap();
        for w in rs.windows(2) {
            assert!(w[1].xi2 <= w[0].xi2 + 1e-9, "{} > {}", w[1].xi2, w[0].xi2);
        }
        assert!(rs[0].xi2 < 1.0);
    }

    #[test]
    fn single_layer_all_to_all_reaches_oat() {
        // One layer with τ′ = 0 contains OAT followed by a rotation.
        let n = 6;
        let v = InteractionMatrix::uniform(n, 1.0).unwrap();
        let r = exact_optimize(&v, 1, &Bounds::circuit(1, 3.0), None, &quick()).unwrap();
        let oat = oat_optimal_xi2(n).unwrap().xi2;
        assert!(r.xi2 <= oat + 1e-6, "{} vs {oat}", r.xi2);
        assert_eq!(r.params().unwrap().n_layers(), 1);
    }

    #[test]
    fn dicke_single_layer_is_oat() {
        let r = exact_optimize_dicke(10, 1, std::f64::consts::PI, &quick()).unwrap();
        let oat = oat_optimal_xi2(10).unwrap().xi2;
        assert!((r.xi2 - oat).abs() < 1e-6, "{} vs {oat}", r.xi2);
    }
}
