//! Robustness studies: correlated control noise on the bare pulse sequence
//! and stochastic filling of the tweezer array.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{interaction_matrix, random_fill, Geometry, InteractionMatrix};
use crate::measure::{estimate_cost, OutcomeDistribution, ShotBatch};
use crate::rng;
use crate::statevec::{bare_pulses, Axis, IsingSpectrum, ParamVector, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Relative standard deviation of the multiplicative pulse error.
    pub sigma_noise: f64,
    pub n_realizations: usize,
    /// Bootstrap resamples used for `std_xi2`.
    pub bootstrap: usize,
    /// Draw an independent error for every pulse instead of one shared error.
    pub per_pulse: bool,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma_noise: 0.0,
            n_realizations: 10_000,
            bootstrap: 200,
            per_pulse: false,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_noise >= 0.0 && self.sigma_noise.is_finite()) {
            return Err(invalid(format!("sigma_noise must be finite and non-negative, got {}", self.sigma_noise)));
        }
        if self.n_realizations < 4 {
            return Err(invalid("n_realizations must be at least 4"));
        }
        if self.bootstrap < 2 {
            return Err(invalid("bootstrap must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseResult {
    pub sigma_noise: f64,
    pub n_atoms: usize,
    pub n_layers: usize,
    /// `ξ̂²` assembled from all single shots.
    pub mean_xi2: f64,
    /// Bootstrap standard deviation of `mean_xi2`.
    pub std_xi2: f64,
    pub x_shots: usize,
    pub y_shots: usize,
    pub seed: u64,
}

/// Realization `r` draws its errors and its single shot from RNG stream `r`;
/// even realizations are read out in `x`, odd ones in `y`.
pub fn control_noise_xi2(v: &InteractionMatrix, theta: &ParamVector, noise: &NoiseConfig) -> Result<NoiseResult> {
    noise.validate()?;
    let ising = IsingSpectrum::new(v)?;
    let n = ising.n();
    let n_pulses = bare_pulses(theta).len();
    let normal = Normal::new(0.0, noise.sigma_noise).map_err(|e| invalid(e.to_string()))?;

    let outcomes: Vec<(Axis, usize)> = (0..noise.n_realizations)
        .into_par_iter()
        .map(|r| -> Result<(Axis, usize)> {
            let mut g = rng::stream(noise.seed, r as u64);
            let multipliers: Vec<f64> = if noise.per_pulse {
                (0..n_pulses).map(|_| 1.0 + normal.sample(&mut g)).collect()
            } else {
                vec![1.0 + normal.sample(&mut g); n_pulses]
            };
            let mut s = StateVector::all_down(n)?;
            s.apply_bare_sequence(&ising, theta, Some(&multipliers))?;
            let basis = if r % 2 == 0 { Axis::X } else { Axis::Y };
            Ok((basis, OutcomeDistribution::new(&s, basis).draw(&mut g)))
        })
        .collect::<Result<_>>()?;

    let pick = |basis: Axis| -> Vec<usize> { outcomes.iter().filter(|o| o.0 == basis).map(|o| o.1).collect() };
    let (xs, ys) = (pick(Axis::X), pick(Axis::Y));
    let batch = |basis, outcomes| ShotBatch {
        basis,
        n_atoms: n,
        outcomes,
        seed: noise.seed,
    };
    let mean_xi2 = estimate_cost(&batch(Axis::X, xs.clone()), &batch(Axis::Y, ys.clone()), None)?.xi2_hat;

    let mut g = rng::stream(noise.seed, noise.n_realizations as u64);
    let mut resample = |v: &[usize]| -> Vec<usize> { (0..v.len()).map(|_| v[g.random_range(0..v.len())]).collect() };
    let boot: Vec<f64> = (0..noise.bootstrap)
        .map(|_| {
            let x = resample(&xs);
            let y = resample(&ys);
            estimate_cost(&batch(Axis::X, x), &batch(Axis::Y, y), None).map(|e| e.xi2_hat)
        })
        .collect::<Result<_>>()?;
    let m = boot.iter().sum::<f64>() / boot.len() as f64;
    let std_xi2 = (boot.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt();

    Ok(NoiseResult {
        sigma_noise: noise.sigma_noise,
        n_atoms: n,
        n_layers: theta.n_layers(),
        mean_xi2,
        std_xi2,
        x_shots: xs.len(),
        y_shots: ys.len(),
        seed: noise.seed,
    })
}

/// Filling pattern `index` of a robustness study seeded with `seed`.
pub fn filling_pattern(base: &Geometry, fraction: f64, seed: u64, index: u64) -> Result<Geometry> {
    random_fill(base, fraction, rng::child_seed(seed, index))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FillingResult {
    pub fraction: f64,
    pub mean_xi2: f64,
    /// Sample standard deviation over patterns; zero for a single pattern.
    pub std_xi2: f64,
    pub per_pattern: Vec<f64>,
    pub atoms: Vec<usize>,
}

/// Noiseless `ξ²` of the fixed circuit `theta` on patterns `0..n_patterns`
/// (see [`filling_pattern`]). Pattern 0 is the one the caller optimizes on.
pub fn filling_robustness(
    base: &Geometry,
    fraction: f64,
    theta: &ParamVector,
    n_patterns: usize,
    seed: u64,
    r_c_over_a: f64,
    v0: f64,
) -> Result<FillingResult> {
    if n_patterns == 0 {
        return Err(invalid("n_patterns must be at least 1"));
    }
    let rows: Vec<(usize, f64)> = (0..n_patterns as u64)
        .into_par_iter()
        .map(|p| -> Result<(usize, f64)> {
            let g = filling_pattern(base, fraction, seed, p)?;
            let v = interaction_matrix(&g, r_c_over_a, v0)?;
            let ising = IsingSpectrum::new(&v)?;
            let mut s = StateVector::coherent_x(ising.n())?;
            s.apply_circuit(&ising, theta)?;
            Ok((ising.n(), s.xi2_exact()?))
        })
        .collect::<Result<_>>()?;
    let per_pattern: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let k = per_pattern.len() as f64;
    let mean_xi2 = per_pattern.iter().sum::<f64>() / k;
    let std_xi2 = if per_pattern.len() > 1 {
        (per_pattern.iter().map(|x| (x - mean_xi2).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(FillingResult {
        fraction,
        mean_xi2,
        std_xi2,
        atoms: rows.iter().map(|r| r.0).collect(),
        per_pattern,
    })
}

/// Total interaction time `Σ (τ_i + τ_i′)` in units of `1/V₀`.
pub fn total_interaction_time(theta: &ParamVector) -> f64 {
    theta.total_interaction_time()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn power_law_exponent(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(invalid("power-law fit needs at least two positive points"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
