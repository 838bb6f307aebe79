//! Projective measurements and the shot-noise estimators of the cost.
//!
//! The estimators in this module only see [`ShotBatch`]es, never amplitudes.
//! Measuring in the `x` basis applies `R_y(−π/2)` before reading out `z`, the
//! `y` basis applies `R_x(+π/2)`; both map `|↑_a⟩` to `|↑_z⟩`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::statevec::{Axis, StateVector};

/// `ξ̂²` reported when `|⟨Ĵ_x⟩|` is too small to divide by.
pub const DEGENERATE_SENTINEL: f64 = 1e6;

/// Relative threshold: an estimate is degenerate when `|⟨Ĵ_x⟩| < 10⁻⁶ N`.
pub const DEGENERATE_FRACTION: f64 = 1e-6;

/// Measurement basis; only `x` and `y` are used by the estimators.
pub type Basis = Axis;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotBatch {
    pub basis: Basis,
    pub n_atoms: usize,
    /// Outcome of each shot as a basis index: bit `k` set means spin `k` up.
    pub outcomes: Vec<usize>,
    pub seed: u64,
}

impl ShotBatch {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn bitstring(&self, shot: usize) -> Vec<bool> {
        (0..self.n_atoms).map(|k| self.outcomes[shot] >> k & 1 == 1).collect()
    }

    /// Half-magnetization `(n_up − n_down)/2` of each shot.
    pub fn magnetizations(&self) -> impl Iterator<Item = f64> + '_ {
        let half = self.n_atoms as f64 / 2.0;
        self.outcomes.iter().map(move |b| b.count_ones() as f64 - half)
    }

    /// One row per shot, one `0/1` column per spin.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# squeezekit-schema v1")?;
        writeln!(w, "# basis={} seed={}", basis_name(self.basis), self.seed)?;
        let header: Vec<String> = (0..self.n_atoms).map(|k| format!("s{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for &b in &self.outcomes {
            let row: Vec<&str> = (0..self.n_atoms).map(|k| if b >> k & 1 == 1 { "1" } else { "0" }).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn basis_name(b: Basis) -> &'static str {
    match b {
        Axis::X => "x",
        Axis::Y => "y",
        Axis::Z => "z",
    }
}

/// Rotate a copy of `state` so that `basis` reads out along `z`.
fn rotated_for(state: &StateVector, basis: Basis) -> StateVector {
    let mut s = state.clone();
    match basis {
        Axis::X => s.apply_rotation(Axis::Y, -std::f64::consts::FRAC_PI_2),
        Axis::Y => s.apply_rotation(Axis::X, std::f64::consts::FRAC_PI_2),
        Axis::Z => {}
    }
    s
}

/// Cumulative outcome distribution in a fixed basis, reusable across batches.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    basis: Basis,
    n_atoms: usize,
    cdf: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(state: &StateVector, basis: Basis) -> Self {
        let rotated = rotated_for(state, basis);
        let mut acc = 0.0;
        let cdf = rotated
            .amplitudes()
            .iter()
            .map(|a| {
                acc += a.norm_sqr();
                acc
            })
            .collect();
        OutcomeDistribution {
            basis,
            n_atoms: state.n_atoms(),
            cdf,
        }
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("non-empty distribution");
        let u = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample(&self, n_shots: usize, seed: u64) -> Result<ShotBatch> {
        if n_shots == 0 {
            return Err(invalid("n_shots must be at least 1"));
        }
        let mut r = rng::root(seed);
        Ok(ShotBatch {
            basis: self.basis,
            n_atoms: self.n_atoms,
            outcomes: (0..n_shots).map(|_| self.draw(&mut r)).collect(),
            seed,
        })
    }
}

/// Draw `n_shots` projective outcomes of every spin in `basis`.
pub fn sample_shots(state: &StateVector, basis: Basis, n_shots: usize, seed: u64) -> Result<ShotBatch> {
    OutcomeDistribution::new(state, basis).sample(n_shots, seed)
}

/// Soft barrier `f_p(x) = exp(1/(x − x̄))` for `0 < x < x̄`, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Penalty {
    pub threshold: f64,
}

impl Penalty {
    /// `x̄ = N/√8`.
    pub fn default_for(n_atoms: usize) -> Self {
        Penalty {
            threshold: n_atoms as f64 / 8f64.sqrt(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        if x > 0.0 && x < self.threshold {
            (1.0 / (x - self.threshold)).exp()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    pub xi2_hat: f64,
    pub mean_jx_hat: f64,
    pub mean_jy2_hat: f64,
    pub n_shots_used: usize,
    pub penalty_value: f64,
    /// Delta-method standard error of `xi2_hat`; infinite when degenerate.
    pub std_error: f64,
    pub degenerate: bool,
}

impl CostEstimate {
    /// Value handed to the optimizer: `ξ̂² + f_p`.
    pub fn cost(&self) -> f64 {
        self.xi2_hat + self.penalty_value
    }
}

fn mean_var(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (mean, var, n)
}

/// `ξ̂² = N ⟨Ĵ_y²⟩ / ⟨Ĵ_x⟩²` from an `x` batch and a `y` batch.
pub fn estimate_cost(x_batch: &ShotBatch, y_batch: &ShotBatch, penalty: Option<&Penalty>) -> Result<CostEstimate> {
    if x_batch.is_empty() || y_batch.is_empty() {
        return Err(invalid("shot batches must be non-empty"));
    }
    if x_batch.basis != Axis::X || y_batch.basis != Axis::Y {
        return Err(invalid("estimate_cost expects an x batch and a y batch"));
    }
    if x_batch.n_atoms != y_batch.n_atoms {
        return Err(Error::DimensionMismatch {
            expected: x_batch.n_atoms,
            got: y_batch.n_atoms,
        });
    }
    let n = x_batch.n_atoms as f64;
    let (jx, var_jx, mx) = mean_var(x_batch.magnetizations());
    let (jy2, var_jy2, my) = mean_var(y_batch.magnetizations().map(|m| m * m));
    let penalty_value = penalty.map_or(0.0, |p| p.value(jx.abs()));
    let n_shots_used = mx + my;
    if jx.abs() < DEGENERATE_FRACTION * n {
        return Ok(CostEstimate {
            xi2_hat: DEGENERATE_SENTINEL,
            mean_jx_hat: jx,
            mean_jy2_hat: jy2,
            n_shots_used,
            penalty_value,
            std_error: f64::INFINITY,
            degenerate: true,
        });
    }
    let xi2 = n * jy2 / (jx * jx);
    let rel_var = if jy2 > 0.0 { var_jy2 / (my as f64 * jy2 * jy2) } else { 0.0 } + 4.0 * var_jx / (mx as f64 * jx * jx);
    Ok(CostEstimate {
        xi2_hat: xi2,
        mean_jx_hat: jx,
        mean_jy2_hat: jy2,
        n_shots_used,
        penalty_value,
        std_error: xi2 * rel_var.sqrt(),
        degenerate: false,
    })
}

/// How one cost evaluation spends its shots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementPlan {
    pub shots: usize,
    /// Fraction of `shots` measured in the `x` basis.
    pub x_fraction: f64,
}

impl MeasurementPlan {
    pub fn new(shots: usize, x_fraction: f64) -> Result<Self> {
        if shots < 2 {
            return Err(invalid("a cost evaluation needs at least 2 shots"));
        }
        if !(x_fraction > 0.0 && x_fraction < 1.0) {
            return Err(invalid("x_fraction must lie in (0, 1)"));
        }
        Ok(MeasurementPlan { shots, x_fraction })
    }

    /// `(x shots, y shots)`, each at least 1.
    pub fn split(&self) -> (usize, usize) {
        let nx = ((self.shots as f64 * self.x_fraction).round() as usize).clamp(1, self.shots - 1);
        (nx, self.shots - nx)
    }
}

impl Default for MeasurementPlan {
    fn default() -> Self {
        MeasurementPlan {
            shots: 100,
            x_fraction: 0.5,
        }
    }
}

/// Measure `state` according to `plan` and estimate the cost. The `x` and
/// `y` batches use child seeds 0 and 1 of `seed`.
pub fn measure_cost(state: &StateVector, plan: &MeasurementPlan, penalty: Option<&Penalty>, seed: u64) -> Result<CostEstimate> {
    let (nx, ny) = plan.split();
    let xb = sample_shots(state, Axis::X, nx, rng::child_seed(seed, 0))?;
    let yb = sample_shots(state, Axis::Y, ny, rng::child_seed(seed, 1))?;
    estimate_cost(&xb, &yb, penalty)
}

/// Squared relative error `(Δξ²)²/(ξ²)² = 2(N² + 2N − 4)/(N(N + 2))` of the
/// trial state, per shot in each basis.
pub fn relative_error_analytic(n: usize) -> Result<f64> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid("relative_error_analytic needs an even N ≥ 2"));
    }
    let n = n as f64;
    Ok(2.0 * (n * n + 2.0 * n - 4.0) / (n * (n + 2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeError {
    /// `std(ξ̂²)/mean(ξ̂²) · √M`, with `M` shots per basis.
    pub per_shot: f64,
    pub mean: f64,
    pub std: f64,
    pub repeats_used: usize,
    pub excluded: usize,
}

impl RelativeError {
    /// Comparable with [`relative_error_analytic`].
    pub fn per_shot_squared(&self) -> f64 {
        self.per_shot * self.per_shot
    }
}

/// Repeat the estimator `n_repeats` times with `shots_per_estimate` shots in
/// each basis. Repeat `r` draws from RNG stream `r` of `seed`.
pub fn empirical_relative_error(
    state: &StateVector,
    shots_per_estimate: usize,
    n_repeats: usize,
    seed: u64,
) -> Result<RelativeError> {
    if shots_per_estimate < 2 || n_repeats < 2 {
        return Err(invalid("need at least 2 shots per estimate and 2 repeats"));
    }
    let dx = OutcomeDistribution::new(state, Axis::X);
    let dy = OutcomeDistribution::new(state, Axis::Y);
    let estimates: Vec<Option<f64>> = (0..n_repeats)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(seed, r as u64);
            let draw = |d: &OutcomeDistribution, g: &mut rand_chacha::ChaCha8Rng| ShotBatch {
                basis: d.basis,
                n_atoms: d.n_atoms,
                outcomes: (0..shots_per_estimate).map(|_| d.draw(g)).collect(),
                seed,
            };
            let xb = draw(&dx, &mut g);
            let yb = draw(&dy, &mut g);
            let est = estimate_cost(&xb, &yb, None).expect("valid batches");
            (!est.degenerate).then_some(est.xi2_hat)
        })
        .collect();
    let good: Vec<f64> = estimates.iter().flatten().copied().collect();
    let excluded = n_repeats - good.len();
    if excluded * 10 > n_repeats || good.len() < 2 {
        return Err(Error::UnstableEstimate {
            excluded,
            total: n_repeats,
        });
    }
    let (mean, var, used) = mean_var(good.into_iter());
    let std = var.sqrt();
    Ok(RelativeError {
        per_shot: std / mean * (shots_per_estimate as f64).sqrt(),
        mean,
        std,
        repeats_used: used,
        excluded,
    })
}
