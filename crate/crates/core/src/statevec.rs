//! Exact `2^N` state-vector engine for the layered squeezing circuit.
//!
//! Basis index `b` encodes the z-basis product state with spin `k` up when
//! bit `k` of `b` is set. Spin operators are `s = σ/2` and rotations are
//! `R_a(φ) = exp(−iφ J_a)`.
//!
//! Interaction gates are diagonal: `D_z(τ)` multiplies each basis state by
//! `exp(−iτ Σ_{i<j} V_ij z_i z_j / 4)` with `z = ±1`. `D_x` applies the same
//! phases in the x basis, reached by a Walsh–Hadamard transform.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::InteractionMatrix;
use crate::moments::CollectiveMoments;

/// Default cap on the register size (2^20 amplitudes, 16 MiB).
pub const DEFAULT_MAX_ATOMS: usize = 20;

static MAX_ATOMS: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_ATOMS);

/// Current cap on `N` for full state vectors.
pub fn max_atoms() -> usize {
    MAX_ATOMS.load(Ordering::Relaxed)
}

/// Change the register cap. Values above 30 are clamped to 30.
pub fn set_max_atoms(cap: usize) {
    MAX_ATOMS.store(cap.clamp(1, 30), Ordering::Relaxed);
}

pub(crate) fn check_capacity(n: usize) -> Result<()> {
    let cap = max_atoms();
    if n == 0 {
        return Err(invalid("register needs at least one atom"));
    }
    if n > cap {
        return Err(Error::Capacity { n, cap });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Pure state of `N` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// All spins down along z.
    pub fn all_down(n: usize) -> Result<Self> {
        check_capacity(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// All spins up along z.
    pub fn all_up(n: usize) -> Result<Self> {
        let mut s = Self::all_down(n)?;
        s.amps[0] = Complex64::new(0.0, 0.0);
        let last = s.amps.len() - 1;
        s.amps[last] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// The coherent state `|↑_x⟩^⊗N` reached from `|↓_z⟩^⊗N` by the
    /// preparation pulse.
    pub fn coherent_x(n: usize) -> Result<Self> {
        check_capacity(n)?;
        let a = (1u64 << n) as f64;
        Ok(StateVector {
            n,
            amps: vec![Complex64::new(a.sqrt().recip(), 0.0); 1 << n],
        })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_capacity(n)?;
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: amps.len(),
            });
        }
        Ok(StateVector { n, amps })
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    /// Probabilities of the z-basis outcomes.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Apply the same 2×2 unitary to every spin. `u` acts on `(up, down)`.
    pub fn apply_single_qubit_all(&mut self, u: [[Complex64; 2]; 2]) {
        for k in 0..self.n {
            let stride = 1usize << k;
            for block in (0..self.amps.len()).step_by(2 * stride) {
                for i in block..block + stride {
                    let down = self.amps[i];
                    let up = self.amps[i + stride];
                    self.amps[i + stride] = u[0][0] * up + u[0][1] * down;
                    self.amps[i] = u[1][0] * up + u[1][1] * down;
                }
            }
        }
    }

    /// Global rotation `exp(−i angle J_axis)`.
    pub fn apply_rotation(&mut self, axis: Axis, angle: f64) {
        let (s, c) = (angle / 2.0).sin_cos();
        match axis {
            Axis::X => {
                let d = Complex64::new(c, 0.0);
                let o = Complex64::new(0.0, -s);
                self.apply_single_qubit_all([[d, o], [o, d]]);
            }
            Axis::Y => {
                let d = Complex64::new(c, 0.0);
                self.apply_single_qubit_all([[d, Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), d]]);
            }
            Axis::Z => {
                let table = magnetization_phases(self.n, angle);
                for (b, a) in self.amps.iter_mut().enumerate() {
                    *a *= table[b.count_ones() as usize];
                }
            }
        }
    }

    /// Normalized Walsh–Hadamard transform on every spin. Maps z-basis
    /// coordinates to x-basis coordinates and back (it is an involution).
    pub fn apply_hadamard_all(&mut self) {
        for k in 0..self.n {
            let stride = 1usize << k;
            for block in (0..self.amps.len()).step_by(2 * stride) {
                for i in block..block + stride {
                    let down = self.amps[i];
                    let up = self.amps[i + stride];
                    self.amps[i + stride] = up + down;
                    self.amps[i] = up - down;
                }
            }
        }
        let scale = FRAC_1_SQRT_2.powi(self.n as i32);
        self.amps.iter_mut().for_each(|a| *a *= scale);
    }

    /// Multiply basis state `b` by `exp(−i t E_b)`.
    pub fn apply_diagonal(&mut self, energies: &[f64], t: f64) -> Result<()> {
        if energies.len() != self.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                got: energies.len(),
            });
        }
        if t == 0.0 {
            return Ok(());
        }
        for (a, &e) in self.amps.iter_mut().zip(energies) {
            let (s, c) = (t * e).sin_cos();
            *a *= Complex64::new(c, -s);
        }
        Ok(())
    }

    /// `D_z(τ)`.
    pub fn apply_dz(&mut self, ising: &IsingSpectrum, tau: f64) -> Result<()> {
        ising.check(self.n)?;
        self.apply_diagonal(&ising.zz, tau)
    }

    /// `D_x(τ) = R_y(π/2) D_z(τ) R_y(3π/2)`, applied as the `D_z` phases in the
    /// x basis.
    pub fn apply_dx(&mut self, ising: &IsingSpectrum, tau: f64) -> Result<()> {
        ising.check(self.n)?;
        if tau == 0.0 {
            return Ok(());
        }
        self.apply_hadamard_all();
        self.apply_diagonal(&ising.zz, tau)?;
        self.apply_hadamard_all();
        Ok(())
    }

    /// One circuit layer `D_x(τ′) R_x(ϑ) D_z(τ)`. `R_x` and `D_x` are both
    /// diagonal in the x basis, so they share a single fused phase pass.
    pub fn apply_layer(&mut self, ising: &IsingSpectrum, tau: f64, theta: f64, tau_prime: f64) -> Result<()> {
        ising.check(self.n)?;
        self.apply_diagonal(&ising.zz, tau)?;
        if theta == 0.0 && tau_prime == 0.0 {
            return Ok(());
        }
        self.apply_hadamard_all();
        let rot = magnetization_phases(self.n, theta);
        for (b, (a, &e)) in self.amps.iter_mut().zip(&ising.zz).enumerate() {
            let (s, c) = (tau_prime * e).sin_cos();
            *a *= Complex64::new(c, -s) * rot[b.count_ones() as usize];
        }
        self.apply_hadamard_all();
        Ok(())
    }

    /// `S(θ) = U_n ⋯ U_1`, layers applied in index order.
    pub fn apply_circuit(&mut self, ising: &IsingSpectrum, params: &ParamVector) -> Result<()> {
        for (tau, theta, tau_prime) in params.layers() {
            self.apply_layer(ising, tau, theta, tau_prime)?;
        }
        Ok(())
    }

    /// Bare pulse sequence: the preparation pulse followed by nine pulses per
    /// layer, with optional multiplicative errors on every duration and angle.
    /// See [`bare_pulses`].
    pub fn apply_bare_sequence(
        &mut self,
        ising: &IsingSpectrum,
        params: &ParamVector,
        multipliers: Option<&[f64]>,
    ) -> Result<()> {
        ising.check(self.n)?;
        let pulses = bare_pulses(params);
        if let Some(m) = multipliers {
            if m.len() != pulses.len() {
                return Err(invalid(format!(
                    "expected {} pulse multipliers, got {}",
                    pulses.len(),
                    m.len()
                )));
            }
        }
        let dressing = ising.dressing_energies();
        for (k, pulse) in pulses.iter().enumerate() {
            let f = multipliers.map_or(1.0, |m| m[k]);
            match *pulse {
                Pulse::Rotate(axis, angle) => self.apply_rotation(axis, angle * f),
                Pulse::Dress(t) => self.apply_diagonal(&dressing, t * f)?,
            }
        }
        Ok(())
    }

    /// `J₊|ψ⟩` with `J₊ = Σ_k s_k⁺`.
    pub fn raise(&self) -> Vec<Complex64> {
        raise_vec(self.n, &self.amps)
    }

    /// `J₋|ψ⟩`.
    pub fn lower(&self) -> Vec<Complex64> {
        lower_vec(self.n, &self.amps)
    }

    /// Exact collective moments of the state.
    pub fn collective_expectations(&self) -> CollectiveMoments {
        let n = self.n;
        let half = n as f64 / 2.0;
        let up = self.raise();
        let down = self.lower();
        let mut jp = Complex64::new(0.0, 0.0);
        let mut jp2 = Complex64::new(0.0, 0.0);
        let mut jz_jp = Complex64::new(0.0, 0.0);
        let mut jm_jp = 0.0;
        let mut jz = 0.0;
        let mut jz2 = 0.0;
        for b in 0..self.amps.len() {
            let m = b.count_ones() as f64 - half;
            let a = self.amps[b];
            let p = a.norm_sqr();
            jz += m * p;
            jz2 += m * m * p;
            jp += a.conj() * up[b];
            jz_jp += a.conj() * up[b] * m;
            jp2 += down[b].conj() * up[b];
            jm_jp += up[b].norm_sqr();
        }
        CollectiveMoments::from_ladder(n, jp, jp2, jz_jp, jm_jp, jz, jz2)
    }

    /// Squeezing parameter of the state.
    pub fn xi2_exact(&self) -> Result<f64> {
        self.collective_expectations().xi2()
    }

    /// Debug dump: little-endian interleaved `(re, im)` doubles.
    pub fn write_le_bytes<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }
}

pub(crate) fn raise_vec(n: usize, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for k in 0..n {
        let bit = 1usize << k;
        for b in 0..v.len() {
            if b & bit != 0 {
                out[b] += v[b ^ bit];
            }
        }
    }
    out
}

pub(crate) fn lower_vec(n: usize, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for k in 0..n {
        let bit = 1usize << k;
        for b in 0..v.len() {
            if b & bit == 0 {
                out[b] += v[b | bit];
            }
        }
    }
    out
}

/// `exp(−iφ m)` for `m = k − N/2`, `k = 0..=N` up-spins.
fn magnetization_phases(n: usize, phi: f64) -> Vec<Complex64> {
    (0..=n)
        .map(|k| {
            let m = k as f64 - n as f64 / 2.0;
            Complex64::from_polar(1.0, -phi * m)
        })
        .collect()
}

/// Diagonal energies of the dressing Hamiltonian in the z basis.
#[derive(Debug, Clone)]
pub struct IsingSpectrum {
    n: usize,
    /// `Σ_{i<j} V_ij z_i z_j / 4` per basis state.
    pub zz: Vec<f64>,
    /// `Σ_i δ_i z_i / 2` per basis state.
    pub onsite: Vec<f64>,
}

impl IsingSpectrum {
    pub fn new(v: &InteractionMatrix) -> Result<Self> {
        let n = v.n();
        check_capacity(n)?;
        let dim = 1usize << n;
        let mut zz = vec![0.0; dim];
        let mut onsite = vec![0.0; dim];
        // All-down reference: every pair aligned, every spin at z = −1.
        let mut e0 = 0.0;
        let mut d0 = 0.0;
        for i in 0..n {
            d0 -= v.onsite[i] / 2.0;
            for j in 0..i {
                e0 += v.get(i, j) / 4.0;
            }
        }
        zz[0] = e0;
        onsite[0] = d0;
        for b in 1..dim {
            let k = usize::BITS - 1 - b.leading_zeros();
            let k = k as usize;
            let prev = b ^ (1 << k);
            // Flipping spin k up changes each bond energy V_kj z_j /4 by V_kj z_j / 2.
            let mut delta = 0.0;
            for j in 0..n {
                if j != k {
                    let zj = if prev >> j & 1 == 1 { 1.0 } else { -1.0 };
                    delta += v.get(k, j) * zj / 2.0;
                }
            }
            zz[b] = zz[prev] + delta;
            onsite[b] = onsite[prev] + v.onsite[k];
        }
        Ok(IsingSpectrum { n, zz, onsite })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: n,
            });
        }
        Ok(())
    }

    /// Energies of the full dressing Hamiltonian `H_D` including light shifts.
    pub fn dressing_energies(&self) -> Vec<f64> {
        self.zz.iter().zip(&self.onsite).map(|(a, b)| a + b).collect()
    }
}

/// One bare control operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pulse {
    Rotate(Axis, f64),
    /// Free evolution under `H_D` for the given time.
    Dress(f64),
}

/// Angle of the preparation pulse taking `|↓_z⟩` to `|↑_x⟩` under
/// `R_y(φ) = exp(−iφ J_y)`.
pub const PREPARATION_ANGLE: f64 = -PI / 2.0;

/// The `9n + 1` bare pulses realizing `S(θ) R_y` from `|↓_z⟩^⊗N`.
///
/// Per layer, in time order: `H_D(τ/2)`, `R_x(π)`, `H_D(τ/2)`, `R_x(ϑ + π)`,
/// `R_y(π/2)`, `H_D(τ′/2)`, `R_y(π)`, `H_D(τ′/2)`, `R_y(π/2)`. The first half
/// is a spin echo whose closing `R_x(π)` is merged into the `R_x(ϑ)` pulse;
/// the second half is the echo conjugated into the x basis.
pub fn bare_pulses(params: &ParamVector) -> Vec<Pulse> {
    let mut out = Vec::with_capacity(9 * params.n_layers() + 1);
    out.push(Pulse::Rotate(Axis::Y, PREPARATION_ANGLE));
    for (tau, theta, tau_prime) in params.layers() {
        out.extend([
            Pulse::Dress(tau / 2.0),
            Pulse::Rotate(Axis::X, PI),
            Pulse::Dress(tau / 2.0),
            Pulse::Rotate(Axis::X, theta + PI),
            Pulse::Rotate(Axis::Y, PI / 2.0),
            Pulse::Dress(tau_prime / 2.0),
            Pulse::Rotate(Axis::Y, PI),
            Pulse::Dress(tau_prime / 2.0),
            Pulse::Rotate(Axis::Y, PI / 2.0),
        ]);
    }
    out
}

/// Circuit parameters `θ = (τ₁, ϑ₁, τ₁′, …, τ_n, ϑ_n, τ_n′)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_multiple_of(3) {
            return Err(invalid(format!(
                "parameter vector length {} is not a multiple of 3",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("parameter vector has non-finite entries"));
        }
        Ok(ParamVector(values))
    }

    pub fn zeros(n_layers: usize) -> Self {
        ParamVector(vec![0.0; 3 * n_layers])
    }

    pub fn n_layers(&self) -> usize {
        self.0.len() / 3
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn layers(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.0.chunks_exact(3).map(|c| (c[0], c[1], c[2]))
    }

    /// Append identity layers up to `n_layers`.
    pub fn padded(&self, n_layers: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(3 * n_layers.max(self.n_layers()), 0.0);
        ParamVector(v)
    }

    /// Sum of interaction times `Σ (τ_i + τ_i′)`.
    pub fn total_interaction_time(&self) -> f64 {
        self.layers().map(|(t, _, tp)| t + tp).sum()
    }
}

/// Box constraints on a parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(invalid("bounds must be non-empty and of equal length"));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(invalid(format!("bad bound pair [{l}, {u}]")));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// `τ, τ′ ∈ [0, tau_max]`, `ϑ ∈ [0, 2π]` for every layer.
    pub fn circuit(n_layers: usize, tau_max: f64) -> Self {
        let mut lower = Vec::with_capacity(3 * n_layers);
        let mut upper = Vec::with_capacity(3 * n_layers);
        for _ in 0..n_layers {
            lower.extend([0.0, 0.0, 0.0]);
            upper.extend([tau_max, 2.0 * PI, tau_max]);
        }
        Bounds { lower, upper }
    }

    /// Default circuit box with `τ_max = 10 / V₀`.
    pub fn default_circuit(n_layers: usize, v0: f64) -> Self {
        Self::circuit(n_layers, 10.0 / v0)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (v - l) / (u - l))
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, up))| l + v * (up - l))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, build_square, interaction_matrix};
    use proptest::prelude::*;

    fn rand_state(n: usize, seed: u64) -> StateVector {
        use rand::Rng;
        let mut rng = crate::rng::root(seed);
        let amps = (0..1 << n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut s = StateVector::from_amplitudes(n, amps).unwrap();
        s.normalize();
        s
    }

    #[test]
    fn coherent_state_expectations() {
        let one = StateVector::coherent_x(1).unwrap();
        for a in one.amplitudes() {
            assert!((a.re - FRAC_1_SQRT_2).abs() < 1e-15);
        }
        for n in 1..=8 {
            let m = StateVector::coherent_x(n).unwrap().collective_expectations();
            let h = n as f64 / 2.0;
            assert!((m.mean[0] - h).abs() < 1e-12);
            assert!(m.mean[1].abs() < 1e-12 && m.mean[2].abs() < 1e-12);
            assert!((m.variance(1) - h / 2.0).abs() < 1e-12);
            assert!((m.variance(2) - h / 2.0).abs() < 1e-12);
            assert!((m.j_squared - h * (h + 1.0)).abs() < 1e-12);
            if n >= 1 {
                assert!((m.xi2().unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn preparation_pulse_reaches_coherent_x() {
        let mut s = StateVector::all_down(5).unwrap();
        s.apply_rotation(Axis::Y, PREPARATION_ANGLE);
        let target = StateVector::coherent_x(5).unwrap();
        assert!((s.fidelity(&target) - 1.0).abs() < 1e-12);
        assert!((s.inner(&target) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn full_turn_phase() {
        for n in 1..=4 {
            let s = rand_state(n, 3);
            let mut t = s.clone();
            t.apply_rotation(Axis::X, 2.0 * PI);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((s.inner(&t) - Complex64::new(sign, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn rz_rotates_bloch_vector() {
        let mut s = StateVector::coherent_x(4).unwrap();
        s.apply_rotation(Axis::Z, 0.7);
        let m = s.collective_expectations();
        assert!((m.mean[0] - 2.0 * 0.7f64.cos()).abs() < 1e-12);
        assert!((m.mean[1] - 2.0 * 0.7f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn ghz_variance() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 16];
        amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amps[15] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let s = StateVector::from_amplitudes(4, amps).unwrap();
        let m = s.collective_expectations();
        assert!((m.variance(2) - 4.0).abs() < 1e-12);
        assert!((m.qfi_max() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn dz_identity_and_dx_invariance() {
        let g = build_square(2, 3, 1.0).unwrap();
        let ising = IsingSpectrum::new(&interaction_matrix(&g, 1.5, 1.0).unwrap()).unwrap();
        let s = rand_state(6, 9);
        let mut t = s.clone();
        t.apply_dz(&ising, 0.0).unwrap();
        t.apply_dx(&ising, 0.0).unwrap();
        assert_eq!(s, t);

        let mut c = StateVector::coherent_x(6).unwrap();
        c.apply_dx(&ising, 1.3).unwrap();
        assert!((c.fidelity(&StateVector::coherent_x(6).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dz_commutes_with_rz() {
        let g = build_chain(5, 1.0).unwrap();
        let ising = IsingSpectrum::new(&interaction_matrix(&g, 2.0, 1.0).unwrap()).unwrap();
        let s = rand_state(5, 1);
        let mut a = s.clone();
        a.apply_dz(&ising, 0.8).unwrap();
        a.apply_rotation(Axis::Z, 1.1);
        let mut b = s;
        b.apply_rotation(Axis::Z, 1.1);
        b.apply_dz(&ising, 0.8).unwrap();
        assert!((a.inner(&b) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dx_matches_rotation_composition() {
        let g = build_chain(2, 1.0).unwrap();
        let ising = IsingSpectrum::new(&interaction_matrix(&g, 1.0, 1.0).unwrap()).unwrap();
        let s = rand_state(2, 5);
        let mut fused = s.clone();
        fused.apply_dx(&ising, 0.9).unwrap();
        let mut composed = s;
        composed.apply_rotation(Axis::Y, 1.5 * PI);
        composed.apply_dz(&ising, 0.9).unwrap();
        composed.apply_rotation(Axis::Y, 0.5 * PI);
        assert!((fused.fidelity(&composed) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fused_layer_matches_separate_gates() {
        let g = build_square(2, 2, 1.0).unwrap();
        let ising = IsingSpectrum::new(&interaction_matrix(&g, 1.2, 1.0).unwrap()).unwrap();
        let s = rand_state(4, 2);
        let mut fused = s.clone();
        fused.apply_layer(&ising, 0.4, 1.2, 0.7).unwrap();
        let mut sep = s;
        sep.apply_dz(&ising, 0.4).unwrap();
        sep.apply_rotation(Axis::X, 1.2);
        sep.apply_dx(&ising, 0.7).unwrap();
        assert!((fused.inner(&sep) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn layer_reductions() {
        let g = build_chain(4, 1.0).unwrap();
        let ising = IsingSpectrum::new(&interaction_matrix(&g, 1.5, 1.0).unwrap()).unwrap();
        let s = rand_state(4, 8);
        let mut id = s.clone();
        id.apply_layer(&ising, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(id, s);
        let mut shear = s.clone();
        shear.apply_layer(&ising, 0.6, 0.0, 0.0).unwrap();
        let mut dz = s.clone();
        dz.apply_dz(&ising, 0.6).unwrap();
        assert_eq!(shear, dz);
        let mut empty = s.clone();
        empty.apply_circuit(&ising, &ParamVector::zeros(0)).unwrap();
        assert_eq!(empty, s);
    }

    #[test]
    fn dimension_mismatch() {
        let ising = IsingSpectrum::new(&InteractionMatrix::uniform(3, 1.0).unwrap()).unwrap();
        let mut s = StateVector::coherent_x(4).unwrap();
        assert!(matches!(s.apply_dz(&ising, 1.0), Err(Error::DimensionMismatch { .. })));
        assert!(s.apply_dx(&ising, 1.0).is_err());
    }

    #[test]
    fn capacity_is_enforced() {
        assert!(matches!(StateVector::coherent_x(31), Err(Error::Capacity { .. })));
        assert!(StateVector::coherent_x(0).is_err());
    }

    #[test]
    fn ising_spectrum_matches_direct_sum() {
        let g = build_square(2, 3, 1.0).unwrap();
        let v = interaction_matrix(&g, 1.3, 1.0)
            .unwrap()
            .with_onsite(vec![0.1, -0.2, 0.3, 0.05, -0.4, 0.25])
            .unwrap();
        let ising = IsingSpectrum::new(&v).unwrap();
        for b in 0..64usize {
            let z = |k: usize| if b >> k & 1 == 1 { 1.0 } else { -1.0 };
            let mut e = 0.0;
            let mut d = 0.0;
            for i in 0..6 {
                d += v.onsite[i] * z(i) / 2.0;
                for j in 0..i {
                    e += v.get(i, j) * z(i) * z(j) / 4.0;
                }
            }
            assert!((ising.zz[b] - e).abs() < 1e-12);
            assert!((ising.onsite[b] - d).abs() < 1e-12);
        }
    }

    #[test]
    fn bare_pulse_count() {
        for n in 0..5 {
            assert_eq!(bare_pulses(&ParamVector::zeros(n)).len(), 9 * n + 1);
        }
    }

    #[test]
    fn bare_sequence_rejects_wrong_multiplier_length() {
        let ising = IsingSpectrum::new(&InteractionMatrix::uniform(3, 1.0).unwrap()).unwrap();
        let mut s = StateVector::all_down(3).unwrap();
        let p = ParamVector::new(vec![0.1, 0.2, 0.3]).unwrap();
        assert!(s.apply_bare_sequence(&ising, &p, Some(&[1.0; 9])).is_err());
    }

    #[test]
    fn amplitude_dump_layout() {
        let s = StateVector::coherent_x(1).unwrap();
        let mut buf = Vec::new();
        s.write_le_bytes(&mut buf).unwrap();
        assert_eq!(buf.len(), 32);
        assert_eq!(f64::from_le_bytes(buf[0..8].try_into().unwrap()), s.amplitudes()[0].re);
        assert!((s.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(f64::from_le_bytes(buf[8..16].try_into().unwrap()), 0.0);
    }

    #[test]
    fn param_vector_helpers() {
        assert!(ParamVector::new(vec![1.0, 2.0]).is_err());
        let p = ParamVector::new(vec![0.5, 1.0, 0.25]).unwrap();
        assert_eq!(p.padded(3).n_layers(), 3);
        assert_eq!(p.padded(3).as_slice()[3..], [0.0; 6]);
        assert!((p.total_interaction_time() - 0.75).abs() < 1e-15);
        assert_eq!(ParamVector::zeros(4).total_interaction_time(), 0.0);
        let b = Bounds::default_circuit(2, 1.0);
        assert!(b.contains(&[1.0, 1.0, 1.0, 0.0, 6.0, 10.0]));
        assert!(!b.contains(&[1.0, 7.0, 1.0, 0.0, 0.0, 0.0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gates_preserve_norm_and_total_spin(seed in 0u64..1000, angle in -7.0f64..7.0, tau in 0.0f64..5.0) {
            let g = build_square(2, 2, 1.0).unwrap();
            let ising = IsingSpectrum::new(&interaction_matrix(&g, 1.4, 1.0).unwrap()).unwrap();
            let mut s = rand_state(4, seed);
            let j2 = s.collective_expectations().j_squared;
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                s.apply_rotation(axis, angle);
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
                prop_assert!((s.collective_expectations().j_squared - j2).abs() < 1e-10);
            }
            s.apply_dz(&ising, tau).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            s.apply_dx(&ising, tau).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn circuit_keeps_bloch_vector_on_x(seed in 0u64..1000) {
            use rand::Rng;
            let g = build_chain(5, 1.0).unwrap();
            let ising = IsingSpectrum::new(&interaction_matrix(&g, 1.7, 1.0).unwrap()).unwrap();
            let mut rng = crate::rng::root(seed);
            let theta: Vec<f64> = (0..9).map(|k| if k % 3 == 1 { rng.random::<f64>() * 2.0 * PI } else { rng.random::<f64>() * 4.0 }).collect();
            let mut s = StateVector::coherent_x(5).unwrap();
            s.apply_circuit(&ising, &ParamVector::new(theta).unwrap()).unwrap();
            let m = s.collective_expectations();
            prop_assert!(m.mean[1].abs() < 1e-10 && m.mean[2].abs() < 1e-10);
        }
    }
}
