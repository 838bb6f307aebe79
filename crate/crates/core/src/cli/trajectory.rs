//! Real-time diagnostics along an optimized circuit.

use std::io::Write;

use serde::Serialize;

use crate::analysis::{apply_j_squared, qfi_max, symmetric_population, xi2_invariant};
use crate::error::{invalid, Result};
use crate::statevec::{Axis, IsingSpectrum, ParamVector, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    /// Index of the interaction gate being applied: `2i` for `D_z` of layer
    /// `i`, `2i + 1` for its `D_x`.
    pub gate: usize,
    /// Cumulated interaction time in units of `1/V₀`.
    pub time: f64,
    /// `NaN` where the Bloch vector vanishes.
    pub xi2: f64,
    pub qfi_over_n: f64,
    pub j2: f64,
    pub p_symmetric: f64,
}

fn point(s: &StateVector, gate: usize, time: f64) -> TrajectoryPoint {
    let n = s.n_atoms();
    let j2v = apply_j_squared(n, s.amplitudes());
    let j2 = s.amplitudes().iter().zip(&j2v).map(|(a, b)| (a.conj() * b).re).sum();
    TrajectoryPoint {
        gate,
        time,
        xi2: xi2_invariant(s).unwrap_or(f64::NAN),
        qfi_over_n: qfi_max(s) / n as f64,
        j2,
        p_symmetric: symmetric_population(s),
    }
}

/// Evolve `|↑_x⟩^⊗N` through `theta`, splitting every interaction gate into
/// `samples_per_gate` equal steps and recording after each. Rotations act
/// instantly; the first point is the initial state at `t = 0`.
pub fn trajectory_scan(ising: &IsingSpectrum, theta: &ParamVector, samples_per_gate: usize) -> Result<Vec<TrajectoryPoint>> {
    if samples_per_gate == 0 {
        return Err(invalid("samples_per_gate must be at least 1"));
    }
    let k = samples_per_gate as f64;
    let mut s = StateVector::coherent_x(ising.n())?;
    let mut t = 0.0;
    let mut out = vec![point(&s, 0, 0.0)];
    for (i, (tau, rx, tau_prime)) in theta.layers().enumerate() {
        for _ in 0..samples_per_gate {
            s.apply_dz(ising, tau / k)?;
            t += tau / k;
            out.push(point(&s, 2 * i, t));
        }
        s.apply_rotation(Axis::X, rx);
        for _ in 0..samples_per_gate {
            s.apply_dx(ising, tau_prime / k)?;
            t += tau_prime / k;
            out.push(point(&s, 2 * i + 1, t));
        }
    }
    Ok(out)
}

pub fn write_series_csv<W: Write>(points: &[TrajectoryPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# squeezekit-schema v1")?;
    writeln!(w, "gate,time,xi2,qfi_over_n,j2,p_symmetric")?;
    for p in points {
        writeln!(w, "{},{},{},{},{},{}", p.gate, p.time, p.xi2, p.qfi_over_n, p.j2, p.p_symmetric)?;
    }
    Ok(())
}
