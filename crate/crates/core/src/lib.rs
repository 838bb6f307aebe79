//! Variational spin squeezing on programmable atom arrays.
//!
//! The crate simulates `N` two-level atoms in optical tweezers that interact
//! through a soft-core Rydberg-dressing potential, prepares squeezed states
//! with a layered circuit of global rotations and finite-range Ising gates,
//! and optimizes the circuit either from exact expectation values or from
//! simulated projective measurements with a finite shot budget.
//!
//! Module map:
//!
//! * [`lattice`] atom geometries, filling masks and the interaction matrix.
//! * [`statevec`] the exact `2^N` engine and the layered circuit.
//! * [`dicke`] the permutation-symmetric `(N+1)`-dimensional engine (OAT, TAT).
//! * [`analysis`] squeezing, QFI, angular-momentum shells and Husimi maps.
//! * [`measure`] shot sampling and the measured cost estimators.
//! * [`optimize`] DIRECT, Nelder–Mead, the feedback loop and exact optimization.
//! * [`noise`] control-noise and filling robustness studies.
//! * [`cli`] configuration-driven experiments used by the `squeezekit` binary.
//!
//! Units: `ħ = 1`, energies in units of the plateau `V₀`, times in `V₀⁻¹`,
//! lengths in units of the lattice constant `a`.

pub mod analysis;
pub mod cli;
pub mod dicke;
pub mod error;
pub mod lattice;
pub mod measure;
pub mod moments;
pub mod noise;
pub mod optimize;
pub mod rng;
pub mod statevec;

pub use error::{Error, Result};

pub use num_complex::Complex64;
