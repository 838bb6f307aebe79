//! Diagnostics on full-register states: rotation-invariant squeezing, QFI,
//! total-angular-momentum shells and per-shell Husimi distributions.
//!
//! Shells are labelled by `2j` so that half-integer `j` stays exact. The
//! shell projector is the Lagrange polynomial in `J²`, applied matrix-free
//! through `J² = J₋J₊ + J_z(J_z + 1)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::dicke::sqrt_binomial;
use crate::error::{invalid, Error, Result};
use crate::statevec::{lower_vec, raise_vec, Axis, StateVector};

/// Shells `2j = N, N−2, …` down to 0 or 1.
pub fn shell_labels(n: usize) -> Vec<usize> {
    (0..=n / 2).map(|k| n - 2 * k).collect()
}

fn check_shell(n: usize, two_j: usize) -> Result<()> {
    if two_j > n || !(n - two_j).is_multiple_of(2) {
        return Err(invalid(format!("2j = {two_j} is not a shell of N = {n}")));
    }
    Ok(())
}

fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(acc)
}

/// Multiplicity `d_j^N = N!(2j+1) / ((N/2−j)! (N/2+j+1)!)` of shell `j`.
pub fn degeneracy(n: usize, two_j: usize) -> Result<u128> {
    check_shell(n, two_j)?;
    let a = (n - two_j) / 2;
    let b = (n + two_j) / 2 + 1;
    let c = binomial_u128(n, a).ok_or_else(|| invalid(format!("degeneracy overflows for N = {n}")))?;
    // C(N, a) (2j+1) / (N/2 + j + 1) is an integer.
    Ok(c.checked_mul(two_j as u128 + 1)
        .ok_or_else(|| invalid(format!("degeneracy overflows for N = {n}")))?
        / b as u128)
}

fn eigenvalue(two_j: usize) -> f64 {
    let j = two_j as f64 / 2.0;
    j * (j + 1.0)
}

/// `J²|v⟩`.
pub fn apply_j_squared(n: usize, v: &[Complex64]) -> Vec<Complex64> {
    let up = raise_vec(n, v);
    let mut out = lower_vec(n, &up);
    let half = n as f64 / 2.0;
    for (b, o) in out.iter_mut().enumerate() {
        let m = b.count_ones() as f64 - half;
        *o += v[b] * (m * (m + 1.0));
    }
    out
}

/// `Π_j |v⟩` via `Π_{k≠j} (J² − k(k+1)) / (j(j+1) − k(k+1))`.
pub fn project_shell(n: usize, two_j: usize, v: &[Complex64]) -> Result<Vec<Complex64>> {
    check_shell(n, two_j)?;
    let target = eigenvalue(two_j);
    let mut w = v.to_vec();
    for other in shell_labels(n) {
        if other == two_j {
            continue;
        }
        let lk = eigenvalue(other);
        let denom = target - lk;
        let jw = apply_j_squared(n, &w);
        for (x, y) in w.iter_mut().zip(jw) {
            *x = (y - *x * lk) / denom;
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSpectrum {
    pub n_atoms: usize,
    /// `2j` for each shell, outermost first.
    pub two_j: Vec<usize>,
    pub populations: Vec<f64>,
    pub degeneracies: Vec<u128>,
}

impl ShellSpectrum {
    pub fn total(&self) -> f64 {
        self.populations.iter().sum()
    }

    pub fn population(&self, two_j: usize) -> Option<f64> {
        self.two_j
            .iter()
            .position(|&t| t == two_j)
            .map(|i| self.populations[i])
    }

    /// Population of the permutation-symmetric shell `j = N/2`.
    pub fn outer(&self) -> f64 {
        self.populations[0]
    }
}

/// Populations `p_j = ⟨Ψ|Π_j|Ψ⟩` of every shell. Values below zero by
/// round-off are clipped.
pub fn shell_populations(state: &StateVector) -> Result<ShellSpectrum> {
    shell_spectrum(state, false)
}

/// As [`shell_populations`], additionally checking `‖Π_j²Ψ − Π_jΨ‖ < 10⁻⁶`
/// for every shell.
pub fn shell_populations_checked(state: &StateVector) -> Result<ShellSpectrum> {
    shell_spectrum(state, true)
}

fn shell_spectrum(state: &StateVector, check: bool) -> Result<ShellSpectrum> {
    let n = state.n_atoms();
    let labels = shell_labels(n);
    let mut populations = Vec::with_capacity(labels.len());
    let mut degeneracies = Vec::with_capacity(labels.len());
    for &two_j in &labels {
        let p = project_shell(n, two_j, state.amplitudes())?;
        if check {
            let pp = project_shell(n, two_j, &p)?;
            let err = pp
                .iter()
                .zip(&p)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if err >= 1e-6 || !err.is_finite() {
                return Err(Error::Numerical(format!(
                    "shell projector for 2j = {two_j} is not idempotent (residual {err:e})"
                )));
            }
        }
        let overlap: Complex64 = state
            .amplitudes()
            .iter()
            .zip(&p)
            .map(|(a, b)| a.conj() * b)
            .sum();
        populations.push(overlap.re.max(0.0));
        degeneracies.push(degeneracy(n, two_j)?);
    }
    Ok(ShellSpectrum {
        n_atoms: n,
        two_j: labels,
        populations,
        degeneracies,
    })
}

/// `p_{N/2}` from overlaps with the `N + 1` symmetric Dicke states; O(2^N).
pub fn symmetric_population(state: &StateVector) -> f64 {
    let n = state.n_atoms();
    let mut sums = vec![Complex64::new(0.0, 0.0); n + 1];
    for (b, a) in state.amplitudes().iter().enumerate() {
        sums[b.count_ones() as usize] += a;
    }
    sums.iter()
        .enumerate()
        .map(|(k, s)| s.norm_sqr() / sqrt_binomial(n, k).powi(2))
        .sum()
}

/// `F^Q_max = 4 λ_max(Cov)`.
pub fn qfi_max(state: &StateVector) -> f64 {
    state.collective_expectations().qfi_max()
}

/// Squeezing with the perpendicular plane taken relative to the actual Bloch
/// vector, whatever its direction.
pub fn xi2_invariant(state: &StateVector) -> Result<f64> {
    state.collective_expectations().xi2()
}

/// Quadrature grid on the unit sphere; `theta` is the polar angle from `+z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    /// Solid-angle weight per point; the weights sum to `4π`.
    pub weights: Vec<f64>,
}

impl SphereGrid {
    /// Cell-centred grid, uniform in `cos θ` and `φ`.
    pub fn uniform(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(invalid("sphere grid needs at least one cell per axis"));
        }
        let du = 2.0 / n_theta as f64;
        let nodes: Vec<(f64, f64)> = (0..n_theta).map(|i| (1.0 - (i as f64 + 0.5) * du, du)).collect();
        Ok(Self::product(&nodes, n_phi))
    }

    /// Gauss–Legendre nodes in `cos θ`, uniform in `φ`. Exact for the
    /// band-limited Husimi functions of shells with `2j < 2 n_theta`.
    pub fn gauss_legendre(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(invalid("sphere grid needs at least one cell per axis"));
        }
        Ok(Self::product(&gauss_legendre_nodes(n_theta), n_phi))
    }

    fn product(nodes: &[(f64, f64)], n_phi: usize) -> Self {
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut g = SphereGrid {
            phi: Vec::new(),
            theta: Vec::new(),
            weights: Vec::new(),
        };
        for &(u, w) in nodes {
            let theta = u.clamp(-1.0, 1.0).acos();
            for k in 0..n_phi {
                g.phi.push((k as f64 + 0.5) * dphi);
                g.theta.push(theta);
                g.weights.push(w * dphi);
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

impl Default for SphereGrid {
    /// 64 × 128 cells uniform in `(cos θ, φ)`.
    fn default() -> Self {
        SphereGrid::uniform(64, 128).expect("non-empty default grid")
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Reduced shell density `ρ(m, m′) = Σ_α ⟨j,m,α|Ψ⟩⟨Ψ|j,m′,α⟩`, indexed by
/// `j + m`.
///
/// Obtained by projecting onto the shell, raising each `J_z = m` sector to the
/// top of the shell and taking overlaps there, which removes the need for an
/// explicit `α` basis.
pub fn shell_density(state: &StateVector, two_j: usize) -> Result<Vec<Vec<Complex64>>> {
    let n = state.n_atoms();
    let projected = project_shell(n, two_j, state.amplitudes())?;
    let top_count = (n + two_j) / 2;
    let top: Vec<usize> = (0..state.dim())
        .filter(|b| b.count_ones() as usize == top_count)
        .collect();
    let j = two_j as f64 / 2.0;
    let dim = two_j + 1;
    // u[k] holds the J_z = j sector of J₊^s Ψ_j / Λ, with k = j + m = 2j − s.
    let mut u = vec![Vec::new(); dim];
    let mut w = projected;
    let mut lambda = 1.0;
    for s in 0..dim {
        let k = two_j - s;
        u[k] = top.iter().map(|&b| w[b] / lambda).collect::<Vec<_>>();
        if s + 1 < dim {
            let m = j - s as f64 - 1.0;
            lambda *= (j * (j + 1.0) - m * (m + 1.0)).sqrt();
            w = raise_vec(n, &w);
        }
    }
    let mut rho = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            rho[a][b] = u[b].iter().zip(&u[a]).map(|(x, y)| x.conj() * y).sum();
        }
    }
    Ok(rho)
}

/// Wigner `d^j_{m j}(θ) = √C(2j, j+m) cos(θ/2)^{j+m} sin(θ/2)^{j−m}`, indexed by `j + m`.
fn highest_weight_column(two_j: usize, theta: f64) -> Vec<f64> {
    let (s, c) = (theta / 2.0).sin_cos();
    (0..=two_j)
        .map(|k| sqrt_binomial(two_j, k) * c.powi(k as i32) * s.powi((two_j - k) as i32))
        .collect()
}

/// `Q^j(φ, θ)` on every grid point: the weight of the shell-`j` part of the
/// state on the rotated highest-weight states `R_z(φ)R_y(θ)|j, j, α⟩`.
pub fn husimi(state: &StateVector, two_j: usize, grid: &SphereGrid) -> Result<Vec<f64>> {
    check_shell(state.n_atoms(), two_j)?;
    if grid.is_empty() {
        return Err(invalid("Husimi grid is empty"));
    }
    let rho = shell_density(state, two_j)?;
    let dim = two_j + 1;
    let j = two_j as f64 / 2.0;
    let mut out = Vec::with_capacity(grid.len());
    for p in 0..grid.len() {
        let d = highest_weight_column(two_j, grid.theta[p]);
        let coeff: Vec<Complex64> = (0..dim)
            .map(|k| Complex64::from_polar(d[k], -(k as f64 - j) * grid.phi[p]))
            .collect();
        let mut q = Complex64::new(0.0, 0.0);
        for a in 0..dim {
            for b in 0..dim {
                q += coeff[a].conj() * rho[a][b] * coeff[b];
            }
        }
        out.push(q.re.max(0.0));
    }
    Ok(out)
}

/// `Q^j` at one point by rotating the state with `R†(φ, θ)` and projecting
/// onto `J² = j(j+1)`, `J_z = j`. Slow; used to cross-check [`husimi`].
pub fn husimi_direct(state: &StateVector, two_j: usize, phi: f64, theta: f64) -> Result<f64> {
    let n = state.n_atoms();
    check_shell(n, two_j)?;
    let mut rotated = state.clone();
    rotated.apply_rotation(Axis::Z, -phi);
    rotated.apply_rotation(Axis::Y, -theta);
    let p = project_shell(n, two_j, rotated.amplitudes())?;
    let top = (n + two_j) / 2;
    Ok(p.iter()
        .enumerate()
        .filter(|(b, _)| b.count_ones() as usize == top)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// `(2j+1)/(4π) ∫ Q^j dΩ` on the grid; equals `p_j` up to quadrature error.
pub fn husimi_shell_weight(two_j: usize, grid: &SphereGrid, values: &[f64]) -> f64 {
    let integral: f64 = grid.weights.iter().zip(values).map(|(w, q)| w * q).sum();
    (two_j as f64 + 1.0) / (4.0 * std::f64::consts::PI) * integral
}

/// Husimi maps for every shell whose population exceeds `min_population`.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiMap {
    pub two_j: usize,
    pub population: f64,
    pub values: Vec<f64>,
}

pub fn husimi_maps(state: &StateVector, grid: &SphereGrid, min_population: f64) -> Result<Vec<HusimiMap>> {
    let spectrum = shell_populations(state)?;
    let mut out = Vec::new();
    for (&two_j, &p) in spectrum.two_j.iter().zip(&spectrum.populations) {
        if p > min_population {
            out.push(HusimiMap {
                two_j,
                population: p,
                values: husimi(state, two_j, grid)?,
            });
        }
    }
    Ok(out)
}
