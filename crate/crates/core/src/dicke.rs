//! Permutation-symmetric engine on the outer shell `j = N/2`.
//!
//! Basis index `k = 0..=N` labels `|N/2, m⟩` with `m = k − N/2`, i.e. `k` is the
//! number of up spins. Infinite-range dynamics (OAT, TAT, global rotations)
//! never leave this shell, so `N` up to several hundred is cheap.
//!
//! An all-to-all `D_z(τ)` with coupling `V₀` equals `exp(−i (τV₀/2) J_z²)` up to
//! a global phase, because `Σ_{i<j} s_i^z s_j^z = (J_z² − N/4)/2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::moments::CollectiveMoments;
use crate::statevec::{check_capacity, Axis, StateVector};

/// Twisting strength of `exp(−iχ J_z²)` produced by an all-to-all `D_z(τ)`.
pub fn oat_time_from_dz(tau: f64, v0: f64) -> f64 {
    tau * v0 / 2.0
}

/// `ξ²_lim = 2/(N+2)`, the smallest squeezing reachable by `N` spins.
pub fn squeezing_limit(n: usize) -> f64 {
    2.0 / (n as f64 + 2.0)
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `√C(n, k)` without overflow.
pub(crate) fn sqrt_binomial(n: usize, k: usize) -> f64 {
    (0.5 * ln_binomial(n, k)).exp()
}

/// Matrix element `⟨k+1|J₊|k⟩ = √((k+1)(N−k))`.
fn raise_coeff(n: usize, k: usize) -> f64 {
    (((k + 1) * (n - k)) as f64).sqrt()
}

/// State on the symmetric shell.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl DickeVector {
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n == 0 || amps.len() != n + 1 {
            return Err(invalid(format!(
                "Dicke vector for N = {n} needs {} amplitudes, got {}",
                n + 1,
                amps.len()
            )));
        }
        Ok(DickeVector { n, amps })
    }

    /// `|N/2, m⟩`.
    pub fn basis(n: usize, m2: i64) -> Result<Self> {
        let k = (m2 + n as i64) / 2;
        if n == 0 || (m2 + n as i64) % 2 != 0 || k < 0 || k > n as i64 {
            return Err(invalid(format!("2m = {m2} is not a level of N = {n}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
        amps[k as usize] = Complex64::new(1.0, 0.0);
        Ok(DickeVector { n, amps })
    }

    /// `|↑_x⟩^⊗N` expanded on the shell: `c_k = √(C(N,k) / 2^N)`.
    pub fn coherent_x(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("need at least one atom"));
        }
        let ln2 = std::f64::consts::LN_2;
        let amps = (0..=n)
            .map(|k| Complex64::new((0.5 * (ln_binomial(n, k) - n as f64 * ln2)).exp(), 0.0))
            .collect();
        Ok(DickeVector { n, amps })
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &DickeVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    fn m(&self, k: usize) -> f64 {
        k as f64 - self.n as f64 / 2.0
    }

    /// One-axis twisting `exp(−iτ J_z²)`.
    pub fn oat_evolve(&mut self, tau: f64) {
        for k in 0..=self.n {
            let m = self.m(k);
            self.amps[k] *= Complex64::from_polar(1.0, -tau * m * m);
        }
    }

    /// Two-axis twisting `exp(−iτ (J_z² − J_y²))`.
    pub fn tat_evolve(&mut self, tau: f64) {
        let eig = cached_eigen(self.n, Generator::TwoAxis);
        eig.evolve(&mut self.amps, tau);
    }

    pub fn apply_rotation(&mut self, axis: Axis, angle: f64) {
        match axis {
            Axis::Z => {
                for k in 0..=self.n {
                    let m = self.m(k);
                    self.amps[k] *= Complex64::from_polar(1.0, -angle * m);
                }
            }
            Axis::X => cached_eigen(self.n, Generator::Jx).evolve(&mut self.amps, angle),
            Axis::Y => {
                // R_y(φ) = R_z(π/2) R_x(φ) R_z(−π/2)
                let half = std::f64::consts::FRAC_PI_2;
                self.apply_rotation(Axis::Z, -half);
                self.apply_rotation(Axis::X, angle);
                self.apply_rotation(Axis::Z, half);
            }
        }
    }

    /// Layers `R_x(ϑ_i) exp(−iτ_i J_z²)` applied in order.
    pub fn simplified_circuit(&mut self, params: &[(f64, f64)]) {
        for &(tau, theta) in params {
            self.oat_evolve(tau);
            self.apply_rotation(Axis::X, theta);
        }
    }

    fn raise(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n + 1];
        for k in 0..self.n {
            out[k + 1] = self.amps[k] * raise_coeff(self.n, k);
        }
        out
    }

    fn lower(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n + 1];
        for k in 0..self.n {
            out[k] = self.amps[k + 1] * raise_coeff(self.n, k);
        }
        out
    }

    pub fn collective_expectations(&self) -> CollectiveMoments {
        let up = self.raise();
        let down = self.lower();
        let mut jp = Complex64::new(0.0, 0.0);
        let mut jp2 = Complex64::new(0.0, 0.0);
        let mut jz_jp = Complex64::new(0.0, 0.0);
        let (mut jm_jp, mut jz, mut jz2) = (0.0, 0.0, 0.0);
        for k in 0..=self.n {
            let m = self.m(k);
            let a = self.amps[k];
            let p = a.norm_sqr();
            jz += m * p;
            jz2 += m * m * p;
            jp += a.conj() * up[k];
            jz_jp += a.conj() * up[k] * m;
            jp2 += down[k].conj() * up[k];
            jm_jp += up[k].norm_sqr();
        }
        CollectiveMoments::from_ladder(self.n, jp, jp2, jz_jp, jm_jp, jz, jz2)
    }

    pub fn xi2(&self) -> Result<f64> {
        self.collective_expectations().xi2()
    }

    /// Expand into the full `2^N` register: `|N/2, m⟩` becomes the normalized
    /// symmetric sum of all basis states with `N/2 + m` up spins.
    pub fn embed_to_full(&self) -> Result<StateVector> {
        check_capacity(self.n)?;
        let weights: Vec<Complex64> = (0..=self.n)
            .map(|k| self.amps[k] / sqrt_binomial(self.n, k))
            .collect();
        let amps = (0..1usize << self.n)
            .map(|b| weights[b.count_ones() as usize])
            .collect();
        StateVector::from_amplitudes(self.n, amps)
    }
}

/// `(1/√2)|N/2,0⟩ + (1/2)(|N/2,+1⟩ + |N/2,−1⟩)`, squeezed along z with
/// `ξ² = 4/(N+2)` and Bloch vector along x.
pub fn trial_state(n: usize) -> Result<DickeVector> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid(format!("trial state needs even N ≥ 2, got {n}")));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
    let mid = n / 2;
    amps[mid] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[mid - 1] = Complex64::new(0.5, 0.0);
    amps[mid + 1] = Complex64::new(0.5, 0.0);
    DickeVector::from_amplitudes(n, amps)
}

/// Dense shell operators.
#[derive(Debug, Clone)]
pub struct DickeOperators {
    pub jz: DMatrix<Complex64>,
    pub jp: DMatrix<Complex64>,
    pub jm: DMatrix<Complex64>,
    pub jx: DMatrix<Complex64>,
    pub jy: DMatrix<Complex64>,
}

pub fn dicke_operators(n: usize) -> Result<DickeOperators> {
    if n == 0 {
        return Err(invalid("need at least one atom"));
    }
    let d = n + 1;
    let zero = Complex64::new(0.0, 0.0);
    let mut jz = DMatrix::from_element(d, d, zero);
    let mut jp = DMatrix::from_element(d, d, zero);
    for k in 0..d {
        jz[(k, k)] = Complex64::new(k as f64 - n as f64 / 2.0, 0.0);
        if k < n {
            jp[(k + 1, k)] = Complex64::new(raise_coeff(n, k), 0.0);
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * Complex64::new(0.5, 0.0);
    let jy = (&jp - &jm) * Complex64::new(0.0, -0.5);
    Ok(DickeOperators { jz, jp, jm, jx, jy })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Generator {
    Jx,
    TwoAxis,
}

/// Real symmetric generator `H = W Λ Wᵀ` used as `exp(−itH) = W e^{−itΛ} Wᵀ`.
struct Eigen {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Eigen {
    fn evolve(&self, amps: &mut [Complex64], t: f64) {
        let d = amps.len();
        let mut coeff = vec![Complex64::new(0.0, 0.0); d];
        for (j, c) in coeff.iter_mut().enumerate() {
            let col = self.vectors.column(j);
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..d {
                s += amps[k] * col[k];
            }
            *c = s * Complex64::from_polar(1.0, -t * self.values[j]);
        }
        for (k, a) in amps.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, c) in coeff.iter().enumerate() {
                s += *c * self.vectors[(k, j)];
            }
            *a = s;
        }
    }
}

fn build_eigen(n: usize, which: Generator) -> Eigen {
    let d = n + 1;
    // A = (J₊ − J₋)/2 is real antisymmetric and J_y = −iA, so J_y² = −A².
    let mut jx = DMatrix::<f64>::zeros(d, d);
    let mut a = DMatrix::<f64>::zeros(d, d);
    for k in 0..n {
        let c = raise_coeff(n, k) / 2.0;
        jx[(k + 1, k)] = c;
        jx[(k, k + 1)] = c;
        a[(k + 1, k)] = c;
        a[(k, k + 1)] = -c;
    }
    match which {
        Generator::Jx => {
            let e = SymmetricEigen::new(jx);
            // The spectrum of J_x is exactly {−N/2, …, N/2}.
            let values = e.eigenvalues.iter().map(|v| (2.0 * v).round() / 2.0).collect();
            Eigen {
                values,
                vectors: e.eigenvectors,
            }
        }
        Generator::TwoAxis => {
            let mut h = &a * &a;
            for k in 0..d {
                let m = k as f64 - n as f64 / 2.0;
                h[(k, k)] += m * m;
            }
            let h = (&h + h.transpose()) * 0.5;
            let e = SymmetricEigen::new(h);
            Eigen {
                values: e.eigenvalues.iter().copied().collect(),
                vectors: e.eigenvectors,
            }
        }
    }
}

fn cached_eigen(n: usize, which: Generator) -> Arc<Eigen> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, Generator), Arc<Eigen>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(e) = cache.lock().expect("eigen cache poisoned").get(&(n, which)) {
        return Arc::clone(e);
    }
    let e = Arc::new(build_eigen(n, which));
    cache
        .lock()
        .expect("eigen cache poisoned")
        .entry((n, which))
        .or_insert(e)
        .clone()
}

/// Result of the one-axis-twisting time scan.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OatOptimum {
    pub tau: f64,
    pub xi2: f64,
}

/// `ξ²` after `exp(−iτ J_z²)` on `|↑_x⟩^⊗N`.
pub fn oat_xi2(n: usize, tau: f64) -> Result<f64> {
    let mut s = DickeVector::coherent_x(n)?;
    s.oat_evolve(tau);
    s.xi2()
}

/// Minimize `f` on `[lo, hi]` from `points` samples, then golden-section
/// refine around the best sample.
pub fn scan_minimum<F>(mut f: F, lo: f64, hi: f64, points: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (lo, f(lo));
    for i in 1..points {
        let t = lo + i as f64 * step;
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t);
    if v < best.1 {
        (t, v)
    } else {
        best
    }
}

/// Optimal one-axis twisting for `N` spins from a `10⁵`-point scan over
/// `τ ∈ [0, π]` with golden-section refinement.
pub fn oat_optimal_xi2(n: usize) -> Result<OatOptimum> {
    if n < 2 {
        return Err(invalid("OAT squeezing needs N ≥ 2"));
    }
    let (tau, xi2) = scan_minimum(|t| oat_xi2(n, t).unwrap_or(f64::INFINITY), 0.0, std::f64::consts::PI, 100_000);
    Ok(OatOptimum { tau, xi2 })
}

/// Optimal two-axis twisting, scanned over `τ ∈ [0, t_max]`.
pub fn tat_optimal_xi2(n: usize, t_max: f64, points: usize) -> Result<OatOptimum> {
    if n < 2 {
        return Err(invalid("TAT squeezing needs N ≥ 2"));
    }
    let start = DickeVector::coherent_x(n)?;
    let (tau, xi2) = scan_minimum(
        |t| {
            let mut s = start.clone();
            s.tat_evolve(t);
            s.xi2().unwrap_or(f64::INFINITY)
        },
        0.0,
        t_max,
        points,
    );
    Ok(OatOptimum { tau, xi2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::InteractionMatrix;
    use crate::statevec::IsingSpectrum;

    /// Closed-form OAT squeezing for `exp(−iτ J_z²)` from `|↑_x⟩^⊗N`.
    fn oat_closed_form(n: usize, tau: f64) -> f64 {
        let nf = n as f64;
        let mu = 2.0 * tau;
        let a = 1.0 - mu.cos().powi(n as i32 - 2);
        let b = 4.0 * (mu / 2.0).sin() * (mu / 2.0).cos().powi(n as i32 - 2);
        let var_min = nf / 4.0 * (1.0 + (nf - 1.0) / 4.0 * (a - (a * a + b * b).sqrt()));
        let jx = nf / 2.0 * (mu / 2.0).cos().powi(n as i32 - 1);
        nf * var_min / (jx * jx)
    }

    #[test]
    fn operator_matrices() {
        let one = dicke_operators(1).unwrap();
        assert_eq!(one.jz[(0, 0)].re, -0.5);
        assert_eq!(one.jz[(1, 1)].re, 0.5);
        let two = dicke_operators(2).unwrap();
        // J₊|1,−1⟩ = √2 |1,0⟩
        assert!((two.jp[(1, 0)].re - 2f64.sqrt()).abs() < 1e-15);
        for n in [3, 6, 9] {
            let ops = dicke_operators(n).unwrap();
            let comm = &ops.jx * &ops.jy - &ops.jy * &ops.jx;
            let diff = comm - &ops.jz * Complex64::new(0.0, 1.0);
            assert!(diff.norm() < 1e-12);
        }
    }

    #[test]
    fn oat_matches_closed_form() {
        for n in [2, 5, 16, 40] {
            for tau in [0.01, 0.05, 0.2, 0.7] {
                let got = oat_xi2(n, tau).unwrap();
                assert!((got - oat_closed_form(n, tau)).abs() < 1e-9 * got.max(1.0), "n={n} tau={tau}");
            }
        }
    }

    #[test]
    fn oat_identity_and_period() {
        let s = DickeVector::coherent_x(8).unwrap();
        let mut t = s.clone();
        t.oat_evolve(0.0);
        assert_eq!(s, t);
        let mut a = s.clone();
        a.oat_evolve(0.3);
        let mut b = s.clone();
        b.oat_evolve(0.3 + 4.0 * std::f64::consts::PI);
        assert!((a.inner(&b).norm() - 1.0).abs() < 1e-12);
        let mut c = s;
        c.oat_evolve(0.3 + 2.0 * std::f64::consts::PI);
        assert!((a.inner(&c).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tat_matches_dense_exponential() {
        let n = 8;
        let ops = dicke_operators(n).unwrap();
        let h = &ops.jz * &ops.jz - &ops.jy * &ops.jy;
        let s = DickeVector::coherent_x(n).unwrap();
        let mut prev = 1.0;
        for tau in [0.02, 0.05, 0.08] {
            let u = (h.clone() * Complex64::new(0.0, -tau)).exp();
            let psi = nalgebra::DVector::from_vec(s.amplitudes().to_vec());
            let expect = u * psi;
            let mut got = s.clone();
            got.tat_evolve(tau);
            for k in 0..=n {
                assert!((got.amplitudes()[k] - expect[k]).norm() < 1e-10);
            }
            let xi2 = got.xi2().unwrap();
            assert!(xi2 < prev);
            prev = xi2;
            assert!(got.collective_expectations().mean[0] < n as f64 / 2.0);
        }
    }

    #[test]
    fn rotations_match_dense_exponential() {
        let n = 6;
        let ops = dicke_operators(n).unwrap();
        let mut s = DickeVector::coherent_x(n).unwrap();
        s.oat_evolve(0.4);
        for (axis, gen) in [(Axis::X, &ops.jx), (Axis::Y, &ops.jy), (Axis::Z, &ops.jz)] {
            let u = (gen.clone() * Complex64::new(0.0, -1.3)).exp();
            let expect = u * nalgebra::DVector::from_vec(s.amplitudes().to_vec());
            let mut got = s.clone();
            got.apply_rotation(axis, 1.3);
            for k in 0..=n {
                assert!((got.amplitudes()[k] - expect[k]).norm() < 1e-10, "{axis:?}");
            }
        }
    }

    #[test]
    fn trial_state_squeezing() {
        assert!((trial_state(4).unwrap().xi2().unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((trial_state(2).unwrap().xi2().unwrap() - 1.0).abs() < 1e-12);
        assert!((trial_state(10).unwrap().norm_sqr() - 1.0).abs() < 1e-15);
        assert!(trial_state(5).is_err());
        assert!(trial_state(0).is_err());
    }

    #[test]
    fn limits() {
        assert!((squeezing_limit(4) - 1.0 / 3.0).abs() < 1e-15);
        assert!((squeezing_limit(2) - 0.5).abs() < 1e-15);
        assert!((squeezing_limit(10_000) * 10_000.0 / 2.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn oat_optimum_small_n() {
        // Two spins: brute-force scan at step 1e-4 refined to 1e-8.
        let (mut best_t, mut best) = (0.0, f64::INFINITY);
        let mut t = 0.0;
        while t <= std::f64::consts::PI {
            let v = oat_closed_form(2, t);
            if v < best {
                best = v;
                best_t = t;
            }
            t += 1e-4;
        }
        let opt = oat_optimal_xi2(2).unwrap();
        assert!((opt.xi2 - best).abs() < 1e-7);
        assert!((opt.tau - best_t).abs() < 2e-4);
        for n in [2, 4, 16] {
            let o = oat_optimal_xi2(n).unwrap();
            assert!(o.tau > 0.0 && o.xi2 < 1.0);
        }
    }

    #[test]
    fn oat_scaling_trend() {
        let ns = [32usize, 64, 128, 256, 512];
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let (_, v) = scan_minimum(|t| oat_xi2(n, t).unwrap_or(f64::INFINITY), 0.0, 0.5, 5_000);
                ((n as f64).ln(), v.ln())
            })
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!(slope < -0.5 && slope > -0.8, "slope {slope}");
        let v100 = scan_minimum(|t| oat_xi2(100, t).unwrap(), 0.0, 0.5, 5_000).1;
        let trend = 100f64.powf(-2.0 / 3.0);
        assert!(v100 / trend < 2.0 && trend / v100 < 2.0);
    }

    #[test]
    fn embedding() {
        let top = DickeVector::basis(4, 4).unwrap().embed_to_full().unwrap();
        assert!((top.fidelity(&StateVector::all_up(4).unwrap()) - 1.0).abs() < 1e-15);
        let mid = DickeVector::basis(2, 0).unwrap().embed_to_full().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((mid.amplitudes()[1].re - h).abs() < 1e-15 && (mid.amplitudes()[2].re - h).abs() < 1e-15);
        let cx = DickeVector::coherent_x(7).unwrap().embed_to_full().unwrap();
        assert!((cx.fidelity(&StateVector::coherent_x(7).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn engines_agree_on_random_symmetric_states() {
        use rand::Rng;
        let mut rng = crate::rng::root(17);
        let n = 8;
        let amps: Vec<Complex64> = (0..=n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let d = DickeVector::from_amplitudes(n, amps.iter().map(|a| a / norm).collect()).unwrap();
        let a = d.collective_expectations();
        let b = d.embed_to_full().unwrap().collective_expectations();
        for i in 0..3 {
            assert!((a.mean[i] - b.mean[i]).abs() < 1e-10);
            for j in 0..3 {
                assert!((a.cov[i][j] - b.cov[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn uniform_dz_is_oat() {
        let n = 6;
        let v0 = 0.8;
        let ising = IsingSpectrum::new(&InteractionMatrix::uniform(n, v0).unwrap()).unwrap();
        let mut full = StateVector::coherent_x(n).unwrap();
        full.apply_dz(&ising, 0.37).unwrap();
        let mut sym = DickeVector::coherent_x(n).unwrap();
        sym.oat_evolve(oat_time_from_dz(0.37, v0));
        assert!((full.fidelity(&sym.embed_to_full().unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_spin_dz_matches_hand_calculation() {
        // Two spins, V = 1: D_z(τ) = exp(−iτ z₁z₂/4). From |↑_x↑_x⟩ the
        // aligned components pick up e^{−iτ/4} and the anti-aligned e^{+iτ/4}.
        let ising = IsingSpectrum::new(&InteractionMatrix::uniform(2, 1.0).unwrap()).unwrap();
        for tau in [0.1, 0.4, 1.0] {
            let mut s = StateVector::coherent_x(2).unwrap();
            s.apply_dz(&ising, tau).unwrap();
            let m = s.collective_expectations();
            let jx = (tau / 2.0).cos();
            assert!((m.mean[0] - jx).abs() < 1e-12);
            // ⟨J_z²⟩ = ⟨J_y²⟩ = 1/2 and ⟨{J_y,J_z}⟩/2 = sin(τ/2)/2.
            assert!((m.cov[2][2] - 0.5).abs() < 1e-12);
            assert!((m.cov[1][1] - 0.5).abs() < 1e-12);
            assert!((m.cov[1][2] - (tau / 2.0).sin() / 2.0).abs() < 1e-12);
            let expect = 2.0 * (0.5 - (tau / 2.0).sin().abs() / 2.0) / (jx * jx);
            assert!((s.xi2_exact().unwrap() - expect).abs() < 1e-12);
        }
    }
}
