//! First and second moments of the collective spin `J = Σ s_i`.
//!
//! Both engines reduce a state to these numbers; squeezing and the QFI bound
//! are functions of the moments alone.

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest Bloch-vector length for which squeezing is defined.
pub const MIN_BLOCH_LENGTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollectiveMoments {
    pub n_atoms: usize,
    /// `⟨J_x⟩, ⟨J_y⟩, ⟨J_z⟩`.
    pub mean: [f64; 3],
    /// Symmetrized covariance `⟨(J_a J_b + J_b J_a)/2⟩ − ⟨J_a⟩⟨J_b⟩`.
    pub cov: [[f64; 3]; 3],
    pub j_squared: f64,
}

impl CollectiveMoments {
    /// Assemble the moments from ladder-operator expectations.
    ///
    /// `jp = ⟨J₊⟩`, `jp2 = ⟨J₊²⟩`, `jz_jp = ⟨J_z J₊⟩`, `jm_jp = ⟨J₋J₊⟩`,
    /// `jz = ⟨J_z⟩`, `jz2 = ⟨J_z²⟩`.
    pub(crate) fn from_ladder(
        n_atoms: usize,
        jp: Complex64,
        jp2: Complex64,
        jz_jp: Complex64,
        jm_jp: f64,
        jz: f64,
        jz2: f64,
    ) -> Self {
        let jp_jm = jm_jp + 2.0 * jz;
        let jx = jp.re;
        let jy = jp.im;
        let jx2 = (2.0 * jp2.re + jp_jm + jm_jp) / 4.0;
        let jy2 = (-2.0 * jp2.re + jp_jm + jm_jp) / 4.0;
        let sym_xy = jp2.im / 2.0;
        let w = 2.0 * jz_jp - jp;
        let sym_xz = w.re / 2.0;
        let sym_yz = w.im / 2.0;
        let mean = [jx, jy, jz];
        let second = [[jx2, sym_xy, sym_xz], [sym_xy, jy2, sym_yz], [sym_xz, sym_yz, jz2]];
        let mut cov = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                cov[a][b] = second[a][b] - mean[a] * mean[b];
            }
        }
        CollectiveMoments {
            n_atoms,
            mean,
            cov,
            j_squared: jx2 + jy2 + jz2,
        }
    }

    pub fn bloch_length(&self) -> f64 {
        self.mean.iter().map(|m| m * m).sum::<f64>().sqrt()
    }

    pub fn variance(&self, axis: usize) -> f64 {
        self.cov[axis][axis]
    }

    /// Variance of `n·J` along a (not necessarily normalized) direction.
    pub fn variance_along(&self, n: [f64; 3]) -> f64 {
        let norm2: f64 = n.iter().map(|x| x * x).sum();
        let mut v = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                v += n[a] * self.cov[a][b] * n[b];
            }
        }
        v / norm2
    }

    /// Smallest variance over unit directions orthogonal to the Bloch vector,
    /// from the closed-form eigenvalue of the 2×2 covariance block.
    pub fn min_perpendicular_variance(&self) -> Result<f64> {
        let len = self.bloch_length();
        if len < MIN_BLOCH_LENGTH {
            return Err(Error::DegenerateBlochVector(len));
        }
        let n = self.mean.map(|m| m / len);
        let (e1, e2) = orthonormal_complement(n);
        let a = self.bilinear(e1, e1);
        let d = self.bilinear(e2, e2);
        let b = self.bilinear(e1, e2);
        let half = 0.5 * (a - d);
        Ok(0.5 * (a + d) - (half * half + b * b).sqrt())
    }

    fn bilinear(&self, u: [f64; 3], v: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += u[a] * self.cov[a][b] * v[b];
            }
        }
        s
    }

    /// Wineland squeezing `N · min Var_⊥ / |⟨J⟩|²`.
    pub fn xi2(&self) -> Result<f64> {
        let v = self.min_perpendicular_variance()?;
        let len = self.bloch_length();
        Ok(self.n_atoms as f64 * v / (len * len))
    }

    /// The measured cost `N ⟨J_y²⟩ / ⟨J_x⟩²` evaluated exactly. Equals
    /// [`Self::xi2`] when the Bloch vector lies along `x` and the squeezed
    /// quadrature along `y`.
    pub fn xi2_along_y(&self) -> Result<f64> {
        let jx = self.mean[0];
        if jx.abs() < MIN_BLOCH_LENGTH {
            return Err(Error::DegenerateBlochVector(jx.abs()));
        }
        let jy2 = self.cov[1][1] + self.mean[1] * self.mean[1];
        Ok(self.n_atoms as f64 * jy2 / (jx * jx))
    }

    /// `4 λ_max(Cov)`: the QFI maximized over rotation generators `n·J`.
    pub fn qfi_max(&self) -> f64 {
        let m = Matrix3::from_fn(|a, b| self.cov[a][b]);
        let eig = SymmetricEigen::new(m);
        4.0 * eig.eigenvalues.max()
    }
}

fn orthonormal_complement(n: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // Seed with the coordinate axis least aligned with n.
    let mut k = 0;
    for a in 1..3 {
        if n[a].abs() < n[k].abs() {
            k = a;
        }
    }
    let mut t = [0.0; 3];
    t[k] = 1.0;
    let dot = n[k];
    let mut e1 = [t[0] - dot * n[0], t[1] - dot * n[1], t[2] - dot * n[2]];
    let l = e1.iter().map(|x| x * x).sum::<f64>().sqrt();
    e1 = e1.map(|x| x / l);
    let e2 = [
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ];
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coherent(n: usize) -> CollectiveMoments {
        let q = n as f64 / 4.0;
        CollectiveMoments {
            n_atoms: n,
            mean: [n as f64 / 2.0, 0.0, 0.0],
            cov: [[0.0, 0.0, 0.0], [0.0, q, 0.0], [0.0, 0.0, q]],
            j_squared: (n as f64 / 2.0) * (n as f64 / 2.0 + 1.0),
        }
    }

    #[test]
    fn coherent_state_values() {
        let m = coherent(10);
        assert!((m.xi2().unwrap() - 1.0).abs() < 1e-15);
        assert!((m.qfi_max() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn perpendicular_block_picks_minimum_of_tilted_ellipse() {
        let mut m = coherent(4);
        // Rotate a (0.25, 2.0) ellipse by 30 degrees inside the y-z plane.
        let (s, c) = (30f64.to_radians().sin(), 30f64.to_radians().cos());
        let (a, b) = (0.25, 2.0);
        m.cov[1][1] = c * c * a + s * s * b;
        m.cov[2][2] = s * s * a + c * c * b;
        m.cov[1][2] = c * s * (a - b);
        m.cov[2][1] = m.cov[1][2];
        assert!((m.min_perpendicular_variance().unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_bloch_vector() {
        let mut m = coherent(4);
        m.mean = [0.0; 3];
        assert!(matches!(m.xi2(), Err(Error::DegenerateBlochVector(_))));
    }
}
