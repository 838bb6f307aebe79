//! Atom geometries and the Rydberg-dressed interaction matrix.
//!
//! Positions are stored in physical units (multiples of the lattice constant
//! `a`); all interaction calculations work in units of `a`, so the soft-core
//! radius is always passed as `R_C / a`. Boundaries are open. Only filled
//! sites enter the spin register.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Chain,
    Square,
    Triangular,
    Custom,
}

/// A set of tweezer sites and which of them hold an atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub lattice: LatticeKind,
    pub a: f64,
    pub positions: Vec<[f64; 2]>,
    pub filled: Vec<bool>,
}

impl Geometry {
    /// Build a custom geometry, validating the invariants.
    pub fn custom(a: f64, positions: Vec<[f64; 2]>, filled: Vec<bool>) -> Result<Self> {
        let g = Geometry {
            lattice: LatticeKind::Custom,
            a,
            positions,
            filled,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(invalid(format!("lattice constant must be positive, got {}", self.a)));
        }
        if self.positions.len() != self.filled.len() {
            return Err(invalid("positions and filled mask differ in length"));
        }
        if self.positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        if self.count() == 0 {
            return Err(invalid("geometry has no filled sites"));
        }
        let pts = self.filled_positions();
        for i in 0..pts.len() {
            for j in 0..i {
                if pts[i] == pts[j] {
                    return Err(invalid(format!("filled sites {j} and {i} coincide")));
                }
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    /// Number of filled sites, i.e. the number of atoms `N`.
    pub fn count(&self) -> usize {
        self.filled.iter().filter(|&&f| f).count()
    }

    pub fn filled_positions(&self) -> Vec<[f64; 2]> {
        self.positions
            .iter()
            .zip(&self.filled)
            .filter_map(|(p, &f)| f.then_some(*p))
            .collect()
    }

    /// Largest distance between two filled atoms, in units of `a`.
    pub fn diameter(&self) -> f64 {
        let pts = self.filled_positions();
        let mut best = 0.0f64;
        for i in 0..pts.len() {
            for j in 0..i {
                best = best.max(distance(pts[i], pts[j]) / self.a);
            }
        }
        best
    }
}

fn distance(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn check_spacing(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("lattice constant must be positive, got {a}")))
    }
}

/// Equally spaced 1D chain along x.
pub fn build_chain(n_sites: usize, a: f64) -> Result<Geometry> {
    if n_sites == 0 {
        return Err(invalid("chain needs at least one site"));
    }
    check_spacing(a)?;
    Ok(Geometry {
        lattice: LatticeKind::Chain,
        a,
        positions: (0..n_sites).map(|k| [k as f64 * a, 0.0]).collect(),
        filled: vec![true; n_sites],
    })
}

/// `rows × cols` square grid; site `(i, j)` sits at `(i·a, j·a)`.
pub fn build_square(rows: usize, cols: usize, a: f64) -> Result<Geometry> {
    if rows == 0 || cols == 0 {
        return Err(invalid("square lattice dimensions must be positive"));
    }
    check_spacing(a)?;
    let mut positions = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            positions.push([i as f64 * a, j as f64 * a]);
        }
    }
    Ok(Geometry {
        lattice: LatticeKind::Square,
        a,
        filled: vec![true; positions.len()],
        positions,
    })
}

/// Triangular lattice with `rows` rows of `cols` sites. Odd rows are shifted by
/// `a/2` and rows are `a·√3/2` apart, so every nearest-neighbour bond has length `a`.
pub fn build_triangular(rows: usize, cols: usize, a: f64) -> Result<Geometry> {
    if rows == 0 || cols == 0 {
        return Err(invalid("triangular lattice dimensions must be positive"));
    }
    check_spacing(a)?;
    let dy = a * 3f64.sqrt() / 2.0;
    let mut positions = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let shift = if r % 2 == 1 { a / 2.0 } else { 0.0 };
        for c in 0..cols {
            positions.push([c as f64 * a + shift, r as f64 * dy]);
        }
    }
    Ok(Geometry {
        lattice: LatticeKind::Triangular,
        a,
        filled: vec![true; positions.len()],
        positions,
    })
}

/// Keep `round(fraction · N)` of the currently filled sites, chosen uniformly
/// without replacement from a ChaCha stream seeded with `seed`.
pub fn random_fill(geom: &Geometry, fraction: f64, seed: u64) -> Result<Geometry> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid(format!("fill fraction must lie in (0, 1], got {fraction}")));
    }
    let occupied: Vec<usize> = (0..geom.n_sites()).filter(|&i| geom.filled[i]).collect();
    let keep = (fraction * occupied.len() as f64).round() as usize;
    if keep == 0 {
        return Err(invalid("fill fraction leaves no atoms"));
    }
    let mut rng = rng::root(seed);
    let mut filled = vec![false; geom.n_sites()];
    for k in sample(&mut rng, occupied.len(), keep) {
        filled[occupied[k]] = true;
    }
    Ok(Geometry {
        filled,
        ..geom.clone()
    })
}

/// Soft-core dressing potential `v0 · R_C⁶ / (r⁶ + R_C⁶)` with `r` and `R_C` in
/// the same units.
pub fn dressed_potential(r: f64, r_c: f64, v0: f64) -> f64 {
    let rc6 = r_c.powi(6);
    v0 * rc6 / (r.powi(6) + rc6)
}

/// Pairwise couplings `V_ij` and single-body shifts `δ_i` over the filled sites.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    n: usize,
    couplings: Vec<f64>,
    pub onsite: Vec<f64>,
}

impl InteractionMatrix {
    /// Build from an explicit symmetric matrix, given row-major.
    pub fn from_dense(n: usize, couplings: Vec<f64>) -> Result<Self> {
        if n == 0 || couplings.len() != n * n {
            return Err(invalid("coupling matrix must be a non-empty square matrix"));
        }
        for i in 0..n {
            if couplings[i * n + i] != 0.0 {
                return Err(invalid("coupling matrix must vanish on the diagonal"));
            }
            for j in 0..i {
                if couplings[i * n + j] != couplings[j * n + i] {
                    return Err(invalid("coupling matrix must be symmetric"));
                }
            }
        }
        Ok(InteractionMatrix {
            n,
            couplings,
            onsite: vec![0.0; n],
        })
    }

    /// All-to-all coupling `v0` between every pair.
    pub fn uniform(n: usize, v0: f64) -> Result<Self> {
        let mut c = vec![v0; n * n];
        for i in 0..n {
            c[i * n + i] = 0.0;
        }
        Self::from_dense(n, c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.couplings
    }

    pub fn with_onsite(mut self, onsite: Vec<f64>) -> Result<Self> {
        if onsite.len() != self.n {
            return Err(invalid("on-site shift vector has the wrong length"));
        }
        self.onsite = onsite;
        Ok(self)
    }

    /// Largest and smallest off-diagonal coupling.
    pub fn off_diagonal_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            for j in 0..i {
                let v = self.get(i, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }
}

/// Dressing interaction over the filled atoms with radius `r_c_over_a` (in units of `a`).
pub fn interaction_matrix(geom: &Geometry, r_c_over_a: f64, v0: f64) -> Result<InteractionMatrix> {
    if !(r_c_over_a > 0.0 && r_c_over_a.is_finite()) {
        return Err(invalid(format!("interaction radius must be positive, got {r_c_over_a}")));
    }
    if !(v0 > 0.0 && v0.is_finite()) {
        return Err(invalid(format!("interaction strength must be positive, got {v0}")));
    }
    geom.validate()?;
    let pts = geom.filled_positions();
    let n = pts.len();
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = dressed_potential(distance(pts[i], pts[j]) / geom.a, r_c_over_a, v0);
            c[i * n + j] = v;
            c[j * n + i] = v;
        }
    }
    Ok(InteractionMatrix {
        n,
        couplings: c,
        onsite: vec![0.0; n],
    })
}

/// Laser parameters of the dressing scheme (angular frequencies, `ħ = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressingParams {
    pub rabi: f64,
    pub detuning: f64,
    pub c6: f64,
    pub rydberg_lifetime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressingDerived {
    pub v0: f64,
    pub r_c: f64,
    pub eta_c: f64,
    /// Set when `Ω_R/|Δ| > 0.5`, outside the weak-dressing regime.
    pub weak_dressing_violated: bool,
}

/// Plateau `V₀ = (Ω/2Δ)³ Ω`, radius `R_C = |C₆/2Δ|^{1/6}` and coherence ratio
/// `η_c = (Ω/2Δ)(Ω τ_R)`.
pub fn dressing_derive(p: &DressingParams) -> Result<DressingDerived> {
    if p.detuning == 0.0 || !p.detuning.is_finite() {
        return Err(invalid("detuning must be non-zero"));
    }
    if !(p.rabi > 0.0 && p.rabi.is_finite()) {
        return Err(invalid("Rabi frequency must be positive"));
    }
    let ratio = p.rabi / (2.0 * p.detuning);
    let weak = p.rabi / p.detuning.abs() > 0.5;
    if weak {
        log::warn!(
            "Ω_R/|Δ| = {:.3} is outside the weak-dressing regime",
            p.rabi / p.detuning.abs()
        );
    }
    Ok(DressingDerived {
        v0: ratio.powi(3) * p.rabi,
        r_c: (p.c6 / (2.0 * p.detuning)).abs().powf(1.0 / 6.0),
        eta_c: ratio * p.rabi * p.rydberg_lifetime,
        weak_dressing_violated: weak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_pairwise(g: &Geometry) -> f64 {
        g.diameter()
    }

    #[test]
    fn chain_positions() {
        let g = build_chain(2, 1.0).unwrap();
        assert_eq!(g.positions, vec![[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(build_chain(1, 1.0).unwrap().count(), 1);
        assert!(build_chain(0, 1.0).is_err());
    }

    #[test]
    fn long_chain_distances() {
        let g = build_chain(150, 0.5).unwrap();
        for i in 0..150 {
            for j in 0..150 {
                let d = distance(g.positions[i], g.positions[j]);
                assert!((d - (i as f64 - j as f64).abs() * 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn square_sizes_and_diagonal() {
        let g = build_square(4, 4, 1.0).unwrap();
        assert_eq!(g.count(), 16);
        assert!((max_pairwise(&g) - 18f64.sqrt()).abs() < 1e-12);
        assert_eq!(build_square(1, 1, 1.0).unwrap().count(), 1);
        assert_eq!(build_square(6, 6, 1.0).unwrap().count(), 36);
        assert!(build_square(0, 3, 1.0).is_err());
    }

    #[test]
    fn triangular_neighbours() {
        let g = build_triangular(3, 4, 1.0).unwrap();
        assert_eq!(g.count(), 12);
        let two = build_triangular(1, 2, 1.0).unwrap();
        assert!((distance(two.positions[0], two.positions[1]) - 1.0).abs() < 1e-12);

        let big = build_triangular(5, 5, 1.0).unwrap();
        let centre = 2 * 5 + 2;
        let neighbours = big
            .positions
            .iter()
            .enumerate()
            .filter(|&(k, p)| k != centre && distance(*p, big.positions[centre]) < 1.0 + 1e-9)
            .count();
        assert_eq!(neighbours, 6);
        let min_d = (0..big.n_sites())
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| distance(big.positions[i], big.positions[j]))
            .fold(f64::INFINITY, f64::min);
        assert!((min_d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_fill_counts_and_determinism() {
        let g = build_square(6, 6, 1.0).unwrap();
        let half = random_fill(&g, 0.5, 11).unwrap();
        assert_eq!(half.count(), 18);
        assert_eq!(half, random_fill(&g, 0.5, 11).unwrap());
        assert_ne!(half.filled, random_fill(&g, 0.5, 12).unwrap().filled);
        assert_eq!(random_fill(&g, 1.0, 3).unwrap(), g);
        assert!(random_fill(&g, 0.0, 3).is_err());
        assert!(random_fill(&g, 1.5, 3).is_err());
    }

    #[test]
    fn potential_reference_values() {
        assert!((dressed_potential(1.5, 1.5, 2.0) - 1.0).abs() < 1e-15);
        assert!((dressed_potential(1e-6, 1.5, 2.0) - 2.0).abs() < 1e-12);
        let g = build_square(4, 4, 1.0).unwrap();
        let v = interaction_matrix(&g, 1.5, 1.0).unwrap();
        // Corners (0,0) and (3,3) are sites 0 and 15.
        let expected = 1.5f64.powi(6) / (18f64.powi(3) + 1.5f64.powi(6));
        assert!((v.get(0, 15) - expected).abs() < 1e-15);
        assert!((v.get(0, 15) - 0.001949).abs() < 1e-6);
    }

    #[test]
    fn interaction_skips_vacancies() {
        let mut g = build_chain(4, 1.0).unwrap();
        g.filled[1] = false;
        let v = interaction_matrix(&g, 1.0, 1.0).unwrap();
        assert_eq!(v.n(), 3);
        assert!((v.get(0, 1) - 1.0 / 65.0).abs() < 1e-15);
    }

    #[test]
    fn near_all_to_all_regime() {
        let g = build_square(3, 3, 1.0).unwrap();
        let d = g.diameter();
        let rc = 20.0;
        let v = interaction_matrix(&g, rc, 1.0).unwrap();
        let (lo, hi) = v.off_diagonal_range();
        assert!(hi - lo < (d / rc).powi(6));
    }

    #[test]
    fn dressing_reference() {
        let rabi = 2.0 * std::f64::consts::PI * 20e6;
        let p = DressingParams {
            rabi,
            detuning: 10.0 * rabi,
            c6: 1.0,
            rydberg_lifetime: 50e-6,
        };
        let d = dressing_derive(&p).unwrap();
        assert!((d.eta_c - 314.159).abs() < 0.01);
        assert!(!d.weak_dressing_violated);

        let formal = DressingParams {
            rabi: 3.0,
            detuning: 1.5,
            c6: 1.0,
            rydberg_lifetime: 1.0,
        };
        assert!((dressing_derive(&formal).unwrap().v0 - 3.0).abs() < 1e-15);

        let doubled = DressingParams {
            detuning: 20.0 * rabi,
            ..p
        };
        let ratio = dressing_derive(&doubled).unwrap().r_c / d.r_c;
        assert!((ratio - 2f64.powf(-1.0 / 6.0)).abs() < 1e-12);
        assert!(dressing_derive(&DressingParams { detuning: 0.0, ..p }).is_err());
    }

    #[test]
    fn geometry_json_shape() {
        let g = build_chain(2, 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&g).unwrap();
        assert_eq!(v["lattice"], "chain");
        assert_eq!(v["positions"][1][0], 1.0);
        assert_eq!(v["filled"][0], true);
        let back: Geometry = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        #[test]
        fn interaction_invariants(rows in 1usize..5, cols in 1usize..5, rc in 0.3f64..6.0, v0 in 0.1f64..3.0) {
            let g = build_square(rows, cols, 1.0).unwrap();
            let v = interaction_matrix(&g, rc, v0).unwrap();
            let pts = g.filled_positions();
            for i in 0..v.n() {
                prop_assert_eq!(v.get(i, i), 0.0);
                for j in 0..v.n() {
                    prop_assert_eq!(v.get(i, j), v.get(j, i));
                    if i != j {
                        prop_assert!(v.get(i, j) > 0.0 && v.get(i, j) <= v0);
                        for k in 0..v.n() {
                            if k != i && distance(pts[i], pts[k]) > distance(pts[i], pts[j]) + 1e-12 {
                                prop_assert!(v.get(i, k) < v.get(i, j));
                            }
                        }
                    }
                }
            }
        }
    }
}
