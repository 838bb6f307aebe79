//! Nelder–Mead simplex descent on a box, with trial points clipped to the
//! bounds. Works in unit-box coordinates so one tolerance fits all axes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::statevec::Bounds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalSettings {
    /// Initial simplex edge as a fraction of each bound width.
    pub initial_scale: f64,
    /// Stop when every vertex lies within this unit-box distance of the best.
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for LocalSettings {
    fn default() -> Self {
        LocalSettings {
            initial_scale: 0.05,
            tolerance: 1e-6,
            max_evaluations: 2_000,
        }
    }
}

impl LocalSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_scale > 0.0 && self.initial_scale <= 0.5) {
            return Err(invalid("local.initial_scale must lie in (0, 0.5]"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("local.tolerance must be positive"));
        }
        if self.max_evaluations == 0 {
            return Err(invalid("local.max_evaluations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Simplex collapsed below the tolerance.
    pub converged: bool,
    /// Stopped on `max_evaluations` before converging.
    pub budget_exhausted: bool,
    /// Best value after each iteration; non-increasing.
    pub accepted: Vec<f64>,
}

/// Minimize `f` from `x0` inside `bounds`.
pub fn local_refine<F>(mut f: F, x0: &[f64], bounds: &Bounds, settings: &LocalSettings) -> Result<LocalResult>
where
    F: FnMut(&[f64]) -> f64,
{
    settings.validate()?;
    let d = bounds.dim();
    if x0.len() != d {
        return Err(invalid("start point has the wrong dimension"));
    }
    if !bounds.contains(x0) {
        return Err(invalid("start point lies outside the bounds"));
    }
    let mut evals = 0usize;
    let mut eval = |u: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(&bounds.from_unit(u));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let u0 = bounds.to_unit(x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let v0 = eval(&u0, &mut evals);
    simplex.push((u0.clone(), v0));
    for k in 0..d {
        if evals >= settings.max_evaluations {
            break;
        }
        let mut u = u0.clone();
        let s = settings.initial_scale;
        u[k] = if u[k] + s <= 1.0 { u[k] + s } else { u[k] - s };
        let v = eval(&u, &mut evals);
        simplex.push((u, v));
    }

    let clip = |u: &mut Vec<f64>| u.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
    let mut accepted = Vec::new();
    let mut converged = false;
    while simplex.len() == d + 1 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        accepted.push(simplex[0].1);
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .map(|(u, _)| u.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < settings.tolerance {
            converged = true;
            break;
        }
        if evals >= settings.max_evaluations {
            break;
        }

        let mut centroid = vec![0.0; d];
        for (u, _) in &simplex[..d] {
            for k in 0..d {
                centroid[k] += u[k] / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..d).map(|k| centroid[k] + t * (worst.0[k] - centroid[k])).collect();
            clip(&mut p);
            p
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = if evals < settings.max_evaluations { eval(&xe, &mut evals) } else { f64::INFINITY };
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(-0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        } else {
            let x = along(0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        };
        if fc < fr.min(worst.1) {
            simplex[d] = (xc, fc);
            continue;
        }
        // Shrink towards the best vertex.
        let b = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if evals >= settings.max_evaluations {
                break;
            }
            let u: Vec<f64> = vertex.0.iter().zip(&b).map(|(x, y)| y + 0.5 * (x - y)).collect();
            let v = eval(&u, &mut evals);
            *vertex = (u, v);
        }
    }
    let (u, value) = simplex
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .expect("non-empty simplex");
    if accepted.last().is_none_or(|&a| value < a) {
        accepted.push(value);
    }
    Ok(LocalResult {
        x: bounds.from_unit(&u),
        value,
        evaluations: evals,
        converged,
        budget_exhausted: !converged,
        accepted,
    })
}
