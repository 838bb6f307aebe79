//! DIRECT (dividing rectangles) on the unit box, adapted to noisy costs.
//!
//! Rectangles are stored exactly: along axis `k` a rectangle covers
//! `[i_k, i_k + 1] / 3^{L_k}`. Each iteration selects the potentially optimal
//! rectangles, optionally re-measures their centers (running mean), and
//! trisects each along one longest side. The budget is counted in runs.

use serde::{Deserialize, Serialize};

use super::{OptimizationTrace, OptimizerConfig, Sample, TraceRecord};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectSettings {
    /// Slack `ε` in the potential-optimality test.
    pub epsilon: f64,
    /// Re-measure selected centers and keep a running mean.
    pub resample: bool,
    /// Rectangles are not trisected beyond this depth per axis.
    pub max_level: u32,
    /// Gaussian kernel width (unit-box coordinates) of the predicted minimum.
    pub kernel_width: f64,
}

impl Default for DirectSettings {
    fn default() -> Self {
        DirectSettings {
            epsilon: 1e-4,
            resample: false,
            max_level: 30,
            kernel_width: 0.05,
        }
    }
}

impl DirectSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(invalid("direct.epsilon must be non-negative"));
        }
        if self.max_level == 0 || self.max_level > 35 {
            return Err(invalid("direct.max_level must lie in 1..=35"));
        }
        if !(self.kernel_width > 0.0) {
            return Err(invalid("direct.kernel_width must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Rect {
    level: Vec<u32>,
    index: Vec<u64>,
    sum: f64,
    err2: f64,
    count: u32,
}

impl Rect {
    fn center(&self) -> Vec<f64> {
        self.level
            .iter()
            .zip(&self.index)
            .map(|(&l, &i)| (i as f64 + 0.5) / 3f64.powi(l as i32))
            .collect()
    }

    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    fn std_error(&self) -> f64 {
        self.err2.sqrt() / self.count as f64
    }

    fn add(&mut self, s: Sample) {
        self.sum += s.value;
        self.err2 += s.std_error * s.std_error;
        self.count += 1;
    }

    /// Half-diagonal in unit-box coordinates.
    fn size(&self) -> f64 {
        let mut l = self.level.clone();
        l.sort_unstable();
        0.5 * l.iter().map(|&l| 9f64.powi(-(l as i32))).sum::<f64>().sqrt()
    }

    /// Axis to trisect: the lowest-numbered longest side still divisible.
    fn split_axis(&self, max_level: u32) -> Option<usize> {
        let min = *self.level.iter().min()?;
        if min >= max_level {
            return None;
        }
        self.level.iter().position(|&l| l == min)
    }
}

/// A rectangle of the final partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectInfo {
    pub level: Vec<u32>,
    pub index: Vec<u64>,
    pub mean: f64,
    pub count: u32,
}

impl RectInfo {
    pub fn volume(&self) -> f64 {
        self.level.iter().map(|&l| 3f64.powi(-(l as i32))).product()
    }

    /// Whether the interiors of two rectangles overlap, in exact arithmetic.
    pub fn overlaps(&self, other: &RectInfo) -> bool {
        for k in 0..self.level.len() {
            let (la, lb) = (self.level[k], other.level[k]);
            let (ia, ib) = (self.index[k] as u128, other.index[k] as u128);
            let sa = 3u128.pow(lb);
            let sb = 3u128.pow(la);
            // [ia, ia+1]/3^la vs [ib, ib+1]/3^lb on the common denominator 3^(la+lb).
            let (a0, a1) = (ia * sa, (ia + 1) * sa);
            let (b0, b1) = (ib * sb, (ib + 1) * sb);
            if a1 <= b0 || b1 <= a0 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct DirectResult {
    pub best_theta: Vec<f64>,
    /// Running mean of the cost at `best_theta`.
    pub best_value: f64,
    pub best_std_error: f64,
    /// Number of measurements averaged into `best_value`.
    pub best_count: u32,
    pub evaluations: u64,
    pub runs_used: u64,
    pub iterations: u64,
    pub trace: OptimizationTrace,
    pub rectangles: Vec<RectInfo>,
}

struct Search<'a, F> {
    cost: F,
    config: &'a OptimizerConfig,
    max_evals: u64,
    evals: u64,
    iteration: u64,
    trace: OptimizationTrace,
    history: Vec<(Vec<f64>, Sample)>,
    predicted: (f64, f64),
}

impl<F> Search<'_, F>
where
    F: FnMut(&[f64], u64) -> Result<Sample>,
{
    fn remaining(&self) -> u64 {
        self.max_evals - self.evals
    }

    fn evaluate(&mut self, unit: &[f64], incumbent: Option<&[f64]>) -> Result<Sample> {
        let theta = self.config.bounds.from_unit(unit);
        let s = (self.cost)(&theta, self.evals)?;
        self.evals += 1;
        self.history.push((unit.to_vec(), s));
        let at = incumbent.unwrap_or(unit);
        let (p, band) = self.smoothed(at);
        if p < self.predicted.0 {
            self.predicted = (p, band);
        }
        self.trace.records.push(TraceRecord {
            evaluation: self.evals - 1,
            iteration: self.iteration,
            theta,
            xi2_hat: s.value,
            std_error: s.std_error,
            runs_cumulative: self.evals * self.config.runs_per_evaluation,
            predicted_min: self.predicted.0,
            band: self.predicted.1,
        });
        Ok(s)
    }

    /// Gaussian-kernel average of all measurements around `at`.
    fn smoothed(&self, at: &[f64]) -> (f64, f64) {
        let h2 = 2.0 * self.config.direct.kernel_width.powi(2);
        let (mut wsum, mut fsum, mut vsum) = (0.0, 0.0, 0.0);
        for (u, s) in &self.history {
            let d2: f64 = u.iter().zip(at).map(|(a, b)| (a - b).powi(2)).sum();
            let w = (-d2 / h2).exp();
            wsum += w;
            fsum += w * s.value;
            vsum += w * w * s.std_error * s.std_error;
        }
        (fsum / wsum, vsum.sqrt() / wsum)
    }
}

/// Indices of potentially optimal rectangles, largest first.
fn potentially_optimal(rects: &[Rect], epsilon: f64) -> Vec<usize> {
    // Best rectangle of each size class; ties go to the earliest.
    let mut by_shape: std::collections::BTreeMap<Vec<u32>, usize> = Default::default();
    for (i, r) in rects.iter().enumerate() {
        let mut shape = r.level.clone();
        shape.sort_unstable();
        by_shape
            .entry(shape)
            .and_modify(|c| {
                if r.mean() < rects[*c].mean() {
                    *c = i;
                }
            })
            .or_insert(i);
    }
    let mut classes: Vec<(f64, usize)> = by_shape.values().map(|&i| (rects[i].size(), i)).collect();
    classes.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let f_min = classes.iter().map(|c| rects[c.1].mean()).fold(f64::INFINITY, f64::min);
    let target = f_min - epsilon * f_min.abs();
    let mut out = Vec::new();
    for (j, &(dj, ij)) in classes.iter().enumerate() {
        let fj = rects[ij].mean();
        let mut k_low: f64 = 0.0;
        let mut k_high = f64::INFINITY;
        for (i, &(di, ii)) in classes.iter().enumerate() {
            if i == j {
                continue;
            }
            let fi = rects[ii].mean();
            if di == dj {
                if fi < fj {
                    k_low = f64::INFINITY;
                }
            } else if di < dj {
                k_low = k_low.max((fj - fi) / (dj - di));
            } else {
                k_high = k_high.min((fi - fj) / (di - dj));
            }
        }
        if k_low > k_high {
            continue;
        }
        if k_high.is_finite() && fj - k_high * dj > target {
            continue;
        }
        out.push(ij);
    }
    out
}

/// Minimize a black-box `cost(θ, evaluation_index)` over `config.bounds`.
///
/// The evaluation index is passed so that stochastic costs can derive their
/// random stream from it; results then do not depend on evaluation order.
/// An optional `warm_start` point is measured first and competes for the
/// incumbent but is never divided.
pub fn direct_search<F>(cost: F, config: &OptimizerConfig, warm_start: Option<&[f64]>) -> Result<DirectResult>
where
    F: FnMut(&[f64], u64) -> Result<Sample>,
{
    config.validate()?;
    let dim = config.bounds.dim();
    if dim == 0 {
        return Err(invalid("cannot optimize over zero parameters"));
    }
    let settings = config.direct;
    let mut search = Search {
        cost,
        config,
        max_evals: config.max_evaluations(),
        evals: 0,
        iteration: 0,
        trace: OptimizationTrace::default(),
        history: Vec::new(),
        predicted: (f64::INFINITY, 0.0),
    };

    let mut rects = vec![Rect {
        level: vec![0; dim],
        index: vec![0; dim],
        sum: 0.0,
        err2: 0.0,
        count: 0,
    }];
    let c = rects[0].center();
    let s = search.evaluate(&c, None)?;
    rects[0].add(s);

    // Warm start, kept outside the partition.
    let mut extra: Option<(Vec<f64>, Rect)> = None;
    if let Some(w) = warm_start {
        if w.len() != dim {
            return Err(invalid("warm start has the wrong dimension"));
        }
        if !config.bounds.contains(w) {
            return Err(invalid("warm start lies outside the bounds"));
        }
        if search.remaining() > 0 {
            let u = config.bounds.to_unit(w);
            let s = search.evaluate(&u, None)?;
            let mut r = Rect {
                level: vec![0; dim],
                index: vec![0; dim],
                sum: 0.0,
                err2: 0.0,
                count: 0,
            };
            r.add(s);
            extra = Some((u, r));
        }
    }

    let incumbent = |rects: &[Rect], extra: &Option<(Vec<f64>, Rect)>| -> Vec<f64> {
        let best = rects.iter().min_by(|a, b| a.mean().total_cmp(&b.mean())).expect("non-empty");
        match extra {
            Some((u, e)) if e.mean() < best.mean() => u.clone(),
            _ => best.center(),
        }
    };

    while search.remaining() > 0 {
        search.iteration += 1;
        let selected = potentially_optimal(&rects, settings.epsilon);
        let mut progressed = false;
        for ri in selected {
            if search.remaining() == 0 {
                break;
            }
            if settings.resample && rects[ri].count < u32::MAX {
                let inc = incumbent(&rects, &extra);
                let s = search.evaluate(&rects[ri].center(), Some(&inc))?;
                rects[ri].add(s);
                progressed = true;
            }
            let Some(axis) = rects[ri].split_axis(settings.max_level) else {
                continue;
            };
            if search.remaining() < 2 {
                break;
            }
            let parent = rects[ri].clone();
            let mut children = Vec::with_capacity(2);
            for offset in [0u64, 2] {
                let mut child = Rect {
                    level: parent.level.clone(),
                    index: parent.index.clone(),
                    sum: 0.0,
                    err2: 0.0,
                    count: 0,
                };
                child.level[axis] += 1;
                child.index[axis] = 3 * parent.index[axis] + offset;
                children.push(child);
            }
            for child in &mut children {
                let inc = incumbent(&rects, &extra);
                let s = search.evaluate(&child.center(), Some(&inc))?;
                child.add(s);
            }
            let middle = &mut rects[ri];
            middle.level[axis] += 1;
            middle.index[axis] = 3 * parent.index[axis] + 1;
            rects.extend(children);
            progressed = true;
        }
        if !progressed {
            break;
        }
        // Fewer evaluations left than a trisection needs: spend them on the incumbent.
        if search.remaining() == 1 {
            let best = (0..rects.len()).min_by(|&a, &b| rects[a].mean().total_cmp(&rects[b].mean())).expect("non-empty");
            while search.remaining() > 0 {
                let c = rects[best].center();
                let s = search.evaluate(&c, Some(&c))?;
                rects[best].add(s);
            }
        }
    }

    let best_rect = rects.iter().min_by(|a, b| a.mean().total_cmp(&b.mean())).expect("non-empty");
    let (mut best_unit, mut best_value, mut best_err, mut best_count) =
        (best_rect.center(), best_rect.mean(), best_rect.std_error(), best_rect.count);
    if let Some((u, e)) = &extra {
        if e.mean() < best_value {
            best_unit = u.clone();
            best_value = e.mean();
            best_err = e.std_error();
            best_count = e.count;
        }
    }
    let runs_used = search.evals * config.runs_per_evaluation;
    Ok(DirectResult {
        best_theta: config.bounds.from_unit(&best_unit),
        best_value,
        best_std_error: best_err,
        best_count,
        evaluations: search.evals,
        runs_used,
        iterations: search.iteration,
        trace: search.trace,
        rectangles: rects
            .iter()
            .map(|r| RectInfo {
                level: r.level.clone(),
                index: r.index.clone(),
                mean: r.mean(),
                count: r.count,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::Bounds;
    use rand::Rng;

    fn config(dim: usize, lo: f64, hi: f64, evals: u64) -> OptimizerConfig {
        let b = Bounds::new(vec![lo; dim], vec![hi; dim]).unwrap();
        OptimizerConfig::new(b, evals, 1, 0).unwrap()
    }

    fn sphere(x: &[f64], _: u64) -> Result<Sample> {
        Ok(Sample::exact(x.iter().map(|v| v * v).sum()))
    }

    #[test]
    fn sphere_benchmark() {
        let c = config(3, -1.0, 2.0, 500);
        let r = direct_search(sphere, &c, None).unwrap();
        assert!(r.best_value < 1e-3, "{}", r.best_value);
        assert_eq!(r.evaluations, 500);
        assert_eq!(r.trace.len(), 500);
    }

    #[test]
    fn rectangles_partition_the_box() {
        let c = config(3, -1.0, 2.0, 301);
        let r = direct_search(sphere, &c, None).unwrap();
        let vol: f64 = r.rectangles.iter().map(|x| x.volume()).sum();
        assert!((vol - 1.0).abs() < 1e-12);
        for i in 0..r.rectangles.len() {
            for j in i + 1..r.rectangles.len() {
                assert!(!r.rectangles[i].overlaps(&r.rectangles[j]), "{i} {j}");
            }
        }
    }

    #[test]
    fn overlap_predicate() {
        let a = RectInfo { level: vec![1], index: vec![1], mean: 0.0, count: 1 };
        let b = RectInfo { level: vec![2], index: vec![4], mean: 0.0, count: 1 };
        let c = RectInfo { level: vec![2], index: vec![6], mean: 0.0, count: 1 };
        assert!(a.overlaps(&b));
        assert!(!a.overlaps(&c));
    }

    #[test]
    fn constant_function_runs_to_budget() {
        let c = config(2, 0.0, 1.0, 40);
        let r = direct_search(|_: &[f64], _| Ok(Sample::exact(3.0)), &c, None).unwrap();
        assert_eq!(r.evaluations, 40);
        assert_eq!(r.best_value, 3.0);
    }

    #[test]
    fn never_leaves_bounds_and_counts_runs() {
        let b = Bounds::new(vec![0.0, -2.0], vec![1.0, 5.0]).unwrap();
        let mut c = OptimizerConfig::new(b.clone(), 10_000, 100, 0).unwrap();
        c.direct.resample = true;
        let mut inside = true;
        let r = direct_search(
            |x: &[f64], i| {
                inside &= b.contains(x);
                let mut g = crate::rng::stream(7, i);
                Ok(Sample { value: (x[0] - 0.3).powi(2) + (x[1] - 1.0).powi(2) + 0.01 * g.random::<f64>(), std_error: 0.003 })
            },
            &c,
            None,
        )
        .unwrap();
        assert!(inside);
        assert_eq!(r.runs_used, 10_000);
        assert_eq!(r.trace.runs_used(), 10_000);
        let mut last = 0;
        for rec in &r.trace.records {
            assert!(rec.runs_cumulative > last && rec.runs_cumulative <= 10_000);
            last = rec.runs_cumulative;
        }
        assert!((r.best_theta[0] - 0.3).abs() < 0.1 && (r.best_theta[1] - 1.0).abs() < 0.3);
    }

    #[test]
    fn single_evaluation_budget() {
        let c = config(2, 0.0, 1.0, 1);
        let r = direct_search(sphere, &c, None).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.best_theta, vec![0.5, 0.5]);
    }

    #[test]
    fn warm_start_can_win() {
        let c = config(2, -1.0, 2.0, 3);
        let r = direct_search(sphere, &c, Some(&[0.0, 0.0])).unwrap();
        assert_eq!(r.best_value, 0.0);
        assert_eq!(r.best_theta, vec![0.0, 0.0]);
    }

    #[test]
    fn deterministic_given_index_streams() {
        let b = Bounds::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let mut c = OptimizerConfig::new(b, 2_000, 10, 0).unwrap();
        c.direct.resample = true;
        let noisy = |x: &[f64], i: u64| {
            let mut g = crate::rng::stream(3, i);
            Ok(Sample { value: x.iter().map(|v| (v - 0.7).powi(2)).sum::<f64>() + 0.05 * g.random::<f64>(), std_error: 0.01 })
        };
        let a = direct_search(noisy, &c, None).unwrap();
        let b = direct_search(noisy, &c, None).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn potential_optimality_keeps_largest_class_best() {
        let r = |level: Vec<u32>, v: f64| Rect { index: vec![0; level.len()], level, sum: v, err2: 0.0, count: 1 };
        let rects = vec![r(vec![0, 0], 5.0), r(vec![1, 1], 1.0), r(vec![1, 1], 0.5), r(vec![2, 2], 0.1)];
        let po = potentially_optimal(&rects, 0.0);
        assert_eq!(po[0], 0);
        assert!(po.contains(&3));
        assert!(!po.contains(&1));
    }
}
