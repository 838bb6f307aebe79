//! Experiment drivers behind `squeezekit run`.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{Experiment, RunConfig, SampleBasis};
use super::trajectory::{trajectory_scan, write_series_csv};
use crate::analysis::{husimi_maps, shell_populations_checked, SphereGrid};
use crate::dicke::{oat_optimal_xi2, squeezing_limit, tat_optimal_xi2};
use crate::error::{Error, Result};
use crate::lattice::{build_chain, interaction_matrix, InteractionMatrix};
use crate::measure::sample_shots;
use crate::noise::{control_noise_xi2, filling_pattern, filling_robustness};
use crate::optimize::{
    exact_optimize, exact_optimize_depths, feedback_loop, foat_optimal_xi2, ExactObjective, ExactResult, FeedbackConfig,
};
use crate::rng;
use crate::statevec::{Axis, IsingSpectrum, ParamVector, StateVector};

pub const SCHEMA: &str = "# squeezekit-schema v1";

/// Output directory with atomic (temp file + rename) writes.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// `name` must be a plain file name.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(Error::InvalidArgument(format!("bad output file name {name:?}")));
        }
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, &target)?;
        Ok(target)
    }

    pub fn write_json(&self, name: &str, value: &Value) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

fn csv(header: &str, rows: &[String]) -> Vec<u8> {
    let mut s = format!("{SCHEMA}\n{header}\n");
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s.into_bytes()
}

fn lattice_interactions(cfg: &RunConfig, r_c_over_a: f64) -> Result<InteractionMatrix> {
    interaction_matrix(&cfg.geometry.build()?, r_c_over_a, cfg.v0)
}

fn references(n: usize) -> Result<Value> {
    let oat = oat_optimal_xi2(n)?;
    let tat = tat_optimal_xi2(n, 2.0, 4_000)?;
    Ok(json!({
        "oat_xi2": oat.xi2,
        "oat_tau": oat.tau,
        "tat_xi2": tat.xi2,
        "limit_xi2": squeezing_limit(n),
    }))
}

fn depth_rows(results: &[ExactResult], prefix: &str) -> Vec<String> {
    results
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let t = ParamVector::new(r.theta.clone()).map_or(f64::NAN, |p| p.total_interaction_time());
            format!("{prefix}{},{},{}", k + 1, r.xi2, t)
        })
        .collect()
}

fn theta_or_optimize(cfg: &RunConfig, v: &InteractionMatrix, theta: &Option<Vec<f64>>) -> Result<ParamVector> {
    match theta {
        Some(t) => ParamVector::new(t.clone()),
        None => {
            let r = exact_optimize_depths(v, cfg.n_layers, cfg.tau_max(), &cfg.exact.settings(cfg.seed))?;
            r.last().expect("at least one depth").params()
        }
    }
}

/// Run the configured experiment into `out`; returns the summary that was
/// written to `summary.json`.
pub fn run_experiment(cfg: &RunConfig, out: &OutputDir) -> Result<Value> {
    let resolved = serde_json::to_value(cfg)?;
    out.write_json("config.resolved.json", &resolved)?;
    let body = match cfg.experiment {
        Experiment::OptimizeFeedback => optimize_feedback(cfg, out)?,
        Experiment::OptimizeExact => optimize_exact(cfg, out)?,
        Experiment::SweepRc => sweep_rc(cfg, out)?,
        Experiment::SweepN => sweep_n(cfg, out)?,
        Experiment::NoiseControl => noise_control(cfg, out)?,
        Experiment::NoiseFilling => noise_filling(cfg, out)?,
        Experiment::Analyze => analyze(cfg, out)?,
        Experiment::Sample => sample(cfg, out)?,
    };
    let summary = json!({
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "result": body,
        "config": resolved,
    });
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn optimize_feedback(cfg: &RunConfig, out: &OutputDir) -> Result<Value> {
    let v = lattice_interactions(cfg, cfg.r_c_over_a)?;
    let mut fc = FeedbackConfig::new(cfg.optimizer_config()?, cfg.plan()?)?;
    fc.optimizer.direct.resample = cfg.optimizer.direct.resample;
    fc.penalty = cfg.penalty.resolve(v.n());
    fc.noiseless = cfg.optimizer.noiseless;
    fc.validation_fraction = cfg.optimizer.validation_fraction;
    let r = feedback_loop(&v, cfg.n_layers, &fc)?;
    let mut trace = Vec::new();
    r.search.trace.write_jsonl(&mut trace)?;
    out.write("trace.jsonl", &trace)?;

    let ising = IsingSpectrum::new(&v)?;
    let mut s = StateVector::coherent_x(v.n())?;
    s.apply_circuit(&ising, &r.best)?;
    let m = s.collective_expectations();
    Ok(json!({
        "n_atoms": v.n(),
        "best_theta": r.best,
        "final_xi2": r.final_xi2,
        "final_std_error": r.final_std_error,
        "exact_measured_xi2": m.xi2_along_y().ok(),
        "exact_xi2": m.xi2().ok(),
        "runs_used": r.runs_used,
        "evaluations": r.search.evaluations,
        "validation_evaluations": r.validation_evaluations,
        "total_interaction_time": r.best.total_interaction_time(),
        "references": references(v.n())?,
    }))
}

fn optimize_exact(cfg: &RunConfig, out: &OutputDir) -> Result<Value> {
    let v = lattice_interactions(cfg, cfg.r_c_over_a)?;
    let results = exact_optimize_depths(&v, cfg.n_layers, cfg.tau_max(), &cfg.exact.settings(cfg.seed))?;
    out.write("series.csv", &csv("layers,xi2,total_time", &depth_rows(&results, "")))?;
    let foat = foat_optimal_xi2(&v, cfg.tau_max(), 2_000)?;
    Ok(json!({
        "n_atoms": v.n(),
        "depths": results,
        "foat_xi2": foat.xi2,
        "foat_tau": foat.tau,
        "references": references(v.n())?,
    }))
}

fn sweep_rc(cfg: &RunConfig, out: &OutputDir) -> Result<Value> {
    let jobs: Vec<(usize, f64)> = cfg.sweep.r_c_values.iter().copied().enumerate().collect();
    let results: Vec<(f64, Vec<ExactResult>)> = jobs
        .into_par_iter()
        .map(|(k, rc)| -> Result<_> {
            let v = lattice_interactions(cfg, rc)?;
            let settings = cfg.exact.settings(rng::child_seed(cfg.seed, k as u64));
            Ok((rc, exact_optimize_depths(&v, cfg.n_layers, cfg.tau_max(), &settings)?))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<String> = results.iter().flat_map(|(rc, r)| depth_rows(r, &format!("{rc},"))).collect();
    out.write("series.csv", &csv("r_c_over_a,layers,xi2,total_time", &rows))?;
    let n = cfg.geometry.build()?.count();
    Ok(json!({
        "n_atoms": n,
        "points": results.iter().map(|(rc, r)| json!({"r_c_over_a": rc, "depths": r})).collect::<Vec<_>>(),
        "references": references(n)?,
    }))
}

fn sweep_n(cfg: &RunConfig, out: &OutputDir) -> Result<Value> {
    let jobs: Vec<(usize, usize)> = cfg.sweep.n_values.iter().copied().enumerate().collect();
    let results: Vec<(usize, Vec<ExactResult>, Value)> = jobs
        .into_par_iter()
        .map(|(k, n)| -> Result<_> {
            let v = interaction_matrix(&build_chain(n, cfg.geometry.a)?, cfg.r_c_over_a, cfg.v0)?;
            let settings = cfg.exact.settings(rng::child_seed(cfg.seed, k as u64));
            Ok((n, exact_optimize_depths(&v, cfg.n_layers, cfg.tau_max(), &settings)?, references(n)?))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (n, r, refs) in &results {
        let tail = format!("{},{},{}", refs["oat_xi2"], refs["tat_xi2"], refs["limit_xi2"]);
        rows.extend(depth_rows(r, &format!("{n},")).into_iter().map(|row| format!("{row},{tail}")));
    }
    out.write("series.csv", &csv("n_atoms,layers,xi2,total_time,oat_xi2,tat_xi2,limit_xi2", &rows))?;
    Ok(json!({
        "points": results.iter().map(|(n, r, refs)| json!({"n_atoms": n, "depths": r, "references": refs})).collect::<Vec<_>>(),
    }))
}

fn noise_control(cfg: &RunConfig, out: &OutputDir) -> Result<Value> {
    let v = lattice_interactions(cfg, cfg.r_c_over_a)?;
    let max_depth = *cfg.noise.depths.iter().max().expect("validated non-empty");
    // The single-shot estimator targets N⟨J_y²⟩/⟨J_x⟩², so optimize that.
    let mut settings = cfg.exact.settings(cfg.seed);
    settings.objective = ExactObjective::Measured;
    let optima = exact_optimize_depths(&v, max_depth, cfg.tau_max(), &settings)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &depth in &cfg.noise.depths {
        let theta = optima[depth - 1].params()?;
        for (k, &sigma) in cfg.noise.sigmas.iter().enumerate() {
            let seed = rng::child_seed(cfg.seed, (depth * 1_000 + k) as u64);
            let r = control_noise_xi2(&v, &theta, &cfg.noise.noise_config(sigma, seed))?;
            rows.push(format!("{depth},{sigma},{},{},{}", r.mean_xi2, r.std_xi2, optima[depth - 1].xi2));
            points.push(r);
        }
    }
    out.write("series.csv", &csv("layers,sigma_noise,mean_xi2,std_xi2,noiseless_xi2", &rows))?;
    Ok(json!({
        "n_atoms": v.n(),
        "optima": cfg.noise.depths.iter().map(|&d| &optima[d - 1]).collect::<Vec<_>>(),
        "points": points,
    }))
}

fn noise_filling(cfg: &RunConfig, out: &OutputDir) -> Result<Value> {
    let base = cfg.geometry.build()?;
    let fraction = cfg.noise.fill_fraction;
    let pattern0 = filling_pattern(&base, fraction, cfg.seed, 0)?;
    let v = interaction_matrix(&pattern0, cfg.r_c_over_a, cfg.v0)?;
    let opt = exact_optimize(&v, cfg.n_layers, &cfg.bounds(cfg.n_layers), None, &cfg.exact.settings(cfg.seed))?;
    let theta = opt.params()?;
    let r = filling_robustness(&base, fraction, &theta, cfg.noise.n_patterns, cfg.seed, cfg.r_c_over_a, cfg.v0)?;
    let rows: Vec<String> = r
        .per_pattern
        .iter()
        .zip(&r.atoms)
        .enumerate()
        .map(|(k, (x, n))| format!("{k},{n},{x}"))
        .collect();
    out.write("series.csv", &csv("pattern,n_atoms,xi2", &rows))?;
    Ok(json!({
        "theta": theta,
        "optimized_xi2": opt.xi2,
        "mean_xi2": r.mean_xi2,
        "std_xi2": r.std_xi2,
        "fraction": fraction,
        "n_patterns": r.per_pattern.len(),
    }))
}

fn analyze(cfg: &RunConfig, out: &OutputDir) -> Result<Value> {
    let v = lattice_interactions(cfg, cfg.r_c_over_a)?;
    let theta = theta_or_optimize(cfg, &v, &cfg.analyze.theta)?;
    let ising = IsingSpectrum::new(&v)?;
    let series = trajectory_scan(&ising, &theta, cfg.analyze.samples_per_gate)?;
    let mut buf = Vec::new();
    write_series_csv(&series, &mut buf)?;
    out.write("series.csv", &buf)?;

    let mut s = StateVector::coherent_x(v.n())?;
    s.apply_circuit(&ising, &theta)?;
    let shells = shell_populations_checked(&s)?;
    let rows: Vec<String> = (0..shells.two_j.len())
        .map(|k| format!("{},{},{}", shells.two_j[k], shells.degeneracies[k], shells.populations[k]))
        .collect();
    out.write("shells.csv", &csv("two_j,degeneracy,population", &rows))?;

    let grid = SphereGrid::uniform(cfg.analyze.husimi_theta, cfg.analyze.husimi_phi)?;
    let maps = husimi_maps(&s, &grid, cfg.analyze.min_population)?;
    let mut rows = Vec::new();
    for m in &maps {
        for (k, q) in m.values.iter().enumerate() {
            rows.push(format!("{},{},{},{}", m.two_j, grid.theta[k], grid.phi[k], q));
        }
    }
    out.write("husimi.csv", &csv("two_j,theta,phi,q", &rows))?;
    let last = series.last().expect("non-empty series");
    Ok(json!({
        "n_atoms": v.n(),
        "theta": theta,
        "final": last,
        "shell_populations": shells.populations,
        "husimi_shells": maps.iter().map(|m| m.two_j).collect::<Vec<_>>(),
    }))
}

fn sample(cfg: &RunConfig, out: &OutputDir) -> Result<Value> {
    let v = lattice_interactions(cfg, cfg.r_c_over_a)?;
    let theta = match &cfg.sample.theta {
        Some(t) => ParamVector::new(t.clone())?,
        None => ParamVector::zeros(cfg.n_layers),
    };
    let ising = IsingSpectrum::new(&v)?;
    let mut s = StateVector::coherent_x(v.n())?;
    s.apply_circuit(&ising, &theta)?;
    let basis = match cfg.sample.basis {
        SampleBasis::X => Axis::X,
        SampleBasis::Y => Axis::Y,
        SampleBasis::Z => Axis::Z,
    };
    let batch = sample_shots(&s, basis, cfg.sample.shots, cfg.seed)?;
    let mut buf = Vec::new();
    batch.write_csv(&mut buf)?;
    out.write("shots.csv", &buf)?;
    let m: Vec<f64> = batch.magnetizations().collect();
    let k = m.len() as f64;
    let mean = m.iter().sum::<f64>() / k;
    let mean_sq = m.iter().map(|x| x * x).sum::<f64>() / k;
    Ok(json!({
        "n_atoms": v.n(),
        "shots": batch.len(),
        "mean_magnetization": mean,
        "mean_magnetization_squared": mean_sq,
    }))
}
