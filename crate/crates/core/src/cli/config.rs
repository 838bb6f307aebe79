//! Run configuration: parsing, defaults and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_chain, build_square, build_triangular, Geometry, LatticeKind};
use crate::measure::{MeasurementPlan, Penalty};
use crate::noise::NoiseConfig;
use crate::optimize::{DirectSettings, ExactObjective, ExactSettings, LocalSettings, OptimizerConfig};
use crate::statevec::Bounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    OptimizeFeedback,
    OptimizeExact,
    SweepRc,
    SweepN,
    NoiseControl,
    NoiseFilling,
    Analyze,
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySpec {
    pub lattice: LatticeKind,
    pub rows: usize,
    pub cols: usize,
    /// Lattice constant; interactions only depend on `r_c_over_a`.
    pub a: f64,
    /// Site coordinates for `lattice = "custom"`, in units of `a`.
    pub positions: Vec<[f64; 2]>,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec {
            lattice: LatticeKind::Square,
            rows: 4,
            cols: 4,
            a: 1.0,
            positions: Vec::new(),
        }
    }
}

impl GeometrySpec {
    /// A chain uses `cols` sites.
    pub fn build(&self) -> Result<Geometry> {
        match self.lattice {
            LatticeKind::Chain => build_chain(self.cols, self.a),
            LatticeKind::Square => build_square(self.rows, self.cols, self.a),
            LatticeKind::Triangular => build_triangular(self.rows, self.cols, self.a),
            LatticeKind::Custom => {
                let pos = self.positions.iter().map(|p| [p[0] * self.a, p[1] * self.a]).collect();
                Geometry::custom(self.a, pos, vec![true; self.positions.len()])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub budget_runs: u64,
    pub shots_per_evaluation: usize,
    /// Fraction of each evaluation's shots read out in the x basis.
    pub x_fraction: f64,
    /// Fraction of the budget spent re-measuring the final incumbent.
    pub validation_fraction: f64,
    /// Replace shot estimates by the exact measured cost.
    pub noiseless: bool,
    pub direct: DirectSettings,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            budget_runs: 100_000,
            shots_per_evaluation: 100,
            x_fraction: 0.5,
            validation_fraction: 0.05,
            noiseless: false,
            direct: DirectSettings {
                resample: true,
                ..DirectSettings::default()
            },
        }
    }
}

/// Exact-optimizer settings; the seed comes from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactSection {
    pub direct_evaluations: u64,
    pub uniform_seed_evaluations: u64,
    pub restarts: usize,
    pub local: LocalSettings,
    pub objective: ExactObjective,
}

impl Default for ExactSection {
    fn default() -> Self {
        let d = ExactSettings::default();
        ExactSection {
            direct_evaluations: d.direct_evaluations,
            uniform_seed_evaluations: d.uniform_seed_evaluations,
            restarts: d.restarts,
            local: d.local,
            objective: d.objective,
        }
    }
}

impl ExactSection {
    pub fn settings(&self, seed: u64) -> ExactSettings {
        ExactSettings {
            direct_evaluations: self.direct_evaluations,
            uniform_seed_evaluations: self.uniform_seed_evaluations,
            restarts: self.restarts,
            local: self.local,
            objective: self.objective,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltySection {
    pub enabled: bool,
    /// Threshold `x̄`; defaults to `N/√8`.
    pub threshold: Option<f64>,
}


impl PenaltySection {
    pub fn resolve(&self, n_atoms: usize) -> Option<Penalty> {
        self.enabled.then(|| match self.threshold {
            Some(threshold) => Penalty { threshold },
            None => Penalty::default_for(n_atoms),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub sigmas: Vec<f64>,
    pub depths: Vec<usize>,
    pub n_realizations: usize,
    pub bootstrap: usize,
    pub per_pulse: bool,
    pub fill_fraction: f64,
    pub n_patterns: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            sigmas: vec![0.0, 0.005, 0.01, 0.02],
            depths: vec![2, 4],
            n_realizations: 10_000,
            bootstrap: 200,
            per_pulse: false,
            fill_fraction: 0.5,
            n_patterns: 20,
        }
    }
}

impl NoiseSection {
    pub fn noise_config(&self, sigma: f64, seed: u64) -> NoiseConfig {
        NoiseConfig {
            sigma_noise: sigma,
            n_realizations: self.n_realizations,
            bootstrap: self.bootstrap,
            per_pulse: self.per_pulse,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub r_c_values: Vec<f64>,
    /// Chain lengths for `sweep-n`.
    pub n_values: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            r_c_values: vec![1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
            n_values: vec![4, 6, 8, 10, 12],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeSection {
    /// Circuit parameters `(τ, ϑ, τ′)` per layer; optimized exactly when absent.
    pub theta: Option<Vec<f64>>,
    pub samples_per_gate: usize,
    pub husimi_theta: usize,
    pub husimi_phi: usize,
    /// Shells with a smaller population get no Husimi map.
    pub min_population: f64,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        AnalyzeSection {
            theta: None,
            samples_per_gate: 20,
            husimi_theta: 64,
            husimi_phi: 128,
            min_population: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleBasis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSection {
    pub theta: Option<Vec<f64>>,
    pub shots: usize,
    pub basis: SampleBasis,
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection {
            theta: None,
            shots: 1_000,
            basis: SampleBasis::Y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub geometry: GeometrySpec,
    pub r_c_over_a: f64,
    pub v0: f64,
    pub n_layers: usize,
    /// Upper bound on `τ` and `τ′`; defaults to `10/V₀`.
    pub tau_max: Option<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub optimizer: OptimizerSection,
    pub exact: ExactSection,
    pub penalty: PenaltySection,
    pub noise: NoiseSection,
    pub sweep: SweepSection,
    pub analyze: AnalyzeSection,
    pub sample: SampleSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: Experiment::OptimizeFeedback,
            geometry: GeometrySpec::default(),
            r_c_over_a: 1.5,
            v0: 1.0,
            n_layers: 4,
            tau_max: None,
            seed: 0,
            output_dir: PathBuf::from("squeezekit-out"),
            optimizer: OptimizerSection::default(),
            exact: ExactSection::default(),
            penalty: PenaltySection::default(),
            noise: NoiseSection::default(),
            sweep: SweepSection::default(),
            analyze: AnalyzeSection::default(),
            sample: SampleSection::default(),
        }
    }
}

/// 1-based line of the first line defining `key`, for error messages.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start().trim_start_matches('"');
        t.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().trim_start_matches('"').trim_start().starts_with(['=', ':']))
    })
    .map(|i| i + 1)
}

fn config_error(text: &str, key: &str, msg: impl std::fmt::Display) -> Error {
    match line_of(text, key) {
        Some(line) => Error::Config(format!("line {line}: `{key}`: {msg}")),
        None => Error::Config(format!("`{key}`: {msg}")),
    }
}

impl RunConfig {
    /// Parse TOML, or JSON when the extension is `.json`.
    pub fn from_str_with_format(text: &str, json: bool) -> Result<Self> {
        let cfg: RunConfig = if json {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}: {e}", e.line())))?
        } else {
            toml::from_str(text).map_err(|e| {
                let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
                let msg = e.message().to_string();
                Error::Config(match line {
                    Some(l) => format!("line {l}: {msg}"),
                    None => msg,
                })
            })?
        };
        cfg.validate_against(text)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::from_str_with_format(&text, json)
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max.unwrap_or(10.0 / self.v0)
    }

    /// Validate, anchoring messages at the offending key of `text`.
    pub fn validate_against(&self, text: &str) -> Result<()> {
        let e = |key: &str, msg: &str| Err(config_error(text, key, msg));
        if !(self.r_c_over_a > 0.0 && self.r_c_over_a.is_finite()) {
            return e("r_c_over_a", "must be positive");
        }
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return e("v0", "must be positive");
        }
        if self.n_layers == 0 {
            return e("n_layers", "must be at least 1");
        }
        if let Some(t) = self.tau_max {
            if !(t > 0.0 && t.is_finite()) {
                return e("tau_max", "must be positive");
            }
        }
        if self.geometry.lattice == LatticeKind::Custom && self.geometry.positions.is_empty() {
            return e("positions", "a custom lattice needs positions");
        }
        if let Err(err) = self.geometry.build() {
            return Err(config_error(text, "lattice", err));
        }
        let o = &self.optimizer;
        if let Err(err) = MeasurementPlan::new(o.shots_per_evaluation, o.x_fraction) {
            return Err(config_error(text, "shots_per_evaluation", err));
        }
        if o.budget_runs < o.shots_per_evaluation as u64 {
            return e("budget_runs", "must cover at least one evaluation");
        }
        if !(0.0..1.0).contains(&o.validation_fraction) {
            return e("validation_fraction", "must lie in [0, 1)");
        }
        if let Err(err) = o.direct.validate() {
            return Err(config_error(text, "direct", err));
        }
        if let Err(err) = self.exact.local.validate() {
            return Err(config_error(text, "exact", err));
        }
        if let Some(t) = self.penalty.threshold {
            if !(t > 0.0) {
                return e("threshold", "must be positive");
            }
        }
        let n = &self.noise;
        if n.sigmas.is_empty() || n.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return e("sigmas", "needs at least one finite, non-negative value");
        }
        if n.depths.is_empty() || n.depths.contains(&0) {
            return e("depths", "needs at least one positive depth");
        }
        if let Err(err) = n.noise_config(0.0, 0).validate() {
            return Err(config_error(text, "n_realizations", err));
        }
        if !(n.fill_fraction > 0.0 && n.fill_fraction <= 1.0) {
            return e("fill_fraction", "must lie in (0, 1]");
        }
        if n.n_patterns == 0 {
            return e("n_patterns", "must be at least 1");
        }
        if self.sweep.r_c_values.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return e("r_c_values", "must be positive");
        }
        if self.sweep.n_values.contains(&0) {
            return e("n_values", "must be positive");
        }
        for (key, theta) in [("theta", &self.analyze.theta), ("theta", &self.sample.theta)] {
            if let Some(t) = theta {
                if t.is_empty() || t.len() % 3 != 0 || t.iter().any(|v| !v.is_finite()) {
                    return e(key, "needs 3 finite values per layer");
                }
            }
        }
        if self.analyze.samples_per_gate == 0 {
            return e("samples_per_gate", "must be at least 1");
        }
        if self.analyze.husimi_theta == 0 || self.analyze.husimi_phi == 0 {
            return e("husimi_theta", "grid sizes must be positive");
        }
        if self.sample.shots == 0 {
            return e("shots", "must be at least 1");
        }
        Ok(())
    }

    pub fn bounds(&self, n_layers: usize) -> Bounds {
        Bounds::circuit(n_layers, self.tau_max())
    }

    pub fn optimizer_config(&self) -> Result<OptimizerConfig> {
        let o = &self.optimizer;
        let mut c = OptimizerConfig::new(
            self.bounds(self.n_layers),
            o.budget_runs,
            o.shots_per_evaluation as u64,
            self.seed,
        )?;
        c.direct = o.direct;
        Ok(c)
    }

    pub fn plan(&self) -> Result<MeasurementPlan> {
        MeasurementPlan::new(self.optimizer.shots_per_evaluation, self.optimizer.x_fraction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c = RunConfig::from_str_with_format("", false).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.tau_max(), 10.0);
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let err = RunConfig::from_str_with_format("seed = 1\nbogus = 2\n", false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("bogus"), "{msg}");
        let err = RunConfig::from_str_with_format("[optimizer]\nbudget_runs = 10\nfoo = 1\n", false).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(RunConfig::from_str_with_format("{\"nope\": 1}", true).is_err());
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let text = "experiment = \"sweep-rc\"\n\n[optimizer]\nbudget_runs = 10\n";
        let msg = RunConfig::from_str_with_format(text, false).unwrap_err().to_string();
        assert!(msg.contains("line 4") && msg.contains("budget_runs"), "{msg}");
        let msg = RunConfig::from_str_with_format("{\n  \"v0\": -1\n}", true).unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn json_and_toml_agree() {
        let t = RunConfig::from_str_with_format("experiment = \"noise-control\"\nn_layers = 2\n[noise]\nsigmas = [0.0, 0.01]\n", false)
            .unwrap();
        let j = RunConfig::from_str_with_format(
            r#"{"experiment": "noise-control", "n_layers": 2, "noise": {"sigmas": [0.0, 0.01]}}"#,
            true,
        )
        .unwrap();
        assert_eq!(t, j);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = RunConfig {
            seed: 17,
            ..RunConfig::default()
        };
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(RunConfig::from_str_with_format(&text, true).unwrap(), c);
    }

    #[test]
    fn penalty_threshold_defaults_to_n_over_sqrt8() {
        let p = PenaltySection {
            enabled: true,
            threshold: None,
        };
        assert!((p.resolve(16).unwrap().threshold - 16.0 / 8f64.sqrt()).abs() < 1e-12);
        assert!(PenaltySection::default().resolve(16).is_none());
    }
}
