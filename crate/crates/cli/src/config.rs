//! Experiment configuration.
//!
//! A config is a TOML file. Top-level keys pick the model and the root seed;
//! one table per subcommand holds its parameters. Every key has a default, so
//! an empty file plus `model = "ring2d"` is valid.
//!
//! ```toml
//! model = "ring2d"          # ring2d | gibbs2d | ring4d | turb6d | diffusion | ou
//! seed = 1
//! dim = 1                   # only for diffusion / ou
//! sigma = 1.0               # only for diffusion / ou
//! domain = [[-2.0, 2.0], [-2.0, 2.0]]   # optional override
//!
//! [trajectory]
//! dt = 0.001
//! burn_in_time = 10.0
//! internal_gap = 0.01
//!
//! [sample]                  # collocation points
//! count = 1000
//! alpha = 0.5
//!
//! [density]                 # reference densities
//! sampler = "mc"            # mc | mc-split | cg | exact | exact-noise
//! points = 256
//! alpha = 0.9
//! noise = 0.1
//! steps = 1000000
//! points_per_axis = 50
//! horizon = 1000.0
//! radius = 0.05
//!
//! [grid]
//! points_per_axis = 50
//! method = "constrained"    # constrained | penalized
//! input = "mc"              # mc | exact-noise
//! steps = 1000000
//! noise = 0.1
//!
//! [train]
//! hidden = [16, 128, 128, 128, 16, 4]
//! collocation = 10000
//! collocation_alpha = 0.5
//! max_iters = 10000
//! ...
//!
//! [eval]
//! checkpoint = "checkpoint.csv"
//! points_per_axis = 400
//!
//! [qh]
//! grids = [8, 16, 32, 64, 128]
//!
//! [thm1]
//! grids = [10, 20, 40, 80]
//! zeta = 0.1
//! trials = 20
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use fpsolve_core::models::BUILTIN_MODELS;
use fpsolve_core::neural::DEFAULT_HIDDEN;

/// A configuration problem, with the 1-based line it refers to when known.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub qh: QhSection,
    #[serde(default)]
    pub thm1: Thm1Section,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub dt: f64,
    pub burn_in_time: f64,
    pub internal_gap: f64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self { dt: 1e-3, burn_in_time: 10.0, internal_gap: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub count: usize,
    pub alpha: f64,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self { count: 1000, alpha: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    Mc,
    McSplit,
    Cg,
    Exact,
    ExactNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub sampler: Sampler,
    pub points: usize,
    /// Probability of drawing a reference point from the trajectory.
    pub alpha: f64,
    /// Multiplicative noise level for `exact-noise`.
    pub noise: f64,
    pub steps: u64,
    pub points_per_axis: usize,
    pub horizon: f64,
    pub radius: f64,
}

impl Default for DensitySection {
    fn default() -> Self {
        Self {
            sampler: Sampler::Mc,
            points: 256,
            alpha: 0.9,
            noise: 0.1,
            steps: 1_000_000,
            points_per_axis: 50,
            horizon: 1000.0,
            radius: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMethod {
    Constrained,
    Penalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridInput {
    Mc,
    ExactNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub points_per_axis: usize,
    pub method: GridMethod,
    pub input: GridInput,
    pub steps: u64,
    pub noise: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            points_per_axis: 50,
            method: GridMethod::Constrained,
            input: GridInput::Mc,
            steps: 1_000_000,
            noise: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub hidden: Vec<usize>,
    pub collocation: usize,
    pub collocation_alpha: f64,
    /// Reference points with densities; generated from `[density]` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_file: Option<String>,
    pub batch_collocation: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_reference: Option<usize>,
    pub max_iters: usize,
    pub tol_l1: f64,
    pub tol_l2: f64,
    pub ema_decay: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub rescale: bool,
    pub use_residual: bool,
    pub eval_points_per_axis: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN.to_vec(),
            collocation: 10_000,
            collocation_alpha: 0.5,
            reference_file: None,
            batch_collocation: 128,
            batch_reference: None,
            max_iters: 10_000,
            tol_l1: 1e-5,
            tol_l2: 1e-5,
            ema_decay: 0.99,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            rescale: false,
            use_residual: true,
            eval_points_per_axis: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Relative paths resolve against the output directory.
    pub checkpoint: String,
    pub points_per_axis: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice_axes: Option<[usize; 2]>,
    /// Values of the fixed coordinates; defaults to the domain midpoint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice_base: Option<Vec<f64>>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { checkpoint: "checkpoint.csv".into(), points_per_axis: 400, slice_axes: None, slice_base: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QhSection {
    pub grids: Vec<usize>,
}

impl Default for QhSection {
    fn default() -> Self {
        Self { grids: vec![8, 16, 32, 64, 128] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thm1Section {
    pub grids: Vec<usize>,
    pub zeta: f64,
    pub trials: usize,
}

impl Default for Thm1Section {
    fn default() -> Self {
        Self { grids: vec![10, 20, 40, 80], zeta: 0.1, trials: 20 }
    }
}

impl ExperimentConfig {
    pub fn new(model: &str) -> Self {
        Self {
            model: model.into(),
            seed: 0,
            dim: None,
            sigma: None,
            domain: None,
            trajectory: Default::default(),
            sample: Default::default(),
            density: Default::default(),
            grid: Default::default(),
            train: Default::default(),
            eval: Default::default(),
            qh: Default::default(),
            thm1: Default::default(),
        }
    }

    /// Parses and validates; errors carry the offending line.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|(section, key, message)| ConfigError {
            line: locate(text, section, key),
            message: format!("{}{key}: {message}", section.map(|s| format!("{s}.")).unwrap_or_default()),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks ranges; returns `(section, key, message)` of the first violation.
    pub fn validate(&self) -> Result<(), (Option<&'static str>, &'static str, String)> {
        fn check(ok: bool, section: Option<&'static str>, key: &'static str, msg: &str) -> Result<(), (Option<&'static str>, &'static str, String)> {
            if ok {
                Ok(())
            } else {
                Err((section, key, msg.to_string()))
            }
        }
        let generic = matches!(self.model.as_str(), "diffusion" | "ou");
        check(
            generic || BUILTIN_MODELS.contains(&self.model.as_str()),
            None,
            "model",
            &format!("unknown model `{}`; expected one of {BUILTIN_MODELS:?}, diffusion, ou", self.model),
        )?;
        check(self.dim.is_none_or(|d| (1..=6).contains(&d)), None, "dim", "must be in 1..=6")?;
        check(self.sigma.is_none_or(|s| s > 0.0 && s.is_finite()), None, "sigma", "must be positive")?;
        if let Some(d) = &self.domain {
            check(d.iter().all(|[a, b]| a.is_finite() && b.is_finite() && a < b), None, "domain", "every interval needs lower < upper")?;
        }
        let t = &self.trajectory;
        let s = Some("trajectory");
        check(t.dt > 0.0 && t.dt.is_finite(), s, "dt", "must be positive")?;
        check(t.burn_in_time >= 0.0, s, "burn_in_time", "must be nonnegative")?;
        check(t.internal_gap >= t.dt, s, "internal_gap", "must be at least dt")?;

        let s = Some("sample");
        check(self.sample.count >= 1, s, "count", "must be at least 1")?;
        check((0.0..=1.0).contains(&self.sample.alpha), s, "alpha", "must lie in [0, 1]")?;

        let d = &self.density;
        let s = Some("density");
        check(d.points >= 1, s, "points", "must be at least 1")?;
        check((0.0..=1.0).contains(&d.alpha), s, "alpha", "must lie in [0, 1]")?;
        check((0.0..1.0).contains(&d.noise), s, "noise", "must lie in [0, 1)")?;
        check(d.steps >= 1, s, "steps", "must be at least 1")?;
        check(d.points_per_axis >= 3, s, "points_per_axis", "must be at least 3")?;
        check(d.horizon > 0.0, s, "horizon", "must be positive")?;
        check(d.radius > 0.0, s, "radius", "must be positive")?;

        let g = &self.grid;
        let s = Some("grid");
        check(g.points_per_axis >= 3, s, "points_per_axis", "must be at least 3")?;
        check(g.steps >= 1, s, "steps", "must be at least 1")?;
        check((0.0..1.0).contains(&g.noise), s, "noise", "must lie in [0, 1)")?;

        let tr = &self.train;
        let s = Some("train");
        check(tr.hidden.iter().all(|&w| w >= 1), s, "hidden", "layer widths must be at least 1")?;
        check(tr.collocation >= 1, s, "collocation", "must be at least 1")?;
        check((0.0..=1.0).contains(&tr.collocation_alpha), s, "collocation_alpha", "must lie in [0, 1]")?;
        check(
            tr.batch_collocation >= 1 && tr.batch_collocation <= tr.collocation,
            s,
            "batch_collocation",
            "must be in 1..=collocation",
        )?;
        check(tr.batch_reference.is_none_or(|b| b >= 1), s, "batch_reference", "must be at least 1")?;
        check(tr.max_iters >= 1, s, "max_iters", "must be at least 1")?;
        check(tr.tol_l1 >= 0.0 && tr.tol_l2 >= 0.0, s, "tol_l1", "thresholds must be nonnegative")?;
        check((0.0..1.0).contains(&tr.ema_decay), s, "ema_decay", "must lie in [0, 1)")?;
        check(tr.lr > 0.0, s, "lr", "must be positive")?;
        check((0.0..1.0).contains(&tr.beta1), s, "beta1", "must lie in [0, 1)")?;
        check((0.0..1.0).contains(&tr.beta2), s, "beta2", "must lie in [0, 1)")?;
        check(tr.eps > 0.0, s, "eps", "must be positive")?;
        check(tr.eval_points_per_axis >= 3, s, "eval_points_per_axis", "must be at least 3")?;

        let s = Some("eval");
        check(self.eval.points_per_axis >= 3, s, "points_per_axis", "must be at least 3")?;
        check(
            self.eval.slice_axes.is_none_or(|[a, b]| a != b),
            s,
            "slice_axes",
            "the two axes must differ",
        )?;

        let s = Some("qh");
        check(!self.qh.grids.is_empty() && self.qh.grids.iter().all(|&n| n >= 3), s, "grids", "need grids with at least 3 points per axis")?;
        let s = Some("thm1");
        check(!self.thm1.grids.is_empty() && self.thm1.grids.iter().all(|&n| n >= 3), s, "grids", "need grids with at least 3 points per axis")?;
        check(self.thm1.zeta > 0.0, s, "zeta", "must be positive")?;
        check(self.thm1.trials >= 1, s, "trials", "must be at least 1")?;
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (or at top level), if written explicitly.
fn locate(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(name.trim().to_string());
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim();
        let hit = match section {
            None => current.is_none() && k == key,
            Some(sec) => {
                (current.as_deref() == Some(sec) && k == key)
                    || (current.is_none() && k == format!("{sec}.{key}"))
            }
        };
        if hit {
            return Some(i + 1);
        }
    }
    section.and_then(|sec| {
        text.lines().position(|l| l.trim() == format!("[{sec}]")).map(|i| i + 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::parse("model = \"ring2d\"\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::new("ring2d"));
    }

    #[test]
    fn validation_error_points_at_the_line() {
        let text = "model = \"ring2d\"\nseed = 3\n\n[trajectory]\nburn_in_time = 1.0\ndt = -0.5\n";
        let err = ExperimentConfig::parse(text).unwrap_err();
        assert_eq!(err.line, Some(6));
        assert!(err.to_string().starts_with("line 6: trajectory.dt"), "{err}");
    }

    #[test]
    fn unknown_model_and_keys_are_rejected() {
        let err = ExperimentConfig::parse("seed = 1\nmodel = \"torus\"\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = ExperimentConfig::parse("model = \"ring2d\"\n[grid]\npoints = 4\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        let err = ExperimentConfig::parse("model = \"ring2d\"\n[grid]\nmethod = \"magic\"\n").unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn serialized_defaults_round_trip() {
        let mut cfg = ExperimentConfig::new("diffusion");
        cfg.dim = Some(1);
        cfg.eval.slice_axes = Some([0, 2]);
        let back = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
