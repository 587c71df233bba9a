//! JSON run configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nullwave::experiments::{ConvergencePlan, SweepMode, SweepPlan};
use nullwave::pulse::calibrate_amplitude;
use nullwave::{AngularMode, CapMode, DoubleNullGrid, NullFormCoeffs, NullFormSpec, PulseProfile, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// A configuration problem, reported with the offending field path.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: &str, message: impl fmt::Display) -> Self {
        Self {
            path: path.to_string(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub u0: f64,
    pub delta: f64,
    pub n_u: usize,
    pub n_ubar: usize,
    pub angular_mode: AngularMode,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
}

fn default_n_theta() -> usize {
    129
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            u0: -4.0,
            delta: 0.1,
            n_u: 192,
            n_ubar: 32,
            angular_mode: AngularMode::Spherical,
            n_theta: default_n_theta(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub amplitude: Option<f64>,
    pub target_energy: Option<f64>,
    pub cap_radius: Option<f64>,
    /// `"sqrt_delta"` or `"uniform"`.
    pub cap_mode: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullFormSection {
    #[serde(default)]
    pub c0: f64,
    /// `[α, β, coefficient]` entries of the antisymmetric forms `Q_{αβ}`.
    #[serde(default)]
    pub pairs: Vec<(usize, usize, f64)>,
}

impl Default for NullFormSection {
    fn default() -> Self {
        Self { c0: 1.0, pairs: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub corrector_iterations: usize,
    pub corrector_tol: f64,
    pub blowup_threshold: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            corrector_iterations: d.corrector_iterations,
            corrector_tol: d.corrector_tol,
            blowup_threshold: d.blowup_threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub sweep: SweepPlan,
    pub convergence: ConvergencePlan,
    pub u0_list: Vec<f64>,
    /// δ used by the u₀ study.
    pub u0_delta: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            sweep: SweepPlan::default(),
            convergence: ConvergencePlan::default(),
            u0_list: vec![-4.0, -8.0, -16.0],
            u0_delta: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub null_form: NullFormSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub worker_count: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("nullwave-out")
}

fn default_workers() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            grid: GridSection::default(),
            profile: ProfileSection::default(),
            null_form: NullFormSection::default(),
            solver: SolverSection::default(),
            experiment: ExperimentSection::default(),
            output_dir: default_output_dir(),
            worker_count: default_workers(),
            rng_seed: 0,
        }
    }
}

/// Everything a single march needs, checked against each other.
pub struct RunSetup {
    pub grid: DoubleNullGrid,
    pub spec: NullFormSpec,
    pub profile: PulseProfile,
    pub solver: SolverConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path.is_empty() { "." } else { &path }, e.into_inner())
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical serialization, the input of the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn cap_mode(&self, mode: AngularMode) -> Result<CapMode, ConfigError> {
        let p = &self.profile;
        match (p.cap_radius, p.cap_mode.as_deref()) {
            (Some(_), Some(_)) => Err(ConfigError::new("profile", "give either cap_radius or cap_mode, not both")),
            (Some(c), None) => Ok(CapMode::Fixed(c)),
            (None, Some("sqrt_delta")) => Ok(CapMode::SqrtDelta),
            (None, Some("uniform")) => Ok(CapMode::Uniform),
            (None, Some(other)) => Err(ConfigError::new(
                "profile.cap_mode",
                format!("unknown cap mode `{other}`, expected sqrt_delta or uniform"),
            )),
            (None, None) if mode == AngularMode::Spherical => Ok(CapMode::Uniform),
            (None, None) => Err(ConfigError::new("profile", "axisym runs need cap_radius or cap_mode")),
        }
    }

    /// Validates the single-run sections and builds the solver inputs.
    pub fn run_setup(&self) -> Result<RunSetup, ConfigError> {
        let g = &self.grid;
        let grid = DoubleNullGrid::new(g.u0, g.delta, g.n_u, g.n_ubar, g.angular_mode, g.n_theta)
            .map_err(|e| ConfigError::new("grid", e))?;
        let q = NullFormCoeffs::from_entries(self.null_form.c0, &self.null_form.pairs)
            .map_err(|e| ConfigError::new("null_form.pairs", e))?;
        let spec = NullFormSpec::new(q, g.angular_mode).map_err(|e| ConfigError::new("null_form", e))?;
        let solver = SolverConfig {
            corrector_iterations: self.solver.corrector_iterations,
            corrector_tol: self.solver.corrector_tol,
            blowup_threshold: self.solver.blowup_threshold,
            ..SolverConfig::default()
        };
        solver.validate(&grid).map_err(|e| ConfigError::new("solver", e))?;

        let cap = self.cap_mode(g.angular_mode)?;
        let profile = match (self.profile.amplitude, self.profile.target_energy) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new("profile", "give either amplitude or target_energy, not both"))
            }
            (Some(a), None) => PulseProfile::new(a, cap).map_err(|e| ConfigError::new("profile.amplitude", e))?,
            (None, e0) => {
                let e0 = e0.unwrap_or(1.0);
                let base = PulseProfile::new(1.0, cap).map_err(|e| ConfigError::new("profile", e))?;
                calibrate_amplitude(&base, e0, g.delta, g.u0, g.angular_mode)
                    .map_err(|e| ConfigError::new("profile.target_energy", e))?
            }
        };
        nullwave::pulse::build_data(&profile, &grid).map_err(|e| ConfigError::new("profile", e))?;
        Ok(RunSetup {
            grid,
            spec,
            profile,
            solver,
        })
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan, ConfigError> {
        let plan = self.experiment.sweep.clone();
        plan.validate().map_err(|e| ConfigError::new("experiment.sweep", e))?;
        Ok(plan)
    }

    /// The sweep plan switched to the shrinking-cap focusing setting.
    pub fn focus_plan(&self) -> Result<SweepPlan, ConfigError> {
        let plan = SweepPlan {
            mode: SweepMode::ShrinkingCap,
            ..self.experiment.sweep.clone()
        };
        plan.validate().map_err(|e| ConfigError::new("experiment.sweep", e))?;
        Ok(plan)
    }

    pub fn u0_plan(&self) -> Result<SweepPlan, ConfigError> {
        let plan = SweepPlan {
            deltas: vec![self.experiment.u0_delta],
            ..self.experiment.sweep.clone()
        };
        plan.validate().map_err(|e| ConfigError::new("experiment.u0_delta", e))?;
        let l = &self.experiment.u0_list;
        if l.len() < 2 || l.windows(2).any(|w| w[1] > w[0]) || l.iter().any(|u| *u >= -1.0) {
            return Err(ConfigError::new(
                "experiment.u0_list",
                "needs at least two non-increasing values below -1",
            ));
        }
        Ok(plan)
    }

    pub fn convergence_plan(&self) -> Result<ConvergencePlan, ConfigError> {
        let plan = self.experiment.convergence.clone();
        if plan.levels < 3 {
            return Err(ConfigError::new("experiment.convergence.levels", "at least 3 levels required"));
        }
        Ok(plan)
    }

    /// `output_dir`, re-rooted under `root` when it is relative.
    pub fn output_path(&self, root: Option<&Path>) -> PathBuf {
        match root {
            Some(r) if self.output_dir.is_relative() => r.join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"schema_version": 1}"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c, RunConfig::default());
        assert!(c.run_setup().is_ok());
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let e = RunConfig::from_json(r#"{"schema_version": 1, "grid": {"u0": -4, "delta": 0.1, "n_u": 8, "n_ubar": 32, "angular_mode": "spherical", "dleta": 1}}"#)
            .unwrap_err();
        assert!(e.path.starts_with("grid"), "{e}");
        assert!(e.message.contains("dleta"));
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let e = RunConfig::from_json(r#"{"schema_version": 7}"#).unwrap_err();
        assert_eq!(e.path, "schema_version");
    }

    #[test]
    fn spatial_form_is_not_admissible_in_spherical_mode() {
        let mut c = RunConfig::default();
        c.null_form.pairs = vec![(1, 2, 1.0)];
        let e = c.run_setup().err().unwrap();
        assert_eq!(e.path, "null_form");
        assert!(e.message.contains("null form not admissible in spherical mode"));
    }

    #[test]
    fn resolution_rule_is_checked_before_compute() {
        let mut c = RunConfig::default();
        c.grid.n_ubar = 4;
        assert_eq!(c.run_setup().err().unwrap().path, "solver");
    }

    #[test]
    fn profile_conflicts_are_reported() {
        let mut c = RunConfig::default();
        c.profile.amplitude = Some(1.0);
        c.profile.target_energy = Some(1.0);
        assert_eq!(c.run_setup().err().unwrap().path, "profile");
        let mut c = RunConfig::default();
        c.grid.angular_mode = AngularMode::Axisym;
        assert_eq!(c.run_setup().err().unwrap().path, "profile");
    }

    #[test]
    fn relative_output_is_rerooted() {
        let c = RunConfig::default();
        assert_eq!(c.output_path(Some(Path::new("/tmp/x"))), PathBuf::from("/tmp/x/nullwave-out"));
        assert_eq!(c.output_path(None), PathBuf::from("nullwave-out"));
    }
}
