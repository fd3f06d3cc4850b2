use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::damping::DampingSpec;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, MetricSpec};
use crate::inequalities::ObservationSpec;
use crate::semigroup::{EquationKind, Method};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Task {
    SimulateWave,
    SimulateSchrodinger,
    ResolventScan,
    SpectralConstant,
    Poincare,
    DecayReport,
    FullReport,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::SimulateWave => "simulate_wave",
            Task::SimulateSchrodinger => "simulate_schrodinger",
            Task::ResolventScan => "resolvent_scan",
            Task::SpectralConstant => "spectral_constant",
            Task::Poincare => "poincare",
            Task::DecayReport => "decay_report",
            Task::FullReport => "full_report",
        }
    }
}

fn default_modes() -> usize {
    128
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t() -> f64 {
    1000.0
}
fn default_tau_max() -> f64 {
    50.0
}
fn default_grid_points() -> usize {
    512
}
fn default_samples() -> usize {
    200
}
fn default_record_every() -> usize {
    10
}
fn default_k() -> u32 {
    1
}
fn default_method() -> Method {
    Method::Oracle
}
fn default_equation() -> EquationKind {
    EquationKind::Wave
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Spectral truncation `n`.
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Final time.
    #[serde(rename = "T", alias = "t_end", default = "default_t")]
    pub t_end: f64,
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Cutoffs Λ for the spectral constant; defaults to an even grid up to
    /// the largest computed frequency.
    #[serde(alias = "Lambda_grid", default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Generator used by `resolvent_scan`.
    #[serde(default = "default_equation")]
    pub equation: EquationKind,
    /// Log-spaced oracle sample times on `[1, T]`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Stepper output stride.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Resolvent-power index of the decay prediction.
    #[serde(default = "default_k")]
    pub k: u32,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            dt: default_dt(),
            t_end: default_t(),
            tau_max: default_tau_max(),
            grid_points: default_grid_points(),
            lambda_grid: None,
            seed: 0,
            method: default_method(),
            equation: default_equation(),
            samples: default_samples(),
            record_every: default_record_every(),
            k: default_k(),
        }
    }
}

fn default_damping() -> DampingSpec {
    DampingSpec::Constant { value: 0.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub domain: DomainSpec,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default = "default_damping")]
    pub damping: DampingSpec,
    /// Defaults to the damping set `F` (the whole domain when `a ≡ 0`).
    #[serde(default)]
    pub observation: Option<ObservationSpec>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{key} must be positive (got {v})")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::Config(format!("{key} must be at least {min} (got {v})")))
    }
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path.is_empty() || path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("{path}: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        at_least("numerics.modes", n.modes, 1)?;
        positive("numerics.dt", n.dt)?;
        positive("numerics.T", n.t_end)?;
        positive("numerics.tau_max", n.tau_max)?;
        at_least("numerics.grid_points", n.grid_points, 2)?;
        at_least("numerics.samples", n.samples, 2)?;
        at_least("numerics.record_every", n.record_every, 1)?;
        if n.k == 0 {
            return Err(Error::Config("numerics.k must be positive (got 0)".into()));
        }
        if let Some(grid) = &n.lambda_grid {
            if grid.is_empty() {
                return Err(Error::Config("numerics.lambda_grid must not be empty".into()));
            }
            for (i, &l) in grid.iter().enumerate() {
                positive(&format!("numerics.lambda_grid[{i}]"), l)?;
            }
            if grid.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config("numerics.lambda_grid must be strictly increasing".into()));
            }
        }
        self.domain.validate().map_err(|e| Error::Config(format!("domain: {e}")))?;
        self.metric
            .validate(self.domain.x_length())
            .map_err(|e| Error::Config(format!("metric: {e}")))?;
        let max_modes = self.max_modes();
        if n.modes > max_modes {
            return Err(Error::Config(format!(
                "numerics.modes must not exceed the {max_modes} free degrees of freedom"
            )));
        }
        Ok(())
    }

    /// Free degrees of freedom of the configured mesh.
    fn max_modes(&self) -> usize {
        let ne = self.domain.elements;
        let per_axis = match self.domain.boundary {
            crate::geometry::Boundary::Dirichlet => ne.saturating_sub(1),
            crate::geometry::Boundary::Neumann => ne + 1,
            crate::geometry::Boundary::Periodic => ne,
        };
        per_axis.pow(self.domain.dimension() as u32)
    }

    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        override_dir
            .map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("decaylab_out"))
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_json(&text)
}
