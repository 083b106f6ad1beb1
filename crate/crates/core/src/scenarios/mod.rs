//! Experiment harness: presets, config ingestion, runs, sweeps, checks and plot scripts.

pub mod check;
pub mod config;
pub mod output;
pub mod plots;
pub mod presets;
pub mod sweep;

use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use crate::dynamics::{build_kernels, integrate_with_kernels, DynamicsError, SimConfig, Trajectory};
pub use config::ScenarioFile;
use output::{output_path, write_kernels_csv, write_manifest, write_trajectory_csv, Manifest};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{0}")]
    Plot(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) | ScenarioError::Json(_) => EXIT_CONFIG,
            ScenarioError::Dynamics(
                DynamicsError::Config(_) | DynamicsError::Control(_) | DynamicsError::KernelMismatch(_),
            ) => EXIT_CONFIG,
            ScenarioError::Dynamics(DynamicsError::Bath(crate::bath::BathError::InvalidSpec(_))) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

/// A scenario document together with the simulation config it resolves to.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub sim: SimConfig,
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let file = file.resolved();
        let sim = file.to_sim()?;
        Ok(Scenario { file, sim })
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }
}

/// Looks `source` up as a preset, a preset group, or a JSON file path, then applies overrides.
pub fn resolve(source: &str, overrides: &[String]) -> Result<Vec<Scenario>, ScenarioError> {
    let docs: Vec<Value> = if let Some(p) = presets::find(source) {
        vec![p.to_value()]
    } else if let Some(members) = presets::group(source) {
        members.iter().map(ScenarioFile::to_value).collect()
    } else {
        let path = Path::new(source);
        if !path.exists() {
            return Err(ScenarioError::Config(format!("`{source}` is neither a preset, a group nor a file")));
        }
        let text = std::fs::read_to_string(path)?;
        vec![serde_json::from_str(&text).map_err(|e| ScenarioError::Config(format!("{source}: {e}")))?]
    };
    docs.into_iter()
        .map(|mut doc| {
            config::apply_overrides(&mut doc, overrides)?;
            Scenario::from_file(ScenarioFile::from_value(doc)?)
        })
        .collect()
}

#[derive(Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Integrates one scenario and writes `<name>.csv` and `<name>.manifest.json`.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunOutput, ScenarioError> {
    let kernels = build_kernels(&scenario.sim)?;
    let trajectory = integrate_with_kernels(&scenario.sim, &kernels)?;
    if trajectory.positivity_violations > 0 {
        log::warn!(
            "{}: {} grid points below the positivity tolerance",
            scenario.name(),
            trajectory.positivity_violations
        );
    }
    let csv = output_path(out_dir, scenario.name(), ".csv");
    let manifest = output_path(out_dir, scenario.name(), ".manifest.json");
    write_trajectory_csv(&csv, &trajectory)?;
    write_manifest(&manifest, &Manifest::new(&scenario.file, &scenario.sim))?;
    Ok(RunOutput { trajectory, csv, manifest })
}

/// Writes the kernel table of a scenario to `<name>_kernels.csv`.
pub fn kernels(scenario: &Scenario, out_dir: &Path) -> Result<PathBuf, ScenarioError> {
    let table = build_kernels(&scenario.sim)?;
    let path = output_path(out_dir, scenario.name(), "_kernels.csv");
    write_kernels_csv(&path, &table)?;
    Ok(path)
}

/// Thread cap from `CDD_SIM_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>, ScenarioError> {
    match std::env::var("CDD_SIM_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ScenarioError::Config(format!("CDD_SIM_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}
