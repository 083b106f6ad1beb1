//! One integration per sweep value, run in parallel; failures become NaN rows.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{set_path, ScenarioFile};
use super::output::{output_path, write_sweep_csv, SweepRow};
use super::{thread_cap, Scenario, ScenarioError};
use crate::bath::KernelSet;
use crate::dynamics::{build_kernels, integrate_with_kernels, SimConfig};

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// `(value, message)` for every point that did not produce a trajectory.
    pub failures: Vec<(f64, String)>,
    pub csv: PathBuf,
}

/// Kernel tables depend only on the spectrum, temperature and grid.
fn same_kernels(a: &SimConfig, b: &SimConfig) -> bool {
    let (x, y) = (&a.bath, &b.bath);
    x.eta == y.eta
        && x.s_exp == y.s_exp
        && x.omega_c == y.omega_c
        && x.temperature_rad == y.temperature_rad
        && a.n_steps == b.n_steps
        && a.t_max == b.t_max
        && a.quadrature == b.quadrature
}

fn point(base: &ScenarioFile, parameter: &str, value: f64) -> Result<SimConfig, ScenarioError> {
    let mut doc = base.to_value();
    set_path(&mut doc, parameter, serde_json::json!(value))?;
    let mut file = ScenarioFile::from_value(doc)?;
    file.sweep = None;
    file.to_sim()
}

fn evaluate(sim: &SimConfig, shared: Option<&KernelSet>, value: f64) -> Result<SweepRow, ScenarioError> {
    let own;
    let kernels = match shared {
        Some(k) => k,
        None => {
            own = build_kernels(sim)?;
            &own
        }
    };
    let traj = integrate_with_kernels(sim, kernels)?;
    let i = traj.index_at(sim.gate.tau);
    Ok(SweepRow { lambda: value, concurrence_at_tau: traj.concurrence[i], fidelity_at_tau: traj.fidelity[i] })
}

/// Runs the sweep block of `scenario` and writes `<name>_sweep.csv`.
///
/// `threads` caps parallelism; `None` falls back to `CDD_SIM_THREADS`, then to rayon's default.
pub fn run_sweep(scenario: &Scenario, out_dir: &Path, threads: Option<usize>) -> Result<SweepOutput, ScenarioError> {
    let spec = scenario
        .file
        .sweep
        .clone()
        .ok_or_else(|| ScenarioError::Config(format!("scenario {} has no sweep block", scenario.name())))?;
    if spec.values.is_empty() {
        return Err(ScenarioError::Config("sweep values list is empty".into()));
    }
    let configs: Vec<Result<SimConfig, ScenarioError>> =
        spec.values.iter().map(|&v| point(&scenario.file, &spec.parameter, v)).collect();
    if let Some(Err(e)) = configs.first() {
        if e.exit_code() == super::EXIT_CONFIG {
            return Err(ScenarioError::Config(format!("sweep parameter `{}`: {e}", spec.parameter)));
        }
    }
    let shared = if configs.iter().flatten().all(|c| same_kernels(c, &scenario.sim)) {
        Some(build_kernels(&scenario.sim)?)
    } else {
        None
    };

    let work = || -> Vec<Result<SweepRow, ScenarioError>> {
        configs
            .par_iter()
            .zip(spec.values.par_iter())
            .map(|(cfg, &v)| cfg.as_ref().map_err(|e| ScenarioError::Config(e.to_string())).and_then(|c| evaluate(c, shared.as_ref(), v)))
            .collect()
    };
    let results = match threads.or(thread_cap()?) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ScenarioError::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (res, &v) in results.into_iter().zip(&spec.values) {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::warn!("{}: sweep point {v} failed: {e}", scenario.name());
                failures.push((v, e.to_string()));
                rows.push(SweepRow::failed(v));
            }
        }
    }
    let csv = output_path(out_dir, scenario.name(), "_sweep.csv");
    write_sweep_csv(&csv, &rows)?;
    Ok(SweepOutput { rows, failures, csv })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(x, y)`, skipping NaN points.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| a.is_finite() && b.is_finite()).map(|(a, b)| (*a, *b)).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Some(LinearFit { slope, intercept, r_squared })
}
