//! CSV and manifest files, always written through a temp file and a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScenarioFile;
use super::ScenarioError;
use crate::bath::KernelSet;
use crate::dynamics::{SimConfig, Trajectory};

pub const TRAJECTORY_HEADER: [&str; 5] = ["t_over_tau", "concurrence", "fidelity", "trace_err", "min_eig"];
pub const SWEEP_HEADER: [&str; 3] = ["lambda", "concurrence_at_tau", "fidelity_at_tau"];
pub const KERNEL_HEADER: [&str; 5] = ["t", "re_T1", "im_T1", "re_T2", "im_T2"];

/// Writes `bytes` to `path` via a sibling temp file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), ScenarioError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| ScenarioError::Io(e.error))?;
    Ok(())
}

fn csv_bytes<R: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: R) -> Result<Vec<u8>, ScenarioError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| ScenarioError::Io(e.into_error()))
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<(), ScenarioError> {
    let tau = traj.config.gate.tau;
    let rows = (0..traj.times.len()).map(|i| {
        vec![
            num(traj.times[i] / tau),
            num(traj.concurrence[i]),
            num(traj.fidelity[i]),
            num(traj.trace_error[i]),
            num(traj.min_eigenvalue[i]),
        ]
    });
    atomic_write(path, &csv_bytes(&TRAJECTORY_HEADER, rows)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub scenario: ScenarioFile,
    pub sim: SimConfig,
}

impl Manifest {
    pub fn new(scenario: &ScenarioFile, sim: &SimConfig) -> Self {
        Manifest {
            name: scenario.name.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.clone().resolved(),
            sim: sim.clone(),
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), ScenarioError> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<Manifest, ScenarioError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub concurrence_at_tau: f64,
    pub fidelity_at_tau: f64,
}

impl SweepRow {
    pub fn failed(lambda: f64) -> Self {
        SweepRow { lambda, concurrence_at_tau: f64::NAN, fidelity_at_tau: f64::NAN }
    }

    pub fn is_failed(&self) -> bool {
        self.concurrence_at_tau.is_nan() || self.fidelity_at_tau.is_nan()
    }
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), ScenarioError> {
    let body = rows.iter().map(|r| vec![num(r.lambda), num(r.concurrence_at_tau), num(r.fidelity_at_tau)]);
    atomic_write(path, &csv_bytes(&SWEEP_HEADER, body)?)
}

fn read_checked(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, ScenarioError> {
    let mut r = csv::Reader::from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(ScenarioError::Format(format!(
            "{}: header {:?}, expected {:?}",
            path.display(),
            found,
            header
        )));
    }
    Ok(r.records().collect::<Result<_, _>>()?)
}

fn field(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<f64, ScenarioError> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| ScenarioError::Format(format!("{}: cannot parse `{raw}` as a number", path.display())))
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, ScenarioError> {
    read_checked(path, &SWEEP_HEADER)?
        .iter()
        .map(|rec| {
            Ok(SweepRow {
                lambda: field(rec, 0, path)?,
                concurrence_at_tau: field(rec, 1, path)?,
                fidelity_at_tau: field(rec, 2, path)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t_over_tau: f64,
    pub concurrence: f64,
    pub fidelity: f64,
    pub trace_err: f64,
    pub min_eig: f64,
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>, ScenarioError> {
    read_checked(path, &TRAJECTORY_HEADER)?
        .iter()
        .map(|rec| {
            Ok(TrajectoryRow {
                t_over_tau: field(rec, 0, path)?,
                concurrence: field(rec, 1, path)?,
                fidelity: field(rec, 2, path)?,
                trace_err: field(rec, 3, path)?,
                min_eig: field(rec, 4, path)?,
            })
        })
        .collect()
}

pub fn write_kernels_csv(path: &Path, kernels: &KernelSet) -> Result<(), ScenarioError> {
    let rows = (0..kernels.len()).map(|i| {
        let (a, b) = (kernels.t1[i], kernels.t2[i]);
        vec![num(kernels.time(i)), num(a.re), num(a.im), num(b.re), num(b.im)]
    });
    atomic_write(path, &csv_bytes(&KERNEL_HEADER, rows)?)
}

/// Which known CSV layout a file uses, judged by its header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsvKind {
    Trajectory,
    Sweep,
    Kernels,
}

pub fn sniff(path: &Path) -> Result<CsvKind, ScenarioError> {
    let mut r = csv::Reader::from_path(path)?;
    let h: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    [(CsvKind::Trajectory, &TRAJECTORY_HEADER[..]), (CsvKind::Sweep, &SWEEP_HEADER[..]), (CsvKind::Kernels, &KERNEL_HEADER[..])]
        .into_iter()
        .find(|(_, want)| h == *want)
        .map(|(k, _)| k)
        .ok_or_else(|| ScenarioError::Format(format!("{}: unrecognized header {h:?}", path.display())))
}

pub fn output_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}{suffix}"))
}
