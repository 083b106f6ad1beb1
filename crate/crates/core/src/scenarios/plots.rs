//! gnuplot scripts for trajectory and sweep CSVs. Nothing is plotted in-process.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::output::{atomic_write, sniff, CsvKind};
use super::ScenarioError;

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn family(stem: &str, kind: CsvKind) -> &'static str {
    match kind {
        CsvKind::Sweep if stem.starts_with("fig3") => "fig3",
        CsvKind::Sweep => "sweep",
        _ if stem.starts_with("fig1_") => "fig1",
        _ if stem.starts_with("fig2_") => "fig2",
        _ => "trajectories",
    }
}

fn quoted(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', "''"))
}

fn plot_line(files: &[(PathBuf, String)], column: usize) -> String {
    let parts: Vec<String> = files
        .iter()
        .map(|(p, label)| format!("{} using 1:{column} with lines title '{}'", quoted(p), label.replace('_', "\\_")))
        .collect();
    format!("plot {}\n", parts.join(", \\\n     "))
}

fn header(out: &mut String, name: &str, width: u32, height: u32, layout: &str) {
    let _ = writeln!(out, "# generated by cdd-sim plots");
    let _ = writeln!(out, "set terminal pngcairo size {width},{height}");
    let _ = writeln!(out, "set output '{name}.png'");
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set key autotitle columnhead");
    let _ = writeln!(out, "set multiplot layout {layout}");
}

fn trajectory_script(name: &str, files: &[(PathBuf, String)]) -> String {
    let (common, independent): (Vec<_>, Vec<_>) = files.iter().cloned().partition(|(_, l)| l.contains("common"));
    let mut s = String::new();
    header(&mut s, name, 1200, 900, "2,2");
    let rows = [(&independent, "independent", 'a'), (&common, "common", 'c')];
    for (group, topo, first) in rows {
        for (offset, (column, metric)) in [(2, "concurrence"), (3, "fidelity")].into_iter().enumerate() {
            let label = (first as u8 + offset as u8) as char;
            let _ = writeln!(s, "set title '({label}) {metric}, {topo}'");
            let _ = writeln!(s, "set xlabel 't/τ'");
            let _ = writeln!(s, "set ylabel '{metric}'");
            let _ = writeln!(s, "set yrange [0:1.05]");
            if group.is_empty() {
                let _ = writeln!(s, "set label 1 'no data' at graph 0.5, graph 0.5 center");
                let _ = writeln!(s, "plot NaN notitle");
                let _ = writeln!(s, "unset label 1");
            } else {
                s.push_str(&plot_line(group, column));
            }
        }
    }
    s.push_str("unset multiplot\n");
    s
}

fn sweep_script(name: &str, files: &[(PathBuf, String)]) -> String {
    let mut s = String::new();
    header(&mut s, name, 1200, 450, "1,2");
    for (label, column, metric) in [('a', 2, "concurrence"), ('b', 3, "fidelity")] {
        let _ = writeln!(s, "set title '({label}) {metric} at t = τ'");
        let _ = writeln!(s, "set xlabel 'λ_{{ad}}'");
        let _ = writeln!(s, "set ylabel '{metric}'");
        s.push_str(&plot_line(files, column));
    }
    s.push_str("unset multiplot\n");
    s
}

/// Writes one `.gp` script per figure family found among `csvs` into `out_dir`.
///
/// Trajectory CSVs get the 2×2 layout (concurrence and fidelity, independent
/// then common); sweep CSVs get two panels against the swept coupling.
pub fn emit_plots(csvs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    if csvs.is_empty() {
        return Err(ScenarioError::Plot("no CSV files given".into()));
    }
    let mut groups: BTreeMap<&'static str, (CsvKind, Vec<(PathBuf, String)>)> = BTreeMap::new();
    for path in csvs {
        if !path.is_file() {
            return Err(ScenarioError::Plot(format!("{} does not exist", path.display())));
        }
        let kind = sniff(path)?;
        if kind == CsvKind::Kernels {
            return Err(ScenarioError::Plot(format!("{}: kernel tables are not plotted", path.display())));
        }
        let abs = std::fs::canonicalize(path)?;
        let st = stem(path);
        groups.entry(family(&st, kind)).or_insert((kind, Vec::new())).1.push((abs, st));
    }
    let mut written = Vec::new();
    for (name, (kind, mut files)) in groups {
        files.sort();
        files.dedup();
        let text = match kind {
            CsvKind::Sweep => sweep_script(name, &files),
            _ => trajectory_script(name, &files),
        };
        let path = out_dir.join(format!("{name}.gp"));
        atomic_write(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
