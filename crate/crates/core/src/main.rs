use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cdd_sim::scenarios::check::{check, CheckOptions};
use cdd_sim::scenarios::plots::emit_plots;
use cdd_sim::scenarios::sweep::run_sweep;
use cdd_sim::scenarios::{self, presets, resolve, ScenarioError, EXIT_FAILURE};

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "cdd-sim", version, about = "Born master-equation simulator for a decoupled √SWAP gate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Memory {
    Direct,
    Separable,
}

#[derive(clap::Args)]
struct Source {
    /// Preset name, preset group (fig1, fig2, fig3_sweep) or path to a JSON scenario
    source: String,
    /// Dotted-path override, e.g. --set bath.eta=0.02 (repeatable)
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long, value_enum)]
    memory: Option<Memory>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Source {
    fn overrides(&self) -> Vec<String> {
        let mut all = self.overrides.clone();
        if let Some(n) = self.n_steps {
            all.push(format!("n_steps={n}"));
        }
        if let Some(m) = self.memory {
            all.push(format!("memory={}", match m {
                Memory::Direct => "direct",
                Memory::Separable => "separable",
            }));
        }
        all
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario (or a group) and write <name>.csv plus a manifest
    Run(Source),
    /// Run the sweep block of a scenario and write <name>_sweep.csv
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Parallel sweep points (default: CDD_SIM_THREADS, else all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write the bath kernel table of a scenario to <name>_kernels.csv
    Kernels(Source),
    /// Run the invariant suite and print a JSON report
    Check {
        /// Also write the report to this file
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Emit gnuplot scripts for trajectory or sweep CSVs
    Plots {
        csvs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// List presets, or print one as a JSON scenario document
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

fn execute(cli: Cli) -> Result<i32, ScenarioError> {
    match cli.command {
        Command::Run(src) => {
            for s in resolve(&src.source, &src.overrides())? {
                let out = scenarios::run(&s, &src.out)?;
                let t = &out.trajectory;
                let i = t.index_at(s.sim.gate.tau);
                let f_min = t.fidelity.iter().copied().fold(f64::INFINITY, f64::min);
                say!(
                    "{}: C(τ) = {:.6}  F(τ) = {:.6}  min F = {:.6}  positivity breaches = {}  -> {}",
                    s.name(),
                    t.concurrence[i],
                    t.fidelity[i],
                    f_min,
                    t.positivity_violations,
                    out.csv.display()
                );
            }
            Ok(0)
        }
        Command::Sweep { source, threads } => {
            let mut code = 0;
            for s in resolve(&source.source, &source.overrides())? {
                let out = run_sweep(&s, &source.out, threads)?;
                for r in &out.rows {
                    say!("{}: λ = {:.3}  C(τ) = {:.6}  F(τ) = {:.6}", s.name(), r.lambda, r.concurrence_at_tau, r.fidelity_at_tau);
                }
                for (v, e) in &out.failures {
                    eprintln!("{}: point {v} failed: {e}", s.name());
                }
                if !out.failures.is_empty() {
                    code = EXIT_FAILURE;
                }
                say!("-> {}", out.csv.display());
            }
            Ok(code)
        }
        Command::Kernels(src) => {
            for s in resolve(&src.source, &src.overrides())? {
                say!("{}", scenarios::kernels(&s, &src.out)?.display());
            }
            Ok(0)
        }
        Command::Check { report } => {
            let r = check(&CheckOptions::default());
            let text = serde_json::to_string_pretty(&r)?;
            say!("{text}");
            if let Some(path) = report {
                scenarios::output::atomic_write(&path, format!("{text}\n").as_bytes())?;
            }
            Ok(if r.passed { 0 } else { EXIT_FAILURE })
        }
        Command::Plots { csvs, out } => {
            for p in emit_plots(&csvs, &out)? {
                say!("{}", p.display());
            }
            Ok(0)
        }
        Command::Presets { show } => {
            match show {
                Some(name) => {
                    let p = presets::find(&name)
                        .ok_or_else(|| ScenarioError::Config(format!("unknown preset `{name}`")))?;
                    say!("{}", serde_json::to_string_pretty(&p.resolved())?);
                }
                None => {
                    for p in presets::all() {
                        say!("{}", p.name);
                    }
                    for g in presets::GROUPS {
                        say!("{g} (group)");
                    }
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Ok(Some(n)) = scenarios::thread_cap() {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
