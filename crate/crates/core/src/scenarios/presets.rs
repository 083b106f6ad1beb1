//! Named parameter sets for the standard experiments.

use std::f64::consts::PI;

use super::config::{BathFile, Coupling, InitialState, ScenarioFile, SweepSpec, Temperature};
use crate::bath::{QuadratureOptions, Topology};
use crate::control::{ControlConfig, ControlMode};
use crate::dynamics::MemoryMethod;
use crate::gate::GateConfig;
use crate::qops::DensityMatrix;

pub const ETA: f64 = 0.05;
pub const OMEGA_C: f64 = 2.0 * PI;
pub const KELVIN: f64 = 0.2;
pub const TAU_SECONDS: f64 = 1e-9;
pub const N_X: i32 = 14;
pub const N_Z: i32 = 7;
pub const CONTROL_OMEGA: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spectrum {
    Ohmic,
    SuperOhmic,
}

impl Spectrum {
    pub const BOTH: [Spectrum; 2] = [Spectrum::Ohmic, Spectrum::SuperOhmic];

    pub fn exponent(self) -> f64 {
        match self {
            Spectrum::Ohmic => 1.0,
            Spectrum::SuperOhmic => 3.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Spectrum::Ohmic => "ohmic",
            Spectrum::SuperOhmic => "superohmic",
        }
    }
}

pub const TOPOLOGIES: [Topology; 2] = [Topology::Independent, Topology::Common];

pub fn topology_label(t: Topology) -> &'static str {
    match t {
        Topology::Common => "common",
        Topology::Independent => "independent",
    }
}

fn control(mode: ControlMode) -> ControlConfig {
    let n_z = if mode == ControlMode::FullProtection { N_Z } else { 0 };
    let n_x = if mode == ControlMode::Off { 0 } else { N_X };
    ControlConfig { n_x, n_z, omega: CONTROL_OMEGA, mode }
}

fn bath(spectrum: Spectrum, topology: Topology, eta: f64) -> BathFile {
    BathFile {
        eta,
        s_exp: spectrum.exponent(),
        omega_c: OMEGA_C,
        temperature: Temperature::Kelvin { kelvin: KELVIN, tau_seconds: TAU_SECONDS },
        topology,
        coupling: Coupling::Channels { amplitude_damping: 1.0, dephasing: 1.0 },
    }
}

fn scenario(name: String, control: ControlConfig, bath: BathFile) -> ScenarioFile {
    let gate = GateConfig::default();
    ScenarioFile {
        name,
        gate,
        control,
        bath,
        initial_state: InitialState::default(),
        n_steps: 4000,
        t_max: Some(gate.tau),
        positivity_tol: DensityMatrix::DEFAULT_POSITIVITY_TOL,
        memory: MemoryMethod::Direct,
        quadrature: QuadratureOptions::default(),
        sweep: None,
    }
}

pub fn protected(spectrum: Spectrum, topology: Topology) -> ScenarioFile {
    let name = format!("fig1_protected_{}_{}", spectrum.label(), topology_label(topology));
    scenario(name, control(ControlMode::FullProtection), bath(spectrum, topology, ETA))
}

pub fn unprotected(spectrum: Spectrum, topology: Topology) -> ScenarioFile {
    let name = format!("fig1_unprotected_{}_{}", spectrum.label(), topology_label(topology));
    scenario(name, control(ControlMode::Off), bath(spectrum, topology, ETA))
}

pub fn residual(spectrum: Spectrum, topology: Topology) -> ScenarioFile {
    let name = format!("fig2_residual_{}_{}", spectrum.label(), topology_label(topology));
    scenario(name, control(ControlMode::DephasingOnly), bath(spectrum, topology, ETA))
}

pub const SWEEP_PARAMETER: &str = "bath.coupling.amplitude_damping";

pub fn sweep_values() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn amplitude_sweep(spectrum: Spectrum, topology: Topology) -> ScenarioFile {
    let name = format!("fig3_sweep_{}_{}", topology_label(topology), spectrum.label());
    let mut s = scenario(name, control(ControlMode::DephasingOnly), bath(spectrum, topology, ETA));
    s.sweep = Some(SweepSpec { parameter: SWEEP_PARAMETER.into(), values: sweep_values() });
    s
}

pub fn noiseless() -> ScenarioFile {
    scenario("noiseless".into(), control(ControlMode::FullProtection), bath(Spectrum::Ohmic, Topology::Independent, 0.0))
}

pub fn all() -> Vec<ScenarioFile> {
    let mut out = Vec::new();
    for build in [protected, unprotected, residual, amplitude_sweep] {
        for spectrum in Spectrum::BOTH {
            for topology in TOPOLOGIES {
                out.push(build(spectrum, topology));
            }
        }
    }
    out.push(noiseless());
    out
}

pub fn find(name: &str) -> Option<ScenarioFile> {
    all().into_iter().find(|s| s.name == name)
}

pub const GROUPS: [&str; 3] = ["fig1", "fig2", "fig3_sweep"];

/// Members of a group name such as `fig1`, or `None` for an unknown group.
pub fn group(name: &str) -> Option<Vec<ScenarioFile>> {
    let prefix = match name {
        "fig1" => "fig1_",
        "fig2" => "fig2_",
        "fig3_sweep" => "fig3_sweep_",
        _ => return None,
    };
    Some(all().into_iter().filter(|s| s.name.starts_with(prefix)).collect())
}
