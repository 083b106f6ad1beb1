//! JSON scenario files and `--set path=value` overrides.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ScenarioError;
use crate::bath::{temperature_rad_from_kelvin, BathSpec, CouplingVector, QuadratureOptions, Topology};
use crate::control::ControlConfig;
use crate::dynamics::{MemoryMethod, SimConfig};
use crate::gate::GateConfig;
use crate::qops::{BasisState, DensityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Temperature {
    /// Temperature in kelvin with the time unit τ in seconds; converted to `k_B T τ/ħ`.
    Kelvin { kelvin: f64, tau_seconds: f64 },
    /// `k_B T/ħ` directly in rad per τ.
    Rad { rad: f64 },
}

impl Temperature {
    pub fn rad_per_tau(&self) -> f64 {
        match *self {
            Temperature::Kelvin { kelvin, tau_seconds } => temperature_rad_from_kelvin(kelvin, tau_seconds),
            Temperature::Rad { rad } => rad,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    /// Same `λ = (λ_ad/2)(x̂ + iŷ) + λ_z ẑ` for both qubits.
    Channels { amplitude_damping: f64, dephasing: f64 },
    /// Explicit complex vectors `[λ_x, λ_y, λ_z]`, each entry `[re, im]`.
    Vectors { qubit_1: [Complex64; 3], qubit_2: [Complex64; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathFile {
    pub eta: f64,
    pub s_exp: f64,
    pub omega_c: f64,
    pub temperature: Temperature,
    pub topology: Topology,
    pub coupling: Coupling,
}

impl BathFile {
    pub fn to_spec(&self) -> BathSpec {
        let (lambda_1, lambda_2) = match self.coupling {
            Coupling::Channels { amplitude_damping, dephasing } => {
                let v = CouplingVector::channels(amplitude_damping, dephasing);
                (v, v)
            }
            Coupling::Vectors { qubit_1, qubit_2 } => (CouplingVector(qubit_1), CouplingVector(qubit_2)),
        };
        BathSpec {
            eta: self.eta,
            s_exp: self.s_exp,
            omega_c: self.omega_c,
            temperature_rad: self.temperature.rad_per_tau(),
            topology: self.topology,
            lambda_1,
            lambda_2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisName {
    UpUp,
    UpDown,
    DownUp,
    DownDown,
}

impl BasisName {
    fn state(self) -> BasisState {
        match self {
            BasisName::UpUp => BasisState::UpUp,
            BasisName::UpDown => BasisState::UpDown,
            BasisName::DownUp => BasisState::DownUp,
            BasisName::DownDown => BasisState::DownDown,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Basis(BasisName),
    Amplitudes([Complex64; 4]),
}

impl InitialState {
    pub fn amplitudes(&self) -> [Complex64; 4] {
        match *self {
            InitialState::Basis(b) => {
                let k = b.state().ket();
                [k[0], k[1], k[2], k[3]]
            }
            InitialState::Amplitudes(a) => a,
        }
    }
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Basis(BasisName::UpDown)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted path into the scenario document, e.g. `bath.coupling.amplitude_damping`.
    pub parameter: String,
    pub values: Vec<f64>,
}

fn default_n_steps() -> usize {
    4000
}

fn default_positivity_tol() -> f64 {
    DensityMatrix::DEFAULT_POSITIVITY_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub gate: GateConfig,
    pub control: ControlConfig,
    pub bath: BathFile,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    /// Defaults to `gate.tau`.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_positivity_tol")]
    pub positivity_tol: f64,
    #[serde(default)]
    pub memory: MemoryMethod,
    #[serde(default)]
    pub quadrature: QuadratureOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl ScenarioFile {
    /// Fills every defaulted field so the echo in a manifest is fully explicit.
    pub fn resolved(mut self) -> Self {
        self.t_max = Some(self.t_max.unwrap_or(self.gate.tau));
        self
    }

    pub fn to_sim(&self) -> Result<SimConfig, ScenarioError> {
        let mut sim = SimConfig::new(self.gate, self.control, self.bath.to_spec());
        sim.initial_state = self.initial_state.amplitudes();
        sim.n_steps = self.n_steps;
        sim.t_max = self.t_max.unwrap_or(self.gate.tau);
        sim.positivity_tol = self.positivity_tol;
        sim.memory = self.memory;
        sim.quadrature = self.quadrature;
        sim.validate().map_err(|e| ScenarioError::Config(format!("scenario {}: {e}", self.name)))?;
        Ok(sim)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("scenario files serialize")
    }

    pub fn from_value(value: Value) -> Result<Self, ScenarioError> {
        serde_json::from_value(value).map_err(|e| ScenarioError::Config(format!("bad scenario document: {e}")))
    }
}

/// Parses `path=value`; the value is read as JSON when possible, otherwise as a string.
pub fn parse_override(spec: &str) -> Result<(String, Value), ScenarioError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| ScenarioError::Config(format!("override `{spec}` is not of the form path=value")))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(ScenarioError::Config(format!("override `{spec}` has an empty path segment")));
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((path.to_string(), value))
}

/// Sets `doc[a][b][c] = value` for `path = "a.b.c"`, creating intermediate objects.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<(), ScenarioError> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = match cur {
            Value::Object(map) => map,
            Value::Null => {
                *cur = Value::Object(Default::default());
                cur.as_object_mut().expect("just created")
            }
            _ => {
                return Err(ScenarioError::Config(format!(
                    "cannot descend into `{}` while setting `{path}`",
                    parts[..i].join(".")
                )))
            }
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("split always yields at least one segment")
}

pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<(), ScenarioError> {
    for o in overrides {
        let (path, value) = parse_override(o)?;
        set_path(doc, &path, value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlMode;
    use serde_json::json;

    fn doc() -> Value {
        json!({
            "name": "demo",
            "control": {"n_x": 14, "n_z": 7, "omega": 6.283185307179586, "mode": "full_protection"},
            "bath": {
                "eta": 0.05, "s_exp": 1.0, "omega_c": 6.283185307179586,
                "temperature": {"kelvin": 0.2, "tau_seconds": 1e-9},
                "topology": "common",
                "coupling": {"amplitude_damping": 1.0, "dephasing": 1.0}
            }
        })
    }

    #[test]
    fn minimal_document_fills_defaults() {
        let f = ScenarioFile::from_value(doc()).unwrap();
        assert_eq!(f.n_steps, 4000);
        assert_eq!(f.t_max, None);
        assert_eq!(f.initial_state, InitialState::Basis(BasisName::UpDown));
        let sim = f.to_sim().unwrap();
        assert_eq!(sim.t_max, 1.0);
        assert!((sim.bath.temperature_rad - 26.18).abs() < 0.01);
        assert_eq!(sim.control.mode, ControlMode::FullProtection);
        assert_eq!(f.clone().resolved().t_max, Some(1.0));
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut d = doc();
        d["bogus"] = json!(1);
        assert!(ScenarioFile::from_value(d).is_err());
        let mut d = doc();
        d["bath"]["etta"] = json!(1);
        assert!(ScenarioFile::from_value(d).is_err());
        let mut d = doc();
        d["control"]["speed"] = json!(1);
        assert!(ScenarioFile::from_value(d).is_err());
    }

    #[test]
    fn alternative_forms() {
        let mut d = doc();
        d["bath"]["temperature"] = json!({"rad": 3.5});
        d["bath"]["topology"] = json!("independent");
        d["bath"]["coupling"] = json!({
            "qubit_1": [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
            "qubit_2": [[0.5, 0.0], [0.0, 0.5], [0.0, 0.0]]
        });
        d["initial_state"] = json!([[0.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let sim = ScenarioFile::from_value(d).unwrap().to_sim().unwrap();
        assert_eq!(sim.bath.temperature_rad, 3.5);
        assert_eq!(sim.bath.lambda_2.0[1], Complex64::new(0.0, 0.5));
        assert_eq!(sim.initial_state[2], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn overrides() {
        let mut d = doc();
        apply_overrides(
            &mut d,
            &["bath.coupling.amplitude_damping=0.3".into(), "memory=separable".into(), "n_steps=800".into()],
        )
        .unwrap();
        let f = ScenarioFile::from_value(d.clone()).unwrap();
        assert_eq!(f.memory, MemoryMethod::Separable);
        assert_eq!(f.n_steps, 800);
        assert_eq!(f.bath.coupling, Coupling::Channels { amplitude_damping: 0.3, dephasing: 1.0 });
        assert!(apply_overrides(&mut d, &["name".into()]).is_err());
        assert!(apply_overrides(&mut d, &["name.inner=1".into()]).is_err());
        assert!(apply_overrides(&mut d, &["a..b=1".into()]).is_err());
        apply_overrides(&mut d, &["quadrature.horizon=2.0".into()]).unwrap();
        assert_eq!(ScenarioFile::from_value(d).unwrap().quadrature.horizon, Some(2.0));
    }

    #[test]
    fn invalid_physics_is_config_error() {
        let mut d = doc();
        d["n_steps"] = json!(10);
        let f = ScenarioFile::from_value(d).unwrap();
        assert!(matches!(f.to_sim(), Err(ScenarioError::Config(_))));
    }

    #[test]
    fn value_round_trip() {
        let f = ScenarioFile::from_value(doc()).unwrap().resolved();
        assert_eq!(ScenarioFile::from_value(f.to_value()).unwrap(), f);
    }
}
