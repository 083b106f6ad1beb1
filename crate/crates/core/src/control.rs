//! Continuous decoupling field: a static x field plus a field rotating in the yz plane.
//!
//! The single-qubit control propagator is
//! `U(t) = exp(-iωt n_x σ_x) exp(-iωt n_z σ_z)`, applied identically to both
//! qubits. Its adjoint action on the Pauli vector is a rotation `R(t) ∈ SO(3)`
//! defined by `U_c† σ_m U_c = Σ_n R_{m,n}(t) σ_n`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qops::{pauli_rotation, Axis, TwoQubitOperator};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("full protection needs nonzero n_x and n_z with |n_x| != |n_z| (got n_x={n_x}, n_z={n_z})")]
    InvalidFullProtection { n_x: i32, n_z: i32 },
    #[error("dephasing-only protection needs n_x != 0 and n_z = 0 (got n_x={n_x}, n_z={n_z})")]
    InvalidDephasingOnly { n_x: i32, n_z: i32 },
    #[error("control frequency must be positive and finite (got {0})")]
    InvalidOmega(f64),
    #[error("decoupling quadrature needs at least 64 points (got {0})")]
    TooFewQuadraturePoints(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    FullProtection,
    DephasingOnly,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub n_x: i32,
    pub n_z: i32,
    /// Angular frequency in rad per τ; the cycle time is `2π/omega`.
    pub omega: f64,
    pub mode: ControlMode,
}

impl ControlConfig {
    pub fn full_protection(n_x: i32, n_z: i32, omega: f64) -> Result<Self, ControlError> {
        let cfg = ControlConfig { n_x, n_z, omega, mode: ControlMode::FullProtection };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dephasing_only(n_x: i32, omega: f64) -> Result<Self, ControlError> {
        let cfg = ControlConfig { n_x, n_z: 0, omega, mode: ControlMode::DephasingOnly };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn off() -> Self {
        ControlConfig { n_x: 0, n_z: 0, omega: 2.0 * PI, mode: ControlMode::Off }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(ControlError::InvalidOmega(self.omega));
        }
        let (n_x, n_z) = (self.n_x, self.n_z);
        match self.mode {
            ControlMode::FullProtection => {
                if n_x == 0 || n_z == 0 || n_x.abs() == n_z.abs() {
                    return Err(ControlError::InvalidFullProtection { n_x, n_z });
                }
            }
            ControlMode::DephasingOnly => {
                if n_x == 0 || n_z != 0 {
                    return Err(ControlError::InvalidDephasingOnly { n_x, n_z });
                }
            }
            ControlMode::Off => {}
        }
        Ok(())
    }

    pub fn cycle_time(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Multipliers actually applied, after the mode is taken into account.
    fn effective_n(&self) -> (f64, f64) {
        match self.mode {
            ControlMode::FullProtection => (self.n_x as f64, self.n_z as f64),
            ControlMode::DephasingOnly => (self.n_x as f64, 0.0),
            ControlMode::Off => (0.0, 0.0),
        }
    }

    /// Largest of `|n_x|`, `|n_z|` and 1, used to size time grids.
    pub fn fastest_multiplier(&self) -> f64 {
        let (nx, nz) = self.effective_n();
        nx.abs().max(nz.abs()).max(1.0)
    }
}

/// Field vector `Ω(t)` in rad per τ.
pub fn omega_field(t: f64, cfg: &ControlConfig) -> Vector3<f64> {
    let (nx, nz) = cfg.effective_n();
    let w = cfg.omega;
    let (s, c) = (nx * w * t).sin_cos();
    Vector3::new(nx * w, -nz * w * s, nz * w * c)
}

pub fn uc_single(t: f64, cfg: &ControlConfig) -> Matrix2<Complex64> {
    let (nx, nz) = cfg.effective_n();
    if cfg.mode == ControlMode::Off {
        return Matrix2::identity();
    }
    let wt = cfg.omega * t;
    pauli_rotation(Axis::X, wt * nx) * pauli_rotation(Axis::Z, wt * nz)
}

/// Two-qubit control propagator `U^(2) U^(1)`.
pub fn uc(t: f64, cfg: &ControlConfig) -> TwoQubitOperator {
    let u = uc_single(t, cfg);
    TwoQubitOperator::kron(&u, &u)
}

/// Rotation matrix `R(t)`, rows indexed by the lab axis `m`, columns by `n`.
pub fn rotation_matrix(t: f64, cfg: &ControlConfig) -> Matrix3<f64> {
    let (nx, nz) = cfg.effective_n();
    let wt = cfg.omega * t;
    let (sx, cx) = (2.0 * nx * wt).sin_cos();
    let (sz, cz) = (2.0 * nz * wt).sin_cos();
    // conjugation by exp(-iα σ_x): y -> cos·y - sin·z, z -> sin·y + cos·z
    let about_x = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    // then by exp(-iβ σ_z): x -> cos·x - sin·y, y -> sin·x + cos·y
    let about_z = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    about_x * about_z
}

/// Cycle average `(1/t_c) ∫₀^{t_c} R(t) dt`.
///
/// Row `m` is what a coupling along lab axis `m` averages to; the
/// first-order decoupling condition asks for the rows carrying the coupling
/// vector to vanish.
pub fn decoupling_residual(cfg: &ControlConfig, quad_points: usize) -> Result<Matrix3<f64>, ControlError> {
    if quad_points < 64 {
        return Err(ControlError::TooFewQuadraturePoints(quad_points));
    }
    const NODES: usize = 16;
    let (nx, nz) = cfg.effective_n();
    // each panel covers at most half a period of the fastest harmonic 2(|n_x|+|n_z|)ω
    let harmonics = 2.0 * (nx.abs() + nz.abs());
    let panels = (quad_points.div_ceil(NODES)).max((2.0 * harmonics).ceil() as usize);
    let tc = cfg.cycle_time();
    let (ts, ws) = GaussLegendre::new(NODES).composite(0.0, tc, panels);
    let mut acc = Matrix3::zeros();
    for (t, w) in ts.iter().zip(&ws) {
        acc += rotation_matrix(*t, cfg) * *w;
    }
    Ok(acc / tc)
}
