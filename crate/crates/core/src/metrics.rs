//! Figures of merit: Wootters concurrence and trajectory fidelity.

use std::sync::LazyLock;

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::qops::{embed, Axis, DensityMatrix, Qubit, StateVector, TwoQubitOperator};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("state is not Hermitian (max |ρ - ρ†| = {0:e})")]
    NotHermitian(f64),
    #[error("reference state is not normalized (‖ψ‖² = {0})")]
    Unnormalized(f64),
    #[error("{name} = {value} lies outside [0, 1] beyond tolerance")]
    OutOfRange { name: &'static str, value: f64 },
}

/// Hermiticity tolerance accepted by the metrics; integrator states sit well inside it.
const HERMITIAN_TOL: f64 = 1e-8;
const RANGE_TOL: f64 = 1e-6;

static SPIN_FLIP: LazyLock<TwoQubitOperator> =
    LazyLock::new(|| embed(Qubit::One, Axis::Y) * embed(Qubit::Two, Axis::Y));

/// Wootters concurrence `max(0, √μ₁ - √μ₂ - √μ₃ - √μ₄)`.
///
/// The `μᵢ` are the eigenvalues of `ρ ρ̃`, `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`,
/// obtained through `√ρ ρ̃ √ρ`. Negative eigenvalues of `ρ`
/// (Born dynamics can produce them) are truncated to zero first.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64, MetricsError> {
    let herm = rho.operator().hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(MetricsError::NotHermitian(herm));
    }
    let m = rho.matrix();
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let v = eig.eigenvectors;
    let clipped = eig.eigenvalues.map(|e| e.max(0.0));
    let sqrt_rho = &v * Matrix4::from_diagonal(&clipped.map(|e| Complex64::new(e.sqrt(), 0.0))) * v.adjoint();

    // √ρ ρ̃ √ρ = A A† with A = √ρ F √ρ*, so the √μᵢ are the singular values of A.
    // The SVD keeps the small ones at round-off instead of √(round-off).
    let flip = SPIN_FLIP.matrix();
    let a = &sqrt_rho * flip * sqrt_rho.conjugate();
    let mut lambda: Vec<f64> = a.singular_values().iter().copied().collect();
    lambda.sort_by(|x, y| y.total_cmp(x));
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0))
}

/// `⟨ψ₀|ρ|ψ₀⟩`.
pub fn fidelity(rho: &DensityMatrix, psi0: &StateVector) -> Result<f64, MetricsError> {
    let norm = psi0.norm_squared();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(MetricsError::Unnormalized(norm));
    }
    Ok((psi0.adjoint() * rho.matrix() * psi0)[(0, 0)].re)
}

/// Clamps a metric into `[0, 1]` only if it overshoots by at most `1e-6`.
pub fn clamp_unit(name: &'static str, value: f64) -> Result<f64, MetricsError> {
    if !value.is_finite() || value < -RANGE_TOL || value > 1.0 + RANGE_TOL {
        return Err(MetricsError::OutOfRange { name, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricPoint {
    pub t: f64,
    pub concurrence: f64,
    pub fidelity: f64,
}

impl MetricPoint {
    pub fn new(t: f64, concurrence: f64, fidelity: f64) -> Result<Self, MetricsError> {
        Ok(MetricPoint {
            t,
            concurrence: clamp_unit("concurrence", concurrence)?,
            fidelity: clamp_unit("fidelity", fidelity)?,
        })
    }
}
