//! Bosonic baths: spectral density, thermal occupation, topology and the memory kernels.
//!
//! Kernels (topology factor excluded):
//!
//! ```text
//! T₁(t) = ∫₀^∞ J(ω) n̄(ω) e^{-iωt} dω
//! T₂(t) = conj(T₁(t)) + ∫₀^∞ J(ω) e^{iωt} dω = ∫₀^∞ J(ω) (1 + n̄(ω)) e^{iωt} dω
//! ```
//!
//! with `J(ω) = η ω^s / ω_c^{s-1} e^{-ω/ω_c}`. Both are evaluated on one fixed
//! set of Gauss–Legendre nodes over `[0, Λ]`, `Λ = 40 ω_c` by default. The
//! discarded tail is bounded by `∫_Λ^∞ J(ω)(1+n̄)dω ≤ (1 + 1/(βΛ)) η ω_c² Γ(s+1, Λ/ω_c)`,
//! about `40^s e^{-40} ≈ 10^{-13}` relative to `T₂(0)` for `s ≤ 3`.
//! Keeping the node set explicit lets the integrator expand the kernels as
//! sums of exponentials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use num_complex::Complex64;

use crate::qops::{Axis, Qubit};
use crate::quadrature::GaussLegendre;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// `k_B T / ħ` in rad per τ, for a temperature in kelvin and τ in seconds.
pub fn temperature_rad_from_kelvin(kelvin: f64, tau_seconds: f64) -> f64 {
    K_B * kelvin * tau_seconds / HBAR
}

#[derive(Debug, Error, PartialEq)]
pub enum BathError {
    #[error("spectral density is defined for omega >= 0 (got {0})")]
    NegativeFrequency(f64),
    #[error("thermal occupation needs omega > 0 (got {0})")]
    NonPositiveFrequency(f64),
    #[error("invalid bath parameter: {0}")]
    InvalidSpec(String),
    #[error("kernel quadrature did not converge: estimated relative error {estimate:e} > tolerance {tol:e}")]
    NotConverged { estimate: f64, tol: f64 },
    #[error("kernel table needs at least 100 steps (got {0})")]
    TooFewSteps(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Common,
    Independent,
}

/// Complex coupling direction `λ`, entering as `σ·(λB + λ*B†)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CouplingVector(pub [Complex64; 3]);

impl CouplingVector {
    /// `(λ_ad/2)(x̂ + iŷ) + λ_z ẑ`: `σ·λ = λ_ad σ₊ + λ_z σ_z`, i.e. amplitude
    /// damping `σ₊B + σ₋B†` plus dephasing `σ_z(B + B†)`.
    pub fn channels(amplitude_damping: f64, dephasing: f64) -> Self {
        let half = 0.5 * amplitude_damping;
        CouplingVector([
            Complex64::new(half, 0.0),
            Complex64::new(0.0, half),
            Complex64::new(dephasing, 0.0),
        ])
    }

    pub fn along(axis: Axis, magnitude: Complex64) -> Self {
        let mut v = [Complex64::new(0.0, 0.0); 3];
        v[axis.index()] = magnitude;
        CouplingVector(v)
    }

    pub fn component(&self, axis: Axis) -> Complex64 {
        self.0[axis.index()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub eta: f64,
    pub s_exp: f64,
    pub omega_c: f64,
    /// `k_B T / ħ` in rad per τ.
    pub temperature_rad: f64,
    pub topology: Topology,
    pub lambda_1: CouplingVector,
    pub lambda_2: CouplingVector,
}

impl BathSpec {
    pub fn validate(&self) -> Result<(), BathError> {
        let bad = |msg: String| Err(BathError::InvalidSpec(msg));
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad(format!("eta must be >= 0, got {}", self.eta));
        }
        if !(self.s_exp.is_finite() && self.s_exp >= 1.0) {
            return bad(format!("s_exp must be >= 1, got {}", self.s_exp));
        }
        if !(self.omega_c.is_finite() && self.omega_c > 0.0) {
            return bad(format!("omega_c must be > 0, got {}", self.omega_c));
        }
        if !(self.temperature_rad.is_finite() && self.temperature_rad >= 0.0) {
            return bad(format!("temperature_rad must be >= 0, got {}", self.temperature_rad));
        }
        let finite = |v: &CouplingVector| v.0.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&self.lambda_1) || !finite(&self.lambda_2) {
            return bad("coupling vectors must be finite".into());
        }
        if self.topology == Topology::Common && self.lambda_1 != self.lambda_2 {
            return bad("a common bath couples both qubits through the same lambda".into());
        }
        Ok(())
    }

    pub fn lambda(&self, s: Qubit) -> &CouplingVector {
        match s {
            Qubit::One => &self.lambda_1,
            Qubit::Two => &self.lambda_2,
        }
    }

    /// `J(ω)` without the domain check.
    fn density(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return 0.0;
        }
        let wc = self.omega_c;
        self.eta * wc * (omega / wc).powf(self.s_exp) * (-omega / wc).exp()
    }

    /// `J(ω) n̄(ω)`, with its finite `ω → 0` limit `η k_BT ω_c^{1-s} ω^{s-1}`.
    fn thermal_density(&self, omega: f64) -> f64 {
        if self.temperature_rad == 0.0 {
            return 0.0;
        }
        if omega == 0.0 {
            return if self.s_exp == 1.0 { self.eta * self.temperature_rad } else { 0.0 };
        }
        self.density(omega) / (omega / self.temperature_rad).exp_m1()
    }
}

pub fn spectral_density(omega: f64, spec: &BathSpec) -> Result<f64, BathError> {
    if omega < 0.0 || omega.is_nan() {
        return Err(BathError::NegativeFrequency(omega));
    }
    Ok(spec.density(omega))
}

/// Bose–Einstein occupation `1/(e^{βω} - 1)`; zero at zero temperature.
pub fn thermal_occupation(omega: f64, spec: &BathSpec) -> Result<f64, BathError> {
    if !(omega > 0.0) {
        return Err(BathError::NonPositiveFrequency(omega));
    }
    if spec.temperature_rad == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / spec.temperature_rad).exp_m1())
}

/// `Γ^(s,s')`: 1 for a common bath, `δ_{s,s'}` for independent baths.
pub fn gamma_factor(s: Qubit, s_prime: Qubit, spec: &BathSpec) -> f64 {
    match spec.topology {
        Topology::Common => 1.0,
        Topology::Independent if s == s_prime => 1.0,
        Topology::Independent => 0.0,
    }
}

/// Closed form of `∫₀^∞ J(ω) e^{iωt} dω = η ω_c² s! / (1 - iω_c t)^{s+1}` for integer `s`.
pub fn zero_temperature_kernel(t: f64, spec: &BathSpec) -> Option<Complex64> {
    let s = spec.s_exp;
    if s.fract() != 0.0 || s > 20.0 {
        return None;
    }
    let n = s as i32;
    let factorial: f64 = (1..=n).map(f64::from).product();
    let denom = Complex64::new(1.0, -spec.omega_c * t).powi(n + 1);
    Some(Complex64::new(spec.eta * spec.omega_c * spec.omega_c * factorial, 0.0) / denom)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureOptions {
    /// Accepted change of `T(0)`, `T(horizon)` under panel doubling, relative to `T₂(0)`.
    pub rel_tol: f64,
    /// Upper integration limit in units of `ω_c`.
    pub cutoff_multiple: f64,
    pub nodes_per_panel: usize,
    pub max_refinements: u32,
    /// Longest time the node set must resolve. `None` means "the requested `t`".
    pub horizon: Option<f64>,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            rel_tol: 1e-11,
            cutoff_multiple: 40.0,
            nodes_per_panel: 16,
            max_refinements: 8,
            horizon: None,
        }
    }
}

impl QuadratureOptions {
    pub fn with_horizon(self, horizon: f64) -> Self {
        QuadratureOptions { horizon: Some(horizon), ..self }
    }
}

/// Frequency nodes with baked-in kernel weights.
///
/// `T₁(t) = Σ_ν thermal_ν e^{-iω_ν t}` and `T₂(t) = Σ_ν total_ν e^{iω_ν t}`.
#[derive(Clone, Debug)]
pub struct SpectralGrid {
    pub omega: Vec<f64>,
    /// `w_ν J(ω_ν) n̄(ω_ν)`
    pub thermal: Vec<f64>,
    /// `w_ν J(ω_ν) (1 + n̄(ω_ν))`
    pub total: Vec<f64>,
    pub horizon: f64,
    pub error_estimate: f64,
}

impl SpectralGrid {
    pub fn build(spec: &BathSpec, horizon: f64, opts: &QuadratureOptions) -> Result<Self, BathError> {
        spec.validate()?;
        let horizon = horizon.max(0.0);
        let gl = GaussLegendre::new(opts.nodes_per_panel);
        let cutoff = opts.cutoff_multiple * spec.omega_c;
        // a 16-node panel is exact to ~1e-16 for e^{iωt} spanning π radians
        let width = (0.5 * spec.omega_c).min(std::f64::consts::PI / horizon.max(1e-300));
        let mut panels = (cutoff / width).ceil().max(1.0) as usize;
        let graded = spec.s_exp.fract() != 0.0;

        let mut coarse = Self::assemble(spec, &gl, cutoff, panels, graded, horizon);
        for _ in 0..=opts.max_refinements {
            let fine = Self::assemble(spec, &gl, cutoff, 2 * panels, graded, horizon);
            let scale = fine.t2(0.0).re;
            let estimate = if scale == 0.0 {
                0.0
            } else {
                [0.0, horizon]
                    .iter()
                    .map(|&t| (coarse.t1(t) - fine.t1(t)).norm().max((coarse.t2(t) - fine.t2(t)).norm()))
                    .fold(0.0, f64::max)
                    / scale
            };
            if estimate <= opts.rel_tol {
                coarse.error_estimate = estimate;
                return Ok(coarse);
            }
            panels *= 2;
            coarse = fine;
            coarse.error_estimate = estimate;
        }
        Err(BathError::NotConverged { estimate: coarse.error_estimate, tol: opts.rel_tol })
    }

    fn assemble(spec: &BathSpec, gl: &GaussLegendre, cutoff: f64, panels: usize, graded: bool, horizon: f64) -> Self {
        let width = cutoff / panels as f64;
        let mut edges: Vec<(f64, f64)> = Vec::with_capacity(panels + 24);
        if graded {
            // dyadic panels toward ω = 0, where ω^{s-1} is not smooth
            const LEVELS: i32 = 24;
            edges.push((0.0, width * 2f64.powi(-LEVELS)));
            for k in (0..LEVELS).rev() {
                edges.push((width * 2f64.powi(-k - 1), width * 2f64.powi(-k)));
            }
        } else {
            edges.push((0.0, width));
        }
        edges.extend((1..panels).map(|p| (p as f64 * width, (p + 1) as f64 * width)));
        let (omega, weights) = gl.on_panels(&edges);
        let mut thermal = Vec::with_capacity(omega.len());
        let mut total = Vec::with_capacity(omega.len());
        for (&w, &wt) in omega.iter().zip(&weights) {
            let jn = spec.thermal_density(w);
            thermal.push(wt * jn);
            total.push(wt * (spec.density(w) + jn));
        }
        SpectralGrid { omega, thermal, total, horizon, error_estimate: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn t1(&self, t: f64) -> Complex64 {
        self.kernels(t).0
    }

    pub fn t2(&self, t: f64) -> Complex64 {
        self.kernels(t).1
    }

    /// `(T₁(t), T₂(t))` in one pass.
    pub fn kernels(&self, t: f64) -> (Complex64, Complex64) {
        let (mut t1, mut t2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for ((&w, &a1), &a2) in self.omega.iter().zip(&self.thermal).zip(&self.total) {
            let (s, c) = (w * t).sin_cos();
            t1 += Complex64::new(a1 * c, -a1 * s);
            t2 += Complex64::new(a2 * c, a2 * s);
        }
        (t1, t2)
    }
}

fn grid_for(t: f64, spec: &BathSpec, quad: &QuadratureOptions) -> Result<SpectralGrid, BathError> {
    if !(t >= 0.0) {
        return Err(BathError::InvalidSpec(format!("kernel time must be >= 0, got {t}")));
    }
    let horizon = quad.horizon.map_or(t, |h| h.max(t));
    SpectralGrid::build(spec, horizon, quad)
}

pub fn kernel_t1(t: f64, spec: &BathSpec, quad: &QuadratureOptions) -> Result<Complex64, BathError> {
    Ok(grid_for(t, spec, quad)?.t1(t))
}

pub fn kernel_t2(t: f64, spec: &BathSpec, quad: &QuadratureOptions) -> Result<Complex64, BathError> {
    Ok(grid_for(t, spec, quad)?.t2(t))
}

/// Kernel samples on the half-step grid `t_i = i·dt/2`, `i = 0..=2·n_steps`.
///
/// Even indices are the integration grid, odd indices the RK midpoints.
#[derive(Clone, Debug)]
pub struct KernelSet {
    pub n_steps: usize,
    pub dt: f64,
    pub t1: Vec<Complex64>,
    pub t2: Vec<Complex64>,
    pub grid: SpectralGrid,
}

impl KernelSet {
    pub fn half_step(&self) -> f64 {
        0.5 * self.dt
    }

    pub fn len(&self) -> usize {
        self.t1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t1.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.half_step()
    }

    /// `(T₁, T₂)` at grid point `n`, i.e. `t = n·dt`.
    pub fn at_step(&self, n: usize) -> (Complex64, Complex64) {
        (self.t1[2 * n], self.t2[2 * n])
    }

    /// `(T₁, T₂)` at `t = (n + 1/2)·dt`.
    pub fn at_half(&self, n: usize) -> (Complex64, Complex64) {
        (self.t1[2 * n + 1], self.t2[2 * n + 1])
    }

    pub fn error_estimate(&self) -> f64 {
        self.grid.error_estimate
    }

    /// Overwrites one sample. Only meant for fault-injection checks.
    #[doc(hidden)]
    pub fn inject_fault(&mut self, i: usize, delta: Complex64) {
        self.t2[i] += delta;
    }
}

pub fn build_kernel_table(spec: &BathSpec, t_max: f64, n_steps: usize) -> Result<KernelSet, BathError> {
    build_kernel_table_with(spec, t_max, n_steps, &QuadratureOptions::default())
}

pub fn build_kernel_table_with(
    spec: &BathSpec,
    t_max: f64,
    n_steps: usize,
    opts: &QuadratureOptions,
) -> Result<KernelSet, BathError> {
    if n_steps < 100 {
        return Err(BathError::TooFewSteps(n_steps));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(BathError::InvalidSpec(format!("t_max must be > 0, got {t_max}")));
    }
    let grid = grid_for(t_max, spec, &opts.with_horizon(t_max))?;
    let dt = t_max / n_steps as f64;
    let h = 0.5 * dt;
    let (t1, t2): (Vec<_>, Vec<_>) = (0..=2 * n_steps).into_par_iter().map(|i| grid.kernels(i as f64 * h)).unzip();
    Ok(KernelSet { n_steps, dt, t1, t2, grid })
}
