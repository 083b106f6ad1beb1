//! Time-local Born master equation in the joint control/gate interaction picture.
//!
//! The memory integrals only involve the filtered couplings, never the state,
//! so every `K` operator is tabulated on the half-step grid before the RK4 sweep.

use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::{build_kernel_table_with, gamma_factor, BathError, BathSpec, KernelSet, QuadratureOptions};
use crate::control::{rotation_matrix, uc, ControlConfig, ControlError};
use crate::gate::{sigma_tilde_all, u0, GateConfig};
use crate::metrics::{concurrence, fidelity, MetricsError};
use crate::qops::{BasisState, DensityMatrix, Qubit, StateVector, TwoQubitOperator};

pub const TRACE_DRIFT_TOL: f64 = 1e-6;
pub const HERMITICITY_DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("history has {len} samples, index {index} requested")]
    MissingHistory { index: usize, len: usize },
    #[error("kernel table does not match the config grid ({0})")]
    KernelMismatch(String),
    #[error("trace drifted to |Tr ρ - 1| = {error:e} at t = {t}")]
    TraceDrift { t: f64, error: f64 },
    #[error("state lost Hermiticity ({error:e}) at t = {t}")]
    HermiticityDrift { t: f64, error: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMethod {
    /// Quadrature over the stored samples at every grid point, `O(N²)`.
    #[default]
    Direct,
    /// Running per-frequency accumulators over the spectral nodes, `O(N·nodes)`.
    Separable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub gate: GateConfig,
    pub control: ControlConfig,
    pub bath: BathSpec,
    /// Initial pure state `ψ₀`, basis order ↑↑, ↑↓, ↓↑, ↓↓.
    pub initial_state: [Complex64; 4],
    pub n_steps: usize,
    pub t_max: f64,
    pub positivity_tol: f64,
    #[serde(default)]
    pub memory: MemoryMethod,
    #[serde(default)]
    pub quadrature: QuadratureOptions,
}

impl SimConfig {
    pub fn new(gate: GateConfig, control: ControlConfig, bath: BathSpec) -> Self {
        let up_down = BasisState::UpDown.ket();
        SimConfig {
            gate,
            control,
            bath,
            initial_state: [up_down[0], up_down[1], up_down[2], up_down[3]],
            n_steps: 4000,
            t_max: gate.tau,
            positivity_tol: DensityMatrix::DEFAULT_POSITIVITY_TOL,
            memory: MemoryMethod::Direct,
            quadrature: QuadratureOptions::default(),
        }
    }

    pub fn psi0(&self) -> StateVector {
        StateVector::from_column_slice(&self.initial_state)
    }

    pub fn rho0(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.psi0())
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    /// Smallest `n_steps` that samples the fastest control oscillation ten times per period.
    pub fn min_steps(&self) -> usize {
        let periods = self.control.omega * self.t_max / (2.0 * std::f64::consts::PI);
        (10.0 * self.control.fastest_multiplier() * periods).ceil() as usize
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.control.validate()?;
        self.bath.validate()?;
        let gate_ok = self.gate.j.is_finite() && self.gate.tau.is_finite() && self.gate.tau > 0.0;
        if !gate_ok {
            return Err(DynamicsError::Config(format!("bad gate parameters {:?}", self.gate)));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(DynamicsError::Config(format!("t_max must be > 0, got {}", self.t_max)));
        }
        if self.n_steps < self.min_steps() {
            return Err(DynamicsError::Config(format!(
                "n_steps = {} is below the floor {} set by the control frequency",
                self.n_steps,
                self.min_steps()
            )));
        }
        let norm = self.psi0().norm_squared();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(DynamicsError::Config(format!("initial state has norm² {norm}")));
        }
        if !(self.positivity_tol >= 0.0) {
            return Err(DynamicsError::Config("positivity_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// `R^(s)(t) = Σ_mn λ_m R_mn(t) σ̃_n^(s)(t)`.
pub fn filtered_coupling(s: Qubit, t: f64, cfg: &SimConfig) -> TwoQubitOperator {
    filtered_pair(t, cfg)[s.index()]
}

fn filtered_pair(t: f64, cfg: &SimConfig) -> [TwoQubitOperator; 2] {
    let r = rotation_matrix(t, &cfg.control);
    let st = sigma_tilde_all(t, &cfg.gate);
    let mut out = [TwoQubitOperator::zeros(); 2];
    for s in Qubit::BOTH {
        let lambda = cfg.bath.lambda(s);
        let si = s.index();
        for n in 0..3 {
            let w: Complex64 = (0..3).map(|m| lambda.0[m] * r[(m, n)]).sum();
            if w != Complex64::new(0.0, 0.0) {
                out[si] += st[si][n] * w;
            }
        }
    }
    out
}

/// Filtered couplings sampled on the half-step grid `t_i = i·dt/2`, `i = 0..=2N`.
#[derive(Clone, Debug)]
pub struct CouplingHistory {
    pub half_step: f64,
    /// `[i][s]`
    pub samples: Vec<[TwoQubitOperator; 2]>,
}

impl CouplingHistory {
    pub fn build(cfg: &SimConfig) -> Self {
        let h = 0.5 * cfg.dt();
        let samples = (0..=2 * cfg.n_steps).into_par_iter().map(|i| filtered_pair(i as f64 * h, cfg)).collect();
        CouplingHistory { half_step: h, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, i: usize, s: Qubit) -> Result<&TwoQubitOperator, DynamicsError> {
        self.samples
            .get(i)
            .map(|pair| &pair[s.index()])
            .ok_or(DynamicsError::MissingHistory { index: i, len: self.samples.len() })
    }
}

/// `K1^(s,s′)` and `K2^(s,s′)`, indexed `[s][s′]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MemoryOperators {
    pub k1: [[TwoQubitOperator; 2]; 2],
    pub k2: [[TwoQubitOperator; 2]; 2],
}

impl MemoryOperators {
    /// `Σ_s′ K^(s,s′)`, the only combination the generator needs.
    pub fn summed(&self) -> SummedMemory {
        let mut out = SummedMemory::zeros();
        for s in 0..2 {
            out.k1[s] = self.k1[s][0] + self.k1[s][1];
            out.k2[s] = self.k2[s][0] + self.k2[s][1];
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummedMemory {
    pub k1: [TwoQubitOperator; 2],
    pub k2: [TwoQubitOperator; 2],
}

impl SummedMemory {
    pub fn zeros() -> Self {
        SummedMemory { k1: [TwoQubitOperator::zeros(); 2], k2: [TwoQubitOperator::zeros(); 2] }
    }
}

/// Composite weights for `∫₀^{j·h}` on `j + 1` equispaced samples.
///
/// Simpson for even `j`; Simpson followed by a 3/8 panel for odd `j ≥ 3`;
/// trapezoid only for the single interval `j = 1`.
pub fn convolution_weights(j: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; j + 1];
    match j {
        0 => {}
        1 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let m = if j % 2 == 0 { j } else { j - 3 };
            if m > 0 {
                for (i, wi) in w.iter_mut().enumerate().take(m + 1) {
                    let c = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    *wi = c * h / 3.0;
                }
            }
            if j % 2 == 1 {
                for (k, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
                    w[m + k] += c * 3.0 * h / 8.0;
                }
            }
        }
    }
    w
}

type Flat = [Complex64; 16];

fn flatten(op: &TwoQubitOperator) -> Flat {
    let mut out = [Complex64::new(0.0, 0.0); 16];
    out.copy_from_slice(op.matrix().as_slice());
    out
}

fn unflatten(f: &Flat) -> TwoQubitOperator {
    TwoQubitOperator(Matrix4::from_column_slice(f))
}

/// History in flat form: `[s′]` of `(R†, R)` per sample.
struct FlatHistory {
    dag: [Vec<Flat>; 2],
    plain: [Vec<Flat>; 2],
}

impl FlatHistory {
    fn new(history: &CouplingHistory) -> Self {
        let pick = |s: usize, adj: bool| -> Vec<Flat> {
            history.samples.iter().map(|p| if adj { flatten(&p[s].adjoint()) } else { flatten(&p[s]) }).collect()
        };
        FlatHistory { dag: [pick(0, true), pick(1, true)], plain: [pick(0, false), pick(1, false)] }
    }
}

/// Raw convolutions `∫T₁(t−t′)R^(s′)(t′)†dt′` and `∫T₂(t−t′)R^(s′)(t′)dt′`, indexed `[s′]`.
#[derive(Clone, Copy)]
struct RawConvolution {
    c1: [Flat; 2],
    c2: [Flat; 2],
}

impl RawConvolution {
    fn zero() -> Self {
        let z = [Complex64::new(0.0, 0.0); 16];
        RawConvolution { c1: [z; 2], c2: [z; 2] }
    }

    fn into_memory(self, spec: &BathSpec) -> MemoryOperators {
        let mut k1 = [[TwoQubitOperator::zeros(); 2]; 2];
        let mut k2 = k1;
        for s in Qubit::BOTH {
            for sp in Qubit::BOTH {
                let g = gamma_factor(s, sp, spec);
                if g != 0.0 {
                    k1[s.index()][sp.index()] = unflatten(&self.c1[sp.index()]) * g;
                    k2[s.index()][sp.index()] = unflatten(&self.c2[sp.index()]) * g;
                }
            }
        }
        MemoryOperators { k1, k2 }
    }
}

fn direct_convolution(j: usize, flat: &FlatHistory, kernels: &KernelSet) -> RawConvolution {
    let w = convolution_weights(j, kernels.half_step());
    let mut out = RawConvolution::zero();
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let a = kernels.t1[j - i] * wi;
        let b = kernels.t2[j - i] * wi;
        for sp in 0..2 {
            let (x, y) = (&flat.dag[sp][i], &flat.plain[sp][i]);
            let (o1, o2) = (&mut out.c1[sp], &mut out.c2[sp]);
            for k in 0..16 {
                o1[k] += a * x[k];
                o2[k] += b * y[k];
            }
        }
    }
    out
}

fn check_lengths(history: &CouplingHistory, kernels: &KernelSet, cfg: &SimConfig) -> Result<(), DynamicsError> {
    if kernels.n_steps != cfg.n_steps || (kernels.dt - cfg.dt()).abs() > 1e-15 * cfg.dt().max(1.0) {
        return Err(DynamicsError::KernelMismatch(format!(
            "table has n_steps = {}, dt = {}; config wants {}, {}",
            kernels.n_steps,
            kernels.dt,
            cfg.n_steps,
            cfg.dt()
        )));
    }
    if history.len() != kernels.len() {
        return Err(DynamicsError::MissingHistory { index: kernels.len() - 1, len: history.len() });
    }
    Ok(())
}

/// `K1`, `K2` at half-grid index `t_index` by direct quadrature over the history.
pub fn memory_operators(
    t_index: usize,
    history: &CouplingHistory,
    kernels: &KernelSet,
    cfg: &SimConfig,
) -> Result<MemoryOperators, DynamicsError> {
    if t_index >= history.len() || t_index >= kernels.len() {
        return Err(DynamicsError::MissingHistory { index: t_index, len: history.len().min(kernels.len()) });
    }
    let truncated = CouplingHistory { half_step: history.half_step, samples: history.samples[..=t_index].to_vec() };
    let flat = FlatHistory::new(&truncated);
    Ok(direct_convolution(t_index, &flat, kernels).into_memory(&cfg.bath))
}

/// Summed memory operators at every half-grid index.
#[derive(Clone, Debug)]
pub struct MemoryTable {
    pub entries: Vec<SummedMemory>,
}

impl MemoryTable {
    pub fn build(
        history: &CouplingHistory,
        kernels: &KernelSet,
        cfg: &SimConfig,
        method: MemoryMethod,
    ) -> Result<Self, DynamicsError> {
        check_lengths(history, kernels, cfg)?;
        let flat = FlatHistory::new(history);
        let raw = match method {
            MemoryMethod::Direct => {
                (0..history.len()).into_par_iter().map(|j| direct_convolution(j, &flat, kernels)).collect()
            }
            MemoryMethod::Separable => separable_convolutions(&flat, kernels),
        };
        let entries = raw.into_iter().map(|r| r.into_memory(&cfg.bath).summed()).collect();
        Ok(MemoryTable { entries })
    }
}

/// One channel of the separable recursion: kernel `Σ_ν a_ν z_ν^k` against samples `x`.
///
/// With Simpson coefficients `c_0 = 1`, `c_odd = 4`, `c_even = 2`, the running sums
/// `A_ν(j) = Σ_{i<j} c_i z_ν^{j-i} x_i` obey `A_ν(j+1) = z_ν (A_ν(j) + c_j x_j)`.
fn separable_channel(x: &[Flat], weights: &[f64], z: &[Complex64], table: &[Complex64], h: f64) -> Vec<Flat> {
    let zero = [Complex64::new(0.0, 0.0); 16];
    let n = x.len();
    let z3: Vec<Complex64> = z.iter().map(|v| v * v * v).collect();
    let mut acc = vec![zero; z.len()];
    let mut out = vec![zero; n];
    // Σ_ν a_ν z_ν³ (A_ν(m) + x_m) for even m, consumed three samples later
    let mut shifted = vec![zero; n];

    for j in 0..n {
        if j % 2 == 0 && j > 0 {
            let mut plain = zero;
            let mut tail = zero;
            for ((a, zc), w) in acc.iter().zip(&z3).zip(weights) {
                for k in 0..16 {
                    plain[k] += a[k] * *w;
                    tail[k] += a[k] * (zc * *w);
                }
            }
            let t3 = table.get(3).copied().unwrap_or_default();
            for k in 0..16 {
                out[j][k] = (plain[k] + table[0] * x[j][k]) * (h / 3.0);
                shifted[j][k] = tail[k] + t3 * x[j][k];
            }
        } else if j == 1 {
            for k in 0..16 {
                out[1][k] = (table[1] * x[0][k] + table[0] * x[1][k]) * (0.5 * h);
            }
        } else if j >= 3 {
            let m = j - 3;
            let head = if m > 0 { shifted[m] } else { zero };
            for k in 0..16 {
                let tail38 = table[3] * x[m][k] + table[2] * x[m + 1][k] * 3.0 + table[1] * x[m + 2][k] * 3.0
                    + table[0] * x[j][k];
                out[j][k] = head[k] * (h / 3.0) + tail38 * (3.0 * h / 8.0);
            }
        }
        let c = if j == 0 { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
        for (a, zv) in acc.iter_mut().zip(z) {
            for k in 0..16 {
                a[k] = zv * (a[k] + x[j][k] * c);
            }
        }
    }
    out
}

fn separable_convolutions(flat: &FlatHistory, kernels: &KernelSet) -> Vec<RawConvolution> {
    let h = kernels.half_step();
    let grid = &kernels.grid;
    let z1: Vec<Complex64> = grid.omega.iter().map(|w| Complex64::from_polar(1.0, -w * h)).collect();
    let z2: Vec<Complex64> = z1.iter().map(|z| z.conj()).collect();
    let jobs: Vec<(usize, bool)> = vec![(0, true), (1, true), (0, false), (1, false)];
    let results: Vec<Vec<Flat>> = jobs
        .par_iter()
        .map(|&(sp, first)| {
            if first {
                separable_channel(&flat.dag[sp], &grid.thermal, &z1, &kernels.t1, h)
            } else {
                separable_channel(&flat.plain[sp], &grid.total, &z2, &kernels.t2, h)
            }
        })
        .collect();
    (0..flat.dag[0].len())
        .map(|j| RawConvolution {
            c1: [results[0][j], results[1][j]],
            c2: [results[2][j], results[3][j]],
        })
        .collect()
}

/// `L[ρ] = Σ_s [R_s, ρK1_s] + [R_s†, ρK2_s] + [K1_s†ρ, R_s†] + [K2_s†ρ, R_s]`, `K_s = Σ_s′ K^(s,s′)`.
pub fn generator(
    rho: &TwoQubitOperator,
    couplings: &[TwoQubitOperator; 2],
    memory: &SummedMemory,
) -> TwoQubitOperator {
    let mut out = TwoQubitOperator::zeros();
    for s in 0..2 {
        let r = &couplings[s];
        let rd = r.adjoint();
        let (a, b) = (&memory.k1[s], &memory.k2[s]);
        out += r.commutator(&(rho * a));
        out += rd.commutator(&(rho * b));
        out += (&a.adjoint() * rho).commutator(&rd);
        out += (&b.adjoint() * rho).commutator(r);
    }
    out
}

/// `U_c(t) U₀(t) ρ_I U₀†(t) U_c†(t)`.
pub fn to_physical(rho: &DensityMatrix, t: f64, cfg: &SimConfig) -> DensityMatrix {
    let u = uc(t, &cfg.control) * u0(t, &cfg.gate);
    DensityMatrix::from_operator_unchecked(rho.operator().conjugate_by(&u))
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub rho_i: Vec<DensityMatrix>,
    pub concurrence: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub trace_error: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    pub positivity_violations: usize,
    pub config: SimConfig,
}

impl Trajectory {
    pub fn last_index(&self) -> usize {
        self.times.len() - 1
    }

    /// Index of the grid point closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let dt = self.config.dt();
        ((t / dt).round().max(0.0) as usize).min(self.last_index())
    }
}

pub fn build_kernels(cfg: &SimConfig) -> Result<KernelSet, DynamicsError> {
    Ok(build_kernel_table_with(&cfg.bath, cfg.t_max, cfg.n_steps, &cfg.quadrature)?)
}

pub fn integrate(cfg: &SimConfig) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    let kernels = build_kernels(cfg)?;
    integrate_with_kernels(cfg, &kernels)
}

/// As [`integrate`], reusing a kernel table (it depends on the spectrum only, not on λ or topology).
pub fn integrate_with_kernels(cfg: &SimConfig, kernels: &KernelSet) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    let history = CouplingHistory::build(cfg);
    let memory = MemoryTable::build(&history, kernels, cfg, cfg.memory)?;
    let psi0 = cfg.psi0();
    let dt = cfg.dt();
    let n = cfg.n_steps;

    let mut traj = Trajectory {
        times: Vec::with_capacity(n + 1),
        rho_i: Vec::with_capacity(n + 1),
        concurrence: Vec::with_capacity(n + 1),
        fidelity: Vec::with_capacity(n + 1),
        trace_error: Vec::with_capacity(n + 1),
        min_eigenvalue: Vec::with_capacity(n + 1),
        positivity_violations: 0,
        config: cfg.clone(),
    };

    let mut rho = *cfg.rho0().operator();
    record(&mut traj, 0.0, rho, &psi0, cfg)?;
    let l = |i: usize, r: &TwoQubitOperator| generator(r, &history.samples[i], &memory.entries[i]);
    for step in 0..n {
        let (i0, im, i1) = (2 * step, 2 * step + 1, 2 * step + 2);
        let k1 = l(i0, &rho);
        let k2 = l(im, &(rho + k1 * (0.5 * dt)));
        let k3 = l(im, &(rho + k2 * (0.5 * dt)));
        let k4 = l(i1, &(rho + k3 * dt));
        rho = rho + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        record(&mut traj, (step + 1) as f64 * dt, rho, &psi0, cfg)?;
    }
    Ok(traj)
}

fn record(
    traj: &mut Trajectory,
    t: f64,
    rho: TwoQubitOperator,
    psi0: &StateVector,
    cfg: &SimConfig,
) -> Result<(), DynamicsError> {
    let state = DensityMatrix::from_operator_unchecked(rho);
    let trace_error = state.trace_error();
    if !(trace_error <= TRACE_DRIFT_TOL) {
        return Err(DynamicsError::TraceDrift { t, error: trace_error });
    }
    let herm = rho.hermiticity_error();
    if !(herm <= HERMITICITY_DRIFT_TOL) {
        return Err(DynamicsError::HermiticityDrift { t, error: herm });
    }
    let min_eig = state.min_eigenvalue();
    if min_eig < -cfg.positivity_tol {
        if traj.positivity_violations == 0 {
            log::warn!("first positivity breach at t = {t:.6}: min eigenvalue {min_eig:.3e}");
        } else {
            log::debug!("positivity breach at t = {t:.6}: min eigenvalue {min_eig:.3e}");
        }
        traj.positivity_violations += 1;
    }
    let c = concurrence(&to_physical(&state, t, cfg))?;
    let f = fidelity(&state, psi0)?;
    traj.times.push(t);
    traj.rho_i.push(state);
    traj.concurrence.push(c);
    traj.fidelity.push(f);
    traj.trace_error.push(trace_error);
    traj.min_eigenvalue.push(min_eig);
    Ok(())
}
