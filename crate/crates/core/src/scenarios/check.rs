//! Invariant suite behind `cdd-sim check`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::bath::{build_kernel_table, zero_temperature_kernel, BathSpec, CouplingVector, Topology};
use crate::control::{decoupling_residual, uc, ControlConfig};
use crate::dynamics::{filtered_coupling, integrate, SimConfig};
use crate::gate::{h0, sigma_tilde, u0, GateConfig};
use crate::qops::{embed, Axis, BasisState, Qubit, TwoQubitOperator};
use crate::quadrature::GaussLegendre;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn below(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        CheckResult { name: name.into(), passed: value < tolerance, value, tolerance, detail }
    }

    fn failed(name: &str, detail: String) -> Self {
        CheckResult { name: name.into(), passed: false, value: f64::NAN, tolerance: f64::NAN, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<CheckResult>,
}

/// Test hooks for exercising the failure paths of the suite.
#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Added to `T₂` at the given half-grid index of the closed-form kernel table.
    pub kernel_fault: Option<(usize, Complex64)>,
}

fn bath(s_exp: f64, temperature_rad: f64, topology: Topology) -> BathSpec {
    BathSpec {
        eta: 0.05,
        s_exp,
        omega_c: 2.0 * PI,
        temperature_rad,
        topology,
        lambda_1: CouplingVector::channels(1.0, 1.0),
        lambda_2: CouplingVector::channels(1.0, 1.0),
    }
}

fn decoupling() -> CheckResult {
    let pairs = [(14, 7), (1, 2), (3, 5), (-4, 9), (6, -1), (11, 3)];
    let mut worst: f64 = 0.0;
    for (nx, nz) in pairs {
        match ControlConfig::full_protection(nx, nz, 2.0 * PI).and_then(|c| decoupling_residual(&c, 64)) {
            Ok(r) => worst = worst.max(r.abs().max()),
            Err(e) => return CheckResult::failed("decoupling_residual", e.to_string()),
        }
    }
    CheckResult::below("decoupling_residual", worst, 1e-8, format!("max over {pairs:?}"))
}

fn gate_invariance() -> CheckResult {
    let g = GateConfig::default();
    let c = ControlConfig::full_protection(14, 7, 2.0 * PI).expect("default control is valid");
    let h = h0(&g);
    let worst = (0..20)
        .map(|i| {
            let t = 0.0371 + 0.0487 * i as f64;
            h.conjugate_by_adjoint(&uc(t, &c)).max_abs_diff(&h)
        })
        .fold(0.0, f64::max);
    CheckResult::below("gate_invariance", worst, 1e-12, "max |U_c† H₀ U_c - H₀| over 20 times".into())
}

fn kernel_closed_forms(opts: &CheckOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for s_exp in [1.0, 3.0] {
        let name = format!("kernel_closed_form_s{s_exp}");
        let spec = bath(s_exp, 0.0, Topology::Independent);
        let mut table = match build_kernel_table(&spec, 1.0, 100) {
            Ok(t) => t,
            Err(e) => {
                out.push(CheckResult::failed(&name, e.to_string()));
                continue;
            }
        };
        if let Some((i, delta)) = opts.kernel_fault {
            table.inject_fault(i.min(table.len() - 1), delta);
        }
        let mut worst: f64 = 0.0;
        for n in 0..=100 {
            let t = n as f64 * table.dt;
            let exact = zero_temperature_kernel(t, &spec).expect("integer exponent");
            let (t1, t2) = table.at_step(n);
            worst = worst.max((t2 - exact).norm() / exact.norm()).max(t1.norm() / exact.norm());
        }
        for n in 0..100 {
            let t = (n as f64 + 0.5) * table.dt;
            let exact = zero_temperature_kernel(t, &spec).expect("integer exponent");
            worst = worst.max((table.at_half(n).1 - exact).norm() / exact.norm());
        }
        out.push(CheckResult::below(&name, worst, 1e-6, "relative error on the 201-point table at T = 0".into()));
    }
    out
}

fn conjugation_oracles() -> Vec<CheckResult> {
    let g = GateConfig::default();
    let mut worst_sigma: f64 = 0.0;
    for i in 0..50 {
        let t = 2.0 * i as f64 / 49.0;
        let u = u0(t, &g);
        for s in Qubit::BOTH {
            for n in Axis::ALL {
                worst_sigma = worst_sigma.max(embed(s, n).conjugate_by_adjoint(&u).max_abs_diff(&sigma_tilde(s, n, t, &g)));
            }
        }
    }
    let control = ControlConfig::full_protection(14, 7, 2.0 * PI).expect("default control is valid");
    let mut spec = bath(1.0, 26.18, Topology::Common);
    spec.lambda_2 = CouplingVector([Complex64::new(0.3, -0.2), Complex64::new(0.1, 0.4), Complex64::new(-0.8, 0.0)]);
    let cfg = SimConfig::new(g, control, spec);
    let mut worst_r: f64 = 0.0;
    for i in 0..25 {
        let t = 0.0413 * i as f64;
        let u = uc(t, &control) * u0(t, &g);
        for s in Qubit::BOTH {
            let mut oracle = TwoQubitOperator::zeros();
            for m in Axis::ALL {
                oracle += embed(s, m).conjugate_by_adjoint(&u) * cfg.bath.lambda(s).component(m);
            }
            worst_r = worst_r.max(filtered_coupling(s, t, &cfg).max_abs_diff(&oracle));
        }
    }
    vec![
        CheckResult::below("sigma_tilde_conjugation", worst_sigma, 1e-10, "closed form vs U₀† σ U₀ on 50 times".into()),
        CheckResult::below("filtered_coupling_conjugation", worst_r, 1e-9, "R^(s) vs explicit conjugation on 25 times".into()),
    ]
}

/// `Γ(t) = 4∫ J(ω) coth(βω/2)(1 - cos ωt)/ω² dω` by plain composite Gauss–Legendre.
pub fn dephasing_exponent(t: f64, spec: &BathSpec) -> f64 {
    let gl = GaussLegendre::new(16);
    gl.integrate(0.0, 40.0 * spec.omega_c, 4000, |w| {
        let j = spec.eta * spec.omega_c * (w / spec.omega_c).powf(spec.s_exp) * (-w / spec.omega_c).exp();
        let coth = if spec.temperature_rad > 0.0 { 1.0 / (0.5 * w / spec.temperature_rad).tanh() } else { 1.0 };
        4.0 * j * coth * (1.0 - (w * t).cos()) / (w * w)
    })
}

fn pure_dephasing() -> CheckResult {
    let name = "pure_dephasing_oracle";
    let mut spec = bath(1.0, 26.18, Topology::Independent);
    spec.lambda_1 = CouplingVector::along(Axis::Z, Complex64::new(1.0, 0.0));
    spec.lambda_2 = spec.lambda_1;
    let mut cfg = SimConfig::new(GateConfig { j: 0.0, tau: 1.0 }, ControlConfig::off(), spec);
    cfg.n_steps = 1000;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = (BasisState::UpDown.ket() + BasisState::DownDown.ket()) * Complex64::new(s, 0.0);
    cfg.initial_state = [psi[0], psi[1], psi[2], psi[3]];
    let traj = match integrate(&cfg) {
        Ok(t) => t,
        Err(e) => return CheckResult::failed(name, e.to_string()),
    };
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0] {
        let i = traj.index_at(t);
        let expected = 0.5 * (-dephasing_exponent(t, &spec)).exp();
        let got = traj.rho_i[i].matrix()[(1, 3)].norm();
        worst = worst.max(((got - expected) / expected).abs());
    }
    CheckResult::below(name, worst, 5e-3, "relative coherence error at t = τ/2, τ".into())
}

fn noiseless_gate() -> CheckResult {
    let name = "noiseless_gate";
    let control = ControlConfig::full_protection(14, 7, 2.0 * PI).expect("default control is valid");
    let mut spec = bath(1.0, 26.18, Topology::Independent);
    spec.eta = 0.0;
    let mut cfg = SimConfig::new(GateConfig::default(), control, spec);
    cfg.n_steps = 400;
    match integrate(&cfg) {
        Ok(traj) => {
            let c_err = (traj.concurrence[traj.last_index()] - 1.0).abs();
            let f_err = traj.fidelity.iter().map(|f| (f - 1.0).abs()).fold(0.0, f64::max);
            CheckResult::below(name, c_err.max(f_err), 1e-6, "|C(τ) - 1| and max |F - 1|".into())
        }
        Err(e) => CheckResult::failed(name, e.to_string()),
    }
}

pub fn check(opts: &CheckOptions) -> CheckReport {
    let start = Instant::now();
    let mut checks = vec![decoupling(), gate_invariance()];
    checks.extend(kernel_closed_forms(opts));
    checks.extend(conjugation_oracles());
    checks.push(pure_dephasing());
    checks.push(noiseless_gate());
    CheckReport { passed: checks.iter().all(|c| c.passed), seconds: start.elapsed().as_secs_f64(), checks }
}
