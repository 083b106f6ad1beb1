//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Oracles (Pauli algebra, kernel closed forms, dephasing exponent, fits) are
//! written out here rather than borrowed from the library.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use cdd_sim::bath::{build_kernel_table, BathSpec, CouplingVector, Topology};
use cdd_sim::control::{decoupling_residual, uc, uc_single, ControlConfig};
use cdd_sim::dynamics::{integrate, MemoryMethod, SimConfig, Trajectory};
use cdd_sim::gate::{h0, GateConfig};
use cdd_sim::qops::{Axis, BasisState};
use cdd_sim::scenarios::presets::{self, Spectrum};
use cdd_sim::scenarios::sweep::run_sweep;
use cdd_sim::scenarios::Scenario;

type C = Complex64;

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: String) -> Outcome {
    Outcome { passed, summary }
}

fn paulis() -> [Matrix2<C>; 3] {
    let (o, l, i) = (C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 1.0));
    [Matrix2::new(o, l, l, o), Matrix2::new(o, -i, i, o), Matrix2::new(l, o, o, -l)]
}

fn kron(a: &Matrix2<C>, b: &Matrix2<C>) -> Matrix4<C> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn max_abs4(m: &Matrix4<C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Trajectories keyed by preset name, computed once.
#[derive(Default)]
struct Cache {
    runs: HashMap<String, Trajectory>,
}

impl Cache {
    fn get(&mut self, file: cdd_sim::scenarios::ScenarioFile) -> &Trajectory {
        let name = file.name.clone();
        self.runs.entry(name).or_insert_with(|| {
            let s = Scenario::from_file(file).expect("preset resolves");
            integrate(&s.sim).expect("preset integrates")
        })
    }
}

fn at_tau(t: &Trajectory) -> (f64, f64) {
    let i = t.index_at(t.config.gate.tau);
    (t.concurrence[i], t.fidelity[i])
}

// 1
fn decoupling_condition() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let sig = paulis();
    let mut pairs = Vec::new();
    while pairs.len() < 5 {
        let nx: i32 = rng.random_range(-20..=20);
        let nz: i32 = rng.random_range(-20..=20);
        if nx != 0 && nz != 0 && nx != nz && nx != -nz {
            pairs.push((nx, nz));
        }
    }
    let mut worst_lib: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for &(nx, nz) in &pairs {
        let cfg = ControlConfig::full_protection(nx, nz, 2.0 * PI).unwrap();
        worst_lib = worst_lib.max(decoupling_residual(&cfg, 64).unwrap().abs().max());

        // R_mn(t) = ½ Tr(σ_n U† σ_m U), integrated by composite Simpson over one cycle
        let tc = cfg.cycle_time();
        let intervals = 400 * (nx.abs() + nz.abs()) as usize;
        let h = tc / intervals as f64;
        let mut acc = [[0.0f64; 3]; 3];
        for k in 0..=intervals {
            let w = if k == 0 || k == intervals { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            let u = uc_single(k as f64 * h, &cfg);
            for m in 0..3 {
                let rotated = u.adjoint() * sig[m] * u;
                for n in 0..3 {
                    acc[m][n] += w * 0.5 * (sig[n] * rotated).trace().re;
                }
            }
        }
        for row in acc {
            for v in row {
                worst_oracle = worst_oracle.max((v * h / 3.0 / tc).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_lib < 1e-8 && worst_oracle < 1e-8 && secs < 1.0,
        format!("pairs {pairs:?}: library {worst_lib:.2e}, Simpson oracle {worst_oracle:.2e} (< 1e-8), {secs:.2} s (< 1 s)"),
    )
}

// 2
fn gate_invariance() -> Outcome {
    let sig = paulis();
    let g = GateConfig::default();
    let heis: Matrix4<C> = (0..3).map(|m| kron(&sig[m], &sig[m])).sum::<Matrix4<C>>() * C::new(g.j, 0.0);
    let lib_h0 = h0(&g);
    let ctl = ControlConfig::full_protection(presets::N_X, presets::N_Z, presets::CONTROL_OMEGA).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let t: f64 = rng.random_range(0.0..1.0);
        let u = uc(t, &ctl);
        let rotated = u.matrix().adjoint() * heis * u.matrix();
        worst = worst.max(max_abs4(&(rotated - heis)));
    }
    let same = max_abs4(&(lib_h0.matrix() - heis)) < 1e-15;
    outcome(worst < 1e-12 && same, format!("max |U_c†H₀U_c - H₀| = {worst:.2e} over 20 random times (< 1e-12)"))
}

// 3
fn noiseless_gate() -> Outcome {
    let start = Instant::now();
    let s = Scenario::from_file(presets::noiseless()).unwrap();
    let t = integrate(&s.sim).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (c, _) = at_tau(&t);
    let f_err = t.fidelity.iter().map(|f| (f - 1.0).abs()).fold(0.0, f64::max);
    let tr = t.trace_error.iter().copied().fold(0.0, f64::max);
    // pure-state concurrence |2(αδ - βγ)| of U₀(τ)|↑↓⟩ as an independent check of the end point
    let psi = cdd_sim::gate::u0(1.0, &GateConfig::default()).apply(&BasisState::UpDown.ket());
    let c_pure = (C::new(2.0, 0.0) * (psi[0] * psi[3] - psi[1] * psi[2])).norm();
    outcome(
        (c - 1.0).abs() < 1e-6 && (c_pure - 1.0).abs() < 1e-12 && f_err < 1e-6 && tr < 1e-9 && secs < 10.0,
        format!("|C(τ) - 1| = {:.1e}, max |F - 1| = {f_err:.1e}, max trace error {tr:.1e}, {secs:.1} s", (c - 1.0).abs()),
    )
}

// 4
fn kernel_closed_forms() -> Outcome {
    let mut worst: [f64; 2] = [0.0; 2];
    let mut t1_max: f64 = 0.0;
    for (k, s_exp) in [1.0, 3.0].into_iter().enumerate() {
        let spec = BathSpec {
            eta: presets::ETA,
            s_exp,
            omega_c: presets::OMEGA_C,
            temperature_rad: 0.0,
            topology: Topology::Independent,
            lambda_1: CouplingVector::channels(1.0, 1.0),
            lambda_2: CouplingVector::channels(1.0, 1.0),
        };
        let table = build_kernel_table(&spec, 1.0, 100).unwrap();
        let wc = spec.omega_c;
        for n in 0..100 {
            let t = n as f64 * table.dt;
            let z = C::new(1.0, -wc * t);
            let exact = if s_exp == 1.0 {
                spec.eta * wc * wc / (z * z)
            } else {
                6.0 * spec.eta * wc * wc / (z * z * z * z)
            };
            let (t1, t2) = table.at_step(n);
            worst[k] = worst[k].max((t2 - exact).norm() / exact.norm());
            t1_max = t1_max.max(t1.norm());
        }
    }
    outcome(
        worst[0] < 1e-6 && worst[1] < 1e-6 && t1_max == 0.0,
        format!("relative error s=1: {:.2e}, s=3: {:.2e} (< 1e-6); max |T₁| at T=0: {t1_max:e}", worst[0], worst[1]),
    )
}

/// `Γ(t)` by composite Simpson on `[0, 40ω_c]`, with the `ω → 0` limit taken by hand.
fn dephasing_exponent(t: f64, eta: f64, wc: f64, temp: f64) -> f64 {
    let f = |w: f64| {
        if w == 0.0 {
            return 4.0 * eta * 2.0 * temp * t * t / 2.0;
        }
        let j = eta * w * (-w / wc).exp();
        4.0 * j / (0.5 * w / temp).tanh() * (1.0 - (w * t).cos()) / (w * w)
    };
    let n = 400_000;
    let h = 40.0 * wc / n as f64;
    let mut s = f(0.0) + f(n as f64 * h);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    s * h / 3.0
}

// 5
fn pure_dephasing() -> Outcome {
    let start = Instant::now();
    let temp = cdd_sim::bath::temperature_rad_from_kelvin(presets::KELVIN, presets::TAU_SECONDS);
    let z = CouplingVector::along(Axis::Z, C::new(1.0, 0.0));
    let spec = BathSpec {
        eta: presets::ETA,
        s_exp: 1.0,
        omega_c: presets::OMEGA_C,
        temperature_rad: temp,
        topology: Topology::Independent,
        lambda_1: z,
        lambda_2: z,
    };
    let mut cfg = SimConfig::new(GateConfig { j: 0.0, tau: 1.0 }, ControlConfig::off(), spec);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    cfg.initial_state = [C::new(0.0, 0.0), C::new(r, 0.0), C::new(0.0, 0.0), C::new(r, 0.0)];
    let traj = integrate(&cfg).unwrap();
    let mut errs = Vec::new();
    for t in [0.5, 1.0] {
        let expected = 0.5 * (-dephasing_exponent(t, spec.eta, spec.omega_c, temp)).exp();
        let got = traj.rho_i[traj.index_at(t)].matrix()[(1, 3)].norm();
        errs.push(((got - expected) / expected).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        errs.iter().all(|e| *e < 5e-3) && secs < 30.0,
        format!("relative error at τ/2: {:.2e}, at τ: {:.2e} (< 5e-3), {secs:.1} s", errs[0], errs[1]),
    )
}

// 6
fn protected(cache: &mut Cache) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for spectrum in Spectrum::BOTH {
        for topology in presets::TOPOLOGIES {
            let t = cache.get(presets::protected(spectrum, topology));
            let f_min = t.fidelity.iter().copied().fold(f64::INFINITY, f64::min);
            let (c, _) = at_tau(t);
            ok &= f_min > 0.95 && c > 0.95;
            parts.push(format!("{}/{}: min F {f_min:.4}, C(τ) {c:.4}", spectrum.label(), presets::topology_label(topology)));
        }
    }
    outcome(ok, parts.join("; "))
}

fn interior_peak(t: &Trajectory) -> (bool, f64, f64) {
    let (imax, cmax) = t.concurrence.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
    let end = t.concurrence[t.last_index()];
    (imax > 0 && imax < t.last_index() && end < cmax, t.times[imax], cmax)
}

// 7
fn unprotected(cache: &mut Cache) -> Outcome {
    let mut c = HashMap::new();
    let mut peaks = Vec::new();
    for spectrum in Spectrum::BOTH {
        for topology in presets::TOPOLOGIES {
            let t = cache.get(presets::unprotected(spectrum, topology));
            c.insert((spectrum.label(), presets::topology_label(topology)), at_tau(t).0);
            let (ok, tp, cp) = interior_peak(t);
            peaks.push((ok, format!("{}/{} peak {cp:.3} at t={tp:.3}", spectrum.label(), presets::topology_label(topology))));
        }
    }
    let spectrum_order = c[&("superohmic", "independent")] < c[&("ohmic", "independent")];
    let topo_ohmic = c[&("ohmic", "common")] > c[&("ohmic", "independent")];
    let topo_super = c[&("superohmic", "common")] > c[&("superohmic", "independent")];
    let peaks_ok = peaks.iter().all(|p| p.0);
    let mark = |b: bool| if b { "ok" } else { "VIOLATED" };
    outcome(
        spectrum_order && topo_ohmic && topo_super && peaks_ok,
        format!(
            "C(τ) ind: ohmic {:.3e}, superohmic {:.3e} [super < ohmic: {}]; com: ohmic {:.3e}, superohmic {:.3e} [com > ind: {}, {}]; peaks [{}]: {}",
            c[&("ohmic", "independent")],
            c[&("superohmic", "independent")],
            mark(spectrum_order),
            c[&("ohmic", "common")],
            c[&("superohmic", "common")],
            mark(topo_ohmic),
            mark(topo_super),
            mark(peaks_ok),
            peaks.iter().map(|p| p.1.as_str()).collect::<Vec<_>>().join(", ")
        ),
    )
}

// 8
fn residual(cache: &mut Cache) -> Outcome {
    let mut c = HashMap::new();
    for spectrum in Spectrum::BOTH {
        for topology in presets::TOPOLOGIES {
            let t = cache.get(presets::residual(spectrum, topology));
            c.insert((spectrum.label(), presets::topology_label(topology)), at_tau(t).0);
        }
    }
    let (oi, oc) = (c[&("ohmic", "independent")], c[&("ohmic", "common")]);
    let (si, sc) = (c[&("superohmic", "independent")], c[&("superohmic", "common")]);
    let order = oi > si && oc > sc;
    let spectrum_gap = ((oi - si).abs()).min((oc - sc).abs());
    let topo_gap = (oi - oc).abs().max((si - sc).abs());
    let small_topo = topo_gap < 0.5 * spectrum_gap;
    outcome(
        order && small_topo,
        format!(
            "C(τ) ohmic ind {oi:.4}, com {oc:.4}; superohmic ind {si:.4}, com {sc:.4} [ohmic > superohmic: {}]; topology gap {topo_gap:.4} vs spectrum gap {spectrum_gap:.4} [< half: {}]",
            if order { "ok" } else { "VIOLATED" },
            if small_topo { "ok" } else { "VIOLATED" }
        ),
    )
}

struct Fit {
    slope: f64,
    r2: f64,
}

fn fit(x: &[f64], y: &[f64]) -> Fit {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    Fit { slope: sxy / sxx, r2: if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) } }
}

// 9
fn sweep_linearity() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut slopes = HashMap::new();
    let mut r2_ok = true;
    let mut zero_row_ok = true;
    let mut parts = Vec::new();
    for topology in presets::TOPOLOGIES {
        for spectrum in Spectrum::BOTH {
            let s = Scenario::from_file(presets::amplitude_sweep(spectrum, topology)).unwrap();
            let out = run_sweep(&s, dir.path(), None).unwrap();
            assert!(out.failures.is_empty(), "sweep point failed: {:?}", out.failures);
            let x: Vec<f64> = out.rows.iter().map(|r| r.lambda).collect();
            let c: Vec<f64> = out.rows.iter().map(|r| r.concurrence_at_tau).collect();
            let f: Vec<f64> = out.rows.iter().map(|r| r.fidelity_at_tau).collect();
            let (fc, ff) = (fit(&x, &c), fit(&x, &f));
            r2_ok &= fc.r2 >= 0.98 && ff.r2 >= 0.98;
            zero_row_ok &= c[0] > 0.99;
            let key = (presets::topology_label(topology), spectrum.label());
            slopes.insert(key, fc.slope.abs());
            parts.push(format!(
                "{}/{}: C(0) {:.4}, R²(C) {:.3}, R²(F) {:.3}, |slope C| {:.3}",
                key.0, key.1, c[0], fc.r2, ff.r2, fc.slope.abs()
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let co = slopes[&("common", "ohmic")];
    let io = slopes[&("independent", "ohmic")];
    let largest = slopes.values().all(|&v| v <= co);
    let smallest = slopes.values().all(|&v| v >= io);
    let pairs = co >= slopes[&("independent", "superohmic")] && slopes[&("common", "superohmic")] >= io;
    let mark = |b: bool| if b { "ok" } else { "VIOLATED" };
    outcome(
        r2_ok && zero_row_ok && largest && smallest && pairs && secs < 600.0,
        format!(
            "{}; R² ≥ 0.98 [{}], C(λ=0) > 0.99 [{}], common-ohmic largest [{}], independent-ohmic smallest [{}], pairwise [{}], {secs:.0} s",
            parts.join("; "),
            mark(r2_ok),
            mark(zero_row_ok),
            mark(largest),
            mark(smallest),
            mark(pairs)
        ),
    )
}

fn terminal(file: &cdd_sim::scenarios::ScenarioFile, n_steps: usize) -> Matrix4<C> {
    let mut f = file.clone();
    f.n_steps = n_steps;
    let s = Scenario::from_file(f).unwrap();
    let t = integrate(&s.sim).unwrap();
    *t.rho_i[t.last_index()].matrix()
}

// 10
fn integrator_order() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for topology in presets::TOPOLOGIES {
        let file = presets::unprotected(Spectrum::Ohmic, topology);
        let (n, reference) = (200, 1600);
        let r = terminal(&file, reference);
        let e_coarse = max_abs4(&(terminal(&file, n / 2) - r));
        let e_fine = max_abs4(&(terminal(&file, n) - r));
        let ratio = e_coarse / e_fine;
        ok &= (12.0..=20.0).contains(&ratio);
        parts.push(format!(
            "{}: err(N={}) {e_coarse:.3e}, err(N={n}) {e_fine:.3e}, ratio {ratio:.2}",
            presets::topology_label(topology),
            n / 2
        ));
    }
    outcome(ok, format!("{} (reference N=1600, ratio in [12, 20])", parts.join("; ")))
}

// 11
fn fast_path(cache: &mut Cache) -> Outcome {
    let file = presets::protected(Spectrum::Ohmic, Topology::Independent);
    let direct = cache.get(file.clone()).rho_i.clone();
    let mut fast_file = file;
    fast_file.memory = MemoryMethod::Separable;
    let s = Scenario::from_file(fast_file).unwrap();
    let start = Instant::now();
    let fast = integrate(&s.sim).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let worst = direct
        .iter()
        .zip(&fast.rho_i)
        .map(|(a, b)| max_abs4(&(a.matrix() - b.matrix())))
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-6 && direct.len() == fast.rho_i.len(),
        format!("max entry difference over {} grid points: {worst:.2e} (< 1e-6); separable run {secs:.1} s", direct.len()),
    )
}

fn main() -> ExitCode {
    let mut cache = Cache::default();
    let criteria: Vec<(u32, &str, Box<dyn FnMut(&mut Cache) -> Outcome>)> = vec![
        (1, "decoupling condition", Box::new(|_| decoupling_condition())),
        (2, "gate invariance under control", Box::new(|_| gate_invariance())),
        (3, "noiseless gate", Box::new(|_| noiseless_gate())),
        (4, "kernel closed forms", Box::new(|_| kernel_closed_forms())),
        (5, "pure-dephasing oracle", Box::new(|_| pure_dephasing())),
        (6, "protected gate fidelity", Box::new(protected)),
        (7, "unprotected orderings", Box::new(unprotected)),
        (8, "residual amplitude-damping ordering", Box::new(residual)),
        (9, "coupling sweep linearity and slopes", Box::new(|_| sweep_linearity())),
        (10, "fourth-order convergence", Box::new(|_| integrator_order())),
        (11, "separable fast path equivalence", Box::new(fast_path)),
    ];
    let mut failed = Vec::new();
    for (id, name, mut f) in criteria {
        let start = Instant::now();
        let o = f(&mut cache);
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{tag}] {name}: {} ({:.1} s)", o.summary, start.elapsed().as_secs_f64());
        if !o.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 11 criteria passed; failing: {failed:?}", 11 - failed.len());
        ExitCode::FAILURE
    }
}
