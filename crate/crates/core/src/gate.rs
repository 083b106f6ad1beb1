//! Heisenberg exchange gate `H₀ = J σ^(1)·σ^(2)` and its interaction-picture Pauli operators.

use std::f64::consts::PI;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::qops::{embed, expm_hermitian, Axis, Qubit, TwoQubitOperator};

/// Exchange constant `j` in rad per τ and gate duration `tau`.
///
/// With `j·tau = π/8` the singlet picks up a relative phase `e^{iπ/2}` at
/// `t = tau`, which is √SWAP up to a global phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    pub j: f64,
    pub tau: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig { j: PI / 8.0, tau: 1.0 }
    }
}

static HEISENBERG: LazyLock<TwoQubitOperator> = LazyLock::new(|| {
    let mut h = TwoQubitOperator::zeros();
    for m in Axis::ALL {
        h += embed(Qubit::One, m) * embed(Qubit::Two, m);
    }
    h
});

/// `embed(s, n)` and `(σ^(s) × σ^(s̄))_n`, indexed `[s][n]`.
struct PauliTables {
    single: [[TwoQubitOperator; 3]; 2],
    cross: [[TwoQubitOperator; 3]; 2],
}

static TABLES: LazyLock<PauliTables> = LazyLock::new(|| {
    let mut single = [[TwoQubitOperator::zeros(); 3]; 2];
    let mut cross = [[TwoQubitOperator::zeros(); 3]; 2];
    for s in Qubit::BOTH {
        let o = s.other();
        for n in 0..3 {
            single[s.index()][n] = embed(s, Axis::from_index(n));
            // (A × B)_n = A_j B_k - A_k B_j with (n, j, k) cyclic
            let j = Axis::from_index((n + 1) % 3);
            let k = Axis::from_index((n + 2) % 3);
            cross[s.index()][n] = embed(s, j) * embed(o, k) - embed(s, k) * embed(o, j);
        }
    }
    PauliTables { single, cross }
});

pub fn h0(cfg: &GateConfig) -> TwoQubitOperator {
    *HEISENBERG * cfg.j
}

/// `U₀(t) = exp(-iH₀t)`.
pub fn u0(t: f64, cfg: &GateConfig) -> TwoQubitOperator {
    expm_hermitian(&HEISENBERG, cfg.j * t).expect("Heisenberg generator is Hermitian")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisenbergCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn heisenberg_coeffs(t: f64, cfg: &GateConfig) -> HeisenbergCoeffs {
    let (s, c) = (4.0 * cfg.j * t).sin_cos();
    HeisenbergCoeffs { a: 0.5 * (1.0 + c), b: 0.5 * (1.0 - c), c: 0.5 * s }
}

/// `U₀†(t) σ_n^(s) U₀(t)` from the closed-form vector relation.
pub fn sigma_tilde(s: Qubit, n: Axis, t: f64, cfg: &GateConfig) -> TwoQubitOperator {
    let k = heisenberg_coeffs(t, cfg);
    let tables = &*TABLES;
    let (si, oi, ni) = (s.index(), s.other().index(), n.index());
    tables.single[si][ni] * k.a + tables.single[oi][ni] * k.b - tables.cross[si][ni] * k.c
}

/// All six `σ̃_n^(s)(t)`, indexed `[s][n]`.
pub fn sigma_tilde_all(t: f64, cfg: &GateConfig) -> [[TwoQubitOperator; 3]; 2] {
    let mut out = [[TwoQubitOperator::zeros(); 3]; 2];
    for s in Qubit::BOTH {
        for n in Axis::ALL {
            out[s.index()][n.index()] = sigma_tilde(s, n, t, cfg);
        }
    }
    out
}
