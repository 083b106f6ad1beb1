//! Two-qubit operator algebra.
//!
//! Every operator lives in the fixed product basis
//! `{|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩}` with qubit 1 as the left tensor factor and
//! `|↑⟩` the +1 eigenstate of `σ_z`. All other modules rely on this ordering.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use thiserror::Error;

pub type StateVector = Vector4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, PartialEq)]
pub enum QopsError {
    #[error("qubit index must be 1 or 2, got {0}")]
    InvalidQubit(u8),
    #[error("operator is not Hermitian (max |H - H†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("density matrix trace deviates from 1 by {0:e}")]
    BadTrace(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qubit {
    One,
    Two,
}

impl Qubit {
    pub const BOTH: [Qubit; 2] = [Qubit::One, Qubit::Two];

    pub fn index(self) -> usize {
        match self {
            Qubit::One => 0,
            Qubit::Two => 1,
        }
    }

    pub fn other(self) -> Qubit {
        match self {
            Qubit::One => Qubit::Two,
            Qubit::Two => Qubit::One,
        }
    }
}

impl TryFrom<u8> for Qubit {
    type Error = QopsError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(Qubit::One),
            2 => Ok(Qubit::Two),
            other => Err(QopsError::InvalidQubit(other)),
        }
    }
}

/// Computational basis states, in matrix index order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisState {
    UpUp = 0,
    UpDown = 1,
    DownUp = 2,
    DownDown = 3,
}

impl BasisState {
    pub fn ket(self) -> StateVector {
        let mut v = StateVector::zeros();
        v[self as usize] = ONE;
        v
    }
}

/// Standard Pauli matrix.
pub fn pauli(axis: Axis) -> Matrix2<Complex64> {
    match axis {
        Axis::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
        Axis::Y => Matrix2::new(ZERO, -I, I, ZERO),
        Axis::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
    }
}

pub fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// 4×4 complex operator on the two-qubit Hilbert space.
#[derive(Clone, Copy, PartialEq)]
pub struct TwoQubitOperator(pub Matrix4<Complex64>);

impl fmt::Debug for TwoQubitOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TwoQubitOperator{}", self.0)
    }
}

impl TwoQubitOperator {
    pub fn zeros() -> Self {
        TwoQubitOperator(Matrix4::zeros())
    }

    pub fn identity() -> Self {
        TwoQubitOperator(Matrix4::identity())
    }

    pub fn from_matrix(m: Matrix4<Complex64>) -> Self {
        TwoQubitOperator(m)
    }

    pub fn kron(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Self {
        TwoQubitOperator(kron2(a, b))
    }

    /// `|ψ⟩⟨φ|`
    pub fn outer(psi: &StateVector, phi: &StateVector) -> Self {
        TwoQubitOperator(psi * phi.adjoint())
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        TwoQubitOperator(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        TwoQubitOperator(self.0 * other.0 - other.0 * self.0)
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        self.0 * v
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn scale(&self, z: Complex64) -> Self {
        TwoQubitOperator(self.0 * z)
    }

    /// `U X U†`
    pub fn conjugate_by(&self, u: &Self) -> Self {
        TwoQubitOperator(u.0 * self.0 * u.0.adjoint())
    }

    /// `U† X U`
    pub fn conjugate_by_adjoint(&self, u: &Self) -> Self {
        TwoQubitOperator(u.0.adjoint() * self.0 * u.0)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 4] {
        let h = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let mut vals = [0.0; 4];
        for (dst, src) in vals.iter_mut().zip(eig.eigenvalues.iter()) {
            *dst = *src;
        }
        vals.sort_by(f64::total_cmp);
        vals
    }
}

impl Index<(usize, usize)> for TwoQubitOperator {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl Add for TwoQubitOperator {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        TwoQubitOperator(self.0 + rhs.0)
    }
}

impl AddAssign for TwoQubitOperator {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for TwoQubitOperator {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        TwoQubitOperator(self.0 - rhs.0)
    }
}

impl Neg for TwoQubitOperator {
    type Output = Self;
    fn neg(self) -> Self {
        TwoQubitOperator(-self.0)
    }
}

impl Mul for TwoQubitOperator {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        TwoQubitOperator(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a TwoQubitOperator> for &'a TwoQubitOperator {
    type Output = TwoQubitOperator;
    fn mul(self, rhs: &TwoQubitOperator) -> TwoQubitOperator {
        TwoQubitOperator(self.0 * rhs.0)
    }
}

impl Mul<Complex64> for TwoQubitOperator {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        TwoQubitOperator(self.0 * rhs)
    }
}

impl Mul<f64> for TwoQubitOperator {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        TwoQubitOperator(self.0 * Complex64::new(rhs, 0.0))
    }
}

/// `σ_m ⊗ 1` for qubit 1, `1 ⊗ σ_m` for qubit 2.
pub fn embed(s: Qubit, m: Axis) -> TwoQubitOperator {
    let id = Matrix2::identity();
    match s {
        Qubit::One => TwoQubitOperator::kron(&pauli(m), &id),
        Qubit::Two => TwoQubitOperator::kron(&id, &pauli(m)),
    }
}

/// `exp(-iθH)` for Hermitian `H`, by spectral decomposition.
pub fn expm_hermitian(h: &TwoQubitOperator, theta: f64) -> Result<TwoQubitOperator, QopsError> {
    let deviation = h.hermiticity_error();
    if deviation > 1e-12 {
        return Err(QopsError::NotHermitian { deviation });
    }
    let eig = SymmetricEigen::new(h.0);
    let phases = Matrix4::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -theta * e)));
    let v = eig.eigenvectors;
    Ok(TwoQubitOperator(v * phases * v.adjoint()))
}

/// `exp(-iθσ_axis)` on one qubit, exact.
pub fn pauli_rotation(axis: Axis, theta: f64) -> Matrix2<Complex64> {
    let (s, c) = theta.sin_cos();
    Matrix2::identity() * Complex64::new(c, 0.0) - pauli(axis) * Complex64::new(0.0, s)
}

/// Diagnostics of a 4×4 matrix regarded as a density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validity {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl Validity {
    pub fn is_positive(&self, positivity_tol: f64) -> bool {
        self.min_eigenvalue >= -positivity_tol
    }
}

/// Two-qubit density matrix.
///
/// Hermiticity and unit trace are checked on construction. Positivity is only
/// monitored: second-order Born dynamics can leave the positive cone, and that
/// is reported rather than repaired.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(TwoQubitOperator);

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-8;
    pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-3;

    pub fn new(op: TwoQubitOperator) -> Result<Self, QopsError> {
        let deviation = op.hermiticity_error();
        if deviation > Self::HERMITICITY_TOL {
            return Err(QopsError::NotHermitian { deviation });
        }
        let trace_error = (op.trace() - ONE).norm();
        if trace_error > Self::TRACE_TOL {
            return Err(QopsError::BadTrace(trace_error));
        }
        Ok(DensityMatrix(op))
    }

    /// Wraps an integrator state without checks; callers monitor it via [`validity`](Self::validity).
    pub fn from_operator_unchecked(op: TwoQubitOperator) -> Self {
        DensityMatrix(op)
    }

    pub fn pure(psi: &StateVector) -> Self {
        DensityMatrix(TwoQubitOperator::outer(psi, psi))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(TwoQubitOperator::identity() * 0.25)
    }

    pub fn operator(&self) -> &TwoQubitOperator {
        &self.0
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0 .0
    }

    pub fn trace_error(&self) -> f64 {
        (self.0.trace() - ONE).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.hermitian_eigenvalues()[0]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.0.is_hermitian(tol)
    }

    pub fn has_unit_trace(&self, tol: f64) -> bool {
        self.trace_error() <= tol
    }

    pub fn is_positive(&self, positivity_tol: f64) -> bool {
        self.min_eigenvalue() >= -positivity_tol
    }

    pub fn validity(&self) -> Validity {
        Validity {
            hermiticity_error: self.0.hermiticity_error(),
            trace_error: self.trace_error(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_diff2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    }

    #[test]
    fn pauli_basics() {
        assert_eq!(pauli(Axis::Z), Matrix2::new(ONE, ZERO, ZERO, -ONE));
        let xy = pauli(Axis::X) * pauli(Axis::Y);
        assert!(max_diff2(&xy, &(pauli(Axis::Z) * I)) < 1e-15);
        for m in Axis::ALL {
            for n in Axis::ALL {
                let tr = (pauli(m) * pauli(n)).trace();
                let expected = if m == n { 2.0 } else { 0.0 };
                assert!((tr - c(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pauli_product_rule() {
        for m in Axis::ALL {
            for n in Axis::ALL {
                let mut expected = Matrix2::zeros();
                if m == n {
                    expected += Matrix2::identity();
                }
                for k in Axis::ALL {
                    let e = levi_civita(m.index(), n.index(), k.index());
                    expected += pauli(k) * c(0.0, e);
                }
                assert!(max_diff2(&(pauli(m) * pauli(n)), &expected) < 1e-15);
            }
        }
    }

    #[test]
    fn embedding_convention() {
        let ud = BasisState::UpDown.ket();
        assert!((embed(Qubit::One, Axis::Z).apply(&ud) - ud).norm() < 1e-15);
        assert!((embed(Qubit::Two, Axis::Z).apply(&ud) + ud).norm() < 1e-15);
        for m in Axis::ALL {
            for n in Axis::ALL {
                let comm = embed(Qubit::One, m).commutator(&embed(Qubit::Two, n));
                assert!(comm.max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn embedded_algebra_per_qubit() {
        for s in Qubit::BOTH {
            let xy = embed(s, Axis::X) * embed(s, Axis::Y);
            assert!(xy.max_abs_diff(&(embed(s, Axis::Z) * I)) < 1e-15);
        }
    }

    #[test]
    fn heisenberg_sum_spectrum() {
        let mut h = TwoQubitOperator::zeros();
        for m in Axis::ALL {
            h += embed(Qubit::One, m) * embed(Qubit::Two, m);
        }
        let eig = h.hermitian_eigenvalues();
        let expected = [-3.0, 1.0, 1.0, 1.0];
        for (a, b) in eig.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{eig:?}");
        }
    }

    #[test]
    fn qubit_index_validation() {
        assert_eq!(Qubit::try_from(1), Ok(Qubit::One));
        assert_eq!(Qubit::try_from(2), Ok(Qubit::Two));
        assert_eq!(Qubit::try_from(3), Err(QopsError::InvalidQubit(3)));
        assert_eq!(Qubit::try_from(0), Err(QopsError::InvalidQubit(0)));
    }

    #[test]
    fn expm_known_values() {
        let h = embed(Qubit::One, Axis::X) + embed(Qubit::Two, Axis::Y) * 0.3;
        let u = expm_hermitian(&h, 0.0).unwrap();
        assert!(u.max_abs_diff(&TwoQubitOperator::identity()) < 1e-14);

        let u = expm_hermitian(&embed(Qubit::One, Axis::Z), std::f64::consts::FRAC_PI_2).unwrap();
        let expected = TwoQubitOperator(Matrix4::from_diagonal(&Vector4::new(-I, -I, I, I)));
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut m = Matrix4::zeros();
        m[(0, 1)] = ONE;
        let err = expm_hermitian(&TwoQubitOperator(m), 1.0).unwrap_err();
        assert!(matches!(err, QopsError::NotHermitian { .. }));
    }

    #[test]
    fn pauli_rotation_matches_spectral() {
        for axis in Axis::ALL {
            let u2 = pauli_rotation(axis, 0.731);
            let u4 = TwoQubitOperator::kron(&u2, &Matrix2::identity());
            let spectral = expm_hermitian(&embed(Qubit::One, axis), 0.731).unwrap();
            assert!(u4.max_abs_diff(&spectral) < 1e-13);
        }
    }

    #[test]
    fn density_matrix_checks() {
        let rho = DensityMatrix::pure(&BasisState::UpDown.ket());
        let v = rho.validity();
        assert!(v.hermiticity_error == 0.0 && v.trace_error == 0.0);
        assert!(v.min_eigenvalue.abs() < 1e-14);
        assert!(DensityMatrix::new(TwoQubitOperator::identity()).is_err());
        let mut m = Matrix4::identity() * c(0.25, 0.0);
        m[(0, 1)] = c(0.0, 0.1);
        assert!(matches!(
            DensityMatrix::new(TwoQubitOperator(m)),
            Err(QopsError::NotHermitian { .. })
        ));

        let m = Matrix4::from_diagonal(&Vector4::new(c(1.1, 0.0), c(-0.1, 0.0), ZERO, ZERO));
        let rho = DensityMatrix::new(TwoQubitOperator(m)).unwrap();
        assert!(!rho.is_positive(1e-3));
        assert!(rho.is_positive(0.2));
    }

    fn arb_hermitian() -> impl Strategy<Value = TwoQubitOperator> {
        proptest::collection::vec(-2.0f64..2.0, 32).prop_map(|v| {
            let m = Matrix4::from_fn(|r, col| c(v[4 * r + col], v[16 + 4 * r + col]));
            TwoQubitOperator((m + m.adjoint()) * c(0.5, 0.0))
        })
    }

    proptest! {
        #[test]
        fn expm_is_unitary(h in arb_hermitian(), theta in -5.0f64..5.0) {
            let u = expm_hermitian(&h, theta).unwrap();
            let uu = u * u.adjoint();
            prop_assert!(uu.max_abs_diff(&TwoQubitOperator::identity()) < 1e-12);
        }

        #[test]
        fn expm_group_law(h in arb_hermitian(), t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
            let a = expm_hermitian(&h, t1).unwrap();
            let b = expm_hermitian(&h, t2).unwrap();
            let ab = expm_hermitian(&h, t1 + t2).unwrap();
            prop_assert!((a * b).max_abs_diff(&ab) < 1e-10);
        }
    }
}
