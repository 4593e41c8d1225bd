//! Two-qubit spin algebra in the Pauli convention.
//!
//! States live in the ordered basis `(↑↑, ↑↓, ↓↑, ↓↓)`, index 0..=3, with
//! particle 1 as the most significant qubit. Operators are 4×4 complex
//! matrices in that basis.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance for exchange classification: `||P12 ψ ∓ ψ|| ≤ tol·||ψ||`.
pub const EXCHANGE_TOL: f64 = 1e-10;

/// Tolerance used when checking that a state is normalized.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Particle {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Behaviour of a state under particle exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeClass {
    Symmetric,
    Antisymmetric,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PsiMinus,
        BellState::PsiPlus,
        BellState::PhiPlus,
        BellState::PhiMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A (not necessarily normalized) two-qubit spin state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState(Vector4<C64>);

impl SpinState {
    pub fn new(amplitudes: [C64; 4]) -> Self {
        SpinState(Vector4::from(amplitudes))
    }

    pub fn from_real(amplitudes: [f64; 4]) -> Self {
        SpinState(Vector4::from(amplitudes.map(|a| C64::new(a, 0.0))))
    }

    pub fn from_vector(v: Vector4<C64>) -> Self {
        SpinState(v)
    }

    /// Computational basis state; `index` follows `(↑↑, ↑↓, ↓↑, ↓↓)`.
    pub fn basis(index: usize) -> Self {
        let mut v = Vector4::zeros();
        v[index] = ONE;
        SpinState(v)
    }

    pub fn up_up() -> Self {
        Self::basis(0)
    }

    pub fn up_down() -> Self {
        Self::basis(1)
    }

    pub fn down_up() -> Self {
        Self::basis(2)
    }

    pub fn down_down() -> Self {
        Self::basis(3)
    }

    /// Exchange-symmetric state `C|↑↑⟩ + D(|↑↓⟩ + |↓↑⟩) + G|↓↓⟩`, normalized.
    pub fn symmetric(c: C64, d: C64, g: C64) -> Result<Self> {
        SpinState::new([c, d, d, g]).normalized()
    }

    /// Product state `(u ⊗ v)` of two single-qubit vectors.
    pub fn product(u: [C64; 2], v: [C64; 2]) -> Self {
        SpinState::new([u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]])
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn vector(&self) -> &Vector4<C64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.0.norm_squared() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(SpinState(self.0.unscale(n)))
    }

    /// Returns an error unless the state is normalized within [`NORM_TOL`].
    pub fn require_normalized(&self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm: n })
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SpinState) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|⟨self|other⟩|²` for normalized states.
    pub fn fidelity(&self, other: &SpinState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn scale(&self, s: C64) -> SpinState {
        SpinState(self.0 * s)
    }

    /// Coefficient matrix `C_nm` with row = particle-1 index, column = particle-2 index.
    pub fn coefficient_matrix(&self) -> Matrix2<C64> {
        Matrix2::new(self.0[0], self.0[1], self.0[2], self.0[3])
    }

    pub fn exchange_class(&self) -> ExchangeClass {
        let n = self.norm();
        let swapped = swap_operator().apply(self);
        if (swapped.0 - self.0).norm() <= EXCHANGE_TOL * n {
            ExchangeClass::Symmetric
        } else if (swapped.0 + self.0).norm() <= EXCHANGE_TOL * n {
            ExchangeClass::Antisymmetric
        } else {
            ExchangeClass::Mixed
        }
    }
}

impl Add for SpinState {
    type Output = SpinState;
    fn add(self, rhs: SpinState) -> SpinState {
        SpinState(self.0 + rhs.0)
    }
}

impl Sub for SpinState {
    type Output = SpinState;
    fn sub(self, rhs: SpinState) -> SpinState {
        SpinState(self.0 - rhs.0)
    }
}

/// A linear operator on the two-qubit spin space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinOperator(Matrix4<C64>);

impl SpinOperator {
    pub fn from_matrix(m: Matrix4<C64>) -> Self {
        SpinOperator(m)
    }

    pub fn identity() -> Self {
        SpinOperator(Matrix4::identity())
    }

    pub fn zero() -> Self {
        SpinOperator(Matrix4::zeros())
    }

    /// `a ⊗ b`, `a` acting on particle 1.
    pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Self {
        SpinOperator(a.kronecker(b).fixed_view::<4, 4>(0, 0).into_owned())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn apply(&self, state: &SpinState) -> SpinState {
        SpinState(self.0 * state.0)
    }

    pub fn adjoint(&self) -> SpinOperator {
        SpinOperator(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> SpinOperator {
        SpinOperator(self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> SpinOperator {
        SpinOperator(self.0 * C64::new(s, 0.0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn commutator(&self, other: &SpinOperator) -> SpinOperator {
        SpinOperator(self.0 * other.0 - other.0 * self.0)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Matrix element `⟨bra|self|ket⟩`.
    pub fn element(&self, bra: &SpinState, ket: &SpinState) -> C64 {
        bra.0.dotc(&(self.0 * ket.0))
    }

    /// Splits the operator into exchange sectors.
    pub fn sector_blocks(&self) -> SectorBlocks {
        let ps = symmetric_projector().0;
        let pa = antisymmetric_projector().0;
        let m = self.0;
        let off = ((pa * m * ps).norm_squared() + (ps * m * pa).norm_squared()).sqrt();
        SectorBlocks {
            singlet: (pa * m * pa).norm(),
            triplet: (ps * m * ps).norm(),
            off_block: off,
            total: m.norm(),
        }
    }
}

impl Add for SpinOperator {
    type Output = SpinOperator;
    fn add(self, rhs: SpinOperator) -> SpinOperator {
        SpinOperator(self.0 + rhs.0)
    }
}

impl Sub for SpinOperator {
    type Output = SpinOperator;
    fn sub(self, rhs: SpinOperator) -> SpinOperator {
        SpinOperator(self.0 - rhs.0)
    }
}

impl Neg for SpinOperator {
    type Output = SpinOperator;
    fn neg(self) -> SpinOperator {
        SpinOperator(-self.0)
    }
}

impl Mul for SpinOperator {
    type Output = SpinOperator;
    fn mul(self, rhs: SpinOperator) -> SpinOperator {
        SpinOperator(self.0 * rhs.0)
    }
}

impl std::iter::Sum for SpinOperator {
    fn sum<It: Iterator<Item = SpinOperator>>(iter: It) -> SpinOperator {
        iter.fold(SpinOperator::zero(), |acc, op| acc + op)
    }
}

/// Frobenius norms of the exchange-sector blocks of an operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorBlocks {
    pub singlet: f64,
    pub triplet: f64,
    pub off_block: f64,
    pub total: f64,
}

impl SectorBlocks {
    /// Off-block norm relative to the full operator norm (0 for the zero operator).
    pub fn off_block_ratio(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.off_block / self.total
        }
    }
}

/// Single-qubit Pauli matrix.
pub fn sigma(axis: Axis) -> Matrix2<C64> {
    match axis {
        Axis::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
        Axis::Y => Matrix2::new(ZERO, -I, I, ZERO),
        Axis::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
    }
}

/// `σ·v` for a real 3-vector (single qubit).
pub fn sigma_dot(v: &Vector3<f64>) -> Matrix2<C64> {
    Matrix2::new(
        C64::new(v.z, 0.0),
        C64::new(v.x, -v.y),
        C64::new(v.x, v.y),
        C64::new(-v.z, 0.0),
    )
}

/// `σ_axis ⊗ I` for particle 1, `I ⊗ σ_axis` for particle 2.
pub fn pauli(particle: Particle, axis: Axis) -> SpinOperator {
    let id = Matrix2::identity();
    match particle {
        Particle::One => SpinOperator::kron(&sigma(axis), &id),
        Particle::Two => SpinOperator::kron(&id, &sigma(axis)),
    }
}

/// Particle exchange `P12`: swaps indices 1 and 2, fixes 0 and 3.
pub fn swap_operator() -> SpinOperator {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    SpinOperator(m)
}

/// `(I + P12)/2`.
pub fn symmetric_projector() -> SpinOperator {
    (SpinOperator::identity() + swap_operator()).scale_real(0.5)
}

/// `(I − P12)/2`, the projector onto the singlet.
pub fn antisymmetric_projector() -> SpinOperator {
    (SpinOperator::identity() - swap_operator()).scale_real(0.5)
}

/// `σ1·σ2`.
pub fn spin_dot_spin() -> SpinOperator {
    Axis::ALL
        .iter()
        .map(|&a| SpinOperator::kron(&sigma(a), &sigma(a)))
        .sum()
}

/// `(σ1 + σ2)·v`; built so that the result is exactly exchange-symmetric.
pub fn spin_sum_dot(v: &Vector3<f64>) -> SpinOperator {
    let s = sigma_dot(v);
    let id = Matrix2::identity();
    SpinOperator::kron(&s, &id) + SpinOperator::kron(&id, &s)
}

/// Component of the total spin `S = (σ1 + σ2)/2`.
pub fn total_spin(axis: Axis) -> SpinOperator {
    (pauli(Particle::One, axis) + pauli(Particle::Two, axis)).scale_real(0.5)
}

/// `(σ1·v)(σ2·v)` for an arbitrary real vector, without a unit-length check.
pub fn spin_tensor_dot(v: &Vector3<f64>) -> SpinOperator {
    let s = sigma_dot(v);
    SpinOperator::kron(&s, &s)
}

/// `(σ1·n)(σ2·n)` for a unit vector `n`.
pub fn projected_spin_dot(n: &Vector3<f64>) -> Result<SpinOperator> {
    let norm = n.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitVector { norm });
    }
    Ok(spin_tensor_dot(n))
}

pub fn bell_state(which: BellState) -> SpinState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match which {
        BellState::PhiPlus => SpinState::from_real([h, 0.0, 0.0, h]),
        BellState::PhiMinus => SpinState::from_real([h, 0.0, 0.0, -h]),
        BellState::PsiPlus => SpinState::from_real([0.0, h, h, 0.0]),
        BellState::PsiMinus => SpinState::from_real([0.0, h, -h, 0.0]),
    }
}

pub fn singlet() -> SpinState {
    bell_state(BellState::PsiMinus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &SpinState, b: &SpinState, tol: f64) -> bool {
        (a.vector() - b.vector()).norm() <= tol
    }

    #[test]
    fn pauli_z_eigenvalues_on_up_down() {
        let ud = SpinState::up_down();
        assert!(close(&pauli(Particle::One, Axis::Z).apply(&ud), &ud, 0.0));
        assert!(close(
            &pauli(Particle::Two, Axis::Z).apply(&ud),
            &ud.scale(-ONE),
            0.0
        ));
    }

    #[test]
    fn paulis_square_to_identity_and_are_traceless() {
        for p in [Particle::One, Particle::Two] {
            for a in Axis::ALL {
                let s = pauli(p, a);
                assert_eq!(s * s, SpinOperator::identity());
                assert!(s.is_hermitian(0.0));
                assert_eq!(s.trace(), ZERO);
            }
        }
    }

    #[test]
    fn bell_states_have_expected_amplitudes_and_symmetry() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(
            bell_state(BellState::PsiMinus),
            SpinState::from_real([0.0, h, -h, 0.0])
        );
        assert_eq!(
            bell_state(BellState::PhiPlus),
            SpinState::from_real([h, 0.0, 0.0, h])
        );
        for b in BellState::ALL {
            let s = bell_state(b);
            assert!(s.is_normalized());
            let expected = if b == BellState::PsiMinus {
                ExchangeClass::Antisymmetric
            } else {
                ExchangeClass::Symmetric
            };
            assert_eq!(s.exchange_class(), expected, "{b}");
        }
        let p = swap_operator();
        let s = singlet();
        assert!(close(&p.apply(&s), &s.scale(-ONE), 0.0));
    }

    #[test]
    fn swap_operator_properties() {
        let p = swap_operator();
        assert_eq!(p * p, SpinOperator::identity());
        assert_eq!(p.apply(&SpinState::up_down()), SpinState::down_up());
        let sym = SpinState::symmetric(C64::new(0.3, 0.1), C64::new(-0.2, 0.5), ONE).unwrap();
        assert_eq!(p.apply(&sym), sym);

        let eig = p.0.map(|z| z.re).symmetric_eigenvalues();
        let mut e: Vec<f64> = eig.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-1.0, 1.0, 1.0, 1.0];
        for (x, y) in e.iter().zip(expected) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn projected_spin_dot_basics() {
        let z = Vector3::z();
        let op = projected_spin_dot(&z).unwrap();
        assert!(close(&op.apply(&singlet()), &singlet().scale(-ONE), 1e-15));
        assert!(close(&op.apply(&SpinState::up_up()), &SpinState::up_up(), 0.0));
        assert!(op.is_hermitian(0.0));
        assert!(matches!(
            projected_spin_dot(&Vector3::new(1.0, 1.0, 0.0)),
            Err(Error::NonUnitVector { .. })
        ));
    }

    #[test]
    fn spin_dot_spin_eigenvalues() {
        // triplet +1, singlet −3
        let ss = spin_dot_spin();
        assert!(close(&ss.apply(&singlet()), &singlet().scale(C64::new(-3.0, 0.0)), 1e-15));
        for b in [BellState::PsiPlus, BellState::PhiPlus, BellState::PhiMinus] {
            let s = bell_state(b);
            assert!(close(&ss.apply(&s), &s, 1e-15));
        }
    }

    #[test]
    fn mixed_state_is_classified_mixed() {
        assert_eq!(SpinState::up_down().exchange_class(), ExchangeClass::Mixed);
        let s = SpinState::up_up();
        assert_eq!(s.exchange_class(), ExchangeClass::Symmetric);
        // idempotent under repeated swaps
        let p = swap_operator();
        assert_eq!(p.apply(&p.apply(&s)).exchange_class(), ExchangeClass::Symmetric);
    }

    #[test]
    fn zero_state_cannot_be_normalized() {
        assert_eq!(SpinState::from_real([0.0; 4]).normalized(), Err(Error::ZeroNorm));
    }
}
