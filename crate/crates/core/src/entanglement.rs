//! Schmidt decomposition and concurrence of pure two-qubit spin states.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::error::Result;
use crate::spin::{ExchangeClass, SpinState, C64};

/// Concurrence at or below this value counts as separable.
pub const SEPARABILITY_TOL: f64 = 1e-10;

/// `a1 |η1⟩|ξ1⟩ + a2 |η2⟩|ξ2⟩` with `a1 ≥ a2 ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtForm {
    pub coefficients: (f64, f64),
    pub basis_a: [Vector2<C64>; 2],
    pub basis_b: [Vector2<C64>; 2],
}

impl SchmidtForm {
    /// Rebuilds the two-qubit state from its Schmidt form.
    pub fn reconstruct(&self) -> SpinState {
        let (a1, a2) = self.coefficients;
        let term = |a: f64, u: &Vector2<C64>, v: &Vector2<C64>| {
            SpinState::product([u[0], u[1]], [v[0], v[1]]).scale(C64::new(a, 0.0))
        };
        term(a1, &self.basis_a[0], &self.basis_b[0]) + term(a2, &self.basis_a[1], &self.basis_b[1])
    }

    pub fn schmidt_rank(&self, tol: f64) -> usize {
        1 + usize::from(self.coefficients.1 > tol)
    }
}

/// Schmidt decomposition via the SVD of the 2×2 coefficient matrix.
///
/// The phase of each Schmidt pair is fixed so that the largest-magnitude
/// component of the particle-1 vector is real and positive; the particle-2
/// vector absorbs the compensating phase, so `reconstruct()` returns the input
/// exactly (not just up to a global phase).
pub fn schmidt_decompose(chi: &SpinState) -> Result<SchmidtForm> {
    chi.require_normalized()?;
    let c = chi.coefficient_matrix();
    let svd = c.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;

    let (first, second) = if s[0] >= s[1] { (0, 1) } else { (1, 0) };
    let mut basis_a = [u.column(first).into_owned(), u.column(second).into_owned()];
    let mut basis_b = [
        v_t.row(first).transpose().into_owned(),
        v_t.row(second).transpose().into_owned(),
    ];
    for k in 0..2 {
        let lead = if basis_a[k][0].norm() >= basis_a[k][1].norm() {
            basis_a[k][0]
        } else {
            basis_a[k][1]
        };
        if lead.norm() > 0.0 {
            let phase = lead / lead.norm();
            basis_a[k] = basis_a[k].map(|z| z * phase.conj());
            basis_b[k] = basis_b[k].map(|z| z * phase);
        }
    }

    Ok(SchmidtForm {
        coefficients: (s[first], s[second]),
        basis_a,
        basis_b,
    })
}

/// `2|det C|` for a normalized pure state.
pub fn concurrence(chi: &SpinState) -> Result<f64> {
    chi.require_normalized()?;
    Ok(concurrence_unchecked(&chi.coefficient_matrix()))
}

fn concurrence_unchecked(c: &Matrix2<C64>) -> f64 {
    let det = c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)];
    (2.0 * det.norm()).min(1.0)
}

pub fn is_separable(chi: &SpinState, tol: f64) -> Result<bool> {
    Ok(concurrence(chi)? <= tol)
}

/// `|D² − CG|` for an exchange-symmetric state `(C, D, D, G)`; `None` otherwise.
pub fn symmetric_separability_defect(chi: &SpinState) -> Option<f64> {
    if chi.exchange_class() != ExchangeClass::Symmetric {
        return None;
    }
    let [c, d, _, g] = chi.amplitudes();
    Some((d * d - c * g).norm())
}

/// Classification of a symmetric state by the `D² = CG` criterion, with the
/// same tolerance convention as [`is_separable`] (concurrence = 2|D² − CG|).
pub fn symmetric_is_separable(chi: &SpinState, tol: f64) -> Option<bool> {
    symmetric_separability_defect(chi).map(|defect| 2.0 * defect <= tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntanglementSummary {
    pub a1: f64,
    pub a2: f64,
    pub concurrence: f64,
}

pub fn summarize(chi: &SpinState) -> Result<EntanglementSummary> {
    let form = schmidt_decompose(chi)?;
    Ok(EntanglementSummary {
        a1: form.coefficients.0,
        a2: form.coefficients.1,
        concurrence: concurrence(chi)?,
    })
}
