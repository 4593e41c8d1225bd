//! Momentum-space kernels of the two-electron interaction to order (v/c)².
//!
//! Position-space terms (atomic units, `e²/(m²c²) = α²`):
//!
//! ```text
//! U_C  = 1/r − (πα²/4) δ(r) − (α²/2r) [p1·p2 + (r̂·p1)(r̂·p2)]
//! U_LS = −(α²/4r²) [r̂ × (p1 − p2)]·(σ1 + σ2)
//! U_SS = (α²/4) { [8π/3 δ(r) + 1/r³] σ1·σ2 − 3(σ1·r̂)(σ2·r̂)/r³ }
//! ```
//!
//! Momenta act on the incoming plane waves. A kernel is the transform
//! `K(q) = ∫ d³r U(r) e^{i q·r}` with `q = p1_in − p1_out`:
//!
//! ```text
//! Coulomb      4π/q²
//! Darwin       −πα²/4
//! retardation  −(4πα²/q²) [p1·p2 − (p1·q̂)(p2·q̂)]
//! spin-orbit   −(iπα²/q²) [q × (p1 − p2)]·(σ1 + σ2)
//! SS contact   (2πα²/3) σ1·σ2
//! SS tensor    πα² [(σ1·q̂)(σ2·q̂) − σ1·σ2/3]
//! ```
//!
//! The non-contact entries are checked against [`crate::oracle`], which
//! integrates the position-space expressions numerically.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Vec3, ALPHA, FORWARD_LIMIT};
use crate::spin::{spin_dot_spin, spin_sum_dot, spin_tensor_dot, SpinOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Term {
    Coulomb,
    Darwin,
    Retardation,
    SpinOrbit,
    SpinSpinContact,
    SpinSpinTensor,
}

impl Term {
    pub const ALL: [Term; 6] = [
        Term::Coulomb,
        Term::Darwin,
        Term::Retardation,
        Term::SpinOrbit,
        Term::SpinSpinContact,
        Term::SpinSpinTensor,
    ];

    pub const NON_CONTACT: [Term; 4] = [
        Term::Coulomb,
        Term::Retardation,
        Term::SpinOrbit,
        Term::SpinSpinTensor,
    ];

    pub fn is_contact(self) -> bool {
        matches!(self, Term::Darwin | Term::SpinSpinContact)
    }

    pub fn is_relativistic(self) -> bool {
        self != Term::Coulomb
    }

    pub fn depends_on_momenta(self) -> bool {
        matches!(self, Term::Retardation | Term::SpinOrbit)
    }

    pub fn name(self) -> &'static str {
        match self {
            Term::Coulomb => "coulomb",
            Term::Darwin => "darwin",
            Term::Retardation => "retardation",
            Term::SpinOrbit => "spin-orbit",
            Term::SpinSpinContact => "spin-spin-contact",
            Term::SpinSpinTensor => "spin-spin-tensor",
        }
    }
}

/// Coupling strength and the set of interaction terms switched on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub alpha: f64,
    pub leading: bool,
    pub corrections: bool,
}

impl Default for Couplings {
    fn default() -> Self {
        Couplings::physical()
    }
}

impl Couplings {
    pub fn physical() -> Couplings {
        Couplings::with_alpha(ALPHA)
    }

    pub fn with_alpha(alpha: f64) -> Couplings {
        Couplings {
            alpha,
            leading: true,
            corrections: true,
        }
    }

    /// Static Coulomb repulsion only.
    pub fn coulomb_only() -> Couplings {
        Couplings {
            alpha: ALPHA,
            leading: true,
            corrections: false,
        }
    }

    /// The O(α²) corrections without the leading Coulomb term.
    pub fn corrections_only(alpha: f64) -> Couplings {
        Couplings {
            alpha,
            leading: false,
            corrections: true,
        }
    }

    pub fn enabled(&self, term: Term) -> bool {
        if term.is_relativistic() {
            self.corrections
        } else {
            self.leading
        }
    }
}

/// A spin-operator-valued momentum-space kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinKernel {
    pub operator: SpinOperator,
    pub q: Vec3,
    pub depends_on_momenta: bool,
    /// `||K(q; p_in) − K(−q; p_out)†||` before Hermitization.
    pub ordering_defect: f64,
}

fn require_transfer(q: &Vec3) -> Result<()> {
    let q_norm = q.norm();
    if q_norm < FORWARD_LIMIT {
        return Err(Error::ForwardSingular {
            channel: "kernel",
            q_norm,
            limit: FORWARD_LIMIT,
        });
    }
    Ok(())
}

/// Closed-form kernel of a single term with momenta acting on the incoming
/// plane waves `(p1, p2)`. No forward-singularity check.
pub fn term_kernel(term: Term, q: &Vec3, p1: &Vec3, p2: &Vec3, alpha: f64) -> SpinOperator {
    let a2 = alpha * alpha;
    let q2 = q.norm_squared();
    match term {
        Term::Coulomb => SpinOperator::identity().scale_real(4.0 * PI / q2),
        Term::Darwin => SpinOperator::identity().scale_real(-0.25 * PI * a2),
        Term::Retardation => {
            let qh = q / q2.sqrt();
            let transverse = p1.dot(p2) - p1.dot(&qh) * p2.dot(&qh);
            SpinOperator::identity().scale_real(-4.0 * PI * a2 / q2 * transverse)
        }
        Term::SpinOrbit => {
            let axis = q.cross(&(p1 - p2));
            spin_sum_dot(&axis).scale(C64::new(0.0, -PI * a2 / q2))
        }
        Term::SpinSpinContact => spin_dot_spin().scale_real(2.0 * PI * a2 / 3.0),
        Term::SpinSpinTensor => {
            let qh = q / q2.sqrt();
            let traceless = spin_tensor_dot(&qh) - spin_dot_spin().scale_real(1.0 / 3.0);
            traceless.scale_real(PI * a2)
        }
    }
}

/// Sums the enabled terms in `terms` and Hermitizes the momentum ordering:
/// `K ← [K(q; p_in) + K(−q; p_out)†] / 2` with `p_out = (p1 − q, p2 + q)`.
fn assemble(terms: &[Term], q: &Vec3, p1: &Vec3, p2: &Vec3, couplings: &Couplings) -> Result<SpinKernel> {
    require_transfer(q)?;
    let p1_out = p1 - q;
    let p2_out = p2 + q;
    let mut forward = SpinOperator::zero();
    let mut reverse = SpinOperator::zero();
    for &t in terms.iter().filter(|&&t| couplings.enabled(t)) {
        forward = forward + term_kernel(t, q, p1, p2, couplings.alpha);
        reverse = reverse + term_kernel(t, &-q, &p1_out, &p2_out, couplings.alpha);
    }
    let reverse = reverse.adjoint();
    Ok(SpinKernel {
        operator: (forward + reverse).scale_real(0.5),
        q: *q,
        depends_on_momenta: terms.iter().any(|t| t.depends_on_momenta()),
        ordering_defect: (forward - reverse).norm(),
    })
}

/// Coulomb interaction with its contact and retardation corrections (spin identity).
pub fn coulomb_kernel(q: &Vec3, p1: &Vec3, p2: &Vec3, couplings: &Couplings) -> Result<SpinKernel> {
    assemble(&[Term::Coulomb, Term::Darwin, Term::Retardation], q, p1, p2, couplings)
}

pub fn spin_orbit_kernel(q: &Vec3, p1: &Vec3, p2: &Vec3, couplings: &Couplings) -> Result<SpinKernel> {
    assemble(&[Term::SpinOrbit], q, p1, p2, couplings)
}

pub fn spin_spin_kernel(q: &Vec3, couplings: &Couplings) -> Result<SpinKernel> {
    let zero = Vec3::zeros();
    assemble(&[Term::SpinSpinContact, Term::SpinSpinTensor], q, &zero, &zero, couplings)
}

/// All enabled terms together.
pub fn interaction_kernel(q: &Vec3, p1: &Vec3, p2: &Vec3, couplings: &Couplings) -> Result<SpinKernel> {
    assemble(&Term::ALL, q, p1, p2, couplings)
}

/// Position-space form of a non-contact term: `U(r) = A(r̂) / r^power`.
pub struct PositionTerm {
    pub power: i32,
    pub angular: Box<dyn Fn(&Vec3) -> SpinOperator + Send + Sync>,
}

/// Position-space representation used by the Fourier oracle. Contact terms
/// have none (their transform is the constant returned by [`term_kernel`]).
pub fn position_term(term: Term, p1: &Vec3, p2: &Vec3, alpha: f64) -> Option<PositionTerm> {
    let a2 = alpha * alpha;
    let (p1, p2) = (*p1, *p2);
    match term {
        Term::Coulomb => Some(PositionTerm {
            power: 1,
            angular: Box::new(|_| SpinOperator::identity()),
        }),
        Term::Retardation => Some(PositionTerm {
            power: 1,
            angular: Box::new(move |n| {
                let s = p1.dot(&p2) + n.dot(&p1) * n.dot(&p2);
                SpinOperator::identity().scale_real(-0.5 * a2 * s)
            }),
        }),
        Term::SpinOrbit => Some(PositionTerm {
            power: 2,
            angular: Box::new(move |n| spin_sum_dot(&n.cross(&(p1 - p2))).scale_real(-0.25 * a2)),
        }),
        Term::SpinSpinTensor => Some(PositionTerm {
            power: 3,
            angular: Box::new(move |n| {
                (spin_dot_spin() - spin_tensor_dot(n).scale_real(3.0)).scale_real(0.25 * a2)
            }),
        }),
        Term::Darwin | Term::SpinSpinContact => None,
    }
}
