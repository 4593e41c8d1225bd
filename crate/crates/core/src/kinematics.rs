//! Two-electron plane-wave states and scattering kinematics.
//!
//! Hartree atomic units throughout: `ħ = m = e = 1`, `c = 1/α`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::entanglement::{concurrence, SEPARABILITY_TOL};
use crate::error::{Error, Result};
use crate::spin::{ExchangeClass, SpinState, C64};

pub type Vec3 = Vector3<f64>;

/// Fine-structure constant (CODATA 2018).
pub const ALPHA: f64 = 7.2973525693e-3;

/// Kernels refuse momentum transfers below this magnitude (a.u.).
pub const FORWARD_LIMIT: f64 = 1e-6;

/// Energies balancing within this tolerance mark the kinematics elastic.
pub const ELASTIC_TOL: f64 = 1e-10;

const CONSERVATION_TOL: f64 = 1e-12;

/// `(2π)^{-3/2}`, the plane-wave prefactor of the (anti)symmetrized spatial states.
pub const PLANE_WAVE_NORM: f64 = 0.063_493_635_934_240_97;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kinematics {
    pub p1_in: Vec3,
    pub p2_in: Vec3,
    pub p1_out: Vec3,
    pub p2_out: Vec3,
    /// Direct momentum transfer `p1_in − p1_out`.
    pub q: Vec3,
    /// Exchange momentum transfer `p1_in − p2_out`.
    pub q_ex: Vec3,
    /// `(ε_a, ε_b, ε_c, ε_d)` with `ε = |p|²/2`.
    pub energies: [f64; 4],
    pub elastic: bool,
    pub forward_singular: bool,
}

pub fn kinetic_energy(p: &Vec3) -> f64 {
    0.5 * p.norm_squared()
}

pub fn make_kinematics(p1_in: Vec3, p2_in: Vec3, p1_out: Vec3, p2_out: Vec3) -> Result<Kinematics> {
    let scale = [p1_in, p2_in, p1_out, p2_out]
        .iter()
        .map(|p| p.norm())
        .fold(1.0, f64::max);
    let mismatch = ((p1_in + p2_in) - (p1_out + p2_out)).norm();
    if mismatch > CONSERVATION_TOL * scale {
        return Err(Error::MomentumNotConserved { mismatch });
    }
    let q = p1_in - p1_out;
    let q_ex = p1_in - p2_out;
    let energies = [
        kinetic_energy(&p1_in),
        kinetic_energy(&p2_in),
        kinetic_energy(&p1_out),
        kinetic_energy(&p2_out),
    ];
    let e_in = energies[0] + energies[1];
    let e_out = energies[2] + energies[3];
    Ok(Kinematics {
        p1_in,
        p2_in,
        p1_out,
        p2_out,
        q,
        q_ex,
        energies,
        elastic: (e_in - e_out).abs() <= ELASTIC_TOL * e_in.max(1.0),
        forward_singular: q.norm() < FORWARD_LIMIT || q_ex.norm() < FORWARD_LIMIT,
    })
}

impl Kinematics {
    /// Elastic centre-of-mass kinematics: incoming `±k x̂`, outgoing
    /// `±k (cos θ, sin θ cos φ, sin θ sin φ)`.
    pub fn cm_elastic(k: f64, theta: f64, phi: f64) -> Result<Kinematics> {
        let p_in = Vec3::new(k, 0.0, 0.0);
        let p_out = k * scattering_direction(theta, phi);
        make_kinematics(p_in, -p_in, p_out, -p_out)
    }

    /// Same collision with the outgoing labels exchanged (swaps `q` and `q_ex`).
    pub fn swap_outgoing(&self) -> Kinematics {
        make_kinematics(self.p1_in, self.p2_in, self.p2_out, self.p1_out)
            .expect("swapping outgoing labels preserves momentum balance")
    }

    /// Errors unless both channels are clear of the forward singularity.
    pub fn require_regular(&self) -> Result<()> {
        for (channel, q) in [("direct", self.q), ("exchange", self.q_ex)] {
            let q_norm = q.norm();
            if q_norm < FORWARD_LIMIT {
                return Err(Error::ForwardSingular {
                    channel,
                    q_norm,
                    limit: FORWARD_LIMIT,
                });
            }
        }
        Ok(())
    }

    pub fn total_momentum(&self) -> Vec3 {
        self.p1_in + self.p2_in
    }
}

pub fn scattering_direction(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialSymmetry {
    Symmetric,
    Antisymmetric,
}

/// The three admissible initial-state families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateKind {
    /// Antisymmetric space, unentangled symmetric spin (`D² = CG`).
    UnentangledTriplet = 1,
    /// Antisymmetric space, entangled symmetric spin (`D² ≠ CG`).
    EntangledTriplet = 2,
    /// Symmetric space, spin singlet.
    Singlet = 3,
}

impl StateKind {
    pub fn from_index(index: u8) -> Result<StateKind> {
        match index {
            1 => Ok(StateKind::UnentangledTriplet),
            2 => Ok(StateKind::EntangledTriplet),
            3 => Ok(StateKind::Singlet),
            _ => Err(Error::InvalidInput(format!("state kind {index} not in 1..=3"))),
        }
    }
}

/// `ψ ⊗ χ` with total antisymmetry enforced at construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoElectronState {
    spatial_symmetry: SpatialSymmetry,
    spin: SpinState,
    momenta: (Vec3, Vec3),
}

impl TwoElectronState {
    pub fn new(spatial_symmetry: SpatialSymmetry, spin: SpinState, momenta: (Vec3, Vec3)) -> Result<Self> {
        spin.require_normalized()?;
        let required = match spatial_symmetry {
            SpatialSymmetry::Antisymmetric => ExchangeClass::Symmetric,
            SpatialSymmetry::Symmetric => ExchangeClass::Antisymmetric,
        };
        let found = spin.exchange_class();
        if found != required {
            return Err(Error::SymmetryMismatch(format!(
                "{spatial_symmetry:?} spatial part needs {required:?} spin, got {found:?}"
            )));
        }
        Ok(TwoElectronState {
            spatial_symmetry,
            spin,
            momenta,
        })
    }

    pub fn spatial_symmetry(&self) -> SpatialSymmetry {
        self.spatial_symmetry
    }

    pub fn spin(&self) -> &SpinState {
        &self.spin
    }

    pub fn momenta(&self) -> (Vec3, Vec3) {
        self.momenta
    }

    /// `ψ_{S/A}(x1, x2) = (2π)^{-3/2} [e^{i(p1·x1 + p2·x2)} ± e^{i(p2·x1 + p1·x2)}]`.
    pub fn spatial_amplitude(&self, x1: &Vec3, x2: &Vec3) -> C64 {
        let (p1, p2) = self.momenta;
        let direct = C64::from_polar(1.0, p1.dot(x1) + p2.dot(x2));
        let swapped = C64::from_polar(1.0, p2.dot(x1) + p1.dot(x2));
        let sum = match self.spatial_symmetry {
            SpatialSymmetry::Symmetric => direct + swapped,
            SpatialSymmetry::Antisymmetric => direct - swapped,
        };
        sum * PLANE_WAVE_NORM
    }

    /// Full amplitude `Ψ(x1 s1; x2 s2)`, spins indexed 0 = ↑, 1 = ↓.
    pub fn amplitude(&self, x1: &Vec3, s1: usize, x2: &Vec3, s2: usize) -> C64 {
        self.spatial_amplitude(x1, x2) * self.spin.amplitudes()[2 * s1 + s2]
    }
}

pub fn make_state(kind: StateKind, momenta: (Vec3, Vec3), spin: SpinState) -> Result<TwoElectronState> {
    spin.require_normalized()?;
    let class = spin.exchange_class();
    match kind {
        StateKind::UnentangledTriplet | StateKind::EntangledTriplet => {
            if class != ExchangeClass::Symmetric {
                return Err(Error::SymmetryMismatch(format!(
                    "kind {} needs exchange-symmetric spin, got {class:?}",
                    kind as u8
                )));
            }
            let separable = concurrence(&spin)? <= SEPARABILITY_TOL;
            if separable != (kind == StateKind::UnentangledTriplet) {
                return Err(Error::SymmetryMismatch(format!(
                    "kind {} spin has the wrong entanglement (separable = {separable})",
                    kind as u8
                )));
            }
            TwoElectronState::new(SpatialSymmetry::Antisymmetric, spin, momenta)
        }
        StateKind::Singlet => TwoElectronState::new(SpatialSymmetry::Symmetric, spin, momenta),
    }
}

/// Uniform polar grid on `(0, π)` with spacing `π/(n + 1)` that contains `π/2`
/// (exactly when `n` is even), so the 90° centre-of-mass angle is sampled.
pub fn theta_grid(n: usize) -> Vec<f64> {
    let h = PI / (n as f64 + 1.0);
    let centre = n / 2;
    (0..n)
        .map(|j| 0.5 * PI + (j as f64 - centre as f64) * h)
        .collect()
}

/// Uniform azimuthal grid on `[0, 2π)`.
pub fn phi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}
