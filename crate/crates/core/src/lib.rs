//! Two-electron scattering with (v/c)² interaction corrections and the
//! evolution of spin entanglement under it.
//!
//! Units are Hartree atomic units (`ħ = m = e = 1`, `c = 1/α`).

pub mod born1;
pub mod born2;
pub mod cli;
pub mod entanglement;
pub mod error;
pub mod evolution;
pub mod kinematics;
pub mod oracle;
pub mod potentials;
pub mod quadrature;
pub mod sampling;
pub mod spin;

pub use error::{Error, Result};
pub use kinematics::{Kinematics, TwoElectronState, Vec3, ALPHA};
pub use potentials::Couplings;
pub use spin::{SpinOperator, SpinState, C64};
