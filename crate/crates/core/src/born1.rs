//! First-Born amplitude for identical electrons, with exchange.
//!
//! For final momenta `(c, d)` and spin `χ_f` the antisymmetrized matrix
//! element is `⟨χ_f| K(q) − K(q_ex) P12 |χ_i⟩`: the exchange kernel is
//! evaluated at `q_ex = p1_in − p2_out` and carries the spin swap that
//! accompanies the swapped plane wave. The overall `−2πi δ(E_f − E_i)`
//! factor is dropped.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{Kinematics, TwoElectronState};
use crate::potentials::{interaction_kernel, Couplings};
use crate::sampling::{elastic_kinematics, stream_rng};
use crate::spin::{swap_operator, ExchangeClass, SectorBlocks, SpinOperator, SpinState, C64};

/// Off-block tolerance relative to the full operator norm.
pub const SELECTION_RULE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeOperator {
    pub direct: SpinOperator,
    pub exchange: SpinOperator,
    pub total: SpinOperator,
    pub kinematics: Kinematics,
    pub ordering_defect: f64,
}

impl AmplitudeOperator {
    pub fn blocks(&self) -> SectorBlocks {
        self.total.sector_blocks()
    }
}

pub fn first_born(kin: &Kinematics, couplings: &Couplings) -> Result<AmplitudeOperator> {
    kin.require_regular()?;
    let direct = interaction_kernel(&kin.q, &kin.p1_in, &kin.p2_in, couplings)?;
    let exchange = interaction_kernel(&kin.q_ex, &kin.p1_in, &kin.p2_in, couplings)?;
    let total = direct.operator - exchange.operator * swap_operator();
    Ok(AmplitudeOperator {
        direct: direct.operator,
        exchange: exchange.operator,
        total,
        kinematics: *kin,
        ordering_defect: direct.ordering_defect.max(exchange.ordering_defect),
    })
}

/// `⟨χ_f|M|χ_i⟩` for a properly (anti)symmetrized initial state.
///
/// The final spin must have definite exchange symmetry; it fixes the final
/// spatial symmetry (singlet with symmetric space, triplet with antisymmetric).
pub fn transition_amplitude(
    initial: &TwoElectronState,
    final_spin: &SpinState,
    kin: &Kinematics,
    couplings: &Couplings,
) -> Result<C64> {
    final_spin.require_normalized()?;
    if final_spin.exchange_class() == ExchangeClass::Mixed {
        return Err(Error::SymmetryMismatch(
            "final spin has no definite exchange symmetry; no antisymmetric pairing exists".into(),
        ));
    }
    let (p1, p2) = initial.momenta();
    let scale = 1.0f64.max(p1.norm()).max(p2.norm());
    if (p1 - kin.p1_in).norm() > 1e-12 * scale || (p2 - kin.p2_in).norm() > 1e-12 * scale {
        return Err(Error::InvalidInput(
            "initial-state momenta do not match the kinematics".into(),
        ));
    }
    let amp = first_born(kin, couplings)?;
    Ok(amp.total.element(final_spin, initial.spin()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionRuleReport {
    pub n_samples: usize,
    pub momentum_scale: f64,
    pub seed: u64,
    pub alpha: f64,
    /// max over samples of ||singlet–triplet block|| / ||M||.
    pub max_off_block_ratio: f64,
    /// min over samples of ||triplet block|| / ||M||.
    pub min_triplet_ratio: f64,
    /// min over samples of ||singlet block|| / ||M||.
    pub min_singlet_ratio: f64,
    pub max_ordering_defect: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Checks block-diagonality of the amplitude over random elastic kinematics.
pub fn selection_rule_report(
    n_samples: usize,
    momentum_scale: f64,
    seed: u64,
    couplings: &Couplings,
) -> Result<SelectionRuleReport> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    let samples: Vec<(SectorBlocks, f64)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let kin = elastic_kinematics(&mut rng, momentum_scale);
            first_born(&kin, couplings).map(|a| (a.blocks(), a.ordering_defect))
        })
        .collect::<Result<_>>()?;

    let ratio = |x: f64, t: f64| if t == 0.0 { 0.0 } else { x / t };
    let mut max_off = 0.0f64;
    let mut min_trip = f64::INFINITY;
    let mut min_sing = f64::INFINITY;
    let mut max_defect = 0.0f64;
    for (b, defect) in &samples {
        max_off = max_off.max(b.off_block_ratio());
        min_trip = min_trip.min(ratio(b.triplet, b.total));
        min_sing = min_sing.min(ratio(b.singlet, b.total));
        max_defect = max_defect.max(*defect);
    }
    Ok(SelectionRuleReport {
        n_samples,
        momentum_scale,
        seed,
        alpha: couplings.alpha,
        max_off_block_ratio: max_off,
        min_triplet_ratio: min_trip,
        min_singlet_ratio: min_sing,
        max_ordering_defect: max_defect,
        threshold: SELECTION_RULE_TOL,
        passed: max_off <= SELECTION_RULE_TOL && min_trip > 0.0 && min_sing > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::kinematics::{make_state, StateKind};
    use crate::spin::{bell_state, singlet, BellState};

    #[test]
    fn alpha_zero_is_coulomb_with_exchange() {
        let kin = Kinematics::cm_elastic(1.2, 1.0, 0.3).unwrap();
        let amp = first_born(&kin, &Couplings::with_alpha(0.0)).unwrap();
        let d = 4.0 * PI / kin.q.norm_squared();
        let e = 4.0 * PI / kin.q_ex.norm_squared();
        let expected = SpinOperator::identity().scale_real(d) - swap_operator().scale_real(e);
        assert!((amp.total - expected).norm() < 1e-13);
    }

    #[test]
    fn unentangled_triplet_never_reaches_singlet() {
        let kin = Kinematics::cm_elastic(0.9, 1.3, 2.1).unwrap();
        let spin = SpinState::from_real([0.36, 0.48, 0.48, 0.64]);
        let init = make_state(StateKind::UnentangledTriplet, (kin.p1_in, kin.p2_in), spin).unwrap();
        let a = transition_amplitude(&init, &singlet(), &kin, &Couplings::with_alpha(0.5)).unwrap();
        assert!(a.norm() <= 1e-12);
    }

    #[test]
    fn singlet_never_reaches_triplet() {
        let kin = Kinematics::cm_elastic(1.7, 0.6, 1.0).unwrap();
        let init = make_state(StateKind::Singlet, (kin.p1_in, kin.p2_in), singlet()).unwrap();
        for b in [BellState::PsiPlus, BellState::PhiPlus, BellState::PhiMinus] {
            let a = transition_amplitude(&init, &bell_state(b), &kin, &Couplings::physical()).unwrap();
            assert!(a.norm() <= 1e-12);
        }
        let same = transition_amplitude(&init, &singlet(), &kin, &Couplings::physical()).unwrap();
        assert!(same.norm() > 1.0);
    }

    #[test]
    fn entangled_triplet_reaches_unentangled_triplet() {
        let kin = Kinematics::cm_elastic(1.0, 1.1, 0.4).unwrap();
        let init = make_state(StateKind::EntangledTriplet, (kin.p1_in, kin.p2_in), bell_state(BellState::PhiPlus))
            .unwrap();
        let a = transition_amplitude(&init, &SpinState::up_up(), &kin, &Couplings::physical()).unwrap();
        assert!(a.norm() > 1e-3);
    }

    #[test]
    fn mixed_final_spin_rejected() {
        let kin = Kinematics::cm_elastic(1.0, 1.1, 0.4).unwrap();
        let init = make_state(StateKind::Singlet, (kin.p1_in, kin.p2_in), singlet()).unwrap();
        assert!(matches!(
            transition_amplitude(&init, &SpinState::up_down(), &kin, &Couplings::physical()),
            Err(Error::SymmetryMismatch(_))
        ));
        let other = Kinematics::cm_elastic(2.0, 1.1, 0.4).unwrap();
        assert!(matches!(
            transition_amplitude(&init, &singlet(), &other, &Couplings::physical()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn forward_kinematics_rejected() {
        let kin = Kinematics::cm_elastic(1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            first_born(&kin, &Couplings::physical()),
            Err(Error::ForwardSingular { .. })
        ));
    }

    #[test]
    fn swapping_outgoing_labels_flips_sign_with_spin_swap() {
        let kin = Kinematics::cm_elastic(1.4, 0.8, 1.9).unwrap();
        let c = Couplings::with_alpha(0.2);
        let a = first_born(&kin, &c).unwrap().total;
        let b = first_born(&kin.swap_outgoing(), &c).unwrap().total;
        assert!((b + a * swap_operator()).norm() < 1e-13 * a.norm());
    }

    #[test]
    fn corrections_are_additive() {
        let kin = Kinematics::cm_elastic(0.7, 2.2, 0.1).unwrap();
        let full = first_born(&kin, &Couplings::with_alpha(0.3)).unwrap().total;
        let coul = first_born(&kin, &Couplings { alpha: 0.3, leading: true, corrections: false }).unwrap().total;
        let corr = first_born(&kin, &Couplings::corrections_only(0.3)).unwrap().total;
        assert!((full - coul - corr).norm() <= 1e-13);
    }

    #[test]
    fn report_is_deterministic_and_passes() {
        let a = selection_rule_report(50, 1.0, 7, &Couplings::physical()).unwrap();
        let b = selection_rule_report(50, 1.0, 7, &Couplings::physical()).unwrap();
        assert_eq!(a, b);
        assert!(a.passed, "{a:?}");
        let z = selection_rule_report(1, 1.0, 3, &Couplings::with_alpha(0.0)).unwrap();
        assert_eq!(z.max_off_block_ratio, 0.0);
        assert!(selection_rule_report(0, 1.0, 3, &Couplings::physical()).is_err());
    }
}
