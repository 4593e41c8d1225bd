//! Spin entanglement before and after a single first-Born scattering event.
//!
//! The outgoing spin state is taken at fixed final momenta: `M χ_in`,
//! renormalized. This is the post-selected state for one scattering
//! direction, not the superposition over all directions.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::born1::first_born;
use crate::entanglement::concurrence;
use crate::error::{Error, Result};
use crate::kinematics::Kinematics;
use crate::potentials::Couplings;
use crate::spin::{bell_state, singlet, BellState, ExchangeClass, SpinState};

/// Outgoing norm below this fraction of `||M||` counts as forbidden.
pub const FORBIDDEN_TOL: f64 = 1e-12;

/// `M(kin) χ_in / ||M(kin) χ_in||`.
pub fn scatter_spin(chi_in: &SpinState, kin: &Kinematics, couplings: &Couplings) -> Result<SpinState> {
    chi_in.require_normalized()?;
    if chi_in.exchange_class() == ExchangeClass::Mixed {
        return Err(Error::SymmetryMismatch(
            "initial spin has no definite exchange symmetry".into(),
        ));
    }
    let m = first_born(kin, couplings)?.total;
    let out = m.apply(chi_in);
    if out.norm() < FORBIDDEN_TOL * m.norm() {
        return Err(Error::Forbidden {
            outgoing: out.norm(),
            operator: m.norm(),
        });
    }
    out.normalized()
}

/// Named initial spin states accepted by scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSpin {
    PsiMinus,
    PsiPlus,
    PhiPlus,
    PhiMinus,
    UpUp,
    DownDown,
}

impl InitialSpin {
    pub const ALL: [InitialSpin; 6] = [
        InitialSpin::PsiMinus,
        InitialSpin::PsiPlus,
        InitialSpin::PhiPlus,
        InitialSpin::PhiMinus,
        InitialSpin::UpUp,
        InitialSpin::DownDown,
    ];

    pub fn label(self) -> &'static str {
        match self {
            InitialSpin::PsiMinus => "psi-minus",
            InitialSpin::PsiPlus => "psi-plus",
            InitialSpin::PhiPlus => "phi-plus",
            InitialSpin::PhiMinus => "phi-minus",
            InitialSpin::UpUp => "up-up",
            InitialSpin::DownDown => "down-down",
        }
    }

    pub fn state(self) -> SpinState {
        match self {
            InitialSpin::PsiMinus => singlet(),
            InitialSpin::PsiPlus => bell_state(BellState::PsiPlus),
            InitialSpin::PhiPlus => bell_state(BellState::PhiPlus),
            InitialSpin::PhiMinus => bell_state(BellState::PhiMinus),
            InitialSpin::UpUp => SpinState::up_up(),
            InitialSpin::DownDown => SpinState::down_down(),
        }
    }
}

impl FromStr for InitialSpin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InitialSpin::ALL
            .into_iter()
            .find(|x| x.label() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown initial spin state `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolutionRecord {
    pub k: f64,
    pub theta: f64,
    pub phi: f64,
    pub initial: String,
    pub initial_concurrence: f64,
    /// `[re, im]` per basis state ↑↑, ↑↓, ↓↑, ↓↓; absent when forbidden.
    pub final_amplitudes: Option<[[f64; 2]; 4]>,
    pub final_concurrence: Option<f64>,
    pub forbidden: bool,
    /// `|⟨Ψ−|χ_out⟩|`.
    pub singlet_overlap: Option<f64>,
    /// `|⟨χ_in|χ_out⟩|²`.
    pub fidelity_to_initial: Option<f64>,
    pub final_class: Option<ExchangeClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanSummary {
    pub initial: String,
    pub n_points: usize,
    pub n_forbidden: usize,
    pub min_concurrence: Option<f64>,
    pub max_concurrence: Option<f64>,
    /// `(k, θ, φ)` of the least entangled outgoing state.
    pub argmin: Option<[f64; 3]>,
    pub max_singlet_overlap: Option<f64>,
    pub min_fidelity_to_initial: Option<f64>,
    /// Every allowed record keeps the initial exchange class.
    pub sector_preserved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scan {
    pub records: Vec<EvolutionRecord>,
    pub summary: ScanSummary,
}

fn record(label: &str, chi: &SpinState, c_in: f64, k: f64, theta: f64, phi: f64, couplings: &Couplings) -> Result<EvolutionRecord> {
    let kin = Kinematics::cm_elastic(k, theta, phi)?;
    let base = EvolutionRecord {
        k,
        theta,
        phi,
        initial: label.to_string(),
        initial_concurrence: c_in,
        final_amplitudes: None,
        final_concurrence: None,
        forbidden: false,
        singlet_overlap: None,
        fidelity_to_initial: None,
        final_class: None,
    };
    match scatter_spin(chi, &kin, couplings) {
        Ok(out) => Ok(EvolutionRecord {
            final_amplitudes: Some(out.amplitudes().map(|z| [z.re, z.im])),
            final_concurrence: Some(concurrence(&out)?),
            singlet_overlap: Some(singlet().inner(&out).norm()),
            fidelity_to_initial: Some(chi.fidelity(&out)),
            final_class: Some(out.exchange_class()),
            ..base
        }),
        Err(Error::Forbidden { .. }) => Ok(EvolutionRecord { forbidden: true, ..base }),
        Err(e) => Err(e),
    }
}

/// One record per `(k, θ, φ)`, sorted by final concurrence (forbidden
/// points last, grid order among ties).
pub fn scan_entanglement(
    label: &str,
    chi: &SpinState,
    k_grid: &[f64],
    theta_grid: &[f64],
    phi_grid: &[f64],
    couplings: &Couplings,
) -> Result<Scan> {
    if k_grid.is_empty() || theta_grid.is_empty() || phi_grid.is_empty() {
        return Err(Error::InvalidInput("scan grids must be non-empty".into()));
    }
    chi.require_normalized()?;
    let c_in = concurrence(chi)?;
    let points: Vec<(f64, f64, f64)> = k_grid
        .iter()
        .flat_map(|&k| theta_grid.iter().flat_map(move |&t| phi_grid.iter().map(move |&p| (k, t, p))))
        .collect();
    let mut records: Vec<EvolutionRecord> = points
        .par_iter()
        .map(|&(k, t, p)| record(label, chi, c_in, k, t, p, couplings))
        .collect::<Result<_>>()?;
    records.sort_by(|a, b| match (a.final_concurrence, b.final_concurrence) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });

    let allowed: Vec<&EvolutionRecord> = records.iter().filter(|r| !r.forbidden).collect();
    let fold = |f: fn(&EvolutionRecord) -> Option<f64>, pick: fn(f64, f64) -> f64| {
        allowed.iter().filter_map(|r| f(r)).reduce(pick)
    };
    let initial_class = chi.exchange_class();
    let summary = ScanSummary {
        initial: label.to_string(),
        n_points: records.len(),
        n_forbidden: records.len() - allowed.len(),
        min_concurrence: fold(|r| r.final_concurrence, f64::min),
        max_concurrence: fold(|r| r.final_concurrence, f64::max),
        argmin: allowed.first().map(|r| [r.k, r.theta, r.phi]),
        max_singlet_overlap: fold(|r| r.singlet_overlap, f64::max),
        min_fidelity_to_initial: fold(|r| r.fidelity_to_initial, f64::min),
        sector_preserved: allowed.iter().all(|r| r.final_class == Some(initial_class)),
    };
    Ok(Scan { records, summary })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::kinematics::{phi_grid, theta_grid};
    use crate::potentials::Couplings;

    #[test]
    fn singlet_is_fixed_point() {
        for (k, t, p) in [(0.5, 0.3, 0.0), (2.0, 2.9, 4.0), (1.0, PI / 2.0, 1.0)] {
            let kin = Kinematics::cm_elastic(k, t, p).unwrap();
            let out = scatter_spin(&singlet(), &kin, &Couplings::with_alpha(0.7)).unwrap();
            assert!((singlet().fidelity(&out) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coulomb_only_keeps_triplet_state() {
        let kin = Kinematics::cm_elastic(1.0, 1.2, 0.5).unwrap();
        let chi = bell_state(BellState::PsiPlus);
        let out = scatter_spin(&chi, &kin, &Couplings::with_alpha(0.0)).unwrap();
        assert!((chi.fidelity(&out) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mott_node_triplet_is_forbidden_without_corrections() {
        let kin = Kinematics::cm_elastic(1.0, PI / 2.0, 0.0).unwrap();
        let r = scatter_spin(&SpinState::up_up(), &kin, &Couplings::with_alpha(0.0));
        assert!(matches!(r, Err(Error::Forbidden { .. })), "{r:?}");
    }

    #[test]
    fn mixed_input_rejected() {
        let kin = Kinematics::cm_elastic(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            scatter_spin(&SpinState::up_down(), &kin, &Couplings::physical()),
            Err(Error::SymmetryMismatch(_))
        ));
    }

    #[test]
    fn scan_sorted_and_summarized() {
        let chi = InitialSpin::PsiPlus.state();
        let scan = scan_entanglement("psi-plus", &chi, &[1.0], &theta_grid(9), &phi_grid(4), &Couplings::physical()).unwrap();
        assert_eq!(scan.summary.n_points, 36);
        let cs: Vec<f64> = scan.records.iter().filter_map(|r| r.final_concurrence).collect();
        assert!(cs.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(scan.summary.min_concurrence, cs.first().copied());
        assert!(scan.summary.sector_preserved);
        assert!(cs.iter().all(|c| (0.0..=1.0).contains(c)));
        assert!(scan.summary.max_singlet_overlap.unwrap() <= 1e-12);
    }

    #[test]
    fn coulomb_scan_forbidden_points_last() {
        let chi = InitialSpin::UpUp.state();
        let scan = scan_entanglement("up-up", &chi, &[1.0], &theta_grid(5), &[0.0], &Couplings::with_alpha(0.0)).unwrap();
        assert_eq!(scan.summary.n_forbidden, 1);
        assert!(scan.records.last().unwrap().forbidden);
        assert_eq!(scan.summary.max_concurrence, Some(0.0));
    }

    #[test]
    fn empty_grid_rejected() {
        let chi = InitialSpin::PsiMinus.state();
        assert!(scan_entanglement("psi-minus", &chi, &[], &[1.0], &[0.0], &Couplings::physical()).is_err());
    }

    #[test]
    fn labels_round_trip() {
        for s in InitialSpin::ALL {
            assert_eq!(s.label().parse::<InitialSpin>().unwrap(), s);
            assert!(s.state().is_normalized());
        }
        assert!("bogus".parse::<InitialSpin>().is_err());
    }
}
