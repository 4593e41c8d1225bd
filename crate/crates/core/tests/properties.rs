use std::f64::consts::PI;

use nalgebra::Matrix2;
use nrqed_spin::born1::first_born;
use nrqed_spin::entanglement::{concurrence, schmidt_decompose};
use nrqed_spin::evolution::scatter_spin;
use nrqed_spin::kinematics::{make_kinematics, theta_grid, Kinematics};
use nrqed_spin::potentials::{interaction_kernel, term_kernel, Couplings, Term};
use nrqed_spin::spin::{
    antisymmetric_projector, projected_spin_dot, singlet, spin_dot_spin, swap_operator, symmetric_projector,
    ExchangeClass,
};
use nrqed_spin::{SpinOperator, SpinState, Vec3, C64};
use proptest::prelude::*;

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(lo..hi).prop_map(Vec3::from)
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3(-1.0, 1.0).prop_filter("nonzero", |v| v.norm() > 1e-3).prop_map(|v| v.normalize())
}

fn spin_state() -> impl Strategy<Value = SpinState> {
    prop::array::uniform8(-1.0f64..1.0)
        .prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(|a| {
            SpinState::new([
                C64::new(a[0], a[1]),
                C64::new(a[2], a[3]),
                C64::new(a[4], a[5]),
                C64::new(a[6], a[7]),
            ])
            .normalized()
            .unwrap()
        })
}

fn symmetric_spin() -> impl Strategy<Value = SpinState> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(|a| {
            SpinState::symmetric(C64::new(a[0], a[1]), C64::new(a[2], a[3]), C64::new(a[4], a[5])).unwrap()
        })
}

fn local_unitary() -> impl Strategy<Value = Matrix2<C64>> {
    (direction(), 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(n, angle, phase)| {
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        let i = C64::new(0.0, 1.0);
        let m = Matrix2::new(
            C64::new(c, 0.0) - i * s * n.z,
            -i * s * C64::new(n.x, -n.y),
            -i * s * C64::new(n.x, n.y),
            C64::new(c, 0.0) + i * s * n.z,
        );
        m * C64::from_polar(1.0, phase)
    })
}

/// CM-frame elastic kinematics boosted by a total momentum, kept off the
/// forward and backward singularities.
fn kinematics() -> impl Strategy<Value = Kinematics> {
    (0.2f64..2.5, 0.05f64..PI - 0.05, 0.0f64..2.0 * PI, vec3(-1.0, 1.0)).prop_map(|(k, t, p, total)| {
        let cm = Kinematics::cm_elastic(k, t, p).unwrap();
        let h = 0.5 * total;
        make_kinematics(cm.p1_in + h, cm.p2_in + h, cm.p1_out + h, cm.p2_out + h).unwrap()
    })
}

fn max_abs(op: &SpinOperator) -> f64 {
    op.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn concurrence_bounded_and_local_unitary_invariant(chi in spin_state(), u in local_unitary(), v in local_unitary()) {
        let c0 = concurrence(&chi).unwrap();
        prop_assert!((0.0..=1.0).contains(&c0));
        let moved = SpinOperator::kron(&u, &v).apply(&chi);
        prop_assert!((concurrence(&moved).unwrap() - c0).abs() <= 1e-12);
    }

    #[test]
    fn schmidt_form_reconstructs(chi in spin_state()) {
        let form = schmidt_decompose(&chi).unwrap();
        let (a1, a2) = form.coefficients;
        prop_assert!(a1 >= a2 && a2 >= 0.0);
        prop_assert!((a1 * a1 + a2 * a2 - 1.0).abs() <= 1e-12);
        prop_assert!((form.reconstruct().vector() - chi.vector()).norm() <= 1e-13);
        for k in 0..2 {
            prop_assert!((form.basis_a[k].norm() - 1.0).abs() <= 1e-12);
            prop_assert!((form.basis_b[k].norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn singlet_is_eigenstate_of_projected_pair(n in direction()) {
        let out = projected_spin_dot(&n).unwrap().apply(&singlet());
        prop_assert!((out.vector() + singlet().vector()).norm() <= 1e-14);
    }

    #[test]
    fn projectors_are_complete_and_idempotent(chi in spin_state()) {
        let (ps, pa) = (symmetric_projector(), antisymmetric_projector());
        let sum = ps.apply(&chi) + pa.apply(&chi);
        prop_assert!((sum.vector() - chi.vector()).norm() <= 1e-14);
        prop_assert!((ps * ps - ps).norm() <= 1e-15);
        prop_assert!((ps * pa).norm() <= 1e-15);
        prop_assert!((swap_operator() * swap_operator() - SpinOperator::identity()).norm() == 0.0);
        let s12 = spin_dot_spin();
        prop_assert!((s12.apply(&singlet()).vector() + singlet().vector().scale(3.0)).norm() <= 1e-14);
    }

    #[test]
    fn every_kernel_commutes_with_exchange(q in vec3(-2.0, 2.0), p1 in vec3(-2.0, 2.0), p2 in vec3(-2.0, 2.0), alpha in 0.0f64..1.0) {
        prop_assume!(q.norm() > 1e-2);
        for term in Term::ALL {
            let k = term_kernel(term, &q, &p1, &p2, alpha);
            prop_assert!(max_abs(&k.commutator(&swap_operator())) <= 1e-13 * (1.0 + max_abs(&k)));
        }
        let full = interaction_kernel(&q, &p1, &p2, &Couplings::with_alpha(alpha)).unwrap();
        prop_assert!(full.operator.sector_blocks().off_block_ratio() <= 1e-14);
    }

    #[test]
    fn amplitude_is_block_diagonal(kin in kinematics(), alpha in 0.0f64..2.0) {
        let amp = first_born(&kin, &Couplings::with_alpha(alpha)).unwrap();
        prop_assert!(amp.blocks().off_block_ratio() <= 1e-12);
    }

    #[test]
    fn scattering_preserves_exchange_class(kin in kinematics(), chi in symmetric_spin(), alpha in 0.0f64..2.0) {
        match scatter_spin(&chi, &kin, &Couplings::with_alpha(alpha)) {
            Ok(out) => {
                prop_assert_eq!(out.exchange_class(), ExchangeClass::Symmetric);
                prop_assert!(singlet().inner(&out).norm() <= 1e-12);
            }
            Err(nrqed_spin::Error::Forbidden { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
        let s = scatter_spin(&singlet(), &kin, &Couplings::with_alpha(alpha)).unwrap();
        prop_assert!((singlet().fidelity(&s) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn coulomb_limit_keeps_concurrence(kin in kinematics(), chi in symmetric_spin()) {
        let before = concurrence(&chi).unwrap();
        if let Ok(out) = scatter_spin(&chi, &kin, &Couplings::with_alpha(0.0)) {
            prop_assert!((concurrence(&out).unwrap() - before).abs() <= 1e-12);
        }
    }

    #[test]
    fn theta_grid_is_interior(n in 1usize..200) {
        let g = theta_grid(n);
        prop_assert_eq!(g.len(), n);
        prop_assert!(g.iter().all(|&t| t > 0.0 && t < PI));
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
