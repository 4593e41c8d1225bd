use nrqed_spin::oracle::{oracle_fourier, screened_transform, OracleConfig};
use nrqed_spin::potentials::{term_kernel, Term};
use nrqed_spin::sampling::{gaussian, stream_rng, unit_vector};
use nrqed_spin::{Vec3, ALPHA};

const Q_NORMS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

fn momentum_pairs() -> Vec<(Vec3, Vec3)> {
    let mut rng = stream_rng(2024, 0);
    (0..5)
        .map(|_| {
            let p1 = (0.5 + gaussian(&mut rng).abs()) * unit_vector(&mut rng);
            let p2 = (0.5 + gaussian(&mut rng).abs()) * unit_vector(&mut rng);
            (p1, p2)
        })
        .collect()
}

#[test]
fn closed_form_kernels_match_oracle() {
    let cfg = OracleConfig::default();
    let mut rng = stream_rng(99, 1);
    let mut worst = 0.0f64;
    for term in Term::NON_CONTACT {
        for (p1, p2) in momentum_pairs() {
            for &qn in &Q_NORMS {
                let q = qn * unit_vector(&mut rng);
                let closed = term_kernel(term, &q, &p1, &p2, ALPHA);
                let numeric = oracle_fourier(term, &q, &p1, &p2, ALPHA, &cfg).unwrap().operator;
                let rel = (closed - numeric).norm() / closed.norm();
                worst = worst.max(rel);
                assert!(rel <= 1e-4, "{} |q|={qn}: rel {rel:e}", term.name());
            }
        }
    }
    eprintln!("worst relative kernel/oracle deviation {worst:e}");
}

#[test]
fn screened_coulomb_matches_yukawa_transform() {
    let cfg = OracleConfig::default();
    let z = Vec3::zeros();
    for &(qn, mu) in &[(0.5, 0.1), (2.0, 0.4)] {
        let q = Vec3::new(0.0, 0.0, qn);
        let op = screened_transform(Term::Coulomb, &q, &z, &z, ALPHA, mu, &cfg).unwrap();
        let exact = 4.0 * std::f64::consts::PI / (qn * qn + mu * mu);
        assert!((op.matrix()[(0, 0)].re - exact).abs() < 1e-10 * exact);
    }
}
