//! Numerical Fourier-transform oracle for the non-contact interaction terms.
//!
//! For `U(r) = A(r̂)/r^m` the screened transform is
//!
//! ```text
//! ∫ d³r e^{−μr} U(r) e^{i q·r} = Σ_l 4π i^l a_l ∫₀^∞ r^{2−m} e^{−μr} j_l(qr) dr,
//! a_l = (2l+1)/4π ∫ dΩ A(r̂) P_l(q̂·r̂)
//! ```
//!
//! The angular projections `a_l` come from a product quadrature on the sphere
//! (lab frame), the radial integrals from panel-wise Gauss–Legendre over
//! half-periods of `j_l`. Each radial integral is evaluated along a decreasing
//! screening schedule and extrapolated to `μ = 0` with Neville's scheme.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::Vec3;
use crate::potentials::{position_term, Term};
use crate::quadrature::{gauss_legendre_on, legendre, spherical_bessel_sc, SphereRule};
use crate::spin::{spin_dot_spin, SpinOperator, C64};

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Yukawa masses, strictly decreasing and positive.
    pub screening: Vec<f64>,
    /// Maximum relative change between the last two extrapolants.
    pub tolerance: f64,
    pub panel_nodes: usize,
    pub angular_theta: usize,
    pub angular_phi: usize,
    pub l_max: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            screening: default_schedule(0.2, 10),
            tolerance: 1e-4,
            panel_nodes: 24,
            angular_theta: 16,
            angular_phi: 32,
            l_max: 4,
        }
    }
}

/// `μ_k = μ0 / 2^k`, `k = 0..levels`.
pub fn default_schedule(mu0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| mu0 / 2f64.powi(k as i32)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialWave {
    pub l: usize,
    /// Radial integral at each screening mass.
    pub screened: Vec<f64>,
    /// Neville extrapolants using the finest 1, 2, … points.
    pub extrapolants: Vec<f64>,
    pub value: f64,
    pub relative_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub term: Term,
    pub operator: SpinOperator,
    /// True for contact terms, whose transform is a constant.
    pub analytic: bool,
    pub partial_waves: Vec<PartialWave>,
}

/// `∫₀^∞ r^n e^{−μr} j_l(qr) dr` for `μ > 0`.
pub fn radial_integral(n: i32, l: usize, q: f64, mu: f64, panel_nodes: usize) -> f64 {
    assert!(mu > 0.0 && q > 0.0);
    let beta = mu / q;
    let (t, w) = gauss_legendre_on(panel_nodes, 0.0, 1.0);
    let sin_t: Vec<f64> = t.iter().map(|t| (PI * t).sin()).collect();
    let cos_t: Vec<f64> = t.iter().map(|t| (PI * t).cos()).collect();
    let decay_t: Vec<f64> = t.iter().map(|t| (-beta * PI * t).exp()).collect();
    let panel_decay = (-beta * PI).exp();

    let mut total = 0.0;
    let mut envelope = 1.0;
    let mut k = 0usize;
    // stop once e^{−βx} has dropped below 1e-18 relative to the start
    while envelope > 1e-18 {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut panel = 0.0;
        for j in 0..panel_nodes {
            let x = PI * (k as f64 + t[j]);
            let jl = spherical_bessel_sc(l, x, sign * sin_t[j], sign * cos_t[j]);
            panel += w[j] * x.powi(n) * decay_t[j] * jl;
        }
        total += PI * envelope * panel;
        envelope *= panel_decay;
        k += 1;
    }
    total / q.powi(n + 1)
}

/// Neville extrapolation to `x = 0`; returns the estimates that use the
/// finest 1, 2, …, N points (last entry uses all of them).
pub fn neville_to_zero(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut p = ys.to_vec();
    let mut out = vec![p[n - 1]];
    for m in 1..n {
        for i in 0..(n - m) {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
        out.push(p[n - m - 1]);
    }
    out
}

/// Transform of a contact term: the position-space coefficient of `δ³(r)`.
fn contact_transform(term: Term, alpha: f64) -> SpinOperator {
    let a2 = alpha * alpha;
    match term {
        Term::Darwin => SpinOperator::identity().scale_real(-PI * a2 / 4.0),
        Term::SpinSpinContact => spin_dot_spin().scale_real(a2 / 4.0 * 8.0 * PI / 3.0),
        _ => unreachable!("not a contact term"),
    }
}

fn validate(config: &OracleConfig) -> Result<()> {
    let s = &config.screening;
    if s.len() < 2 {
        return Err(Error::InvalidInput("screening schedule needs at least two masses".into()));
    }
    if s.iter().any(|&m| m <= 0.0 || !m.is_finite()) || s.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(
            "screening schedule must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn angular_projections(
    angular: &(dyn Fn(&Vec3) -> SpinOperator + Send + Sync),
    q_hat: &Vec3,
    config: &OracleConfig,
) -> Vec<SpinOperator> {
    let rule = SphereRule::product(config.angular_theta, config.angular_phi);
    let mut proj = vec![SpinOperator::zero(); config.l_max + 1];
    for (dir, w) in rule.directions.iter().zip(&rule.weights) {
        let a = angular(dir);
        let c = q_hat.dot(dir);
        for (l, acc) in proj.iter_mut().enumerate() {
            *acc = *acc + a.scale_real(w * legendre(l, c));
        }
    }
    proj.iter()
        .enumerate()
        .map(|(l, p)| p.scale_real((2 * l + 1) as f64 / (4.0 * PI)))
        .collect()
}

/// Screened transform at a single Yukawa mass (no extrapolation).
pub fn screened_transform(
    term: Term,
    q: &Vec3,
    p1: &Vec3,
    p2: &Vec3,
    alpha: f64,
    mu: f64,
    config: &OracleConfig,
) -> Result<SpinOperator> {
    let pos = position_term(term, p1, p2, alpha)
        .ok_or_else(|| Error::InvalidInput(format!("{} is a contact term", term.name())))?;
    let qn = q.norm();
    let proj = angular_projections(pos.angular.as_ref(), &(q / qn), config);
    let n = 2 - pos.power;
    let scale = proj.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let mut total = SpinOperator::zero();
    for (l, a) in proj.iter().enumerate() {
        if a.norm() <= 1e-12 * scale {
            continue;
        }
        let r = radial_integral(n, l, qn, mu, config.panel_nodes);
        total = total + a.scale(i_pow(l) * (4.0 * PI * r));
    }
    Ok(total)
}

fn i_pow(l: usize) -> C64 {
    match l % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Numerical transform of one interaction term at momentum transfer `q`.
pub fn oracle_fourier(
    term: Term,
    q: &Vec3,
    p1: &Vec3,
    p2: &Vec3,
    alpha: f64,
    config: &OracleConfig,
) -> Result<OracleResult> {
    if term.is_contact() {
        return Ok(OracleResult {
            term,
            operator: contact_transform(term, alpha),
            analytic: true,
            partial_waves: Vec::new(),
        });
    }
    validate(config)?;
    let qn = q.norm();
    if qn <= 0.0 || !qn.is_finite() {
        return Err(Error::InvalidInput("oracle needs a nonzero transfer".into()));
    }
    let pos = position_term(term, p1, p2, alpha).expect("non-contact term");
    let proj = angular_projections(pos.angular.as_ref(), &(q / qn), config);
    let n = 2 - pos.power;
    let scale = proj.iter().map(|p| p.norm()).fold(0.0, f64::max);

    let mut operator = SpinOperator::zero();
    let mut partial_waves = Vec::new();
    for (l, a) in proj.iter().enumerate() {
        if scale == 0.0 || a.norm() <= 1e-12 * scale {
            continue;
        }
        if n + l as i32 <= -1 {
            return Err(Error::OracleDivergence(format!(
                "{}: partial wave l={l} is not integrable at the origin (|a_l| = {:e})",
                term.name(),
                a.norm()
            )));
        }
        let screened: Vec<f64> = config
            .screening
            .par_iter()
            .map(|&mu| radial_integral(n, l, qn, mu, config.panel_nodes))
            .collect();
        let extrapolants = neville_to_zero(&config.screening, &screened);
        let value = extrapolants[extrapolants.len() - 1];
        let prev = extrapolants[extrapolants.len() - 2];
        let relative_change = (value - prev).abs() / value.abs().max(f64::MIN_POSITIVE);
        if relative_change > config.tolerance {
            return Err(Error::OracleDivergence(format!(
                "{}: l={l} extrapolants {prev:e} → {value:e} differ by {relative_change:e} (> {:e}); \
                 screened values {screened:?}",
                term.name(),
                config.tolerance
            )));
        }
        operator = operator + a.scale(i_pow(l) * (4.0 * PI * value));
        partial_waves.push(PartialWave {
            l,
            screened,
            extrapolants,
            value,
            relative_change,
        });
    }
    Ok(OracleResult {
        term,
        operator,
        analytic: false,
        partial_waves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yukawa_radial_integral_matches_closed_form() {
        // ∫ r e^{−μr} j0(qr) dr = 1/(q² + μ²)
        for &(q, mu) in &[(0.1, 0.2), (1.0, 0.05), (5.0, 0.003125), (2.0, 1.0)] {
            let got = radial_integral(1, 0, q, mu, 24);
            let exact = 1.0 / (q * q + mu * mu);
            assert!((got - exact).abs() < 1e-11 * exact, "q={q} mu={mu}: {got} vs {exact}");
        }
    }

    #[test]
    fn first_order_radial_integral() {
        // ∫ e^{−μr} j1(qr) dr = (1/q)[1 − (μ/q) atan(q/μ)]
        for &(q, mu) in &[(0.5, 0.1), (3.0, 0.01)] {
            let got = radial_integral(0, 1, q, mu, 24);
            let exact = (1.0 - mu / q * (q / mu).atan()) / q;
            assert!((got - exact).abs() < 1e-11 * exact.abs());
        }
    }

    #[test]
    fn neville_recovers_polynomials() {
        let xs = [0.2, 0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x + 5.0 * x * x * x).collect();
        let est = neville_to_zero(&xs, &ys);
        assert!((est[3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn coulomb_transform_at_q2_is_pi() {
        let z = Vec3::zeros();
        let r = oracle_fourier(Term::Coulomb, &Vec3::new(0.0, 2.0, 0.0), &z, &z, 0.0, &OracleConfig::default())
            .unwrap();
        assert!((r.operator.matrix()[(0, 0)].re - PI).abs() < 1e-6);
        assert!(r.operator.matrix()[(0, 0)].im.abs() < 1e-12);
        assert_eq!(r.partial_waves.len(), 1);
    }

    #[test]
    fn contact_terms_are_analytic() {
        let z = Vec3::zeros();
        let r = oracle_fourier(Term::Darwin, &Vec3::x(), &z, &z, 1.0, &OracleConfig::default()).unwrap();
        assert!(r.analytic && r.partial_waves.is_empty());
        assert!((r.operator.matrix()[(0, 0)].re + PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn tensor_transform_is_traceless() {
        let z = Vec3::zeros();
        let r = oracle_fourier(
            Term::SpinSpinTensor,
            &Vec3::new(0.4, -0.9, 1.3),
            &z,
            &z,
            1.0,
            &OracleConfig::default(),
        )
        .unwrap();
        assert!(r.operator.trace().norm() <= 1e-6);
        assert!(r.partial_waves.iter().all(|w| w.l == 2));
    }

    #[test]
    fn bad_schedule_rejected() {
        let z = Vec3::zeros();
        let cfg = OracleConfig {
            screening: vec![0.1, 0.2],
            ..OracleConfig::default()
        };
        assert!(matches!(
            oracle_fourier(Term::Coulomb, &Vec3::x(), &z, &z, 1.0, &cfg),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn coarse_schedule_reports_divergence() {
        let z = Vec3::zeros();
        let cfg = OracleConfig {
            screening: vec![0.5, 0.4],
            tolerance: 1e-8,
            ..OracleConfig::default()
        };
        let err = oracle_fourier(Term::Coulomb, &Vec3::new(0.1, 0.0, 0.0), &z, &z, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::OracleDivergence(_)));
    }
}
