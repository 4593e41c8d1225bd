//! Quadrature rules and the few special functions the oracle needs.

use std::f64::consts::PI;

use nalgebra::Vector3;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomial `P_l(x)`.
pub fn legendre(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=l {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Spherical Bessel function `j_l(x)` for `x ≥ 0`, given `sin x` and `cos x`.
///
/// Power series below `x = 3`, upward recurrence above.
pub fn spherical_bessel_sc(l: usize, x: f64, sin_x: f64, cos_x: f64) -> f64 {
    if x < 3.0 {
        return spherical_bessel_series(l, x);
    }
    let j0 = sin_x / x;
    if l == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = sin_x / (x * x) - cos_x / x;
    for n in 1..l {
        let next = (2 * n + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn spherical_bessel(l: usize, x: f64) -> f64 {
    spherical_bessel_sc(l, x, x.sin(), x.cos())
}

fn spherical_bessel_series(l: usize, x: f64) -> f64 {
    // j_l(x) = x^l/(2l+1)!! Σ_k (−x²/2)^k / (k! (2l+3)(2l+5)…(2l+2k+1))
    let mut lead = 1.0;
    for n in 0..l {
        lead *= x / (2 * n + 3) as f64;
    }
    let z = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= z / (k as f64 * (2 * l + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// A quadrature rule on the unit sphere; weights sum to `4π`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub directions: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// The 26-point Lebedev rule (exact to degree 7).
    pub fn lebedev26() -> SphereRule {
        let mut directions = Vec::with_capacity(26);
        let mut weights = Vec::with_capacity(26);
        let four_pi = 4.0 * PI;
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut v = Vector3::zeros();
                v[axis] = sign;
                directions.push(v);
                weights.push(four_pi / 21.0);
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            for sa in [1.0, -1.0] {
                for sb in [1.0, -1.0] {
                    let mut v = Vector3::zeros();
                    v[a] = sa * h;
                    v[b] = sb * h;
                    directions.push(v);
                    weights.push(four_pi * 4.0 / 105.0);
                }
            }
        }
        let c = 1.0 / 3f64.sqrt();
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                for sz in [1.0, -1.0] {
                    directions.push(Vector3::new(sx * c, sy * c, sz * c));
                    weights.push(four_pi * 9.0 / 280.0);
                }
            }
        }
        SphereRule { directions, weights }
    }

    /// Gauss–Legendre in `cos θ` × trapezoid in `φ`.
    pub fn product(n_theta: usize, n_phi: usize) -> SphereRule {
        let (ct, wt) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut directions = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                directions.push(Vector3::new(s * phi.cos(), s * phi.sin(), *c));
                weights.push(w * dphi);
            }
        }
        SphereRule { directions, weights }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 8, 16, 24] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn bessel_matches_closed_forms() {
        for &x in &[0.01, 0.5, 1.0, 2.9, 3.1, 7.0, 40.0] {
            let (s, c) = (f64::sin(x), f64::cos(x));
            let j0 = s / x;
            let j1 = s / (x * x) - c / x;
            let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
            let tol = if x < 0.1 { 1e-9 } else { 1e-13 };
            assert!((spherical_bessel(0, x) - j0).abs() < tol);
            assert!((spherical_bessel(1, x) - j1).abs() < tol);
            assert!((spherical_bessel(2, x) - j2).abs() < tol, "x={x}");
        }
        // j2(x) = x²/15 (1 − x²/14 + …)
        let x: f64 = 1e-3;
        let series = x * x / 15.0 * (1.0 - x * x / 14.0);
        assert!((spherical_bessel(2, x) - series).abs() < 1e-20);
    }

    #[test]
    fn lebedev_weights_and_degree() {
        let rule = SphereRule::lebedev26();
        assert_eq!(rule.len(), 26);
        assert!((rule.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-13);
        // ∫ z² dΩ = 4π/3, ∫ x²y²z² dΩ = 4π/105
        let z2: f64 = rule.directions.iter().zip(&rule.weights).map(|(d, w)| w * d.z * d.z).sum();
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-13);
        let xyz: f64 = rule
            .directions
            .iter()
            .zip(&rule.weights)
            .map(|(d, w)| w * (d.x * d.y * d.z).powi(2))
            .sum();
        assert!((xyz - 4.0 * PI / 105.0).abs() < 1e-14);
    }

    #[test]
    fn product_rule_integrates_quartics() {
        let rule = SphereRule::product(8, 16);
        let x4: f64 = rule.directions.iter().zip(&rule.weights).map(|(d, w)| w * d.x.powi(4)).sum();
        assert!((x4 - 4.0 * PI / 5.0).abs() < 1e-13);
    }
}
