//! Seeded random samplers for states, rotations and kinematics.

use nalgebra::Matrix2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kinematics::{make_kinematics, Kinematics, Vec3, FORWARD_LIMIT};
use crate::spin::{SpinState, C64};

/// Independent deterministic stream `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal variate (Box–Muller).
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(gaussian(rng), gaussian(rng), gaussian(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

/// Haar-random pure two-qubit state.
pub fn state<R: Rng + ?Sized>(rng: &mut R) -> SpinState {
    loop {
        let s = SpinState::new([
            complex_gaussian(rng),
            complex_gaussian(rng),
            complex_gaussian(rng),
            complex_gaussian(rng),
        ]);
        if let Ok(s) = s.normalized() {
            return s;
        }
    }
}

/// Random exchange-symmetric state `(C, D, D, G)`.
pub fn symmetric_state<R: Rng + ?Sized>(rng: &mut R) -> SpinState {
    loop {
        let (c, d, g) = (complex_gaussian(rng), complex_gaussian(rng), complex_gaussian(rng));
        if let Ok(s) = SpinState::symmetric(c, d, g) {
            return s;
        }
    }
}

/// Random member of the unentangled symmetric family `C = u², D = uv, G = v²`.
pub fn product_symmetric_state<R: Rng + ?Sized>(rng: &mut R) -> SpinState {
    loop {
        let (u, v) = (complex_gaussian(rng), complex_gaussian(rng));
        if let Ok(s) = SpinState::symmetric(u * u, u * v, v * v) {
            return s;
        }
    }
}

/// Haar-random single-qubit unitary.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<C64> {
    let (a, b) = (complex_gaussian(rng), complex_gaussian(rng));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    let phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * rng.gen::<f64>());
    Matrix2::new(a, -b.conj(), b, a.conj()) * phase
}

/// Random elastic kinematics in a random frame, relative momentum of order
/// `scale`; both transfers kept well clear of the forward singularity.
pub fn elastic_kinematics<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Kinematics {
    loop {
        let total = 0.5 * scale * gaussian(rng) * unit_vector(rng);
        let k = scale * (0.2 + 1.3 * rng.gen::<f64>());
        let k_in = k * unit_vector(rng);
        let k_out = k * unit_vector(rng);
        let half = 0.5 * total;
        let kin = make_kinematics(half + k_in, half - k_in, half + k_out, half - k_out)
            .expect("constructed to conserve momentum");
        let floor = (1e3 * FORWARD_LIMIT).max(1e-3 * scale);
        if kin.q.norm() > floor && kin.q_ex.norm() > floor {
            return kin;
        }
    }
}
