//! The exponential single-photon wavepacket incident from the left.
//!
//! φ(x) = i√(αΓ)·exp[(ik + αΓ/2)(x − x0)]·θ(x0 − x), with θ(0) = 1/2, so the
//! wavefront sits exactly at the qubit at t = 0.

use num_complex::Complex64;

use crate::config::PhysicalConfig;

/// Heaviside step with the θ(0) = 1/2 convention.
pub fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Initial photon amplitude φ(x).
pub fn wavepacket_amplitude(x: f64, cfg: &PhysicalConfig) -> Complex64 {
    let s = x - cfg.qubit_position();
    let w = step(-s);
    if w == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let amp = Complex64::new(0.0, cfg.bandwidth().sqrt());
    amp * (cfg.packet_exponent() * s).exp() * w
}

/// Probability mass ∫_{-∞}^{x} |φ(y)|² dy.
pub fn packet_mass_left_of(x: f64, cfg: &PhysicalConfig) -> f64 {
    let s = (x - cfg.qubit_position()).min(0.0);
    (cfg.bandwidth() * s).exp()
}

/// Samples φ(x0 − q·dt) for q = 0..count, with the half weight at q = 0.
pub(crate) fn packet_samples(cfg: &PhysicalConfig, dt: f64, count: usize) -> Vec<Complex64> {
    let amp = Complex64::new(0.0, cfg.bandwidth().sqrt());
    let kappa = cfg.packet_exponent();
    (0..count)
        .map(|q| {
            let v = amp * (-kappa * (q as f64 * dt)).exp();
            if q == 0 {
                v * 0.5
            } else {
                v
            }
        })
        .collect()
}
