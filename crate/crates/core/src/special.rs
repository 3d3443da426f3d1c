//! Complex special functions: exprel, the confluent function ₁F₁(1; b; z) for
//! integer b, and the lower incomplete gamma function γ(n, z).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// (e^z − 1)/z, continuous at z = 0.
pub fn exprel(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        // Horner form of 1 + z/2 + z²/6 + z³/24 + z⁴/120 + z⁵/720.
        let mut acc = Complex64::new(1.0 / 720.0, 0.0);
        for d in [120.0, 24.0, 6.0, 2.0, 1.0] {
            acc = acc * z + 1.0 / d;
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// ₁F₁(1; b; z) in a form that stays finite for large |z|.
///
/// Represents `value · exp(log_scale)`, where `log_scale` is either 0 or `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub value: Complex64,
    pub log_scale: Complex64,
}

impl Scaled {
    /// Evaluates `value · exp(log_scale + extra)`.
    pub fn times_exp(&self, extra: Complex64) -> Complex64 {
        self.value * (self.log_scale + extra).exp()
    }
}

/// ₁F₁(1; b; z) for integer b ≥ 1.
///
/// Uses the power series Σ z^k/(b)_k when |z| ≤ b and the terminating
/// asymptotic identity ₁F₁ = (b−1)! z^{1−b} e^z − Σ_j (b−1)⋯(b−1−j)/z^{j+1}
/// otherwise. When Re z > 0 the factor e^z is returned in `log_scale`.
pub fn kummer_one(b: u32, z: Complex64) -> Scaled {
    assert!(b >= 1, "b must be a positive integer");
    let bf = b as f64;
    let zero = Complex64::new(0.0, 0.0);
    if z.norm() <= bf {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        let mut k = 0.0;
        while term.norm() > 1e-17 * sum.norm() {
            term *= z / (bf + k);
            sum += term;
            k += 1.0;
        }
        return Scaled {
            value: sum,
            log_scale: zero,
        };
    }
    // Terminating tail T = Σ_{j=0}^{b-2} Π_{i=1}^{j+1}(b−i) / z^{j+1}.
    let mut tail = zero;
    let mut term = Complex64::new(1.0, 0.0);
    for i in 1..b {
        term *= (bf - i as f64) / z;
        tail += term;
    }
    // Leading term (b−1)! z^{1−b}, assembled in log space.
    let log_fact: f64 = (1..b).map(|i| (i as f64).ln()).sum();
    let lead = (log_fact - (bf - 1.0) * z.ln()).exp();
    if z.re > 0.0 {
        Scaled {
            value: lead - tail * (-z).exp(),
            log_scale: z,
        }
    } else {
        Scaled {
            value: lead * z.exp() - tail,
            log_scale: zero,
        }
    }
}

/// γ(n, z)/zⁿ = e^{−z} ₁F₁(1; n+1; z)/n in scaled form.
pub fn scaled_lower_gamma(n: u32, z: Complex64) -> Scaled {
    assert!(n >= 1, "n must be a positive integer");
    let f = kummer_one(n + 1, z);
    Scaled {
        value: f.value / n as f64,
        log_scale: f.log_scale - z,
    }
}

/// Lower incomplete gamma function γ(n, z) = ∫₀^z s^{n−1} e^{−s} ds.
///
/// Returns [`Error::Overflow`] when zⁿe^{−z} is not representable.
pub fn lower_incomplete_gamma(n: u32, z: Complex64) -> Result<Complex64> {
    if n == 0 {
        return Err(crate::error::invalid("n", "must be at least 1"));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Ok(z);
    }
    let log_mag = n as f64 * z.norm().ln() - z.re;
    if log_mag > 700.0 {
        return Err(Error::Overflow("lower_incomplete_gamma"));
    }
    let s = scaled_lower_gamma(n, z);
    let v = s.times_exp(n as f64 * z.ln());
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("lower_incomplete_gamma"))
    }
}
