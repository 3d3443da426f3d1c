//! Closed forms for the infinite waveguide at resonance (k = ω0), Γ = 1.
//!
//! Each function is a finite sum of terms coef·tᵖ·e^{rate·t} with combined
//! exponents, which keeps large α·t finite and gives exact derivatives. Near
//! α = 1 the printed forms cancel catastrophically; there a second-order
//! expansion in ε = α − 1 is used instead.

use num_complex::Complex64;

/// |α − 1| below which the ε-expansion replaces the direct form.
pub const NEAR_ONE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    coef: f64,
    power: i32,
    rate: f64,
}

fn term(coef: f64, power: i32, rate: f64) -> Term {
    Term { coef, power, rate }
}

fn eval(terms: &[Term], t: f64) -> f64 {
    terms
        .iter()
        .map(|k| k.coef * t.powi(k.power) * (k.rate * t).exp())
        .sum()
}

fn eval_derivative(terms: &[Term], t: f64) -> f64 {
    terms
        .iter()
        .map(|k| {
            let poly = if k.power == 0 {
                0.0
            } else {
                k.power as f64 * t.powi(k.power - 1)
            };
            k.coef * (poly + k.rate * t.powi(k.power)) * (k.rate * t).exp()
        })
        .sum()
}

/// Scales every coefficient, used to weight the ε-expansion orders.
fn scaled(terms: Vec<Term>, s: f64) -> Vec<Term> {
    terms
        .into_iter()
        .map(|k| Term {
            coef: k.coef * s,
            ..k
        })
        .collect()
}

fn ground_terms(alpha: f64) -> Vec<Term> {
    if (alpha - 1.0).abs() < NEAR_ONE {
        ground_series(alpha - 1.0)
    } else {
        ground_direct(alpha)
    }
}

fn ground_series(eps: f64) -> Vec<Term> {
    let mut v = vec![term(0.5, 2, -1.0)];
    v.extend(scaled(vec![term(0.5, 2, -1.0), term(-0.25, 3, -1.0)], eps));
    v.extend(scaled(
        vec![term(7.0 / 96.0, 4, -1.0), term(-0.25, 3, -1.0)],
        eps * eps,
    ));
    v
}

fn ground_direct(alpha: f64) -> Vec<Term> {
    let eps = alpha - 1.0;
    let k = 2.0 * alpha / (eps * eps);
    vec![
        term(k, 0, -alpha),
        term(-2.0 * k, 0, -(alpha + 1.0) / 2.0),
        term(k, 0, -1.0),
    ]
}

fn excited_terms(alpha: f64) -> Vec<Term> {
    if (alpha - 1.0).abs() < NEAR_ONE {
        excited_series(alpha - 1.0)
    } else {
        excited_direct(alpha)
    }
}

fn excited_series(eps: f64) -> Vec<Term> {
    let mut v = vec![
        term(0.5, 2, -1.0),
        term(-2.0, 1, -1.0),
        term(3.0, 0, -1.0),
        term(-2.0, 0, -2.0),
    ];
    v.extend(scaled(
        vec![
            term(2.0, 1, -2.0),
            term(1.0, 0, -2.0),
            term(-0.25, 3, -1.0),
            term(1.0, 2, -1.0),
            term(-1.0, 1, -1.0),
            term(-1.0, 0, -1.0),
        ],
        eps,
    ));
    v.extend(scaled(
        vec![
            term(-1.0, 2, -2.0),
            term(-1.0, 1, -2.0),
            term(-0.5, 0, -2.0),
            term(7.0 / 96.0, 4, -1.0),
            term(-32.0 / 96.0, 3, -1.0),
            term(24.0 / 96.0, 2, -1.0),
            term(0.5, 1, -1.0),
            term(0.5, 0, -1.0),
        ],
        eps * eps,
    ));
    v
}

fn excited_direct(alpha: f64) -> Vec<Term> {
    let eps = alpha - 1.0;
    let d = eps * eps * (alpha + 1.0);
    vec![
        term(-4.0 * eps * eps / d, 0, -(alpha + 1.0)),
        term(
            (alpha.powi(3) - 3.0 * alpha * alpha + alpha + 5.0) / d,
            0,
            -1.0,
        ),
        term(4.0 * (alpha - 3.0) * alpha / d, 0, -(alpha + 1.0) / 2.0),
        term(2.0 * alpha * (alpha + 1.0) / d, 0, -alpha),
    ]
}

/// Real envelope of c(t); the full coherence is e^{−iω0t} times this.
fn coherence_terms(alpha: f64) -> Vec<Term> {
    if (alpha - 1.0).abs() < NEAR_ONE {
        coherence_series(alpha - 1.0)
    } else {
        coherence_direct(alpha)
    }
}

fn coherence_series(eps: f64) -> Vec<Term> {
    let mut v = vec![term(1.0, 1, -1.5), term(1.0, 0, -1.5)];
    v.extend(scaled(
        vec![
            term(-0.75, 2, -1.5),
            term(-0.5, 1, -1.5),
            term(-0.5, 0, -1.5),
            term(0.5, 0, -0.5),
        ],
        eps,
    ));
    v.extend(scaled(
        vec![
            term(7.0 / 24.0, 3, -1.5),
            term(3.0 / 24.0, 2, -1.5),
            term(6.0 / 24.0, 1, -1.5),
            term(6.0 / 24.0, 0, -1.5),
            term(-0.25, 0, -0.5),
        ],
        eps * eps,
    ));
    v
}

fn coherence_direct(alpha: f64) -> Vec<Term> {
    let eps = alpha - 1.0;
    let d = alpha * alpha - 1.0;
    vec![
        term(eps * eps / d, 0, -0.5),
        term(4.0 * alpha / d, 0, -(alpha / 2.0 + 1.0)),
        term(-2.0 * (alpha + 1.0) / d, 0, -(alpha + 0.5)),
    ]
}

/// (p_g, p_e, c) at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapFunctions {
    pub p_g: f64,
    pub p_e: f64,
    pub c: Complex64,
}

/// Closed-form (p_g, p_e, c) at resonance; time in units of 1/Γ.
pub fn closed_form_resonant(t: f64, alpha: f64, omega0: f64) -> MapFunctions {
    let phase = Complex64::from_polar(1.0, -omega0 * t);
    MapFunctions {
        p_g: eval(&ground_terms(alpha), t),
        p_e: eval(&excited_terms(alpha), t),
        c: phase * eval(&coherence_terms(alpha), t),
    }
}

/// Time derivatives (ṗ_g, ṗ_e, ċ) of [`closed_form_resonant`].
pub fn closed_form_resonant_derivative(t: f64, alpha: f64, omega0: f64) -> MapFunctions {
    let phase = Complex64::from_polar(1.0, -omega0 * t);
    let env = coherence_terms(alpha);
    let c = eval(&env, t);
    let dc = eval_derivative(&env, t);
    MapFunctions {
        p_g: eval_derivative(&ground_terms(alpha), t),
        p_e: eval_derivative(&excited_terms(alpha), t),
        c: phase * Complex64::new(dc, -omega0 * c),
    }
}

/// Spontaneous emission into a flat continuum: (0, e^{−t}, e^{−iω0t − t/2}).
pub fn spontaneous_emission(t: f64, omega0: f64) -> MapFunctions {
    MapFunctions {
        p_g: 0.0,
        p_e: (-t).exp(),
        c: Complex64::from_polar((-t / 2.0).exp(), -omega0 * t),
    }
}

/// Time derivatives of [`spontaneous_emission`].
pub fn spontaneous_emission_derivative(t: f64, omega0: f64) -> MapFunctions {
    let c = spontaneous_emission(t, omega0).c;
    MapFunctions {
        p_g: 0.0,
        p_e: -(-t).exp(),
        c: c * Complex64::new(-0.5, -omega0),
    }
}
