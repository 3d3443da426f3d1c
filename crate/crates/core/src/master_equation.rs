//! Time-local master equation reproducing the dynamical map.
//!
//! ρ̇ = −i[H, ρ] + γ₊ D[σ₊]ρ + γ₋ D[σ₋]ρ + γ_z D[σ_z]ρ with H = (S/2)σ₊σ₋ and
//! D[A]ρ = AρA† − ½{A†A, ρ}. The generator matrices are expressed in the
//! Hermitian basis {1, σx, σy, σz}/√2 with σz = |e⟩⟨e| − |g⟩⟨g|.

use std::io::{self, Write};
use std::ops::Range;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::dynamical_map::{
    apply_unchecked, MapDerivative, MapSnapshot, MapTrajectory, QubitState,
};
use crate::error::{Error, Result};

/// |Δ| or |c| below this marks a sample as singular.
pub const SINGULAR_EPS: f64 = 1e-6;

/// Singular windows longer than this many steps split the integration.
pub const MAX_BRIDGED_STEPS: usize = 5;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rates and Hamiltonian shift at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_z: f64,
    /// H = (S/2)σ₊σ₋.
    pub s: f64,
}

impl Rates {
    pub const ZERO: Rates = Rates {
        gamma_plus: 0.0,
        gamma_minus: 0.0,
        gamma_z: 0.0,
        s: 0.0,
    };

    /// Rates from the map functions and their derivatives.
    pub fn from_map(snap: &MapSnapshot, der: &MapDerivative) -> Self {
        let delta = snap.delta();
        let d_delta = der.dp_e - der.dp_g;
        let gamma_plus = (snap.p_e * der.dp_g - snap.p_g * der.dp_e) / delta;
        let gamma_minus = -d_delta / delta - gamma_plus;
        let log_c = der.dc / snap.c;
        Self {
            gamma_plus,
            gamma_minus,
            gamma_z: -(gamma_plus + gamma_minus) / 4.0 - log_c.re / 2.0,
            s: -2.0 * log_c.im,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.gamma_plus.is_finite()
            && self.gamma_minus.is_finite()
            && self.gamma_z.is_finite()
            && self.s.is_finite()
    }

    pub fn min_rate(&self) -> f64 {
        self.gamma_plus.min(self.gamma_minus).min(self.gamma_z)
    }
}

/// Whether the map is too close to non-invertible for rates to be trusted.
pub fn is_singular(snap: &MapSnapshot) -> bool {
    snap.delta().abs() < SINGULAR_EPS || snap.c.norm() < SINGULAR_EPS
}

/// Rates on the sample grid and at the half steps used by RK4.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTrajectory {
    pub dt: f64,
    pub t: Vec<f64>,
    pub rates: Vec<Rates>,
    pub singular: Vec<bool>,
    pub midpoint_rates: Vec<Rates>,
    pub midpoint_singular: Vec<bool>,
}

impl RateTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn gamma_plus(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.gamma_plus).collect()
    }

    pub fn gamma_minus(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.gamma_minus).collect()
    }

    pub fn gamma_z(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.gamma_z).collect()
    }

    pub fn shift(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.s).collect()
    }

    /// Rates at non-singular samples.
    pub fn regular(&self) -> impl Iterator<Item = (f64, &Rates)> {
        self.t
            .iter()
            .zip(&self.rates)
            .zip(&self.singular)
            .filter(|(_, &s)| !s)
            .map(|((&t, r), _)| (t, r))
    }

    /// Whether the step n → n+1 touches a singular or non-finite point.
    fn step_blocked(&self, n: usize) -> bool {
        self.singular[n]
            || self.singular[n + 1]
            || self.midpoint_singular[n]
            || !self.rates[n].is_finite()
            || !self.rates[n + 1].is_finite()
            || !self.midpoint_rates[n].is_finite()
    }

    /// CSV with columns t, gamma_plus, gamma_minus, gamma_z, S, singular_flag.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,gamma_plus,gamma_minus,gamma_z,S,singular_flag")?;
        for ((t, r), s) in self.t.iter().zip(&self.rates).zip(&self.singular) {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                t,
                r.gamma_plus,
                r.gamma_minus,
                r.gamma_z,
                r.s,
                u8::from(*s)
            )?;
        }
        Ok(())
    }
}

/// Rates on the trajectory grid. Analytic derivatives require a closed-form
/// trajectory; otherwise second-order differences are used.
pub fn extract_rates(
    traj: &MapTrajectory,
    use_analytic_derivatives: bool,
) -> Result<RateTrajectory> {
    let der = traj.derivatives(use_analytic_derivatives)?;
    let (mid_snaps, mid_der) = traj.midpoints(use_analytic_derivatives)?;
    let singular: Vec<bool> = traj.snapshots.iter().map(is_singular).collect();
    if singular.iter().all(|&s| s) {
        return Err(Error::AllSingular);
    }
    Ok(RateTrajectory {
        dt: traj.dt,
        t: traj.snapshots.iter().map(|s| s.t).collect(),
        rates: traj
            .snapshots
            .iter()
            .zip(&der)
            .map(|(s, d)| Rates::from_map(s, d))
            .collect(),
        singular,
        midpoint_rates: mid_snaps
            .iter()
            .zip(&mid_der)
            .map(|(s, d)| Rates::from_map(s, d))
            .collect(),
        midpoint_singular: mid_snaps.iter().map(is_singular).collect(),
    })
}

/// F_ij = Tr[G_i Φ(G_j)].
pub fn f_matrix(snap: &MapSnapshot) -> Matrix4<f64> {
    let (re, im) = (snap.c.re, snap.c.im);
    Matrix4::new(
        1.0,
        0.0,
        0.0,
        0.0,
        0.0,
        re,
        im,
        0.0,
        0.0,
        -im,
        re,
        0.0,
        snap.p_e + snap.p_g - 1.0,
        0.0,
        0.0,
        snap.delta(),
    )
}

fn f_dot(der: &MapDerivative) -> Matrix4<f64> {
    let (re, im) = (der.dc.re, der.dc.im);
    Matrix4::new(
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        re,
        im,
        0.0,
        0.0,
        -im,
        re,
        0.0,
        der.dp_e + der.dp_g,
        0.0,
        0.0,
        der.dp_e - der.dp_g,
    )
}

/// Generator matrix L = Ḟ F⁻¹ at sample n.
pub fn build_generator_matrix(
    traj: &MapTrajectory,
    n: usize,
    use_analytic_derivatives: bool,
) -> Result<Matrix4<f64>> {
    let snap = traj.snapshots.get(n).ok_or(Error::OutOfRange {
        t: traj.time(n),
        t_min: 0.0,
        t_max: traj.t_max(),
    })?;
    let der = traj.derivatives(use_analytic_derivatives)?[n];
    generator_from_map(snap, &der)
}

/// L = Ḟ F⁻¹ from map values and derivatives.
pub fn generator_from_map(snap: &MapSnapshot, der: &MapDerivative) -> Result<Matrix4<f64>> {
    if snap.det_m().abs() < SINGULAR_EPS * SINGULAR_EPS {
        return Err(Error::Singular {
            what: "F",
            t: snap.t,
        });
    }
    let inv = f_matrix(snap).try_inverse().ok_or(Error::Singular {
        what: "F",
        t: snap.t,
    })?;
    Ok(f_dot(der) * inv)
}

fn pauli_basis() -> [Matrix2<Complex64>; 4] {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [
        Matrix2::new(ONE, ZERO, ZERO, ONE) * s,
        Matrix2::new(ZERO, ONE, ONE, ZERO) * s,
        Matrix2::new(ZERO, -I, I, ZERO) * s,
        Matrix2::new(ONE, ZERO, ZERO, -ONE) * s,
    ]
}

/// L_ij = Tr[G_i 𝓛(G_j)] for the Lindbladian with the given rates.
pub fn generator_from_rates(rates: &Rates) -> Matrix4<f64> {
    let g = pauli_basis();
    Matrix4::from_fn(|i, j| (g[i] * lindbladian(rates, &g[j])).trace().re)
}

/// Drive entries of L coupling the identity and σz to the coherences; zero
/// for this map family.
pub fn mu_residual(l: &Matrix4<f64>) -> f64 {
    [
        l[(1, 0)],
        l[(2, 0)],
        l[(1, 3)],
        l[(2, 3)],
        l[(3, 1)],
        l[(3, 2)],
    ]
    .iter()
    .fold(0.0, |m, v| m.max(v.abs()))
}

fn sigma_minus() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, ZERO, ONE, ZERO)
}

fn dissipator(a: &Matrix2<Complex64>, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    let ad = a.adjoint();
    let ada = ad * a;
    a * rho * ad - (ada * rho + rho * ada) * Complex64::new(0.5, 0.0)
}

/// 𝓛(ρ).
pub fn lindbladian(rates: &Rates, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    let sm = sigma_minus();
    let sp = sm.adjoint();
    let sz = Matrix2::new(ONE, ZERO, ZERO, -ONE);
    let h = sp * sm * Complex64::new(rates.s / 2.0, 0.0);
    let mut out = (h * rho - rho * h) * (-I);
    out += dissipator(&sp, rho) * Complex64::new(rates.gamma_plus, 0.0);
    out += dissipator(&sm, rho) * Complex64::new(rates.gamma_minus, 0.0);
    out += dissipator(&sz, rho) * Complex64::new(rates.gamma_z, 0.0);
    out
}

/// States produced by the master equation on the rate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeTrajectory {
    pub t: Vec<f64>,
    /// None where integration was halted by a singular window.
    pub states: Vec<Option<Matrix2<Complex64>>>,
    /// Sample ranges covered by continuous integration.
    pub segments: Vec<Range<usize>>,
}

impl MeTrajectory {
    /// Whether integration was split by a long singular window.
    pub fn was_split(&self) -> bool {
        self.segments.len() > 1 || self.segments.last().is_none_or(|s| s.end != self.t.len())
    }

    /// Largest |Tr ρ − 1| over the integrated samples.
    pub fn max_trace_error(&self) -> f64 {
        self.states
            .iter()
            .flatten()
            .map(|r| (r.trace() - ONE).norm())
            .fold(0.0, f64::max)
    }
}

/// RK4 with step dt using grid rates at the ends and interpolated midpoint
/// rates. A run of blocked steps no longer than [`MAX_BRIDGED_STEPS`] is
/// stepped through; a longer run ends the current segment. Integration then
/// resumes after the window from Φ_t[ρ0] when `restart` supplies the map.
pub fn integrate_me(
    rates: &RateTrajectory,
    rho0: &QubitState,
    restart: Option<&MapTrajectory>,
) -> Result<MeTrajectory> {
    let len = rates.len();
    if let Some(map) = restart {
        if map.len() != len {
            return Err(Error::LatticeMismatch(format!(
                "restart map has {} samples, rates have {len}",
                map.len()
            )));
        }
    }
    let h = rates.dt;
    let mut states = vec![None; len];
    let mut segments = Vec::new();
    let mut rho = *rho0.matrix();
    let mut start = 0;
    states[0] = Some(rho);
    let mut n = 0;
    while n + 1 < len {
        let window = (n..len - 1).take_while(|&k| rates.step_blocked(k)).count();
        if window > MAX_BRIDGED_STEPS {
            segments.push(start..n + 1);
            let resume = n + window;
            match restart {
                Some(map) if resume < len => {
                    rho = *apply_unchecked(&map.snapshots[resume], rho0).matrix();
                    states[resume] = Some(rho);
                    start = resume;
                    n = resume;
                    continue;
                }
                _ => {
                    return Ok(MeTrajectory {
                        t: rates.t.clone(),
                        states,
                        segments,
                    })
                }
            }
        }
        let hc = Complex64::new(h, 0.0);
        let half = Complex64::new(h / 2.0, 0.0);
        let (r0, rm, r1) = (
            &rates.rates[n],
            &rates.midpoint_rates[n],
            &rates.rates[n + 1],
        );
        let k1 = lindbladian(r0, &rho);
        let k2 = lindbladian(rm, &(rho + k1 * half));
        let k3 = lindbladian(rm, &(rho + k2 * half));
        let k4 = lindbladian(r1, &(rho + k3 * hc));
        let next =
            rho + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
        if next.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            segments.push(start..n + 1);
            return Ok(MeTrajectory {
                t: rates.t.clone(),
                states,
                segments,
            });
        }
        rho = next;
        n += 1;
        states[n] = Some(rho);
    }
    segments.push(start..len);
    Ok(MeTrajectory {
        t: rates.t.clone(),
        states,
        segments,
    })
}

/// ½‖A − B‖₁ for Hermitian A, B.
pub fn trace_distance(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> f64 {
    let d = a - b;
    let h = (d + d.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
        / 2.0
}

/// Largest trace distance between the master-equation states and Φ_t[ρ0]
/// over integrated, non-singular samples.
pub fn map_consistency(
    me: &MeTrajectory,
    rates: &RateTrajectory,
    traj: &MapTrajectory,
    rho0: &QubitState,
) -> f64 {
    me.states
        .iter()
        .zip(&traj.snapshots)
        .zip(&rates.singular)
        .filter_map(|((s, snap), &sing)| {
            let rho = s.as_ref()?;
            (!sing).then(|| trace_distance(rho, apply_unchecked(snap, rho0).matrix()))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{closed_form_resonant, closed_form_resonant_derivative};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const OMEGA0: f64 = 20.0;

    #[test]
    fn spontaneous_emission_rates() {
        let tr = MapTrajectory::spontaneous_emission(OMEGA0, 1e-2, 5.0).unwrap();
        for analytic in [true, false] {
            let r = extract_rates(&tr, analytic).unwrap();
            for rate in &r.rates {
                assert!(rate.gamma_plus.abs() < 1e-6);
                assert!((rate.gamma_minus - 1.0).abs() < 1e-4);
                assert!(rate.gamma_z.abs() < 1e-4);
                assert!((rate.s - 2.0 * OMEGA0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn rates_finite_at_start() {
        let tr = MapTrajectory::closed_form(1.0, OMEGA0, 1e-3, 1.0).unwrap();
        let r = extract_rates(&tr, true).unwrap();
        assert!(r.rates[0].is_finite());
        assert!(!r.singular[0]);
    }

    #[test]
    fn rate_sum_is_log_derivative_of_delta() {
        let tr = MapTrajectory::closed_form(2.0, OMEGA0, 1e-3, 10.0).unwrap();
        let r = extract_rates(&tr, true).unwrap();
        let der = tr.derivatives(true).unwrap();
        for (k, rate) in r.rates.iter().enumerate().filter(|(k, _)| !r.singular[*k]) {
            let want = -(der[k].dp_e - der[k].dp_g) / tr.snapshots[k].delta();
            assert_relative_eq!(
                rate.gamma_plus + rate.gamma_minus,
                want,
                epsilon = 1e-9,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn generator_at_zero_and_identity_f() {
        let tr = MapTrajectory::closed_form(0.5, OMEGA0, 1e-2, 1.0).unwrap();
        assert_eq!(f_matrix(&tr.snapshots[0]), Matrix4::identity());
        let l = build_generator_matrix(&tr, 0, true).unwrap();
        assert_eq!(l.row(0).iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    }

    #[test]
    fn generator_matches_rates_route() {
        for alpha in [0.5, 1.0, 3.0] {
            let tr = MapTrajectory::closed_form(alpha, OMEGA0, 1e-2, 8.0).unwrap();
            let r = extract_rates(&tr, true).unwrap();
            let der = tr.derivatives(true).unwrap();
            for n in (0..tr.len()).filter(|&n| !r.singular[n]) {
                let Ok(l) = generator_from_map(&tr.snapshots[n], &der[n]) else {
                    continue;
                };
                let scale = 1.0 + l.abs().max();
                let diff = (l - generator_from_rates(&r.rates[n])).abs().max();
                assert!(diff <= 1e-6 * scale, "alpha {alpha} n {n} diff {diff}");
                assert_relative_eq!(
                    l[(1, 1)],
                    (der[n].dc / tr.snapshots[n].c).re,
                    epsilon = 1e-8 * scale
                );
                assert_relative_eq!(l[(2, 2)], l[(1, 1)], epsilon = 1e-8 * scale);
                assert!(mu_residual(&l) <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn generator_is_trace_preserving() {
        let rates = Rates {
            gamma_plus: -0.3,
            gamma_minus: 1.7,
            gamma_z: 0.2,
            s: 5.0,
        };
        let l = generator_from_rates(&rates);
        assert!(l.row(0).iter().all(|v| v.abs() < 1e-15));
        for g in pauli_basis() {
            assert!(lindbladian(&rates, &g).trace().norm() < 1e-15);
        }
    }

    #[test]
    fn all_singular_rejected() {
        let snaps: Vec<MapSnapshot> = (0..10)
            .map(|k| MapSnapshot {
                t: k as f64 * 0.1,
                p_g: 0.5,
                p_e: 0.5,
                c: ONE * 0.5,
            })
            .collect();
        let tr = MapTrajectory::from_samples(
            0.1,
            0.0,
            &snaps.iter().map(|s| s.p_g).collect::<Vec<_>>(),
            &snaps.iter().map(|s| s.p_e).collect::<Vec<_>>(),
            &snaps.iter().map(|s| s.c).collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(extract_rates(&tr, false), Err(Error::AllSingular));
    }

    fn constant_rates(rates: Rates, dt: f64, n: usize) -> RateTrajectory {
        RateTrajectory {
            dt,
            t: (0..n).map(|k| k as f64 * dt).collect(),
            rates: vec![rates; n],
            singular: vec![false; n],
            midpoint_rates: vec![rates; n - 1],
            midpoint_singular: vec![false; n - 1],
        }
    }

    #[test]
    fn pure_rotation() {
        let rates = Rates {
            s: 2.0 * OMEGA0,
            ..Rates::ZERO
        };
        let r = constant_rates(rates, 1e-3, 1001);
        let rho0 = QubitState::from_bloch(Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let me = integrate_me(&r, &rho0, None).unwrap();
        for (k, s) in me.states.iter().enumerate().step_by(100) {
            let rho = s.unwrap();
            let t = k as f64 * 1e-3;
            let want = Complex64::from_polar(0.5, OMEGA0 * t);
            assert!((rho[(1, 0)] - want).norm() < 1e-7);
        }
    }

    #[test]
    fn constant_decay() {
        let rates = Rates {
            gamma_minus: 1.0,
            ..Rates::ZERO
        };
        let r = constant_rates(rates, 1e-2, 501);
        let me = integrate_me(&r, &QubitState::excited(), None).unwrap();
        for (k, s) in me.states.iter().enumerate() {
            assert!((s.unwrap()[(0, 0)].re - (-(k as f64) * 1e-2).exp()).abs() < 1e-9);
        }
        assert!(me.max_trace_error() < 1e-12);
        assert!(!me.was_split());
    }

    #[test]
    fn long_singular_window_splits_and_restarts() {
        let tr = MapTrajectory::spontaneous_emission(OMEGA0, 1e-2, 2.0).unwrap();
        let mut r = extract_rates(&tr, true).unwrap();
        for k in 50..60 {
            r.singular[k] = true;
        }
        let rho0 = QubitState::excited();
        let halted = integrate_me(&r, &rho0, None).unwrap();
        assert_eq!(halted.segments, vec![0..50]);
        assert!(halted.states[60].is_none());
        let resumed = integrate_me(&r, &rho0, Some(&tr)).unwrap();
        assert_eq!(resumed.segments, vec![0..50, 60..tr.len()]);
        assert!(map_consistency(&resumed, &r, &tr, &rho0) < 1e-8);
    }

    #[test]
    fn short_singular_window_is_bridged() {
        let tr = MapTrajectory::spontaneous_emission(OMEGA0, 1e-2, 2.0).unwrap();
        let mut r = extract_rates(&tr, true).unwrap();
        r.singular[40] = true;
        let me = integrate_me(&r, &QubitState::excited(), None).unwrap();
        assert_eq!(me.segments, vec![0..tr.len()]);
    }

    #[test]
    fn me_reproduces_closed_form_map() {
        let tr = MapTrajectory::closed_form(1.0, OMEGA0, 2e-3, 10.0).unwrap();
        let r = extract_rates(&tr, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let rho0 = QubitState::random(&mut rng);
            let me = integrate_me(&r, &rho0, Some(&tr)).unwrap();
            assert!(me.max_trace_error() < 1e-10);
            assert!(map_consistency(&me, &r, &tr, &rho0) < 1e-3);
        }
    }

    #[test]
    fn rates_use_map_derivative_definitions() {
        let (t, alpha) = (0.7, 2.5);
        let snap = MapSnapshot::from_functions(t, closed_form_resonant(t, alpha, OMEGA0));
        let d = closed_form_resonant_derivative(t, alpha, OMEGA0);
        let der = MapDerivative {
            t,
            dp_g: d.p_g,
            dp_e: d.p_e,
            dc: d.c,
        };
        let r = Rates::from_map(&snap, &der);
        // dp_e/dt = −(γ₋ + γ₊)p_e + γ₊ at ρ0 = |e⟩ with ρ_ee = p_e.
        assert_relative_eq!(
            d.p_e,
            -(r.gamma_plus + r.gamma_minus) * snap.p_e + r.gamma_plus,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            d.p_g,
            -(r.gamma_plus + r.gamma_minus) * snap.p_g + r.gamma_plus,
            epsilon = 1e-12
        );
    }

    #[test]
    fn csv_header() {
        let tr = MapTrajectory::spontaneous_emission(OMEGA0, 0.1, 1.0).unwrap();
        let r = extract_rates(&tr, true).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,gamma_plus,gamma_minus,gamma_z,S,singular_flag\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",0"));
    }
}
