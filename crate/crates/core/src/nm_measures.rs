//! Non-Markovianity diagnostics: Δ negativity, the geometric measure, the BLP
//! measure and divisibility verdicts, plus the analytic study of Δ(t) for the
//! infinite waveguide at resonance (Γ = 1, k = ω0).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::closed_form::closed_form_resonant_derivative;
use crate::config::PhysicalConfig;
use crate::dynamical_map::MapTrajectory;
use crate::error::{invalid, Result};
use crate::master_equation::RateTrajectory;
use crate::one_excitation::e_sm;

/// Threshold shared by every verdict.
pub const VERDICT_TOL: f64 = 1e-6;

/// Default number of polar angles for the BLP maximization.
pub const DEFAULT_BLP_ANGLES: usize = 64;

/// Half-width of the two-sided limit used at α = 1.
const LIMIT_STEP: f64 = 1e-6;

/// Δ(t) = p_e − p_g for the infinite waveguide at resonance.
///
/// The exponentials are distributed over the numerator so large t does not
/// overflow. At α = 1 the two-sided limit α = 1 ± 1e−6 is averaged.
pub fn delta_closed_form(t: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        return 0.5
            * (delta_closed_form(t, 1.0 - LIMIT_STEP) + delta_closed_form(t, 1.0 + LIMIT_STEP));
    }
    let num = 8.0 * alpha * (-(alpha + 1.0) * t / 2.0).exp()
        + (alpha - 5.0) * (alpha + 1.0) * (-t).exp()
        + 4.0 * (1.0 - alpha) * (-(alpha + 1.0) * t).exp();
    num / (alpha * alpha - 1.0)
}

/// Δ(t) at α = 1 in closed form: e^{−2t}[e^t(3 − 2t) − 2].
pub fn delta_at_unit_alpha(t: f64) -> f64 {
    (-t).exp() * (3.0 - 2.0 * t) - 2.0 * (-2.0 * t).exp()
}

/// Stationary points of Δ(t) on t > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryAnalysis {
    pub count: usize,
    pub t_star: Option<f64>,
    pub delta_min: Option<f64>,
}

/// Largest time searched for a crossing.
const MAX_SEARCH_TIME: f64 = 1e4;

/// Bisection tolerance on t.
const BISECTION_TOL: f64 = 1e-12;

/// Crossing of f(t) = 5e^{αt} + 4α and g(t) = 4αe^{(α+1)t/2} + αe^{αt} + 4,
/// located by bisection on (f − g)/(α − 1), whose sign is that of Δ̇. At α = 1
/// the sign of Δ̇ comes from e^t(2t − 5) + 4.
pub fn delta_stationary_analysis(alpha: f64) -> Result<StationaryAnalysis> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", "must be positive"));
    }
    let slope = |t: f64| -> f64 {
        if alpha == 1.0 {
            (2.0 * t - 5.0) + 4.0 * (-t).exp()
        } else {
            let m = alpha.max((alpha + 1.0) / 2.0);
            let scaled_f_minus_g = (5.0 - alpha) * ((alpha - m) * t).exp()
                + 4.0 * (alpha - 1.0) * (-m * t).exp()
                - 4.0 * alpha * (((alpha + 1.0) / 2.0 - m) * t).exp();
            scaled_f_minus_g / (alpha - 1.0)
        }
    };
    let none = StationaryAnalysis {
        count: 0,
        t_star: None,
        delta_min: None,
    };
    let mut hi = 1.0;
    while slope(hi) <= 0.0 {
        hi *= 2.0;
        if hi > MAX_SEARCH_TIME {
            return Ok(none);
        }
    }
    let t_star = bisect(slope, 0.0, hi);
    Ok(StationaryAnalysis {
        count: 1,
        t_star: Some(t_star),
        delta_min: Some(delta_closed_form(t_star, alpha)),
    })
}

/// Root of Δ̇ from the closed-form derivatives of p_e and p_g.
pub fn delta_derivative_root(alpha: f64) -> Option<f64> {
    let slope = |t: f64| {
        let d = closed_form_resonant_derivative(t, alpha, 0.0);
        d.p_e - d.p_g
    };
    let mut hi = 1.0;
    while slope(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 200.0 {
            return None;
        }
    }
    Some(bisect(slope, 0.0, hi))
}

/// Bisection for a sign change from negative at `lo` to positive at `hi`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > BISECTION_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// N_Δ(t) = −min(0, Δ(t)) per sample.
pub fn negativity_profile(traj: &MapTrajectory) -> Vec<f64> {
    traj.snapshots
        .iter()
        .map(|s| (-s.delta()).max(0.0))
        .collect()
}

/// Total growth of a sampled series.
fn total_growth(values: impl Iterator<Item = f64>) -> f64 {
    let mut prev: Option<f64> = None;
    let mut sum = 0.0;
    for v in values {
        if let Some(p) = prev {
            sum += (v - p).max(0.0);
        }
        prev = Some(v);
    }
    sum
}

/// Geometric measure: Σ max(0, |det M_{t+dt}| − |det M_t|).
pub fn gm_measure(traj: &MapTrajectory) -> f64 {
    total_growth(traj.snapshots.iter().map(|s| s.det_m().abs()))
}

/// BLP growth for the antipodal pair at polar angle θ.
fn blp_growth(traj: &MapTrajectory, theta: f64) -> f64 {
    let (sin2, cos2) = (theta.sin().powi(2), theta.cos().powi(2));
    total_growth(
        traj.snapshots
            .iter()
            .map(|s| (s.c.norm_sqr() * sin2 + s.delta().powi(2) * cos2).sqrt()),
    )
}

/// BLP measure over antipodal pure pairs ±(sin θ, 0, cos θ).
///
/// D depends on θ only through sin²θ and cos²θ, so θ ∈ [0, π/2] suffices. The
/// best grid angle is refined by golden-section search on its neighbours.
pub fn blp_measure(traj: &MapTrajectory, n_angles: usize) -> Result<f64> {
    if n_angles < 16 {
        return Err(invalid("n_angles", "need at least 16"));
    }
    let step = FRAC_PI_2 / (n_angles - 1) as f64;
    let (best_k, best) = (0..n_angles)
        .map(|k| (k, blp_growth(traj, k as f64 * step)))
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
    let lo = best_k.saturating_sub(1) as f64 * step;
    let hi = ((best_k + 1).min(n_angles - 1)) as f64 * step;
    let refined = golden_max(|th| blp_growth(traj, th), lo, hi, 40);
    Ok(best.max(refined))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Divisibility verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Divisibility {
    /// Some rate is negative at a non-singular sample.
    pub cp_broken: bool,
    /// Δ < 0 while |c| > tol, a sufficient condition for P-divisibility breaking.
    pub p_broken: bool,
}

pub fn divisibility_verdict(traj: &MapTrajectory, rates: &RateTrajectory) -> Result<Divisibility> {
    if traj.len() != rates.len() {
        return Err(invalid("rates", "grid differs from the trajectory"));
    }
    let cp_broken = rates.regular().any(|(_, r)| r.min_rate() < -VERDICT_TOL);
    let p_broken = traj
        .snapshots
        .iter()
        .any(|s| s.delta() < 0.0 && s.c.norm() > VERDICT_TOL);
    Ok(Divisibility {
        cp_broken,
        p_broken,
    })
}

/// Measures for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub params: PhysicalConfig,
    pub n_delta_profile: Vec<f64>,
    pub gm: f64,
    pub blp: f64,
    pub cp_broken: bool,
    pub p_broken: bool,
    pub notes: String,
}

impl MeasureReport {
    pub fn build(
        params: PhysicalConfig,
        traj: &MapTrajectory,
        rates: &RateTrajectory,
        n_angles: usize,
    ) -> Result<Self> {
        let verdict = divisibility_verdict(traj, rates)?;
        let flagged = rates.singular.iter().filter(|&&s| s).count();
        Ok(Self {
            params,
            n_delta_profile: negativity_profile(traj),
            gm: gm_measure(traj),
            blp: blp_measure(traj, n_angles)?,
            cp_broken: verdict.cp_broken,
            p_broken: verdict.p_broken,
            notes: format!("{flagged} singular samples of {}", rates.len()),
        })
    }

    pub fn max_n_delta(&self) -> f64 {
        self.n_delta_profile.iter().copied().fold(0.0, f64::max)
    }

    /// Violations of gm > tol ⇒ blp > 0 ⇒ cp_broken and of
    /// (Δ < 0 with |c| > tol) ⇒ gm > 0.
    pub fn hierarchy_violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.gm > VERDICT_TOL && self.blp <= 0.0 {
            out.push("gm > tol but blp = 0");
        }
        if self.blp > 0.0 && !self.cp_broken {
            out.push("blp > 0 but rates nonnegative");
        }
        if self.p_broken && self.gm <= 0.0 {
            out.push("delta < 0 with c != 0 but gm = 0");
        }
        out
    }
}

/// Spontaneous-emission map with the mirror: p_g = 0, p_e = |e_sm|², c = e_sm.
pub fn emission_trajectory(cfg: &PhysicalConfig, dt: f64, t_max: f64) -> Result<MapTrajectory> {
    let n = (t_max / dt).round() as usize;
    let e: Vec<Complex64> = (0..=n)
        .map(|k| e_sm(k as f64 * dt, cfg))
        .collect::<Result<_>>()?;
    let p_e: Vec<f64> = e.iter().map(|v| v.norm_sqr()).collect();
    MapTrajectory::from_samples(dt, cfg.omega0, &vec![0.0; n + 1], &p_e, &e)
}
