//! Acceptance criteria 1 to 11, one PASS/FAIL line each.
//!
//! Run with `cargo test -p wgscatter --test acceptance`. Set
//! `ACCEPTANCE_ONLY=1,6` to run a subset.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgscatter::closed_form::closed_form_resonant;
use wgscatter::dynamical_map::{choi_min_eigenvalue, QubitState, CHOI_TOL};
use wgscatter::master_equation::{extract_rates, integrate_me, map_consistency};
use wgscatter::nm_measures::{
    delta_closed_form, delta_derivative_root, delta_stationary_analysis, negativity_profile,
    MeasureReport, VERDICT_TOL,
};
use wgscatter::one_excitation::{AmplitudeMethod, OneExcitationSolution};
use wgscatter::pipeline::{geometry_label, solve_trajectory, sweep};
use wgscatter::two_excitation::{
    evolve_left_region, solve, steady_state_probabilities, two_photon_norm_residual, SolveOptions,
};
use wgscatter::{Geometry, LatticeSpec, PhysicalConfig};

const OMEGA0: f64 = 20.0;
/// Lattice step used for sweeps and production runs.
const PRODUCTION_DT: f64 = 5e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn infinite(alpha: f64) -> PhysicalConfig {
    PhysicalConfig::resonant(alpha, OMEGA0, Geometry::Infinite)
}

fn semi(alpha: f64, k0a_over_pi: f64) -> PhysicalConfig {
    PhysicalConfig::resonant(
        alpha,
        OMEGA0,
        Geometry::semi_from_phase(k0a_over_pi, OMEGA0).unwrap(),
    )
}

fn lattice(cfg: &PhysicalConfig, dt: f64, t_max: f64) -> LatticeSpec {
    LatticeSpec::for_config(cfg, dt, t_max).unwrap()
}

fn criterion_1() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.5, 2.0, 5.0] {
        let start = Instant::now();
        let cfg = infinite(alpha);
        let tr = solve_trajectory(&cfg, &lattice(&cfg, 1e-3, 10.0)).unwrap();
        let elapsed = start.elapsed();
        let err = tr
            .snapshots
            .iter()
            .map(|s| {
                let f = closed_form_resonant(s.t, alpha, OMEGA0);
                (s.p_g - f.p_g)
                    .abs()
                    .max((s.p_e - f.p_e).abs())
                    .max((s.c - f.c).norm())
            })
            .fold(0.0, f64::max);
        pass &= err <= 1e-3 && elapsed <= Duration::from_secs(60);
        parts.push(format!(
            "alpha={alpha}: {err:.2e} in {:.1}s",
            elapsed.as_secs_f64()
        ));
    }
    Outcome::new(
        pass,
        format!("max |solver - closed form| {}", parts.join(", ")),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let cfg = semi(1.0, 4.0);
    let a = cfg.geometry.mirror_distance().unwrap();
    let lat = lattice(&cfg, 1e-3, 6.0 * a);
    let two = solve(&cfg, &lat, SolveOptions::default()).unwrap();
    let stored = two.left_region_error(6.0 * a).unwrap();
    let marched = evolve_left_region(&cfg, &lat, 6.0 * a, None).unwrap();
    let elapsed = start.elapsed();
    let pass =
        stored <= 1e-4 && marched.max_abs_error <= 1e-4 && elapsed <= Duration::from_secs(300);
    Outcome::new(
        pass,
        format!(
            "x < -a, t <= 6a, dt = {:.3e}: solver {stored:.2e}, marched characteristics {:.2e} ({} lines), {:.1}s",
            lat.dt,
            marched.max_abs_error,
            marched.characteristics,
            elapsed.as_secs_f64()
        ),
    )
}

/// Largest one- and two-excitation norm residuals over the run.
fn residuals(cfg: &PhysicalConfig, dt: f64, t_max: f64) -> (f64, f64) {
    let lat = lattice(cfg, dt, t_max);
    let one = OneExcitationSolution::solve(cfg, &lat, AmplitudeMethod::Exact).unwrap();
    let two = solve(
        cfg,
        &lat,
        SolveOptions {
            keep_history: true,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    let n = lat.n_steps();
    let stride = (n / 100).max(1);
    let r2 = (0..=n)
        .step_by(stride)
        .chain(std::iter::once(n))
        .map(|k| two_photon_norm_residual(&two, k).unwrap().abs())
        .fold(0.0, f64::max);
    (one.max_norm_residual(), r2)
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cfg) in [("infinite", infinite(1.0)), ("semi", semi(1.0, 4.0))] {
        let (o1, t1) = residuals(&cfg, PRODUCTION_DT, 5.0);
        let (o2, t2) = residuals(&cfg, PRODUCTION_DT / 2.0, 5.0);
        for (sector, r1, r2) in [("one", o1, o2), ("two", t1, t2)] {
            let order = (r1 / r2).log2();
            pass &= r1 <= 5e-3 && order >= 1.0;
            parts.push(format!(
                "{name}/{sector} {r1:.2e} -> {r2:.2e} (order {order:.2})"
            ));
        }
    }
    Outcome::new(
        pass,
        format!(
            "norm residual at dt={PRODUCTION_DT:e} -> dt/2: {}",
            parts.join(", ")
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let scan = |alpha: f64| -> Vec<f64> {
        (0..=40_000)
            .map(|k| delta_closed_form(k as f64 * 1e-3, alpha))
            .collect()
    };
    for alpha in [5.01, 6.0, 10.0] {
        let min = scan(alpha).into_iter().fold(f64::INFINITY, f64::min);
        let count = delta_stationary_analysis(alpha).unwrap().count;
        pass &= min >= 0.0 && count == 0;
        parts.push(format!("alpha={alpha}: min {min:.2e}, stationary {count}"));
    }
    for alpha in [0.2, 1.0, 4.9] {
        let d = scan(alpha);
        let negative_minima = (1..d.len() - 1)
            .filter(|&k| d[k] < 0.0 && d[k] <= d[k - 1] && d[k] < d[k + 1])
            .count();
        let s = delta_stationary_analysis(alpha).unwrap();
        let root = delta_derivative_root(alpha);
        let gap = match (s.t_star, root) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        };
        pass &=
            negative_minima == 1 && s.count == 1 && s.delta_min.unwrap_or(0.0) < 0.0 && gap <= 1e-6;
        parts.push(format!(
            "alpha={alpha}: {negative_minima} negative minimum, t*={:.6}, |t*(f=g) - t*(dDelta=0)| {gap:.1e}",
            s.t_star.unwrap_or(f64::NAN)
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let small = {
        let cfg = infinite(1e-2);
        let tr = solve_trajectory(&cfg, &lattice(&cfg, 2e-3, 20.0)).unwrap();
        negativity_profile(&tr).into_iter().fold(0.0, f64::max)
    };
    let small_closed = (0..=20_000)
        .map(|k| -delta_closed_form(k as f64 * 1e-3, 1e-2))
        .fold(0.0, f64::max);
    let alphas: Vec<f64> = (0..=60)
        .map(|k| 10f64.powf(-3.0 + k as f64 * (20f64.log10() + 3.0) / 60.0))
        .collect();
    let mut best = (0.0, 0.0, 0.0);
    for &alpha in &alphas {
        let cfg = infinite(alpha);
        let tr = solve_trajectory(&cfg, &lattice(&cfg, 1e-2, 10.0)).unwrap();
        for (s, n) in tr.snapshots.iter().zip(negativity_profile(&tr)) {
            if n > best.0 {
                best = (n, alpha, s.t);
            }
        }
    }
    let pass = small <= 1e-5 && (0.3..=3.0).contains(&best.1);
    Outcome::new(
        pass,
        format!(
            "alpha=1e-2: max N_Delta {small:.2e} (closed form {small_closed:.2e}, limit 1e-5); grid max {:.3e} at alpha={:.3}, t={:.2}",
            best.0, best.1, best.2
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let cfg = infinite(1.0);
    let tr = solve_trajectory(&cfg, &lattice(&cfg, 1e-3, 10.0)).unwrap();
    let rates = extract_rates(&tr, false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let mut splits = 0;
    for _ in 0..20 {
        let rho0 = QubitState::random(&mut rng);
        let me = integrate_me(&rates, &rho0, Some(&tr)).unwrap();
        worst = worst.max(map_consistency(&me, &rates, &tr, &rho0));
        trace = trace.max(me.max_trace_error());
        splits += usize::from(me.was_split());
    }
    let flagged = rates.singular.iter().filter(|&&s| s).count();
    let elapsed = start.elapsed();
    let pass = worst <= 1e-3 && elapsed <= Duration::from_secs(60);
    Outcome::new(
        pass,
        format!(
            "20 states: max trace distance {worst:.2e}, trace error {trace:.1e}, {flagged} flagged samples, {splits} split runs, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [1e-3, 200.0] {
        let cfg = infinite(alpha);
        let tr = solve_trajectory(&cfg, &lattice(&cfg, 1e-3, 10.0)).unwrap();
        let map_err = tr
            .snapshots
            .iter()
            .map(|s| {
                let p_e = (-s.t).exp();
                let c = Complex64::from_polar((-s.t / 2.0).exp(), -OMEGA0 * s.t);
                s.p_g.abs().max((s.p_e - p_e).abs()).max((s.c - c).norm())
            })
            .fold(0.0, f64::max);
        let rates = extract_rates(&tr, false).unwrap();
        let mut rate_err: f64 = 0.0;
        let mut first_bad = None;
        for (t, r) in rates.regular() {
            let e = r
                .gamma_plus
                .abs()
                .max((r.gamma_minus - 1.0).abs())
                .max(r.gamma_z.abs());
            if e > 5e-2 && first_bad.is_none() {
                first_bad = Some(t);
            }
            rate_err = rate_err.max(e);
        }
        pass &= map_err <= 5e-3 && rate_err <= 5e-2;
        parts.push(format!(
            "alpha={alpha}: map {map_err:.2e}, rates {rate_err:.2e}{}",
            first_bad.map_or(String::new(), |t| format!(
                " (first exceeds 5e-2 at t={t:.3})"
            ))
        ));
    }
    Outcome::new(
        pass,
        format!("deviation from spontaneous emission: {}", parts.join("; ")),
    )
}

const SWEEP_GEOMETRIES: [Option<f64>; 5] = [None, Some(0.5), Some(1.0), Some(2.0), Some(4.0)];

fn sweep_alphas() -> Vec<f64> {
    (0..40)
        .map(|k| 10f64.powf(-3.0 + 4.0 * k as f64 / 39.0))
        .collect()
}

fn run_sweep() -> (Vec<MeasureReport>, Duration) {
    let start = Instant::now();
    let points: Vec<PhysicalConfig> = SWEEP_GEOMETRIES
        .iter()
        .flat_map(|g| {
            sweep_alphas().into_iter().map(move |alpha| match g {
                None => infinite(alpha),
                Some(k) => semi(alpha, *k),
            })
        })
        .collect();
    let reports = sweep(&points, PRODUCTION_DT, 20.0, 0)
        .unwrap()
        .into_iter()
        .map(|r| r.unwrap())
        .collect();
    (reports, start.elapsed())
}

fn criterion_8(reports: &[MeasureReport], elapsed: Duration) -> Outcome {
    let mut violations = 0;
    let mut examples = Vec::new();
    for r in reports {
        let v = r.hierarchy_violations();
        if !v.is_empty() {
            violations += 1;
            if examples.len() < 3 {
                examples.push(format!(
                    "{} alpha={:.3e}: {}",
                    geometry_label(&r.params),
                    r.params.alpha,
                    v.join(", ")
                ));
            }
        }
    }
    let pass = violations == 0 && reports.len() >= 200 && elapsed <= Duration::from_secs(1800);
    Outcome::new(
        pass,
        format!(
            "{} points, {violations} violations{}, {:.0}s",
            reports.len(),
            if examples.is_empty() {
                String::new()
            } else {
                format!(" ({})", examples.join("; "))
            },
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9(reports: &[MeasureReport]) -> Outcome {
    let mut curves: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in reports {
        curves
            .entry(geometry_label(&r.params))
            .or_default()
            .push((r.params.alpha, r.gm));
    }
    let at_smallest = |label: &str| curves[label][0].1;
    let (g4, g05, g1, ginf) = (
        at_smallest("4"),
        at_smallest("0.5"),
        at_smallest("1"),
        at_smallest("inf"),
    );
    let mut pass = g4 > g05 && g4 > g1 && g05 > ginf && g1 > ginf && ginf < 1e-3;
    let mut below = Vec::new();
    for label in ["1", "2", "4"] {
        for (&(alpha, g), &(_, gi)) in curves[label].iter().zip(&curves["inf"]) {
            if alpha <= 1.0 && g <= gi {
                below.push(format!("k0a/pi={label} alpha={alpha:.3e}"));
            }
        }
    }
    pass &= below.is_empty();
    Outcome::new(
        pass,
        format!(
            "alpha=1e-3: gm(4pi)={g4:.3e}, gm(0.5pi)={g05:.3e}, gm(pi)={g1:.3e}, gm(inf)={ginf:.3e}; integer curves not above infinite at alpha<=1: {}",
            if below.is_empty() { "none".to_string() } else { below.join(", ") }
        ),
    )
}

fn criterion_10() -> Outcome {
    let cfg = infinite(1.0);
    let run = |dt: f64| {
        let two = solve(
            &cfg,
            &lattice(&cfg, dt, 15.0),
            SolveOptions {
                keep_history: true,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        steady_state_probabilities(&two, &cfg).unwrap()
    };
    let coarse = run(1e-2);
    let fine = run(5e-3);
    let agree = (coarse.p_rr - fine.p_rr)
        .abs()
        .max((coarse.p_rl - fine.p_rl).abs())
        .max((coarse.p_ll - fine.p_ll).abs())
        .max((coarse.residual_excitation - fine.residual_excitation).abs());
    let residual = fine.sum_rule_residual();
    let pass = residual.abs() <= 5e-3 && agree <= 1e-2;
    Outcome::new(
        pass,
        format!(
            "P_RR={:.5} P_RL={:.5} P_LL={:.5} p_e={:.1e}: sum - 1 = {residual:.2e} (dt=1e-2: {:.2e}), component spread {agree:.2e}",
            fine.p_rr,
            fine.p_rl,
            fine.p_ll,
            fine.residual_excitation,
            coarse.sum_rule_residual()
        ),
    )
}

fn criterion_11() -> Outcome {
    let cfg = infinite(1.0);
    let tr = solve_trajectory(&cfg, &lattice(&cfg, 1e-3, 10.0)).unwrap();
    let worst = tr
        .snapshots
        .iter()
        .min_by(|a, b| a.det_m().total_cmp(&b.det_m()))
        .unwrap();
    let choi = choi_min_eigenvalue(worst);
    let pass = worst.det_m() < -1e-4 && choi >= -CHOI_TOL;
    Outcome::new(
        pass,
        format!(
            "min det M = {:.3e} at t={:.3}, Choi min eigenvalue there {choi:.3e}",
            worst.det_m(),
            worst.t
        ),
    )
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let wanted = |k: u32| only.as_ref().map_or(true, |o| o.contains(&k));
    let start = Instant::now();
    let mut failed = Vec::new();
    let mut report = |k: u32, name: &str, o: Outcome| {
        println!(
            "criterion {k:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(k);
        }
    };
    let simple: [(u32, &str, fn() -> Outcome); 7] = [
        (1, "closed-form reproduction", criterion_1),
        (2, "exact semi-infinite region", criterion_2),
        (3, "unitarity", criterion_3),
        (4, "delta analysis", criterion_4),
        (5, "negativity magnitudes", criterion_5),
        (6, "ME/map consistency", criterion_6),
        (7, "spontaneous-emission limits", criterion_7),
    ];
    for (k, name, f) in simple {
        if wanted(k) {
            report(k, name, f());
        }
    }
    if wanted(8) || wanted(9) {
        let (reports, elapsed) = run_sweep();
        if wanted(8) {
            report(8, "measure hierarchy", criterion_8(&reports, elapsed));
        }
        if wanted(9) {
            report(9, "mirror enhancement", criterion_9(&reports));
        }
    }
    if wanted(10) {
        report(10, "steady-state sum rule", criterion_10());
    }
    if wanted(11) {
        report(11, "negative determinant", criterion_11());
    }
    println!(
        "acceptance: {} failed {:?}, verdict tolerance {VERDICT_TOL:e}, {:.0}s",
        failed.len(),
        failed,
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
