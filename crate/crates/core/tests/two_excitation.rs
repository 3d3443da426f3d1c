//! Integration tests for the two-excitation solvers.

use num_complex::Complex64;
use wgscatter::closed_form::closed_form_resonant;
use wgscatter::one_excitation::{AmplitudeMethod, OneExcitationSolution};
use wgscatter::two_excitation::{
    evolve_left_region, overlap_c, solve, steady_state_probabilities, two_photon_norm_residual,
    Fault, SolveOptions,
};
use wgscatter::{Geometry, LatticeSpec, PhysicalConfig};

fn infinite(alpha: f64) -> PhysicalConfig {
    PhysicalConfig::resonant(alpha, 20.0, Geometry::Infinite)
}

fn semi(alpha: f64, k0a_over_pi: f64) -> PhysicalConfig {
    PhysicalConfig::resonant(
        alpha,
        20.0,
        Geometry::semi_from_phase(k0a_over_pi, 20.0).unwrap(),
    )
}

fn max_residual(cfg: &PhysicalConfig, dt: f64, t_max: f64, fault: Option<Fault>) -> f64 {
    let lat = LatticeSpec::for_config(cfg, dt, t_max).unwrap();
    let two = solve(
        cfg,
        &lat,
        SolveOptions {
            keep_history: true,
            fault,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    (0..=lat.n_steps())
        .step_by(10)
        .map(|n| two_photon_norm_residual(&two, n).unwrap().abs())
        .fold(0.0, f64::max)
}

#[test]
fn infinite_matches_closed_form() {
    let cfg = infinite(2.0);
    let lat = LatticeSpec::for_config(&cfg, 5e-3, 6.0).unwrap();
    let one = OneExcitationSolution::solve(&cfg, &lat, AmplitudeMethod::Exact).unwrap();
    let two = solve(
        &cfg,
        &lat,
        SolveOptions {
            overlap_with: Some(&one),
            ..SolveOptions::default()
        },
    )
    .unwrap();
    let c = two.c.as_ref().unwrap();
    for n in 0..=lat.n_steps() {
        let f = closed_form_resonant(lat.time(n), 2.0, 20.0);
        assert!((two.p_e[n] - f.p_e).abs() < 1e-4, "p_e at n = {n}");
        assert!((c.values[n] - f.c).norm() < 1e-4, "c at n = {n}");
    }
}

#[test]
fn stored_history_overlap_converges_to_running_overlap() {
    let cfg = semi(1.0, 2.0);
    let gap = |dt: f64| {
        let lat = LatticeSpec::for_config(&cfg, dt, 3.0).unwrap();
        let one = OneExcitationSolution::solve(&cfg, &lat, AmplitudeMethod::Exact).unwrap();
        let running = solve(
            &cfg,
            &lat,
            SolveOptions {
                overlap_with: Some(&one),
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let stored = solve(
            &cfg,
            &lat,
            SolveOptions {
                keep_history: true,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let a = overlap_c(&one, &running).unwrap();
        let b = overlap_c(&one, &stored).unwrap();
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (gap(1e-2), gap(5e-3));
    assert!(coarse < 5e-3, "{coarse}");
    assert!(coarse / fine > 1.8, "{coarse} -> {fine}");
}

#[test]
fn unitarity_both_geometries_second_order() {
    for cfg in [infinite(1.0), semi(1.0, 4.0), semi(1.0, 0.5)] {
        let coarse = max_residual(&cfg, 1e-2, 3.0, None);
        let fine = max_residual(&cfg, 5e-3, 3.0, None);
        assert!(coarse < 1e-4, "{cfg:?}: {coarse}");
        assert!(coarse / fine > 3.5, "{cfg:?}: {coarse} -> {fine}");
    }
}

#[test]
fn skipped_mirror_delay_breaks_unitarity() {
    let cfg = semi(1.0, 4.0);
    let good = max_residual(&cfg, 1e-2, 3.0, None);
    let bad = max_residual(&cfg, 1e-2, 3.0, Some(Fault::SkipMirrorDelay));
    assert!(bad > 10.0 * good && bad > 1e-2, "{good} vs {bad}");
}

#[test]
fn left_region_is_exact() {
    let cfg = semi(1.0, 4.0);
    let a = cfg.geometry.mirror_distance().unwrap();
    let lat = LatticeSpec::for_config(&cfg, a / 64.0, 6.0 * a).unwrap();
    let check = evolve_left_region(&cfg, &lat, 6.0 * a, None).unwrap();
    assert!(check.max_abs_error < 1e-4, "{check:?}");
    assert!(check.characteristics > 0);
    let two = solve(&cfg, &lat, SolveOptions::default()).unwrap();
    assert!(two.left_region_error(6.0 * a).unwrap() < 1e-12);
    let faulty = evolve_left_region(&cfg, &lat, 6.0 * a, Some(Fault::SkipMirrorDelay)).unwrap();
    assert!(faulty.max_abs_error > 1e-2);
}

#[test]
fn sum_rule_after_decay() {
    let cfg = infinite(1.0);
    let lat = LatticeSpec::for_config(&cfg, 1e-2, 15.0).unwrap();
    let two = solve(
        &cfg,
        &lat,
        SolveOptions {
            keep_history: true,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    let p = steady_state_probabilities(&two, &cfg).unwrap();
    assert!(p.sum_rule_residual().abs() < 1e-4, "{p:?}");
    assert!(p.p_rr > 0.0 && p.p_rl > 0.0 && p.p_ll > 0.0);
}

#[test]
fn early_stop_reports_insufficient_decay() {
    let cfg = infinite(1.0);
    let lat = LatticeSpec::for_config(&cfg, 2e-2, 2.0).unwrap();
    let two = solve(
        &cfg,
        &lat,
        SolveOptions {
            keep_history: true,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert!(steady_state_probabilities(&two, &cfg).is_err());
}

#[test]
fn excited_population_starts_at_one() {
    for cfg in [infinite(0.5), semi(0.5, 1.0)] {
        let lat = LatticeSpec::for_config(&cfg, 1e-2, 1.0).unwrap();
        let one = OneExcitationSolution::solve(&cfg, &lat, AmplitudeMethod::Exact).unwrap();
        let two = solve(
            &cfg,
            &lat,
            SolveOptions {
                overlap_with: Some(&one),
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert!((two.p_e[0] - 1.0).abs() < 1e-6);
        assert!((two.c.unwrap().values[0] - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        assert!(two.p_e.iter().all(|&p| (-1e-6..=1.0 + 1e-6).contains(&p)));
    }
}

#[test]
fn csv_reports_sampled_residuals() {
    let cfg = infinite(1.0);
    let lat = LatticeSpec::for_config(&cfg, 5e-2, 1.0).unwrap();
    let two = solve(
        &cfg,
        &lat,
        SolveOptions {
            keep_history: true,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    let mut buf = Vec::new();
    two.write_csv(&mut buf, 5).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(text.lines().next(), Some("t,p_e,re_c,im_c,norm_residual"));
    assert_eq!(rows.len(), lat.n_steps() + 1);
    for (n, r) in rows.iter().enumerate() {
        assert_eq!(r[2], "NaN");
        let sampled = n % 5 == 0 || n == lat.n_steps();
        assert_eq!(r[4] != "NaN", sampled, "row {n}");
    }
}
