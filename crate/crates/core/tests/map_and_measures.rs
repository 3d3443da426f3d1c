//! Dynamical map, master equation and measures on solver-built trajectories.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgscatter::closed_form::closed_form_resonant;
use wgscatter::dynamical_map::{apply_map, MapTrajectory, QubitState, CHOI_TOL};
use wgscatter::master_equation::{extract_rates, integrate_me, map_consistency};
use wgscatter::nm_measures::{
    blp_measure, emission_trajectory, gm_measure, negativity_profile, MeasureReport,
    DEFAULT_BLP_ANGLES,
};
use wgscatter::pipeline::{run_point, solve_trajectory};
use wgscatter::{Geometry, LatticeSpec, PhysicalConfig};

fn solved(cfg: &PhysicalConfig, dt: f64, t_max: f64) -> MapTrajectory {
    let lat = LatticeSpec::for_config(cfg, dt, t_max).unwrap();
    solve_trajectory(cfg, &lat).unwrap()
}

#[test]
fn solver_map_matches_closed_form_and_is_cp() {
    let cfg = PhysicalConfig::resonant(1.0, 20.0, Geometry::Infinite);
    let tr = solved(&cfg, 5e-3, 10.0);
    for s in &tr.snapshots {
        let f = closed_form_resonant(s.t, 1.0, 20.0);
        assert!((s.p_g - f.p_g).abs() < 1e-5);
        assert!((s.p_e - f.p_e).abs() < 1e-4);
        assert!((s.c - f.c).norm() < 1e-4);
    }
    assert!(tr.choi_min_eigenvalues().iter().all(|&e| e >= -CHOI_TOL));
}

#[test]
fn semi_map_is_cp_and_valid() {
    let cfg = PhysicalConfig::resonant(0.5, 20.0, Geometry::semi_from_phase(2.0, 20.0).unwrap());
    let tr = solved(&cfg, 1e-2, 8.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in &tr.snapshots {
        s.validate(1e-4).unwrap();
        let rho = apply_map(&s.clamped(), &QubitState::random(&mut rng)).unwrap();
        assert!(rho.bloch().norm() <= 1.0 + 1e-6);
    }
    assert!(tr.choi_min_eigenvalues().iter().all(|&e| e >= -1e-4));
}

#[test]
fn me_reproduces_solver_map() {
    let cfg = PhysicalConfig::resonant(1.0, 20.0, Geometry::Infinite);
    let tr = solved(&cfg, 2e-3, 10.0);
    let rates = extract_rates(&tr, false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let rho0 = QubitState::random(&mut rng);
        let me = integrate_me(&rates, &rho0, Some(&tr)).unwrap();
        assert!(me.max_trace_error() < 1e-10);
        assert!(map_consistency(&me, &rates, &tr, &rho0) < 1e-3);
    }
}

#[test]
fn sampled_and_analytic_rates_agree() {
    let cfg = PhysicalConfig::resonant(2.0, 20.0, Geometry::Infinite);
    let tr = solved(&cfg, 2e-3, 4.0);
    let exact = MapTrajectory::closed_form(2.0, 20.0, 2e-3, 4.0).unwrap();
    let a = extract_rates(&exact, true).unwrap();
    let b = extract_rates(&tr, false).unwrap();
    for k in (0..a.len()).filter(|&k| exact.snapshots[k].delta().abs() > 0.05) {
        let (x, y) = (&a.rates[k], &b.rates[k]);
        assert!((x.gamma_plus - y.gamma_plus).abs() < 1e-2, "k = {k}");
        assert!((x.gamma_minus - y.gamma_minus).abs() < 1e-2, "k = {k}");
        assert!((x.gamma_z - y.gamma_z).abs() < 1e-2, "k = {k}");
        assert!((x.s - y.s).abs() < 1e-2, "k = {k}");
    }
}

#[test]
fn rate_negativity_accompanies_divisibility_breaking() {
    for alpha in [0.3, 1.0, 3.0] {
        let cfg = PhysicalConfig::resonant(alpha, 20.0, Geometry::Infinite);
        let p = run_point(&cfg, 5e-3, 10.0).unwrap();
        assert!(p.report.p_broken);
        let min_rate = p
            .rates
            .regular()
            .map(|(_, r)| r.gamma_plus.min(r.gamma_minus))
            .fold(f64::INFINITY, f64::min);
        assert!(min_rate < 0.0);
        assert!(p.report.hierarchy_violations().is_empty());
    }
}

#[test]
fn large_alpha_keeps_delta_nonnegative() {
    let cfg = PhysicalConfig::resonant(10.0, 20.0, Geometry::Infinite);
    let tr = solved(&cfg, 5e-3, 10.0);
    assert!(negativity_profile(&tr).iter().all(|&n| n < 1e-6));
}

#[test]
fn negative_determinant_with_positive_choi() {
    let cfg = PhysicalConfig::resonant(1.0, 20.0, Geometry::Infinite);
    let tr = solved(&cfg, 5e-3, 10.0);
    let worst = tr
        .snapshots
        .iter()
        .min_by(|a, b| a.det_m().total_cmp(&b.det_m()))
        .unwrap();
    assert!(worst.det_m() < -1e-4);
    assert!(wgscatter::dynamical_map::choi_min_eigenvalue(worst) >= -CHOI_TOL);
}

#[test]
fn gm_stable_under_refinement() {
    let cfg = PhysicalConfig::resonant(1.0, 20.0, Geometry::Infinite);
    let coarse = gm_measure(&solved(&cfg, 1e-2, 10.0));
    let fine = gm_measure(&solved(&cfg, 5e-3, 10.0));
    assert!(((coarse - fine) / fine).abs() <= 0.02, "{coarse} vs {fine}");
}

#[test]
fn mirror_gm_approaches_emission_gm() {
    let cfg = PhysicalConfig::resonant(1e-3, 20.0, Geometry::semi_from_phase(4.0, 20.0).unwrap());
    let p = run_point(&cfg, 5e-3, 20.0).unwrap();
    let e = emission_trajectory(&cfg, p.lattice.dt, p.lattice.t_max).unwrap();
    let (gm, want) = (p.report.gm, gm_measure(&e));
    assert!(((gm - want) / want).abs() <= 5e-2, "{gm} vs {want}");
}

#[test]
fn report_fields_consistent() {
    let cfg = PhysicalConfig::resonant(0.8, 20.0, Geometry::Infinite);
    let tr = solved(&cfg, 1e-2, 10.0);
    let rates = extract_rates(&tr, false).unwrap();
    let r = MeasureReport::build(cfg, &tr, &rates, DEFAULT_BLP_ANGLES).unwrap();
    assert_eq!(r.gm, gm_measure(&tr));
    assert_eq!(r.blp, blp_measure(&tr, DEFAULT_BLP_ANGLES).unwrap());
    assert!(r.gm >= 0.0 && r.blp >= 0.0);
    assert_eq!(r.n_delta_profile.len(), tr.len());
}
