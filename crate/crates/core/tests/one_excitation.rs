//! Integration tests for the one-excitation solvers.

use approx::assert_abs_diff_eq;
use wgscatter::closed_form::closed_form_resonant;
use wgscatter::one_excitation::{AmplitudeMethod, OneExcitationSolution};
use wgscatter::{Geometry, LatticeSpec, PhysicalConfig};

fn semi(alpha: f64, k0a_over_pi: f64) -> PhysicalConfig {
    PhysicalConfig::resonant(
        alpha,
        20.0,
        Geometry::semi_from_phase(k0a_over_pi, 20.0).unwrap(),
    )
}

#[test]
fn infinite_ground_population_matches_closed_form() {
    let cfg = PhysicalConfig::resonant(0.5, 20.0, Geometry::Infinite);
    let lat = LatticeSpec::for_config(&cfg, 1e-2, 10.0).unwrap();
    let one = OneExcitationSolution::solve(&cfg, &lat, AmplitudeMethod::Exact).unwrap();
    for (n, p) in one.p_g.iter().enumerate() {
        assert_abs_diff_eq!(
            *p,
            closed_form_resonant(lat.time(n), 0.5, 20.0).p_g,
            epsilon = 1e-12
        );
    }
    assert_eq!(one.e_of_t.values[0].norm(), 0.0);
    assert!(one.max_norm_residual() < 1e-4);
}

#[test]
fn semi_series_and_integrator_agree() {
    let cfg = semi(1.0, 2.0);
    let lat = LatticeSpec::for_config(&cfg, 5e-3, 6.0).unwrap();
    let exact = OneExcitationSolution::solve(&cfg, &lat, AmplitudeMethod::Exact).unwrap();
    let marched = OneExcitationSolution::solve(&cfg, &lat, AmplitudeMethod::Integrator).unwrap();
    for (a, b) in exact.e_of_t.values.iter().zip(&marched.e_of_t.values) {
        assert!((a - b).norm() < 1e-4, "{a} vs {b}");
    }
    assert!(exact.max_norm_residual() < 1e-4);
}

#[test]
fn field_history_covers_the_lattice() {
    let cfg = PhysicalConfig::resonant(1.0, 20.0, Geometry::Infinite);
    let lat = LatticeSpec::for_config(&cfg, 2e-2, 2.0).unwrap();
    let one = OneExcitationSolution::solve(&cfg, &lat, AmplitudeMethod::Exact).unwrap();
    let h = one.phi_field();
    assert_eq!(h.components.len(), 2);
    assert_eq!(h.components[0].frames.len(), lat.n_steps() + 1);
    let semi_one = OneExcitationSolution::solve(
        &semi(1.0, 1.0),
        &LatticeSpec::for_config(&semi(1.0, 1.0), 2e-2, 2.0).unwrap(),
        AmplitudeMethod::Exact,
    )
    .unwrap();
    assert_eq!(semi_one.phi_field().components.len(), 1);
}

#[test]
fn csv_has_one_row_per_sample() {
    let cfg = PhysicalConfig::resonant(1.0, 20.0, Geometry::Infinite);
    let lat = LatticeSpec::for_config(&cfg, 5e-2, 1.0).unwrap();
    let one = OneExcitationSolution::solve(&cfg, &lat, AmplitudeMethod::Exact).unwrap();
    let mut buf = Vec::new();
    one.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,re_e,im_e,p_g,norm_residual");
    assert_eq!(lines.len(), lat.n_steps() + 2);
    assert!(
        lines[1].starts_with("0.000000000000e0,0.000000000000e0,0.000000000000e0,0.000000000000e0")
    );
}
