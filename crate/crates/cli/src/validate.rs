//! The `validate` command: the invariant suite at test resolution.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgscatter::closed_form::closed_form_resonant;
use wgscatter::dynamical_map::{QubitState, CHOI_TOL};
use wgscatter::master_equation::{extract_rates, integrate_me, map_consistency};
use wgscatter::nm_measures::delta_stationary_analysis;
use wgscatter::one_excitation::{AmplitudeMethod, OneExcitationSolution};
use wgscatter::pipeline::{run_point, solve_trajectory};
use wgscatter::two_excitation::{
    evolve_left_region, solve, two_photon_norm_residual, Fault, SolveOptions,
};
use wgscatter::{Geometry, LatticeSpec, PhysicalConfig, Result};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `measured ≤ limit`.
    fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            limit,
            pass: measured <= limit,
            detail: String::new(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Records a solver error as a failed check.
    fn errored(name: impl Into<String>, e: &wgscatter::Error) -> Self {
        Self {
            name: name.into(),
            measured: f64::NAN,
            limit: f64::NAN,
            pass: false,
            detail: format!("error: {e}"),
        }
    }
}

fn infinite(alpha: f64) -> PhysicalConfig {
    PhysicalConfig::resonant(alpha, 20.0, Geometry::Infinite)
}

fn semi(alpha: f64, k0a_over_pi: f64) -> Result<PhysicalConfig> {
    Ok(PhysicalConfig::resonant(
        alpha,
        20.0,
        Geometry::semi_from_phase(k0a_over_pi, 20.0)?,
    ))
}

fn label(cfg: &PhysicalConfig) -> &'static str {
    match cfg.geometry {
        Geometry::Infinite => "inf",
        Geometry::SemiInfinite { .. } => "semi",
    }
}

fn push(checks: &mut Vec<Check>, name: String, r: Result<Check>) {
    checks.push(r.unwrap_or_else(|e| Check::errored(name, &e)));
}

/// Runs every check; `fault` is injected into the two-excitation solver.
pub fn run_checks(fault: Option<Fault>) -> Vec<Check> {
    let mut checks = Vec::new();
    let configs = match semi(1.0, 4.0) {
        Ok(s) => vec![infinite(1.0), s],
        Err(e) => {
            checks.push(Check::errored("setup", &e));
            vec![infinite(1.0)]
        }
    };
    for cfg in &configs {
        let name = format!("one_excitation_norm[{}]", label(cfg));
        push(&mut checks, name.clone(), one_excitation_norm(cfg, &name));
        let name = format!("two_excitation_norm[{}]", label(cfg));
        push(
            &mut checks,
            name.clone(),
            two_excitation_norm(cfg, fault, &name),
        );
    }
    if let Some(cfg) = configs.get(1) {
        let name = "exact_left_region[semi]".to_string();
        push(&mut checks, name.clone(), exact_region(cfg, fault, &name));
    }
    push(&mut checks, "closed_form[inf]".into(), closed_form());
    push(
        &mut checks,
        "choi_positivity[inf]".into(),
        choi_positivity(),
    );
    push(
        &mut checks,
        "me_map_consistency[inf]".into(),
        me_consistency(),
    );
    push(&mut checks, "measure_hierarchy".into(), hierarchy());
    push(&mut checks, "delta_analysis".into(), delta_analysis());
    checks
}

fn one_excitation_norm(cfg: &PhysicalConfig, name: &str) -> Result<Check> {
    let lat = LatticeSpec::for_config(cfg, 1e-2, 5.0)?;
    let one = OneExcitationSolution::solve(cfg, &lat, AmplitudeMethod::Exact)?;
    Ok(Check::at_most(name, one.max_norm_residual(), 1e-3)
        .with_detail("max |norm residual|, dt 1e-2, t <= 5"))
}

fn two_excitation_norm(cfg: &PhysicalConfig, fault: Option<Fault>, name: &str) -> Result<Check> {
    let lat = LatticeSpec::for_config(cfg, 1e-2, 3.0)?;
    let two = solve(
        cfg,
        &lat,
        SolveOptions {
            keep_history: true,
            fault,
            ..SolveOptions::default()
        },
    )?;
    let mut worst: f64 = 0.0;
    for n in (0..=lat.n_steps()).step_by(10) {
        worst = worst.max(two_photon_norm_residual(&two, n)?.abs());
    }
    Ok(Check::at_most(name, worst, 1e-3).with_detail("max |p_e + |chi|^2 - 1|, dt 1e-2, t <= 3"))
}

fn exact_region(cfg: &PhysicalConfig, fault: Option<Fault>, name: &str) -> Result<Check> {
    let a = cfg.geometry.mirror_distance().unwrap_or(1.0);
    let lat = LatticeSpec::for_config(cfg, a / 32.0, 6.0 * a)?;
    let check = evolve_left_region(cfg, &lat, 6.0 * a, fault)?;
    Ok(
        Check::at_most(name, check.max_abs_error, 1e-4).with_detail(format!(
            "max |psi - phi(x - t) e_sm(t)| for x < -a, t <= 6a, {} characteristics",
            check.characteristics
        )),
    )
}

fn closed_form() -> Result<Check> {
    let cfg = infinite(2.0);
    let tr = solve_trajectory(&cfg, &LatticeSpec::for_config(&cfg, 5e-3, 6.0)?)?;
    let worst = tr
        .snapshots
        .iter()
        .map(|s| {
            let f = closed_form_resonant(s.t, cfg.alpha, cfg.omega0);
            (s.p_g - f.p_g)
                .abs()
                .max((s.p_e - f.p_e).abs())
                .max((s.c - f.c).norm())
        })
        .fold(0.0, f64::max);
    Ok(Check::at_most("closed_form[inf]", worst, 1e-3)
        .with_detail("alpha 2, max error of (p_g, p_e, c), dt 5e-3, t <= 6"))
}

fn choi_positivity() -> Result<Check> {
    let cfg = infinite(1.0);
    let tr = solve_trajectory(&cfg, &LatticeSpec::for_config(&cfg, 1e-2, 10.0)?)?;
    let min = tr
        .choi_min_eigenvalues()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(Check::at_most("choi_positivity[inf]", -min, CHOI_TOL)
        .with_detail(format!("alpha 1, min Choi eigenvalue {min:.3e}")))
}

fn me_consistency() -> Result<Check> {
    let cfg = infinite(1.0);
    let tr = solve_trajectory(&cfg, &LatticeSpec::for_config(&cfg, 1e-3, 10.0)?)?;
    let rates = extract_rates(&tr, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let rho0 = QubitState::random(&mut rng);
        let me = integrate_me(&rates, &rho0, Some(&tr))?;
        worst = worst.max(map_consistency(&me, &rates, &tr, &rho0));
    }
    Ok(Check::at_most("me_map_consistency[inf]", worst, 1e-3)
        .with_detail("alpha 1, dt 1e-3, 5 random states, max trace distance ME vs map"))
}

fn hierarchy() -> Result<Check> {
    let points = [
        infinite(0.1),
        infinite(1.0),
        infinite(3.0),
        semi(0.5, 4.0)?,
        semi(0.5, 1.0)?,
    ];
    let mut violations = Vec::new();
    for cfg in &points {
        let p = run_point(cfg, 1e-2, 10.0)?;
        for v in p.report.hierarchy_violations() {
            violations.push(format!("alpha {} {}: {v}", cfg.alpha, label(cfg)));
        }
    }
    let detail = if violations.is_empty() {
        format!("{} points, no violations", points.len())
    } else {
        violations.join("; ")
    };
    Ok(Check::at_most("measure_hierarchy", violations.len() as f64, 0.0).with_detail(detail))
}

fn delta_analysis() -> Result<Check> {
    let mut wrong = Vec::new();
    for (alpha, expected) in [(0.2, 1), (1.0, 1), (4.9, 1), (6.0, 0), (10.0, 0)] {
        let s = delta_stationary_analysis(alpha)?;
        if s.count != expected || (expected == 1 && !s.delta_min.is_some_and(|d| d < 0.0)) {
            wrong.push(format!("alpha {alpha}: {} negative minima", s.count));
        }
    }
    let detail = if wrong.is_empty() {
        "negative minimum for alpha in {0.2, 1, 4.9}, none for {6, 10}".to_string()
    } else {
        wrong.join("; ")
    };
    Ok(Check::at_most("delta_analysis", wrong.len() as f64, 0.0).with_detail(detail))
}

/// Human-readable report, one line per check.
pub fn report(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "{} {:<28} measured {:.3e}  limit {:.1e}  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.limit,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let _ = writeln!(s, "{} checks, {failed} failed", checks.len());
    s
}
