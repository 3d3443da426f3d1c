//! The `simulate`, `negativity-map` and `sweep-alpha` commands.

use std::io::Write;
use std::time::Instant;

use wgscatter::dynamical_map::build_trajectory;
use wgscatter::master_equation::extract_rates;
use wgscatter::nm_measures::{negativity_profile, MeasureReport, DEFAULT_BLP_ANGLES};
use wgscatter::one_excitation::{AmplitudeMethod, OneExcitationSolution};
use wgscatter::pipeline::{geometry_label, run_parallel, solve_trajectory, sweep, write_sweep_csv};
use wgscatter::two_excitation::{self, SolveOptions};
use wgscatter::LatticeSpec;

use crate::config::RunRequest;
use crate::error::CliError;
use crate::output::{negativity_map_script, simulate_script, sweep_script, OutputDir};

/// Two-photon norm residuals evaluated per run (each is a full χ quadrature).
const RESIDUAL_ROWS: usize = 50;

/// Solves one point and writes the per-process, map, rate and measure files.
pub fn simulate(req: &RunRequest) -> Result<(), CliError> {
    let start = Instant::now();
    let mut out = OutputDir::create(&req.output_dir)?;
    let cfg = &req.physical;
    let lattice = &req.lattice;
    let one = OneExcitationSolution::solve(cfg, lattice, AmplitudeMethod::Exact)?;
    let two = two_excitation::solve(
        cfg,
        lattice,
        SolveOptions {
            keep_history: true,
            overlap_with: Some(&one),
            ..SolveOptions::default()
        },
    )?;
    let trajectory = build_trajectory(&one, &two)?;
    let rates = extract_rates(&trajectory, false)?;
    let report = MeasureReport::build(*cfg, &trajectory, &rates, DEFAULT_BLP_ANGLES)?;

    out.write("one_excitation.csv", |w| one.write_csv(w))?;
    let stride = (lattice.n_steps() / RESIDUAL_ROWS).max(1);
    out.write("two_excitation.csv", |w| two.write_csv(w, stride))?;
    out.write("trajectory.csv", |w| trajectory.write_csv(w))?;
    out.write("rates.csv", |w| rates.write_csv(w))?;
    out.write("measures.csv", |w| {
        write_sweep_csv(w, std::slice::from_ref(&report))
    })?;
    out.write_text("simulate.gp", &simulate_script())?;
    let min_delta = trajectory
        .snapshots
        .iter()
        .map(|s| s.delta())
        .fold(f64::INFINITY, f64::min);
    println!(
        "alpha {} geometry {}: gm {:.6e}, blp {:.6e}, min delta {:.6e}, cp_broken {}, p_broken {}",
        cfg.alpha,
        geometry_label(cfg),
        report.gm,
        report.blp,
        min_delta,
        report.cp_broken,
        report.p_broken
    );
    if !report.notes.is_empty() {
        println!("notes: {}", report.notes);
    }
    out.finish(req, start.elapsed().as_secs_f64())
}

/// N_Δ(α, t) over the α grid, infinite waveguide.
pub fn negativity_map(req: &RunRequest) -> Result<(), CliError> {
    let start = Instant::now();
    let mut out = OutputDir::create(&req.output_dir)?;
    let points = req.sweep_points()?;
    let (dt, tmax) = (req.dt, req.tmax);
    let profiles = run_parallel(&points, req.workers, |cfg| {
        let lattice = LatticeSpec::for_config(cfg, dt, tmax)?;
        let tr = solve_trajectory(cfg, &lattice)?;
        let times: Vec<f64> = tr.snapshots.iter().map(|s| s.t).collect();
        Ok((times, negativity_profile(&tr)))
    })?;
    let mut failed = 0;
    out.write("negativity_map.csv", |w| {
        writeln!(w, "alpha,t,n_delta")?;
        for (cfg, result) in points.iter().zip(&profiles) {
            match result {
                Ok((times, n)) => {
                    for (t, v) in times.iter().zip(n) {
                        writeln!(w, "{:.12e},{:.12e},{:.12e}", cfg.alpha, t, v)?;
                    }
                }
                Err(e) => {
                    eprintln!("alpha {}: {e}", cfg.alpha);
                    failed += 1;
                }
            }
        }
        Ok(())
    })?;
    out.write_text("negativity_map.gp", &negativity_map_script())?;
    let mut peak = (0.0, 0.0, 0.0);
    for (cfg, (times, n)) in points
        .iter()
        .zip(&profiles)
        .filter_map(|(c, r)| Some((c, r.as_ref().ok()?)))
    {
        for (&t, &v) in times.iter().zip(n) {
            if v > peak.0 {
                peak = (v, cfg.alpha, t);
            }
        }
    }
    println!(
        "max n_delta {:.6e} at alpha {} t {:.4}",
        peak.0, peak.1, peak.2
    );
    out.finish(req, start.elapsed().as_secs_f64())?;
    finish_points(failed, points.len())
}

/// Measure reports for every (geometry, α) point.
pub fn sweep_alpha(req: &RunRequest) -> Result<(), CliError> {
    let start = Instant::now();
    let mut out = OutputDir::create(&req.output_dir)?;
    let points = req.sweep_points()?;
    let results = sweep(&points, req.dt, req.tmax, req.workers)?;
    let mut reports = Vec::with_capacity(results.len());
    for (cfg, r) in points.iter().zip(results) {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => eprintln!("alpha {} geometry {}: {e}", cfg.alpha, geometry_label(cfg)),
        }
    }
    let failed = points.len() - reports.len();
    out.write("sweep.csv", |w| write_sweep_csv(w, &reports))?;
    out.write_text("sweep.gp", &sweep_script(&points))?;
    let violations: usize = reports.iter().map(|r| r.hierarchy_violations().len()).sum();
    println!(
        "{} points, {failed} failed, {violations} hierarchy violations",
        points.len()
    );
    out.finish(req, start.elapsed().as_secs_f64())?;
    finish_points(failed, points.len())
}

fn finish_points(failed: usize, total: usize) -> Result<(), CliError> {
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::PointsFailed { failed, total })
    }
}
