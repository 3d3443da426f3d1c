//! End-to-end runs: solve both scattering processes, build the map, extract
//! rates and evaluate the measures, for one point or a parallel sweep.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::config::{Geometry, LatticeSpec, PhysicalConfig};
use crate::dynamical_map::{build_trajectory, MapTrajectory};
use crate::error::{Error, Result};
use crate::master_equation::{extract_rates, RateTrajectory};
use crate::nm_measures::{MeasureReport, DEFAULT_BLP_ANGLES};
use crate::one_excitation::{AmplitudeMethod, OneExcitationSolution};
use crate::two_excitation::{self, SolveOptions};

/// Everything computed for one parameter point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub lattice: LatticeSpec,
    pub trajectory: MapTrajectory,
    pub rates: RateTrajectory,
    pub report: MeasureReport,
}

/// Map trajectory from the lattice solvers.
pub fn solve_trajectory(cfg: &PhysicalConfig, lattice: &LatticeSpec) -> Result<MapTrajectory> {
    let one = OneExcitationSolution::solve(cfg, lattice, AmplitudeMethod::Exact)?;
    let two = two_excitation::solve(
        cfg,
        lattice,
        SolveOptions {
            overlap_with: Some(&one),
            ..SolveOptions::default()
        },
    )?;
    build_trajectory(&one, &two)
}

/// Solves one point and evaluates its measures.
pub fn run_point(cfg: &PhysicalConfig, dt: f64, t_max: f64) -> Result<PointResult> {
    let lattice = LatticeSpec::for_config(cfg, dt, t_max)?;
    let trajectory = solve_trajectory(cfg, &lattice)?;
    let rates = extract_rates(&trajectory, false)?;
    let report = MeasureReport::build(*cfg, &trajectory, &rates, DEFAULT_BLP_ANGLES)?;
    Ok(PointResult {
        lattice,
        trajectory,
        rates,
        report,
    })
}

/// Applies `f` to every point on a pool of `workers` threads
/// (0 = available parallelism). Results keep the input order.
pub fn run_parallel<T, F>(points: &[PhysicalConfig], workers: usize, f: F) -> Result<Vec<Result<T>>>
where
    T: Send,
    F: Fn(&PhysicalConfig) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter {
            name: "workers",
            reason: e.to_string(),
        })?;
    Ok(pool.install(|| points.par_iter().map(&f).collect()))
}

/// Measure reports for `points`, solved in parallel.
pub fn sweep(
    points: &[PhysicalConfig],
    dt: f64,
    t_max: f64,
    workers: usize,
) -> Result<Vec<Result<MeasureReport>>> {
    run_parallel(points, workers, |cfg| {
        run_point(cfg, dt, t_max).map(|r| r.report)
    })
}

/// k0a/π for the mirror geometry, or "inf".
pub fn geometry_label(cfg: &PhysicalConfig) -> String {
    match cfg.geometry {
        Geometry::Infinite => "inf".to_string(),
        Geometry::SemiInfinite { a } => {
            format!("{}", round_label(a * cfg.omega0 / std::f64::consts::PI))
        }
    }
}

fn round_label(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Sweep CSV with columns alpha, k0a_over_pi, gm, blp, max_n_delta,
/// cp_broken, p_broken.
pub fn write_sweep_csv<W: Write>(mut w: W, reports: &[MeasureReport]) -> io::Result<()> {
    writeln!(w, "alpha,k0a_over_pi,gm,blp,max_n_delta,cp_broken,p_broken")?;
    for r in reports {
        writeln!(
            w,
            "{:.12e},{},{:.12e},{:.12e},{:.12e},{},{}",
            r.params.alpha,
            geometry_label(&r.params),
            r.gm,
            r.blp,
            r.max_n_delta(),
            r.cp_broken,
            r.p_broken
        )?;
    }
    Ok(())
}
