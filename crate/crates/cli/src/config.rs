//! Run configuration: built-in defaults, then a TOML file, then command-line
//! flags (and the worker-count environment variable), each overriding the
//! previous layer.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use wgscatter::{Geometry, LatticeSpec, PhysicalConfig};

use crate::error::{from_config_check, CliError};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "WGSCATTER_WORKERS";

/// Mirror phases k0a/π swept by default, plus the infinite waveguide.
pub const DEFAULT_GEOMETRIES: [&str; 5] = ["inf", "0.5", "1", "2", "4"];

/// Waveguide geometry as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Inf,
    Semi,
}

/// Every setting; unset values fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Wavepacket bandwidth in units of Γ.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Wavepacket carrier frequency (defaults to ω0).
    #[arg(long)]
    pub k: Option<f64>,
    /// Qubit frequency in units of Γ.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Waveguide geometry.
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryKind>,
    /// Qubit-mirror distance (semi-infinite geometry).
    #[arg(long, conflicts_with = "k0a_over_pi")]
    pub a: Option<f64>,
    /// Mirror distance as the phase k0a/π, with k0 = ω0.
    #[arg(long = "k0a-over-pi")]
    pub k0a_over_pi: Option<f64>,
    /// Time step (equal to the spatial step).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time in units of 1/Γ.
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = available parallelism).
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    /// Explicit α grid, comma separated and strictly increasing.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["alpha_min", "alpha_max", "alpha_points"])]
    pub alphas: Option<Vec<f64>>,
    /// Smallest α of the log-spaced grid.
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// Largest α of the log-spaced grid.
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// Number of log-spaced α values.
    #[arg(long)]
    pub alpha_points: Option<usize>,
    /// Sweep geometries: "inf" or mirror phases k0a/π, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub geometries: Option<Vec<String>>,
}

impl Settings {
    /// Reads a TOML file whose keys are the long flag names with `_` for `-`.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let key = e
                .span()
                .and_then(|span| key_at(text, span.start))
                .unwrap_or_else(|| "config".to_string());
            CliError::config(key, e.message().trim())
        })
    }

    /// `self` with unset values taken from `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        Settings {
            alpha: self.alpha.or(lower.alpha),
            k: self.k.or(lower.k),
            omega0: self.omega0.or(lower.omega0),
            geometry: self.geometry.or(lower.geometry),
            a: self.a.or(lower.a),
            k0a_over_pi: self.k0a_over_pi.or(lower.k0a_over_pi),
            dt: self.dt.or(lower.dt),
            tmax: self.tmax.or(lower.tmax),
            out: self.out.or(lower.out),
            workers: self.workers.or(lower.workers),
            alphas: self.alphas.or(lower.alphas),
            alpha_min: self.alpha_min.or(lower.alpha_min),
            alpha_max: self.alpha_max.or(lower.alpha_max),
            alpha_points: self.alpha_points.or(lower.alpha_points),
            geometries: self.geometries.or(lower.geometries),
        }
    }
}

/// Name of the `key = value` entry on the line containing byte `offset`.
fn key_at(text: &str, offset: usize) -> Option<String> {
    let start = text[..offset.min(text.len())]
        .rfind('\n')
        .map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let key = line.split('=').next()?.trim();
    (!key.is_empty() && !key.starts_with('[')).then(|| key.to_string())
}

/// Subcommand being configured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    NegativityMap,
    SweepAlpha,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::NegativityMap => "negativity-map",
            Mode::SweepAlpha => "sweep-alpha",
            Mode::Validate => "validate",
        }
    }

    fn default_tmax(self) -> f64 {
        match self {
            Mode::SweepAlpha => 20.0,
            _ => 10.0,
        }
    }

    fn default_alpha_range(self) -> (f64, f64) {
        match self {
            Mode::NegativityMap => (1e-3, 20.0),
            _ => (1e-3, 10.0),
        }
    }
}

/// A sweep geometry: the infinite waveguide or a mirror at phase k0a/π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepGeometry {
    Infinite,
    Mirror { k0a_over_pi: f64 },
}

impl SweepGeometry {
    fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Self::Infinite);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Self::Mirror { k0a_over_pi: v }),
            _ => Err(CliError::config(
                "geometries",
                format!("expected \"inf\" or a positive k0a/π, got {s:?}"),
            )),
        }
    }

    pub fn geometry(self, omega0: f64) -> Result<Geometry, CliError> {
        match self {
            Self::Infinite => Ok(Geometry::Infinite),
            Self::Mirror { k0a_over_pi } => {
                Geometry::semi_from_phase(k0a_over_pi, omega0).map_err(from_config_check)
            }
        }
    }
}

/// α grid and geometries of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub geometries: Vec<SweepGeometry>,
}

/// Fully resolved request for one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub mode: Mode,
    pub physical: PhysicalConfig,
    pub lattice: LatticeSpec,
    /// Requested time step; the lattice may refine a defaulted one to divide a.
    pub dt: f64,
    pub tmax: f64,
    pub sweep: Option<SweepSpec>,
    pub output_dir: PathBuf,
    pub workers: usize,
}

/// Default time step in units of 1/Γ.
pub const DEFAULT_DT: f64 = 5e-3;
/// Default number of α values in a sweep or map.
pub const DEFAULT_ALPHA_POINTS: usize = 40;

impl RunRequest {
    /// Resolves `s` for `mode`, filling defaults and checking every key.
    pub fn resolve(mode: Mode, s: Settings) -> Result<Self, CliError> {
        let omega0 = s.omega0.unwrap_or(20.0);
        let alpha = s.alpha.unwrap_or(1.0);
        let geometry = resolve_geometry(&s, omega0)?;
        let physical = PhysicalConfig {
            gamma: 1.0,
            omega0,
            k: s.k.unwrap_or(omega0),
            alpha,
            geometry,
        };
        physical.validate().map_err(from_config_check)?;
        let dt = s.dt.unwrap_or(DEFAULT_DT);
        let dt_explicit = s.dt.is_some();
        let tmax = s.tmax.unwrap_or(mode.default_tmax());
        if dt_explicit {
            check_divides(&physical, dt)?;
        }
        let lattice = LatticeSpec::for_config(&physical, dt, tmax).map_err(from_config_check)?;

        let sweep = match mode {
            Mode::NegativityMap => {
                if physical.geometry != Geometry::Infinite {
                    return Err(CliError::config(
                        "geometry",
                        "the negativity map uses the infinite waveguide",
                    ));
                }
                Some(SweepSpec {
                    alphas: alpha_grid(&s, mode)?,
                    geometries: vec![SweepGeometry::Infinite],
                })
            }
            Mode::SweepAlpha => {
                let geometries = match (&s.geometries, s.geometry) {
                    (Some(list), _) => list
                        .iter()
                        .map(|g| SweepGeometry::parse(g))
                        .collect::<Result<Vec<_>, _>>()?,
                    (None, Some(_)) => vec![single_geometry(&physical)],
                    (None, None) => DEFAULT_GEOMETRIES
                        .iter()
                        .map(|g| SweepGeometry::parse(g))
                        .collect::<Result<Vec<_>, _>>()?,
                };
                if geometries.is_empty() {
                    return Err(CliError::config("geometries", "empty list"));
                }
                for g in &geometries {
                    let cfg = PhysicalConfig {
                        geometry: g.geometry(omega0)?,
                        ..physical
                    };
                    if dt_explicit {
                        check_divides(&cfg, dt)?;
                    }
                }
                Some(SweepSpec {
                    alphas: alpha_grid(&s, mode)?,
                    geometries,
                })
            }
            Mode::Simulate | Mode::Validate => None,
        };
        let output_dir = s
            .out
            .unwrap_or_else(|| PathBuf::from(format!("wgscatter-{}", mode.name())));
        Ok(Self {
            mode,
            physical,
            lattice,
            dt,
            tmax,
            sweep,
            output_dir,
            workers: s.workers.unwrap_or(0),
        })
    }

    /// Every (geometry, α) point of the sweep, geometry-major.
    pub fn sweep_points(&self) -> Result<Vec<PhysicalConfig>, CliError> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![self.physical]);
        };
        let mut points = Vec::with_capacity(sweep.alphas.len() * sweep.geometries.len());
        for g in &sweep.geometries {
            let geometry = g.geometry(self.physical.omega0)?;
            for &alpha in &sweep.alphas {
                points.push(PhysicalConfig {
                    alpha,
                    geometry,
                    ..self.physical
                });
            }
        }
        Ok(points)
    }
}

fn resolve_geometry(s: &Settings, omega0: f64) -> Result<Geometry, CliError> {
    let mirror_given = s.a.is_some() || s.k0a_over_pi.is_some();
    let kind = s.geometry.unwrap_or(if mirror_given {
        GeometryKind::Semi
    } else {
        GeometryKind::Inf
    });
    match kind {
        GeometryKind::Inf => {
            if mirror_given {
                return Err(CliError::config(
                    if s.a.is_some() { "a" } else { "k0a_over_pi" },
                    "a mirror distance needs geometry = semi",
                ));
            }
            Ok(Geometry::Infinite)
        }
        GeometryKind::Semi => match (s.a, s.k0a_over_pi) {
            (Some(_), Some(_)) => Err(CliError::config(
                "a",
                "give either a or k0a_over_pi, not both",
            )),
            (Some(a), None) => {
                let g = Geometry::SemiInfinite { a };
                PhysicalConfig {
                    geometry: g,
                    ..PhysicalConfig::default()
                }
                .validate()
                .map_err(from_config_check)?;
                Ok(g)
            }
            (None, Some(p)) => Geometry::semi_from_phase(p, omega0)
                .map_err(|e| CliError::config("k0a_over_pi", e.to_string())),
            (None, None) => Err(CliError::config(
                "a",
                "the semi-infinite geometry needs a or k0a_over_pi",
            )),
        },
    }
}

fn single_geometry(cfg: &PhysicalConfig) -> SweepGeometry {
    match cfg.geometry {
        Geometry::Infinite => SweepGeometry::Infinite,
        Geometry::SemiInfinite { a } => SweepGeometry::Mirror {
            k0a_over_pi: a * cfg.omega0 / std::f64::consts::PI,
        },
    }
}

/// An explicit dt must put the mirror on a lattice site.
fn check_divides(cfg: &PhysicalConfig, dt: f64) -> Result<(), CliError> {
    if let Geometry::SemiInfinite { a } = cfg.geometry {
        let m = a / dt;
        if !(m >= 1.0 - 1e-9 && (m - m.round()).abs() <= 1e-6 * m.max(1.0)) {
            return Err(CliError::config(
                "dt",
                format!("dt = {dt} does not divide the mirror distance a = {a}"),
            ));
        }
    }
    Ok(())
}

fn alpha_grid(s: &Settings, mode: Mode) -> Result<Vec<f64>, CliError> {
    let alphas = match &s.alphas {
        Some(list) => list.clone(),
        None => {
            let (lo_default, hi_default) = mode.default_alpha_range();
            let lo = s.alpha_min.unwrap_or(lo_default);
            let hi = s.alpha_max.unwrap_or(hi_default);
            let n = s.alpha_points.unwrap_or(DEFAULT_ALPHA_POINTS);
            if !(lo > 0.0 && lo.is_finite()) {
                return Err(CliError::config("alpha_min", "must be positive"));
            }
            if !(hi > lo && hi.is_finite()) {
                return Err(CliError::config("alpha_max", "must exceed alpha_min"));
            }
            if n < 2 {
                return Err(CliError::config("alpha_points", "need at least 2"));
            }
            let step = (hi / lo).ln() / (n - 1) as f64;
            (0..n).map(|i| lo * (step * i as f64).exp()).collect()
        }
    };
    if alphas.is_empty() {
        return Err(CliError::config("alphas", "empty grid"));
    }
    if alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(CliError::config("alphas", "values must be positive"));
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::config(
            "alphas",
            "grid must be strictly increasing",
        ));
    }
    Ok(alphas)
}
