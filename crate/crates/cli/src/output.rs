//! Output directory handling, gnuplot scripts and the metadata sidecar.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use wgscatter::pipeline::geometry_label;
use wgscatter::{Geometry, PhysicalConfig};

use crate::config::{RunRequest, SweepGeometry};
use crate::error::CliError;

/// Name of the metadata sidecar written next to the data files.
pub const METADATA_FILE: &str = "metadata.toml";

/// Output directory that records the files written into it.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    /// Creates `root` if needed and checks that it accepts files.
    pub fn create(root: &Path) -> Result<Self, CliError> {
        let unusable =
            |e: std::io::Error| CliError::config("out", format!("{}: {e}", root.display()));
        fs::create_dir_all(root).map_err(unusable)?;
        let probe = root.join(".wgscatter-write-check");
        File::create(&probe).map_err(unusable)?;
        fs::remove_file(&probe).map_err(unusable)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `name` through `fill`.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.path(name);
        let io = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        fill(&mut w).and_then(|_| w.flush()).map_err(io)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write(name, |w| w.write_all(text.as_bytes()))
    }

    /// Writes the metadata sidecar listing every file written so far.
    pub fn finish(mut self, req: &RunRequest, wall_seconds: f64) -> Result<(), CliError> {
        let meta = Metadata::new(req, wall_seconds, self.written.clone());
        let text = toml::to_string(&meta).expect("metadata serializes");
        self.write_text(METADATA_FILE, &text)
    }
}

#[derive(Serialize)]
struct Metadata {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    created_unix_seconds: u64,
    wall_seconds: f64,
    workers: usize,
    files: Vec<String>,
    physical: PhysicalMeta,
    lattice: LatticeMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepMeta>,
}

#[derive(Serialize)]
struct PhysicalMeta {
    gamma: f64,
    omega0: f64,
    k: f64,
    alpha: f64,
    geometry: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k0a_over_pi: Option<f64>,
}

#[derive(Serialize)]
struct LatticeMeta {
    dt_requested: f64,
    dt: f64,
    tmax: f64,
    x_min: f64,
    x_max: f64,
}

#[derive(Serialize)]
struct SweepMeta {
    alphas: Vec<f64>,
    geometries: Vec<String>,
}

impl Metadata {
    fn new(req: &RunRequest, wall_seconds: f64, files: Vec<String>) -> Self {
        let p = &req.physical;
        let a = p.geometry.mirror_distance();
        Self {
            tool: "wgscatter",
            version: env!("CARGO_PKG_VERSION"),
            command: req.mode.name(),
            created_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_seconds,
            workers: req.workers,
            files,
            physical: PhysicalMeta {
                gamma: p.gamma,
                omega0: p.omega0,
                k: p.k,
                alpha: p.alpha,
                geometry: match p.geometry {
                    Geometry::Infinite => "inf",
                    Geometry::SemiInfinite { .. } => "semi",
                },
                a,
                k0a_over_pi: a.map(|a| a * p.omega0 / std::f64::consts::PI),
            },
            lattice: LatticeMeta {
                dt_requested: req.dt,
                dt: req.lattice.dt,
                tmax: req.lattice.t_max,
                x_min: req.lattice.x_min,
                x_max: req.lattice.x_max,
            },
            sweep: req.sweep.as_ref().map(|s| SweepMeta {
                alphas: s.alphas.clone(),
                geometries: s
                    .geometries
                    .iter()
                    .map(|g| match g {
                        SweepGeometry::Infinite => "inf".to_string(),
                        SweepGeometry::Mirror { k0a_over_pi } => format!("{k0a_over_pi}"),
                    })
                    .collect(),
            }),
        }
    }
}

const GNUPLOT_PREAMBLE: &str = "set datafile separator ','\nset key autotitle columnhead\n";

/// Population, Δ and rate panels for `simulate`.
pub fn simulate_script() -> String {
    format!(
        "{GNUPLOT_PREAMBLE}set terminal pngcairo size 900,900
set output 'simulate.png'
set multiplot layout 2,1
set xlabel 't Γ'
set ylabel 'population'
plot 'trajectory.csv' using 1:2 with lines title 'p_g', \\
     '' using 1:3 with lines title 'p_e', \\
     '' using 1:6 with lines title 'Δ'
set ylabel 'rate / Γ'
plot 'rates.csv' using 1:($6 == 0 ? $2 : NaN) with lines title 'γ+', \\
     '' using 1:($6 == 0 ? $3 : NaN) with lines title 'γ-', \\
     '' using 1:($6 == 0 ? $4 : NaN) with lines title 'γz', \\
     '' using 1:($6 == 0 ? $5 : NaN) with lines title 'S'
unset multiplot
"
    )
}

/// Heat map of N_Δ over (t, log10 α).
pub fn negativity_map_script() -> String {
    format!(
        "{GNUPLOT_PREAMBLE}set terminal pngcairo size 900,700
set output 'negativity_map.png'
set xlabel 't Γ'
set ylabel 'log10 α'
set cblabel 'N_Δ'
set view map
plot 'negativity_map.csv' using 2:(log10($1)):3 with image notitle
"
    )
}

/// GM and BLP against α, one curve per geometry, on a log α axis.
pub fn sweep_script(points: &[PhysicalConfig]) -> String {
    let mut labels: Vec<String> = Vec::new();
    for p in points {
        let l = geometry_label(p);
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    let labels = labels.join(" ");
    format!(
        "{GNUPLOT_PREAMBLE}set terminal pngcairo size 900,900
set output 'sweep.png'
set multiplot layout 2,1
set logscale x
set xlabel 'α'
set ylabel 'geometric measure'
plot for [g in \"{labels}\"] 'sweep.csv' using 1:(strcol(2) eq g ? $3 : NaN) with linespoints title g
set ylabel 'BLP measure'
plot for [g in \"{labels}\"] 'sweep.csv' using 1:(strcol(2) eq g ? $4 : NaN) with linespoints title g
unset multiplot
"
    )
}
