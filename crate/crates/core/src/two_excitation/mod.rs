//! A single photon scattering off an initially excited qubit.
//!
//! The state lives in the two-excitation sector: ψ(x,t)|e⟩ with one photon
//! plus χ(x1,x2,t)|g⟩ with two photons. Eliminating χ leaves a non-local
//! advection equation for ψ, which is marched along characteristics on a
//! lattice with dx = dt. χ is reconstructed from stored ψ histories when a
//! two-photon norm is needed.

mod infinite;
mod semi;

use std::io::{self, Write};

use num_complex::Complex64;

use crate::config::{Geometry, LatticeSpec, PhysicalConfig};
use crate::error::{invalid, Error, Result};
use crate::field::FieldHistory;
use crate::one_excitation::{e_sm, OneExcitationSolution};
use crate::quadrature::trapezoid_weight;
use crate::series::ComplexSeries;
use crate::wavepacket::wavepacket_amplitude;

pub use semi::{evolve_left_region, LeftRegionCheck};

/// Deliberate defects used to check that the validation suite detects them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Drop the delayed mirror self-interaction (Γ/2)ψ(x−2a, t−2a).
    SkipMirrorDelay,
}

/// Options for the two-excitation solvers.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions<'a> {
    /// Keep every ψ frame; required for two-photon norms and P_αβ.
    pub keep_history: bool,
    /// One-excitation solution on the same lattice, used to accumulate
    /// c(t) = ⟨φ(t)|ψ(t)⟩ during the march.
    pub overlap_with: Option<&'a OneExcitationSolution>,
    /// Injected defect for mutation tests.
    pub fault: Option<Fault>,
}

/// Result of a two-excitation march.
#[derive(Debug, Clone)]
pub struct TwoExcitationSolution {
    pub cfg: PhysicalConfig,
    pub lattice: LatticeSpec,
    /// Excited-state process population p_e(t) = ∫|ψ|² dx.
    pub p_e: Vec<f64>,
    /// c(t) = ⟨φ(t)|ψ(t)⟩, present when a one-excitation solution was supplied.
    pub c: Option<ComplexSeries>,
    /// ‖χ(t)‖² = 1 − p_e(t) by unitarity.
    pub chi_norm: Vec<f64>,
    /// Stored ψ frames (ψ_R, ψ_L or the chiral ψ); site 0 is the qubit.
    pub psi: Option<FieldHistory>,
    pub(crate) exact: ExactLeft,
}

/// Exact data left of the qubit: ψ(x0 − q·dt, n·dt) = packet[q + n] · amp[n]
/// where `amp` is e_sm (semi) or e^{−β0 t} (infinite). `front` holds the
/// jump of ψ across the packet front per step (semi only).
#[derive(Debug, Clone)]
pub(crate) struct ExactLeft {
    pub packet: Vec<Complex64>,
    pub amp: Vec<Complex64>,
    pub front: Vec<Complex64>,
}

impl ExactLeft {
    /// Value at lattice site j ≤ 0 relative to the qubit, time step n.
    #[inline]
    pub fn at(&self, j: isize, n: usize) -> Complex64 {
        let q = n as isize - j;
        if q < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.packet.get(q as usize).copied().unwrap_or_default() * self.amp[n]
    }
}

impl TwoExcitationSolution {
    /// CSV with columns t, p_e, re_c, im_c, norm_residual.
    ///
    /// The norm residual needs the stored history and costs a full χ
    /// quadrature per row, so it is evaluated every `residual_stride` samples
    /// and at the last one; other rows, and c without an overlap, read `NaN`.
    pub fn write_csv<W: Write>(&self, mut w: W, residual_stride: usize) -> io::Result<()> {
        writeln!(w, "t,p_e,re_c,im_c,norm_residual")?;
        let last = self.p_e.len().saturating_sub(1);
        let stride = residual_stride.max(1);
        for (n, p) in self.p_e.iter().enumerate() {
            let c = self
                .c
                .as_ref()
                .map_or(Complex64::new(f64::NAN, f64::NAN), |c| c.values[n]);
            let residual = if self.psi.is_some() && (n % stride == 0 || n == last) {
                two_photon_norm_residual(self, n).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                self.lattice.time(n),
                p,
                c.re,
                c.im,
                residual
            )?;
        }
        Ok(())
    }

    /// Largest deviation of ψ from the exact product solution over lattice
    /// sites x < −a with t ≤ t_end.
    pub fn left_region_error(&self, t_end: f64) -> Result<f64> {
        let a = self
            .cfg
            .geometry
            .mirror_distance()
            .ok_or_else(|| invalid("geometry", "left-region check needs the mirror"))?;
        let dt = self.lattice.dt;
        let n_end = ((t_end / dt).round() as usize).min(self.lattice.n_steps());
        let depth = ((-a - self.lattice.x_min) / dt).floor() as usize;
        let mut worst: f64 = 0.0;
        for n in (0..=n_end).step_by((n_end / 64).max(1)) {
            for q in (1..=depth).step_by((depth / 512).max(1)) {
                let x = -a - q as f64 * dt;
                let want = exact_psi_left_of_qubit(x, n as f64 * dt, &self.cfg)?;
                worst = worst.max((self.exact.at(-(q as isize), n) - want).norm());
            }
        }
        Ok(worst)
    }

    /// Number of stored time samples.
    pub fn len(&self) -> usize {
        self.p_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_e.is_empty()
    }
}

/// Solves the infinite-waveguide problem.
pub fn solve_infinite(
    cfg: &PhysicalConfig,
    lattice: &LatticeSpec,
    opts: SolveOptions<'_>,
) -> Result<TwoExcitationSolution> {
    check_inputs(cfg, lattice, &opts)?;
    if cfg.geometry != Geometry::Infinite {
        return Err(invalid(
            "geometry",
            "solve_infinite requires the infinite waveguide",
        ));
    }
    infinite::march(cfg, lattice, &opts)
}

/// Solves the semi-infinite (mirror) problem.
pub fn solve_semi_infinite(
    cfg: &PhysicalConfig,
    lattice: &LatticeSpec,
    opts: SolveOptions<'_>,
) -> Result<TwoExcitationSolution> {
    check_inputs(cfg, lattice, &opts)?;
    if cfg.geometry.mirror_distance().is_none() {
        return Err(invalid(
            "geometry",
            "solve_semi_infinite requires the mirror",
        ));
    }
    semi::march(cfg, lattice, &opts)
}

/// Dispatches on the geometry.
pub fn solve(
    cfg: &PhysicalConfig,
    lattice: &LatticeSpec,
    opts: SolveOptions<'_>,
) -> Result<TwoExcitationSolution> {
    match cfg.geometry {
        Geometry::Infinite => solve_infinite(cfg, lattice, opts),
        Geometry::SemiInfinite { .. } => solve_semi_infinite(cfg, lattice, opts),
    }
}

fn check_inputs(
    cfg: &PhysicalConfig,
    lattice: &LatticeSpec,
    opts: &SolveOptions<'_>,
) -> Result<()> {
    cfg.validate()?;
    lattice.validate(cfg)?;
    if let Some(one) = opts.overlap_with {
        if one.lattice != *lattice || one.cfg != *cfg {
            return Err(Error::LatticeMismatch(
                "one-excitation solution uses a different lattice or configuration".into(),
            ));
        }
    }
    Ok(())
}

/// Exact ψ(x,t) = φ(x−t)·e_sm(t) left of the qubit in the mirror geometry.
pub fn exact_psi_left_of_qubit(x: f64, t: f64, cfg: &PhysicalConfig) -> Result<Complex64> {
    let a = cfg
        .geometry
        .mirror_distance()
        .ok_or_else(|| invalid("geometry", "exact left solution needs the mirror"))?;
    if x >= -a {
        return Err(invalid(
            "x",
            format!("must lie left of the qubit at {}", -a),
        ));
    }
    Ok(wavepacket_amplitude(x - t, cfg) * e_sm(t, cfg)?)
}

/// c(t) = ⟨φ(t)|ψ(t)⟩ per time sample.
///
/// Uses the overlap accumulated during the march when present. Otherwise it
/// integrates the stored ψ history, which ignores the packet-front jump
/// correction and is first order in dt.
pub fn overlap_c(
    one: &OneExcitationSolution,
    two: &TwoExcitationSolution,
) -> Result<ComplexSeries> {
    if one.lattice != two.lattice || one.cfg != two.cfg {
        return Err(Error::LatticeMismatch(
            "one- and two-excitation solutions use different lattices".into(),
        ));
    }
    if let Some(c) = &two.c {
        return Ok(c.clone());
    }
    if let Some(psi) = &two.psi {
        let lat = &two.lattice;
        let dt = lat.dt;
        let n_sites = lat.n_sites_right(&two.cfg);
        let left = crate::one_excitation::left_packet_mass;
        let values = (0..=lat.n_steps())
            .map(|n| {
                let t = n as f64 * dt;
                let mut c = two.exact.amp[n] * left(&two.cfg, lat, t);
                let right = &psi.components[0];
                for i in 0..n_sites {
                    let w = trapezoid_weight(i, n_sites, dt);
                    c += one.field.right_inner(i, n).conj() * inner_psi(right, i, n) * w;
                }
                if let Some(lc) = psi.components.get(1) {
                    for l in 0..n_sites {
                        let w = trapezoid_weight(l, n_sites, dt);
                        c += one.field.left_inner(l, n).conj() * lc.get(n, l) * w;
                    }
                }
                c
            })
            .collect();
        return ComplexSeries::new(0.0, dt, values);
    }
    Err(Error::HistoryNotStored)
}

/// Stored ψ at site i, frame n, with the wavefront node at t = 0 taken as its
/// limit from inside the lattice region.
#[inline]
fn inner_psi(c: &crate::field::FieldComponent, i: usize, n: usize) -> Complex64 {
    if i == 0 && n == 0 {
        Complex64::new(0.0, 0.0)
    } else {
        c.get(n, i)
    }
}

/// Two-photon probabilities at the last sample (infinite waveguide).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringProbabilities {
    pub p_rr: f64,
    pub p_rl: f64,
    pub p_ll: f64,
    /// p_e(t_max), the excitation left in the qubit.
    pub residual_excitation: f64,
}

impl ScatteringProbabilities {
    /// P_RR + P_RL + P_LL + p_e − 1.
    pub fn sum_rule_residual(&self) -> f64 {
        self.p_rr + self.p_rl + self.p_ll + self.residual_excitation - 1.0
    }
}

/// Residual excitation allowed at t_max for asymptotic probabilities.
pub const STEADY_STATE_LIMIT: f64 = 1e-4;

/// P_RR, P_RL, P_LL at t_max from the reconstructed two-photon amplitudes.
pub fn steady_state_probabilities(
    solution: &TwoExcitationSolution,
    cfg: &PhysicalConfig,
) -> Result<ScatteringProbabilities> {
    if *cfg != solution.cfg {
        return Err(invalid("cfg", "does not match the solution"));
    }
    if cfg.geometry != Geometry::Infinite {
        return Err(invalid(
            "geometry",
            "scattering probabilities need the infinite waveguide",
        ));
    }
    let n = solution.lattice.n_steps();
    let p_e = solution.p_e[n];
    if p_e >= STEADY_STATE_LIMIT {
        return Err(Error::InsufficientDecay {
            p_e,
            limit: STEADY_STATE_LIMIT,
        });
    }
    infinite::probabilities(solution, n)
}

/// p_e(t) + ‖χ(t)‖² − 1 at sample n, with ‖χ‖² from quadrature of the
/// reconstructed two-photon amplitude.
pub fn two_photon_norm_residual(solution: &TwoExcitationSolution, n: usize) -> Result<f64> {
    if n > solution.lattice.n_steps() {
        return Err(invalid("n", "beyond the last sample"));
    }
    let chi = match solution.cfg.geometry {
        Geometry::Infinite => {
            let p = infinite::probabilities(solution, n)?;
            p.p_rr + p.p_rl + p.p_ll
        }
        Geometry::SemiInfinite { .. } => semi::chi_norm_squared(solution, n)?,
    };
    Ok(solution.p_e[n] + chi - 1.0)
}
