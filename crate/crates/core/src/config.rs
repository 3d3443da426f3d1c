//! Physical parameters and the characteristics-aligned lattice.
//!
//! Times and lengths are measured in units of 1/Γ with the speed of light set
//! to one, so a lattice with `dx == dt` moves free fields exactly one site per
//! step.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Waveguide geometry seen by the qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Qubit at x = 0 in an infinite waveguide.
    Infinite,
    /// Qubit at distance `a` from a perfect mirror, unfolded to a chiral line
    /// with coupling points at x = -a and its image at x = +a.
    SemiInfinite { a: f64 },
}

impl Geometry {
    /// Semi-infinite geometry from the mirror phase k0·a expressed in units of π.
    pub fn semi_from_phase(k0a_over_pi: f64, omega0: f64) -> Result<Self> {
        if !(omega0 > 0.0) {
            return Err(invalid("omega0", "must be positive to set a from k0a"));
        }
        Ok(Geometry::SemiInfinite {
            a: k0a_over_pi * std::f64::consts::PI / omega0,
        })
    }

    /// Qubit–mirror distance, if any.
    pub fn mirror_distance(&self) -> Option<f64> {
        match *self {
            Geometry::Infinite => None,
            Geometry::SemiInfinite { a } => Some(a),
        }
    }
}

/// All physical parameters of a scattering run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    /// Decay rate Γ into the waveguide.
    pub gamma: f64,
    /// Qubit transition frequency ω0.
    pub omega0: f64,
    /// Carrier frequency k of the incoming wavepacket.
    pub k: f64,
    /// Bandwidth in units of Γ, α = δk/Γ.
    pub alpha: f64,
    /// Infinite or semi-infinite waveguide.
    pub geometry: Geometry,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            omega0: 20.0,
            k: 20.0,
            alpha: 1.0,
            geometry: Geometry::Infinite,
        }
    }
}

impl PhysicalConfig {
    /// Resonant configuration (k = ω0) with Γ = 1.
    pub fn resonant(alpha: f64, omega0: f64, geometry: Geometry) -> Self {
        Self {
            gamma: 1.0,
            omega0,
            k: omega0,
            alpha,
            geometry,
        }
    }

    /// Checks the parameter invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid(
                "gamma",
                format!("must be positive, got {}", self.gamma),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid(
                "alpha",
                format!("must be positive, got {}", self.alpha),
            ));
        }
        if !self.omega0.is_finite() {
            return Err(invalid("omega0", "must be finite"));
        }
        if !self.k.is_finite() {
            return Err(invalid("k", "must be finite"));
        }
        if let Geometry::SemiInfinite { a } = self.geometry {
            if !(a > 0.0 && a.is_finite()) {
                return Err(invalid("a", format!("must be positive, got {a}")));
            }
        }
        Ok(())
    }

    /// Coupling strength V with Γ = 2V².
    pub fn coupling(&self) -> f64 {
        (self.gamma / 2.0).sqrt()
    }

    /// Qubit position x0.
    pub fn qubit_position(&self) -> f64 {
        match self.geometry {
            Geometry::Infinite => 0.0,
            Geometry::SemiInfinite { a } => -a,
        }
    }

    /// Wavepacket bandwidth δk = αΓ.
    pub fn bandwidth(&self) -> f64 {
        self.alpha * self.gamma
    }

    /// Round-trip delay τ = 2a (zero without a mirror).
    pub fn delay(&self) -> f64 {
        2.0 * self.geometry.mirror_distance().unwrap_or(0.0)
    }

    /// Complex decay exponent β0 = iω0 + Γ/2 of the bare qubit amplitude.
    pub fn qubit_exponent(&self) -> Complex64 {
        Complex64::new(self.gamma / 2.0, self.omega0)
    }

    /// Complex exponent κ = ik + αΓ/2 of the wavepacket.
    pub fn packet_exponent(&self) -> Complex64 {
        Complex64::new(self.bandwidth() / 2.0, self.k)
    }

    /// Pole p = k − ω0 + iΓ(1−α)/2 of the driven qubit amplitude.
    pub fn pole(&self) -> Complex64 {
        Complex64::new(self.k - self.omega0, self.gamma * (1.0 - self.alpha) / 2.0)
    }
}

/// Default spatial truncation: x_min = x0 − 40/(αΓ).
pub const PACKET_SUPPORT_WIDTHS: f64 = 40.0;

/// Spacetime lattice with dx = dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    /// Time step, equal to the spatial step.
    pub dt: f64,
    /// Final time (a multiple of `dt`).
    pub t_max: f64,
    /// Left spatial bound.
    pub x_min: f64,
    /// Right spatial bound.
    pub x_max: f64,
}

impl LatticeSpec {
    /// Builds the default lattice for `cfg`.
    ///
    /// In the semi-infinite geometry `dt` is reduced to the nearest value that
    /// divides `a`, so every delayed and mirrored lookup lands on a site.
    /// `t_max` is rounded up to a whole number of steps.
    pub fn for_config(cfg: &PhysicalConfig, dt: f64, t_max: f64) -> Result<Self> {
        cfg.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(invalid("tmax", format!("must be positive, got {t_max}")));
        }
        let dt = match cfg.geometry {
            Geometry::Infinite => dt,
            Geometry::SemiInfinite { a } => a / (a / dt).ceil(),
        };
        let n_t = (t_max / dt - 1e-9).ceil().max(1.0);
        let t_max = n_t * dt;
        let x0 = cfg.qubit_position();
        let a = cfg.geometry.mirror_distance().unwrap_or(0.0);
        let spec = Self {
            dt,
            t_max,
            x_min: x0 - PACKET_SUPPORT_WIDTHS / cfg.bandwidth(),
            x_max: x0 + 2.0 * a + t_max,
        };
        spec.validate(cfg)?;
        Ok(spec)
    }

    /// Checks the lattice invariants against `cfg`.
    pub fn validate(&self, cfg: &PhysicalConfig) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= self.dt) {
            return Err(invalid("tmax", "must cover at least one step"));
        }
        let x0 = cfg.qubit_position();
        if self.x_min > x0 {
            return Err(Error::LatticeMismatch(format!(
                "x_min = {} lies right of the qubit at {x0}",
                self.x_min
            )));
        }
        let a = cfg.geometry.mirror_distance().unwrap_or(0.0);
        if self.x_max < self.t_max + a - 1e-9 * self.t_max.max(1.0) {
            return Err(Error::LatticeMismatch(format!(
                "x_max = {} does not cover the light cone t_max + a = {}",
                self.x_max,
                self.t_max + a
            )));
        }
        if let Geometry::SemiInfinite { a } = cfg.geometry {
            let m = a / self.dt;
            if m < 1.0 - 1e-9 || (m - m.round()).abs() > 1e-6 {
                return Err(Error::LatticeMismatch(format!(
                    "dt = {} does not divide the mirror distance a = {a}",
                    self.dt
                )));
            }
        }
        Ok(())
    }

    /// Number of time steps; samples run from 0 to `n_steps()` inclusive.
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Time of sample `n`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Number of spatial sites from the qubit position to `x_max`, inclusive.
    pub fn n_sites_right(&self, cfg: &PhysicalConfig) -> usize {
        ((self.x_max - cfg.qubit_position()) / self.dt - 1e-9).ceil() as usize + 1
    }

    /// a/dt for the semi-infinite geometry.
    pub fn mirror_sites(&self, cfg: &PhysicalConfig) -> Option<usize> {
        cfg.geometry
            .mirror_distance()
            .map(|a| (a / self.dt).round() as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_quantities() {
        let cfg = PhysicalConfig {
            gamma: 2.0,
            omega0: 3.0,
            k: 4.0,
            alpha: 0.5,
            geometry: Geometry::SemiInfinite { a: 0.25 },
        };
        assert_relative_eq!(cfg.coupling(), 1.0);
        assert_relative_eq!(cfg.qubit_position(), -0.25);
        assert_relative_eq!(cfg.delay(), 0.5);
        assert_relative_eq!(cfg.bandwidth(), 1.0);
        assert_eq!(cfg.pole(), Complex64::new(1.0, 0.5));
        assert_eq!(
            cfg.qubit_exponent() - cfg.packet_exponent(),
            -Complex64::i() * cfg.pole()
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        let cfg = PhysicalConfig {
            alpha: 0.0,
            ..PhysicalConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidParameter { name: "alpha", .. })
        ));
        let cfg = PhysicalConfig {
            geometry: Geometry::SemiInfinite { a: -1.0 },
            ..Default::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidParameter { name: "a", .. })
        ));
    }

    #[test]
    fn semi_lattice_divides_mirror_distance() {
        let cfg =
            PhysicalConfig::resonant(1.0, 20.0, Geometry::semi_from_phase(4.0, 20.0).unwrap());
        let lat = LatticeSpec::for_config(&cfg, 1e-3, 3.0).unwrap();
        let m = lat.mirror_sites(&cfg).unwrap();
        assert!(lat.dt <= 1e-3);
        assert_relative_eq!(
            m as f64 * lat.dt,
            std::f64::consts::PI / 5.0,
            max_relative = 1e-12
        );
        assert!(lat.x_max >= lat.t_max + std::f64::consts::PI / 5.0);
    }

    #[test]
    fn misaligned_semi_lattice_rejected() {
        let cfg = PhysicalConfig::resonant(1.0, 20.0, Geometry::SemiInfinite { a: 0.1 });
        let lat = LatticeSpec {
            dt: 0.03,
            t_max: 1.0,
            x_min: -10.0,
            x_max: 2.0,
        };
        assert!(matches!(lat.validate(&cfg), Err(Error::LatticeMismatch(_))));
    }
}
