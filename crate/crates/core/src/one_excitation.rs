//! A single photon scattering off a ground-state qubit.
//!
//! The state stays in the one-excitation sector: e(t)|e,0⟩ plus a photon
//! field. In the infinite waveguide the field splits into right- and
//! left-moving parts; in the semi-infinite waveguide it is a single chiral
//! field on the unfolded line with coupling points at x = ∓a.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::config::{Geometry, LatticeSpec, PhysicalConfig};
use crate::error::{invalid, Error, Result};
use crate::field::{FieldComponent, FieldHistory};
use crate::quadrature::trapezoid_weight;
use crate::series::ComplexSeries;
use crate::special::{exprel, scaled_lower_gamma};
use crate::wavepacket::{packet_samples, step, wavepacket_amplitude};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn require_infinite(cfg: &PhysicalConfig) -> Result<()> {
    match cfg.geometry {
        Geometry::Infinite => Ok(()),
        _ => Err(invalid(
            "geometry",
            "operation requires the infinite waveguide",
        )),
    }
}

fn require_semi(cfg: &PhysicalConfig) -> Result<f64> {
    cfg.geometry
        .mirror_distance()
        .ok_or_else(|| invalid("geometry", "operation requires the semi-infinite waveguide"))
}

/// Qubit amplitude e(t) in the infinite waveguide.
///
/// Evaluates i√(αΓ²/2)(e^{−κt} − e^{−β0 t})/p in the equivalent form
/// √(αΓ²/2)·t·e^{−β0 t}·exprel(−ipt), which is regular at p = 0.
pub fn e_infinite(t: f64, cfg: &PhysicalConfig) -> Complex64 {
    if t <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let pref = (cfg.alpha * cfg.gamma * cfg.gamma / 2.0).sqrt();
    pref * t * (-cfg.qubit_exponent() * t).exp() * exprel(-I * cfg.pole() * t)
}

/// Right- and left-moving photon amplitudes in the infinite waveguide.
pub fn phi_infinite(
    x: f64,
    t: f64,
    cfg: &PhysicalConfig,
    e_history: &ComplexSeries,
) -> Result<(Complex64, Complex64)> {
    require_infinite(cfg)?;
    let v = cfg.coupling();
    let mut right = wavepacket_amplitude(x - t, cfg);
    let gate_r = step(x) * step(t - x);
    if gate_r > 0.0 {
        right -= I * v * gate_r * e_history.at(t - x)?;
    }
    let gate_l = step(-x) * step(t + x);
    let left = if gate_l > 0.0 {
        -I * v * gate_l * e_history.at(t + x)?
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok((right, left))
}

/// Smallest echo count that makes [`e_semi_series`] exact up to time `t`.
pub fn required_echoes(t: f64, a: f64) -> usize {
    (t / (2.0 * a)).ceil().max(0.0) as usize
}

/// h_n(τ) = (1/n!)∫₀^τ e^{−κ(τ−u)} uⁿ e^{−β0 u} du times (Γ/2)ⁿ.
fn echo_kernel(n: u32, tau: f64, cfg: &PhysicalConfig) -> Complex64 {
    if tau <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let d = -I * cfg.pole();
    // γ(n+1, dτ)/(dτ)^{n+1} in scaled form; h_n = τ^{n+1}/n! · e^{−κτ} · that.
    let g = scaled_lower_gamma(n + 1, d * tau);
    let log_pref: f64 = n as f64 * (cfg.gamma / 2.0).ln() + (n + 1) as f64 * tau.ln()
        - (1..=n).map(|i| (i as f64).ln()).sum::<f64>();
    g.times_exp(-cfg.packet_exponent() * tau + log_pref)
}

/// Qubit amplitude e(t) in the semi-infinite waveguide from the echo series.
///
/// Term m is gated by θ(t − 2ma); `n_max` must reach the last active echo.
pub fn e_semi_series(t: f64, cfg: &PhysicalConfig, n_max: usize) -> Result<Complex64> {
    let a = require_semi(cfg)?;
    if t <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let needed = required_echoes(t, a);
    if n_max < needed {
        return Err(Error::Truncated {
            needed,
            given: n_max,
        });
    }
    let amp = I * (cfg.alpha * cfg.gamma * cfg.gamma / 2.0).sqrt();
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 0..=needed {
        let tau = t - 2.0 * m as f64 * a;
        if tau <= 0.0 {
            break;
        }
        let mut term = echo_kernel(m as u32, tau, cfg);
        if m >= 1 {
            term -= echo_kernel(m as u32 - 1, tau, cfg);
        }
        if !(term.re.is_finite() && term.im.is_finite()) {
            return Err(Error::Overflow("echo series term"));
        }
        sum += term;
    }
    Ok(amp * sum)
}

/// Spontaneous-emission amplitude with the mirror, e_sm(t).
pub fn e_sm(t: f64, cfg: &PhysicalConfig) -> Result<Complex64> {
    let a = require_semi(cfg)?;
    if t < 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let beta = cfg.qubit_exponent();
    let half_gamma = cfg.gamma / 2.0;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut log_fact = 0.0;
    let mut n = 0usize;
    loop {
        let tau = t - 2.0 * n as f64 * a;
        if tau < 0.0 || (n > 0 && tau == 0.0) {
            break;
        }
        if n > 0 {
            log_fact += (n as f64).ln();
        }
        let log_mag = if n == 0 {
            0.0
        } else {
            n as f64 * (half_gamma * tau).ln() - log_fact
        };
        let term = (-beta * tau + log_mag).exp();
        if !(term.re.is_finite() && term.im.is_finite()) {
            return Err(Error::Overflow("spontaneous-emission series"));
        }
        sum += term;
        n += 1;
    }
    Ok(sum)
}

/// e_sm sampled at n·dt for n = 0..=n_steps.
pub(crate) fn e_sm_samples(
    cfg: &PhysicalConfig,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<Complex64>> {
    (0..=n_steps).map(|n| e_sm(n as f64 * dt, cfg)).collect()
}

/// Chiral photon amplitude in the semi-infinite waveguide.
pub fn phi_semi(
    x: f64,
    t: f64,
    cfg: &PhysicalConfig,
    e_history: &ComplexSeries,
) -> Result<Complex64> {
    let a = require_semi(cfg)?;
    let v = cfg.coupling();
    let mut out = wavepacket_amplitude(x - t, cfg);
    let g1 = step(x + a) * step(t - x - a);
    if g1 > 0.0 {
        out -= v * g1 * e_history.at(t - x - a)?;
    }
    let g2 = step(x - a) * step(t - x + a);
    if g2 > 0.0 {
        out += v * g2 * e_history.at(t - x + a)?;
    }
    Ok(out)
}

/// Source term switches of the delay equation, used for oracle runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayDrive {
    /// Wavepacket sources at x = ∓a.
    Wavepacket,
    /// No photon: pure spontaneous emission with the mirror.
    Vacuum,
}

/// Integrates de/dt = −β0 e + (Γ/2)e(t−2a)θ(t−2a) + √(Γ/2)[φ(−a−t) − φ(a−t)].
///
/// Fixed-step RK4 on a grid with 2a/dt integer, so echo kinks fall on grid
/// points. Delayed values between samples come from cubic Hermite
/// interpolation with the one-sided derivatives of the enclosing step.
pub fn integrate_delay_equation(
    cfg: &PhysicalConfig,
    dt: f64,
    n_steps: usize,
    e0: Complex64,
    drive: DelayDrive,
) -> Result<ComplexSeries> {
    cfg.validate()?;
    let a = require_semi(cfg)?;
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    if 2.0 * a < dt {
        return Err(Error::LatticeMismatch(format!(
            "delay 2a = {} is smaller than dt = {dt}",
            2.0 * a
        )));
    }
    let ratio = 2.0 * a / dt;
    if (ratio - ratio.round()).abs() > 1e-6 {
        return Err(Error::LatticeMismatch(format!(
            "dt = {dt} does not divide the delay 2a = {}",
            2.0 * a
        )));
    }
    let lag = ratio.round() as usize;
    let beta = cfg.qubit_exponent();
    let half_gamma = cfg.gamma / 2.0;
    let v = cfg.coupling();
    let kappa = cfg.packet_exponent();
    let amp = I * cfg.bandwidth().sqrt();
    let driven = drive == DelayDrive::Wavepacket;
    // Sources for a time strictly inside step n (right-limit conventions).
    let source = |t: f64, echo_on: bool| -> Complex64 {
        if !driven {
            return Complex64::new(0.0, 0.0);
        }
        let mut s = amp * (-kappa * t).exp();
        if echo_on {
            s -= amp * (kappa * (2.0 * a - t)).exp();
        }
        v * s
    };

    let mut e = vec![Complex64::new(0.0, 0.0); n_steps + 1];
    // Derivatives at the left and right ends of each step.
    let mut d_left = vec![Complex64::new(0.0, 0.0); n_steps];
    let mut d_right = vec![Complex64::new(0.0, 0.0); n_steps];
    e[0] = e0;
    for n in 0..n_steps {
        let t = n as f64 * dt;
        let echo_on = n >= lag;
        let (k1, k_end, next) = {
            let delayed = |frac: f64| -> Complex64 {
                if !echo_on {
                    return Complex64::new(0.0, 0.0);
                }
                let j = n - lag;
                if frac == 0.0 {
                    return e[j];
                }
                if frac == 1.0 {
                    return e[j + 1];
                }
                let (y0, y1) = (e[j], e[j + 1]);
                let (m0, m1) = (d_left[j] * dt, d_right[j] * dt);
                let s = frac;
                let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
                let h10 = s * s * s - 2.0 * s * s + s;
                let h01 = -2.0 * s * s * s + 3.0 * s * s;
                let h11 = s * s * s - s * s;
                y0 * h00 + m0 * h10 + y1 * h01 + m1 * h11
            };
            let f = |frac: f64, y: Complex64| -> Complex64 {
                -beta * y + half_gamma * delayed(frac) + source(t + frac * dt, echo_on)
            };
            let y = e[n];
            let k1 = f(0.0, y);
            let k2 = f(0.5, y + k1 * (dt / 2.0));
            let k3 = f(0.5, y + k2 * (dt / 2.0));
            let k4 = f(1.0, y + k3 * dt);
            let next = y + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0);
            (k1, f(1.0, next), next)
        };
        d_left[n] = k1;
        d_right[n] = k_end;
        e[n + 1] = next;
    }
    ComplexSeries::new(0.0, dt, e)
}

/// Qubit amplitude in the semi-infinite waveguide from the delay equation.
pub fn e_semi_dde(dt: f64, n_steps: usize, cfg: &PhysicalConfig) -> Result<ComplexSeries> {
    integrate_delay_equation(
        cfg,
        dt,
        n_steps,
        Complex64::new(0.0, 0.0),
        DelayDrive::Wavepacket,
    )
}

/// How the qubit amplitude is obtained on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeMethod {
    /// Closed form (infinite) or echo series (semi-infinite).
    #[default]
    Exact,
    /// Delay-equation integrator (semi-infinite only).
    Integrator,
}

/// Lattice evaluator for the one-excitation photon field.
#[derive(Debug, Clone)]
pub(crate) struct OneFieldLattice {
    pub geometry: Geometry,
    pub coupling: f64,
    pub mirror_sites: usize,
    pub n_sites: usize,
    pub packet: Vec<Complex64>,
    pub e: Vec<Complex64>,
}

impl OneFieldLattice {
    fn new(cfg: &PhysicalConfig, lattice: &LatticeSpec, e: Vec<Complex64>) -> Self {
        let n_sites = lattice.n_sites_right(cfg);
        Self {
            geometry: cfg.geometry,
            coupling: cfg.coupling(),
            mirror_sites: lattice.mirror_sites(cfg).unwrap_or(0),
            n_sites,
            packet: packet_samples(cfg, lattice.dt, lattice.n_steps() + 1),
            e,
        }
    }

    /// Number of sites right of the qubit holding nonzero field at step n.
    pub fn active_sites(&self, n: usize) -> usize {
        (2 * self.mirror_sites + n + 1).min(self.n_sites)
    }

    /// Right-moving (or chiral) field at site i, step n; site 0 is the qubit.
    ///
    /// Uses θ(0) = 1/2 on every jump, including the qubit site.
    #[inline]
    pub fn right(&self, i: usize, n: usize) -> Complex64 {
        self.right_impl(i, n, false)
    }

    /// As [`Self::right`], but site 0 takes its limit from inside the lattice
    /// region, as required by the trapezoid rule on [x0, x_max].
    #[inline]
    pub fn right_inner(&self, i: usize, n: usize) -> Complex64 {
        if i == 0 && n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.right_impl(i, n, true)
    }

    #[inline]
    fn right_impl(&self, i: usize, n: usize, inner: bool) -> Complex64 {
        let mut out = if i <= n {
            self.packet[n - i]
        } else {
            Complex64::new(0.0, 0.0)
        };
        let m2 = 2 * self.mirror_sites;
        if i > n + m2 {
            return out;
        }
        let g0 = half_if(i == 0 && !inner);
        match self.geometry {
            Geometry::Infinite => {
                if i <= n {
                    out -= I * self.coupling * g0 * half_if(i == n) * self.e[n - i];
                }
            }
            Geometry::SemiInfinite { .. } => {
                if i <= n {
                    out -= self.coupling * g0 * half_if(i == n) * self.e[n - i];
                }
                if i >= m2 && i <= n + m2 {
                    let g = half_if(i == m2) * half_if(i == n + m2);
                    out += self.coupling * g * self.e[n + m2 - i];
                }
            }
        }
        out
    }

    /// One-sided limits (from below, from above in i) of the right field.
    pub(crate) fn right_limits(&self, i: usize, n: usize) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let m2 = 2 * self.mirror_sites;
        let packet = |q: usize| {
            if q == 0 {
                self.packet[0] * 2.0
            } else {
                self.packet[q]
            }
        };
        let emit = match self.geometry {
            Geometry::Infinite => -I * self.coupling,
            Geometry::SemiInfinite { .. } => Complex64::new(-self.coupling, 0.0),
        };
        let side = |above: bool| {
            let mut out = zero;
            if i < n || (i == n && !above) {
                out += packet(n - i) + emit * self.e[n - i];
            }
            if i == 0 && !above {
                out -= emit * self.e[n];
            }
            if matches!(self.geometry, Geometry::SemiInfinite { .. }) {
                let lo = if above { i >= m2 } else { i > m2 };
                let hi = if above { i < n + m2 } else { i <= n + m2 };
                if lo && hi {
                    out += self.coupling * self.e[n + m2 - i];
                }
            }
            out
        };
        (side(false), side(true))
    }

    /// |φ|² as seen by the trapezoid rule on [x0, x_max]: the mean of the two
    /// one-sided limits at interior jumps, the inner limit at either end.
    pub fn right_sq(&self, i: usize, n: usize) -> f64 {
        let (below, above) = self.right_limits(i, n);
        if i == 0 {
            above.norm_sqr()
        } else if i + 1 == self.n_sites {
            below.norm_sqr()
        } else {
            0.5 * (below.norm_sqr() + above.norm_sqr())
        }
    }

    /// As [`Self::right_sq`] for the left-moving field at x = −l·dt.
    pub fn left_sq(&self, l: usize, n: usize) -> f64 {
        if l > n {
            return 0.0;
        }
        let inner = (self.coupling * self.e[n - l]).norm_sqr();
        if l == n && l > 0 && l + 1 < self.n_sites {
            0.5 * inner
        } else if l == n {
            0.0
        } else {
            inner
        }
    }

    /// Left-moving field at x = −l·dt, step n (infinite geometry).
    #[inline]
    pub fn left(&self, l: usize, n: usize) -> Complex64 {
        self.left_impl(l, n, false)
    }

    /// As [`Self::left`], with site 0 taken as the limit from x < 0.
    #[inline]
    pub fn left_inner(&self, l: usize, n: usize) -> Complex64 {
        self.left_impl(l, n, true)
    }

    #[inline]
    fn left_impl(&self, l: usize, n: usize, inner: bool) -> Complex64 {
        if l > n {
            return Complex64::new(0.0, 0.0);
        }
        let g = half_if(l == 0 && !inner) * half_if(l == n);
        -I * self.coupling * g * self.e[n - l]
    }
}

#[inline]
pub(crate) fn half_if(cond: bool) -> f64 {
    if cond {
        0.5
    } else {
        1.0
    }
}

/// Photon mass left of the qubit at time t, ∫_{x_min}^{x0} |φ(x − t)|² dx.
pub(crate) fn left_packet_mass(cfg: &PhysicalConfig, lattice: &LatticeSpec, t: f64) -> f64 {
    let depth = cfg.qubit_position() - lattice.x_min;
    let rate = cfg.bandwidth();
    (-rate * t).exp() - (-rate * (t + depth)).exp()
}

/// One-excitation solution sampled on a lattice.
#[derive(Debug, Clone)]
pub struct OneExcitationSolution {
    pub cfg: PhysicalConfig,
    pub lattice: LatticeSpec,
    /// Qubit amplitude e(t).
    pub e_of_t: ComplexSeries,
    /// Ground-state process population p_g(t) = |e(t)|².
    pub p_g: Vec<f64>,
    /// |e|² + ∫|φ|²dx − 1 per sample.
    pub norm_residual: Vec<f64>,
    pub(crate) field: OneFieldLattice,
}

impl OneExcitationSolution {
    /// Solves the one-excitation problem on `lattice`.
    pub fn solve(
        cfg: &PhysicalConfig,
        lattice: &LatticeSpec,
        method: AmplitudeMethod,
    ) -> Result<Self> {
        cfg.validate()?;
        lattice.validate(cfg)?;
        let n_steps = lattice.n_steps();
        let dt = lattice.dt;
        let e: Vec<Complex64> = match (cfg.geometry, method) {
            (Geometry::Infinite, _) => (0..=n_steps)
                .map(|n| e_infinite(n as f64 * dt, cfg))
                .collect(),
            (Geometry::SemiInfinite { a }, AmplitudeMethod::Exact) => {
                let n_max = required_echoes(lattice.t_max, a) + 1;
                (0..=n_steps)
                    .map(|n| e_semi_series(n as f64 * dt, cfg, n_max))
                    .collect::<Result<_>>()?
            }
            (Geometry::SemiInfinite { .. }, AmplitudeMethod::Integrator) => {
                e_semi_dde(dt, n_steps, cfg)?.values
            }
        };
        let field = OneFieldLattice::new(cfg, lattice, e.clone());
        let mut norm_residual = Vec::with_capacity(n_steps + 1);
        for n in 0..=n_steps {
            let t = n as f64 * dt;
            let active = field.active_sites(n);
            let n_sites = field.n_sites;
            let mut mass = left_packet_mass(cfg, lattice, t);
            for i in 0..active {
                mass += trapezoid_weight(i, n_sites, dt) * field.right_sq(i, n);
            }
            if cfg.geometry == Geometry::Infinite {
                for l in 0..active.min(n_sites) {
                    mass += trapezoid_weight(l, n_sites, dt) * field.left_sq(l, n);
                }
            }
            norm_residual.push(e[n].norm_sqr() + mass - 1.0);
        }
        let p_g = e.iter().map(|v| v.norm_sqr()).collect();
        Ok(Self {
            cfg: *cfg,
            lattice: *lattice,
            e_of_t: ComplexSeries::new(0.0, dt, e)?,
            p_g,
            norm_residual,
            field,
        })
    }

    /// Photon field on the lattice right of the qubit (and left of it for the
    /// left-moving component), materialized as a [`FieldHistory`].
    pub fn phi_field(&self) -> FieldHistory {
        let dt = self.lattice.dt;
        let x0 = self.cfg.qubit_position();
        let n_steps = self.lattice.n_steps();
        let n_sites = self.field.n_sites;
        let name = match self.cfg.geometry {
            Geometry::Infinite => "phi_R",
            Geometry::SemiInfinite { .. } => "phi",
        };
        let mut comps = vec![FieldComponent {
            name: name.to_string(),
            x_origin: x0,
            x_step: dt,
            frames: (0..=n_steps)
                .map(|n| (0..n_sites).map(|i| self.field.right(i, n)).collect())
                .collect(),
        }];
        if self.cfg.geometry == Geometry::Infinite {
            comps.push(FieldComponent {
                name: "phi_L".to_string(),
                x_origin: 0.0,
                x_step: -dt,
                frames: (0..=n_steps)
                    .map(|n| (0..n_sites).map(|l| self.field.left(l, n)).collect())
                    .collect(),
            });
        }
        FieldHistory {
            lattice: self.lattice,
            components: comps,
        }
    }

    /// Largest |norm residual| over all samples.
    pub fn max_norm_residual(&self) -> f64 {
        self.norm_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// CSV with columns t, re_e, im_e, p_g, norm_residual.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,re_e,im_e,p_g,norm_residual")?;
        for (n, e) in self.e_of_t.values.iter().enumerate() {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                self.lattice.time(n),
                e.re,
                e.im,
                self.p_g[n],
                self.norm_residual[n]
            )?;
        }
        Ok(())
    }
}
