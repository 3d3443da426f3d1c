//! Semi-infinite waveguide: chiral field with coupling points at x = ∓a.
//!
//! ψ obeys ∂tψ = −∂xψ − β0ψ + (Γ/2)ψ(x−2a, t−2a)θ(t−2a) minus four mirror
//! terms built from ψ at (−x−2a, t−x−a), (−x, t−x−a), (2a−x, t−x+a) and
//! (−x, t−x+a). Left of the qubit the solution is φ(x−t)e_sm(t); the march
//! covers x ≥ −a and reads that region exactly.

use num_complex::Complex64;

use super::{ExactLeft, Fault, SolveOptions, TwoExcitationSolution};
use crate::config::{LatticeSpec, PhysicalConfig};
use crate::error::{invalid, Error, Result};
use crate::field::{FieldComponent, FieldHistory};
use crate::one_excitation::{e_sm_samples, left_packet_mass};
use crate::quadrature::trapezoid_weight;
use crate::series::ComplexSeries;
use crate::wavepacket::packet_samples;

#[inline]
fn gate(k: isize) -> f64 {
    match k.signum() {
        1 => 1.0,
        0 => 0.5,
        _ => 0.0,
    }
}

/// Rows of ψ indexed by time step: a ring of the last few rows, or all rows.
struct Rows {
    rows: Vec<Vec<Complex64>>,
    ring: Option<usize>,
}

impl Rows {
    #[inline]
    fn row(&self, n: usize) -> &[Complex64] {
        match self.ring {
            Some(r) => &self.rows[n % r],
            None => &self.rows[n],
        }
    }
}

/// Exact left-region depth (in sites) covered by the packet table.
fn left_depth(cfg: &PhysicalConfig, lattice: &LatticeSpec) -> usize {
    ((cfg.qubit_position() - lattice.x_min) / lattice.dt).ceil() as usize + 1
}

pub(super) fn march(
    cfg: &PhysicalConfig,
    lattice: &LatticeSpec,
    opts: &SolveOptions<'_>,
) -> Result<TwoExcitationSolution> {
    let dt = lattice.dt;
    let n_steps = lattice.n_steps();
    let n_sites = lattice.n_sites_right(cfg);
    let m = lattice
        .mirror_sites(cfg)
        .ok_or_else(|| invalid("geometry", "mirror required"))?;
    let m2 = 2 * m;
    let mut exact = ExactLeft {
        packet: packet_samples(cfg, dt, n_steps + left_depth(cfg, lattice) + 1),
        amp: e_sm_samples(cfg, dt, n_steps)?,
        front: Vec::new(),
    };
    let e_step = (-cfg.qubit_exponent() * dt).exp();
    let half_gamma = cfg.gamma / 2.0;
    let skip_delay = opts.fault == Some(Fault::SkipMirrorDelay);
    let one = opts.overlap_with;
    let ring = 2 * m + 2;

    let mut store = Rows {
        rows: Vec::new(),
        ring: (!opts.keep_history).then_some(ring),
    };
    let mut first = vec![Complex64::new(0.0, 0.0); n_sites];
    first[0] = exact.at(0, 0);
    store.rows.push(first);

    exact.front = front_jump(
        &exact.packet,
        m2,
        n_steps,
        e_step,
        half_gamma * dt,
        skip_delay,
    );
    let jump = exact.front.clone();
    let mut p_e = Vec::with_capacity(n_steps + 1);
    let mut c = Vec::with_capacity(n_steps + 1);
    let mut next = vec![Complex64::new(0.0, 0.0); n_sites];

    for n in 0..=n_steps {
        let t = n as f64 * dt;
        let active = (m2 + n + 1).min(n_sites);
        let left_mass = left_packet_mass(cfg, lattice, t);
        let mut pe = exact.amp[n].norm_sqr() * left_mass;
        let mut cc = exact.amp[n] * left_mass;
        {
            let row = store.row(n);
            for i in 0..active {
                let w = trapezoid_weight(i, n_sites, dt);
                let last = i + 1 == n_sites;
                let v = if i == 0 && n == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    row[i]
                };
                // Jumps of ψ and φ: the packet front i = n carries the mean of
                // its one-sided limits, the image front i = n + 2m half its
                // inner limit.
                if n > 0 && i == n {
                    let j = jump[n];
                    if last {
                        pe += w * (v + j / 2.0).norm_sqr();
                    } else {
                        pe += w * (v.norm_sqr() + j.norm_sqr() / 4.0);
                    }
                    if let Some(one) = one {
                        let (below, above) = one.field.right_limits(i, n);
                        if last {
                            cc += w * below.conj() * (v + j / 2.0);
                        } else {
                            let (mean, jp) = ((below + above) / 2.0, below - above);
                            cc += w * (mean.conj() * v + jp.conj() * j / 4.0);
                        }
                    }
                    continue;
                }
                let f = if n > 0 && i == n + m2 {
                    if last {
                        4.0
                    } else {
                        2.0
                    }
                } else {
                    1.0
                };
                pe += f * w * v.norm_sqr();
                if let Some(one) = one {
                    cc += f * w * one.field.right_inner(i, n).conj() * v;
                }
            }
        }
        p_e.push(pe);
        c.push(cc);
        if n == n_steps {
            break;
        }

        // ψ at site j (relative to x = −a) and step nn from rows or the exact region.
        let lookup = |j: isize, nn: usize| -> Complex64 {
            if j <= 0 {
                exact.at(j, nn)
            } else if (j as usize) < n_sites {
                store.row(nn)[j as usize]
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        // Mirror lookups cross the packet front (site = step) at n = 2m, moving
        // from ahead of it to behind it; `side` selects that one-sided limit.
        let mirror = |j: isize, nn: usize, side: f64| -> Complex64 {
            let v = lookup(j, nn);
            if j == nn as isize {
                v + jump[nn] * side
            } else {
                v
            }
        };
        // Non-local source at (i, nn) with gates fixed by the step; `side` is
        // +1/2 at the step start and −1/2 at its end.
        let source = |i: usize, nn: usize, gd: f64, ga: f64, gb: f64, side: f64| -> Complex64 {
            let i = i as isize;
            let m2 = m2 as isize;
            let mut s = Complex64::new(0.0, 0.0);
            if gd > 0.0 {
                s += gd * lookup(i - m2, nn - m2 as usize);
            }
            if ga > 0.0 {
                let tn = (nn as isize - i) as usize;
                s -= ga * (mirror(-i, tn, side) - mirror(m2 - i, tn, side));
            }
            if gb > 0.0 {
                let tn = (nn as isize - i + m2) as usize;
                s -= gb * (mirror(2 * m2 - i, tn, side) - mirror(m2 - i, tn, side));
            }
            s * half_gamma
        };

        let top = (m2 + n).min(n_sites - 2);
        {
            let row = store.row(n);
            for i in 0..=top {
                let gd = if n >= m2 && !skip_delay { 1.0 } else { 0.0 };
                let ga = gate(n as isize - i as isize);
                let gb = if i >= m2 {
                    gate(n as isize - i as isize + m2 as isize)
                } else {
                    0.0
                };
                let mut v = e_step * row[i];
                if gd + ga + gb > 0.0 {
                    v += (e_step * source(i, n, gd, ga, gb, 0.5)
                        + source(i + 1, n + 1, gd, ga, gb, -0.5))
                        * (0.5 * dt);
                }
                next[i + 1] = v;
            }
        }
        next[0] = exact.at(0, n + 1);
        for v in next.iter_mut().skip(top + 2) {
            *v = Complex64::new(0.0, 0.0);
        }
        match store.ring {
            Some(r) => {
                let slot = (n + 1) % r;
                if store.rows.len() <= slot {
                    store.rows.push(next.clone());
                } else {
                    store.rows[slot].copy_from_slice(&next);
                }
            }
            None => store.rows.push(next[..(m2 + n + 2).min(n_sites)].to_vec()),
        }
    }

    let psi = opts.keep_history.then(|| FieldHistory {
        lattice: *lattice,
        components: vec![FieldComponent {
            name: "psi".into(),
            x_origin: cfg.qubit_position(),
            x_step: dt,
            frames: std::mem::take(&mut store.rows),
        }],
    });
    let chi_norm = p_e.iter().map(|p| 1.0 - p).collect();
    Ok(TwoExcitationSolution {
        cfg: *cfg,
        lattice: *lattice,
        p_e,
        c: match one {
            Some(_) => Some(ComplexSeries::new(0.0, dt, c)?),
            None => None,
        },
        chi_norm,
        psi,
        exact,
    })
}

/// Jump of ψ across the packet front x = x0 + t (inner minus outer limit).
///
/// It obeys the same trapezoidal march as ψ with the source replaced by its
/// jump: the delayed self-term contributes the delayed jump, the direct
/// mirror term its inner value, and the image term is continuous there.
fn front_jump(
    packet: &[Complex64],
    m2: usize,
    n_steps: usize,
    e_step: Complex64,
    half_gamma_dt: f64,
    skip_delay: bool,
) -> Vec<Complex64> {
    let full = |q: usize| if q == 0 { packet[0] * 2.0 } else { packet[q] };
    let direct = |k: usize| {
        if k >= m2 {
            full(k) - full(k - m2)
        } else {
            full(k)
        }
    };
    let mut jump = vec![Complex64::new(0.0, 0.0); n_steps + 1];
    jump[0] = full(0);
    for k in 0..n_steps {
        let delayed = k >= m2 && !skip_delay;
        let src = |kk: usize, jump: &[Complex64]| {
            let d = if delayed {
                jump[kk - m2]
            } else {
                Complex64::new(0.0, 0.0)
            };
            d - direct(kk)
        };
        let s = e_step * src(k, &jump) + src(k + 1, &jump);
        jump[k + 1] = e_step * jump[k] + s * (0.5 * half_gamma_dt);
    }
    jump
}

/// Side of a jump line a quadrature node is evaluated on: below, above, or
/// not on a line.
#[derive(Clone, Copy, PartialEq)]
enum Side {
    Below,
    Above,
    Off,
}

/// Indicator of lo ≤ i ≤ hi evaluated on `side` of the end points.
#[inline]
fn within(i: usize, side: Side, lo: usize, hi: usize) -> bool {
    let above_lo = i > lo || (i == lo && side != Side::Below);
    let below_hi = i < hi || (i == hi && side != Side::Above);
    above_lo && below_hi
}

/// ‖χ(t_n)‖² from the two-photon amplitude rebuilt out of the ψ history.
///
/// χ jumps along the lines x = n, 2m and n + 2m (in sites from the qubit),
/// where the emission gates switch and ψ crosses its packet front. Nodes on
/// those lines average |χ|² over the one-sided limits; the ends of the
/// support [0, min(n + 2m, L)] take their inner limits.
pub(super) fn chi_norm_squared(sol: &TwoExcitationSolution, n: usize) -> Result<f64> {
    let psi = sol.psi.as_ref().ok_or(Error::HistoryNotStored)?;
    let h = &psi.components[0];
    let cfg = &sol.cfg;
    let lattice = &sol.lattice;
    let dt = lattice.dt;
    let m2 = 2 * lattice.mirror_sites(cfg).unwrap_or(0);
    let n_sites = lattice.n_sites_right(cfg);
    let active = (m2 + n + 1).min(n_sites);
    let exact = &sol.exact;
    let v2 = cfg.coupling().powi(2);
    // ψ at site j, step nn, on `side` of x1's jump lines. The packet front
    // j = nn stores the mean of its limits; the image front j = nn + 2m
    // stores half its inner limit and vanishes beyond.
    let lookup = |j: isize, nn: usize, side: Side| -> Complex64 {
        let v = if j <= 0 {
            exact.at(j, nn)
        } else {
            h.get(nn, j as usize)
        };
        if j == nn as isize {
            match side {
                Side::Below => v + exact.front[nn] / 2.0,
                Side::Above => v - exact.front[nn] / 2.0,
                Side::Off => v,
            }
        } else if nn > 0 && j == (nn + m2) as isize {
            match side {
                Side::Below => v * 2.0,
                Side::Above => Complex64::new(0.0, 0.0),
                Side::Off => v,
            }
        } else {
            v
        }
    };
    // Emission kernel T(x1, x2) from the qubit (a) and its image (b), with
    // χ(x1, x2) = −(V/√2)[T(x1, x2) + T(x2, x1)].
    let term = |i1: usize, s1: Side, i2: usize, s2: Side| -> Complex64 {
        let d = i1 as isize - i2 as isize;
        let mut s = Complex64::new(0.0, 0.0);
        if within(i2, s2, 0, n) {
            s += lookup(d, n - i2, s1);
        }
        if within(i2, s2, m2, n + m2) {
            s -= lookup(d + m2 as isize, n + m2 - i2, s1);
        }
        s
    };
    let sides = |i: usize| -> &'static [Side] {
        if i == 0 {
            &[Side::Above]
        } else if i + 1 == active {
            &[Side::Below]
        } else if i == n || i == m2 || i == n + m2 {
            &[Side::Below, Side::Above]
        } else {
            &[Side::Off]
        }
    };
    let w = |i: usize| trapezoid_weight(i, active, dt);
    let mut inner = 0.0;
    for i1 in 0..active {
        let (w1, sides1) = (w(i1), sides(i1));
        for i2 in 0..active {
            let sides2 = sides(i2);
            let mut sum = 0.0;
            for &s1 in sides1 {
                for &s2 in sides2 {
                    sum += (term(i1, s1, i2, s2) + term(i2, s2, i1, s1)).norm_sqr();
                }
            }
            inner += w1 * w(i2) * sum / (sides1.len() * sides2.len()) as f64;
        }
    }
    // One photon still left of the qubit: χ = −(V/√2)φ(x1 − t)G(x2).
    let g_sq: f64 = (0..active)
        .map(|i| {
            let sides = sides(i);
            let mean: f64 = sides
                .iter()
                .map(|&s| {
                    let mut g = Complex64::new(0.0, 0.0);
                    if within(i, s, 0, n) {
                        g += exact.amp[n - i];
                    }
                    if within(i, s, m2, n + m2) {
                        g -= exact.amp[n + m2 - i];
                    }
                    g.norm_sqr()
                })
                .sum::<f64>()
                / sides.len() as f64;
            w(i) * mean
        })
        .sum();
    let strip = left_packet_mass(cfg, lattice, n as f64 * dt) * g_sq;
    Ok(0.5 * v2 * (inner + 2.0 * strip))
}

/// Outcome of marching the region left of the qubit on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeftRegionCheck {
    /// Largest |ψ − φ(x−t)e_sm(t)| over lattice sites x < −a, t ≤ t_end.
    pub max_abs_error: f64,
    /// Characteristics marched.
    pub characteristics: usize,
}

/// Marches every characteristic left of the qubit with the same trapezoidal
/// scheme as the full solver (only the delayed self-term acts there) and
/// compares with the exact product solution.
pub fn evolve_left_region(
    cfg: &PhysicalConfig,
    lattice: &LatticeSpec,
    t_end: f64,
    fault: Option<Fault>,
) -> Result<LeftRegionCheck> {
    cfg.validate()?;
    lattice.validate(cfg)?;
    let dt = lattice.dt;
    let m2 = 2 * lattice
        .mirror_sites(cfg)
        .ok_or_else(|| invalid("geometry", "mirror required"))?;
    let n_end = ((t_end / dt).round() as usize).min(lattice.n_steps());
    let depth = left_depth(cfg, lattice);
    let packet = packet_samples(cfg, dt, depth + n_end + 1);
    let esm = e_sm_samples(cfg, dt, n_end)?;
    let e_step = (-cfg.qubit_exponent() * dt).exp();
    let hg = cfg.gamma / 2.0;
    let delay_on = fault != Some(Fault::SkipMirrorDelay);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut ring = vec![Complex64::new(0.0, 0.0); m2 + 1];
    // Characteristic ξ = −a − q·dt stays left of the qubit for steps n < q.
    for q in 1..(depth + n_end) {
        let x_start_steps = q as isize - depth as isize;
        let n_first = x_start_steps.max(0) as usize;
        if n_first >= q.min(n_end + 1) {
            continue;
        }
        count += 1;
        let mut u = packet[q];
        ring.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        ring[0] = u;
        let last = (q - 1).min(n_end);
        for n in 0..=last {
            if n >= n_first {
                worst = worst.max((u - packet[q] * esm[n]).norm());
            }
            if n == last {
                break;
            }
            let mut next = e_step * u;
            if delay_on && n >= m2 {
                let d0 = ring[(n - m2) % (m2 + 1)];
                let d1 = ring[(n + 1 - m2) % (m2 + 1)];
                next += (e_step * d0 + d1) * (0.5 * dt * hg);
            }
            u = next;
            ring[(n + 1) % (m2 + 1)] = u;
        }
    }
    Ok(LeftRegionCheck {
        max_abs_error: worst,
        characteristics: count,
    })
}
