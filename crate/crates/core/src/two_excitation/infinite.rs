//! Infinite waveguide: coupled right/left fields with the qubit at x = 0.
//!
//! With χ eliminated, both fields obey
//! ∂tψ = ∓∂xψ − β0ψ − (Γ/2)φ(−t)e^{−β0(t−|x|)} on the emission cone |x| ≤ t,
//! because the non-local lookups land in the source-free region where
//! ψ_R(x, t) = φ(x − t)e^{−β0 t} and ψ_L vanishes.

use num_complex::Complex64;

use super::{ExactLeft, ScatteringProbabilities, SolveOptions, TwoExcitationSolution};
use crate::config::{LatticeSpec, PhysicalConfig};
use crate::error::{Error, Result};
use crate::field::{FieldComponent, FieldHistory};
use crate::one_excitation::left_packet_mass;
use crate::quadrature::trapezoid_weight;
use crate::series::ComplexSeries;
use crate::wavepacket::packet_samples;

/// θ(k) with θ(0) = 1/2 for a signed lattice offset.
#[inline]
fn gate(k: isize) -> f64 {
    match k.signum() {
        1 => 1.0,
        0 => 0.5,
        _ => 0.0,
    }
}

/// Quadrature factor for products of fields sampled on the light-cone front
/// i = n, where each carries half its inner limit and vanishes beyond.
#[inline]
pub(super) fn front_factor(i: usize, n: usize, n_sites: usize) -> f64 {
    if i != n || i == 0 {
        1.0
    } else if i + 1 == n_sites {
        4.0
    } else {
        2.0
    }
}

pub(super) fn march(
    cfg: &PhysicalConfig,
    lattice: &LatticeSpec,
    opts: &SolveOptions<'_>,
) -> Result<TwoExcitationSolution> {
    let dt = lattice.dt;
    let n_steps = lattice.n_steps();
    let n_sites = lattice.n_sites_right(cfg);
    let packet = packet_samples(cfg, dt, n_steps + 1);
    let beta = cfg.qubit_exponent();
    let decay: Vec<Complex64> = (0..=n_steps)
        .map(|k| (-beta * (k as f64 * dt)).exp())
        .collect();
    let e_step = decay.get(1).copied().unwrap_or((-beta * dt).exp());
    let half_gamma = cfg.gamma / 2.0;
    let one = opts.overlap_with;

    let mut right = vec![Complex64::new(0.0, 0.0); n_sites];
    let mut left = vec![Complex64::new(0.0, 0.0); n_sites];
    right[0] = packet[0];
    let mut hist_r: Vec<Vec<Complex64>> = Vec::new();
    let mut hist_l: Vec<Vec<Complex64>> = Vec::new();
    let mut p_e = Vec::with_capacity(n_steps + 1);
    let mut c = Vec::with_capacity(n_steps + 1);

    for n in 0..=n_steps {
        let t = n as f64 * dt;
        let active = (n + 1).min(n_sites);
        let left_mass = left_packet_mass(cfg, lattice, t);
        let mut pe = (-cfg.gamma * t).exp() * left_mass;
        let mut cc = decay[n] * left_mass;
        for i in 0..active {
            let w = trapezoid_weight(i, n_sites, dt) * front_factor(i, n, n_sites);
            let r = if i == 0 && n == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                right[i]
            };
            pe += w * (r.norm_sqr() + left[i].norm_sqr());
            if let Some(one) = one {
                cc += w
                    * (one.field.right_inner(i, n).conj() * r
                        + one.field.left_inner(i, n).conj() * left[i]);
            }
        }
        p_e.push(pe);
        c.push(cc);
        if opts.keep_history {
            hist_r.push(right[..active].to_vec());
            hist_l.push(left[..active].to_vec());
        }
        if n == n_steps {
            break;
        }
        // Step every characteristic from (i, n) to (i + 1, n + 1).
        let src = |i: usize, nn: usize| -> Complex64 { -half_gamma * packet[nn] * decay[nn - i] };
        let top = n.min(n_sites - 2);
        for i in (0..=top).rev() {
            let g = gate(n as isize - i as isize);
            let s = (e_step * src(i, n) + src(i + 1, n + 1)) * (0.5 * dt * g);
            right[i + 1] = e_step * right[i] + s;
            left[i + 1] = e_step * left[i] + s;
        }
        right[0] = packet[n + 1] * decay[n + 1];
        left[0] = Complex64::new(0.0, 0.0);
    }

    let psi = opts.keep_history.then(|| FieldHistory {
        lattice: *lattice,
        components: vec![
            FieldComponent {
                name: "psi_R".into(),
                x_origin: 0.0,
                x_step: dt,
                frames: hist_r,
            },
            FieldComponent {
                name: "psi_L".into(),
                x_origin: 0.0,
                x_step: -dt,
                frames: hist_l,
            },
        ],
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
        exact: ExactLeft {
            packet,
            amp: decay,
            front: Vec::new(),
        },
    })
}

/// P_RR, P_RL and P_LL at sample n from the stored histories.
pub(super) fn probabilities(
    sol: &TwoExcitationSolution,
    n: usize,
) -> Result<ScatteringProbabilities> {
    let psi = sol.psi.as_ref().ok_or(Error::HistoryNotStored)?;
    let (hr, hl) = (&psi.components[0], &psi.components[1]);
    let cfg = &sol.cfg;
    let dt = sol.lattice.dt;
    let v = cfg.coupling();
    let n_sites = sol.lattice.n_sites_right(cfg);
    let active = (n + 1).min(n_sites);
    let t = n as f64 * dt;
    let exact = &sol.exact;
    // The support ends at x = t (site n), where the packet fronts of ψ_R and
    // ψ_L and the emission gates jump to zero. Quadrature there uses the
    // inner limits: gate 1 and twice the stored half-value front samples.
    let front = |j: isize, nn: usize| if j == nn as isize { 2.0 } else { 1.0 };
    // ψ_R at site j (negative: left of the qubit) and step nn.
    let r_at = |j: isize, nn: usize| -> Complex64 {
        let v = if j <= 0 {
            exact.at(j, nn)
        } else {
            hr.get(nn, j as usize)
        };
        v * front(j, nn)
    };
    // ψ_L at x = −l·dt and step nn; zero for x > 0.
    let l_at = |l: isize, nn: usize| -> Complex64 {
        if l < 0 {
            Complex64::new(0.0, 0.0)
        } else {
            hl.get(nn, l as usize) * front(l, nn)
        }
    };
    // Time gate θ(t − |x|) on the emission cone.
    let g = |i: usize| {
        if i == n {
            1.0
        } else {
            gate(n as isize - i as isize)
        }
    };

    // Trapezoid over the support [0, min(t, L)].
    let w = |i: usize| trapezoid_weight(i, active, dt);
    let mut p_rr = 0.0;
    let mut p_rl = 0.0;
    let mut p_ll = 0.0;
    for i1 in 0..active {
        let (g1, w1) = (g(i1), w(i1));
        for i2 in 0..active {
            let (g2, w2) = (g(i2), w(i2));
            let ww = w1 * w2;
            let d = i1 as isize - i2 as isize;
            // χ_RR(x1 = i1·dt, x2 = i2·dt)
            let mut rr = Complex64::new(0.0, 0.0);
            if g2 > 0.0 {
                rr += g2 * r_at(d, n - i2);
            }
            if g1 > 0.0 {
                rr += g1 * r_at(-d, n - i1);
            }
            p_rr += ww * 0.5 * v * v * rr.norm_sqr();
            // χ_RL(x1 = i1·dt, x2 = −i2·dt)
            let mut rl = Complex64::new(0.0, 0.0);
            if g2 > 0.0 {
                rl += g2 * r_at(d, n - i2);
            }
            if g1 > 0.0 {
                rl += g1 * l_at(-d, n - i1);
            }
            p_rl += ww * v * v * rl.norm_sqr();
            // χ_LL(x1 = −i1·dt, x2 = −i2·dt)
            let mut ll = Complex64::new(0.0, 0.0);
            if g2 > 0.0 {
                ll += g2 * l_at(d, n - i2);
            }
            if g1 > 0.0 {
                ll += g1 * l_at(-d, n - i1);
            }
            p_ll += ww * 0.5 * v * v * ll.norm_sqr();
        }
    }
    // Strips with one photon still left of the qubit in the incoming packet.
    let left_mass = left_packet_mass(cfg, &sol.lattice, t);
    let emitted: f64 = (0..active)
        .map(|i| w(i) * (g(i) * exact.amp[n - i]).norm_sqr())
        .sum();
    p_rr += 2.0 * 0.5 * v * v * left_mass * emitted;
    p_rl += v * v * left_mass * emitted;
    Ok(ScatteringProbabilities {
        p_rr,
        p_rl,
        p_ll,
        residual_excitation: sol.p_e[n],
    })
}
