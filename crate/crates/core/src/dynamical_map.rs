//! The qubit dynamical map built from (p_g, p_e, c).
//!
//! Basis ordering is (e, g). The map sends
//! ρ_ee → p_e ρ_ee + p_g ρ_gg and ρ_eg → c ρ_eg, so it is trace preserving by
//! construction. The Bloch vector is r = (2 Re ρ_ge, 2 Im ρ_ge, ρ_gg − ρ_ee).

use std::io::{self, Write};

use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::Rng;

use crate::closed_form::{
    closed_form_resonant, closed_form_resonant_derivative, spontaneous_emission,
    spontaneous_emission_derivative, MapFunctions,
};
use crate::error::{invalid, Error, Result};
use crate::one_excitation::OneExcitationSolution;
use crate::two_excitation::{overlap_c, TwoExcitationSolution};

/// Slack allowed on snapshot invariants from quadrature error.
pub const SNAPSHOT_TOL: f64 = 1e-6;

/// Choi eigenvalues above −CHOI_TOL count as completely positive.
pub const CHOI_TOL: f64 = 1e-6;

/// Slack allowed on density-matrix checks.
pub const STATE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The map at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSnapshot {
    pub t: f64,
    pub p_g: f64,
    pub p_e: f64,
    pub c: Complex64,
}

impl MapSnapshot {
    /// Identity map at time t.
    pub fn identity(t: f64) -> Self {
        Self {
            t,
            p_g: 0.0,
            p_e: 1.0,
            c: ONE,
        }
    }

    pub fn from_functions(t: f64, f: MapFunctions) -> Self {
        Self {
            t,
            p_g: f.p_g,
            p_e: f.p_e,
            c: f.c,
        }
    }

    /// Δ = p_e − p_g.
    pub fn delta(&self) -> f64 {
        self.p_e - self.p_g
    }

    /// θ = arg c.
    pub fn theta(&self) -> f64 {
        self.c.arg()
    }

    /// det M = |c|²Δ.
    pub fn det_m(&self) -> f64 {
        self.c.norm_sqr() * self.delta()
    }

    /// Checks 0 ≤ p_g, p_e ≤ 1 and |c| ≤ 1 up to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let finite = self.t.is_finite()
            && self.p_g.is_finite()
            && self.p_e.is_finite()
            && self.c.re.is_finite()
            && self.c.im.is_finite();
        if !finite {
            return Err(invalid("snapshot", "non-finite entry"));
        }
        for (name, p) in [("p_g", self.p_g), ("p_e", self.p_e)] {
            if p < -tol || p > 1.0 + tol {
                return Err(invalid(
                    name,
                    format!("{p} outside [0, 1] at t = {}", self.t),
                ));
            }
        }
        if self.c.norm() > 1.0 + tol {
            return Err(invalid("c", format!("|c| = {} exceeds 1", self.c.norm())));
        }
        Ok(())
    }

    /// Copy with populations clamped to [0, 1] and |c| ≤ 1, for reporting.
    pub fn clamped(&self) -> Self {
        let n = self.c.norm();
        Self {
            t: self.t,
            p_g: self.p_g.clamp(0.0, 1.0),
            p_e: self.p_e.clamp(0.0, 1.0),
            c: if n > 1.0 { self.c / n } else { self.c },
        }
    }
}

/// A qubit density matrix in the (e, g) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    rho: Matrix2<Complex64>,
}

impl QubitState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(rho: Matrix2<Complex64>) -> Result<Self> {
        let s = Self { rho };
        s.check()?;
        Ok(s)
    }

    /// State with Bloch vector r, ‖r‖ ≤ 1.
    pub fn from_bloch(r: Vector3<f64>) -> Result<Self> {
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidState("non-finite Bloch vector".into()));
        }
        if r.norm() > 1.0 + STATE_TOL {
            return Err(Error::InvalidState(format!("|r| = {} exceeds 1", r.norm())));
        }
        Ok(Self::from_bloch_unchecked(r))
    }

    fn from_bloch_unchecked(r: Vector3<f64>) -> Self {
        let ge = Complex64::new(r.x, r.y) / 2.0;
        Self {
            rho: Matrix2::new(
                Complex64::new((1.0 - r.z) / 2.0, 0.0),
                ge.conj(),
                ge,
                Complex64::new((1.0 + r.z) / 2.0, 0.0),
            ),
        }
    }

    pub fn excited() -> Self {
        Self::from_bloch_unchecked(Vector3::new(0.0, 0.0, -1.0))
    }

    pub fn ground() -> Self {
        Self::from_bloch_unchecked(Vector3::new(0.0, 0.0, 1.0))
    }

    /// Uniformly distributed in the Bloch ball.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let r = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if r.norm() <= 1.0 {
                return Self::from_bloch_unchecked(r);
            }
        }
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.rho
    }

    pub fn rho_ee(&self) -> f64 {
        self.rho[(0, 0)].re
    }

    pub fn rho_gg(&self) -> f64 {
        self.rho[(1, 1)].re
    }

    pub fn rho_eg(&self) -> Complex64 {
        self.rho[(0, 1)]
    }

    pub fn rho_ge(&self) -> Complex64 {
        self.rho[(1, 0)]
    }

    pub fn bloch(&self) -> Vector3<f64> {
        let ge = self.rho_ge();
        Vector3::new(2.0 * ge.re, 2.0 * ge.im, self.rho_gg() - self.rho_ee())
    }

    /// ½‖ρ − σ‖₁, equal to half the Bloch-vector distance for qubits.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        0.5 * (self.bloch() - other.bloch()).norm()
    }

    fn check(&self) -> Result<()> {
        let m = &self.rho;
        if m.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        if (m[(0, 1)] - m[(1, 0)].conj()).norm() > STATE_TOL
            || m[(0, 0)].im.abs() > STATE_TOL
            || m[(1, 1)].im.abs() > STATE_TOL
        {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let tr = m[(0, 0)] + m[(1, 1)];
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        if self.bloch().norm() > 1.0 + STATE_TOL {
            return Err(Error::InvalidState("negative eigenvalue".into()));
        }
        Ok(())
    }
}

/// Φ_t[ρ0]: ρ_ee = p_e − Δ ρ_gg(0), ρ_eg = c ρ_eg(0).
pub fn apply_map(snap: &MapSnapshot, rho0: &QubitState) -> Result<QubitState> {
    snap.validate(SNAPSHOT_TOL)?;
    rho0.check()?;
    Ok(apply_unchecked(snap, rho0))
}

pub(crate) fn apply_unchecked(snap: &MapSnapshot, rho0: &QubitState) -> QubitState {
    let ee = snap.p_e - snap.delta() * rho0.rho_gg();
    let eg = snap.c * rho0.rho_eg();
    QubitState {
        rho: Matrix2::new(
            Complex64::new(ee, 0.0),
            eg,
            eg.conj(),
            Complex64::new(1.0 - ee, 0.0),
        ),
    }
}

/// Bloch affine pair: r(t) = M r(0) + v.
pub fn bloch_affine(snap: &MapSnapshot) -> (Matrix3<f64>, Vector3<f64>) {
    let (re, im) = (snap.c.re, snap.c.im);
    let m = Matrix3::new(re, im, 0.0, -im, re, 0.0, 0.0, 0.0, snap.delta());
    let v = Vector3::new(0.0, 0.0, 1.0 - snap.p_e - snap.p_g);
    (m, v)
}

/// Choi matrix Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|) in the (e, g) ⊗ (e, g) basis.
pub fn choi_matrix(snap: &MapSnapshot) -> Matrix4<Complex64> {
    let unit = |i: usize, j: usize| {
        let mut m = Matrix2::<Complex64>::zeros();
        m[(i, j)] = ONE;
        m
    };
    let image = |i: usize, j: usize| -> Matrix2<Complex64> {
        match (i, j) {
            (0, 0) => Matrix2::new(
                Complex64::new(snap.p_e, 0.0),
                ZERO,
                ZERO,
                Complex64::new(1.0 - snap.p_e, 0.0),
            ),
            (1, 1) => Matrix2::new(
                Complex64::new(snap.p_g, 0.0),
                ZERO,
                ZERO,
                Complex64::new(1.0 - snap.p_g, 0.0),
            ),
            (0, 1) => unit(0, 1) * snap.c,
            _ => unit(1, 0) * snap.c.conj(),
        }
    };
    let mut choi = Matrix4::<Complex64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let block = image(i, j);
            for a in 0..2 {
                for b in 0..2 {
                    choi[(2 * i + a, 2 * j + b)] = block[(a, b)];
                }
            }
        }
    }
    choi
}

/// Smallest eigenvalue of the Choi matrix.
pub fn choi_min_eigenvalue(snap: &MapSnapshot) -> f64 {
    SymmetricEigen::new(choi_matrix(snap))
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v))
}

/// Choi positivity within [`CHOI_TOL`].
pub fn is_completely_positive(snap: &MapSnapshot) -> bool {
    choi_min_eigenvalue(snap) >= -CHOI_TOL
}

/// Time derivatives of the map functions at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDerivative {
    pub t: f64,
    pub dp_g: f64,
    pub dp_e: f64,
    pub dc: Complex64,
}

impl MapDerivative {
    fn from_functions(t: f64, f: MapFunctions) -> Self {
        Self {
            t,
            dp_g: f.p_g,
            dp_e: f.p_e,
            dc: f.c,
        }
    }
}

/// Where the map functions come from; analytic sources supply exact
/// derivatives and off-grid values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapSource {
    /// Sampled data (solver output or user samples).
    Sampled,
    /// Infinite-waveguide closed form at resonance (Γ = 1).
    ClosedForm { alpha: f64, omega0: f64 },
    /// Pure spontaneous emission (Γ = 1).
    SpontaneousEmission { omega0: f64 },
}

/// Uniformly sampled map snapshots starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTrajectory {
    pub dt: f64,
    /// Carrier frequency removed from c before differencing or interpolation.
    pub omega0: f64,
    pub snapshots: Vec<MapSnapshot>,
    pub source: MapSource,
}

/// Minimum samples for differencing and midpoint interpolation.
const MIN_SAMPLES: usize = 4;

impl MapTrajectory {
    /// Wraps sampled (p_g, p_e, c) at t = n·dt.
    pub fn from_samples(
        dt: f64,
        omega0: f64,
        p_g: &[f64],
        p_e: &[f64],
        c: &[Complex64],
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if p_g.len() != p_e.len() || p_g.len() != c.len() {
            return Err(invalid("samples", "p_g, p_e and c lengths differ"));
        }
        if p_g.len() < MIN_SAMPLES {
            return Err(invalid("samples", format!("need at least {MIN_SAMPLES}")));
        }
        let snapshots = (0..p_g.len())
            .map(|n| MapSnapshot {
                t: n as f64 * dt,
                p_g: p_g[n],
                p_e: p_e[n],
                c: c[n],
            })
            .collect();
        Ok(Self {
            dt,
            omega0,
            snapshots,
            source: MapSource::Sampled,
        })
    }

    /// Closed-form infinite-waveguide trajectory on [0, t_max].
    pub fn closed_form(alpha: f64, omega0: f64, dt: f64, t_max: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(invalid("alpha", "must be positive"));
        }
        Self::analytic(MapSource::ClosedForm { alpha, omega0 }, omega0, dt, t_max)
    }

    /// Spontaneous-emission trajectory on [0, t_max].
    pub fn spontaneous_emission(omega0: f64, dt: f64, t_max: f64) -> Result<Self> {
        Self::analytic(MapSource::SpontaneousEmission { omega0 }, omega0, dt, t_max)
    }

    fn analytic(source: MapSource, omega0: f64, dt: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_max > 0.0) {
            return Err(invalid("dt", "dt and t_max must be positive"));
        }
        let n = (t_max / dt).round() as usize;
        if n + 1 < MIN_SAMPLES {
            return Err(invalid("t_max", "too few samples"));
        }
        let mut out = Self {
            dt,
            omega0,
            snapshots: Vec::with_capacity(n + 1),
            source,
        };
        out.snapshots = (0..=n)
            .map(|k| {
                let t = k as f64 * dt;
                MapSnapshot::from_functions(t, out.eval(t).expect("analytic source"))
            })
            .collect();
        Ok(out)
    }

    fn eval(&self, t: f64) -> Option<MapFunctions> {
        match self.source {
            MapSource::Sampled => None,
            MapSource::ClosedForm { alpha, omega0 } => Some(closed_form_resonant(t, alpha, omega0)),
            MapSource::SpontaneousEmission { omega0 } => Some(spontaneous_emission(t, omega0)),
        }
    }

    fn eval_derivative(&self, t: f64) -> Option<MapFunctions> {
        match self.source {
            MapSource::Sampled => None,
            MapSource::ClosedForm { alpha, omega0 } => {
                Some(closed_form_resonant_derivative(t, alpha, omega0))
            }
            MapSource::SpontaneousEmission { omega0 } => {
                Some(spontaneous_emission_derivative(t, omega0))
            }
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.source != MapSource::Sampled
    }

    pub fn delta(&self) -> Vec<f64> {
        self.snapshots.iter().map(MapSnapshot::delta).collect()
    }

    pub fn det_m(&self) -> Vec<f64> {
        self.snapshots.iter().map(MapSnapshot::det_m).collect()
    }

    /// Demodulated coherence c·e^{iω0t}.
    fn envelope(&self) -> Vec<Complex64> {
        self.snapshots
            .iter()
            .map(|s| s.c * Complex64::from_polar(1.0, self.omega0 * s.t))
            .collect()
    }

    /// Derivatives at every sample: analytic, or second-order differences
    /// (central inside, one-sided at the ends) of p_g, p_e and the envelope.
    pub fn derivatives(&self, analytic: bool) -> Result<Vec<MapDerivative>> {
        if analytic {
            return self
                .snapshots
                .iter()
                .map(|s| {
                    self.eval_derivative(s.t)
                        .map(|f| MapDerivative::from_functions(s.t, f))
                        .ok_or_else(|| invalid("analytic", "trajectory has no closed form"))
                })
                .collect();
        }
        let pg: Vec<f64> = self.snapshots.iter().map(|s| s.p_g).collect();
        let pe: Vec<f64> = self.snapshots.iter().map(|s| s.p_e).collect();
        let env = self.envelope();
        let dpg = difference(&pg, self.dt);
        let dpe = difference(&pe, self.dt);
        let denv = difference(&env, self.dt);
        Ok(self
            .snapshots
            .iter()
            .enumerate()
            .map(|(n, s)| MapDerivative {
                t: s.t,
                dp_g: dpg[n],
                dp_e: dpe[n],
                dc: self.remodulate(denv[n] - Complex64::new(0.0, self.omega0) * env[n], s.t),
            })
            .collect())
    }

    fn remodulate(&self, v: Complex64, t: f64) -> Complex64 {
        v * Complex64::from_polar(1.0, -self.omega0 * t)
    }

    /// Snapshots and derivatives at t_n + dt/2 for n = 0..len−1: analytic, or
    /// four-point Lagrange interpolation of the sampled values and derivatives.
    pub fn midpoints(&self, analytic: bool) -> Result<(Vec<MapSnapshot>, Vec<MapDerivative>)> {
        let count = self.len() - 1;
        let times: Vec<f64> = (0..count).map(|n| self.time(n) + self.dt / 2.0).collect();
        if analytic {
            let mut snaps = Vec::with_capacity(count);
            let mut ders = Vec::with_capacity(count);
            for &t in &times {
                let (f, d) = self
                    .eval(t)
                    .zip(self.eval_derivative(t))
                    .ok_or_else(|| invalid("analytic", "trajectory has no closed form"))?;
                snaps.push(MapSnapshot::from_functions(t, f));
                ders.push(MapDerivative::from_functions(t, d));
            }
            return Ok((snaps, ders));
        }
        let der = self.derivatives(false)?;
        let env = self.envelope();
        let denv: Vec<Complex64> = der
            .iter()
            .map(|d| d.dc * Complex64::from_polar(1.0, self.omega0 * d.t))
            .collect();
        let pg: Vec<f64> = self.snapshots.iter().map(|s| s.p_g).collect();
        let pe: Vec<f64> = self.snapshots.iter().map(|s| s.p_e).collect();
        let dpg: Vec<f64> = der.iter().map(|d| d.dp_g).collect();
        let dpe: Vec<f64> = der.iter().map(|d| d.dp_e).collect();
        let mut snaps = Vec::with_capacity(count);
        let mut ders = Vec::with_capacity(count);
        for (n, &t) in times.iter().enumerate() {
            snaps.push(MapSnapshot {
                t,
                p_g: midpoint(&pg, n),
                p_e: midpoint(&pe, n),
                c: self.remodulate(midpoint(&env, n), t),
            });
            ders.push(MapDerivative {
                t,
                dp_g: midpoint(&dpg, n),
                dp_e: midpoint(&dpe, n),
                dc: self.remodulate(midpoint(&denv, n), t),
            });
        }
        Ok((snaps, ders))
    }

    /// Smallest Choi eigenvalue per sample.
    pub fn choi_min_eigenvalues(&self) -> Vec<f64> {
        self.snapshots.iter().map(choi_min_eigenvalue).collect()
    }

    /// CSV with columns t, p_g, p_e, re_c, im_c, delta, det_M, choi_min_eig.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,p_g,p_e,re_c,im_c,delta,det_M,choi_min_eig")?;
        for s in &self.snapshots {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                s.t,
                s.p_g,
                s.p_e,
                s.c.re,
                s.c.im,
                s.delta(),
                s.det_m(),
                choi_min_eigenvalue(s)
            )?;
        }
        Ok(())
    }
}

/// Second-order finite differences on a uniform grid.
fn difference<T>(y: &[T], dt: f64) -> Vec<T>
where
    T: Copy
        + std::ops::Sub<Output = T>
        + std::ops::Mul<f64, Output = T>
        + std::ops::Add<Output = T>,
{
    let n = y.len();
    let inv = 1.0 / (2.0 * dt);
    (0..n)
        .map(|k| {
            if k == 0 {
                (y[1] * 4.0 - y[0] * 3.0 - y[2]) * inv
            } else if k == n - 1 {
                (y[n - 1] * 3.0 - y[n - 2] * 4.0 + y[n - 3]) * inv
            } else {
                (y[k + 1] - y[k - 1]) * inv
            }
        })
        .collect()
}

/// Value at sample n + 1/2 from a four-point Lagrange stencil.
fn midpoint<T>(y: &[T], n: usize) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let start = n.saturating_sub(1).min(y.len() - 4);
    let x = (n - start) as f64 + 0.5;
    let mut acc = y[start] * 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if j != i {
                l *= (x - j as f64) / (i as f64 - j as f64);
            }
        }
        acc = acc + y[start + i] * l;
    }
    acc
}

/// Dynamical map from the two scattering processes on a shared lattice:
/// p_g = |e(t)|², p_e = ‖ψ‖², c = ⟨φ|ψ⟩.
pub fn build_trajectory(
    one: &OneExcitationSolution,
    two: &TwoExcitationSolution,
) -> Result<MapTrajectory> {
    let c = overlap_c(one, two)?;
    MapTrajectory::from_samples(
        one.lattice.dt,
        one.cfg.omega0,
        &one.p_g,
        &two.p_e,
        &c.values,
    )
}
