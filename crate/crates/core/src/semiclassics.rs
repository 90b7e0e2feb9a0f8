//! Classical companion models.
//!
//! Simple-man (SFA) trajectories under a constant-envelope field
//! `F(t) = F_L sin(omega t)` with the force `-F(t)`, their returns to the
//! origin or to a perturber at distance `l`, the momentum-reversal
//! backscattering channel, and the full classical flow of the model
//! Hamiltonian with Newton shooting for period-one orbits.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::physics::{LaserParams, Potential};
use crate::splitting;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpacePoint {
    pub x: f64,
    pub p: f64,
}

impl PhaseSpacePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn distance(&self, other: &PhaseSpacePoint) -> f64 {
        (self.x - other.x).hypot(self.p - other.p)
    }
}

impl std::ops::Neg for PhaseSpacePoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.p)
    }
}

/// `x(t)` of an electron born at rest at the origin at `t_i`.
pub fn sfa_position(t: f64, t_i: f64, laser: &LaserParams) -> f64 {
    let (f, w) = (laser.amplitude, laser.omega);
    -(f / w) * (w * t_i).cos() * (t - t_i) + (f / (w * w)) * ((w * t).sin() - (w * t_i).sin())
}

pub fn sfa_momentum(t: f64, t_i: f64, laser: &LaserParams) -> f64 {
    let (f, w) = (laser.amplitude, laser.omega);
    (f / w) * ((w * t).cos() - (w * t_i).cos())
}

/// `2 U_p (cos(omega t_r) - cos(omega t_i))^2`, the laser-driven kinetic energy.
pub fn return_energy(t_r: f64, t_i: f64, laser: &LaserParams) -> f64 {
    let d = (laser.omega * t_r).cos() - (laser.omega * t_i).cos();
    2.0 * laser.ponderomotive_energy() * d * d
}

/// Which crossing a return is: the origin, or `x = +l` / `x = -l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Origin,
    Positive,
    Negative,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Origin => "0",
            Side::Positive => "+",
            Side::Negative => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfaEvent {
    pub t_i: f64,
    pub t_s: Option<f64>,
    pub ell: Option<f64>,
    pub side: Side,
    pub t_r: f64,
    pub energy: f64,
}

/// Mesh density for bracketing returns.
pub const RETURN_MESH_PER_CYCLE: usize = 2000;
/// Bisection stops once the bracket is narrower than this (a.u. of time).
pub const RETURN_TIME_TOLERANCE: f64 = 1e-10;
/// Default horizon for cutoff scans, in cycles after birth.
pub const DEFAULT_HORIZON: f64 = 1.5;

/// Roots of `f` on `(start, end]` by sign changes on a uniform mesh of
/// `cells` intervals followed by bisection.
fn crossings(f: impl Fn(f64) -> f64, start: f64, end: f64, cells: usize) -> Vec<f64> {
    let h = (end - start) / cells as f64;
    let mut roots = Vec::new();
    let mut a = start;
    let mut fa = f(a);
    for k in 1..=cells {
        let b = start + k as f64 * h;
        let fb = f(b);
        if fb == 0.0 {
            roots.push(b);
        } else if fa != 0.0 && (fa < 0.0) != (fb < 0.0) {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            while hi - lo > RETURN_TIME_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    roots
}

fn mesh_cells(horizon: f64, per_cycle: usize) -> usize {
    ((horizon * per_cycle as f64).ceil() as usize).max(1)
}

/// Times in `(t_i, t_i + horizon T_L]` where `|x(t_r)| = ell`, sorted.
pub fn find_returns(t_i: f64, ell: f64, horizon: f64, laser: &LaserParams) -> Vec<SfaEvent> {
    find_returns_with_mesh(t_i, ell, horizon, laser, RETURN_MESH_PER_CYCLE)
}

pub fn find_returns_with_mesh(t_i: f64, ell: f64, horizon: f64, laser: &LaserParams, per_cycle: usize) -> Vec<SfaEvent> {
    let end = t_i + horizon * laser.period();
    let cells = mesh_cells(horizon, per_cycle);
    let sides: &[(Side, f64)] = if ell == 0.0 {
        &[(Side::Origin, 0.0)]
    } else {
        &[(Side::Positive, 1.0), (Side::Negative, -1.0)]
    };
    let mut events: Vec<SfaEvent> = sides
        .iter()
        .flat_map(|&(side, sign)| {
            crossings(|t| sfa_position(t, t_i, laser) - sign * ell, t_i, end, cells)
                .into_iter()
                .map(move |t_r| SfaEvent {
                    t_i,
                    t_s: None,
                    ell: (ell != 0.0).then_some(ell),
                    side,
                    t_r,
                    energy: return_energy(t_r, t_i, laser),
                })
        })
        .collect();
    events.sort_by(|a, b| a.t_r.total_cmp(&b.t_r));
    events
}

/// Largest return energy over `ti_samples` birth times spread across one
/// cycle and all returns within `horizon` cycles.
pub fn max_return_energy(ell: f64, laser: &LaserParams, ti_samples: usize, horizon: f64) -> f64 {
    let period = laser.period();
    (0..ti_samples)
        .into_par_iter()
        .map(|k| {
            let t_i = k as f64 * period / ti_samples as f64;
            find_returns(t_i, ell, horizon, laser)
                .iter()
                .map(|e| e.energy)
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Free flight to `t_s`, momentum reversal there, then further motion in
/// the field.
#[derive(Debug, Clone, PartialEq)]
pub struct BackscatterPath {
    pub t_i: f64,
    pub t_s: f64,
    pub x_s: f64,
    /// Momentum just before the reversal.
    pub p_s: f64,
    pub laser: LaserParams,
    /// Returns to the origin after `t_s`.
    pub returns: Vec<SfaEvent>,
}

impl BackscatterPath {
    pub fn position(&self, t: f64) -> f64 {
        if t <= self.t_s {
            return sfa_position(t, self.t_i, &self.laser);
        }
        let (f, w) = (self.laser.amplitude, self.laser.omega);
        self.x_s + (-self.p_s - (f / w) * (w * self.t_s).cos()) * (t - self.t_s)
            + (f / (w * w)) * ((w * t).sin() - (w * self.t_s).sin())
    }

    pub fn momentum(&self, t: f64) -> f64 {
        if t <= self.t_s {
            return sfa_momentum(t, self.t_i, &self.laser);
        }
        -self.p_s + sfa_momentum(t, self.t_s, &self.laser)
    }
}

/// Backscattering at `t_s > t_i`; origin returns are searched over
/// `horizon` cycles after `t_s` and carry `p(t_r)^2 / 2`.
pub fn backscatter_trajectory(t_i: f64, t_s: f64, horizon: f64, laser: &LaserParams) -> Result<BackscatterPath> {
    if !(t_s > t_i) {
        return Err(Error::invalid("t_s", "scattering must follow ionisation"));
    }
    let mut path = BackscatterPath {
        t_i,
        t_s,
        x_s: sfa_position(t_s, t_i, laser),
        p_s: sfa_momentum(t_s, t_i, laser),
        laser: *laser,
        returns: Vec::new(),
    };
    let end = t_s + horizon * laser.period();
    let ell = path.x_s.abs();
    path.returns = crossings(|t| path.position(t), t_s, end, mesh_cells(horizon, RETURN_MESH_PER_CYCLE))
        .into_iter()
        .map(|t_r| SfaEvent {
            t_i,
            t_s: Some(t_s),
            ell: Some(ell),
            side: Side::Origin,
            t_r,
            energy: 0.5 * path.momentum(t_r).powi(2),
        })
        .collect();
    Ok(path)
}

/// 2x2 real matrix, row-major.
pub type Matrix2 = [[f64; 2]; 2];

pub fn det2(m: &Matrix2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn trace2(m: &Matrix2) -> f64 {
    m[0][0] + m[1][1]
}

/// `p^2/2 + V(x) + x F_L sin(omega t)` integrated with the BM4 kick-drift
/// composition. The tangent map is propagated through the same shears, so
/// it is the exact derivative of the discrete flow.
#[derive(Debug, Clone)]
pub struct ClassicalSystem<P> {
    pub potential: P,
    pub amplitude: f64,
    pub omega: f64,
    pub steps_per_period: usize,
}

impl<P: Potential> ClassicalSystem<P> {
    pub const DEFAULT_STEPS_PER_PERIOD: usize = 16384;

    pub fn new(potential: P, laser: &LaserParams) -> Self {
        Self {
            potential,
            amplitude: laser.amplitude,
            omega: laser.omega,
            steps_per_period: Self::DEFAULT_STEPS_PER_PERIOD,
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn field(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t).sin()
    }

    /// Instantaneous energy functional `p^2/2 + V(x) + x F(t)`.
    pub fn energy(&self, z: PhaseSpacePoint, t: f64) -> f64 {
        0.5 * z.p * z.p + self.potential.value(z.x) + z.x * self.field(t)
    }

    fn schedule(&self, t0: f64, t1: f64) -> (usize, f64) {
        let n = ((t1 - t0).abs() / self.period() * self.steps_per_period as f64).ceil().max(1.0) as usize;
        (n, (t1 - t0) / n as f64)
    }

    fn integrate(&self, z: PhaseSpacePoint, t0: f64, t1: f64, mut tangent: Option<&mut Matrix2>) -> PhaseSpacePoint {
        let (steps, h) = self.schedule(t0, t1);
        let c = splitting::kick_times();
        let (mut x, mut p) = (z.x, z.p);
        for n in 0..steps {
            let t = t0 + n as f64 * h;
            for stage in 0..7 {
                let b = splitting::KICK[stage] * h;
                p -= b * (self.potential.gradient(x) + self.field(t + c[stage] * h));
                if let Some(m) = tangent.as_deref_mut() {
                    let k = b * self.potential.curvature(x);
                    m[1][0] -= k * m[0][0];
                    m[1][1] -= k * m[0][1];
                }
                if stage < 6 {
                    let a = splitting::DRIFT[stage] * h;
                    x += a * p;
                    if let Some(m) = tangent.as_deref_mut() {
                        m[0][0] += a * m[1][0];
                        m[0][1] += a * m[1][1];
                    }
                }
            }
        }
        PhaseSpacePoint::new(x, p)
    }

    pub fn flow(&self, z: PhaseSpacePoint, t0: f64, t1: f64) -> PhaseSpacePoint {
        self.integrate(z, t0, t1, None)
    }

    pub fn flow_with_tangent(&self, z: PhaseSpacePoint, t0: f64, t1: f64) -> (PhaseSpacePoint, Matrix2) {
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        let end = self.integrate(z, t0, t1, Some(&mut m));
        (end, m)
    }

    /// Linearisation of the one-period map at `z`.
    pub fn monodromy(&self, z: PhaseSpacePoint, t0: f64) -> Matrix2 {
        self.flow_with_tangent(z, t0, t0 + self.period()).1
    }

    /// Dense `x(t)` along the trajectory from `z` at `t0` to `t1`, one sample
    /// per integration step.
    pub fn sample_path(&self, z: PhaseSpacePoint, t0: f64, t1: f64) -> Vec<(f64, PhaseSpacePoint)> {
        let (steps, h) = self.schedule(t0, t1);
        let mut out = Vec::with_capacity(steps + 1);
        let mut cur = z;
        out.push((t0, cur));
        for n in 0..steps {
            let t = t0 + n as f64 * h;
            cur = self.integrate_single(cur, t, h);
            out.push((t + h, cur));
        }
        out
    }

    fn integrate_single(&self, z: PhaseSpacePoint, t: f64, h: f64) -> PhaseSpacePoint {
        let c = splitting::kick_times();
        let (mut x, mut p) = (z.x, z.p);
        for stage in 0..7 {
            p -= splitting::KICK[stage] * h * (self.potential.gradient(x) + self.field(t + c[stage] * h));
            if stage < 6 {
                x += splitting::DRIFT[stage] * h * p;
            }
        }
        PhaseSpacePoint::new(x, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Hyperbolic,
    Elliptic,
    Parabolic,
}

impl Stability {
    /// Tolerance on `|tr M| - 2` inside which the orbit is called parabolic.
    pub const TOLERANCE: f64 = 1e-6;

    pub fn classify(monodromy: &Matrix2) -> Self {
        let excess = trace2(monodromy).abs() - 2.0;
        if excess.abs() <= Self::TOLERANCE {
            Stability::Parabolic
        } else if excess > 0.0 {
            Stability::Hyperbolic
        } else {
            Stability::Elliptic
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Stability::Hyperbolic => "hyperbolic",
            Stability::Elliptic => "elliptic",
            Stability::Parabolic => "parabolic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub z_star: PhaseSpacePoint,
    pub t0: f64,
    pub monodromy: Matrix2,
    pub classification: Stability,
    pub residual: f64,
    /// `|phi(z) - z|` at every Newton iterate, the last being `residual`.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Smallest accepted `|det(M - I)|`.
    pub singular_threshold: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
            singular_threshold: 1e-9,
        }
    }
}

/// Phase-space point at `t0` of the zero-drift SFA trajectory
/// (`cos(omega t_i) = 0`) born at the latest field extremum `t_i <= t0`.
/// It touches the origin at rest at every extremum of the field.
pub fn zero_drift_guess(laser: &LaserParams, t0: f64) -> PhaseSpacePoint {
    let w = laser.omega;
    let k = ((w * t0 - 0.5 * PI) / PI).floor();
    let t_i = (k * PI + 0.5 * PI) / w;
    PhaseSpacePoint::new(sfa_position(t0, t_i, laser), sfa_momentum(t0, t_i, laser))
}

/// Newton shooting on `phi(z) - z` over one period with Jacobian `M - I`.
///
/// Each step is halved until the residual decreases (at most
/// `MAX_HALVINGS` times); near-parabolic guesses otherwise overshoot into
/// the free-flight region where the fixed point is not isolated.
pub fn find_periodic_orbit<P: Potential>(
    system: &ClassicalSystem<P>,
    guess: PhaseSpacePoint,
    t0: f64,
    options: &NewtonOptions,
) -> Result<PeriodicOrbit> {
    const MAX_HALVINGS: u32 = 12;
    let t1 = t0 + system.period();
    let evaluate = |z: PhaseSpacePoint| {
        let (end, m) = system.flow_with_tangent(z, t0, t1);
        let g = [end.x - z.x, end.p - z.p];
        (g, g[0].hypot(g[1]), m)
    };
    let mut z = guess;
    let (mut g, mut residual, mut m) = evaluate(z);
    let mut history = vec![residual];
    for _ in 0..options.max_iterations {
        if residual < options.tolerance {
            break;
        }
        let j = [[m[0][0] - 1.0, m[0][1]], [m[1][0], m[1][1] - 1.0]];
        let det = det2(&j);
        if !(det.abs() >= options.singular_threshold) {
            return Err(Error::SingularJacobian(det.abs()));
        }
        let dx = (-g[0] * j[1][1] + g[1] * j[0][1]) / det;
        let dp = (-g[1] * j[0][0] + g[0] * j[1][0]) / det;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = PhaseSpacePoint::new(z.x + scale * dx, z.p + scale * dp);
            if trial.x.is_finite() && trial.p.is_finite() {
                let (tg, tr, tm) = evaluate(trial);
                if tr < residual {
                    accepted = Some((trial, tg, tr, tm));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((nz, ng, nr, nm)) = accepted else {
            break;
        };
        (z, g, residual, m) = (nz, ng, nr, nm);
        history.push(residual);
    }
    if residual < options.tolerance {
        return Ok(PeriodicOrbit {
            z_star: z,
            t0,
            monodromy: m,
            classification: Stability::classify(&m),
            residual,
            residual_history: history,
        });
    }
    Err(Error::NewtonNotConverged {
        iterations: history.len() - 1,
        residual,
    })
}

/// The orbit reflected through the origin and shifted by half a period;
/// for an even potential it is again periodic. Verified by integration.
pub fn symmetry_partner<P: Potential>(system: &ClassicalSystem<P>, orbit: &PeriodicOrbit, tolerance: f64) -> Result<PeriodicOrbit> {
    let z = -orbit.z_star;
    let t0 = orbit.t0 + 0.5 * system.period();
    let (end, m) = system.flow_with_tangent(z, t0, t0 + system.period());
    let residual = end.distance(&z);
    if !(residual < tolerance) {
        return Err(Error::SymmetryBroken(residual));
    }
    Ok(PeriodicOrbit {
        z_star: z,
        t0,
        monodromy: m,
        classification: Stability::classify(&m),
        residual,
        residual_history: vec![residual],
    })
}

/// `x(t)` of the orbit continued periodically, sampled at `samples` evenly
/// spaced times in `[t_start, t_end]`. One period is integrated once and
/// interpolated with cubic Hermite polynomials using `dx/dt = p`.
pub fn overlay_orbit<P: Potential>(
    system: &ClassicalSystem<P>,
    orbit: &PeriodicOrbit,
    t_start: f64,
    t_end: f64,
    samples: usize,
) -> Vec<(f64, f64)> {
    let period = system.period();
    let path = system.sample_path(orbit.z_star, orbit.t0, orbit.t0 + period);
    let h = path[1].0 - path[0].0;
    let steps = path.len() - 1;
    (0..samples)
        .map(|k| {
            let t = if samples > 1 {
                t_start + (t_end - t_start) * k as f64 / (samples - 1) as f64
            } else {
                t_start
            };
            let phase = (t - orbit.t0).rem_euclid(period);
            let i = ((phase / h).floor() as usize).min(steps - 1);
            let s = (phase - i as f64 * h) / h;
            let (a, b) = (path[i].1, path[i + 1].1);
            let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
            let h10 = s * (1.0 - s) * (1.0 - s);
            let h01 = s * s * (3.0 - 2.0 * s);
            let h11 = s * s * (s - 1.0);
            (t, h00 * a.x + h10 * h * a.p + h01 * b.x + h11 * h * b.p)
        })
        .collect()
}
