//! Split-operator propagation of a single configuration.
//!
//! Kinetic factors are applied in momentum space through a forward/inverse
//! FFT pair, potential and dipole-coupling factors pointwise in position
//! space. Steps are composed with the BM4 coefficients of
//! [`crate::splitting`]. A multiplicative edge mask removes outgoing flux.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::physics::{LaserParams, Potential};
use crate::splitting;

/// Uniform periodic grid `x_j = x_min + j dx`, `j = 0..n`, `dx = (x_max - x_min)/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", "grid needs at least two points"));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::invalid("x_max", "domain must satisfy x_min < x_max"));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// Centred grid on `[-half_width, half_width)`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Momenta in FFT storage order.
    pub fn momenta(&self) -> Vec<f64> {
        let dk = 2.0 * PI / (self.x_max - self.x_min);
        (0..self.n)
            .map(|k| {
                let m = if k <= (self.n - 1) / 2 { k as f64 } else { k as f64 - self.n as f64 };
                m * dk
            })
            .collect()
    }

    /// Nyquist momentum `pi / dx`.
    pub fn p_max(&self) -> f64 {
        PI / self.dx()
    }

    /// Index of the grid point nearest `x`, if inside the domain.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        if x < self.x_min || x > self.x_max {
            return None;
        }
        let j = ((x - self.x_min) / self.dx()).round() as usize;
        Some(j.min(self.n - 1))
    }

    /// Largest momentum a returning electron reaches with margin,
    /// `sqrt(2 (3.17 U_p + 3 I_p))`, against the grid's Nyquist momentum.
    pub fn resolves(&self, laser: &LaserParams, ionization_potential: f64) -> bool {
        let e = 3.17 * laser.ponderomotive_energy() + 3.0 * ionization_potential;
        self.p_max() >= 2.0 * (2.0 * e).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub grid: Grid,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl Wavefunction {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.n],
            time: 0.0,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid,
            amplitudes: (0..grid.n).map(|j| f(grid.x(j))).collect(),
            time: 0.0,
        }
    }

    /// Normalised Gaussian packet `exp(-(x - x0)^2 / 4 w^2 + i p0 x)`, with `w`
    /// the standard deviation of `|psi|^2`.
    pub fn gaussian(grid: Grid, center: f64, width: f64, momentum: f64) -> Self {
        let mut psi = Self::from_fn(grid, |x| {
            let u = x - center;
            Complex64::from_polar((-u * u / (4.0 * width * width)).exp(), momentum * x)
        });
        psi.normalize().expect("gaussian inside grid");
        psi
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// `<self|other>` with the `dx` quadrature weight.
    pub fn inner(&self, other: &Wavefunction) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|c| *c *= s);
        Ok(())
    }

    /// `<x>` divided by the current norm.
    pub fn position_expectation(&self) -> Result<f64> {
        self.weighted_mean(|j| self.grid.x(j))
    }

    fn weighted_mean(&self, f: impl Fn(usize) -> f64) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, c) in self.amplitudes.iter().enumerate() {
            let w = c.norm_sqr();
            num += w * f(j);
            den += w;
        }
        if !(den > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(num / den)
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Static potential and its gradient sampled on the grid, plus the laser.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub grid: Grid,
    pub potential: Vec<f64>,
    pub gradient: Vec<f64>,
    pub laser: Option<LaserParams>,
}

impl Hamiltonian {
    pub fn new(grid: Grid, potential: &dyn Potential, laser: Option<LaserParams>) -> Self {
        let xs = grid.positions();
        Self {
            grid,
            potential: xs.iter().map(|&x| potential.value(x)).collect(),
            gradient: xs.iter().map(|&x| potential.gradient(x)).collect(),
            laser,
        }
    }

    pub fn field(&self, t: f64) -> f64 {
        self.laser.map_or(0.0, |l| l.field(t))
    }
}

/// Edge mask: one in the interior, `cos^(1/8)` roll-off to zero across a
/// band at each end of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Absorber {
    mask: Vec<f64>,
}

impl Absorber {
    /// `fraction` of the domain length used as the band on each side.
    pub fn new(grid: &Grid, fraction: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&fraction) {
            return Err(Error::invalid("absorber_fraction", "must lie in [0, 0.5)"));
        }
        let band = fraction * (grid.x_max - grid.x_min);
        let lo = grid.x_min + band;
        let hi = grid.x_max - band;
        let mask = grid
            .positions()
            .into_iter()
            .map(|x| {
                let depth = if x < lo {
                    (lo - x) / band
                } else if x > hi {
                    (x - hi) / band
                } else {
                    return 1.0;
                };
                (0.5 * PI * depth.min(1.0)).cos().max(0.0).powf(0.125)
            })
            .collect();
        Ok(Self { mask })
    }

    pub fn values(&self) -> &[f64] {
        &self.mask
    }

    pub fn apply(&self, psi: &mut Wavefunction) {
        for (c, m) in psi.amplitudes.iter_mut().zip(&self.mask) {
            *c *= *m;
        }
    }
}

/// `-<V'(x)>/<psi|psi> - F(t)`: Ehrenfest form of `d^2<x>/dt^2`.
pub fn dipole_accel_instant(psi: &Wavefunction, gradient: &[f64], field: f64) -> Result<f64> {
    let mean_grad = psi.weighted_mean(|j| gradient[j])?;
    Ok(-mean_grad - field)
}

struct Transforms {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Transforms {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// FFT, pointwise multiply, inverse FFT. `table` carries the `1/n`.
    fn apply_diagonal(&mut self, data: &mut [Complex64], table: &[Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
        for (c, t) in data.iter_mut().zip(table) {
            *c *= *t;
        }
        self.inverse.process_with_scratch(data, &mut self.scratch);
    }
}

/// Multiplies `data[j]` by `exp(-i theta x_j)`; the phase is advanced by
/// recurrence and resynchronised every 64 points.
fn apply_linear_phase(data: &mut [Complex64], grid: &Grid, theta: f64) {
    if theta == 0.0 {
        return;
    }
    let dx = grid.dx();
    let step = Complex64::from_polar(1.0, -theta * dx);
    for (block, chunk) in data.chunks_mut(64).enumerate() {
        let mut z = Complex64::from_polar(1.0, -theta * grid.x(block * 64));
        for c in chunk {
            *c *= z;
            z *= step;
        }
    }
}

/// Everything one step needs: phase tables for the distinct BM4
/// coefficients, the absorber and FFT plans. Not shared across threads;
/// build one per worker.
pub struct Propagator {
    grid: Grid,
    dt: f64,
    kinetic: [Vec<Complex64>; 3],
    potential: [Vec<Complex64>; 4],
    kick_times: [f64; 7],
    absorber: Option<Absorber>,
    hamiltonian: Hamiltonian,
    transforms: Transforms,
}

// Index of the distinct coefficient used by each stage.
const DRIFT_SLOT: [usize; 6] = [0, 1, 2, 2, 1, 0];
const KICK_SLOT: [usize; 7] = [0, 1, 2, 3, 2, 1, 0];

impl Propagator {
    pub fn new(hamiltonian: Hamiltonian, dt: f64, absorber: Option<Absorber>) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "time step must be non-zero and finite"));
        }
        let grid = hamiltonian.grid;
        let inv_n = 1.0 / grid.n as f64;
        let k = grid.momenta();
        let kinetic = [0, 1, 2].map(|slot| {
            let a = splitting::DRIFT[slot];
            k.iter()
                .map(|p| Complex64::from_polar(inv_n, -a * dt * 0.5 * p * p))
                .collect()
        });
        let potential = [0, 1, 2, 3].map(|slot| {
            let b = splitting::KICK[slot];
            hamiltonian
                .potential
                .iter()
                .map(|v| Complex64::from_polar(1.0, -b * dt * v))
                .collect()
        });
        Ok(Self {
            grid,
            dt,
            kinetic,
            potential,
            kick_times: splitting::kick_times(),
            absorber,
            hamiltonian,
            transforms: Transforms::new(grid.n),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn absorber(&self) -> Option<&Absorber> {
        self.absorber.as_ref()
    }

    /// One BM4 step from `psi.time` to `psi.time + dt`, then the absorber.
    pub fn step(&mut self, psi: &mut Wavefunction) {
        debug_assert_eq!(psi.grid, self.grid);
        let t = psi.time;
        let data = psi.amplitudes.as_mut_slice();
        for stage in 0..7 {
            let slot = KICK_SLOT[stage];
            for (c, p) in data.iter_mut().zip(&self.potential[slot]) {
                *c *= *p;
            }
            let field = self.hamiltonian.field(t + self.kick_times[stage] * self.dt);
            apply_linear_phase(data, &self.grid, splitting::KICK[slot] * self.dt * field);
            if stage < 6 {
                self.transforms.apply_diagonal(data, &self.kinetic[DRIFT_SLOT[stage]]);
            }
        }
        if let Some(abs) = &self.absorber {
            abs.apply(psi);
        }
        psi.time = t + self.dt;
    }

    pub fn apply_absorber(&self, psi: &mut Wavefunction) {
        if let Some(abs) = &self.absorber {
            abs.apply(psi);
        }
    }

    pub fn dipole_acceleration(&self, psi: &Wavefunction) -> Result<f64> {
        dipole_accel_instant(psi, &self.hamiltonian.gradient, self.hamiltonian.field(psi.time))
    }

    /// Advances `psi` through `steps` steps, sampling observables every
    /// `options.stride` steps (including step 0) and taking snapshots at the
    /// steps nearest each probe time.
    pub fn propagate(&mut self, mut psi: Wavefunction, steps: usize, options: &RecordOptions) -> Result<(Wavefunction, Trajectory)> {
        let stride = options.stride.max(1);
        let t_start = psi.time;
        let probe_steps: Vec<usize> = options
            .probe_times
            .iter()
            .map(|&tp| ((tp - t_start) / self.dt).round().max(0.0) as usize)
            .collect();
        let mut traj = Trajectory {
            t_start,
            dt: self.dt * stride as f64,
            position: Vec::with_capacity(steps / stride + 1),
            acceleration: Vec::with_capacity(steps / stride + 1),
            norm: Vec::with_capacity(steps / stride + 1),
            snapshots: Vec::with_capacity(probe_steps.len()),
        };
        for k in 0..=steps {
            if k > 0 {
                self.step(&mut psi);
            }
            if k % stride == 0 {
                traj.position.push(psi.position_expectation()?);
                traj.acceleration.push(self.dipole_acceleration(&psi)?);
                traj.norm.push(psi.norm());
            }
            for (slot, &ps) in probe_steps.iter().enumerate() {
                if ps == k {
                    debug_assert_eq!(traj.snapshots.len(), slot);
                    traj.snapshots.push(psi.clone());
                }
            }
        }
        if traj.snapshots.len() != probe_steps.len() {
            return Err(Error::invalid("probe_times", "probe time lies beyond the schedule"));
        }
        Ok((psi, traj))
    }
}

/// What [`Propagator::propagate`] records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordOptions {
    pub stride: usize,
    pub probe_times: Vec<f64>,
}

/// Recorded observables of one propagation on the time axis
/// `t_start + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t_start: f64,
    pub dt: f64,
    pub position: Vec<f64>,
    pub acceleration: Vec<f64>,
    pub norm: Vec<f64>,
    pub snapshots: Vec<Wavefunction>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t_start + k as f64 * self.dt).collect()
    }
}

/// Controls for imaginary-time relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    pub dtau: f64,
    /// Stop once the energy changes by less than this per step.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            dtau: 0.05,
            tolerance: 1e-10,
            max_iterations: 200_000,
        }
    }
}

/// `<psi|H|psi>/<psi|psi>` with the kinetic term evaluated spectrally.
pub fn energy(psi: &Wavefunction, potential: &[f64]) -> Result<f64> {
    let n = psi.grid.n;
    let mut work = psi.amplitudes.clone();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut work);
    let kinetic: f64 = work
        .iter()
        .zip(psi.grid.momenta())
        .map(|(c, p)| 0.5 * p * p * c.norm_sqr())
        .sum::<f64>()
        / n as f64;
    let pot: f64 = psi.amplitudes.iter().zip(potential).map(|(c, v)| v * c.norm_sqr()).sum();
    let den: f64 = psi.amplitudes.iter().map(|c| c.norm_sqr()).sum();
    if !(den > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok((kinetic + pot) / den)
}

/// Lowest eigenstate by imaginary-time relaxation with Strang splitting.
///
/// Starts from an even Gaussian at the origin; returns the normalised
/// state and its Rayleigh-quotient energy.
pub fn ground_state(grid: Grid, potential: &dyn Potential, options: GroundStateOptions) -> Result<(Wavefunction, f64)> {
    let v: Vec<f64> = grid.positions().iter().map(|&x| potential.value(x)).collect();
    let half_kick: Vec<f64> = v.iter().map(|v| (-0.5 * options.dtau * v).exp()).collect();
    let inv_n = 1.0 / grid.n as f64;
    let drift: Vec<Complex64> = grid
        .momenta()
        .iter()
        .map(|p| Complex64::new(inv_n * (-options.dtau * 0.5 * p * p).exp(), 0.0))
        .collect();
    let mut transforms = Transforms::new(grid.n);

    let mut psi = Wavefunction::gaussian(grid, 0.0, 1.0, 0.0);
    let mut e_prev = energy(&psi, &v)?;
    for iteration in 1..=options.max_iterations {
        for (c, h) in psi.amplitudes.iter_mut().zip(&half_kick) {
            *c *= *h;
        }
        transforms.apply_diagonal(&mut psi.amplitudes, &drift);
        for (c, h) in psi.amplitudes.iter_mut().zip(&half_kick) {
            *c *= *h;
        }
        psi.normalize()?;
        let e = energy(&psi, &v)?;
        if !e.is_finite() {
            return Err(Error::GroundStateNotConverged { iterations: iteration, energy: e });
        }
        if (e - e_prev).abs() < options.tolerance {
            return Ok((psi, e));
        }
        e_prev = e;
    }
    Err(Error::GroundStateNotConverged {
        iterations: options.max_iterations,
        energy: e_prev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{AtomParams, FreeSpace, Harmonic};

    fn small_grid() -> Grid {
        Grid::symmetric(40.0, 512).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = Grid::new(-10.0, 10.0, 8).unwrap();
        assert_eq!(g.dx(), 2.5);
        assert_eq!(g.x(4), 0.0);
        assert_eq!(g.index_of(0.1), Some(4));
        assert_eq!(g.index_of(11.0), None);
        let k = g.momenta();
        assert_eq!(k[0], 0.0);
        assert!(k[7] < 0.0);
        assert!(Grid::new(1.0, 0.0, 8).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn harmonic_ground_state() {
        let grid = small_grid();
        let (psi, e) = ground_state(grid, &Harmonic { stiffness: 1.0 }, GroundStateOptions::default()).unwrap();
        assert!((e - 0.5).abs() < 1e-4, "E = {e}");
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_even_and_nodeless() {
        let grid = Grid::symmetric(60.0, 1024).unwrap();
        let (psi, _) = ground_state(grid, &AtomParams::default().potential(), GroundStateOptions::default()).unwrap();
        let n = grid.n;
        let re: Vec<f64> = psi.amplitudes.iter().map(|c| c.re).collect();
        let sign = re[n / 2].signum();
        let peak = re[n / 2].abs();
        for j in 1..n / 2 {
            assert!((re[n / 2 + j] - re[n / 2 - j]).abs() < 1e-10 * peak);
            let v = re[n / 2 + j] * sign;
            assert!(v > -1e-12 * peak, "node at j={j}");
        }
    }

    #[test]
    fn ground_state_iteration_cap() {
        let opts = GroundStateOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let err = ground_state(small_grid(), &Harmonic { stiffness: 1.0 }, opts).unwrap_err();
        assert!(matches!(err, Error::GroundStateNotConverged { iterations: 3, .. }));
    }

    #[test]
    fn unitary_step_without_absorber() {
        let grid = small_grid();
        let laser = LaserParams::new(0.05, 0.057, 1, 1, 1).unwrap();
        let h = Hamiltonian::new(grid, &AtomParams::default().potential(), Some(laser));
        let mut prop = Propagator::new(h, 0.05, None).unwrap();
        let mut psi = Wavefunction::gaussian(grid, 1.0, 1.5, 0.4);
        psi.time = 30.0;
        for _ in 0..10 {
            let before = psi.norm();
            prop.step(&mut psi);
            assert!((psi.norm() - before).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_phase_matches_direct_evaluation() {
        let grid = Grid::symmetric(100.0, 1000).unwrap();
        let mut data = vec![Complex64::new(1.0, 0.0); grid.n];
        apply_linear_phase(&mut data, &grid, 0.37);
        for (j, c) in data.iter().enumerate() {
            let direct = Complex64::from_polar(1.0, -0.37 * grid.x(j));
            assert!((c - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn absorber_properties() {
        let grid = Grid::symmetric(100.0, 1024).unwrap();
        let abs = Absorber::new(&grid, 0.1).unwrap();
        assert!(abs.values().iter().all(|m| (0.0..=1.0).contains(m)));

        let inside = Wavefunction::gaussian(grid, 0.0, 5.0, 0.0);
        let mut masked = inside.clone();
        abs.apply(&mut masked);
        let diff = inside
            .amplitudes
            .iter()
            .zip(&masked.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);

        let mut edge = Wavefunction::gaussian(grid, 90.0, 1.0, 0.0);
        let n0 = edge.norm();
        abs.apply(&mut edge);
        assert!(edge.norm() < n0);

        let mut twice = Wavefunction::gaussian(grid, 85.0, 3.0, 0.0);
        let mut squared = twice.clone();
        abs.apply(&mut twice);
        abs.apply(&mut twice);
        for (c, m) in squared.amplitudes.iter_mut().zip(abs.values()) {
            *c = *c * *m * *m;
        }
        assert_eq!(twice, squared);
    }

    #[test]
    fn free_packet_dispersion() {
        let grid = Grid::symmetric(200.0, 2048).unwrap();
        let w0 = 2.0;
        let h = Hamiltonian::new(grid, &FreeSpace, None);
        let mut prop = Propagator::new(h, 0.1, None).unwrap();
        let psi0 = Wavefunction::gaussian(grid, 0.0, w0, 0.0);
        let (psi, _) = prop.propagate(psi0, 200, &RecordOptions { stride: 200, probe_times: vec![] }).unwrap();
        let t = psi.time;
        let mean = psi.position_expectation().unwrap();
        let var = psi
            .density()
            .iter()
            .enumerate()
            .map(|(j, d)| d * (grid.x(j) - mean).powi(2))
            .sum::<f64>()
            * grid.dx()
            / psi.norm();
        let expected = w0 * w0 + (t / (2.0 * w0)).powi(2);
        assert!((var.sqrt() - expected.sqrt()).abs() / expected.sqrt() < 1e-4);
    }

    #[test]
    fn stationary_ground_state_has_zero_acceleration() {
        let grid = Grid::symmetric(60.0, 1024).unwrap();
        let atom = AtomParams::default().potential();
        let (psi, _) = ground_state(grid, &atom, GroundStateOptions::default()).unwrap();
        let h = Hamiltonian::new(grid, &atom, None);
        let a = dipole_accel_instant(&psi, &h.gradient, 0.0).unwrap();
        assert!(a.abs() < 1e-8, "a = {a}");
        assert!(matches!(
            dipole_accel_instant(&Wavefunction::zeros(grid), &h.gradient, 0.0),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn zero_length_schedule_records_initial_state() {
        let grid = small_grid();
        let h = Hamiltonian::new(grid, &FreeSpace, None);
        let mut prop = Propagator::new(h, 0.1, None).unwrap();
        let psi0 = Wavefunction::gaussian(grid, 3.0, 1.0, 0.0);
        let opts = RecordOptions { stride: 4, probe_times: vec![0.0] };
        let (psi, traj) = prop.propagate(psi0.clone(), 0, &opts).unwrap();
        assert_eq!(psi, psi0);
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.snapshots.len(), 1);
        assert!((traj.position[0] - 3.0).abs() < 1e-10);
    }
}
