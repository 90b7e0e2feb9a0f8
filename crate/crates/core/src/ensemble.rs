//! Conditioned propagations over sampled environments and the mixed-state
//! observables built from them.
//!
//! Every configuration is an independent pure-state propagation. The mixed
//! state is the equal-weight average of their projectors; expectation values
//! average incoherently and purity comes from the Gram matrix of the
//! members, so the density matrix is never materialised on the full grid.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::environment::{sample_ensemble, StructureParams};
use crate::error::{Error, Result};
use crate::formats::{Axis, Map2d};
use crate::physics::{AtomParams, EnvironmentConfig, LaserParams, PerturberParams, Potential};
use crate::tdse::{ground_state, Absorber, Grid, GroundStateOptions, Hamiltonian, Propagator, RecordOptions, Trajectory, Wavefunction};

/// Discretisation shared by every configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSettings {
    pub grid: Grid,
    pub dt: f64,
    pub absorber_fraction: f64,
    pub record_stride: usize,
    pub ground_state: GroundStateOptions,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            grid: Grid::symmetric(400.0, 8192).expect("valid default grid"),
            dt: 0.02,
            absorber_fraction: 0.1,
            record_stride: 4,
            ground_state: GroundStateOptions::default(),
        }
    }
}

impl PlanSettings {
    pub fn steps(&self, laser: &LaserParams) -> usize {
        (laser.duration() / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_c: usize,
    pub master_seed: u64,
    pub structure: StructureParams,
    pub perturber: PerturberParams,
    pub laser: LaserParams,
    pub atom: AtomParams,
    pub plan: PlanSettings,
    /// Snapshot times in a.u.
    pub probe_times: Vec<f64>,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_c == 0 {
            return Err(Error::invalid("n_c", "need at least one configuration"));
        }
        self.structure.validate()?;
        self.perturber.validate()?;
        self.laser.validate()?;
        self.atom.validate()?;
        if !(self.plan.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if self.plan.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be at least 1"));
        }
        let end = self.plan.steps(&self.laser) as f64 * self.plan.dt;
        if let Some(t) = self.probe_times.iter().find(|t| !(**t >= 0.0 && **t <= end + 0.5 * self.plan.dt)) {
            return Err(Error::invalid("probe_times", format!("{t} lies outside the pulse [0, {end}]")));
        }
        Ok(())
    }
}

/// Probe times every `period / per_cycle` across the whole pulse.
pub fn probe_schedule(laser: &LaserParams, per_cycle: usize) -> Vec<f64> {
    let step = laser.period() / per_cycle as f64;
    let count = laser.total_cycles() as usize * per_cycle;
    (0..=count).map(|k| k as f64 * step).collect()
}

/// Aligned per-configuration records of one ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRecord {
    pub laser: LaserParams,
    pub grid: Grid,
    pub ground_energy: f64,
    pub probe_times: Vec<f64>,
    pub configurations: Vec<EnvironmentConfig>,
    pub members: Vec<Trajectory>,
}

impl EnsembleRecord {
    pub fn n_c(&self) -> usize {
        self.members.len()
    }

    /// Snapshots of every member at probe index `k`.
    pub fn snapshots_at(&self, k: usize) -> Vec<&Wavefunction> {
        self.members.iter().map(|m| &m.snapshots[k]).collect()
    }
}

/// Propagates one configuration from the shared initial state.
pub fn propagate_configuration(spec: &EnsembleSpec, initial: &Wavefunction, env: &EnvironmentConfig) -> Result<Trajectory> {
    let atom = spec.atom.potential();
    let hamiltonian = if spec.perturber.is_gas_phase() || env.is_empty() {
        Hamiltonian::new(spec.plan.grid, &atom, Some(spec.laser))
    } else {
        let total: (_, _) = (atom, env.potential(spec.perturber));
        Hamiltonian::new(spec.plan.grid, &total as &dyn Potential, Some(spec.laser))
    };
    let absorber = if spec.plan.absorber_fraction > 0.0 {
        Some(Absorber::new(&spec.plan.grid, spec.plan.absorber_fraction)?)
    } else {
        None
    };
    let mut propagator = Propagator::new(hamiltonian, spec.plan.dt, absorber)?;
    let options = RecordOptions {
        stride: spec.plan.record_stride,
        probe_times: spec.probe_times.clone(),
    };
    let (_, trajectory) = propagator.propagate(initial.clone(), spec.plan.steps(&spec.laser), &options)?;
    Ok(trajectory)
}

/// Samples `n_c` environments (streams `0..n_c`), relaxes the bare-atom
/// ground state once and propagates every configuration on a pool of
/// `workers` threads. Results are stored in configuration order, so every
/// reduction over them is independent of the worker count.
pub fn run_ensemble(spec: &EnsembleSpec, workers: usize) -> Result<EnsembleRecord> {
    spec.validate()?;
    let configurations = sample_ensemble(spec.master_seed, &spec.structure, spec.n_c);
    let (mut initial, ground_energy) = ground_state(spec.plan.grid, &spec.atom.potential(), spec.plan.ground_state)?;
    initial.time = 0.0;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let members = pool.install(|| {
        configurations
            .par_iter()
            .enumerate()
            .map(|(index, env)| {
                propagate_configuration(spec, &initial, env).map_err(|e| Error::Configuration {
                    index,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    Ok(EnsembleRecord {
        laser: spec.laser,
        grid: spec.plan.grid,
        ground_energy,
        probe_times: spec.probe_times.clone(),
        configurations,
        members,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Position,
    DipoleAcceleration,
    Norm,
}

impl Observable {
    fn series(self, t: &Trajectory) -> &[f64] {
        match self {
            Observable::Position => &t.position,
            Observable::DipoleAcceleration => &t.acceleration,
            Observable::Norm => &t.norm,
        }
    }
}

/// Unweighted mean over members at each recorded time, summed in member
/// order.
pub fn ensemble_expectation(members: &[Trajectory], observable: Observable) -> Result<Vec<f64>> {
    let first = members.first().ok_or(Error::EmptyInput("no ensemble members"))?;
    for (i, m) in members.iter().enumerate() {
        if m.t_start != first.t_start || m.dt != first.dt || m.len() != first.len() {
            return Err(Error::Misaligned(format!("member {i} has a different time axis")));
        }
    }
    let mut mean = vec![0.0; first.len()];
    for m in members {
        for (acc, v) in mean.iter_mut().zip(observable.series(m)) {
            *acc += v;
        }
    }
    let inv = 1.0 / members.len() as f64;
    mean.iter_mut().for_each(|v| *v *= inv);
    Ok(mean)
}

/// Smooth radial filter removing the bound region: zero for
/// `|x| <= radius - width/2`, one for `|x| >= radius + width/2`, with a
/// `sin^2` ramp in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    pub radius: f64,
    pub width: f64,
}

impl Default for MaskSpec {
    fn default() -> Self {
        Self { radius: 5.0, width: 2.0 }
    }
}

impl MaskSpec {
    pub fn new(radius: f64, width: f64) -> Result<Self> {
        let m = Self { radius, width };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::invalid("mask_radius", "must be positive"));
        }
        if !(self.width >= 0.0 && self.width <= 2.0 * self.radius) {
            return Err(Error::invalid("mask_width", "must lie in [0, 2 * radius]"));
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        let inner = self.radius - 0.5 * self.width;
        let r = x.abs();
        if r <= inner {
            0.0
        } else if r >= self.radius + 0.5 * self.width {
            1.0
        } else {
            (0.5 * std::f64::consts::PI * (r - inner) / self.width).sin().powi(2)
        }
    }
}

/// Pointwise product with the mask; the result is left unnormalised.
pub fn apply_photoelectron_mask(psi: &Wavefunction, mask: &MaskSpec) -> Wavefunction {
    let mut out = psi.clone();
    for (j, c) in out.amplitudes.iter_mut().enumerate() {
        *c *= mask.value(psi.grid.x(j));
    }
    out
}

fn check_common_grid(states: &[&Wavefunction]) -> Result<Grid> {
    let first = states.first().ok_or(Error::EmptyInput("no snapshots"))?;
    for (i, s) in states.iter().enumerate() {
        if s.grid != first.grid {
            return Err(Error::Misaligned(format!("snapshot {i} lives on a different grid")));
        }
        if (s.time - first.time).abs() > 1e-9 * first.time.abs().max(1.0) {
            return Err(Error::Misaligned(format!("snapshot {i} taken at t = {} instead of {}", s.time, first.time)));
        }
    }
    Ok(first.grid)
}

/// `tr[rho^2] / tr[rho]^2` of the equal-weight mixture of `states`, from
/// the Gram matrix of the (optionally masked) members.
pub fn purity(states: &[&Wavefunction], mask: Option<&MaskSpec>) -> Result<f64> {
    check_common_grid(states)?;
    let masked: Vec<Wavefunction> = match mask {
        Some(m) => states.iter().map(|s| apply_photoelectron_mask(s, m)).collect(),
        None => states.iter().map(|s| (*s).clone()).collect(),
    };
    let n = masked.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let gram: Vec<Complex64> = pairs.par_iter().map(|&(i, j)| masked[i].inner(&masked[j])).collect();

    let mut trace = 0.0;
    let mut square = 0.0;
    for (&(i, j), g) in pairs.iter().zip(&gram) {
        if i == j {
            trace += g.re;
            square += g.norm_sqr();
        } else {
            square += 2.0 * g.norm_sqr();
        }
    }
    if !(trace > 0.0) {
        return Err(Error::PurityUndefined);
    }
    Ok(square / (trace * trace))
}

/// Purity with and without the photoelectron mask at every probe time.
#[derive(Debug, Clone, PartialEq)]
pub struct PuritySeries {
    pub times: Vec<f64>,
    pub total: Vec<f64>,
    pub photoelectron: Vec<f64>,
}

pub fn purity_series(record: &EnsembleRecord, mask: &MaskSpec) -> Result<PuritySeries> {
    let mut series = PuritySeries {
        times: Vec::with_capacity(record.probe_times.len()),
        total: Vec::with_capacity(record.probe_times.len()),
        photoelectron: Vec::with_capacity(record.probe_times.len()),
    };
    for k in 0..record.probe_times.len() {
        let states = record.snapshots_at(k);
        series.times.push(states[0].time);
        series.total.push(purity(&states, None)?);
        series.photoelectron.push(purity(&states, Some(mask))?);
    }
    Ok(series)
}

/// Sub-grid `x_min..=x_max` sampled every `stride` grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub stride: usize,
}

impl Region {
    fn indices(&self, grid: &Grid) -> Result<Vec<usize>> {
        let last = grid.x(grid.n - 1);
        if !(self.x_min >= grid.x_min && self.x_max <= last && self.x_min <= self.x_max) {
            return Err(Error::OutOfGrid(format!(
                "[{}, {}] not inside [{}, {}]",
                self.x_min, self.x_max, grid.x_min, last
            )));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride", "must be at least 1"));
        }
        let lo = ((self.x_min - grid.x_min) / grid.dx()).ceil() as usize;
        let hi = ((self.x_max - grid.x_min) / grid.dx()).floor() as usize;
        Ok((lo..=hi.min(grid.n - 1)).step_by(self.stride).collect())
    }
}

/// `|rho(x, x')|^2` with `rho(x, x') = (1/N) sum_i psi_i(x) psi_i(x')^*` on the
/// strided region.
pub fn density_matrix_map(states: &[&Wavefunction], mask: Option<&MaskSpec>, region: &Region) -> Result<Map2d> {
    let grid = check_common_grid(states)?;
    let idx = region.indices(&grid)?;
    let xs: Vec<f64> = idx.iter().map(|&j| grid.x(j)).collect();
    let weight = |j: usize| mask.map_or(1.0, |m| m.value(grid.x(j)));
    // columns of sampled amplitudes, one row per member
    let sampled: Vec<Vec<Complex64>> = states
        .iter()
        .map(|s| idx.iter().map(|&j| s.amplitudes[j] * weight(j)).collect())
        .collect();
    let m = idx.len();
    let inv = 1.0 / states.len() as f64;
    let values: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|a| {
            let sampled = &sampled;
            (0..m).map(move |b| {
                let mut rho = Complex64::new(0.0, 0.0);
                for member in sampled {
                    rho += member[a] * member[b].conj();
                }
                (rho * inv).norm_sqr()
            })
        })
        .collect();
    Map2d::new(Axis::new("x", xs.clone()), Axis::new("x'", xs), values)
}

/// Ensemble density `(1/N) sum_i |psi_i(x, t)|^2` over probe times (rows)
/// and grid points (columns).
pub fn probability_density_map(record: &EnsembleRecord) -> Result<Map2d> {
    let n = record.grid.n;
    let inv = 1.0 / record.n_c().max(1) as f64;
    let mut values = vec![0.0; record.probe_times.len() * n];
    for (k, row) in values.chunks_mut(n).enumerate() {
        for member in &record.members {
            let snap = member
                .snapshots
                .get(k)
                .ok_or_else(|| Error::Misaligned(format!("missing snapshot {k}")))?;
            for (acc, c) in row.iter_mut().zip(&snap.amplitudes) {
                *acc += c.norm_sqr();
            }
        }
        row.iter_mut().for_each(|v| *v *= inv);
    }
    Map2d::new(
        Axis::new("t", record.probe_times.clone()),
        Axis::new("x", record.grid.positions()),
        values,
    )
}
