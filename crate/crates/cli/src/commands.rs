use std::fs::{self, File};
use std::path::{Path, PathBuf};

use hhg_core::config::RunConfig;
use hhg_core::ensemble::{
    density_matrix_map, ensemble_expectation, probability_density_map, purity_series, run_ensemble, EnsembleRecord, Observable, Region,
};
use hhg_core::environment::{pair_correlation, render_configurations, sample_ensemble};
use hhg_core::formats::{read_record, write_columns, write_csv, write_map, write_record, write_wavefunction};
use hhg_core::semiclassics::{
    det2, find_periodic_orbit, find_returns, max_return_energy, overlay_orbit, symmetry_partner, trace2, zero_drift_guess, ClassicalSystem,
    NewtonOptions, Side, Stability, DEFAULT_HORIZON,
};
use hhg_core::spectra::{
    fit_purity_decay, gabor, harmonic_peaks, hhg_spectrum, locate_cutoff, parity_contrast, plateau_band, plateau_statistics, Apodization,
    OrderSelection, UniformSeries,
};
use hhg_core::tdse::ground_state;
use hhg_core::units::au_to_fs;

use crate::manifest::{self, Manifest};
use crate::{CliError, Command, Common};

type Result<T> = std::result::Result<T, CliError>;

const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Gabor window positions per optical cycle.
const GABOR_STEPS_PER_CYCLE: f64 = 64.0;
/// Tolerance for the integrated symmetry partner of a periodic orbit.
const PARTNER_TOLERANCE: f64 = 1e-8;
const OVERLAY_SAMPLES: usize = 4000;

struct Context {
    command: &'static str,
    config: RunConfig,
    config_text: String,
    config_sha256: String,
    out_dir: PathBuf,
    workers: usize,
    records: PathBuf,
    started: u64,
    outputs: Vec<(String, String)>,
}

impl Context {
    fn new(common: &Common, command: &Command) -> Result<Self> {
        let text = match &common.config {
            Some(path) => fs::read_to_string(path).map_err(|source| CliError::ConfigFile { path: path.clone(), source })?,
            None => String::new(),
        };
        let mut config = RunConfig::parse(&text)?;
        if let Some(seed) = common.seed {
            config.seed = seed;
        }
        if let Some(out) = &common.out {
            config.out_dir = out.clone();
        }
        config.validate()?;
        let config_text = config.render();
        // the output location does not enter the checksum, so products are
        // byte-identical wherever they are written
        let placed_anywhere = RunConfig {
            out_dir: PathBuf::from("."),
            ..config.clone()
        };
        let config_sha256 = manifest::sha256_bytes(placed_anywhere.render().as_bytes());
        let out_dir = config.out_dir.clone();
        fs::create_dir_all(&out_dir).map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
        let workers = common
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let records = common.records.clone().unwrap_or_else(|| out_dir.join("records.bin"));
        Ok(Self {
            command: command.name(),
            config,
            config_text,
            config_sha256,
            out_dir,
            workers,
            records,
            started: manifest::now(),
            outputs: Vec::new(),
        })
    }

    /// First line of every product.
    fn header(&self) -> String {
        format!("hhg {} v{VERSION} config-sha256 {}", self.command, self.config_sha256)
    }

    fn create(&self, name: &str) -> Result<File> {
        let path = self.out_dir.join(name);
        File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))
    }

    fn finish_file(&mut self, name: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        let sum = manifest::sha256_file(&path).map_err(|e| CliError::io(format!("hashing {}", path.display()), e))?;
        log::info!("wrote {}", path.display());
        self.outputs.push((name.to_string(), sum));
        Ok(())
    }

    fn csv(&mut self, name: &str, comments: &[String], columns: &[(&str, &[f64])]) -> Result<()> {
        let mut lines = vec![self.header()];
        lines.extend_from_slice(comments);
        write_columns(self.create(name)?, &lines, columns)?;
        self.finish_file(name)
    }

    fn csv_rows(&mut self, name: &str, comments: &[String], columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut lines = vec![self.header()];
        lines.extend_from_slice(comments);
        write_csv(self.create(name)?, &lines, columns, rows)?;
        self.finish_file(name)
    }

    fn load_records(&self) -> Result<(EnsembleRecord, String)> {
        if !self.records.exists() {
            return Err(CliError::MissingArtifact {
                path: self.records.clone(),
                hint: "produce it with `hhg run`",
            });
        }
        let before = self.checksum_of_records()?;
        let dir = self.records.parent().unwrap_or(Path::new("."));
        let name = file_name(&self.records);
        match Manifest::load(dir).and_then(|m| m.outputs.get(&name).cloned()) {
            Some(expected) if expected != before => {
                log::warn!("{} does not match the checksum in {}", self.records.display(), dir.join(manifest::FILE_NAME).display())
            }
            Some(_) => {}
            None => log::warn!("no manifest checksum for {}", self.records.display()),
        }
        let file = File::open(&self.records).map_err(|e| CliError::io(format!("opening {}", self.records.display()), e))?;
        let (record, _) = read_record(file)?;
        Ok((record, before))
    }

    fn checksum_of_records(&self) -> Result<String> {
        manifest::sha256_file(&self.records).map_err(|e| CliError::io(format!("hashing {}", self.records.display()), e))
    }

    /// Analysis commands must leave the record untouched.
    fn verify_records_unchanged(&self, before: &str) -> Result<()> {
        if self.checksum_of_records()? != before {
            return Err(CliError::io(
                format!("{}", self.records.display()),
                std::io::Error::other("record file changed during analysis"),
            ));
        }
        Ok(())
    }

    fn store_manifest(self) -> Result<()> {
        let mut m = Manifest::load(&self.out_dir).unwrap_or_default();
        if m.config_sha256 != self.config_sha256 {
            m.outputs.clear();
        }
        m.version = VERSION.to_string();
        m.master_seed = self.config.seed;
        m.config_sha256 = self.config_sha256.clone();
        m.config = self.config_text.clone();
        m.started = self.started;
        m.finished = manifest::now();
        m.outputs.extend(self.outputs);
        m.store(&self.out_dir)
            .map_err(|e| CliError::io(format!("writing manifest in {}", self.out_dir.display()), e))
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn execute(common: &Common, command: &Command) -> Result<()> {
    let mut ctx = Context::new(common, command)?;
    match command {
        Command::GroundState => ground_state_cmd(&mut ctx)?,
        Command::SampleEnv => sample_env(&mut ctx)?,
        Command::Run => run(&mut ctx)?,
        Command::Spectrum { member, hann } => spectrum(&mut ctx, *member, *hann)?,
        Command::Gabor { member, max_order } => gabor_cmd(&mut ctx, *member, *max_order)?,
        Command::Purity => purity(&mut ctx)?,
        Command::DensityMap {
            probe,
            x_limit,
            stride,
            unmasked,
        } => density_map(&mut ctx, *probe, *x_limit, *stride, *unmasked)?,
        Command::Sfa { ell_list, samples } => sfa(&mut ctx, ell_list, *samples)?,
        Command::Orbits { t0 } => orbits(&mut ctx, t0)?,
        Command::PairCorrelation { bin_width, r_max } => pair_correlation_cmd(&mut ctx, *bin_width, *r_max)?,
    }
    ctx.store_manifest()
}

fn ground_state_cmd(ctx: &mut Context) -> Result<()> {
    let plan = ctx.config.plan;
    let (psi, e0) = ground_state(plan.grid, &ctx.config.atom.potential(), plan.ground_state)?;
    write_wavefunction(ctx.create("ground_state.bin")?, &psi, &ctx.header())?;
    ctx.finish_file("ground_state.bin")?;
    let x = plan.grid.positions();
    let re: Vec<f64> = psi.amplitudes.iter().map(|c| c.re).collect();
    let im: Vec<f64> = psi.amplitudes.iter().map(|c| c.im).collect();
    let density: Vec<f64> = psi.amplitudes.iter().map(|c| c.norm_sqr()).collect();
    let comments = [format!("E0 = {e0:.16e}"), format!("I_p = {:.16e}", -e0)];
    ctx.csv(
        "ground_state.csv",
        &comments,
        &[("x", &x), ("re", &re), ("im", &im), ("density", &density)],
    )?;
    log::info!("E0 = {e0:.6} a.u.");
    Ok(())
}

fn sample_env(ctx: &mut Context) -> Result<()> {
    let structure = ctx.config.structure();
    let configs = sample_ensemble(ctx.config.seed, &structure, ctx.config.n_c);
    let text = format!("# {}\n{}", ctx.header(), render_configurations(&structure, ctx.config.seed, &configs));
    let path = ctx.out_dir.join("environments.txt");
    fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    ctx.finish_file("environments.txt")
}

fn run(ctx: &mut Context) -> Result<()> {
    let spec = ctx.config.ensemble_spec();
    log::info!(
        "propagating {} configurations ({} perturbers each) on {} workers",
        spec.n_c,
        spec.structure.count,
        ctx.workers
    );
    let record = run_ensemble(&spec, ctx.workers)?;
    let name = file_name(&ctx.records);
    if ctx.records.parent().is_some_and(|p| p != ctx.out_dir && !p.as_os_str().is_empty()) {
        log::warn!("--records is ignored by `run`; writing {}", ctx.out_dir.join(&name).display());
    }
    write_record(ctx.create(&name)?, &record, &ctx.header())?;
    ctx.finish_file(&name)?;

    let times = record.members[0].times();
    let position = ensemble_expectation(&record.members, Observable::Position)?;
    let acceleration = ensemble_expectation(&record.members, Observable::DipoleAcceleration)?;
    let norm = ensemble_expectation(&record.members, Observable::Norm)?;
    ctx.csv(
        "dipole.csv",
        &[format!("ensemble mean over {} configurations", record.n_c())],
        &[("t", &times), ("position", &position), ("acceleration", &acceleration), ("norm", &norm)],
    )
}

fn dipole_series(record: &EnsembleRecord, member: Option<usize>) -> Result<UniformSeries> {
    let values = match member {
        Some(k) => {
            let m = record.members.get(k).ok_or_else(|| {
                CliError::Config(hhg_core::Error::ConfigRange {
                    key: "member".into(),
                    message: format!("record holds {} configurations", record.n_c()),
                })
            })?;
            m.acceleration.clone()
        }
        None => ensemble_expectation(&record.members, Observable::DipoleAcceleration)?,
    };
    let first = &record.members[0];
    Ok(UniformSeries::new(first.t_start, first.dt, values)?)
}

fn spectrum(ctx: &mut Context, member: Option<usize>, hann: bool) -> Result<()> {
    let (record, sum) = ctx.load_records()?;
    let laser = record.laser;
    let ip = -record.ground_energy;
    let series = dipole_series(&record, member)?;
    let apodization = if hann { Apodization::Hann } else { Apodization::None };
    let spec = hhg_spectrum(&series, laser.omega, apodization)?;
    let (lo, hi) = plateau_band(&laser, ip);
    let predicted = laser.cutoff_order(ip);
    let located = locate_cutoff(&spec, f64::from(lo), 1.0, 4.0);
    let contrast = parity_contrast(&spec, lo, hi)?;
    let single = member.is_some() || record.n_c() == 1;
    let selection = if single { OrderSelection::All } else { OrderSelection::Odd };
    let mean_peak = plateau_statistics(&spec, lo, hi, selection)?;

    let comments = vec![
        match member {
            Some(k) => format!("configuration {k}"),
            None => format!("ensemble mean over {} configurations", record.n_c()),
        },
        format!("I_p = {ip:.16e}"),
        format!("classical cutoff order = {predicted:.16e}"),
        match located {
            Some(q) => format!("located cutoff order = {q:.16e}"),
            None => "located cutoff order = none".to_string(),
        },
        format!("plateau band = {lo}..{hi}"),
        format!("parity contrast = {contrast:.16e}"),
        format!("mean plateau peak = {mean_peak:.16e}"),
    ];
    let orders: Vec<f64> = (0..spec.magnitudes.len()).map(|k| spec.order(k)).collect();
    ctx.csv("spectrum.csv", &comments, &[("order", &orders), ("magnitude", &spec.magnitudes)])?;

    let top = (spec.max_order() - 0.5).floor().min((1.5 * predicted).ceil()) as u32;
    let qs: Vec<u32> = (1..=top).collect();
    let peaks = harmonic_peaks(&spec, &qs)?;
    let qs: Vec<f64> = qs.iter().map(|&q| f64::from(q)).collect();
    ctx.csv("harmonics.csv", &comments, &[("order", &qs), ("peak", &peaks)])?;
    ctx.verify_records_unchanged(&sum)
}

fn gabor_cmd(ctx: &mut Context, member: Option<usize>, max_order: Option<f64>) -> Result<()> {
    let (record, sum) = ctx.load_records()?;
    let laser = record.laser;
    let series = dipole_series(&record, member)?;
    let limit = max_order.unwrap_or(1.5 * laser.cutoff_order(-record.ground_energy));
    let period = laser.period();
    let map = gabor(
        &series,
        laser.omega,
        ctx.config.gabor_window * period,
        period / GABOR_STEPS_PER_CYCLE,
        Some(limit),
    )?;
    write_map(ctx.create("gabor.bin")?, &map.to_map(), &ctx.header())?;
    ctx.finish_file("gabor.bin")?;
    ctx.verify_records_unchanged(&sum)
}

fn purity(ctx: &mut Context) -> Result<()> {
    let (record, sum) = ctx.load_records()?;
    let series = purity_series(&record, &ctx.config.mask)?;
    let t_fs: Vec<f64> = series.times.iter().map(|&t| au_to_fs(t)).collect();
    ctx.csv(
        "purity.csv",
        &[format!("{} configurations; mask radius {} width {}", record.n_c(), ctx.config.mask.radius, ctx.config.mask.width)],
        &[("t", &series.times), ("t_fs", &t_fs), ("total", &series.total), ("photoelectron", &series.photoelectron)],
    )?;

    let laser = record.laser;
    let t_min = au_to_fs(f64::from(laser.ramp_up) * laser.period());
    let t_max = au_to_fs(f64::from(laser.ramp_up + laser.plateau) * laser.period());
    let mut rows = Vec::new();
    for (kind, values) in [(0.0, &series.total), (1.0, &series.photoelectron)] {
        let fit = fit_purity_decay(&t_fs, values, t_min, t_max)?;
        rows.push(vec![
            kind,
            fit.gamma,
            fit.t_star,
            fit.t0,
            fit.residual_rms,
            if fit.degenerate { 1.0 } else { 0.0 },
        ]);
    }
    ctx.csv_rows(
        "purity_fit.csv",
        &[
            "series 0 = total state, 1 = photoelectron".to_string(),
            format!("fit window {t_min:.16e}..{t_max:.16e} fs; times in fs"),
        ],
        &["series", "gamma", "t_star_fs", "t0_fs", "residual_rms", "degenerate"],
        &rows,
    )?;
    ctx.verify_records_unchanged(&sum)
}

fn density_map(ctx: &mut Context, probe: Option<usize>, x_limit: f64, stride: usize, unmasked: bool) -> Result<()> {
    let (record, sum) = ctx.load_records()?;
    let density = probability_density_map(&record)?;
    write_map(ctx.create("density.bin")?, &density, &ctx.header())?;
    ctx.finish_file("density.bin")?;

    if record.probe_times.is_empty() {
        log::warn!("record holds no probe snapshots; skipping the density matrix");
        return ctx.verify_records_unchanged(&sum);
    }
    let laser = record.laser;
    let middle = (f64::from(laser.ramp_up) + 0.5 * f64::from(laser.plateau)) * laser.period();
    let k = match probe {
        Some(k) if k < record.probe_times.len() => k,
        Some(k) => {
            return Err(CliError::Config(hhg_core::Error::ConfigRange {
                key: "probe".into(),
                message: format!("{k} >= {} probe times", record.probe_times.len()),
            }))
        }
        None => (0..record.probe_times.len())
            .min_by(|&a, &b| (record.probe_times[a] - middle).abs().total_cmp(&(record.probe_times[b] - middle).abs()))
            .unwrap_or(0),
    };
    let region = Region {
        x_min: -x_limit,
        x_max: x_limit,
        stride,
    };
    let mask = (!unmasked).then_some(&ctx.config.mask);
    let rho = density_matrix_map(&record.snapshots_at(k), mask, &region)?;
    let provenance = format!("{}\nprobe {k} t = {:.16e}", ctx.header(), record.probe_times[k]);
    write_map(ctx.create("density_matrix.bin")?, &rho, &provenance)?;
    ctx.finish_file("density_matrix.bin")?;
    ctx.verify_records_unchanged(&sum)
}

fn side_code(side: Side) -> f64 {
    match side {
        Side::Origin => 0.0,
        Side::Positive => 1.0,
        Side::Negative => -1.0,
    }
}

fn sfa(ctx: &mut Context, ells: &[f64], samples: usize) -> Result<()> {
    if samples == 0 || ells.iter().any(|l| !(*l >= 0.0)) {
        return Err(CliError::Config(hhg_core::Error::ConfigRange {
            key: "ell-list".into(),
            message: "distances must be non-negative and samples positive".into(),
        }));
    }
    let laser = ctx.config.laser;
    let period = laser.period();
    let up = laser.ponderomotive_energy();
    let mut cutoff_rows = Vec::new();
    for &ell in ells {
        let mut rows = Vec::new();
        for k in 0..samples {
            let t_i = k as f64 * period / samples as f64;
            for e in find_returns(t_i, ell, DEFAULT_HORIZON, &laser) {
                rows.push(vec![e.t_i, e.t_r, e.energy, e.energy / up, side_code(e.side)]);
            }
        }
        let name = format!("sfa_ell_{ell}.csv");
        ctx.csv_rows(
            &name,
            &[format!("returns to |x| = {ell} within {DEFAULT_HORIZON} cycles; side -1, 0, +1")],
            &["t_i", "t_r", "energy", "energy_over_up", "side"],
            &rows,
        )?;
        let e_max = max_return_energy(ell, &laser, samples, DEFAULT_HORIZON);
        cutoff_rows.push(vec![ell, e_max, e_max / up]);
    }
    // slope through the ell = 0 value, in units of F_L
    let base = cutoff_rows.iter().find(|r| r[0] == 0.0).map(|r| r[1]);
    let mut comments = vec![format!("U_p = {up:.16e}, F_L = {:.16e}", laser.amplitude)];
    if let Some(e0) = base {
        let (num, den) = cutoff_rows
            .iter()
            .filter(|r| r[0] > 0.0)
            .fold((0.0, 0.0), |(n, d), r| (n + r[0] * (r[1] - e0), d + r[0] * r[0]));
        if den > 0.0 {
            comments.push(format!("slope of E_max(ell) - E_max(0) = {:.16e} F_L", num / den / laser.amplitude));
        }
    }
    ctx.csv_rows("sfa_cutoff.csv", &comments, &["ell", "e_max", "e_max_over_up"], &cutoff_rows)
}

fn orbits(ctx: &mut Context, anchors: &[f64]) -> Result<()> {
    let laser = ctx.config.laser;
    let system = ClassicalSystem::new(ctx.config.atom.potential(), &laser);
    let options = NewtonOptions::default();
    let mut rows = Vec::new();
    let mut found = Vec::new();
    for &cycles in anchors {
        let t0 = cycles * laser.period();
        let orbit = find_periodic_orbit(&system, zero_drift_guess(&laser, t0), t0, &options)?;
        let partner = symmetry_partner(&system, &orbit, PARTNER_TOLERANCE)?;
        for (o, is_partner) in [(&orbit, 0.0), (&partner, 1.0)] {
            rows.push(vec![
                o.t0,
                o.z_star.x,
                o.z_star.p,
                trace2(&o.monodromy),
                det2(&o.monodromy),
                if o.classification == Stability::Hyperbolic { 1.0 } else { 0.0 },
                o.residual,
                is_partner,
            ]);
        }
        log::info!(
            "t0 = {cycles} T_L: x = {:.6}, p = {:.6}, tr M = {:.4} ({})",
            orbit.z_star.x,
            orbit.z_star.p,
            trace2(&orbit.monodromy),
            orbit.classification.label()
        );
        found.push(orbit);
    }
    ctx.csv_rows(
        "orbits.csv",
        &["hyperbolic 1 if |tr M| > 2; partner 1 for the mirrored orbit".to_string()],
        &["t0", "x", "p", "trace", "det", "hyperbolic", "residual", "partner"],
        &rows,
    )?;

    let end = laser.duration();
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (k, orbit) in found.iter().enumerate() {
        let path = overlay_orbit(&system, orbit, 0.0, end, OVERLAY_SAMPLES);
        if k == 0 {
            columns.push(("t".into(), path.iter().map(|p| p.0).collect()));
        }
        columns.push((format!("x_{k}"), path.iter().map(|p| p.1).collect()));
    }
    let refs: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
    let anchors_fs: Vec<String> = anchors.iter().map(|c| format!("{c}")).collect();
    ctx.csv("orbit_paths.csv", &[format!("anchors at {} optical cycles", anchors_fs.join(", "))], &refs)
}

fn pair_correlation_cmd(ctx: &mut Context, bin_width: f64, r_max: Option<f64>) -> Result<()> {
    let structure = ctx.config.structure();
    let configs = sample_ensemble(ctx.config.seed, &structure, ctx.config.n_c);
    let r_max = r_max.unwrap_or(8.0 * structure.spacing);
    let g = pair_correlation(&configs, bin_width, r_max)?;
    let r: Vec<f64> = (0..g.counts.len()).map(|k| g.bin_center(k)).collect();
    ctx.csv(
        "pair_correlation.csv",
        &[format!(
            "{} configurations of {} perturbers; mean pairs per configuration",
            configs.len(),
            structure.count
        )],
        &[("r", &r), ("pairs", &g.counts)],
    )
}
