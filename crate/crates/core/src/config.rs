//! Run configuration: a line-oriented `key = value` format with sections.
//!
//! ```text
//! [laser]
//! wavelength_nm = 800
//! F_L = 0.075
//! [environment]
//! A_E = 0
//! ```
//!
//! Missing keys take their defaults. `wavelength_nm` and `intensity`
//! (W/cm^2) are accepted in place of `omega` and `F_L`; only the resolved
//! atomic-unit values are kept and rendered.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::ensemble::{probe_schedule, EnsembleSpec, MaskSpec, PlanSettings};
use crate::environment::StructureParams;
use crate::error::{Error, Result};
use crate::physics::{AtomParams, LaserParams, PerturberParams};
use crate::tdse::{Grid, GroundStateOptions};
use crate::units;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub laser: LaserParams,
    pub atom: AtomParams,
    pub perturber: PerturberParams,
    pub spacing: f64,
    pub sigma: f64,
    /// Total perturber count; `None` covers the electron excursion.
    pub n_p: Option<usize>,
    pub plan: PlanSettings,
    pub n_c: usize,
    pub seed: u64,
    pub probes_per_cycle: usize,
    pub mask: MaskSpec,
    /// Gabor window length in optical periods.
    pub gabor_window: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            laser: LaserParams::default(),
            atom: AtomParams::default(),
            perturber: PerturberParams::default(),
            spacing: 10.0,
            sigma: 1.0,
            n_p: None,
            plan: PlanSettings::default(),
            n_c: 1000,
            seed: 0,
            probes_per_cycle: 8,
            mask: MaskSpec::default(),
            gabor_window: 0.35,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Float,
    Int,
    Text,
}

const KEYS: &[(&str, &[(&str, Kind)])] = &[
    (
        "laser",
        &[
            ("F_L", Kind::Float),
            ("intensity", Kind::Float),
            ("omega", Kind::Float),
            ("wavelength_nm", Kind::Float),
            ("ramp_up", Kind::Int),
            ("plateau", Kind::Int),
            ("ramp_down", Kind::Int),
        ],
    ),
    ("atom", &[("softening", Kind::Float)]),
    (
        "environment",
        &[
            ("A_E", Kind::Float),
            ("sigma_E", Kind::Float),
            ("a", Kind::Float),
            ("sigma", Kind::Float),
            ("n_p", Kind::Int),
        ],
    ),
    (
        "grid",
        &[
            ("x_min", Kind::Float),
            ("x_max", Kind::Float),
            ("n", Kind::Int),
            ("dt", Kind::Float),
            ("absorber_fraction", Kind::Float),
            ("record_stride", Kind::Int),
            ("ground_dtau", Kind::Float),
            ("ground_tolerance", Kind::Float),
            ("ground_max_iterations", Kind::Int),
        ],
    ),
    (
        "ensemble",
        &[
            ("n_c", Kind::Int),
            ("seed", Kind::Int),
            ("probes_per_cycle", Kind::Int),
            ("mask_radius", Kind::Float),
            ("mask_width", Kind::Float),
            ("gabor_window", Kind::Float),
        ],
    ),
    ("output", &[("dir", Kind::Text)]),
];

#[derive(Debug, Clone)]
enum Value {
    Float(f64),
    Int(u64),
    Text(String),
}

struct Entries(BTreeMap<(String, String), Value>);

impl Entries {
    fn take(&mut self, section: &str, key: &str) -> Option<Value> {
        self.0.remove(&(section.to_string(), key.to_string()))
    }

    fn float(&mut self, section: &str, key: &str) -> Option<f64> {
        match self.take(section, key)? {
            Value::Float(v) => Some(v),
            Value::Int(v) => Some(v as f64),
            Value::Text(_) => unreachable!("typed at parse time"),
        }
    }

    fn int(&mut self, section: &str, key: &str) -> Option<u64> {
        match self.take(section, key)? {
            Value::Int(v) => Some(v),
            _ => unreachable!("typed at parse time"),
        }
    }

    fn text(&mut self, section: &str, key: &str) -> Option<String> {
        match self.take(section, key)? {
            Value::Text(v) => Some(v),
            _ => unreachable!("typed at parse time"),
        }
    }
}

fn range(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigRange {
        key: key.to_string(),
        message: message.into(),
    }
}

fn narrow<T: TryFrom<u64>>(key: &str, v: u64) -> Result<T> {
    T::try_from(v).map_err(|_| range(key, format!("{v} is too large")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Entries(BTreeMap::new());
        let mut section: Option<&str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let syntax = |message: String| Error::ConfigSyntax { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| syntax("unterminated section header".into()))?.trim();
                let known = KEYS.iter().find(|(s, _)| *s == name).ok_or_else(|| syntax(format!("unknown section [{name}]")))?;
                section = Some(known.0);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| syntax(format!("`{key}` appears before any section")))?;
            let keys = KEYS.iter().find(|(s, _)| *s == sec).expect("known section").1;
            let &(_, kind) = keys
                .iter()
                .find(|(k, _)| *k == key)
                .ok_or_else(|| syntax(format!("unknown key `{key}` in [{sec}]")))?;
            let parsed = match kind {
                Kind::Float => Value::Float(value.parse().map_err(|_| syntax(format!("`{key}` expects a number, got `{value}`")))?),
                Kind::Int => Value::Int(value.parse().map_err(|_| syntax(format!("`{key}` expects a non-negative integer, got `{value}`")))?),
                Kind::Text => Value::Text(value.trim_matches('"').to_string()),
            };
            if entries.0.insert((sec.to_string(), key.to_string()), parsed).is_some() {
                return Err(syntax(format!("`{key}` given twice in [{sec}]")));
            }
        }
        Self::from_entries(entries)
    }

    fn from_entries(mut e: Entries) -> Result<Self> {
        let mut c = Self::default();

        let field = e.float("laser", "F_L");
        let intensity = e.float("laser", "intensity");
        c.laser.amplitude = match (field, intensity) {
            (Some(_), Some(_)) => return Err(range("intensity", "give either F_L or intensity, not both")),
            (Some(f), None) => f,
            (None, Some(i)) if i > 0.0 => units::intensity_to_field(i),
            (None, Some(_)) => return Err(range("intensity", "must be positive")),
            (None, None) => c.laser.amplitude,
        };
        let omega = e.float("laser", "omega");
        let wavelength = e.float("laser", "wavelength_nm");
        c.laser.omega = match (omega, wavelength) {
            (Some(_), Some(_)) => return Err(range("wavelength_nm", "give either omega or wavelength_nm, not both")),
            (Some(w), None) => w,
            (None, Some(l)) if l > 0.0 => units::wavelength_nm_to_omega(l),
            (None, Some(_)) => return Err(range("wavelength_nm", "must be positive")),
            (None, None) => c.laser.omega,
        };
        for (key, slot) in [
            ("ramp_up", &mut c.laser.ramp_up),
            ("plateau", &mut c.laser.plateau),
            ("ramp_down", &mut c.laser.ramp_down),
        ] {
            if let Some(v) = e.int("laser", key) {
                *slot = narrow(key, v)?;
            }
        }
        if let Some(v) = e.float("atom", "softening") {
            c.atom.softening = v;
        }
        if let Some(v) = e.float("environment", "A_E") {
            c.perturber.depth = v;
        }
        if let Some(v) = e.float("environment", "sigma_E") {
            c.perturber.width = v;
        }
        if let Some(v) = e.float("environment", "a") {
            c.spacing = v;
        }
        if let Some(v) = e.float("environment", "sigma") {
            c.sigma = v;
        }
        if let Some(v) = e.int("environment", "n_p") {
            c.n_p = Some(narrow("n_p", v)?);
        }

        let x_min = e.float("grid", "x_min").unwrap_or(c.plan.grid.x_min);
        let x_max = e.float("grid", "x_max").unwrap_or(c.plan.grid.x_max);
        let n = match e.int("grid", "n") {
            Some(v) => narrow("n", v)?,
            None => c.plan.grid.n,
        };
        c.plan.grid = Grid { x_min, x_max, n };
        if let Some(v) = e.float("grid", "dt") {
            c.plan.dt = v;
        }
        if let Some(v) = e.float("grid", "absorber_fraction") {
            c.plan.absorber_fraction = v;
        }
        if let Some(v) = e.int("grid", "record_stride") {
            c.plan.record_stride = narrow("record_stride", v)?;
        }
        if let Some(v) = e.float("grid", "ground_dtau") {
            c.plan.ground_state.dtau = v;
        }
        if let Some(v) = e.float("grid", "ground_tolerance") {
            c.plan.ground_state.tolerance = v;
        }
        if let Some(v) = e.int("grid", "ground_max_iterations") {
            c.plan.ground_state.max_iterations = narrow("ground_max_iterations", v)?;
        }

        if let Some(v) = e.int("ensemble", "n_c") {
            c.n_c = narrow("n_c", v)?;
        }
        if let Some(v) = e.int("ensemble", "seed") {
            c.seed = v;
        }
        if let Some(v) = e.int("ensemble", "probes_per_cycle") {
            c.probes_per_cycle = narrow("probes_per_cycle", v)?;
        }
        if let Some(v) = e.float("ensemble", "mask_radius") {
            c.mask.radius = v;
        }
        if let Some(v) = e.float("ensemble", "mask_width") {
            c.mask.width = v;
        }
        if let Some(v) = e.float("ensemble", "gabor_window") {
            c.gabor_window = v;
        }
        if let Some(v) = e.text("output", "dir") {
            c.out_dir = PathBuf::from(v);
        }
        debug_assert!(e.0.is_empty(), "every known key is consumed");
        c.validate()?;
        Ok(c)
    }

    /// Range checks; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(range(key, format!("must be positive, got {v}")))
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(range(key, format!("must be non-negative, got {v}")))
            }
        };
        positive("F_L", self.laser.amplitude)?;
        positive("omega", self.laser.omega)?;
        if self.laser.total_cycles() == 0 {
            return Err(range("plateau", "the pulse must last at least one cycle"));
        }
        positive("softening", self.atom.softening)?;
        non_negative("A_E", self.perturber.depth)?;
        positive("sigma_E", self.perturber.width)?;
        positive("a", self.spacing)?;
        non_negative("sigma", self.sigma)?;
        if let Some(n) = self.n_p {
            if n < 2 || n % 2 != 0 {
                return Err(range("n_p", format!("must be even and at least 2, got {n}")));
            }
        }
        if !(self.plan.grid.x_min.is_finite() && self.plan.grid.x_max.is_finite() && self.plan.grid.x_max > self.plan.grid.x_min) {
            return Err(range("x_max", "must exceed x_min"));
        }
        if self.plan.grid.n < 4 {
            return Err(range("n", "need at least 4 grid points"));
        }
        positive("dt", self.plan.dt)?;
        if !(0.0..0.5).contains(&self.plan.absorber_fraction) {
            return Err(range("absorber_fraction", "must lie in [0, 0.5)"));
        }
        if self.plan.record_stride == 0 {
            return Err(range("record_stride", "must be at least 1"));
        }
        positive("ground_dtau", self.plan.ground_state.dtau)?;
        positive("ground_tolerance", self.plan.ground_state.tolerance)?;
        if self.plan.ground_state.max_iterations == 0 {
            return Err(range("ground_max_iterations", "must be at least 1"));
        }
        if self.n_c == 0 {
            return Err(range("n_c", "need at least one configuration"));
        }
        if self.probes_per_cycle == 0 {
            return Err(range("probes_per_cycle", "must be at least 1"));
        }
        positive("mask_radius", self.mask.radius)?;
        if !(self.mask.width >= 0.0 && self.mask.width <= 2.0 * self.mask.radius) {
            return Err(range("mask_width", "must lie in [0, 2 * mask_radius]"));
        }
        positive("gabor_window", self.gabor_window)?;
        if self.out_dir.as_os_str().is_empty() {
            return Err(range("dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn structure(&self) -> StructureParams {
        let mut s = StructureParams::covering(self.spacing, self.sigma, &self.laser);
        if let Some(n) = self.n_p {
            s.count = n;
        }
        s
    }

    pub fn probe_times(&self) -> Vec<f64> {
        probe_schedule(&self.laser, self.probes_per_cycle)
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            n_c: self.n_c,
            master_seed: self.seed,
            structure: self.structure(),
            perturber: self.perturber,
            laser: self.laser,
            atom: self.atom,
            plan: self.plan,
            probe_times: self.probe_times(),
        }
    }

    /// Text that [`RunConfig::parse`] maps back to `self` exactly.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let l = &self.laser;
        let g = &self.plan.grid;
        let gs: &GroundStateOptions = &self.plan.ground_state;
        let _ = writeln!(s, "[laser]");
        let _ = writeln!(s, "F_L = {:?}", l.amplitude);
        let _ = writeln!(s, "omega = {:?}", l.omega);
        let _ = writeln!(s, "ramp_up = {}", l.ramp_up);
        let _ = writeln!(s, "plateau = {}", l.plateau);
        let _ = writeln!(s, "ramp_down = {}", l.ramp_down);
        let _ = writeln!(s, "\n[atom]");
        let _ = writeln!(s, "softening = {:?}", self.atom.softening);
        let _ = writeln!(s, "\n[environment]");
        let _ = writeln!(s, "A_E = {:?}", self.perturber.depth);
        let _ = writeln!(s, "sigma_E = {:?}", self.perturber.width);
        let _ = writeln!(s, "a = {:?}", self.spacing);
        let _ = writeln!(s, "sigma = {:?}", self.sigma);
        if let Some(n) = self.n_p {
            let _ = writeln!(s, "n_p = {n}");
        }
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "x_min = {:?}", g.x_min);
        let _ = writeln!(s, "x_max = {:?}", g.x_max);
        let _ = writeln!(s, "n = {}", g.n);
        let _ = writeln!(s, "dt = {:?}", self.plan.dt);
        let _ = writeln!(s, "absorber_fraction = {:?}", self.plan.absorber_fraction);
        let _ = writeln!(s, "record_stride = {}", self.plan.record_stride);
        let _ = writeln!(s, "ground_dtau = {:?}", gs.dtau);
        let _ = writeln!(s, "ground_tolerance = {:?}", gs.tolerance);
        let _ = writeln!(s, "ground_max_iterations = {}", gs.max_iterations);
        let _ = writeln!(s, "\n[ensemble]");
        let _ = writeln!(s, "n_c = {}", self.n_c);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "probes_per_cycle = {}", self.probes_per_cycle);
        let _ = writeln!(s, "mask_radius = {:?}", self.mask.radius);
        let _ = writeln!(s, "mask_width = {:?}", self.mask.width);
        let _ = writeln!(s, "gabor_window = {:?}", self.gabor_window);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = \"{}\"", self.out_dir.display());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_default() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.spacing, 10.0);
        assert_eq!(c.sigma, 1.0);
        assert_eq!(c.perturber.depth, 0.8);
        assert_eq!(c.perturber.width, 0.5);
        assert_eq!(c.n_c, 1000);
        assert_eq!(c.atom.softening, 0.4837);
        assert_eq!(c.laser.omega, 0.044);
        assert_eq!((c.laser.ramp_up, c.laser.plateau, c.laser.ramp_down), (2, 11, 2));
        assert_eq!(c.gabor_window, 0.35);
        assert_eq!(c.mask.radius, 5.0);
    }

    #[test]
    fn gas_phase_switch() {
        let c = RunConfig::parse("[environment]\nA_E = 0\n").unwrap();
        assert!(c.perturber.is_gas_phase());
    }

    #[test]
    fn range_errors_name_the_key() {
        let err = RunConfig::parse("[environment]\nsigma = -1\n").unwrap_err();
        match err {
            Error::ConfigRange { key, .. } => assert_eq!(key, "sigma"),
            other => panic!("unexpected {other}"),
        }
        let err = RunConfig::parse("[laser]\nF_L = 0.1\nintensity = 1e14\n").unwrap_err();
        assert!(matches!(err, Error::ConfigRange { .. }));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        for (text, line) in [
            ("[laser]\nomega 0.05\n", 2),
            ("\n\n[lazer]\n", 3),
            ("[atom]\nsoftening = 0.5\nbogus = 1\n", 3),
            ("omega = 1\n", 1),
            ("[grid]\nn = 12.5\n", 2),
            ("[atom]\nsoftening = 1\nsoftening = 2\n", 3),
        ] {
            match RunConfig::parse(text) {
                Err(Error::ConfigSyntax { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn unit_conversions() {
        let c = RunConfig::parse("[laser]\nwavelength_nm = 800\nintensity = 1.974e14 # W/cm^2\n").unwrap();
        assert!((c.laser.omega - 0.05695).abs() < 1e-4);
        assert!((c.laser.amplitude - 0.075).abs() < 1e-4);
    }

    #[test]
    fn covering_default_count() {
        let c = RunConfig::default();
        assert_eq!(c.structure().count % 2, 0);
        let c = RunConfig::parse("[environment]\nn_p = 12\n").unwrap();
        assert_eq!(c.structure().count, 12);
        assert!(RunConfig::parse("[environment]\nn_p = 3\n").is_err());
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            (0.001f64..1.0, 0.01f64..0.2, 0u32..5, 1u32..20, 0u32..5),
            (0.1f64..2.0, 0.0f64..2.0, 0.1f64..2.0, 1.0f64..30.0, 0.0f64..3.0, proptest::option::of(1usize..40)),
            (-500.0f64..-10.0, 10.0f64..500.0, 4usize..20000, 0.001f64..0.1, 0.0f64..0.49, 1usize..10),
            (1usize..5000, any::<u64>(), 1usize..32, 0.5f64..10.0, 0.0f64..1.0, 0.05f64..1.0),
        )
            .prop_map(|(l, env, g, ens)| {
                let mut c = RunConfig::default();
                c.laser = LaserParams {
                    amplitude: l.0,
                    omega: l.1,
                    ramp_up: l.2,
                    plateau: l.3,
                    ramp_down: l.4,
                };
                c.atom.softening = env.0;
                c.perturber.depth = env.1;
                c.perturber.width = env.2;
                c.spacing = env.3;
                c.sigma = env.4;
                c.n_p = env.5.map(|k| 2 * k);
                c.plan.grid = Grid { x_min: g.0, x_max: g.1, n: g.2 };
                c.plan.dt = g.3;
                c.plan.absorber_fraction = g.4;
                c.plan.record_stride = g.5;
                c.n_c = ens.0;
                c.seed = ens.1;
                c.probes_per_cycle = ens.2;
                c.mask = MaskSpec { radius: ens.3, width: ens.4 * 2.0 * ens.3 };
                c.gabor_window = ens.5;
                c
            })
    }

    proptest! {
        #[test]
        fn render_round_trips(c in arb_config()) {
            let text = c.render();
            prop_assert_eq!(RunConfig::parse(&text).unwrap(), c);
        }
    }
}
