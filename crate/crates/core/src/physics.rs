//! Physical model: laser pulse, atomic and environment potentials.
//!
//! The electron Hamiltonian is `p^2/2 + V(x) + U(x; X) + x F(t)` in the
//! length gauge, with `V` the soft-Coulomb atom and `U` a chain of identical
//! attractive Gaussian wells at the perturber positions `X`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Linearly polarised pulse `F(t) = F_L f(t) sin(omega t)` with a trapezoidal
/// envelope measured in whole laser cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserParams {
    pub amplitude: f64,
    pub omega: f64,
    pub ramp_up: u32,
    pub plateau: u32,
    pub ramp_down: u32,
}

impl Default for LaserParams {
    /// 1030 nm, 0.15 a.u. peak field, 2-11-2 trapezoid.
    fn default() -> Self {
        Self {
            amplitude: 0.15,
            omega: 0.044,
            ramp_up: 2,
            plateau: 11,
            ramp_down: 2,
        }
    }
}

impl LaserParams {
    pub fn new(amplitude: f64, omega: f64, ramp_up: u32, plateau: u32, ramp_down: u32) -> Result<Self> {
        let laser = Self {
            amplitude,
            omega,
            ramp_up,
            plateau,
            ramp_down,
        };
        laser.validate()?;
        Ok(laser)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid("F_L", format!("must be positive, got {}", self.amplitude)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid("omega", format!("must be positive, got {}", self.omega)));
        }
        Ok(())
    }

    /// Optical period `T_L = 2 pi / omega`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn total_cycles(&self) -> u32 {
        self.ramp_up + self.plateau + self.ramp_down
    }

    pub fn duration(&self) -> f64 {
        f64::from(self.total_cycles()) * self.period()
    }

    /// Trapezoidal envelope with linear ramps; zero before 0 and after the pulse.
    pub fn envelope(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let c = t / self.period();
        let up = f64::from(self.ramp_up);
        let flat_end = up + f64::from(self.plateau);
        let end = flat_end + f64::from(self.ramp_down);
        if c < up {
            c / up
        } else if c <= flat_end {
            1.0
        } else if c < end {
            (end - c) / f64::from(self.ramp_down)
        } else {
            0.0
        }
    }

    pub fn field(&self, t: f64) -> f64 {
        let f = self.envelope(t);
        if f == 0.0 {
            return 0.0;
        }
        self.amplitude * f * (self.omega * t).sin()
    }

    /// Field with the envelope held at one; used by the classical models.
    pub fn cw_field(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t).sin()
    }

    /// `U_p = (F_L / 2 omega)^2`.
    pub fn ponderomotive_energy(&self) -> f64 {
        let r = self.amplitude / (2.0 * self.omega);
        r * r
    }

    /// `F_L / omega^2`.
    pub fn quiver_radius(&self) -> f64 {
        self.amplitude / (self.omega * self.omega)
    }

    /// Classical cutoff `(3.17 U_p + I_p) / omega` in harmonic orders.
    pub fn cutoff_order(&self, ionization_potential: f64) -> f64 {
        (3.17 * self.ponderomotive_energy() + ionization_potential) / self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomParams {
    pub softening: f64,
}

impl Default for AtomParams {
    fn default() -> Self {
        Self { softening: 0.4837 }
    }
}

impl AtomParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.softening > 0.0 && self.softening.is_finite()) {
            return Err(Error::invalid("softening", "must be positive"));
        }
        Ok(())
    }

    pub fn potential(&self) -> SoftCoulomb {
        SoftCoulomb {
            softening: self.softening,
        }
    }
}

/// Depth and width of the Gaussian well placed at every perturber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturberParams {
    pub depth: f64,
    pub width: f64,
}

impl Default for PerturberParams {
    fn default() -> Self {
        Self { depth: 0.8, width: 0.5 }
    }
}

impl PerturberParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.depth >= 0.0 && self.depth.is_finite()) {
            return Err(Error::invalid("A_E", "must be non-negative"));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::invalid("sigma_E", "must be positive"));
        }
        Ok(())
    }

    /// `A_E = 0` switches the environment off.
    pub fn is_gas_phase(&self) -> bool {
        self.depth == 0.0
    }
}

/// One disorder realisation: sorted perturber coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentConfig {
    positions: Vec<f64>,
}

impl EnvironmentConfig {
    /// Checks ordering, even count and that the two central sites straddle
    /// the origin.
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.len() % 2 != 0 {
            return Err(Error::invalid("positions", "perturber count must be even"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("positions", "non-finite coordinate"));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("positions", "must be strictly increasing"));
        }
        if !positions.is_empty() {
            let j = positions.len() / 2;
            if !(positions[j - 1] < 0.0 && positions[j] > 0.0) {
                return Err(Error::invalid("positions", "central pair must straddle the origin"));
            }
        }
        Ok(Self { positions })
    }

    pub fn empty() -> Self {
        Self { positions: Vec::new() }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Mirror image `x_k -> -x_k`.
    pub fn mirrored(&self) -> Self {
        Self {
            positions: self.positions.iter().rev().map(|x| -x).collect(),
        }
    }

    pub fn potential(&self, pert: PerturberParams) -> GaussianWells {
        GaussianWells {
            centers: self.positions.clone(),
            depth: pert.depth,
            width: pert.width,
        }
    }
}

/// A one-dimensional potential with analytic first and second derivatives.
pub trait Potential: Send + Sync {
    fn value(&self, x: f64) -> f64;
    /// `dV/dx`; the force is its negative.
    fn gradient(&self, x: f64) -> f64;
    fn curvature(&self, x: f64) -> f64;
}

/// `V(x) = -(x^2 + a)^(-1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftCoulomb {
    pub softening: f64,
}

impl Potential for SoftCoulomb {
    fn value(&self, x: f64) -> f64 {
        -1.0 / (x * x + self.softening).sqrt()
    }

    fn gradient(&self, x: f64) -> f64 {
        let r2 = x * x + self.softening;
        x / (r2 * r2.sqrt())
    }

    fn curvature(&self, x: f64) -> f64 {
        let r2 = x * x + self.softening;
        let r3 = r2 * r2.sqrt();
        (self.softening - 2.0 * x * x) / (r3 * r2)
    }
}

/// Sum of identical wells `-A exp(-(x - x_k)^2 / 2 s^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWells {
    pub centers: Vec<f64>,
    pub depth: f64,
    pub width: f64,
}

impl GaussianWells {
    fn fold(&self, x: f64, term: impl Fn(f64, f64) -> f64) -> f64 {
        if self.depth == 0.0 {
            return 0.0;
        }
        let inv_s2 = 1.0 / (self.width * self.width);
        self.centers
            .iter()
            .map(|c| {
                let u = x - c;
                term(u, inv_s2) * (-0.5 * u * u * inv_s2).exp()
            })
            .sum::<f64>()
            * self.depth
    }
}

impl Potential for GaussianWells {
    fn value(&self, x: f64) -> f64 {
        -self.fold(x, |_, _| 1.0)
    }

    fn gradient(&self, x: f64) -> f64 {
        self.fold(x, |u, k| u * k)
    }

    fn curvature(&self, x: f64) -> f64 {
        self.fold(x, |u, k| k * (1.0 - u * u * k))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FreeSpace;

impl Potential for FreeSpace {
    fn value(&self, _: f64) -> f64 {
        0.0
    }
    fn gradient(&self, _: f64) -> f64 {
        0.0
    }
    fn curvature(&self, _: f64) -> f64 {
        0.0
    }
}

/// `k x^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub stiffness: f64,
}

impl Potential for Harmonic {
    fn value(&self, x: f64) -> f64 {
        0.5 * self.stiffness * x * x
    }
    fn gradient(&self, x: f64) -> f64 {
        self.stiffness * x
    }
    fn curvature(&self, _: f64) -> f64 {
        self.stiffness
    }
}

impl<A: Potential, B: Potential> Potential for (A, B) {
    fn value(&self, x: f64) -> f64 {
        self.0.value(x) + self.1.value(x)
    }
    fn gradient(&self, x: f64) -> f64 {
        self.0.gradient(x) + self.1.gradient(x)
    }
    fn curvature(&self, x: f64) -> f64 {
        self.0.curvature(x) + self.1.curvature(x)
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: f64) -> f64 {
        (**self).gradient(x)
    }
    fn curvature(&self, x: f64) -> f64 {
        (**self).curvature(x)
    }
}

impl<P: Potential + ?Sized> Potential for Box<P> {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: f64) -> f64 {
        (**self).gradient(x)
    }
    fn curvature(&self, x: f64) -> f64 {
        (**self).curvature(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn relative(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
    }

    #[test]
    fn envelope_trapezoid() {
        let laser = LaserParams::default();
        let t = laser.period();
        assert_eq!(laser.envelope(0.0), 0.0);
        assert!((laser.envelope(t) - 0.5).abs() < 1e-15);
        assert_eq!(laser.envelope(5.0 * t), 1.0);
        assert!((laser.envelope(14.0 * t) - 0.5).abs() < 1e-12);
        assert_eq!(laser.envelope(15.0 * t + 1.0), 0.0);
        assert_eq!(laser.duration(), 15.0 * t);
    }

    #[test]
    fn field_values() {
        let laser = LaserParams::default();
        let t = laser.period();
        assert_eq!(laser.field(0.0), 0.0);
        assert!((laser.field(5.25 * t) - laser.amplitude).abs() < 1e-12);
        assert_eq!(laser.field(16.0 * t), 0.0);
    }

    #[test]
    fn laser_scales() {
        let laser = LaserParams::default();
        assert!((laser.quiver_radius() - 77.479).abs() < 1e-2);
        assert!((laser.ponderomotive_energy() - 2.9055).abs() < 1e-3);
        let q = laser.cutoff_order(0.90);
        assert!((q - 229.8).abs() < 0.5, "cutoff order {q}");
        let weak = LaserParams { amplitude: 1e-300, ..laser };
        assert!(weak.ponderomotive_energy() < 1e-300);
    }

    #[test]
    fn soft_coulomb_values() {
        let v = AtomParams::default().potential();
        assert!((v.value(0.0) + 1.437_85).abs() < 1e-4);
        let x = 1e6;
        assert!(relative(v.value(x), -1.0 / x) < 1e-9);
        assert!(relative(v.value(-x), -1.0 / x) < 1e-9);
    }

    #[test]
    fn gaussian_wells_values() {
        let pert = PerturberParams::default();
        let one = EnvironmentConfig::new(vec![-3.0, 7.5]).unwrap().potential(pert);
        assert!((one.value(7.5) + pert.depth).abs() < 1e-15);

        let gas = PerturberParams { depth: 0.0, ..pert };
        let cfg = EnvironmentConfig::new(vec![-10.0, 10.0]).unwrap();
        assert_eq!(cfg.potential(gas).value(10.0), 0.0);
        // exp(-200) is far below anything representable next to A_E
        let at_origin = cfg.potential(pert).value(0.0);
        assert!(at_origin.abs() < 1e-80);
    }

    #[test]
    fn config_validation() {
        assert!(EnvironmentConfig::new(vec![-1.0, 2.0, 3.0]).is_err());
        assert!(EnvironmentConfig::new(vec![1.0, 2.0]).is_err());
        assert!(EnvironmentConfig::new(vec![-2.0, -1.0, 1.0, 0.5]).is_err());
        assert!(EnvironmentConfig::new(vec![-2.0, -1.0, 1.0, 3.0]).is_ok());
        assert!(LaserParams::new(-0.1, 0.05, 1, 1, 1).is_err());
        assert!(LaserParams::new(0.1, 0.0, 1, 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn gradients_match_finite_differences(x in -50.0f64..50.0) {
            let h = 1e-4;
            let pert = PerturberParams::default();
            let cfg = EnvironmentConfig::new(vec![-23.0, -11.5, -0.7, 9.0, 21.0, 30.5]).unwrap();
            let pots: [Box<dyn Potential>; 3] = [
                Box::new(AtomParams::default().potential()),
                Box::new(cfg.potential(pert)),
                Box::new(Harmonic { stiffness: 0.3 }),
            ];
            for p in &pots {
                let fd = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
                let g = p.gradient(x);
                prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-6), "x={x} fd={fd} g={g}");
                let fd2 = (p.gradient(x + h) - p.gradient(x - h)) / (2.0 * h);
                let c = p.curvature(x);
                prop_assert!((fd2 - c).abs() <= 1e-6 * c.abs().max(1e-6), "x={x} fd2={fd2} c={c}");
            }
        }

        #[test]
        fn atom_potential_is_even(x in -100.0f64..100.0) {
            let v = AtomParams::default().potential();
            prop_assert_eq!(v.value(x), v.value(-x));
        }

        #[test]
        fn env_potential_translation_covariant(x in -40.0f64..40.0, shift in -15.0f64..15.0) {
            let pert = PerturberParams::default();
            let base = vec![-21.0, -9.5, 8.0, 19.0];
            let moved: Vec<f64> = base.iter().map(|p| p + shift).collect();
            let a = GaussianWells { centers: moved, depth: pert.depth, width: pert.width };
            let b = GaussianWells { centers: base, depth: pert.depth, width: pert.width };
            prop_assert!((a.value(x) - b.value(x - shift)).abs() < 1e-12);
        }

        #[test]
        fn envelope_bounded_and_continuous(t in 0.0f64..3000.0) {
            let laser = LaserParams { ramp_up: 3, plateau: 2, ramp_down: 4, ..LaserParams::default() };
            let f = laser.envelope(t);
            prop_assert!((0.0..=1.0).contains(&f));
            let slope = 1.0 / (3.0 * laser.period());
            prop_assert!((laser.envelope(t + 1e-6) - f).abs() <= 1e-6 * slope * 1.0001);
        }
    }
}
