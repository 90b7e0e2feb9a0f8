//! Disorder sampling.
//!
//! Gaps between neighbouring perturbers follow a Gaussian of mean `a` and
//! width `sigma` truncated to `[2a/3, 4a/3]`. The two sites nearest the
//! parent ion are drawn from the same law measured from the origin, which
//! leaves a buffer zone of at least `2a/3` around the atom.

use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::physics::{EnvironmentConfig, LaserParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureParams {
    /// Mean inter-scatterer distance `a`.
    pub spacing: f64,
    /// Standard deviation of the gap distribution before truncation.
    pub sigma: f64,
    /// Number of perturbers, even.
    pub count: usize,
}

impl Default for StructureParams {
    fn default() -> Self {
        Self::covering(10.0, 1.0, &LaserParams::default())
    }
}

impl StructureParams {
    pub fn new(spacing: f64, sigma: f64, count: usize) -> Result<Self> {
        let s = Self { spacing, sigma, count };
        s.validate()?;
        Ok(s)
    }

    /// Chain long enough that, at mean spacing, it reaches
    /// `2 * quiver_radius + 3a` on either side of the atom.
    pub fn covering(spacing: f64, sigma: f64, laser: &LaserParams) -> Self {
        Self {
            spacing,
            sigma,
            count: 2 * Self::covering_half_count(spacing, laser),
        }
    }

    pub fn covering_half_count(spacing: f64, laser: &LaserParams) -> usize {
        let reach = 2.0 * laser.quiver_radius() + 3.0 * spacing;
        ((reach / spacing).ceil() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::invalid("a", "mean spacing must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be non-negative"));
        }
        if self.count < 2 || self.count % 2 != 0 {
            return Err(Error::invalid("n_p", "must be even and at least 2"));
        }
        Ok(())
    }

    /// Support `[2a/3, 4a/3]` of the gap distribution.
    pub fn window(&self) -> (f64, f64) {
        (2.0 * self.spacing / 3.0, 4.0 * self.spacing / 3.0)
    }
}

/// Reproducible random stream keyed by `(master_seed, stream_index)`.
///
/// Each configuration of an ensemble owns the stream numbered by its index,
/// so the samples do not depend on scheduling.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        Self { inner }
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// One draw from the truncated Gaussian, by rejection against the full one.
pub fn sample_gap<R: Rng + ?Sized>(rng: &mut R, s: &StructureParams) -> f64 {
    if s.sigma == 0.0 {
        return s.spacing;
    }
    let (lo, hi) = s.window();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let gap = s.spacing + s.sigma * z;
        if (lo..=hi).contains(&gap) {
            return gap;
        }
    }
}

/// Draw order: left central site, right central site, then the left chain
/// outward, then the right chain outward.
pub fn sample_configuration<R: Rng + ?Sized>(rng: &mut R, s: &StructureParams) -> EnvironmentConfig {
    let half = s.count / 2;
    let left_first = -sample_gap(rng, s);
    let right_first = sample_gap(rng, s);

    let mut left = Vec::with_capacity(half);
    left.push(left_first);
    for _ in 1..half {
        let next = left[left.len() - 1] - sample_gap(rng, s);
        left.push(next);
    }
    let mut right = Vec::with_capacity(half);
    right.push(right_first);
    for _ in 1..half {
        let next = right[right.len() - 1] + sample_gap(rng, s);
        right.push(next);
    }

    let positions: Vec<f64> = left.into_iter().rev().chain(right).collect();
    EnvironmentConfig::new(positions).expect("sampled chain is ordered and straddles the origin")
}

/// Configurations `0..n` of an ensemble, one stream per index.
pub fn sample_ensemble(master_seed: u64, s: &StructureParams, n: usize) -> Vec<EnvironmentConfig> {
    (0..n)
        .map(|i| sample_configuration(&mut SeededRng::new(master_seed, i as u64), s))
        .collect()
}

/// Histogram of pairwise distances, averaged over configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCorrelation {
    pub bin_width: f64,
    /// Mean number of pairs per configuration falling in each bin.
    pub counts: Vec<f64>,
}

impl PairCorrelation {
    pub fn bin_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.bin_width
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

pub fn pair_correlation(configs: &[EnvironmentConfig], bin_width: f64, r_max: f64) -> Result<PairCorrelation> {
    if configs.is_empty() {
        return Err(Error::EmptyInput("pair correlation needs at least one configuration"));
    }
    if !(bin_width > 0.0) || !(r_max > 0.0) {
        return Err(Error::invalid("bin_width", "bin width and range must be positive"));
    }
    let n_bins = (r_max / bin_width).ceil() as usize;
    let mut counts = vec![0.0; n_bins];
    for cfg in configs {
        let x = cfg.positions();
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let k = ((x[j] - x[i]).abs() / bin_width) as usize;
                if k < n_bins {
                    counts[k] += 1.0;
                }
            }
        }
    }
    let scale = 1.0 / configs.len() as f64;
    counts.iter_mut().for_each(|c| *c *= scale);
    Ok(PairCorrelation { bin_width, counts })
}

/// Plain-text ensemble description: a header line with the structure and
/// seed, then one configuration per line.
pub fn render_configurations(s: &StructureParams, master_seed: u64, configs: &[EnvironmentConfig]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# structure a={:.16e} sigma={:.16e} n_p={} master_seed={}",
        s.spacing, s.sigma, s.count, master_seed
    )
    .unwrap();
    for cfg in configs {
        let line: Vec<String> = cfg.positions().iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

/// Inverse of [`render_configurations`]; other `#` lines are ignored.
pub fn parse_configurations(text: &str) -> Result<(StructureParams, u64, Vec<EnvironmentConfig>)> {
    let mut header = None;
    let mut configs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# structure") {
            let mut a = None;
            let mut sigma = None;
            let mut n_p = None;
            let mut seed = None;
            for field in rest.split_whitespace() {
                let (k, v) = field
                    .split_once('=')
                    .ok_or_else(|| Error::Format(format!("line {}: bad header field `{field}`", lineno + 1)))?;
                let bad = || Error::Format(format!("line {}: bad value for `{k}`", lineno + 1));
                match k {
                    "a" => a = Some(v.parse::<f64>().map_err(|_| bad())?),
                    "sigma" => sigma = Some(v.parse::<f64>().map_err(|_| bad())?),
                    "n_p" => n_p = Some(v.parse::<usize>().map_err(|_| bad())?),
                    "master_seed" => seed = Some(v.parse::<u64>().map_err(|_| bad())?),
                    _ => {}
                }
            }
            match (a, sigma, n_p, seed) {
                (Some(a), Some(sigma), Some(n_p), Some(seed)) => {
                    header = Some((StructureParams::new(a, sigma, n_p)?, seed))
                }
                _ => return Err(Error::Format("incomplete structure header".into())),
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let positions = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        configs.push(EnvironmentConfig::new(positions)?);
    }
    let (s, seed) = header.ok_or_else(|| Error::Format("missing structure header".into()))?;
    Ok((s, seed, configs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(sigma: f64, count: usize) -> StructureParams {
        StructureParams::new(10.0, sigma, count).unwrap()
    }

    #[test]
    fn zero_width_is_a_lattice() {
        let s = params(0.0, 6);
        let mut rng = SeededRng::new(7, 0);
        assert_eq!(sample_gap(&mut rng, &s), 10.0);
        let cfg = sample_configuration(&mut rng, &s);
        assert_eq!(cfg.positions(), &[-30.0, -20.0, -10.0, 10.0, 20.0, 30.0]);
    }

    #[test]
    fn two_perturbers_straddle() {
        let s = params(1.0, 2);
        for i in 0..200 {
            let cfg = sample_configuration(&mut SeededRng::new(3, i), &s);
            let x = cfg.positions();
            assert!((-40.0 / 3.0..=-20.0 / 3.0).contains(&x[0]));
            assert!((20.0 / 3.0..=40.0 / 3.0).contains(&x[1]));
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = params(1.0, 16);
        let a = sample_configuration(&mut SeededRng::new(11, 5), &s);
        let b = sample_configuration(&mut SeededRng::new(11, 5), &s);
        let c = sample_configuration(&mut SeededRng::new(11, 6), &s);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn default_count_covers_excursion() {
        let laser = LaserParams::default();
        let s = StructureParams::covering(10.0, 1.0, &laser);
        assert_eq!(s.count % 2, 0);
        let reach = 2.0 * laser.quiver_radius() + 30.0;
        assert!((s.count / 2) as f64 * 10.0 >= reach);
    }

    /// Second moment of the truncated Gaussian by composite Simpson
    /// quadrature, compared with 10^6 rejection samples.
    #[test]
    fn gap_variance_matches_quadrature() {
        let s = params(1.0, 2);
        let (lo, hi) = s.window();
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let mut m = [0.0f64; 3];
        for k in 0..=n {
            let x = lo + k as f64 * h;
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            let g = (-(x - s.spacing).powi(2) / (2.0 * s.sigma * s.sigma)).exp();
            m[0] += w * g;
            m[1] += w * g * x;
            m[2] += w * g * x * x;
        }
        let mean = m[1] / m[0];
        let var = m[2] / m[0] - mean * mean;

        let mut rng = SeededRng::new(2024, 0);
        let draws: Vec<f64> = (0..1_000_000).map(|_| sample_gap(&mut rng, &s)).collect();
        assert!(draws.iter().all(|g| (lo..=hi).contains(g)));
        let dm = draws.iter().sum::<f64>() / draws.len() as f64;
        let dv = draws.iter().map(|g| (g - dm).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((dv - var).abs() / var < 0.01, "sample {dv} vs quadrature {var}");
    }

    #[test]
    fn pair_correlation_lattice_comb() {
        let s = params(0.0, 6);
        let configs = sample_ensemble(1, &s, 3);
        let g = pair_correlation(&configs, 1.0, 100.0).unwrap();
        assert!((g.total() - 15.0).abs() < 1e-12);
        // the 2a gap across the origin adds one pair at 20
        assert_eq!(g.counts[10], 4.0);
        assert_eq!(g.counts[20], 3.0);
        assert_eq!(g.counts[60], 1.0);
        for (k, c) in g.counts.iter().enumerate() {
            if *c > 0.0 {
                assert_eq!(k % 10, 0);
            }
        }
    }

    #[test]
    fn pair_correlation_shells() {
        let s = params(1.0, 24);
        let configs = sample_ensemble(42, &s, 1000);
        let g = pair_correlation(&configs, 1.0, 400.0).unwrap();
        let pairs = (24 * 23 / 2) as f64;
        assert!((g.total() - pairs).abs() < 1e-9);
        let near = |r: usize| g.counts[r - 1] + g.counts[r];
        // first shell peak, depleted region between shells
        assert!(near(10) > 5.0 * (g.counts[14] + g.counts[15] + 1e-3));
        assert!(g.counts[3] == 0.0);
    }

    #[test]
    fn pair_correlation_empty_is_error() {
        assert!(matches!(pair_correlation(&[], 1.0, 10.0), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn text_round_trip() {
        let s = params(1.0, 8);
        let configs = sample_ensemble(9, &s, 4);
        let text = render_configurations(&s, 9, &configs);
        let (s2, seed, back) = parse_configurations(&text).unwrap();
        assert_eq!(s2, s);
        assert_eq!(seed, 9);
        assert_eq!(back, configs);
    }

    proptest! {
        #[test]
        fn samples_ordered_with_buffer(seed in any::<u64>(), stream in 0u64..1000, sigma in 0.0f64..4.0, half in 1usize..12) {
            let s = params(sigma, 2 * half);
            let cfg = sample_configuration(&mut SeededRng::new(seed, stream), &s);
            let x = cfg.positions();
            prop_assert_eq!(x.len(), 2 * half);
            prop_assert!(x.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(x.iter().all(|v| v.abs() >= 20.0 / 3.0 - 1e-12));
            for w in x.windows(2) {
                let gap = w[1] - w[0];
                if w[0] > 0.0 || w[1] < 0.0 {
                    prop_assert!((20.0 / 3.0 - 1e-12..=40.0 / 3.0 + 1e-12).contains(&gap));
                }
            }
        }
    }
}
