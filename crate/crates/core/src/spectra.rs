//! Spectral products of recorded series.
//!
//! Spectra are `|DFT|` magnitudes with the unitary `1/sqrt(N)` scaling, so
//! the two-sided power equals the signal energy. Frequencies are expressed
//! in harmonic orders of the driving laser.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::physics::LaserParams;

/// Samples `values[k]` at `t_start + k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    pub t_start: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl UniformSeries {
    pub fn new(t_start: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", "sampling step must be positive"));
        }
        Ok(Self { t_start, dt, values })
    }

    /// Checks that `times` is uniform to a relative `1e-9` of the step.
    pub fn from_samples(times: &[f64], values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Misaligned(format!("{} times for {} values", times.len(), values.len())));
        }
        if times.len() < 2 {
            return Err(Error::EmptyInput("series needs at least two samples"));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (k, t) in times.iter().enumerate() {
            if (t - (times[0] + k as f64 * dt)).abs() > 1e-9 * dt.abs() {
                return Err(Error::NonUniformSampling(k));
            }
        }
        Self::new(times[0], dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Optional taper applied before the full-record transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Apodization {
    #[default]
    None,
    Hann,
}

/// One-sided magnitude spectrum on the axis `order = k * order_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub order_step: f64,
    pub magnitudes: Vec<f64>,
    /// Length of the transformed record.
    pub n_samples: usize,
}

impl Spectrum {
    pub fn order(&self, k: usize) -> f64 {
        k as f64 * self.order_step
    }

    pub fn max_order(&self) -> f64 {
        self.order(self.magnitudes.len() - 1)
    }

    /// Sum of squared magnitudes over all `N` two-sided bins.
    pub fn power(&self) -> f64 {
        let n = self.n_samples;
        self.magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let twin = k != 0 && !(n % 2 == 0 && k == n / 2);
                m * m * if twin { 2.0 } else { 1.0 }
            })
            .sum()
    }

    fn bins_near(&self, order: f64, half_width: f64) -> std::ops::Range<usize> {
        let lo = ((order - half_width) / self.order_step).ceil().max(0.0) as usize;
        let hi = ((order + half_width) / self.order_step).floor().max(0.0) as usize + 1;
        lo.min(self.magnitudes.len())..hi.min(self.magnitudes.len())
    }
}

pub fn hhg_spectrum(series: &UniformSeries, omega: f64, apodization: Apodization) -> Result<Spectrum> {
    let n = series.len();
    if n < 2 {
        return Err(Error::EmptyInput("spectrum needs at least two samples"));
    }
    let mut data: Vec<Complex64> = series.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if apodization == Apodization::Hann {
        for (k, c) in data.iter_mut().enumerate() {
            *c *= (PI * k as f64 / (n - 1) as f64).sin().powi(2);
        }
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut data);
    let scale = 1.0 / (n as f64).sqrt();
    let magnitudes = data[..=n / 2].iter().map(|c| c.norm() * scale).collect();
    Ok(Spectrum {
        order_step: 2.0 * PI / (n as f64 * series.dt) / omega,
        magnitudes,
        n_samples: n,
    })
}

/// Largest magnitude within `(q - 1/2, q + 1/2)` for each order `q`.
pub fn harmonic_peaks(spec: &Spectrum, orders: &[u32]) -> Result<Vec<f64>> {
    orders
        .iter()
        .map(|&q| {
            let q = f64::from(q);
            if q + 0.5 > spec.max_order() {
                return Err(Error::invalid("orders", format!("order {q} beyond the spectral axis")));
            }
            let range = spec.bins_near(q, 0.5);
            let open = range.filter(|&k| (spec.order(k) - q).abs() < 0.5);
            let peak = open.map(|k| spec.magnitudes[k]).fold(f64::NAN, f64::max);
            if peak.is_nan() {
                // axis coarser than one harmonic: nearest bin
                let k = (q / spec.order_step).round() as usize;
                Ok(spec.magnitudes[k])
            } else {
                Ok(peak)
            }
        })
        .collect()
}

fn orders_in(lo: u32, hi: u32, parity: Option<u32>) -> Vec<u32> {
    (lo..=hi).filter(|q| parity.is_none_or(|p| q % 2 == p)).collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean even-order peak over mean odd-order peak within `[lo, hi]`.
pub fn parity_contrast(spec: &Spectrum, lo: u32, hi: u32) -> Result<f64> {
    let even = orders_in(lo, hi, Some(0));
    let odd = orders_in(lo, hi, Some(1));
    if even.len() < 2 || odd.len() < 2 {
        return Err(Error::invalid("band", "needs at least two odd and two even orders"));
    }
    Ok(mean(&harmonic_peaks(spec, &even)?) / mean(&harmonic_peaks(spec, &odd)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSelection {
    Odd,
    All,
}

/// Plateau orders: from the first order above the ionisation threshold
/// `I_p / omega` up to two orders below the classical cutoff.
pub fn plateau_band(laser: &LaserParams, ionization_potential: f64) -> (u32, u32) {
    let lo = (ionization_potential / laser.omega).floor() + 1.0;
    let hi = (laser.cutoff_order(ionization_potential) - 2.0).floor();
    (lo.max(1.0) as u32, hi.max(lo) as u32)
}

/// Mean peak magnitude over `[lo, hi]`.
pub fn plateau_statistics(spec: &Spectrum, lo: u32, hi: u32, selection: OrderSelection) -> Result<f64> {
    let orders = orders_in(lo, hi, (selection == OrderSelection::Odd).then_some(1));
    if orders.is_empty() {
        return Err(Error::invalid("band", "no orders selected"));
    }
    Ok(mean(&harmonic_peaks(spec, &orders)?))
}

/// Half the `log10` of the mean power over bins within `half_width`
/// orders of each bin. Averaging power rather than logarithms keeps the
/// empty bins between sharp harmonics from dominating.
pub fn smoothed_log_magnitude(spec: &Spectrum, half_width: f64) -> Vec<f64> {
    let mut prefix = vec![0.0; spec.magnitudes.len() + 1];
    for (k, m) in spec.magnitudes.iter().enumerate() {
        prefix[k + 1] = prefix[k] + m * m;
    }
    (0..spec.magnitudes.len())
        .map(|k| {
            let r = spec.bins_near(spec.order(k), half_width);
            let mean = (prefix[r.end] - prefix[r.start]) / (r.end - r.start) as f64;
            0.5 * mean.max(f64::MIN_POSITIVE).log10()
        })
        .collect()
}

/// Plateau cutoff as the knee of the spectrum.
///
/// With `L` the log-magnitude smoothed over one order on each side, the
/// search starts at `search_from` and takes the first run of orders `q`
/// where `L(q) - L(q + span) >= decades`. The cutoff is the middle of the
/// steepest such span that starts within `span` orders of the run's
/// beginning (earliest on ties). `None` when the spectrum never drops that
/// fast.
pub fn locate_cutoff(spec: &Spectrum, search_from: f64, decades: f64, span: f64) -> Option<f64> {
    let smooth = smoothed_log_magnitude(spec, 1.0);
    let reach = (span / spec.order_step).round() as usize;
    let start = (search_from / spec.order_step).ceil() as usize;
    let drop = |k: usize| smooth[k] - smooth[k + reach];
    let last = smooth.len().checked_sub(reach + 1)?;
    let first = (start..=last).find(|&k| drop(k) >= decades)?;
    let steepest = (first..=last.min(first + reach))
        .take_while(|&k| drop(k) >= decades)
        .fold(first, |best, k| if drop(k) > drop(best) { k } else { best });
    Some(spec.order(steepest) + 0.5 * span)
}

/// Time-frequency magnitude `|d~(tau, omega)|` on the `(tau, order)` lattice,
/// stored row-major by `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborMap {
    pub taus: Vec<f64>,
    pub order_step: f64,
    pub n_orders: usize,
    pub window: f64,
    pub values: Vec<f64>,
}

impl GaborMap {
    pub fn at(&self, tau_index: usize, order_index: usize) -> f64 {
        self.values[tau_index * self.n_orders + order_index]
    }

    pub fn row(&self, tau_index: usize) -> &[f64] {
        &self.values[tau_index * self.n_orders..(tau_index + 1) * self.n_orders]
    }
}

/// `cos^4(pi t / T_w)` on `|t| < T_w/2`.
pub fn gabor_window(t: f64, duration: f64) -> f64 {
    if t.abs() < 0.5 * duration {
        (PI * t / duration).cos().powi(4)
    } else {
        0.0
    }
}

/// Gabor transform with the `cos^4` window on the series' own frequency
/// grid, for `tau` from the first to the last sample in steps of `tau_step`.
/// Rows are truncated at `max_order` when given.
pub fn gabor(series: &UniformSeries, omega: f64, duration: f64, tau_step: f64, max_order: Option<f64>) -> Result<GaborMap> {
    if !(duration > 0.0) {
        return Err(Error::invalid("T_w", "window duration must be positive"));
    }
    if !(tau_step > 0.0) {
        return Err(Error::invalid("tau_step", "must be positive"));
    }
    let n = series.len();
    if n < 2 {
        return Err(Error::EmptyInput("gabor needs at least two samples"));
    }
    let order_step = 2.0 * PI / (n as f64 * series.dt) / omega;
    let n_orders = match max_order {
        Some(q) => ((q / order_step).floor() as usize + 1).min(n / 2 + 1),
        None => n / 2 + 1,
    };
    let t_end = series.time(n - 1);
    let n_tau = ((t_end - series.t_start) / tau_step).floor() as usize + 1;
    let taus: Vec<f64> = (0..n_tau).map(|i| series.t_start + i as f64 * tau_step).collect();
    let fft = FftPlanner::new().plan_fft_forward(n);

    let rows: Vec<Vec<f64>> = taus
        .par_iter()
        .map(|&tau| {
            let mut data = vec![Complex64::new(0.0, 0.0); n];
            let lo = (((tau - 0.5 * duration - series.t_start) / series.dt).floor().max(0.0)) as usize;
            let hi = ((((tau + 0.5 * duration - series.t_start) / series.dt).ceil()) as usize).min(n - 1);
            for k in lo..=hi {
                data[k] = Complex64::new(series.values[k] * gabor_window(tau - series.time(k), duration), 0.0);
            }
            fft.process(&mut data);
            data[..n_orders].iter().map(|c| c.norm() * series.dt).collect()
        })
        .collect();

    Ok(GaborMap {
        taus,
        order_step,
        n_orders,
        window: duration,
        values: rows.concat(),
    })
}

/// Exponential purity model `gamma (exp(-(t - t0)/t_star) - 1) + 1`, times in fs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurityFit {
    pub gamma: f64,
    pub t_star: f64,
    pub t0: f64,
    /// Root-mean-square residual over the fitted points.
    pub residual_rms: f64,
    /// Set when the input is flat and the decay is undefined.
    pub degenerate: bool,
}

impl PurityFit {
    pub fn model(gamma: f64, t_star: f64, t0: f64, t: f64) -> f64 {
        gamma * ((-(t - t0) / t_star).exp() - 1.0) + 1.0
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        Self::model(self.gamma, self.t_star, self.t0, t)
    }
}

/// Least-squares fit of [`PurityFit::model`] to the points with
/// `t_min <= t <= t_max`.
///
/// A coarse `(t_star, t0)` grid seeds the search, with `gamma` solved
/// linearly at every node; the best seeds are refined by damped
/// Gauss-Newton in `(gamma, ln t_star, t0)` with `gamma` kept in `[0, 1]`.
pub fn fit_purity_decay(times: &[f64], purity: &[f64], t_min: f64, t_max: f64) -> Result<PurityFit> {
    if times.len() != purity.len() {
        return Err(Error::Misaligned(format!("{} times for {} purities", times.len(), purity.len())));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(purity)
        .filter(|(t, _)| (t_min..=t_max).contains(*t))
        .map(|(t, p)| (*t, *p))
        .unzip();
    if t.len() < 3 {
        return Err(Error::EmptyInput("purity fit needs at least three points in the window"));
    }
    let span = t[t.len() - 1] - t[0];
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-14 * hi.abs().max(1.0) || span <= 0.0 {
        let rms = (y.iter().map(|p| (p - 1.0).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
        return Ok(PurityFit {
            gamma: 0.0,
            t_star: span.max(1.0),
            t0: t[0],
            residual_rms: rms,
            degenerate: true,
        });
    }

    let problem = FitProblem { t: &t, y: &y };
    let mut seeds: Vec<(f64, [f64; 3])> = Vec::new();
    for i in 0..16 {
        let t_star = span * 0.01 * 2f64.powf(i as f64 * 0.75);
        for j in 0..13 {
            let t0 = t[0] - span + j as f64 * (2.0 * span / 12.0);
            let gamma = problem.best_gamma(t_star, t0);
            let p = [gamma, t_star.ln(), t0];
            seeds.push((problem.cost(&p), p));
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<(f64, [f64; 3])> = None;
    for (_, seed) in seeds.iter().take(6) {
        let p = problem.refine(*seed);
        let c = problem.cost(&p);
        if best.is_none_or(|(bc, _)| c < bc) {
            best = Some((c, p));
        }
    }
    let (cost, p) = best.expect("at least one seed");
    Ok(PurityFit {
        gamma: p[0],
        t_star: p[1].exp(),
        t0: p[2],
        residual_rms: (2.0 * cost / t.len() as f64).sqrt(),
        degenerate: false,
    })
}

struct FitProblem<'a> {
    t: &'a [f64],
    y: &'a [f64],
}

impl FitProblem<'_> {
    fn residuals(&self, p: &[f64; 3]) -> Vec<f64> {
        let t_star = p[1].exp();
        self.t
            .iter()
            .zip(self.y)
            .map(|(t, y)| PurityFit::model(p[0], t_star, p[2], *t) - y)
            .collect()
    }

    /// Half the sum of squared residuals.
    fn cost(&self, p: &[f64; 3]) -> f64 {
        0.5 * self.residuals(p).iter().map(|r| r * r).sum::<f64>()
    }

    fn best_gamma(&self, t_star: f64, t0: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (t, y) in self.t.iter().zip(self.y) {
            let g = (-(t - t0) / t_star).exp() - 1.0;
            num += g * (y - 1.0);
            den += g * g;
        }
        if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    fn jacobian(&self, p: &[f64; 3]) -> Vec<[f64; 3]> {
        let t_star = p[1].exp();
        self.t
            .iter()
            .map(|t| {
                let u = (t - p[2]) / t_star;
                let e = (-u).exp();
                [e - 1.0, p[0] * e * u, p[0] * e / t_star]
            })
            .collect()
    }

    fn project(p: [f64; 3]) -> [f64; 3] {
        [p[0].clamp(0.0, 1.0), p[1].clamp(-60.0, 60.0), p[2]]
    }

    fn refine(&self, start: [f64; 3]) -> [f64; 3] {
        let mut p = Self::project(start);
        let mut cost = self.cost(&p);
        let mut lambda = 1e-3;
        for _ in 0..500 {
            let r = self.residuals(&p);
            let jac = self.jacobian(&p);
            let mut jtj = [[0.0; 3]; 3];
            let mut jtr = [0.0; 3];
            for (row, ri) in jac.iter().zip(&r) {
                for a in 0..3 {
                    jtr[a] += row[a] * ri;
                    for b in 0..3 {
                        jtj[a][b] += row[a] * row[b];
                    }
                }
            }
            let mut improved = false;
            for _ in 0..30 {
                let mut m = jtj;
                for a in 0..3 {
                    m[a][a] += lambda * jtj[a][a].max(1e-300);
                }
                let Some(step) = solve3(m, jtr.map(|v| -v)) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial = Self::project([p[0] + step[0], p[1] + step[1], p[2] + step[2]]);
                let trial_cost = self.cost(&trial);
                if trial_cost <= cost {
                    let moved = (0..3).map(|a| (trial[a] - p[a]).abs()).fold(0.0, f64::max);
                    p = trial;
                    let gain = cost - trial_cost;
                    cost = trial_cost;
                    lambda = (lambda * 0.1).max(1e-15);
                    improved = moved > 1e-15 && gain > 0.0;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        p
    }
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const OMEGA: f64 = 0.057;

    fn tone(cycles: usize, per_cycle: usize, f: impl Fn(f64) -> f64) -> UniformSeries {
        let period = 2.0 * PI / OMEGA;
        let dt = period / per_cycle as f64;
        let n = cycles * per_cycle;
        UniformSeries::new(0.0, dt, (0..n).map(|k| f(k as f64 * dt)).collect()).unwrap()
    }

    #[test]
    fn pure_tone_peaks_at_fundamental() {
        let s = tone(16, 64, |t| (OMEGA * t).cos());
        let spec = hhg_spectrum(&s, OMEGA, Apodization::None).unwrap();
        let k = spec
            .magnitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((spec.order(k) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parseval() {
        let s = tone(10, 50, |t| (0.3 * t).sin() * (-(t - 300.0).powi(2) / 1e4).exp() + 0.01 * (2.1 * t).cos());
        let spec = hhg_spectrum(&s, OMEGA, Apodization::None).unwrap();
        assert!((spec.power() - s.energy()).abs() / s.energy() < 1e-10);
        let odd = UniformSeries::new(0.0, 0.5, s.values[..499].to_vec()).unwrap();
        let spec = hhg_spectrum(&odd, OMEGA, Apodization::None).unwrap();
        assert!((spec.power() - odd.energy()).abs() / odd.energy() < 1e-10);
    }

    #[test]
    fn nonuniform_sampling_rejected() {
        let times = [0.0, 1.0, 2.0, 3.5];
        let err = UniformSeries::from_samples(&times, vec![0.0; 4]).unwrap_err();
        assert!(matches!(err, Error::NonUniformSampling(_)));
        assert!(UniformSeries::from_samples(&[0.0, 0.5, 1.0], vec![1.0; 3]).is_ok());
    }

    #[test]
    fn tone_at_fifth_harmonic() {
        let s = tone(20, 128, |t| 2.0 * (5.0 * OMEGA * t).sin());
        let spec = hhg_spectrum(&s, OMEGA, Apodization::None).unwrap();
        let peaks = harmonic_peaks(&spec, &[3, 4, 5, 6, 7]).unwrap();
        // 2 sin -> amplitude N/sqrt(N) at the bin
        let expected = (s.len() as f64).sqrt();
        assert!((peaks[2] - expected).abs() / expected < 1e-10);
        for (i, p) in peaks.iter().enumerate() {
            if i != 2 {
                assert!(*p < 1e-10 * expected);
            }
        }
        assert!(harmonic_peaks(&spec, &[70]).is_err());
    }

    #[test]
    fn half_period_antisymmetric_signal_has_no_even_orders() {
        let s = tone(24, 256, |t| {
            let p = OMEGA * t;
            p.sin() + 0.3 * (3.0 * p).sin() + 0.05 * (7.0 * p + 0.4).cos()
        });
        let spec = hhg_spectrum(&s, OMEGA, Apodization::None).unwrap();
        let contrast = parity_contrast(&spec, 2, 9).unwrap();
        assert!(contrast < 1e-12, "contrast {contrast}");
        assert!(parity_contrast(&spec, 3, 5).is_err());
    }

    #[test]
    fn flat_comb_plateau_mean() {
        let s = tone(32, 128, |t| (1..=15).step_by(2).map(|q| (q as f64 * OMEGA * t).cos()).sum());
        let spec = hhg_spectrum(&s, OMEGA, Apodization::None).unwrap();
        let mean = plateau_statistics(&spec, 3, 13, OrderSelection::Odd).unwrap();
        let expected = (s.len() as f64).sqrt() / 2.0;
        assert!((mean - expected).abs() / expected < 1e-10);
    }

    #[test]
    fn cutoff_of_synthetic_comb() {
        // flat comb to order 25, then three decades per two orders
        let s = tone(32, 256, |t| {
            (1..=41)
                .step_by(2)
                .map(|q| {
                    let a = if q <= 25 { 1.0 } else { 10f64.powf(-1.5 * (q - 25) as f64 / 2.0) };
                    a * (q as f64 * OMEGA * t).sin()
                })
                .sum()
        });
        let spec = hhg_spectrum(&s, OMEGA, Apodization::None).unwrap();
        let q = locate_cutoff(&spec, 5.0, 1.0, 4.0).unwrap();
        assert!((q - 25.0).abs() <= 2.0, "cutoff {q}");
    }

    #[test]
    fn gabor_tone_ridge() {
        let s = tone(12, 128, |t| (9.0 * OMEGA * t).sin());
        let period = 2.0 * PI / OMEGA;
        let map = gabor(&s, OMEGA, 0.35 * period, period / 64.0, Some(30.0)).unwrap();
        let interior = map.taus.iter().enumerate().filter(|(_, &tau)| tau > period && tau < 11.0 * period);
        for (i, _) in interior {
            let row = map.row(i);
            let k = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert!((k as f64 * map.order_step - 9.0).abs() <= map.order_step, "ridge at {}", k as f64 * map.order_step);
        }
    }

    #[test]
    fn gabor_two_tones_and_burst() {
        let period = 2.0 * PI / OMEGA;
        let s = tone(12, 128, |t| (5.0 * OMEGA * t).sin() + (35.0 * OMEGA * t).sin());
        let map = gabor(&s, OMEGA, 0.35 * period, period / 16.0, Some(50.0)).unwrap();
        let i = map.taus.len() / 2;
        let row = map.row(i);
        let at = |q: f64| row[(q / map.order_step).round() as usize];
        assert!(at(5.0) > 10.0 * at(20.0));
        assert!(at(35.0) > 10.0 * at(20.0));

        let tb = 6.3 * period;
        let burst = tone(12, 128, |t| (-(t - tb).powi(2) / 20.0).exp() * (11.0 * OMEGA * t).cos());
        let map = gabor(&burst, OMEGA, 0.35 * period, period / 64.0, Some(20.0)).unwrap();
        let col = (11.0 / map.order_step).round() as usize;
        let best = (0..map.taus.len()).max_by(|&a, &b| map.at(a, col).total_cmp(&map.at(b, col))).unwrap();
        assert!((map.taus[best] - tb).abs() <= period / 64.0);
    }

    #[test]
    fn gabor_window_shape() {
        assert_eq!(gabor_window(0.0, 2.0), 1.0);
        assert_eq!(gabor_window(1.0, 2.0), 0.0);
        assert!((gabor_window(0.5, 2.0) - 0.25).abs() < 1e-15);
    }

    fn synthetic(gamma: f64, t_star: f64, t0: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..120).map(|k| 5.0 + k as f64 * 0.2).collect();
        let y = t.iter().map(|&t| PurityFit::model(gamma, t_star, t0, t)).collect();
        (t, y)
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let (t, y) = synthetic(0.5, 3.0, 5.0);
        let fit = fit_purity_decay(&t, &y, 0.0, 100.0).unwrap();
        assert!(!fit.degenerate);
        assert!((fit.gamma - 0.5).abs() < 1e-6, "{fit:?}");
        assert!((fit.t_star - 3.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.t0 - 5.0).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn refit_is_idempotent() {
        let (t, _) = synthetic(0.5, 3.0, 5.0);
        let y: Vec<f64> = t.iter().map(|&t| PurityFit::model(0.63, 7.43, 7.53, t) + 1e-3 * (t * 3.1).sin()).collect();
        let fit = fit_purity_decay(&t, &y, 0.0, 100.0).unwrap();
        let again: Vec<f64> = t.iter().map(|&t| fit.evaluate(t)).collect();
        let refit = fit_purity_decay(&t, &again, 0.0, 100.0).unwrap();
        assert!((refit.gamma - fit.gamma).abs() < 1e-8);
        assert!((refit.t_star - fit.t_star).abs() < 1e-8 * fit.t_star.max(1.0));
        assert!((refit.t0 - fit.t0).abs() < 1e-8 * fit.t0.abs().max(1.0));
    }

    #[test]
    fn constant_series_is_degenerate() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let fit = fit_purity_decay(&t, &[0.9; 10], 0.0, 10.0).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.gamma, 0.0);
        assert!(fit_purity_decay(&t[..2], &[1.0, 0.9], 0.0, 10.0).is_err());
    }

    proptest! {
        #[test]
        fn contrast_is_scale_invariant(scale in 1e-6f64..1e6, mix in 0.0f64..1.0) {
            let s = tone(16, 128, |t| (3.0 * OMEGA * t).sin() + mix * (4.0 * OMEGA * t).cos() + 0.2 * (5.0 * OMEGA * t).sin());
            let scaled = UniformSeries::new(s.t_start, s.dt, s.values.iter().map(|v| v * scale).collect()).unwrap();
            let a = parity_contrast(&hhg_spectrum(&s, OMEGA, Apodization::None).unwrap(), 2, 7).unwrap();
            let b = parity_contrast(&hhg_spectrum(&scaled, OMEGA, Apodization::None).unwrap(), 2, 7).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
        }
    }
}
