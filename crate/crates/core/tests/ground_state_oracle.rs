//! Imaginary-time ground state against a finite-difference diagonalisation.

use hhg_core::ensemble::{apply_photoelectron_mask, MaskSpec};
use hhg_core::physics::{AtomParams, Potential};
use hhg_core::tdse::{ground_state, Grid, GroundStateOptions};

/// Tridiagonal `-1/2 d^2/dx^2 + V` with Dirichlet walls at `+-half_width`.
struct FdHamiltonian {
    h: f64,
    diag: Vec<f64>,
    off: f64,
    xs: Vec<f64>,
}

impl FdHamiltonian {
    fn new(potential: &dyn Potential, half_width: f64, intervals: usize) -> Self {
        let h = 2.0 * half_width / intervals as f64;
        let xs: Vec<f64> = (1..intervals).map(|j| -half_width + j as f64 * h).collect();
        let diag = xs.iter().map(|&x| 1.0 / (h * h) + potential.value(x)).collect();
        Self { h, diag, off: -0.5 / (h * h), xs }
    }

    /// Eigenvalues below `e` (Sturm count from the LDL^T pivots).
    fn count_below(&self, e: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for (k, a) in self.diag.iter().enumerate() {
            d = a - e - if k == 0 { 0.0 } else { self.off * self.off / d };
            if d == 0.0 {
                d = 1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn lowest(&self) -> f64 {
        let (mut lo, mut hi) = (-10.0, 10.0);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse iteration with a shift just below `e`; Thomas algorithm.
    fn eigenvector(&self, e: f64) -> Vec<f64> {
        let n = self.diag.len();
        let shift = e - 1e-9;
        let mut v = vec![1.0; n];
        for _ in 0..8 {
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for k in 0..n {
                let a = self.diag[k] - shift - if k == 0 { 0.0 } else { self.off * c[k - 1] };
                c[k] = self.off / a;
                d[k] = (v[k] - if k == 0 { 0.0 } else { self.off * d[k - 1] }) / a;
            }
            for k in (0..n - 1).rev() {
                d[k] -= c[k] * d[k + 1];
            }
            let norm = (d.iter().map(|x| x * x).sum::<f64>() * self.h).sqrt();
            v = d.iter().map(|x| x / norm).collect();
        }
        v
    }
}

fn fd_ground_energy(intervals: usize) -> f64 {
    FdHamiltonian::new(&AtomParams::default().potential(), 60.0, intervals).lowest()
}

#[test]
fn energy_matches_richardson_extrapolated_finite_differences() {
    let coarse = fd_ground_energy(6000);
    let fine = fd_ground_energy(12000);
    let oracle = (4.0 * fine - coarse) / 3.0;

    let grid = Grid::symmetric(60.0, 1024).unwrap();
    let (psi, e0) = ground_state(grid, &AtomParams::default().potential(), GroundStateOptions::default()).unwrap();
    assert!((e0 - oracle).abs() < 1e-4, "spectral {e0} vs oracle {oracle}");
    assert!((e0 + 0.90).abs() < 0.005, "E0 = {e0}");
    assert!((psi.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn bound_state_is_removed_by_the_photoelectron_mask() {
    let atom = AtomParams::default().potential();
    let fd = FdHamiltonian::new(&atom, 60.0, 6000);
    let e = fd.lowest();
    let v = fd.eigenvector(e);
    let mask = MaskSpec::default();
    let oracle_tail: f64 = fd.xs.iter().zip(&v).map(|(&x, c)| (mask.value(x) * c).powi(2)).sum::<f64>() * fd.h;

    let grid = Grid::symmetric(60.0, 1024).unwrap();
    let (psi, _) = ground_state(grid, &atom, GroundStateOptions::default()).unwrap();
    let masked = apply_photoelectron_mask(&psi, &mask).norm();
    assert!(masked < 1e-2, "masked norm {masked}");
    // second-order finite differences resolve the tail to about a percent
    assert!((masked - oracle_tail).abs() < 2e-2 * oracle_tail, "{masked} vs {oracle_tail}");
}
