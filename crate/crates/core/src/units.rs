//! Conversions between Hartree atomic units and laboratory units.
//!
//! Everything inside the crate is atomic units; these helpers are only used
//! when reading a configuration or reporting fit parameters.

/// Atomic unit of time in femtoseconds.
pub const AU_TIME_FS: f64 = 2.418_884_326_585_747e-2;

/// Atomic unit of length in nanometres.
pub const AU_LENGTH_NM: f64 = 5.291_772_109_03e-2;

/// Photon wavelength (nm) times photon energy (Hartree).
pub const HARTREE_NM: f64 = 45.563_352_529_120_56;

/// Intensity (W/cm^2) of a linearly polarised field of unit amplitude.
pub const AU_INTENSITY_W_CM2: f64 = 3.509_445_094_4e16;

pub fn fs_to_au(t_fs: f64) -> f64 {
    t_fs / AU_TIME_FS
}

pub fn au_to_fs(t_au: f64) -> f64 {
    t_au * AU_TIME_FS
}

pub fn nm_to_au(len_nm: f64) -> f64 {
    len_nm / AU_LENGTH_NM
}

pub fn wavelength_nm_to_omega(lambda_nm: f64) -> f64 {
    HARTREE_NM / lambda_nm
}

pub fn omega_to_wavelength_nm(omega: f64) -> f64 {
    HARTREE_NM / omega
}

pub fn intensity_to_field(intensity_w_cm2: f64) -> f64 {
    (intensity_w_cm2 / AU_INTENSITY_W_CM2).sqrt()
}

pub fn field_to_intensity(field: f64) -> f64 {
    field * field * AU_INTENSITY_W_CM2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_laser_conversions() {
        // 1030 nm Yb laser
        assert!((wavelength_nm_to_omega(1030.0) - 0.044).abs() < 5e-4);
        // 7.896e14 W/cm^2 is a 0.15 a.u. field
        assert!((intensity_to_field(7.896e14) - 0.15).abs() < 1e-4);
        assert!((au_to_fs(fs_to_au(7.43)) - 7.43).abs() < 1e-12);
    }
}
