//! Unit conventions.
//!
//! Energies are carried internally in cm⁻¹, lengths in Å and masses in
//! unified atomic mass units. All user-facing energies are in kelvin.

/// 1 cm⁻¹ expressed in kelvin (hc/k_B).
pub const KELVIN_PER_WAVENUMBER: f64 = 1.4387769;

/// ħ²/(1 u · 1 Å²) in cm⁻¹.
pub const HBAR2_PER_AMU_A2: f64 = 33.715_258;

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Unified atomic mass unit in kg.
pub const AMU_KG: f64 = 1.660_539_066_60e-27;

/// Mass of a hydrogen atom in u.
pub const HYDROGEN_MASS: f64 = 1.007_825_032_07;

pub fn kelvin_to_wavenumber(e_kelvin: f64) -> f64 {
    e_kelvin / KELVIN_PER_WAVENUMBER
}

pub fn wavenumber_to_kelvin(e_wavenumber: f64) -> f64 {
    e_wavenumber * KELVIN_PER_WAVENUMBER
}

/// Kinetic-energy scale ħ²/(2μ) in cm⁻¹·Å² for a reduced mass in u.
///
/// Dividing an energy in cm⁻¹ by this value gives the corresponding
/// squared wavenumber in Å⁻².
pub fn hbar2_over_2mu(reduced_mass: f64) -> f64 {
    0.5 * HBAR2_PER_AMU_A2 / reduced_mass
}

/// Relative velocity in cm/s for a collision energy in kelvin.
pub fn relative_velocity_cm_s(e_kelvin: f64, reduced_mass: f64) -> f64 {
    let energy_j = e_kelvin * BOLTZMANN;
    let mass_kg = reduced_mass * AMU_KG;
    (2.0 * energy_j / mass_kg).sqrt() * 100.0
}

/// Å² to cm².
pub const ANGSTROM2_TO_CM2: f64 = 1e-16;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_constant_matches_codata() {
        let hbar = 1.054_571_817e-34_f64;
        let hc = 6.626_070_15e-34 * 2.997_924_58e10;
        let value = hbar * hbar / (AMU_KG * 1e-20) / hc;
        assert!((value - HBAR2_PER_AMU_A2).abs() < 1e-5, "{value}");
    }

    #[test]
    fn kelvin_round_trip() {
        let e = 25.45;
        assert!((wavenumber_to_kelvin(kelvin_to_wavenumber(e)) - e).abs() < 1e-12);
    }
}
