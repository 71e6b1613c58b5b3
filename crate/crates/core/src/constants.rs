//! Physical constants (CODATA 2018, exact SI where defined).

/// Bohr magneton (J/T).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

/// Planck constant (J·s), exact since the 2019 SI redefinition.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Electron-spin Larmor frequency per tesla per unit g-factor, in GHz/T.
pub const GYROMAGNETIC_PER_G: f64 = BOHR_MAGNETON / PLANCK * 1e-9;

/// The constants as a value, for callers that want to carry them around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub bohr_magneton: f64,
    pub planck: f64,
    pub gyromagnetic_per_g: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            bohr_magneton: BOHR_MAGNETON,
            planck: PLANCK,
            gyromagnetic_per_g: GYROMAGNETIC_PER_G,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gyromagnetic_ratio_to_six_figures() {
        let c = PhysicalConstants::default();
        assert_eq!(c.gyromagnetic_per_g, c.bohr_magneton / c.planck * 1e-9);
        // 13.996245 GHz/T
        assert!((c.gyromagnetic_per_g - 13.996245).abs() < 5e-7);
    }
}
