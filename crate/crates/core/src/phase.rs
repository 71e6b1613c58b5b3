//! Parametrised (field, temperature) phase diagram of a uniaxial
//! antiferromagnet with the field along the easy axis.
//!
//! The boundary curves are a smooth anchor-plus-shape model, not a
//! thermodynamic calculation:
//!
//! * ordered dome: `T_N(B) = T_N(0)·(1 − (B/B_c)^β)`, zero for `B ≥ B_c`
//! * spin-flop → paramagnetic: `B_up(T) = B_up(0)·(1 − T/T_N(0))^(1/β)`
//! * antiferromagnetic → spin-flop: `min(B_sf(0), B_up(T))`, flat at low
//!   temperature until it meets the upper boundary.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::model::{spin_flop_field, SpinSystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Antiferromagnetic,
    SpinFlop,
    Paramagnetic,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Antiferromagnetic => "antiferromagnetic",
            Phase::SpinFlop => "spin-flop",
            Phase::Paramagnetic => "paramagnetic",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseBoundaries {
    /// Néel temperature at zero field (K).
    pub neel_zero_field: f64,
    /// AFM → spin-flop field at zero temperature (T).
    pub spin_flop_zero_temp: f64,
    /// Exponent β of the Néel line.
    pub afm_boundary_shape: f64,
    /// Field B_c where the Néel line reaches zero temperature (T).
    pub critical_field: f64,
    /// Spin-flop → paramagnetic field at zero temperature (T).
    pub spin_flop_upper: f64,
}

/// Default boundaries are anchored on T_N and the spin-flop field only;
/// the curve shapes are approximate.
pub const DEFAULT_BOUNDARIES_APPROXIMATE: bool = true;

impl Default for PhaseBoundaries {
    fn default() -> Self {
        Self::anchored_on(&SpinSystemParams::default())
    }
}

impl PhaseBoundaries {
    /// Default shapes with the anchors taken from a spin system.
    pub fn anchored_on(spins: &SpinSystemParams) -> Self {
        Self {
            neel_zero_field: spins.neel_temperature,
            spin_flop_zero_temp: spin_flop_field(spins),
            afm_boundary_shape: 2.0,
            critical_field: 2.6,
            spin_flop_upper: 2.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.neel_zero_field, "neel_zero_field")?;
        ensure_positive(self.spin_flop_zero_temp, "spin_flop_zero_temp")?;
        ensure_positive(self.afm_boundary_shape, "afm_boundary_shape")?;
        ensure_positive(self.critical_field, "critical_field")?;
        ensure_positive(self.spin_flop_upper, "spin_flop_upper")?;
        if self.spin_flop_zero_temp >= self.spin_flop_upper {
            return Err(Error::InvalidParameter {
                name: "spin_flop_zero_temp",
                reason: format!(
                    "must be below spin_flop_upper ({} >= {})",
                    self.spin_flop_zero_temp, self.spin_flop_upper
                ),
            });
        }
        if self.spin_flop_upper > self.critical_field {
            return Err(Error::InvalidParameter {
                name: "spin_flop_upper",
                reason: format!(
                    "must not exceed critical_field ({} > {})",
                    self.spin_flop_upper, self.critical_field
                ),
            });
        }
        Ok(())
    }

    /// Ordering temperature at field `b`.
    pub fn neel_temperature(&self, b: f64) -> f64 {
        if b >= self.critical_field {
            0.0
        } else {
            self.neel_zero_field * (1.0 - (b / self.critical_field).powf(self.afm_boundary_shape))
        }
    }

    /// Spin-flop → paramagnetic field at temperature `t`.
    pub fn upper_field(&self, t: f64) -> f64 {
        if t >= self.neel_zero_field {
            0.0
        } else {
            self.spin_flop_upper
                * (1.0 - t / self.neel_zero_field).powf(1.0 / self.afm_boundary_shape)
        }
    }

    fn lower_field(&self, t: f64) -> f64 {
        self.spin_flop_zero_temp.min(self.upper_field(t))
    }
}

/// AFM / spin-flop boundary field at temperature `t`, for `0 ≤ t < T_N(0)`.
pub fn spin_flop_boundary(t: f64, boundaries: &PhaseBoundaries) -> Result<f64> {
    if !(t >= 0.0 && t < boundaries.neel_zero_field) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            reason: format!("must lie in [0, {}) K, got {t}", boundaries.neel_zero_field),
        });
    }
    Ok(boundaries.lower_field(t))
}

/// Phase at field `b` (T) and temperature `t` (K), both non-negative.
/// Points on a boundary go to the higher-symmetry side.
pub fn classify_phase(b: f64, t: f64, boundaries: &PhaseBoundaries) -> Phase {
    if t >= boundaries.neel_temperature(b) || b >= boundaries.upper_field(t) {
        Phase::Paramagnetic
    } else if b < boundaries.lower_field(t) {
        Phase::Antiferromagnetic
    } else {
        Phase::SpinFlop
    }
}

/// Classification of every grid point, field-major.
pub fn phase_map(
    fields: &[f64],
    temps: &[f64],
    boundaries: &PhaseBoundaries,
) -> Vec<(f64, f64, Phase)> {
    fields
        .iter()
        .flat_map(|&b| {
            temps
                .iter()
                .map(move |&t| (b, t, classify_phase(b, t, boundaries)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_points() {
        let pb = PhaseBoundaries::default();
        assert_eq!(classify_phase(0.0, 3.0, &pb), Phase::Paramagnetic);
        assert_eq!(classify_phase(0.0, 1.0, &pb), Phase::Antiferromagnetic);
        assert_eq!(classify_phase(1.5, 0.025, &pb), Phase::SpinFlop);
        assert_eq!(classify_phase(0.5, 1.0, &pb), Phase::Antiferromagnetic);
        assert_eq!(classify_phase(2.9, 0.025, &pb), Phase::Paramagnetic);
    }

    #[test]
    fn boundary_points_go_to_higher_symmetry() {
        let pb = PhaseBoundaries::default();
        assert_eq!(
            classify_phase(0.0, pb.neel_zero_field, &pb),
            Phase::Paramagnetic
        );
        assert_eq!(
            classify_phase(pb.spin_flop_zero_temp, 0.0, &pb),
            Phase::SpinFlop
        );
        assert_eq!(
            classify_phase(pb.spin_flop_upper, 0.0, &pb),
            Phase::Paramagnetic
        );
    }

    #[test]
    fn boundary_examples() {
        let pb = PhaseBoundaries::default();
        let b0 = spin_flop_boundary(0.0, &pb).unwrap();
        assert!((b0 - spin_flop_field(&SpinSystemParams::default())).abs() < 1e-6);
        assert!((b0 - 1.2146).abs() < 5e-5);
        let low = spin_flop_boundary(0.025, &pb).unwrap();
        assert!((low - b0).abs() <= 0.01 * b0);
        assert!(spin_flop_boundary(pb.neel_zero_field, &pb).is_err());
        assert!(spin_flop_boundary(-0.1, &pb).is_err());
    }

    #[test]
    fn boundary_continuous_towards_neel_point() {
        let pb = PhaseBoundaries::default();
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let t = pb.neel_zero_field * i as f64 / 1000.0;
            let b = spin_flop_boundary(t, &pb).unwrap();
            assert!(b <= prev);
            prev = b;
        }
        let near = spin_flop_boundary(pb.neel_zero_field * (1.0 - 1e-9), &pb).unwrap();
        assert!(near < 1e-3);
        // and the ordered region closes there too
        assert!(pb.upper_field(pb.neel_zero_field * (1.0 - 1e-9)) < 1e-3);
    }

    #[test]
    fn zero_field_changes_once() {
        let pb = PhaseBoundaries::default();
        let labels: Vec<Phase> = (0..=600)
            .map(|i| classify_phase(0.0, i as f64 * 0.005, &pb))
            .collect();
        let changes = labels.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1);
        let k = labels
            .iter()
            .position(|&p| p == Phase::Paramagnetic)
            .unwrap();
        assert!((k as f64 * 0.005 - 2.495).abs() < 0.005 + 1e-12);
    }

    #[test]
    fn validation() {
        assert!(PhaseBoundaries::default().validate().is_ok());
        let bad = PhaseBoundaries {
            spin_flop_zero_temp: 3.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PhaseBoundaries {
            critical_field: 2.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn raster_order() {
        let pb = PhaseBoundaries::default();
        let m = phase_map(&[0.0, 1.5], &[0.5, 3.0], &pb);
        assert_eq!(m.len(), 4);
        assert_eq!(m[0], (0.0, 0.5, Phase::Antiferromagnetic));
        assert_eq!(m[1], (0.0, 3.0, Phase::Paramagnetic));
        assert_eq!(m[2], (1.5, 0.5, Phase::SpinFlop));
    }
}
