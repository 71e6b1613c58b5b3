use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::model::{
    magnon_branches, spin_flop_field, CavityParams, CouplingParams, SpinSystemParams,
};

/// Damping of the two modes, all as FWHM in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossParams {
    pub magnon_linewidth: f64,
    pub cavity_internal_linewidth: f64,
    pub cavity_external_linewidth: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self::from_cavity(&CavityParams::default(), 0.035)
    }
}

impl LossParams {
    /// Split the cavity's total linewidth `f_c / Q` by its external coupling fraction.
    pub fn from_cavity(cavity: &CavityParams, magnon_linewidth: f64) -> Self {
        let total = cavity.total_linewidth();
        let external = cavity.external_coupling_fraction * total;
        Self {
            magnon_linewidth,
            cavity_internal_linewidth: total - external,
            cavity_external_linewidth: external,
        }
    }

    pub fn cavity_total_linewidth(&self) -> f64 {
        self.cavity_internal_linewidth + self.cavity_external_linewidth
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative(self.magnon_linewidth, "magnon_linewidth")?;
        ensure_non_negative(self.cavity_internal_linewidth, "cavity_internal_linewidth")?;
        ensure_non_negative(self.cavity_external_linewidth, "cavity_external_linewidth")?;
        Ok(())
    }

    /// Checks that the cavity split adds back up to `f_c / Q`.
    pub fn validate_against(&self, cavity: &CavityParams) -> Result<()> {
        self.validate()?;
        let expected = cavity.total_linewidth();
        if (self.cavity_total_linewidth() - expected).abs() > 1e-9 * expected {
            return Err(Error::InvalidParameter {
                name: "cavity_internal_linewidth",
                reason: format!(
                    "internal + external = {} GHz but f_cavity / quality_factor = {expected} GHz",
                    self.cavity_total_linewidth()
                ),
            });
        }
        Ok(())
    }
}

/// Everything the transmission lineshape depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HybridSystem {
    pub spins: SpinSystemParams,
    pub cavity: CavityParams,
    pub coupling: CouplingParams,
    pub loss: LossParams,
}

impl HybridSystem {
    pub fn validate(&self) -> Result<()> {
        self.spins.validate()?;
        self.cavity.validate()?;
        self.coupling.validate()?;
        self.loss.validate()
    }

    /// Power transmission `|S21|²` at probe frequency `f` (GHz) and field (T).
    ///
    /// `S21 = κ_ext / (i(f − f_c) + κ/2 + G² / (i(f − f_m) + γ_m/2))`, with
    /// `f_m` the lower magnon branch. Fields past the spin-flop field are an
    /// error unless `allow_spin_flop` is set, in which case the clamped
    /// branch is used as an extrapolation.
    pub fn s21_power(&self, f: f64, field: f64, allow_spin_flop: bool) -> Result<f64> {
        ensure_positive(f, "frequency")?;
        ensure_non_negative(field, "field")?;
        let flop = spin_flop_field(&self.spins);
        if field > flop && !allow_spin_flop {
            return Err(Error::BeyondSpinFlop {
                field,
                spin_flop: flop,
            });
        }
        let f_m = magnon_branches(&self.spins, field)?.branches.lower;
        Ok(self.s21_power_at(f, f_m, self.coupling.big_g))
    }

    /// Lineshape with the magnon frequency and coupling given directly.
    pub fn s21_power_at(&self, f: f64, f_magnon: f64, big_g: f64) -> f64 {
        let kappa_ext = self.loss.cavity_external_linewidth;
        let kappa = self.loss.cavity_total_linewidth();
        let cavity = Complex64::new(0.5 * kappa, f - self.cavity.f_cavity);
        let magnon = Complex64::new(0.5 * self.loss.magnon_linewidth, f - f_magnon);
        if kappa_ext == 0.0 {
            return 0.0;
        }
        if big_g != 0.0 && magnon.norm_sqr() == 0.0 {
            // lossless magnon exactly on resonance: the self-energy diverges
            return 0.0;
        }
        let denom = if big_g == 0.0 {
            cavity
        } else {
            cavity + big_g * big_g / magnon
        };
        let power = (kappa_ext / denom).norm_sqr();
        if power.is_finite() {
            power
        } else {
            0.0
        }
    }

    /// Height of the bare-cavity peak, `(κ_ext / (κ/2))²`; no passive
    /// configuration of the coupled system transmits more than this.
    pub fn peak_bound(&self) -> f64 {
        let r = self.loss.cavity_external_linewidth / (0.5 * self.loss.cavity_total_linewidth());
        r * r
    }
}

/// Free-function form of [`HybridSystem::s21_power`].
pub fn s21_power(
    f: f64,
    field: f64,
    spins: &SpinSystemParams,
    cavity: &CavityParams,
    coupling: &CouplingParams,
    loss: &LossParams,
) -> Result<f64> {
    let system = HybridSystem {
        spins: *spins,
        cavity: *cavity,
        coupling: *coupling,
        loss: *loss,
    };
    system.s21_power(f, field, false)
}
