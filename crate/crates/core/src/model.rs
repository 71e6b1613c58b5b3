//! Two-sublattice antiferromagnetic resonance and the cavity–magnon
//! coupled-mode model.
//!
//! All frequencies are ordinary frequencies in GHz and all fields are in
//! tesla. Each sublattice precesses independently in the linearised model,
//! so the two resonance branches split symmetrically about the zero-field
//! frequency at a rate of `g · μB/h` per tesla. The coupled cavity–magnon
//! system is the 2×2 rotating-wave Hamiltonian whose eigenvalues are the
//! dressed (polariton) frequencies.

use serde::{Deserialize, Serialize};

use crate::constants::GYROMAGNETIC_PER_G;
use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

/// Identity of the antiferromagnet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinSystemParams {
    pub g_factor: f64,
    /// Zero-field resonance frequency (GHz).
    pub f_afmr0: f64,
    /// Ordering temperature (K).
    pub neel_temperature: f64,
}

impl Default for SpinSystemParams {
    /// GdVO₄: isotropic g = 2, ~34 GHz zero-field resonance, T_N = 2.495 K.
    fn default() -> Self {
        Self {
            g_factor: 2.0,
            f_afmr0: 34.0,
            neel_temperature: 2.495,
        }
    }
}

impl SpinSystemParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.g_factor, "g_factor")?;
        ensure_positive(self.f_afmr0, "f_afmr0")?;
        ensure_positive(self.neel_temperature, "neel_temperature")?;
        Ok(())
    }

    /// Zeeman slope of each branch in GHz/T.
    pub fn zeeman_slope(&self) -> f64 {
        self.g_factor * GYROMAGNETIC_PER_G
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityParams {
    /// Centre frequency (GHz).
    pub f_cavity: f64,
    pub quality_factor: f64,
    /// Fraction of the total linewidth due to the measurement ports.
    pub external_coupling_fraction: f64,
}

impl Default for CavityParams {
    /// Loop-gap resonator at 11.245 GHz with Q = 1300.
    fn default() -> Self {
        Self {
            f_cavity: 11.245,
            quality_factor: 1300.0,
            external_coupling_fraction: 0.5,
        }
    }
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.f_cavity, "f_cavity")?;
        ensure_positive(self.quality_factor, "quality_factor")?;
        let frac = ensure_finite(
            self.external_coupling_fraction,
            "external_coupling_fraction",
        )?;
        if !(frac > 0.0 && frac < 1.0) {
            return Err(Error::InvalidParameter {
                name: "external_coupling_fraction",
                reason: format!("must lie in (0, 1), got {frac}"),
            });
        }
        Ok(())
    }

    /// Total (loaded) FWHM linewidth in GHz.
    pub fn total_linewidth(&self) -> f64 {
        self.f_cavity / self.quality_factor
    }
}

/// Collective cavity–magnon coupling, optionally decomposed as `G = √N · g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingParams {
    /// Collective coupling G (GHz).
    pub big_g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_spins: Option<f64>,
    /// Single-ion coupling (GHz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_single: Option<f64>,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self::new(1.72)
    }
}

impl CouplingParams {
    pub fn new(big_g: f64) -> Self {
        Self {
            big_g,
            n_spins: None,
            g_single: None,
        }
    }

    pub fn from_ensemble(n_spins: f64, g_single: f64) -> Self {
        Self {
            big_g: collective_coupling(n_spins, g_single),
            n_spins: Some(n_spins),
            g_single: Some(g_single),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative(self.big_g, "big_g")?;
        if let Some(n) = self.n_spins {
            ensure_non_negative(n, "n_spins")?;
        }
        if let Some(g) = self.g_single {
            ensure_non_negative(g, "g_single")?;
        }
        if let (Some(n), Some(g)) = (self.n_spins, self.g_single) {
            let expected = collective_coupling(n, g);
            let scale = expected.abs().max(self.big_g.abs());
            if (self.big_g - expected).abs() > 1e-9 * scale {
                return Err(Error::InvalidParameter {
                    name: "big_g",
                    reason: format!("{} != sqrt(n_spins) * g_single = {expected}", self.big_g),
                });
            }
        }
        Ok(())
    }
}

/// A lower/upper pair of mode frequencies (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPair {
    pub lower: f64,
    pub upper: f64,
}

impl BranchPair {
    pub fn splitting(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Magnon branches at one field, with a flag set when the lower branch was
/// clamped at zero (the linear model does not hold past the spin-flop field).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnonBranches {
    pub branches: BranchPair,
    pub clamped: bool,
}

/// Antiferromagnetic resonance frequencies at a static field applied along
/// the easy axis.
pub fn magnon_branches(spins: &SpinSystemParams, field: f64) -> Result<MagnonBranches> {
    ensure_non_negative(field, "field")?;
    let shift = spins.zeeman_slope() * field;
    let raw_lower = spins.f_afmr0 - shift;
    Ok(MagnonBranches {
        branches: BranchPair {
            lower: raw_lower.max(0.0),
            upper: spins.f_afmr0 + shift,
        },
        clamped: raw_lower < 0.0,
    })
}

/// Field at which the lower branch reaches zero frequency.
pub fn spin_flop_field(spins: &SpinSystemParams) -> f64 {
    spins.f_afmr0 / spins.zeeman_slope()
}

/// Dressed-state frequencies of a cavity mode coupled to a magnon mode.
pub fn polariton_frequencies(
    cavity: &CavityParams,
    f_magnon: f64,
    coupling: &CouplingParams,
) -> Result<BranchPair> {
    polariton_pair(cavity.f_cavity, f_magnon, coupling.big_g)
}

/// Closed-form eigenvalues of `[[f_c, G], [G, f_m]]`.
pub fn polariton_pair(f_cavity: f64, f_magnon: f64, big_g: f64) -> Result<BranchPair> {
    ensure_finite(f_cavity, "f_cavity")?;
    ensure_non_negative(f_magnon, "f_magnon")?;
    ensure_finite(big_g, "big_g")?;
    // shift each bare mode by G²/(r + |Δ|/2), which equals r − |Δ|/2 but
    // stays exact at G = 0 and loses no digits at large detuning
    let half_detuning = (0.5 * (f_cavity - f_magnon)).abs();
    let radius = half_detuning.hypot(big_g);
    let shift = if big_g == 0.0 {
        0.0
    } else {
        big_g * big_g / (radius + half_detuning)
    };
    Ok(BranchPair {
        lower: f_cavity.min(f_magnon) - shift,
        upper: f_cavity.max(f_magnon) + shift,
    })
}

/// Field where the lower magnon branch is degenerate with the cavity.
pub fn crossing_field(spins: &SpinSystemParams, cavity: &CavityParams) -> Result<f64> {
    if spins.f_afmr0 <= cavity.f_cavity {
        return Err(Error::NoCrossing {
            f_afmr0: spins.f_afmr0,
            f_cavity: cavity.f_cavity,
        });
    }
    Ok((spins.f_afmr0 - cavity.f_cavity) / spins.zeeman_slope())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Weak,
    Strong,
    Ultrastrong,
    DeepStrong,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Weak => "weak",
            Regime::Strong => "strong",
            Regime::Ultrastrong => "ultrastrong",
            Regime::DeepStrong => "deep-strong",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// G / f_cavity.
    pub ratio: f64,
}

/// Classify the coupling: strong once G exceeds both linewidths, then
/// ultrastrong at G/f_c >= 0.1 and deep-strong at G/f_c >= 1.
pub fn coupling_regime(
    coupling: &CouplingParams,
    cavity: &CavityParams,
    magnon_linewidth: f64,
) -> RegimeReport {
    let g = coupling.big_g;
    let ratio = g / cavity.f_cavity;
    let regime = if !(g > cavity.total_linewidth().max(magnon_linewidth)) {
        Regime::Weak
    } else if ratio >= 1.0 {
        Regime::DeepStrong
    } else if ratio >= 0.1 {
        Regime::Ultrastrong
    } else {
        Regime::Strong
    };
    RegimeReport { regime, ratio }
}

/// `G = √N · g`.
pub fn collective_coupling(n_spins: f64, g_single: f64) -> f64 {
    n_spins.sqrt() * g_single
}
