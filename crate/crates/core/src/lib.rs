//! Simulation and analysis of a microwave cavity coupled to the
//! antiferromagnetic resonance of a two-sublattice spin system.
//!
//! * [`model`]: resonance branches, spin-flop field, polariton frequencies
//!   and coupling-regime classification.
//! * [`spectra`]: `|S21|²` lineshape, transmission-map synthesis, noise and
//!   CSV/JSON round-tripping.
//! * [`analysis`]: peak extraction, avoided-crossing fit, field-domain
//!   linewidths and temperature-trend fits.
//! * [`phase`]: (field, temperature) phase classification.
//!
//! Frequencies are ordinary frequencies in GHz, fields are in tesla and
//! temperatures in kelvin unless a function says otherwise.

// `!(x > y)` is used on purpose so that NaN falls into the rejection branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
mod error;
pub mod model;
pub mod phase;
pub mod spectra;

pub use constants::{PhysicalConstants, GYROMAGNETIC_PER_G};
pub use error::{Error, LineshapeFailure, Result};
pub use model::{
    collective_coupling, coupling_regime, crossing_field, magnon_branches, polariton_frequencies,
    spin_flop_field, BranchPair, CavityParams, CouplingParams, MagnonBranches, Regime,
    RegimeReport, SpinSystemParams,
};
pub use phase::{classify_phase, phase_map, spin_flop_boundary, Phase, PhaseBoundaries};
pub use spectra::{HybridSystem, LossParams, TransmissionMap};
