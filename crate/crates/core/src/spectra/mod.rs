//! Forward model of the cavity transmission.

pub mod io;
mod lineshape;
mod map;

pub use lineshape::{s21_power, HybridSystem, LossParams};
pub use map::{
    add_noise, synthesize_map, vertical_cut, FieldCut, MapMetadata, NoiseRecord, TransmissionMap,
};
