//! Inverse problems: peak extraction, avoided-crossing fits, field-domain
//! linewidths and temperature trends.

mod crossing;
mod linewidth;
pub mod lm;
mod peaks;
mod trend;

pub use crossing::{
    estimate_start, fit_avoided_crossing, fit_avoided_crossing_from, CrossingModel, CrossingParams,
    FieldWindow, FitParameter, FitReport, FreeMask,
};
pub use linewidth::{
    field_linewidth, linewidth_estimate, linewidth_field_to_freq, FieldLorentzian,
    LinewidthEstimate,
};
pub use peaks::{extract_peaks, find_column_peaks, Peak, PeakColumn, PeakSet};
pub use trend::{fit_t4_trend, TemperatureUnit, TrendFit, TrendSign};
