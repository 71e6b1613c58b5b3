//! Strict JSON run configuration.
//!
//! Every section is optional and falls back to the defaults below; unknown
//! keys anywhere are rejected with their key path.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use cavmag_core::analysis::{FieldWindow, FreeMask};
use cavmag_core::{
    CavityParams, CouplingParams, Error, HybridSystem, LossParams, PhaseBoundaries,
    SpinSystemParams,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Inclusive grid `start, start + step, …` up to `stop`. Empty when
/// `stop < start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub const fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    /// Grid values; `key` names the range in error messages.
    pub fn values(&self, key: &str) -> Result<Vec<f64>, CliError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::input(format!(
                "{key}: start and stop must be finite"
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(CliError::input(format!(
                "{key}.step: must be > 0, got {}",
                self.step
            )));
        }
        if self.stop < self.start {
            return Ok(Vec::new());
        }
        // tolerate rounding in (stop − start)/step so that stop itself is included
        let n = ((self.stop - self.start) / self.step * (1.0 + 1e-12) + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }

    pub(crate) fn non_negative(&self, key: &str) -> Result<(), CliError> {
        if self.start < 0.0 && self.stop >= self.start {
            return Err(CliError::input(format!(
                "{key}.start: must be >= 0, got {}",
                self.start
            )));
        }
        Ok(())
    }
}

impl FromStr for Range {
    type Err = String;

    /// `START:STOP:STEP`.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected START:STOP:STEP, got `{s}`"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
        Ok(Self {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            step: num(parts[2])?,
        })
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub field: Range,
    pub freq: Range,
    /// Standard deviation of multiplicative noise in dB; 0 disables it.
    pub noise_db: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            field: Range::new(0.0, 1.1, 0.005),
            freq: Range::new(8.0, 15.0, 0.005),
            noise_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub field: Range,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            field: Range::new(0.0, 1.3, 0.01),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseMapConfig {
    pub field: Range,
    pub temperature: Range,
}

impl Default for PhaseMapConfig {
    fn default() -> Self {
        Self {
            field: Range::new(0.0, 3.0, 0.02),
            temperature: Range::new(0.0, 3.0, 0.02),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Comma-separated subset of `G, f_afmr0, g_factor, f_cavity`.
    pub free: String,
    pub window: FieldWindow,
    /// Minimum peak prominence as a fraction of the column maximum.
    pub min_prominence: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            free: "G,f_afmr0".into(),
            window: FieldWindow::default(),
            min_prominence: 0.05,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub spins: SpinSystemParams,
    pub cavity: CavityParams,
    pub coupling: CouplingParams,
    /// Defaults to the cavity linewidth split by its coupling fraction and
    /// a 35 MHz magnon linewidth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossParams>,
    /// Defaults to shapes anchored on `spins`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<PhaseBoundaries>,
    pub sweep: SweepConfig,
    pub dispersion: DispersionConfig,
    pub phase_map: PhaseMapConfig,
    pub fit: FitConfig,
    pub seed: u64,
}

/// Prefix a core validation error with the section it came from.
fn at(section: &str, e: Error) -> CliError {
    match e {
        Error::InvalidParameter { name, reason } => {
            CliError::input(format!("{section}.{name}: {reason}"))
        }
        Error::NonFinite(name) => CliError::input(format!("{section}.{name}: must be finite")),
        other => CliError::input(format!("{section}: {other}")),
    }
}

impl RunConfig {
    /// Parse and validate a JSON document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::input(format!("config: {inner}"))
            } else {
                CliError::input(format!("config key `{path}`: {inner}"))
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.spins.validate().map_err(|e| at("spins", e))?;
        self.cavity.validate().map_err(|e| at("cavity", e))?;
        self.coupling.validate().map_err(|e| at("coupling", e))?;
        if let Some(loss) = &self.loss {
            loss.validate_against(&self.cavity)
                .map_err(|e| at("loss", e))?;
        }
        self.boundaries()
            .validate()
            .map_err(|e| at("boundaries", e))?;
        self.sweep.field.values("sweep.field")?;
        self.sweep.freq.values("sweep.freq")?;
        self.sweep.field.non_negative("sweep.field")?;
        if !(self.sweep.noise_db >= 0.0 && self.sweep.noise_db.is_finite()) {
            return Err(CliError::input(format!(
                "sweep.noise_db: must be >= 0, got {}",
                self.sweep.noise_db
            )));
        }
        self.dispersion.field.values("dispersion.field")?;
        self.dispersion.field.non_negative("dispersion.field")?;
        self.phase_map.field.values("phase_map.field")?;
        self.phase_map.temperature.values("phase_map.temperature")?;
        self.phase_map.field.non_negative("phase_map.field")?;
        self.phase_map
            .temperature
            .non_negative("phase_map.temperature")?;
        self.free_mask()?;
        let w = self.fit.window;
        if !(w.lo.is_finite() && w.hi.is_finite() && w.lo <= w.hi) {
            return Err(CliError::input(format!(
                "fit.window: need lo <= hi, got [{}, {}]",
                w.lo, w.hi
            )));
        }
        let p = self.fit.min_prominence;
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::input(format!(
                "fit.min_prominence: must lie in (0, 1), got {p}"
            )));
        }
        Ok(())
    }

    pub fn loss(&self) -> LossParams {
        self.loss
            .unwrap_or_else(|| LossParams::from_cavity(&self.cavity, 0.035))
    }

    pub fn boundaries(&self) -> PhaseBoundaries {
        self.boundaries
            .unwrap_or_else(|| PhaseBoundaries::anchored_on(&self.spins))
    }

    pub fn system(&self) -> HybridSystem {
        HybridSystem {
            spins: self.spins,
            cavity: self.cavity,
            coupling: self.coupling,
            loss: self.loss(),
        }
    }

    pub fn free_mask(&self) -> Result<FreeMask, CliError> {
        self.fit.free.parse().map_err(|e| at("fit", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = RunConfig::from_json(r#"{"spins": {"f_afmr0": 36.4}, "seed": 9}"#).unwrap();
        assert_eq!(c.spins.f_afmr0, 36.4);
        assert_eq!(c.spins.g_factor, 2.0);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn unknown_key_reports_path() {
        let err =
            RunConfig::from_json(r#"{"sweep": {"field": {"start": 0, "stop": 1, "stpe": 0.1}}}"#)
                .unwrap_err();
        assert_eq!(err.code(), 2);
        assert!(err.to_string().contains("sweep.field"), "{err}");
        assert!(err.to_string().contains("stpe"), "{err}");
    }

    #[test]
    fn invalid_value_reports_key() {
        let err = RunConfig::from_json(r#"{"spins": {"g_factor": -2}}"#).unwrap_err();
        assert!(err.to_string().starts_with("spins.g_factor"), "{err}");
        let err = RunConfig::from_json(r#"{"fit": {"free": "G,h"}}"#).unwrap_err();
        assert!(err.to_string().starts_with("fit."), "{err}");
    }

    #[test]
    fn inconsistent_loss_rejected() {
        let text = r#"{"loss": {"magnon_linewidth": 0.035, "cavity_internal_linewidth": 0.001,
                        "cavity_external_linewidth": 0.001}}"#;
        assert!(RunConfig::from_json(text)
            .unwrap_err()
            .to_string()
            .starts_with("loss."));
    }

    #[test]
    fn serialised_config_reloads() {
        let c = RunConfig {
            seed: 42,
            loss: Some(LossParams::default()),
            ..Default::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn ranges() {
        assert_eq!(Range::new(0.0, 1.3, 0.01).values("r").unwrap().len(), 131);
        assert!(Range::new(1.0, 0.0, 0.1).values("r").unwrap().is_empty());
        assert_eq!(Range::new(0.0, 0.0, 0.1).values("r").unwrap(), vec![0.0]);
        assert!(Range::new(0.0, 1.0, 0.0).values("r").is_err());
        assert_eq!(
            "0:1.5:0.5".parse::<Range>().unwrap(),
            Range::new(0.0, 1.5, 0.5)
        );
        assert!("0:1".parse::<Range>().is_err());
    }
}
