use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lineshape::HybridSystem;
use crate::error::{ensure_non_negative, Error, Result};
use crate::model::{magnon_branches, spin_flop_field};

/// Noise that was applied to a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRecord {
    pub sigma_db: f64,
    pub seed: u64,
}

/// Parameters a map was synthesised from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapMetadata {
    pub system: HybridSystem,
    pub spin_flop_field: f64,
    /// Field indices past the spin-flop field, filled with the bare-cavity response.
    pub decoupled_columns: Vec<usize>,
    #[serde(default)]
    pub noise: Vec<NoiseRecord>,
}

/// `|S21|²` sampled on a (field, frequency) grid.
///
/// Values are stored field-major: the trace at field index `i` is the
/// contiguous slice `values[i * n_freq..(i + 1) * n_freq]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMap {
    field_axis: Vec<f64>,
    freq_axis: Vec<f64>,
    values: Vec<f64>,
    metadata: Option<MapMetadata>,
}

pub(crate) fn check_axis(axis: &[f64], name: &'static str) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidAxis {
            axis: name,
            reason: "empty".into(),
        });
    }
    if let Some(bad) = axis.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidAxis {
            axis: name,
            reason: format!("non-finite value {bad}"),
        });
    }
    if let Some(w) = axis.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidAxis {
            axis: name,
            reason: format!("not strictly increasing at {} -> {}", w[0], w[1]),
        });
    }
    Ok(())
}

impl TransmissionMap {
    pub fn new(
        field_axis: Vec<f64>,
        freq_axis: Vec<f64>,
        values: Vec<f64>,
        metadata: Option<MapMetadata>,
    ) -> Result<Self> {
        check_axis(&field_axis, "field")?;
        check_axis(&freq_axis, "frequency")?;
        if values.len() != field_axis.len() * freq_axis.len() {
            return Err(Error::InvalidAxis {
                axis: "values",
                reason: format!(
                    "expected {} x {} = {} values, got {}",
                    field_axis.len(),
                    freq_axis.len(),
                    field_axis.len() * freq_axis.len(),
                    values.len()
                ),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidAxis {
                axis: "values",
                reason: format!("transmission must be finite and >= 0, got {bad}"),
            });
        }
        Ok(Self {
            field_axis,
            freq_axis,
            values,
            metadata,
        })
    }

    pub fn field_axis(&self) -> &[f64] {
        &self.field_axis
    }

    pub fn freq_axis(&self) -> &[f64] {
        &self.freq_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn metadata(&self) -> Option<&MapMetadata> {
        self.metadata.as_ref()
    }

    pub fn with_metadata(mut self, metadata: Option<MapMetadata>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn n_fields(&self) -> usize {
        self.field_axis.len()
    }

    pub fn n_freqs(&self) -> usize {
        self.freq_axis.len()
    }

    /// Transmission versus frequency at field index `i`.
    pub fn column(&self, i: usize) -> &[f64] {
        let n = self.n_freqs();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn value(&self, field_idx: usize, freq_idx: usize) -> f64 {
        self.values[field_idx * self.n_freqs() + freq_idx]
    }

    pub fn columns(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.field_axis
            .iter()
            .copied()
            .zip(self.values.chunks_exact(self.n_freqs()))
    }
}

/// Evaluate the transmission lineshape on a grid.
///
/// Columns past the spin-flop field get the decoupled cavity response and
/// are listed in the metadata.
pub fn synthesize_map(
    field_axis: &[f64],
    freq_axis: &[f64],
    system: &HybridSystem,
) -> Result<TransmissionMap> {
    system.validate()?;
    check_axis(field_axis, "field")?;
    check_axis(freq_axis, "frequency")?;
    ensure_non_negative(field_axis[0], "field")?;
    if freq_axis[0] <= 0.0 {
        return Err(Error::InvalidAxis {
            axis: "frequency",
            reason: "must be > 0".into(),
        });
    }
    let flop = spin_flop_field(&system.spins);
    let decoupled_columns: Vec<usize> = field_axis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b > flop)
        .map(|(i, _)| i)
        .collect();

    let columns: Vec<Vec<f64>> = field_axis
        .par_iter()
        .map(|&b| -> Result<Vec<f64>> {
            if b > flop {
                Ok(freq_axis
                    .iter()
                    .map(|&f| system.s21_power_at(f, 0.0, 0.0))
                    .collect())
            } else {
                let f_m = magnon_branches(&system.spins, b)?.branches.lower;
                Ok(freq_axis
                    .iter()
                    .map(|&f| system.s21_power_at(f, f_m, system.coupling.big_g))
                    .collect())
            }
        })
        .collect::<Result<_>>()?;

    let metadata = MapMetadata {
        system: *system,
        spin_flop_field: flop,
        decoupled_columns,
        noise: Vec::new(),
    };
    TransmissionMap::new(
        field_axis.to_vec(),
        freq_axis.to_vec(),
        columns.concat(),
        Some(metadata),
    )
}

/// Multiply every sample by `10^(n/10)`, `n ~ Normal(0, sigma_db)`.
///
/// Samples are drawn in storage order from a ChaCha8 stream seeded with
/// `seed`, so the result is reproducible across platforms.
pub fn add_noise(map: &TransmissionMap, sigma_db: f64, seed: u64) -> Result<TransmissionMap> {
    ensure_non_negative(sigma_db, "sigma_db")?;
    let mut out = map.clone();
    if let Some(meta) = out.metadata.as_mut() {
        meta.noise.push(NoiseRecord { sigma_db, seed });
    }
    if sigma_db == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma_db).map_err(|e| Error::InvalidParameter {
        name: "sigma_db",
        reason: e.to_string(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.values.iter_mut() {
        let n_db: f64 = normal.sample(&mut rng);
        *v *= 10f64.powf(n_db / 10.0);
    }
    Ok(out)
}

/// Transmission versus field at a fixed probe frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCut {
    /// Grid frequency actually used (GHz).
    pub freq: f64,
    pub points: Vec<(f64, f64)>,
}

/// Cut the map at the frequency sample nearest `f`.
pub fn vertical_cut(map: &TransmissionMap, f: f64) -> Result<FieldCut> {
    let axis = map.freq_axis();
    let (min, max) = (axis[0], axis[axis.len() - 1]);
    if !(f >= min && f <= max) {
        return Err(Error::OutOfRange { freq: f, min, max });
    }
    let j = match axis.binary_search_by(|v| v.total_cmp(&f)) {
        Ok(j) => j,
        Err(j) => {
            // j in 1..len since f is inside the range
            if (f - axis[j - 1]) <= (axis[j] - f) {
                j - 1
            } else {
                j
            }
        }
    };
    let points = map
        .field_axis()
        .iter()
        .enumerate()
        .map(|(i, &b)| (b, map.value(i, j)))
        .collect();
    Ok(FieldCut {
        freq: axis[j],
        points,
    })
}
