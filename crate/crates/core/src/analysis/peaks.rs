use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::TransmissionMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Refined position (GHz).
    pub position: f64,
    pub height: f64,
    /// Nominal position uncertainty: local grid spacing / √12.
    pub uncertainty: f64,
}

/// Peaks found in the frequency trace at one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakColumn {
    pub field: f64,
    /// At most two, ordered by position.
    pub peaks: Vec<Peak>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakSet {
    pub columns: Vec<PeakColumn>,
}

impl PeakSet {
    /// All `(field, position)` pairs.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.columns
            .iter()
            .flat_map(|c| c.peaks.iter().map(move |p| (c.field, p.position)))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "field_T,peak_GHz,height")?;
        for c in &self.columns {
            for p in &c.peaks {
                writeln!(out, "{},{},{}", c.field, p.position, p.height)?;
            }
        }
        out.flush()
    }
}

/// Topographic prominence of the local maximum at `i`.
fn prominence(y: &[f64], i: usize) -> f64 {
    let peak = y[i];
    let mut left_min = peak;
    for &v in y[..i].iter().rev() {
        if v > peak {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = peak;
    for &v in &y[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Abscissa of the extremum of the parabola through three points.
fn parabola_vertex(x: [f64; 3], u: [f64; 3]) -> Option<f64> {
    let (a, b) = (x[1] - x[0], x[1] - x[2]);
    let (da, db) = (u[1] - u[0], u[1] - u[2]);
    let den = a * db - b * da;
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let v = x[1] - 0.5 * (a * a * db - b * b * da) / den;
    v.is_finite().then_some(v)
}

fn parabola_value(x: [f64; 3], u: [f64; 3], at: f64) -> f64 {
    // Lagrange form
    let l0 = (at - x[1]) * (at - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
    let l1 = (at - x[0]) * (at - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
    let l2 = (at - x[0]) * (at - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
    u[0] * l0 + u[1] * l1 + u[2] * l2
}

/// Refine a grid maximum. Interpolates `1/y`, which is exactly quadratic for
/// a Lorentzian, and falls back to interpolating `y` when a neighbour is zero.
fn refine(freqs: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    let x = [freqs[i - 1], freqs[i], freqs[i + 1]];
    let v = [y[i - 1], y[i], y[i + 1]];
    if v.iter().all(|&t| t > 0.0) {
        let u = v.map(|t| 1.0 / t);
        if let Some(xv) = parabola_vertex(x, u) {
            let xv = xv.clamp(x[0], x[2]);
            let h = 1.0 / parabola_value(x, u, xv);
            if h.is_finite() && h > 0.0 {
                return (xv, h);
            }
        }
    }
    match parabola_vertex(x, v) {
        Some(xv) => {
            let xv = xv.clamp(x[0], x[2]);
            (xv, parabola_value(x, v, xv))
        }
        None => (x[1], v[1]),
    }
}

/// Up to the two most prominent peaks in one frequency trace.
pub fn find_column_peaks(freqs: &[f64], y: &[f64], min_prominence: f64) -> Vec<Peak> {
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let col_max = y.iter().copied().fold(0.0, f64::max);
    if col_max <= 0.0 {
        return Vec::new();
    }
    let threshold = min_prominence * col_max;
    let mut candidates: Vec<(usize, f64)> = (1..n - 1)
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .map(|i| (i, prominence(y, i)))
        .filter(|&(_, p)| p >= threshold && p > 0.0)
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    candidates.truncate(2);
    candidates.sort_by_key(|&(i, _)| i);
    candidates
        .into_iter()
        .map(|(i, _)| {
            let (position, height) = refine(freqs, y, i);
            let spacing = 0.5 * (freqs[i + 1] - freqs[i - 1]);
            Peak {
                position,
                height,
                uncertainty: spacing / 12f64.sqrt(),
            }
        })
        .collect()
}

/// Peak positions in every field column of the map.
///
/// A local maximum is kept when its prominence is at least
/// `min_prominence` times the column maximum. Columns without peaks are
/// kept with an empty list.
pub fn extract_peaks(map: &TransmissionMap, min_prominence: f64) -> Result<PeakSet> {
    if !(min_prominence > 0.0 && min_prominence < 1.0) {
        return Err(Error::InvalidParameter {
            name: "min_prominence",
            reason: format!("must lie in (0, 1), got {min_prominence}"),
        });
    }
    let freqs = map.freq_axis();
    let columns = map
        .columns()
        .map(|(field, col)| PeakColumn {
            field,
            peaks: find_column_peaks(freqs, col, min_prominence),
        })
        .collect();
    Ok(PeakSet { columns })
}
