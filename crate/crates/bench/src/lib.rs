//! Fixtures shared by the criterion benchmarks in `benches/`.

/// Inclusive grid from `start` to `stop`.
pub fn axis(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Field (0–1.1 T, 5 mT) and frequency (8–15 GHz, 5 MHz) axes of the
/// default sweep.
pub fn default_grid() -> (Vec<f64>, Vec<f64>) {
    (axis(0.0, 1.1, 0.005), axis(8.0, 15.0, 0.005))
}
