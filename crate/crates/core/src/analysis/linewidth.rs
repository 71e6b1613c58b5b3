use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{LeastSquaresProblem, LevenbergMarquardt};
use crate::constants::GYROMAGNETIC_PER_G;
use crate::error::{Error, LineshapeFailure, Result};
use crate::model::{magnon_branches, polariton_pair};
use crate::spectra::HybridSystem;

/// Lorentzian fitted to a transmission-versus-field trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldLorentzian {
    pub center: f64,
    /// FWHM in tesla.
    pub fwhm: f64,
    pub amplitude: f64,
    pub baseline: f64,
}

/// `y = c + A / (1 + ((x − x0) / (w/2))²)` in normalised coordinates.
struct LorentzianProblem {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl LorentzianProblem {
    fn terms(p: &[f64], x: f64) -> (f64, f64) {
        let d = 2.0 * (x - p[0]) / p[1];
        let l = 1.0 / (1.0 + d * d);
        (d, l)
    }
}

impl LeastSquaresProblem for LorentzianProblem {
    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(&x, &y)| {
                let (_, l) = Self::terms(p, x);
                p[3] + p[2] * l - y
            })
            .collect()
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.x.len(), 4);
        for (i, &x) in self.x.iter().enumerate() {
            let (d, l) = Self::terms(p, x);
            let dl_dd = -2.0 * d * l * l;
            jac[(i, 0)] = p[2] * dl_dd * (-2.0 / p[1]);
            jac[(i, 1)] = p[2] * dl_dd * (-d / p[1]);
            jac[(i, 2)] = l;
            jac[(i, 3)] = 1.0;
        }
        jac
    }
}

/// Fit a single Lorentzian in field to a cut and return it.
///
/// The trace must hold one peak (one contiguous run of samples above half
/// maximum, single-sample dips tolerated) with at least five samples above
/// half maximum.
pub fn field_linewidth(cut: &[(f64, f64)]) -> Result<FieldLorentzian> {
    let fail = |f| Error::Lineshape(f);
    if cut.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite("cut"));
    }
    if cut.len() < 5 {
        return Err(fail(LineshapeFailure::Underresolved));
    }
    let (_, &(x_peak, ymax)) = cut
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    let ymin = cut.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let span = ymax - ymin;
    if !(span > 1e-12 * ymax.abs().max(f64::MIN_POSITIVE)) {
        return Err(fail(LineshapeFailure::NoPeak));
    }
    let half = ymin + 0.5 * span;
    let above: Vec<usize> = (0..cut.len()).filter(|&i| cut[i].1 > half).collect();
    if above.windows(2).any(|w| w[1] - w[0] > 2) {
        return Err(fail(LineshapeFailure::MultiplePeaks));
    }
    if above.len() < 5 {
        return Err(fail(LineshapeFailure::Underresolved));
    }
    let first = *above.first().expect("non-empty");
    let last = *above.last().expect("non-empty");
    let lo = if first > 0 { first - 1 } else { first };
    let hi = if last + 1 < cut.len() { last + 1 } else { last };
    let width0 = 0.5 * ((cut[last].0 - cut[first].0) + (cut[hi].0 - cut[lo].0));
    if !(width0 > 0.0) {
        return Err(fail(LineshapeFailure::Underresolved));
    }

    // x in units of the initial width around the maximum, y in units of the maximum
    let scale_y = ymax.abs();
    let problem = LorentzianProblem {
        x: cut.iter().map(|p| (p.0 - x_peak) / width0).collect(),
        y: cut.iter().map(|p| p.1 / scale_y).collect(),
    };
    let start = vec![0.0, 1.0, span / scale_y, ymin / scale_y];
    let sol = LevenbergMarquardt::default().minimize(&problem, start);
    let p = &sol.params;
    let fit = FieldLorentzian {
        center: x_peak + p[0] * width0,
        fwhm: p[1].abs() * width0,
        amplitude: p[2] * scale_y,
        baseline: p[3] * scale_y,
    };
    let plausible = fit.fwhm.is_finite()
        && fit.fwhm > 0.0
        && fit.amplitude > 0.0
        && fit.center >= cut[0].0
        && fit.center <= cut[cut.len() - 1].0;
    if !(sol.converged && plausible) {
        return Err(fail(LineshapeFailure::NotConverged));
    }
    Ok(fit)
}

/// `γ_f = γ_B · g · μB/h`, in GHz for `gamma_b` in tesla.
pub fn linewidth_field_to_freq(gamma_b: f64, g_factor: f64) -> f64 {
    gamma_b * g_factor * GYROMAGNETIC_PER_G
}

/// Raw and cavity-damping-corrected frequency linewidths from a field FWHM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthEstimate {
    pub gamma_tesla: f64,
    /// Direct conversion `γ_B · g · μB/h`.
    pub gamma_ghz: f64,
    /// Cavity weight of the dressed mode at the peak.
    pub cavity_weight: f64,
    /// Magnon linewidth after removing the cavity's share of the damping.
    pub magnon_linewidth_ghz: f64,
}

/// Separate the magnon linewidth from a polariton's field-domain FWHM.
///
/// A dressed mode with cavity weight `c` has frequency linewidth
/// `c·κ + (1 − c)·γ_m` and slope `(1 − c)·g·μB/h` against field, so
/// `γ_m = γ_B·g·μB/h − c·κ/(1 − c)`.
pub fn linewidth_estimate(
    gamma_b: f64,
    center_field: f64,
    probe_freq: f64,
    system: &HybridSystem,
) -> Result<LinewidthEstimate> {
    let gamma_ghz = linewidth_field_to_freq(gamma_b, system.spins.g_factor);
    let f_m = magnon_branches(&system.spins, center_field)?.branches.lower;
    let f_c = system.cavity.f_cavity;
    let pair = polariton_pair(f_c, f_m, system.coupling.big_g)?;
    let lambda = if (probe_freq - pair.lower).abs() <= (probe_freq - pair.upper).abs() {
        pair.lower
    } else {
        pair.upper
    };
    let denom = (lambda - f_c) + (lambda - f_m);
    let cavity_weight = if denom == 0.0 {
        0.5
    } else {
        (lambda - f_m) / denom
    };
    let kappa = system.loss.cavity_total_linewidth();
    let magnon_linewidth_ghz = if cavity_weight < 1.0 {
        gamma_ghz - cavity_weight * kappa / (1.0 - cavity_weight)
    } else {
        f64::NAN
    };
    Ok(LinewidthEstimate {
        gamma_tesla: gamma_b,
        gamma_ghz,
        cavity_weight,
        magnon_linewidth_ghz,
    })
}
