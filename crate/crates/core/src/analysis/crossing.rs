//! Fit of the coupled-mode eigenvalues to observed polariton peaks.

use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{LeastSquaresProblem, LevenbergMarquardt};
use super::peaks::PeakSet;
use crate::constants::GYROMAGNETIC_PER_G;
use crate::error::{Error, Result};
use crate::model::{CavityParams, SpinSystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FitParameter {
    #[serde(rename = "G")]
    Coupling,
    #[serde(rename = "f_afmr0")]
    ZeroFieldFrequency,
    #[serde(rename = "g_factor")]
    GFactor,
    #[serde(rename = "f_cavity")]
    CavityFrequency,
}

impl FitParameter {
    pub const ALL: [FitParameter; 4] = [
        FitParameter::Coupling,
        FitParameter::ZeroFieldFrequency,
        FitParameter::GFactor,
        FitParameter::CavityFrequency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitParameter::Coupling => "G",
            FitParameter::ZeroFieldFrequency => "f_afmr0",
            FitParameter::GFactor => "g_factor",
            FitParameter::CavityFrequency => "f_cavity",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for FitParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FitParameter::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter {
                name: "free",
                reason: format!(
                    "unknown parameter `{s}` (expected G, f_afmr0, g_factor, f_cavity)"
                ),
            })
    }
}

/// Which parameters the fit may vary, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FreeMask(Vec<FitParameter>);

impl FreeMask {
    pub fn new(params: impl IntoIterator<Item = FitParameter>) -> Self {
        let mut v: Vec<FitParameter> = params.into_iter().collect();
        v.sort();
        v.dedup();
        FreeMask(v)
    }

    pub fn params(&self) -> &[FitParameter] {
        &self.0
    }

    pub fn contains(&self, p: FitParameter) -> bool {
        self.0.contains(&p)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for FreeMask {
    type Err = Error;

    /// Comma-separated names, e.g. `G,f_afmr0`.
    fn from_str(s: &str) -> Result<Self> {
        let params = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Ok(FreeMask::new(params))
    }
}

/// Closed field interval (T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for FieldWindow {
    /// Stops short of the spin-flop region.
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.1 }
    }
}

impl FieldWindow {
    pub fn contains(&self, b: f64) -> bool {
        b >= self.lo && b <= self.hi
    }
}

/// Full parameter vector of the crossing model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingParams {
    pub big_g: f64,
    pub f_afmr0: f64,
    pub g_factor: f64,
    pub f_cavity: f64,
}

impl CrossingParams {
    fn as_array(&self) -> [f64; 4] {
        [self.big_g, self.f_afmr0, self.g_factor, self.f_cavity]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            big_g: a[0],
            f_afmr0: a[1],
            g_factor: a[2],
            f_cavity: a[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub parameters: Vec<String>,
    pub values: Vec<f64>,
    pub uncertainties: Vec<f64>,
    pub residual_rms_ghz: f64,
    pub window_tesla: [f64; 2],
    pub n_peaks: usize,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

impl FitReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameters
            .iter()
            .position(|p| p == name)
            .map(|i| self.values[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.parameters
            .iter()
            .position(|p| p == name)
            .map(|i| self.uncertainties[i])
    }
}

/// Residuals `peak − nearest eigenbranch` over a set of `(field, peak)` points.
#[derive(Debug, Clone)]
pub struct CrossingModel {
    points: Vec<(f64, f64)>,
    base: CrossingParams,
    free: FreeMask,
}

struct Branches {
    lower: f64,
    upper: f64,
    /// d(upper)/d(param) for [G, f_afmr0, g_factor, f_cavity]; d(lower) has
    /// the opposite sign on the radius part.
    d_mean: [f64; 4],
    d_radius: [f64; 4],
}

impl CrossingModel {
    pub fn new(points: Vec<(f64, f64)>, base: CrossingParams, free: FreeMask) -> Self {
        Self { points, base, free }
    }

    pub fn full_params(&self, free_values: &[f64]) -> CrossingParams {
        let mut a = self.base.as_array();
        for (p, v) in self.free.params().iter().zip(free_values) {
            a[p.index()] = *v;
        }
        CrossingParams::from_array(a)
    }

    pub fn free_values(&self, params: &CrossingParams) -> Vec<f64> {
        let a = params.as_array();
        self.free.params().iter().map(|p| a[p.index()]).collect()
    }

    fn branches(p: &CrossingParams, field: f64) -> Branches {
        let slope = p.g_factor * GYROMAGNETIC_PER_G;
        let raw = p.f_afmr0 - slope * field;
        let (f_m, dfm_df0, dfm_dg) = if raw >= 0.0 {
            (raw, 1.0, -GYROMAGNETIC_PER_G * field)
        } else {
            (0.0, 0.0, 0.0)
        };
        let half = 0.5 * (p.f_cavity - f_m);
        let radius = half.hypot(p.big_g);
        let mean = 0.5 * (p.f_cavity + f_m);
        // ∂R/∂f_c = half/(2R), ∂R/∂f_m = −half/(2R), ∂R/∂G = G/R
        let (dr_dg, dr_dhalf) = if radius > 0.0 {
            (p.big_g / radius, half / radius)
        } else {
            (0.0, 0.0)
        };
        let dr_dfm = -0.5 * dr_dhalf;
        Branches {
            lower: mean - radius,
            upper: mean + radius,
            d_mean: [0.0, 0.5 * dfm_df0, 0.5 * dfm_dg, 0.5],
            d_radius: [dr_dg, dr_dfm * dfm_df0, dr_dfm * dfm_dg, 0.5 * dr_dhalf],
        }
    }

    fn assign(br: &Branches, peak: f64) -> f64 {
        if (peak - br.lower).abs() <= (peak - br.upper).abs() {
            -1.0
        } else {
            1.0
        }
    }
}

impl LeastSquaresProblem for CrossingModel {
    fn residuals(&self, free_values: &[f64]) -> Vec<f64> {
        let p = self.full_params(free_values);
        self.points
            .iter()
            .map(|&(b, peak)| {
                let br = Self::branches(&p, b);
                let model = if Self::assign(&br, peak) < 0.0 {
                    br.lower
                } else {
                    br.upper
                };
                peak - model
            })
            .collect()
    }

    fn jacobian(&self, free_values: &[f64]) -> DMatrix<f64> {
        let p = self.full_params(free_values);
        let free = self.free.params();
        let mut jac = DMatrix::zeros(self.points.len(), free.len());
        for (i, &(b, peak)) in self.points.iter().enumerate() {
            let br = Self::branches(&p, b);
            let s = Self::assign(&br, peak);
            for (j, fp) in free.iter().enumerate() {
                let k = fp.index();
                jac[(i, j)] = -(br.d_mean[k] + s * br.d_radius[k]);
            }
        }
        jac
    }
}

/// Data-driven starting point.
///
/// G is half the smallest two-peak gap when any column resolves both
/// branches, otherwise the median of `(f − f_c)(f − f_m)` over the peaks
/// (each eigenvalue satisfies that product = G²). When f_afmr0 is free and
/// the gap minimum is available, the crossing field there fixes it.
pub fn estimate_start(
    peaks: &PeakSet,
    spins: &SpinSystemParams,
    cavity: &CavityParams,
    free: &FreeMask,
    window: FieldWindow,
) -> CrossingParams {
    let slope = spins.zeeman_slope();
    let mut min_gap: Option<(f64, f64)> = None;
    let mut products = Vec::new();
    for col in peaks.columns.iter().filter(|c| window.contains(c.field)) {
        if col.peaks.len() == 2 {
            let gap = col.peaks[1].position - col.peaks[0].position;
            if min_gap.is_none_or(|(g, _)| gap < g) {
                min_gap = Some((gap, col.field));
            }
        }
        let f_m = (spins.f_afmr0 - slope * col.field).max(0.0);
        for p in &col.peaks {
            products.push(((p.position - cavity.f_cavity) * (p.position - f_m)).max(0.0));
        }
    }
    let mut start = CrossingParams {
        big_g: 0.0,
        f_afmr0: spins.f_afmr0,
        g_factor: spins.g_factor,
        f_cavity: cavity.f_cavity,
    };
    match min_gap {
        Some((gap, field)) => {
            start.big_g = 0.5 * gap;
            if free.contains(FitParameter::ZeroFieldFrequency) {
                start.f_afmr0 = cavity.f_cavity + slope * field;
            }
        }
        None if !products.is_empty() => {
            products.sort_by(f64::total_cmp);
            start.big_g = products[products.len() / 2].sqrt();
        }
        None => {}
    }
    // a zero start would pin G, whose derivative vanishes there
    start.big_g = start.big_g.max(1e-3);
    start
}

fn window_points(peaks: &PeakSet, window: FieldWindow) -> Result<Vec<(f64, f64)>> {
    let in_window: Vec<_> = peaks
        .columns
        .iter()
        .filter(|c| window.contains(c.field) && !c.peaks.is_empty())
        .collect();
    if in_window.len() < 3 {
        return Err(Error::NoPeaksInWindow {
            lo: window.lo,
            hi: window.hi,
            found: in_window.len(),
        });
    }
    Ok(in_window
        .into_iter()
        .flat_map(|c| c.peaks.iter().map(move |p| (c.field, p.position)))
        .collect())
}

/// Fit from an explicit starting point with a given optimiser.
pub fn fit_avoided_crossing_from(
    peaks: &PeakSet,
    start: CrossingParams,
    free: &FreeMask,
    window: FieldWindow,
    optimizer: &LevenbergMarquardt,
) -> Result<FitReport> {
    if free.is_empty() {
        return Err(Error::NothingToFit);
    }
    let points = window_points(peaks, window)?;
    let n_peaks = points.len();
    let model = CrossingModel::new(points, start, free.clone());
    let sol = optimizer.minimize(&model, model.free_values(&start));
    let uncertainties = sol.uncertainties();
    let values = free
        .params()
        .iter()
        .zip(&sol.params)
        // the eigenvalues depend on G only through G²
        .map(|(p, v)| {
            if *p == FitParameter::Coupling {
                v.abs()
            } else {
                *v
            }
        })
        .collect();
    Ok(FitReport {
        parameters: free.params().iter().map(|p| p.name().to_string()).collect(),
        values,
        uncertainties,
        residual_rms_ghz: sol.residual_rms(),
        window_tesla: [window.lo, window.hi],
        n_peaks,
        iterations: sol.iterations,
        converged: sol.converged,
        gradient_norm: sol.gradient_norm,
    })
}

/// Fit the polariton eigenbranches to extracted peaks.
///
/// Parameters outside `free` are held at the values in `spins` and
/// `cavity`; free ones start from [`estimate_start`]. Each peak is matched
/// to whichever branch is nearer at the current parameters.
pub fn fit_avoided_crossing(
    peaks: &PeakSet,
    spins: &SpinSystemParams,
    cavity: &CavityParams,
    free: &FreeMask,
    window: FieldWindow,
) -> Result<FitReport> {
    if free.is_empty() {
        return Err(Error::NothingToFit);
    }
    let start = estimate_start(peaks, spins, cavity, free, window);
    fit_avoided_crossing_from(peaks, start, free, window, &LevenbergMarquardt::default())
}
