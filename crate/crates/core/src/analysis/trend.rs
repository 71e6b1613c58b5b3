//! Power-law temperature trends `y = A ± B·T^p`.

use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{LeastSquaresProblem, LevenbergMarquardt};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendSign {
    /// `A + B·T^p`, e.g. thermally broadened linewidth.
    #[serde(rename = "+")]
    Plus,
    /// `A − B·T^p`, e.g. thermally reduced coupling.
    #[serde(rename = "-")]
    Minus,
}

impl TrendSign {
    fn factor(self) -> f64 {
        match self {
            TrendSign::Plus => 1.0,
            TrendSign::Minus => -1.0,
        }
    }
}

impl FromStr for TrendSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(TrendSign::Plus),
            "-" | "minus" => Ok(TrendSign::Minus),
            _ => Err(Error::InvalidParameter {
                name: "sign",
                reason: format!("expected plus or minus, got `{s}`"),
            }),
        }
    }
}

/// Unit the temperatures (and therefore `B`) are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemperatureUnit {
    #[serde(rename = "K")]
    Kelvin,
    #[serde(rename = "mK")]
    Millikelvin,
}

impl FromStr for TemperatureUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K" | "k" => Ok(TemperatureUnit::Kelvin),
            "mK" | "mk" => Ok(TemperatureUnit::Millikelvin),
            _ => Err(Error::InvalidParameter {
                name: "temperature_unit",
                reason: format!("expected K or mK, got `{s}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub offset: f64,
    pub coefficient: f64,
    pub exponent: f64,
    pub exponent_free: bool,
    pub sign: TrendSign,
    pub temperature_unit: TemperatureUnit,
    pub residual_rms: f64,
    pub n_points: usize,
}

impl TrendFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.sign.factor() * self.coefficient * t.powf(self.exponent)
    }
}

/// Ordinary least squares for `y = A + B·x`, anchored at the first sample
/// so that constant data gives `B = 0` and `A = y₀` exactly.
fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let x_mean = x.iter().sum::<f64>() / n;
    let y0 = y[0];
    let dy_mean = y.iter().map(|v| v - y0).sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - x_mean).powi(2)).sum();
    let x_scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(sxx > (1e-12 * x_scale).powi(2) * n) {
        return Err(Error::SingularDesign("all temperatures are equal".into()));
    }
    let sxy: f64 = x
        .iter()
        .zip(y)
        .map(|(xv, yv)| (xv - x_mean) * ((yv - y0) - dy_mean))
        .sum();
    let b = sxy / sxx;
    let a = if b == 0.0 {
        y0 + dy_mean
    } else {
        y0 + dy_mean - b * x_mean
    };
    Ok((a, b))
}

/// `y = A + s·B'·τ^p` with `τ = T / T_max`.
struct PowerLaw {
    tau: Vec<f64>,
    y: Vec<f64>,
    sign: f64,
}

impl LeastSquaresProblem for PowerLaw {
    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        self.tau
            .iter()
            .zip(&self.y)
            .map(|(t, y)| p[0] + self.sign * p[1] * t.powf(p[2]) - y)
            .collect()
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.tau.len(), 3);
        for (i, &t) in self.tau.iter().enumerate() {
            let tp = t.powf(p[2]);
            jac[(i, 0)] = 1.0;
            jac[(i, 1)] = self.sign * tp;
            jac[(i, 2)] = self.sign * p[1] * tp * t.ln();
        }
        jac
    }
}

/// Least-squares fit of `y = A ± B·T^p`, with `p = 4` unless
/// `exponent_free`.
///
/// Temperatures must be positive and in `unit`; `B` comes back in
/// y-units per `unit^p`. A fixed exponent needs two points, a free one
/// three.
pub fn fit_t4_trend(
    points: &[(f64, f64)],
    sign: TrendSign,
    exponent_free: bool,
    unit: TemperatureUnit,
) -> Result<TrendFit> {
    let needed = if exponent_free { 3 } else { 2 };
    if points.len() < needed {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: format!("need at least {needed} points, got {}", points.len()),
        });
    }
    for &(t, y) in points {
        if !(t.is_finite() && y.is_finite()) {
            return Err(Error::NonFinite("points"));
        }
        if t <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "temperature",
                reason: format!("must be > 0, got {t}"),
            });
        }
    }
    let s = sign.factor();
    let t_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let tau: Vec<f64> = points.iter().map(|p| p.0 / t_max).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();

    let x4: Vec<f64> = tau.iter().map(|t| s * t.powi(4)).collect();
    let (a4, b4) = linear_fit(&x4, &y)?;
    let (offset, scaled_b, exponent) = if exponent_free {
        let problem = PowerLaw {
            tau: tau.clone(),
            y: y.clone(),
            sign: s,
        };
        let sol = LevenbergMarquardt::default().minimize(&problem, vec![a4, b4, 4.0]);
        if !sol.params.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularDesign("power-law exponent diverged".into()));
        }
        (sol.params[0], sol.params[1], sol.params[2])
    } else {
        (a4, b4, 4.0)
    };
    let coefficient = scaled_b / t_max.powf(exponent);

    let fit = TrendFit {
        offset,
        coefficient,
        exponent,
        exponent_free,
        sign,
        temperature_unit: unit,
        residual_rms: 0.0,
        n_points: points.len(),
    };
    let residual_rms = (points
        .iter()
        .map(|&(t, v)| (fit.eval(t) - v).powi(2))
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    let fit = TrendFit {
        residual_rms,
        ..fit
    };

    if !(fit.offset > 0.0) {
        return Err(Error::NonPhysicalTrend(format!(
            "offset A = {} is not positive",
            fit.offset
        )));
    }
    if sign == TrendSign::Minus && !(fit.eval(t_max) > 0.0) {
        return Err(Error::NonPhysicalTrend(format!(
            "A - B*T^p = {} at T = {t_max} is not positive",
            fit.eval(t_max)
        )));
    }
    Ok(fit)
}
