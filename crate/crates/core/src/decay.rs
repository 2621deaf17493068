//! Classification of energy traces as exponential or polynomial decay.

use serde::{Deserialize, Serialize};

use crate::dispersion::PassivityReport;
use crate::error::{Error, Result};
use crate::modal::EnergyTrace;

/// Minimum number of usable samples inside the fit window.
pub const MIN_SAMPLES: usize = 20;
/// Below this `r²` neither model is accepted.
pub const R_SQUARED_FLOOR: f64 = 0.95;
/// Required `r²` lead of the winning model.
pub const R_SQUARED_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn least_squares(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|&(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    LinearFit { slope, intercept, r_squared, residual: (sse / n).sqrt() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    Exponential,
    Polynomial,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub kind: DecayKind,
    /// `ω` in `ℰ ~ e^{−ωt}`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rate: Option<f64>,
    /// `p` in `ℰ ~ t^p`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub slope: Option<f64>,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    pub residual: f64,
    pub exponential_r_squared: f64,
    pub polynomial_r_squared: f64,
    pub samples: usize,
}

/// The window `[T/5, T]` for a trace ending at `T`.
pub fn default_window(trace: &EnergyTrace) -> Option<(f64, f64)> {
    trace.times.last().map(|&t| (t / 5.0, t))
}

/// Fits both decay models over `window` (default `[T/5, T]`).
///
/// Samples with nonpositive energy or `t ≤ 0` are dropped before fitting.
pub fn fit_decay(trace: &EnergyTrace, window: Option<(f64, f64)>) -> Result<DecayReport> {
    let (a, b) = match window {
        Some(w) => w,
        None => default_window(trace).ok_or_else(|| Error::UnusableTrace("trace is empty".into()))?,
    };
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("fit window [{a}, {b}] is empty")));
    }
    if let (Some(&first), Some(&last)) = (trace.times.first(), trace.times.last()) {
        // allow rounding in the window ends
        let slack = 1e-9 * last.abs().max(1.0);
        if a < first - slack || b > last + slack {
            return Err(Error::InvalidArgument(format!(
                "fit window [{a}, {b}] is outside the trace range [{first}, {last}]"
            )));
        }
    }
    let samples: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.energy)
        .filter(|(&t, &e)| t >= a && t <= b && t > 0.0 && e > 0.0 && e.is_finite())
        .map(|(&t, &e)| (t, e.ln()))
        .collect();
    if samples.len() < MIN_SAMPLES {
        return Err(Error::UnusableTrace(format!(
            "{} usable samples in [{a}, {b}], need at least {MIN_SAMPLES}",
            samples.len()
        )));
    }
    let exp_fit = least_squares(&samples);
    let log_points: Vec<(f64, f64)> = samples.iter().map(|&(t, y)| (t.ln(), y)).collect();
    let poly_fit = least_squares(&log_points);

    let (winner, kind) = if exp_fit.r_squared >= poly_fit.r_squared {
        (exp_fit, DecayKind::Exponential)
    } else {
        (poly_fit, DecayKind::Polynomial)
    };
    let margin = (exp_fit.r_squared - poly_fit.r_squared).abs();
    let conclusive = winner.r_squared >= R_SQUARED_FLOOR && margin >= R_SQUARED_MARGIN;
    let kind = match kind {
        DecayKind::Exponential if conclusive && winner.slope < 0.0 => DecayKind::Exponential,
        DecayKind::Polynomial if conclusive && winner.slope < 0.0 => DecayKind::Polynomial,
        _ => DecayKind::Inconclusive,
    };
    Ok(DecayReport {
        kind,
        rate: (kind == DecayKind::Exponential).then_some(-exp_fit.slope),
        slope: (kind == DecayKind::Polynomial).then_some(poly_fit.slope),
        fit_window: (a, b),
        r_squared: winner.r_squared,
        residual: winner.residual,
        exponential_r_squared: exp_fit.r_squared,
        polynomial_r_squared: poly_fit.r_squared,
        samples: samples.len(),
    })
}

/// Decay expected from a passivity report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayPrediction {
    Exponential,
    /// Energy falls at least like `t^{max_slope}`.
    Polynomial { max_slope: f64 },
    None,
}

impl DecayPrediction {
    /// Whether an observed fit agrees with the prediction, allowing `tol` on
    /// polynomial slopes.
    pub fn is_consistent_with(&self, observed: &DecayReport, tol: f64) -> bool {
        match self {
            DecayPrediction::Exponential => observed.kind == DecayKind::Exponential,
            DecayPrediction::Polynomial { max_slope } => match observed.kind {
                DecayKind::Polynomial => observed.slope.is_some_and(|s| s <= max_slope + tol),
                // faster than any power is still at least as fast
                DecayKind::Exponential => true,
                DecayKind::Inconclusive => false,
            },
            DecayPrediction::None => true,
        }
    }
}

/// `m = 0` predicts exponential decay; `m > 0` predicts field norms
/// `~ t^{−1/m}`, so energy slope at most `−2/m`.
pub fn predict(report: &PassivityReport) -> DecayPrediction {
    match report.m {
        Some(0) => DecayPrediction::Exponential,
        Some(m) => DecayPrediction::Polynomial { max_slope: -2.0 / m as f64 },
        None => DecayPrediction::None,
    }
}
