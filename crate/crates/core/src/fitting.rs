//! Least-squares fitting helpers for decay-rate estimation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Ordinary least squares for y ≈ intercept + slope·x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// max |y_i - fit(x_i)|
    pub max_residual: f64,
    /// Σ (y_i - fit(x_i))²
    pub sum_sq_residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two samples to fit a line");
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut max_residual = 0.0f64;
    let mut sum_sq = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        let r = b - (intercept + slope * a);
        max_residual = max_residual.max(r.abs());
        sum_sq += r * r;
    }
    LinearFit { slope, intercept, max_residual, sum_sq_residual: sum_sq }
}

/// Exponential decay fit over a τ-window: observable ≈ amplitude·e^{rate·τ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub rate: f64,
    pub amplitude: f64,
    /// max deviation of log(observable) from the fitted line
    pub residual: f64,
}

/// Least squares of log(observable) against τ, restricted to the window.
/// Rejects observables that are not strictly positive there.
pub fn fit_decay(taus: &[f64], observable: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if !(window.1 > window.0) {
        return Err(Error::Precondition(format!("empty fit window {window:?}")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in taus.iter().zip(observable.iter()) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::Precondition(format!(
                "observable is not positive at tau = {t} (value {v})"
            )));
        }
        xs.push(t);
        ys.push(v.ln());
    }
    if xs.len() < 2 {
        return Err(Error::Precondition("fewer than two samples in the fit window".into()));
    }
    let fit = linear_fit(&xs, &ys);
    Ok(DecayFit {
        window,
        rate: fit.slope,
        amplitude: fit.intercept.exp(),
        residual: fit.max_residual,
    })
}
