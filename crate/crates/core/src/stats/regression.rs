use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `log |bias| = intercept + slope · log γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    pub points_dropped: usize,
}

/// Fits the rate of `|bias|` in the step size on log–log axes.
///
/// Points with non-positive (or non-finite) step or bias are dropped with a
/// warning; fewer than three survivors is an error.
pub fn rate_regression(points: &[(f64, f64)]) -> Result<RateFit> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(g, b)| {
            let ok = g > 0.0 && b > 0.0 && g.is_finite() && b.is_finite();
            if !ok {
                warn!("rate regression: dropping point (gamma = {g}, bias = {b})");
            }
            ok
        })
        .map(|&(g, b)| (g.ln(), b.ln()))
        .collect();
    if kept.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate regression needs 3 positive points, {} usable of {}",
            kept.len(),
            points.len()
        )));
    }
    let n = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / n;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = kept.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "rate regression needs at least two distinct step sizes".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points_used: kept.len(),
        points_dropped: points.len() - kept.len(),
    })
}
