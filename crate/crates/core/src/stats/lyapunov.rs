use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ChainState, KernelConfig};

/// `log V_a(x) = a (1 + ‖x‖²)^{1/2}`.
pub fn lyapunov_log(a: f64, x: &[f64]) -> f64 {
    a * (1.0 + crate::norm_sq(x)).sqrt()
}

/// One-step drift estimate at a single test point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovPoint {
    pub point: Vec<f64>,
    /// `log` of the Monte Carlo estimate of `E[V_a(X₁) | X₀ = x] / V_a(x)`.
    pub log_ratio: f64,
    /// `exp(log_ratio)`; saturates to infinity when the ratio is astronomically large.
    pub ratio: f64,
    /// `log` of the standard error of the ratio estimate.
    pub log_standard_error: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovDiagnostic {
    pub a: f64,
    pub mc_samples: usize,
    pub points: Vec<LyapunovPoint>,
}

/// Monte Carlo estimate of `R_γ V_a(x) / V_a(x)` for the kernel in `config`.
///
/// Each sample restarts the chain at `x` and takes one transition. Ratios are
/// combined with a log-sum-exp so `V_a` itself is never formed.
pub fn lyapunov_drift_estimate(
    config: &KernelConfig,
    a: f64,
    points: &[Vec<f64>],
    mc_samples: usize,
    seed: u64,
) -> Result<LyapunovDiagnostic> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    if mc_samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 Monte Carlo samples, got {mc_samples}"
        )));
    }
    let mut out = Vec::with_capacity(points.len());
    let mut logs = vec![0.0; mc_samples];
    for (i, x) in points.iter().enumerate() {
        if x.len() != config.dimension() {
            return Err(Error::InvalidArgument(format!(
                "test point {i} has dimension {}, model has {}",
                x.len(),
                config.dimension()
            )));
        }
        let base = lyapunov_log(a, x);
        let mut state = ChainState::new(x, seed.wrapping_add(i as u64))?;
        for l in logs.iter_mut() {
            state.restart_at(x);
            state.step(config);
            *l = lyapunov_log(a, state.position()) - base;
        }
        if logs.iter().any(|l| l.is_nan()) {
            return Err(Error::NumericalFailure(format!(
                "Lyapunov log ratio is NaN at test point {i}"
            )));
        }
        let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "Lyapunov log ratio overflowed at test point {i}"
            )));
        }
        let n = mc_samples as f64;
        let scaled: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
        let mean = scaled.iter().sum::<f64>() / n;
        let var = scaled.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let log_ratio = peak + mean.ln();
        let log_standard_error = peak + (var / n).sqrt().ln();
        out.push(LyapunovPoint {
            point: x.clone(),
            log_ratio,
            ratio: log_ratio.exp(),
            log_standard_error,
            standard_error: log_standard_error.exp(),
        });
    }
    Ok(LyapunovDiagnostic {
        a,
        mc_samples,
        points: out,
    })
}
