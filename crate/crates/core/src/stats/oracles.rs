use super::quadrature::integrate;
use crate::error::{Error, Result};

/// Nats below the peak of `log ν` at which the radial domain is truncated.
pub const LOG_TAIL_CUTOFF: f64 = 60.0;

/// `log ν(r) = (d−1) log r + r²/2 − r⁴/4`, the radial density of the double
/// well in dimension `d` (up to a constant).
pub fn double_well_log_radial_density(dimension: usize, r: f64) -> f64 {
    let r2 = r * r;
    let shape = 0.5 * r2 - 0.25 * r2 * r2;
    if dimension == 1 {
        shape
    } else {
        (dimension - 1) as f64 * r.ln() + shape
    }
}

/// `E[X_i²]` for the double well in dimension `d`.
///
/// By radial symmetry `E[X_i²] = d⁻¹ ∫ r² ν / ∫ ν`; both integrals are taken in
/// the log domain on the range where `log ν` is within
/// [`LOG_TAIL_CUTOFF`] nats of its maximum.
pub fn reference_moment_double_well(dimension: usize, order: u32) -> Result<f64> {
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if order != 2 {
        return Err(Error::InvalidArgument(format!(
            "double well oracle only provides order 2, got {order}"
        )));
    }
    // Mode solves r⁴ − r² − (d − 1) = 0.
    let mode2 = 0.5 * (1.0 + (1.0 + 4.0 * (dimension as f64 - 1.0)).sqrt());
    let ratio = radial_moment_ratio(
        |r| double_well_log_radial_density(dimension, r),
        mode2.sqrt(),
        2,
    )?;
    Ok(ratio / dimension as f64)
}

/// `∫ r^power ν(r) dr / ∫ ν(r) dr` over `r > 0`, given `log ν` and its mode.
///
/// `log ν` must be unimodal on `(0, ∞)` and tend to `-∞` as `r → ∞`.
/// Adding a constant to `log ν` leaves the result unchanged.
pub fn radial_moment_ratio<F: Fn(f64) -> f64>(log_nu: F, mode: f64, power: i32) -> Result<f64> {
    if !(mode.is_finite() && mode >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad mode {mode}")));
    }
    let peak = log_nu(mode);
    if !peak.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "log density is not finite at its mode {mode}: {peak}"
        )));
    }
    let floor = peak - LOG_TAIL_CUTOFF;
    let below = |r: f64| {
        let v = log_nu(r);
        v.is_nan() || v < floor
    };

    // Upper edge: expand then bisect.
    let mut hi = mode.max(1.0);
    let mut steps = 0;
    while !below(hi) {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::NumericalFailure(
                "log density does not decay; cannot truncate the radial domain".into(),
            ));
        }
    }
    let hi = bisect_edge(&below, mode, hi);
    // Lower edge: the origin itself unless log ν drops below the floor before it.
    let lo = if mode == 0.0 || !below(0.0) {
        0.0
    } else {
        bisect_edge(&below, mode, 0.0)
    };

    let weight = |r: f64| (log_nu(r) - peak).exp();
    let scale = (hi - lo).max(f64::MIN_POSITIVE);
    let den = integrate(weight, lo, hi, 1e-13 * scale, 1e-12, 2000)?;
    let num = integrate(|r| r.powi(power) * weight(r), lo, hi, 1e-13 * scale * hi.powi(power).max(1.0), 1e-12, 2000)?;
    if den.value <= 0.0 {
        return Err(Error::NumericalFailure(format!(
            "normalising integral is {} on [{lo}, {hi}]",
            den.value
        )));
    }
    Ok(num.value / den.value)
}

// `inside` is a point where `below` is false, `outside` one where it is true.
fn bisect_edge<G: Fn(f64) -> bool>(below: &G, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if below(mid) {
            outside = mid;
        } else {
            inside = mid;
        }
    }
    outside
}

/// Stationary variance of ULA on a one-dimensional Gaussian with variance `sigma2`.
///
/// The chain is linear, `X' = (1 − γ/σ²) X + √(2γ) Z`, so its variance has the
/// fixed point `v = 2σ⁴ / (2σ² − γ)`; it exists only when `γ < 2σ²`.
pub fn ula_gaussian_stationary_variance(sigma2: f64, gamma: f64) -> Result<f64> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variance must be positive, got {sigma2}"
        )));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {gamma}"
        )));
    }
    let limit = 2.0 * sigma2;
    if gamma >= limit {
        return Err(Error::Instability { gamma, limit });
    }
    Ok(2.0 * sigma2 * sigma2 / (limit - gamma))
}
