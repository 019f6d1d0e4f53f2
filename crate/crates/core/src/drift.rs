//! Step-size indexed drift families `G_γ` and numerical assumption checks.
//!
//! The sampled chain is `X_{k+1} = X_k − γ G_γ(X_k) + √(2γ) Z_{k+1}`; the kinds
//! below choose `G_γ`:
//!
//! | kind                   | `G_γ(x)`                                   |
//! |------------------------|--------------------------------------------|
//! | `Raw`                  | `∇U(x)`                                    |
//! | `TamedGlobal`          | `∇U(x) / (1 + γ‖∇U(x)‖)`                   |
//! | `TamedCoordinatewise`  | `∂ᵢU(x) / (1 + γ|∂ᵢU(x)|)` per coordinate  |
//! | `PartialDoubleWell`    | `‖x‖² x / (1 + γ‖x‖²) − x`                  |
//!
//! The partial kind tames only the cubic part of the double-well gradient and
//! is rejected for any other model.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{ModelFamily, TargetModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    Raw,
    TamedGlobal,
    TamedCoordinatewise,
    PartialDoubleWell,
}

impl DriftKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DriftKind::Raw => "raw",
            DriftKind::TamedGlobal => "tamed_global",
            DriftKind::TamedCoordinatewise => "tamed_coordinatewise",
            DriftKind::PartialDoubleWell => "partial_double_well",
        }
    }
}

impl fmt::Display for DriftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DriftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(DriftKind::Raw),
            "tamed_global" => Ok(DriftKind::TamedGlobal),
            "tamed_coordinatewise" => Ok(DriftKind::TamedCoordinatewise),
            "partial_double_well" => Ok(DriftKind::PartialDoubleWell),
            other => Err(Error::InvalidConfiguration(format!(
                "unknown drift kind {other:?}"
            ))),
        }
    }
}

/// A drift family bound to a model.
#[derive(Debug, Clone)]
pub struct DriftSpec {
    kind: DriftKind,
    model: TargetModel,
}

impl DriftSpec {
    pub fn new(kind: DriftKind, model: TargetModel) -> Result<Self> {
        if kind == DriftKind::PartialDoubleWell && model.family() != ModelFamily::DoubleWell {
            return Err(Error::InvalidConfiguration(format!(
                "partial_double_well drift requires the double well model, got {}",
                model.name()
            )));
        }
        Ok(Self { kind, model })
    }

    pub fn kind(&self) -> DriftKind {
        self.kind
    }

    pub fn model(&self) -> &TargetModel {
        &self.model
    }

    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    /// `G_γ(x)`, with argument checks.
    pub fn eval(&self, x: &[f64], gamma: f64) -> Result<Vec<f64>> {
        check_gamma(gamma)?;
        if x.len() != self.dimension() {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, drift expects {}",
                x.len(),
                self.dimension()
            )));
        }
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, gamma, &mut out);
        Ok(out)
    }

    /// `G_γ(x)` written into `out`, no checks.
    pub fn eval_into(&self, x: &[f64], gamma: f64, out: &mut [f64]) {
        match self.kind {
            DriftKind::PartialDoubleWell => {
                let r2 = crate::norm_sq(x);
                let scale = r2 / (1.0 + gamma * r2) - 1.0;
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = scale * xi;
                }
            }
            _ => {
                self.model.gradient_into(x, out);
                tame_in_place(self.kind, gamma, out);
            }
        }
    }
}

/// Applies the taming of `kind` to a gradient vector in place.
pub fn tame_in_place(kind: DriftKind, gamma: f64, grad: &mut [f64]) {
    match kind {
        DriftKind::Raw | DriftKind::PartialDoubleWell => {}
        DriftKind::TamedGlobal => {
            let factor = 1.0 / (1.0 + gamma * crate::norm(grad));
            grad.iter_mut().for_each(|g| *g *= factor);
        }
        DriftKind::TamedCoordinatewise => {
            grad.iter_mut().for_each(|g| *g /= 1.0 + gamma * g.abs());
        }
    }
}

/// `G_γ(x)`.
pub fn drift_eval(spec: &DriftSpec, x: &[f64], gamma: f64) -> Result<Vec<f64>> {
    spec.eval(x, gamma)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive and finite, got {gamma}"
        )));
    }
    Ok(())
}

/// Worst ratio `‖G_γ(x) − ∇U(x)‖ / (γ‖∇U(x)‖²)` over `points`.
///
/// Points where `∇U(x) = 0` are skipped; the ratio is undefined there.
/// For both taming kinds the result is at most 1.
pub fn check_closeness(spec: &DriftSpec, gamma: f64, points: &[Vec<f64>]) -> Result<f64> {
    check_gamma(gamma)?;
    if points.is_empty() {
        return Err(Error::InvalidArgument("closeness check needs points".into()));
    }
    let d = spec.dimension();
    let mut grad = vec![0.0; d];
    let mut drift = vec![0.0; d];
    let mut worst: Option<f64> = None;
    for x in points {
        if x.len() != d {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, drift expects {d}",
                x.len()
            )));
        }
        spec.model.gradient_into(x, &mut grad);
        let g2 = crate::norm_sq(&grad);
        if g2 == 0.0 {
            continue;
        }
        spec.eval_into(x, gamma, &mut drift);
        let diff = drift
            .iter()
            .zip(&grad)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let ratio = diff / (gamma * g2);
        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
    }
    worst.ok_or_else(|| {
        Error::InvalidArgument("every point has a vanishing gradient".into())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

/// Grid evaluation of the dissipativity quantity
/// `A_γ(x) = ⟨x/‖x‖, G_γ(x)⟩ − γ/(2‖x‖) ‖G_γ(x)‖²`.
///
/// The condition is a liminf at infinity; a finite grid can only suggest it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub quantity: String,
    pub drift: DriftKind,
    pub gamma: f64,
    pub radii: Vec<f64>,
    /// Minimum of `A_γ(x)` over sampled directions, per radius.
    pub per_radius_min: Vec<f64>,
    /// Minimum of `A_γ(x) / ‖x‖`, per radius.
    pub per_radius_min_scaled: Vec<f64>,
    /// Largest `γ‖G_γ(x)‖` seen over every sampled point.
    pub max_scaled_drift_norm: f64,
    pub verdict: Verdict,
}

/// `A_γ(x)`; `x` must be non-zero.
pub fn dissipativity_quantity(spec: &DriftSpec, x: &[f64], gamma: f64) -> f64 {
    let mut g = vec![0.0; x.len()];
    spec.eval_into(x, gamma, &mut g);
    let r = crate::norm(x);
    let dot: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
    dot / r - gamma / (2.0 * r) * crate::norm_sq(&g)
}

/// Default radius grid `{1, 10, 100, 1000}`.
pub const DEFAULT_RADII: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
/// Default number of sphere directions per radius.
pub const DEFAULT_DIRECTIONS: usize = 64;

/// Samples `A_γ` on spheres of the given radii.
///
/// Verdict: `Satisfied` when the minimum at the two largest radii is positive,
/// `Violated` when some value at the largest radius is `<= 0`, otherwise
/// `Inconclusive`.
pub fn check_dissipativity(
    spec: &DriftSpec,
    gamma: f64,
    radii: &[f64],
    directions_per_radius: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    check_gamma(gamma)?;
    if radii.is_empty() {
        return Err(Error::InvalidArgument("radius grid is empty".into()));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be increasing".into()));
    }
    if directions_per_radius == 0 {
        return Err(Error::InvalidArgument(
            "need at least one direction per radius".into(),
        ));
    }
    let d = spec.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut per_radius_min = Vec::with_capacity(radii.len());
    let mut per_radius_min_scaled = Vec::with_capacity(radii.len());
    let mut max_scaled_drift_norm = 0.0_f64;
    for &r in radii {
        let mut min = f64::INFINITY;
        for _ in 0..directions_per_radius {
            sample_sphere(&mut rng, r, &mut x);
            spec.eval_into(&x, gamma, &mut g);
            let dot: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
            let g2 = crate::norm_sq(&g);
            let value = dot / r - gamma / (2.0 * r) * g2;
            min = min.min(value);
            max_scaled_drift_norm = max_scaled_drift_norm.max(gamma * g2.sqrt());
        }
        per_radius_min.push(min);
        per_radius_min_scaled.push(min / r);
    }
    let n = per_radius_min.len();
    let tail = &per_radius_min[n.saturating_sub(2)..];
    let verdict = if tail.iter().all(|&v| v > 0.0) {
        Verdict::Satisfied
    } else if per_radius_min[n - 1] <= 0.0 {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    Ok(AssumptionReport {
        quantity: "<x/|x|, G(x)> - gamma/(2|x|) |G(x)|^2".into(),
        drift: spec.kind,
        gamma,
        radii: radii.to_vec(),
        per_radius_min,
        per_radius_min_scaled,
        max_scaled_drift_norm,
        verdict,
    })
}

/// Uniform point on the sphere of radius `r` (normalised Gaussian draw).
pub(crate) fn sample_sphere<R: Rng>(rng: &mut R, r: f64, out: &mut [f64]) {
    loop {
        out.iter_mut()
            .for_each(|v| *v = rng.sample::<f64, _>(StandardNormal));
        let n = crate::norm(out);
        if n > 0.0 {
            out.iter_mut().for_each(|v| *v *= r / n);
            return;
        }
    }
}
