//! Transition kernels and the chain runner.
//!
//! Every kernel starts from the Langevin proposal
//! `y = x − γ G_γ(x) + √(2γ) ξ` (or `y = x + √(2γ) ξ` for the random walk):
//!
//! - [`Adjustment::None`]: `y` is always taken (ULA, TULA, TULAc, partial taming).
//! - [`Adjustment::MetropolisLangevin`]: `y` is accepted with the
//!   Metropolis–Hastings ratio of the Gaussian proposal `N(z − γG_γ(z), 2γ I)`
//!   (MALA, TMALA, TMALAc).
//! - [`Adjustment::MetropolisRandomWalk`]: symmetric proposal, ratio `exp(U(x) − U(y))`.
//!
//! The chain stops as soon as `‖X_k‖` exceeds the divergence threshold.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::drift::{DriftKind, DriftSpec};
use crate::error::{Error, Result};
use crate::stats::StreamingMoments;

/// Default norm above which a chain is declared diverged.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e5;
/// Default minimal acceptance rate for Metropolis-adjusted chains.
pub const DEFAULT_ACCEPTANCE_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    None,
    MetropolisLangevin,
    MetropolisRandomWalk,
}

impl Adjustment {
    pub fn is_metropolis(&self) -> bool {
        !matches!(self, Adjustment::None)
    }
}

/// Kernel selection, step size and guards.
#[derive(Debug, Clone)]
pub struct KernelConfig {
    drift: DriftSpec,
    gamma: f64,
    adjustment: Adjustment,
    divergence_threshold: f64,
    acceptance_floor: f64,
}

impl KernelConfig {
    pub fn new(drift: DriftSpec, gamma: f64, adjustment: Adjustment) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive and finite, got {gamma}"
            )));
        }
        Ok(Self {
            drift,
            gamma,
            adjustment,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            acceptance_floor: DEFAULT_ACCEPTANCE_FLOOR,
        })
    }

    pub fn with_divergence_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "divergence threshold must be positive, got {threshold}"
            )));
        }
        self.divergence_threshold = threshold;
        Ok(self)
    }

    pub fn with_acceptance_floor(mut self, floor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&floor) {
            return Err(Error::InvalidParameter(format!(
                "acceptance floor must lie in [0, 1], got {floor}"
            )));
        }
        self.acceptance_floor = floor;
        Ok(self)
    }

    pub fn drift(&self) -> &DriftSpec {
        &self.drift
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn adjustment(&self) -> Adjustment {
        self.adjustment
    }

    pub fn divergence_threshold(&self) -> f64 {
        self.divergence_threshold
    }

    pub fn acceptance_floor(&self) -> f64 {
        self.acceptance_floor
    }

    pub fn dimension(&self) -> usize {
        self.drift.dimension()
    }
}

// U(x) and G_γ(x) at the current position, tagged with what produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CacheKey {
    gamma_bits: u64,
    kind: DriftKind,
}

/// Evolving chain: position, counters, guard and moment accumulators.
#[derive(Debug, Clone)]
pub struct ChainState {
    position: Vec<f64>,
    step: u64,
    rng: ChaCha8Rng,
    accepted: u64,
    proposed: u64,
    diverged: bool,
    diverged_at: Option<u64>,
    tracked: Vec<usize>,
    moments: Vec<StreamingMoments>,
    proposal: Vec<f64>,
    noise: Vec<f64>,
    drift_x: Vec<f64>,
    drift_y: Vec<f64>,
    potential_x: f64,
    cache: Option<CacheKey>,
}

impl ChainState {
    pub fn new(x0: &[f64], seed: u64) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::InvalidArgument("initial point is empty".into()));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "initial point has non-finite entries".into(),
            ));
        }
        let d = x0.len();
        Ok(Self {
            position: x0.to_vec(),
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            accepted: 0,
            proposed: 0,
            diverged: false,
            diverged_at: None,
            tracked: Vec::new(),
            moments: Vec::new(),
            proposal: vec![0.0; d],
            noise: vec![0.0; d],
            drift_x: vec![0.0; d],
            drift_y: vec![0.0; d],
            potential_x: f64::NAN,
            cache: None,
        })
    }

    /// Tracks the given coordinates with batch-means blocks of `batch_len` samples.
    pub fn with_tracking(mut self, tracked: &[usize], batch_len: u64) -> Result<Self> {
        if let Some(&bad) = tracked.iter().find(|&&c| c >= self.position.len()) {
            return Err(Error::InvalidArgument(format!(
                "tracked coordinate {bad} out of range for dimension {}",
                self.position.len()
            )));
        }
        self.tracked = tracked.to_vec();
        self.moments = tracked.iter().map(|_| StreamingMoments::new(batch_len)).collect();
        Ok(self)
    }

    pub fn position(&self) -> &[f64] {
        &self.position
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn proposed(&self) -> u64 {
        self.proposed
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    pub fn diverged_at(&self) -> Option<u64> {
        self.diverged_at
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    pub fn tracked(&self) -> &[usize] {
        &self.tracked
    }

    pub fn moments(&self) -> &[StreamingMoments] {
        &self.moments
    }

    /// Moves the chain to `x` and clears the divergence flag; counters and
    /// the generator continue.
    pub fn restart_at(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.position.len(), "restart point dimension");
        self.position.copy_from_slice(x);
        self.diverged = false;
        self.diverged_at = None;
        self.cache = None;
    }

    /// Adds the current position to the tracked accumulators. No-op once diverged.
    pub fn record(&mut self) {
        if self.diverged {
            return;
        }
        for (acc, &c) in self.moments.iter_mut().zip(&self.tracked) {
            acc.push(self.position[c]);
        }
    }

    /// One transition of the configured kernel, drawing the Gaussian noise
    /// first and then, for Metropolis kernels, the uniform.
    pub fn step(&mut self, config: &KernelConfig) {
        if self.diverged {
            return;
        }
        let mut noise = std::mem::take(&mut self.noise);
        for z in noise.iter_mut() {
            *z = self.rng.sample(StandardNormal);
        }
        match config.adjustment {
            Adjustment::None => self.step_unadjusted(config, &noise),
            Adjustment::MetropolisLangevin => {
                let u: f64 = self.rng.random();
                self.step_metropolis_langevin(config, &noise, u);
            }
            Adjustment::MetropolisRandomWalk => {
                let u: f64 = self.rng.random();
                self.step_metropolis_rw(config, &noise, u);
            }
        }
        self.noise = noise;
    }

    /// `x ← x − γ G_γ(x) + √(2γ) noise`.
    pub fn step_unadjusted(&mut self, config: &KernelConfig, noise: &[f64]) {
        if self.diverged {
            return;
        }
        debug_assert_eq!(noise.len(), self.position.len());
        let gamma = config.gamma;
        let scale = (2.0 * gamma).sqrt();
        config
            .drift
            .eval_into(&self.position, gamma, &mut self.drift_x);
        for ((x, g), z) in self.position.iter_mut().zip(&self.drift_x).zip(noise) {
            *x += -gamma * g + scale * z;
        }
        self.cache = None;
        self.step += 1;
        self.guard(config);
    }

    /// Metropolis-adjusted Langevin step. A proposal with non-finite `U` or
    /// drift is rejected.
    pub fn step_metropolis_langevin(&mut self, config: &KernelConfig, noise: &[f64], uniform: f64) {
        if self.diverged {
            return;
        }
        let gamma = config.gamma;
        let scale = (2.0 * gamma).sqrt();
        self.refresh_cache(config);
        for (((y, x), g), z) in self
            .proposal
            .iter_mut()
            .zip(&self.position)
            .zip(&self.drift_x)
            .zip(noise)
        {
            *y = x - gamma * g + scale * z;
        }
        let model = config.drift.model();
        let potential_y = model.potential_unchecked(&self.proposal);
        config
            .drift
            .eval_into(&self.proposal, gamma, &mut self.drift_y);
        let log_ratio = if potential_y.is_finite() && self.drift_y.iter().all(|v| v.is_finite()) {
            langevin_log_ratio(
                gamma,
                &self.position,
                self.potential_x,
                &self.drift_x,
                &self.proposal,
                potential_y,
                &self.drift_y,
            )
        } else {
            f64::NEG_INFINITY
        };
        if self.accept(log_ratio, uniform) {
            std::mem::swap(&mut self.position, &mut self.proposal);
            std::mem::swap(&mut self.drift_x, &mut self.drift_y);
            self.potential_x = potential_y;
        }
        self.step += 1;
        self.guard(config);
    }

    /// Random walk Metropolis step with proposal `x + √(2γ) noise`.
    pub fn step_metropolis_rw(&mut self, config: &KernelConfig, noise: &[f64], uniform: f64) {
        if self.diverged {
            return;
        }
        let scale = (2.0 * config.gamma).sqrt();
        let model = config.drift.model();
        if self.cache.is_none() {
            self.potential_x = model.potential_unchecked(&self.position);
        }
        for ((y, x), z) in self.proposal.iter_mut().zip(&self.position).zip(noise) {
            *y = x + scale * z;
        }
        let potential_y = model.potential_unchecked(&self.proposal);
        let log_ratio = if potential_y.is_finite() {
            self.potential_x - potential_y
        } else {
            f64::NEG_INFINITY
        };
        if self.accept(log_ratio, uniform) {
            std::mem::swap(&mut self.position, &mut self.proposal);
            self.potential_x = potential_y;
        }
        // Only U(x) is valid for the random walk; mark the cache with that.
        self.cache = Some(CacheKey {
            gamma_bits: u64::MAX,
            kind: DriftKind::Raw,
        });
        self.step += 1;
        self.guard(config);
    }

    fn refresh_cache(&mut self, config: &KernelConfig) {
        let key = CacheKey {
            gamma_bits: config.gamma.to_bits(),
            kind: config.drift.kind(),
        };
        if self.cache != Some(key) {
            self.potential_x = config.drift.model().potential_unchecked(&self.position);
            config
                .drift
                .eval_into(&self.position, config.gamma, &mut self.drift_x);
            self.cache = Some(key);
        }
    }

    fn accept(&mut self, log_ratio: f64, uniform: f64) -> bool {
        self.proposed += 1;
        // ln(0) = -inf accepts every proposal with a positive ratio.
        let accepted = !log_ratio.is_nan() && log_ratio > f64::NEG_INFINITY && uniform.ln() < log_ratio;
        if accepted {
            self.accepted += 1;
        }
        accepted
    }

    fn guard(&mut self, config: &KernelConfig) {
        let n = crate::norm(&self.position);
        if !(n <= config.divergence_threshold) {
            self.diverged = true;
            self.diverged_at = Some(self.step);
        }
    }
}

/// Log Metropolis–Hastings ratio for the Langevin proposal
/// `q(·|z) = N(z − γ G_γ(z), 2γ I)` and target `exp(−U)`.
pub fn langevin_log_ratio(
    gamma: f64,
    x: &[f64],
    potential_x: f64,
    drift_x: &[f64],
    y: &[f64],
    potential_y: f64,
    drift_y: &[f64],
) -> f64 {
    // log q(b|a) = −‖b − a + γ G(a)‖² / (4γ)
    let log_q = |to: &[f64], from: &[f64], g: &[f64]| -> f64 {
        -to.iter()
            .zip(from)
            .zip(g)
            .map(|((t, f), gi)| {
                let r = t - f + gamma * gi;
                r * r
            })
            .sum::<f64>()
            / (4.0 * gamma)
    };
    potential_x - potential_y + log_q(x, y, drift_y) - log_q(y, x, drift_x)
}

/// Chain length, burn-in and the coordinates whose moments are streamed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub n_steps: u64,
    pub burn_in: u64,
    pub tracked: Vec<usize>,
}

impl RunSpec {
    pub fn new(n_steps: u64, tracked: Vec<usize>) -> Self {
        Self {
            n_steps,
            burn_in: 0,
            tracked,
        }
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }
}

/// Moment estimates for one tracked coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateEstimate {
    pub coordinate: usize,
    pub count: u64,
    pub mean: f64,
    pub mean_sq: f64,
    /// Batch-means standard error of `mean`.
    pub mean_mcse: Option<f64>,
    /// Batch-means standard error of `mean_sq`.
    pub mean_sq_mcse: Option<f64>,
}

impl CoordinateEstimate {
    pub fn moment(&self, order: u32) -> Option<f64> {
        match order {
            1 => Some(self.mean),
            2 => Some(self.mean_sq),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub estimates: Vec<CoordinateEstimate>,
    /// Present for Metropolis kernels only.
    pub acceptance_rate: Option<f64>,
    pub diverged: bool,
    pub diverged_at: Option<u64>,
    pub excluded: bool,
    pub seed: u64,
    pub steps_completed: u64,
    pub duration_secs: f64,
}

impl ChainResult {
    pub fn estimate(&self, coordinate: usize) -> Option<&CoordinateEstimate> {
        self.estimates.iter().find(|e| e.coordinate == coordinate)
    }
}

/// Runs the configured kernel for `run.n_steps` transitions from `x0`.
///
/// The ergodic average uses the iterates `X_burn_in, …, X_{n−1}`. The chain
/// stops early on divergence. Identical `(config, x0, seed, run)` give
/// identical results, apart from `duration_secs`.
pub fn run_chain(config: &KernelConfig, x0: &[f64], seed: u64, run: &RunSpec) -> Result<ChainResult> {
    if run.n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    if x0.len() != config.dimension() {
        return Err(Error::InvalidArgument(format!(
            "initial point has dimension {}, model has {}",
            x0.len(),
            config.dimension()
        )));
    }
    let start = Instant::now();
    let samples = run.n_steps.saturating_sub(run.burn_in);
    let batch_len = ((samples as f64).sqrt().floor() as u64).max(1);
    let mut state = ChainState::new(x0, seed)?.with_tracking(&run.tracked, batch_len)?;
    for k in 0..run.n_steps {
        if k >= run.burn_in {
            state.record();
        }
        state.step(config);
        if state.diverged() {
            break;
        }
    }
    Ok(finish(&state, config, seed, start.elapsed().as_secs_f64()))
}

fn finish(state: &ChainState, config: &KernelConfig, seed: u64, duration_secs: f64) -> ChainResult {
    let estimates = state
        .tracked
        .iter()
        .zip(&state.moments)
        .map(|(&coordinate, m)| CoordinateEstimate {
            coordinate,
            count: m.moments.count(),
            mean: m.moments.mean(),
            mean_sq: m.moments.mean_sq(),
            mean_mcse: m.batches.mcse_first(),
            mean_sq_mcse: m.batches.mcse_second(),
        })
        .collect();
    let acceptance_rate = if config.adjustment.is_metropolis() {
        state.acceptance_rate()
    } else {
        None
    };
    let low_acceptance = acceptance_rate.is_some_and(|r| r < config.acceptance_floor);
    ChainResult {
        estimates,
        acceptance_rate,
        diverged: state.diverged,
        diverged_at: state.diverged_at,
        excluded: state.diverged || low_acceptance,
        seed,
        steps_completed: state.step,
        duration_secs,
    }
}
