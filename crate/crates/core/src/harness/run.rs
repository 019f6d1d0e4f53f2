use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentSpec, StartConfig};
use super::seed::{chain_seed, derive_seed, start_seed, DOMAIN_CHECK};
use crate::drift::{check_closeness, check_dissipativity, AssumptionReport, DriftKind, DriftSpec};
use crate::error::{Error, Result};
use crate::kernels::{run_chain, ChainResult, KernelConfig, RunSpec};
use crate::potentials::{ModelFamily, ReferenceMoment, TargetModel};
use crate::stats::{error_summary, ula_gaussian_stationary_variance, BoxplotSummary};

/// Moment orders reported for every tracked coordinate.
pub const MOMENT_ORDERS: [u32; 2] = [1, 2];

/// One boxplot cell: error of a moment estimate across replicates.
///
/// `summary` holds `estimate − reference`; when the model has no reference
/// for this moment it holds the raw estimates and `reference` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub start: String,
    pub coordinate: usize,
    pub moment_order: u32,
    pub reference: Option<f64>,
    pub summary: BoxplotSummary,
    pub n_excluded: usize,
    pub n_diverged: usize,
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub algorithm: Algorithm,
    pub gamma_index: usize,
    pub gamma: f64,
    pub start_index: usize,
    pub start: String,
    pub replicate: usize,
    pub result: ChainResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub drift: DriftKind,
    pub gamma: f64,
    pub points: usize,
    /// Worst `‖G_γ − ∇U‖ / (γ‖∇U‖²)` over the sampled points.
    pub worst_ratio: f64,
}

/// Assumption-checker output for every drift in the spec and every step size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub dissipativity: Vec<AssumptionReport>,
    pub closeness: Vec<ClosenessReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UlaVarianceOracle {
    pub coordinate: usize,
    pub gamma: f64,
    /// `None` when the recursion is unstable at this step size.
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oracles {
    pub model: String,
    pub dimension: usize,
    /// Reference moments of the tracked coordinates.
    pub reference_moments: Vec<ReferenceMoment>,
    /// Stationary variance of raw-drift ULA, Gaussian models only.
    pub ula_stationary_variance: Vec<UlaVarianceOracle>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<SummaryRow>,
    pub chains: Vec<ChainRecord>,
}

struct Task {
    algorithm: Algorithm,
    gamma_index: usize,
    start_index: usize,
    replicate: usize,
}

fn tasks(spec: &ExperimentSpec) -> Vec<Task> {
    let mut out = Vec::with_capacity(spec.n_tasks());
    for &algorithm in &spec.algorithms {
        for gamma_index in 0..spec.step_sizes.len() {
            for start_index in 0..spec.starts.len() {
                for replicate in 0..spec.n_chains {
                    out.push(Task {
                        algorithm,
                        gamma_index,
                        start_index,
                        replicate,
                    });
                }
            }
        }
    }
    out
}

/// Initial point of replicate `rep` for a start; random starts are seeded per
/// `(start index, replicate)` only.
pub fn initial_point(start: &StartConfig, dimension: usize, master: u64, start_index: usize, rep: usize) -> Vec<f64> {
    let mut x = vec![0.0; dimension];
    match *start {
        StartConfig::Origin => {}
        StartConfig::Axis { radius } => x[0] = radius,
        StartConfig::RandomNorm { radius } => {
            let mut rng = ChaCha8Rng::seed_from_u64(start_seed(master, start_index, rep));
            crate::drift::sample_sphere(&mut rng, radius, &mut x);
        }
    }
    x
}

fn kernel_config(spec: &ExperimentSpec, model: &TargetModel, algorithm: Algorithm, gamma: f64) -> Result<KernelConfig> {
    let drift = DriftSpec::new(algorithm.drift_kind(), model.clone())?;
    KernelConfig::new(drift, gamma, algorithm.adjustment())?
        .with_divergence_threshold(spec.divergence_threshold)?
        .with_acceptance_floor(spec.acceptance_floor)
}

/// Runs every chain of the cross product on the global thread pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let model = spec.model.build()?;
    let configs = spec
        .algorithms
        .iter()
        .map(|&a| {
            spec.step_sizes
                .iter()
                .map(|&g| kernel_config(spec, &model, a, g))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let tracked = spec.tracked();
    let run = RunSpec::new(spec.n_steps, tracked.clone()).with_burn_in(spec.burn_in);
    let d = model.dimension();
    let labels: Vec<String> = spec.starts.iter().map(StartConfig::label).collect();

    info!(
        "running {} chains of {} steps on {} (d = {d})",
        spec.n_tasks(),
        spec.n_steps,
        model.name()
    );
    let clock = Instant::now();
    let chains = tasks(spec)
        .par_iter()
        .map(|t| {
            let ai = spec.algorithms.iter().position(|a| *a == t.algorithm).unwrap();
            let config = &configs[ai][t.gamma_index];
            let x0 = initial_point(&spec.starts[t.start_index], d, spec.master_seed, t.start_index, t.replicate);
            let seed = chain_seed(spec.master_seed, t.algorithm.id(), t.gamma_index, t.start_index, t.replicate);
            let result = run_chain(config, &x0, seed, &run)?;
            Ok(ChainRecord {
                algorithm: t.algorithm,
                gamma_index: t.gamma_index,
                gamma: spec.step_sizes[t.gamma_index],
                start_index: t.start_index,
                start: labels[t.start_index].clone(),
                replicate: t.replicate,
                result,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    info!("chains finished in {:.2} s", clock.elapsed().as_secs_f64());

    let rows = summarise(spec, &model, &tracked, &chains);
    Ok(ExperimentOutput { rows, chains })
}

/// Same as [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentOutput> {
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::NumericalFailure(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_experiment(spec))
}

// `chains` is in task order, so each cell is a contiguous block of n_chains.
fn summarise(spec: &ExperimentSpec, model: &TargetModel, tracked: &[usize], chains: &[ChainRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for cell in chains.chunks(spec.n_chains) {
        let first = &cell[0];
        let n_excluded = cell.iter().filter(|c| c.result.excluded).count();
        let n_diverged = cell.iter().filter(|c| c.result.diverged).count();
        if n_diverged > 0 {
            warn!(
                "{} gamma={} start={}: {n_diverged}/{} chains diverged",
                first.algorithm,
                first.gamma,
                first.start,
                cell.len()
            );
        }
        for &coordinate in tracked {
            for order in MOMENT_ORDERS {
                let reference = model.reference_moment(coordinate, order).map(|m| m.value);
                let included: Vec<f64> = cell
                    .iter()
                    .filter(|c| !c.result.excluded)
                    .filter_map(|c| c.result.estimate(coordinate).and_then(|e| e.moment(order)))
                    .collect();
                rows.push(SummaryRow {
                    algorithm: first.algorithm,
                    gamma: first.gamma,
                    start: first.start.clone(),
                    coordinate,
                    moment_order: order,
                    reference,
                    summary: error_summary(&included, n_excluded, reference.unwrap_or(0.0)),
                    n_excluded,
                    n_diverged,
                });
            }
        }
    }
    rows
}

/// Evaluates the closeness and dissipativity checkers for every drift used by
/// the spec at every step size.
pub fn run_checks(spec: &ExperimentSpec) -> Result<Diagnostics> {
    spec.validate()?;
    let model = spec.model.build()?;
    let d = model.dimension();
    let mut kinds: Vec<DriftKind> = spec.algorithms.iter().map(|a| a.drift_kind()).collect();
    kinds.sort_by_key(|k| k.as_str());
    kinds.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.master_seed, DOMAIN_CHECK, &[u64::MAX]));
    let points: Vec<Vec<f64>> = (0..spec.checks.closeness_points)
        .map(|i| {
            let r = spec.checks.radii[i % spec.checks.radii.len()];
            let mut x = vec![0.0; d];
            crate::drift::sample_sphere(&mut rng, r, &mut x);
            x
        })
        .collect();

    let mut dissipativity = Vec::new();
    let mut closeness = Vec::new();
    for (ki, &kind) in kinds.iter().enumerate() {
        let drift = DriftSpec::new(kind, model.clone())?;
        for (gi, &gamma) in spec.step_sizes.iter().enumerate() {
            let seed = derive_seed(spec.master_seed, DOMAIN_CHECK, &[ki as u64, gi as u64]);
            dissipativity.push(check_dissipativity(&drift, gamma, &spec.checks.radii, spec.checks.directions, seed)?);
            if kind != DriftKind::Raw {
                closeness.push(ClosenessReport {
                    drift: kind,
                    gamma,
                    points: points.len(),
                    worst_ratio: check_closeness(&drift, gamma, &points)?,
                });
            }
        }
    }
    Ok(Diagnostics {
        dissipativity,
        closeness,
    })
}

/// Reference values relevant to the spec's tracked coordinates.
pub fn oracles(spec: &ExperimentSpec) -> Result<Oracles> {
    let model = spec.model.build()?;
    let tracked = spec.tracked();
    let reference_moments: Vec<ReferenceMoment> = model
        .reference_moments()
        .iter()
        .filter(|m| tracked.contains(&m.coordinate))
        .copied()
        .collect();
    let mut ula = Vec::new();
    if model.family() == ModelFamily::Gaussian {
        for &coordinate in &tracked {
            if let Some(sigma2) = model.reference_moment(coordinate, 2) {
                for &gamma in &spec.step_sizes {
                    ula.push(UlaVarianceOracle {
                        coordinate,
                        gamma,
                        variance: ula_gaussian_stationary_variance(sigma2.value, gamma).ok(),
                    });
                }
            }
        }
    }
    Ok(Oracles {
        model: model.name().to_string(),
        dimension: model.dimension(),
        reference_moments,
        ula_stationary_variance: ula,
    })
}
