//! Tamed Langevin samplers and a benchmark harness.
//!
//! The crate is organised bottom-up:
//!
//! - [`potentials`]: target potentials `U` with analytic gradients (Gaussian,
//!   ill-conditioned Gaussian, double well, Ginzburg–Landau lattice).
//! - [`drift`]: step-size indexed drift families (raw gradient, global and
//!   coordinate-wise taming, partial taming of the double well) and numerical
//!   checkers for the closeness and dissipativity conditions.
//! - [`kernels`]: one-step transition kernels (unadjusted, Metropolis-adjusted
//!   Langevin, random walk Metropolis) and the chain runner with divergence and
//!   acceptance guards.
//! - [`stats`]: streaming moments, reference-value oracles, boxplot summaries,
//!   rate regression and the Lyapunov drift diagnostic.
//! - [`harness`]: experiment specification, parallel execution, CSV/JSON output
//!   and the `tula` command line.
//!
//! ```
//! use tamed_langevin::drift::{DriftKind, DriftSpec};
//! use tamed_langevin::kernels::{run_chain, Adjustment, KernelConfig, RunSpec};
//! use tamed_langevin::potentials::make_double_well;
//!
//! let model = make_double_well(10).unwrap();
//! let drift = DriftSpec::new(DriftKind::TamedCoordinatewise, model).unwrap();
//! let config = KernelConfig::new(drift, 0.01, Adjustment::None).unwrap();
//! let result = run_chain(&config, &[0.0; 10], 7, &RunSpec::new(1_000, vec![0])).unwrap();
//! assert!(!result.diverged);
//! ```

pub mod drift;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod potentials;
pub mod stats;

pub use error::{Error, Result};

pub(crate) fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}
