//! Moment estimation, reference oracles, error summaries, rate regression and
//! the Lyapunov drift diagnostic.

mod lyapunov;
mod moments;
mod oracles;
pub mod quadrature;
mod regression;
mod summary;

pub use lyapunov::{lyapunov_drift_estimate, lyapunov_log, LyapunovDiagnostic, LyapunovPoint};
pub use moments::{BatchMeans, MomentAccumulator, StreamingMoments};
pub use oracles::{
    double_well_log_radial_density, radial_moment_ratio, reference_moment_double_well,
    ula_gaussian_stationary_variance, LOG_TAIL_CUTOFF,
};
pub use regression::{rate_regression, RateFit};
pub use summary::{error_summary, quantile_sorted, BoxStats, BoxplotSummary};
