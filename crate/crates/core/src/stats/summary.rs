use serde::{Deserialize, Serialize};

/// Five-number summary plus mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Error statistics across replicates.
///
/// `stats` is `None` when every replicate was excluded, which renders as a
/// missing box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub n_included: usize,
    pub n_excluded: usize,
    pub stats: Option<BoxStats>,
}

impl BoxplotSummary {
    pub fn is_empty(&self) -> bool {
        self.stats.is_none()
    }
}

/// Quantile of sorted data by linear interpolation between order statistics:
/// position `h = (n − 1) p`, value `x[⌊h⌋] + (h − ⌊h⌋)(x[⌊h⌋+1] − x[⌊h⌋])`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summarises `value − reference` over the included replicates.
pub fn error_summary(included: &[f64], n_excluded: usize, reference: f64) -> BoxplotSummary {
    if included.is_empty() {
        return BoxplotSummary {
            n_included: 0,
            n_excluded,
            stats: None,
        };
    }
    let mut errors: Vec<f64> = included.iter().map(|v| v - reference).collect();
    errors.sort_by(f64::total_cmp);
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    BoxplotSummary {
        n_included: errors.len(),
        n_excluded,
        stats: Some(BoxStats {
            min: errors[0],
            q1: quantile_sorted(&errors, 0.25),
            median: quantile_sorted(&errors, 0.5),
            q3: quantile_sorted(&errors, 0.75),
            max: errors[errors.len() - 1],
            mean,
        }),
    }
}
