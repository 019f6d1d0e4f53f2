use serde::{Deserialize, Serialize};

/// Streaming first and second moments of a scalar sequence (Welford form).
///
/// Keeps the running mean and the centred sum of squares `m2`; the mean of
/// squares is recovered as `m2 / n + mean²`, which is never below `mean²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two accumulators as if their sequences had been concatenated.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Empirical mean of `x²`.
    pub fn mean_sq(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.m2 / self.count as f64 + self.mean * self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.m2 / (self.count - 1) as f64
    }
}

/// Non-overlapping batch means for Monte Carlo standard errors of `x` and `x²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMeans {
    batch_len: u64,
    in_batch: u64,
    sum: f64,
    sum_sq: f64,
    first: MomentAccumulator,
    second: MomentAccumulator,
}

impl BatchMeans {
    pub fn new(batch_len: u64) -> Self {
        Self {
            batch_len: batch_len.max(1),
            in_batch: 0,
            sum: 0.0,
            sum_sq: 0.0,
            first: MomentAccumulator::new(),
            second: MomentAccumulator::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.in_batch += 1;
        if self.in_batch == self.batch_len {
            let n = self.batch_len as f64;
            self.first.push(self.sum / n);
            self.second.push(self.sum_sq / n);
            self.in_batch = 0;
            self.sum = 0.0;
            self.sum_sq = 0.0;
        }
    }

    pub fn batches(&self) -> u64 {
        self.first.count()
    }

    /// Standard error of the mean of `x`; needs two complete batches.
    pub fn mcse_first(&self) -> Option<f64> {
        mcse(&self.first)
    }

    /// Standard error of the mean of `x²`; needs two complete batches.
    pub fn mcse_second(&self) -> Option<f64> {
        mcse(&self.second)
    }
}

fn mcse(acc: &MomentAccumulator) -> Option<f64> {
    (acc.count() >= 2).then(|| (acc.sample_variance() / acc.count() as f64).sqrt())
}

/// Moments plus batch-means error estimates for one tracked coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamingMoments {
    pub moments: MomentAccumulator,
    pub batches: BatchMeans,
}

impl StreamingMoments {
    pub fn new(batch_len: u64) -> Self {
        Self {
            moments: MomentAccumulator::new(),
            batches: BatchMeans::new(batch_len),
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.moments.push(x);
        self.batches.push(x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn simple_sequence() {
        let mut acc = MomentAccumulator::new();
        for x in [1.0, 2.0, 3.0, 4.0] {
            acc.push(x);
        }
        assert_eq!(acc.count(), 4);
        assert!((acc.mean() - 2.5).abs() < 1e-15);
        assert!((acc.mean_sq() - 7.5).abs() < 1e-14);
        assert!((acc.sample_variance() - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn empty_accumulator() {
        let acc = MomentAccumulator::new();
        assert_eq!(acc.mean_sq(), 0.0);
        assert_eq!(acc.sample_variance(), 0.0);
        let mut other = MomentAccumulator::new();
        other.merge(&acc);
        assert_eq!(other, acc);
    }

    #[test]
    fn batch_means_on_iid_constant_batches() {
        let mut b = BatchMeans::new(2);
        for x in [1.0, 1.0, 3.0, 3.0, 5.0] {
            b.push(x);
        }
        assert_eq!(b.batches(), 2);
        // batch means 1 and 3: sample var 2, se = sqrt(2/2) = 1
        assert!((b.mcse_first().unwrap() - 1.0).abs() < 1e-15);
        assert!(BatchMeans::new(10).mcse_first().is_none());
    }

    proptest! {
        #[test]
        fn merge_equals_concatenation(
            a in prop::collection::vec(-1e3f64..1e3, 0..50),
            b in prop::collection::vec(-1e3f64..1e3, 0..50),
        ) {
            let mut left = MomentAccumulator::new();
            a.iter().for_each(|&x| left.push(x));
            let mut right = MomentAccumulator::new();
            b.iter().for_each(|&x| right.push(x));
            let mut all = MomentAccumulator::new();
            a.iter().chain(&b).for_each(|&x| all.push(x));
            let mut merged = left;
            merged.merge(&right);
            prop_assert_eq!(merged.count(), all.count());
            prop_assert!(close(merged.mean(), all.mean(), 1e-12) || (merged.mean() - all.mean()).abs() < 1e-9);
            prop_assert!(close(merged.mean_sq(), all.mean_sq(), 1e-12));
            let mut swapped = right;
            swapped.merge(&left);
            prop_assert!(close(swapped.mean_sq(), merged.mean_sq(), 1e-12));
        }

        #[test]
        fn mean_sq_dominates_mean_squared(xs in prop::collection::vec(-1e6f64..1e6, 1..100)) {
            let mut acc = MomentAccumulator::new();
            xs.iter().for_each(|&x| acc.push(x));
            prop_assert!(acc.mean_sq() >= acc.mean() * acc.mean() * (1.0 - 1e-12));
        }

        #[test]
        fn merge_is_associative(
            a in prop::collection::vec(-10f64..10.0, 1..20),
            b in prop::collection::vec(-10f64..10.0, 1..20),
            c in prop::collection::vec(-10f64..10.0, 1..20),
        ) {
            let acc = |v: &[f64]| { let mut m = MomentAccumulator::new(); v.iter().for_each(|&x| m.push(x)); m };
            let (ma, mb, mc) = (acc(&a), acc(&b), acc(&c));
            let mut left = ma; left.merge(&mb); left.merge(&mc);
            let mut bc = mb; bc.merge(&mc);
            let mut right = ma; right.merge(&bc);
            prop_assert!(close(left.mean_sq(), right.mean_sq(), 1e-12));
            prop_assert!((left.mean() - right.mean()).abs() <= 1e-12 * (1.0 + left.mean().abs()));
        }
    }
}
