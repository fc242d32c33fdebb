use super::{BatchClock, BatchSeries, Estimate, EstimatorError};
use crate::book::{BookState, Side};
use crate::sim::Observer;

/// Mean gaps between consecutive occupied ask levels, in ticks.
///
/// `g_0` is the spread and `g_k` the distance from the `(k-1)`-th to the
/// `k`-th occupied ask level above the best ask. Snapshots with fewer than
/// `K + 1` occupied levels inside the ask window are skipped and counted.
#[derive(Debug, Clone)]
pub struct GapEstimator {
    clock: BatchClock,
    k_max: usize,
    gaps: Vec<BatchSeries>,
    skipped: u64,
    scratch: Vec<i64>,
}

impl GapEstimator {
    pub fn new(k_max: usize, batches: usize) -> Self {
        Self {
            clock: BatchClock::new(batches),
            k_max,
            gaps: vec![BatchSeries::new(batches); k_max + 1],
            skipped: 0,
            scratch: Vec::with_capacity(k_max + 1),
        }
    }

    pub fn merge(&mut self, other: &Self) -> Result<(), EstimatorError> {
        if self.k_max != other.k_max {
            return Err(EstimatorError::ConfigMismatch);
        }
        for (a, b) in self.gaps.iter_mut().zip(&other.gaps) {
            a.append(b);
        }
        self.skipped += other.skipped;
        Ok(())
    }

    pub fn used(&self) -> u64 {
        self.gaps[0].count()
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn skip_fraction(&self) -> f64 {
        let total = self.used() + self.skipped;
        if total == 0 {
            0.0
        } else {
            self.skipped as f64 / total as f64
        }
    }

    /// `⟨g_k⟩` for `k = 0..=K`; empty when no snapshot qualified.
    pub fn means(&self) -> Vec<f64> {
        if self.used() == 0 {
            return Vec::new();
        }
        self.gaps
            .iter()
            .map(|s| s.sum() as f64 / s.count() as f64)
            .collect()
    }

    pub fn estimate(&self, k: usize) -> Result<Estimate, EstimatorError> {
        self.gaps[k].estimate(1.0)
    }
}

impl Observer for GapEstimator {
    fn begin(&mut self, start: f64, duration: f64) {
        self.clock.begin(start, duration);
    }

    fn on_snapshot(&mut self, time: f64, book: &BookState) {
        let max_key = book.window_origin(Side::Ask) + book.cutoff() as i64;
        book.occupied_keys(Side::Ask, self.k_max + 1, max_key, &mut self.scratch);
        if self.scratch.len() < self.k_max + 1 {
            self.skipped += 1;
            return;
        }
        let b = self.clock.index(time);
        let mut prev = book.best_bid_level();
        for (k, &level) in self.scratch.iter().enumerate() {
            self.gaps[k].add(b, (level - prev) as i128);
            prev = level;
        }
    }
}
