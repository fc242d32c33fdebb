use super::{batch_se, BatchClock, EstimatorError};
use crate::book::{BookState, Side};
use crate::sim::Observer;

/// Order density against distance from the opposite best.
///
/// Bin `k` covers relative levels `k·t + 1 ..= (k+1)·t` for `t` ticks per
/// bin, i.e. the price interval `(k·h, (k+1)·h]` with `h = t·Δ`; its value is
/// reported at the centre `(k + ½)·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    /// Bin width in price units.
    pub grid_step: f64,
    /// Orders per unit price.
    pub values: Vec<f64>,
    /// Batch-means standard errors (empty when too few batches).
    pub se: Vec<f64>,
}

impl DensityProfile {
    pub fn r(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.grid_step
    }

    /// Mean over the last `fraction` of the bins.
    pub fn tail_mean(&self, fraction: f64) -> Option<f64> {
        let n = self.values.len();
        let m = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
        (n > 0).then(|| self.values[n - m..].iter().sum::<f64>() / m as f64)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Time-averaged histogram of both sides of the book, pooled by mirror
/// symmetry: asks by distance above the best bid, bids by distance below the
/// best ask.
#[derive(Debug, Clone)]
pub struct DensityEstimator {
    clock: BatchClock,
    ticks_per_bin: u64,
    bins: usize,
    /// `counts[b * bins + k]`: summed bin counts of batch `b`.
    counts: Vec<u64>,
    snapshots: Vec<u64>,
}

impl DensityEstimator {
    pub fn new(ticks_per_bin: u64, bins: usize, batches: usize) -> Self {
        assert!(ticks_per_bin >= 1);
        Self {
            clock: BatchClock::new(batches),
            ticks_per_bin,
            bins,
            counts: vec![0; batches * bins],
            snapshots: vec![0; batches],
        }
    }

    pub fn merge(&mut self, other: &Self) -> Result<(), EstimatorError> {
        if (self.ticks_per_bin, self.bins) != (other.ticks_per_bin, other.bins) {
            return Err(EstimatorError::ConfigMismatch);
        }
        self.counts.extend_from_slice(&other.counts);
        self.snapshots.extend_from_slice(&other.snapshots);
        Ok(())
    }

    pub fn snapshots(&self) -> u64 {
        self.snapshots.iter().sum()
    }

    pub fn profile(&self, tick_size: f64) -> DensityProfile {
        let grid_step = self.ticks_per_bin as f64 * tick_size;
        let total = self.snapshots();
        if total == 0 || self.bins == 0 {
            return DensityProfile {
                grid_step,
                values: Vec::new(),
                se: Vec::new(),
            };
        }
        let norm = |count: u64, snaps: u64| count as f64 / (2.0 * snaps as f64 * grid_step);
        let values = (0..self.bins)
            .map(|k| {
                let c: u64 = self.counts.iter().skip(k).step_by(self.bins).sum();
                norm(c, total)
            })
            .collect();
        let live: Vec<usize> = (0..self.snapshots.len())
            .filter(|&b| self.snapshots[b] > 0)
            .collect();
        let se = if live.len() >= super::DEFAULT_BATCHES {
            (0..self.bins)
                .map(|k| {
                    let means: Vec<f64> = live
                        .iter()
                        .map(|&b| norm(self.counts[b * self.bins + k], self.snapshots[b]))
                        .collect();
                    batch_se(&means)
                })
                .collect()
        } else {
            Vec::new()
        };
        DensityProfile {
            grid_step,
            values,
            se,
        }
    }
}

impl Observer for DensityEstimator {
    fn begin(&mut self, start: f64, duration: f64) {
        self.clock.begin(start, duration);
    }

    fn on_snapshot(&mut self, time: f64, book: &BookState) {
        let b = self.clock.index(time);
        self.snapshots[b] += 1;
        let row = &mut self.counts[b * self.bins..(b + 1) * self.bins];
        let max_d = (self.bins as u64 * self.ticks_per_bin) as i64;
        for side in [Side::Ask, Side::Bid] {
            let (first, slice) = book.distance_slice(side, max_d);
            if self.ticks_per_bin == 1 {
                let off = (first - 1) as usize;
                for (dst, &c) in row[off..off + slice.len()].iter_mut().zip(slice) {
                    *dst += u64::from(c);
                }
            } else {
                for (j, &c) in slice.iter().enumerate() {
                    let d = first as u64 + j as u64;
                    row[((d - 1) / self.ticks_per_bin) as usize] += u64::from(c);
                }
            }
        }
    }
}
