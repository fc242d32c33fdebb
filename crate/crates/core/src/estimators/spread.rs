use super::{BatchClock, BatchSeries, Estimate, EstimatorError};
use crate::book::BookState;
use crate::sim::Observer;

/// Time-averaged spread from uniformly spaced snapshots.
#[derive(Debug, Clone)]
pub struct SpreadEstimator {
    clock: BatchClock,
    ticks: BatchSeries,
}

impl SpreadEstimator {
    pub fn new(batches: usize) -> Self {
        Self {
            clock: BatchClock::new(batches),
            ticks: BatchSeries::new(batches),
        }
    }

    pub fn push(&mut self, time: f64, spread_ticks: i64) {
        self.ticks.add(self.clock.index(time), spread_ticks as i128);
    }

    pub fn merge(&mut self, other: &Self) {
        self.ticks.append(&other.ticks);
    }

    pub fn samples(&self) -> u64 {
        self.ticks.count()
    }

    /// Mean spread in price units.
    pub fn estimate(&self, tick_size: f64) -> Result<Estimate, EstimatorError> {
        self.ticks.estimate(tick_size)
    }
}

impl Observer for SpreadEstimator {
    fn begin(&mut self, start: f64, duration: f64) {
        self.clock.begin(start, duration);
    }

    fn on_snapshot(&mut self, time: f64, book: &BookState) {
        self.push(time, book.spread_ticks());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_book_gives_the_exact_spread() {
        let book = BookState::from_levels(100, &[(5, 1)], &[(0, 1)]).unwrap();
        let mut est = SpreadEstimator::new(20);
        est.begin(0.0, 20.0);
        for k in 0..200 {
            est.on_snapshot(k as f64 * 0.1, &book);
        }
        let e = est.estimate(1e-4).unwrap();
        assert_eq!(e.value, 5.0 * 1e-4);
        assert_eq!(e.se, 0.0);
    }
}
