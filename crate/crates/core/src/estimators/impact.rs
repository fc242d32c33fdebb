use super::{BatchClock, BatchSeries, Estimate, EstimatorError};
use crate::book::{BookState, EventRecord};
use crate::sim::Observer;
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
struct Pending {
    sign: i64,
    doubled_mid_before: i64,
    batch: usize,
    lag: usize,
}

/// Signed midprice response to market orders.
///
/// Lag `l` is counted in market orders: `dm(1)` is the move caused by the
/// order itself and `dm(l)` is measured right after the `(l-1)`-th
/// subsequent market order. Orders whose lag window is still open when the
/// run ends contribute only to the lags already reached.
#[derive(Debug, Clone)]
pub struct ImpactEstimator {
    clock: BatchClock,
    l_max: usize,
    pending: VecDeque<Pending>,
    /// `lags[l - 1]` holds signed changes of twice the midprice, in ticks.
    lags: Vec<BatchSeries>,
    buys: BatchSeries,
    sells: BatchSeries,
}

impl ImpactEstimator {
    pub fn new(l_max: usize, batches: usize) -> Self {
        Self {
            clock: BatchClock::new(batches),
            l_max,
            pending: VecDeque::with_capacity(l_max + 1),
            lags: vec![BatchSeries::new(batches); l_max],
            buys: BatchSeries::new(batches),
            sells: BatchSeries::new(batches),
        }
    }

    /// Feeds one market order: `sign` is +1 for buys and -1 for sells.
    pub fn push_market(&mut self, time: f64, sign: i64, doubled_mid_before: i64, doubled_mid_after: i64) {
        if self.l_max == 0 {
            return;
        }
        let batch = self.clock.index(time);
        let first = sign * (doubled_mid_after - doubled_mid_before);
        if sign > 0 {
            self.buys.add(batch, first as i128);
        } else {
            self.sells.add(batch, first as i128);
        }
        self.pending.push_back(Pending {
            sign,
            doubled_mid_before,
            batch,
            lag: 0,
        });
        for p in self.pending.iter_mut() {
            p.lag += 1;
            let dm = p.sign * (doubled_mid_after - p.doubled_mid_before);
            self.lags[p.lag - 1].add(p.batch, dm as i128);
        }
        while self.pending.front().is_some_and(|p| p.lag >= self.l_max) {
            self.pending.pop_front();
        }
    }

    pub fn merge(&mut self, other: &Self) -> Result<(), EstimatorError> {
        if self.l_max != other.l_max {
            return Err(EstimatorError::ConfigMismatch);
        }
        for (a, b) in self.lags.iter_mut().zip(&other.lags) {
            a.append(b);
        }
        self.buys.append(&other.buys);
        self.sells.append(&other.sells);
        Ok(())
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn market_orders(&self) -> u64 {
        self.buys.count() + self.sells.count()
    }

    /// Mean of `ε·dm(l)` in price units, for `l = 1..=l_max`.
    pub fn lag(&self, l: usize, tick_size: f64) -> Result<Estimate, EstimatorError> {
        self.lags[l - 1].estimate(0.5 * tick_size)
    }

    /// Lag-one impact from buy orders only.
    pub fn buy(&self, tick_size: f64) -> Result<Estimate, EstimatorError> {
        self.buys.estimate(0.5 * tick_size)
    }

    /// Lag-one impact from sell orders only.
    pub fn sell(&self, tick_size: f64) -> Result<Estimate, EstimatorError> {
        self.sells.estimate(0.5 * tick_size)
    }

    /// Per-lag means; stops at the first lag without samples.
    pub fn lag_means(&self, tick_size: f64) -> Vec<f64> {
        self.lags
            .iter()
            .take_while(|s| s.count() > 0)
            .map(|s| s.sum() as f64 / s.count() as f64 * 0.5 * tick_size)
            .collect()
    }
}

impl Observer for ImpactEstimator {
    fn begin(&mut self, start: f64, duration: f64) {
        self.clock.begin(start, duration);
        self.pending.clear();
    }

    fn on_event(&mut self, r: &EventRecord, _book: &BookState) {
        if let Some(sign) = r.kind.market_sign() {
            self.push_market(r.time, sign, r.doubled_mid_before, r.doubled_mid_after);
        }
    }
}
