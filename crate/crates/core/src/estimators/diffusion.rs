use super::{batch_se, BatchClock, BatchSeries, EstimatorError, DEFAULT_BATCHES};
use crate::book::BookState;
use crate::sim::Observer;
use std::collections::VecDeque;

/// Minimum R^2 of the MSD fit for the diffusive regime.
pub const MIN_LINEAR_R2: f64 = 0.95;

/// Least-squares fit of the midprice MSD against the time lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionFit {
    /// Slope of MSD(τ), in price² per unit time.
    pub d: f64,
    pub se: f64,
    pub intercept: f64,
    pub r2: f64,
    pub linear: bool,
}

/// Streaming mean squared displacement of the midprice over a fixed range
/// of lags, from snapshots taken at a uniform time interval.
#[derive(Debug, Clone)]
pub struct DiffusionEstimator {
    clock: BatchClock,
    interval: f64,
    lag_min: usize,
    lag_max: usize,
    history: VecDeque<i64>,
    /// Squared changes of twice the midprice per lag, in ticks².
    sq: Vec<BatchSeries>,
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, r2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let b = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (b, my - b * mx, r2)
}

impl DiffusionEstimator {
    /// Lags are given in snapshot intervals.
    pub fn new(interval: f64, lag_min: usize, lag_max: usize, batches: usize) -> Self {
        assert!(1 <= lag_min && lag_min < lag_max, "need 1 <= lag_min < lag_max");
        Self {
            clock: BatchClock::new(batches),
            interval,
            lag_min,
            lag_max,
            history: VecDeque::with_capacity(lag_max + 1),
            sq: vec![BatchSeries::new(batches); lag_max - lag_min + 1],
        }
    }

    /// Feeds one snapshot of twice the midprice, in ticks.
    pub fn push(&mut self, time: f64, doubled_mid: i64) {
        let batch = self.clock.index(time);
        let n = self.history.len();
        for k in self.lag_min..=self.lag_max.min(n) {
            let d = (doubled_mid - self.history[n - k]) as i128;
            self.sq[k - self.lag_min].add(batch, d * d);
        }
        self.history.push_back(doubled_mid);
        if self.history.len() > self.lag_max {
            self.history.pop_front();
        }
    }

    pub fn merge(&mut self, other: &Self) -> Result<(), EstimatorError> {
        if (self.interval, self.lag_min, self.lag_max) != (other.interval, other.lag_min, other.lag_max) {
            return Err(EstimatorError::ConfigMismatch);
        }
        for (a, b) in self.sq.iter_mut().zip(&other.sq) {
            a.append(b);
        }
        Ok(())
    }

    /// Displacement pairs at the shortest fitted lag.
    pub fn pairs(&self) -> u64 {
        self.sq[0].count()
    }

    fn taus(&self) -> Vec<f64> {
        (self.lag_min..=self.lag_max)
            .map(|k| k as f64 * self.interval)
            .collect()
    }

    /// MSD per fitted lag in price², pooled over all batches.
    pub fn msd(&self, tick_size: f64) -> Vec<(f64, f64)> {
        let scale = 0.25 * tick_size * tick_size;
        self.taus()
            .into_iter()
            .zip(&self.sq)
            .filter(|(_, s)| s.count() > 0)
            .map(|(t, s)| (t, s.sum() as f64 / s.count() as f64 * scale))
            .collect()
    }

    /// Slope fit over the lag range with batch-means standard error. The fit
    /// is returned even when the MSD is not linear; see [`Self::estimate`].
    pub fn fit(&self, tick_size: f64) -> Result<DiffusionFit, EstimatorError> {
        let scale = 0.25 * tick_size * tick_size;
        let taus = self.taus();
        let mut per_batch = Vec::new();
        for b in 0..self.sq[0].len() {
            let ys: Option<Vec<f64>> = self
                .sq
                .iter()
                .map(|s| {
                    let (sum, c) = s.batch(b);
                    (c > 0).then(|| sum as f64 / c as f64 * scale)
                })
                .collect();
            if let Some(ys) = ys {
                per_batch.push(linear_fit(&taus, &ys).0);
            }
        }
        if per_batch.len() < DEFAULT_BATCHES {
            return Err(EstimatorError::InsufficientSamples {
                needed: DEFAULT_BATCHES,
                got: per_batch.len(),
            });
        }
        let (ts, ys): (Vec<f64>, Vec<f64>) = self.msd(tick_size).into_iter().unzip();
        let (d, intercept, r2) = linear_fit(&ts, &ys);
        Ok(DiffusionFit {
            d,
            se: batch_se(&per_batch),
            intercept,
            r2,
            linear: r2 >= MIN_LINEAR_R2,
        })
    }

    /// Like [`Self::fit`], but rejects fits with `R^2 < 0.95`.
    pub fn estimate(&self, tick_size: f64) -> Result<DiffusionFit, EstimatorError> {
        let fit = self.fit(tick_size)?;
        if !fit.linear {
            return Err(EstimatorError::NonlinearMSD { r2: fit.r2 });
        }
        Ok(fit)
    }
}

impl Observer for DiffusionEstimator {
    fn begin(&mut self, start: f64, duration: f64) {
        self.clock.begin(start, duration);
        self.history.clear();
        if duration > 0.0 && duration / self.interval < 1e4 {
            log::warn!(
                "diffusion estimate from {:.0} snapshots; at least 1e4 recommended",
                duration / self.interval
            );
        }
    }

    fn on_snapshot(&mut self, time: f64, book: &BookState) {
        self.push(time, book.doubled_mid());
    }
}
