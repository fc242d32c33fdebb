//! Streaming estimators of spread, impact, diffusion, density and gaps.
//!
//! Every estimator splits the measurement window into equal time batches and
//! keeps integer sums per batch, so merging states from independent runs
//! (concatenating their batch lists) is exact. Standard errors are batch
//! means: the spread of per-batch means divided by the square root of the
//! number of non-empty batches.

mod density;
mod diffusion;
mod gaps;
mod impact;
mod report;
mod spread;

pub use density::{DensityEstimator, DensityProfile};
pub use diffusion::{linear_fit, DiffusionEstimator, DiffusionFit};
pub use gaps::GapEstimator;
pub use impact::ImpactEstimator;
pub use report::{MetricsReport, SampleCounts, METRICS_CSV_HEADER};
pub use spread::SpreadEstimator;

use crate::book::{BookState, EventRecord};
use crate::params::ModelParams;
use crate::sim::Observer;
use thiserror::Error;

/// Number of time batches per run.
pub const DEFAULT_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("need at least {needed} non-empty batches, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("mean squared displacement is not linear over the fit range (R^2 = {r2:.4})")]
    NonlinearMSD { r2: f64 },
    #[error("cannot merge estimators with different settings")]
    ConfigMismatch,
}

/// A point estimate with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Maps event times to batch indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BatchClock {
    start: f64,
    width: f64,
    n: usize,
}

impl BatchClock {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            start: 0.0,
            width: 0.0,
            n,
        }
    }

    pub(crate) fn begin(&mut self, start: f64, duration: f64) {
        self.start = start;
        self.width = duration / self.n as f64;
    }

    pub(crate) fn index(&self, t: f64) -> usize {
        if self.width <= 0.0 {
            return 0;
        }
        let i = ((t - self.start) / self.width).floor();
        (i.max(0.0) as usize).min(self.n - 1)
    }
}

/// Integer sums and sample counts per batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BatchSeries {
    sums: Vec<i128>,
    counts: Vec<u64>,
}

impl BatchSeries {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            sums: vec![0; n],
            counts: vec![0; n],
        }
    }

    pub(crate) fn add(&mut self, batch: usize, value: i128) {
        self.sums[batch] += value;
        self.counts[batch] += 1;
    }

    pub(crate) fn append(&mut self, other: &Self) {
        self.sums.extend_from_slice(&other.sums);
        self.counts.extend_from_slice(&other.counts);
    }

    pub(crate) fn count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub(crate) fn sum(&self) -> i128 {
        self.sums.iter().sum()
    }

    pub(crate) fn batch(&self, b: usize) -> (i128, u64) {
        (self.sums[b], self.counts[b])
    }

    pub(crate) fn len(&self) -> usize {
        self.sums.len()
    }

    /// Grand mean and batch-means standard error, both multiplied by `scale`.
    pub(crate) fn estimate(&self, scale: f64) -> Result<Estimate, EstimatorError> {
        let means: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(&s, &c)| s as f64 / c as f64)
            .collect();
        if means.len() < DEFAULT_BATCHES {
            return Err(EstimatorError::InsufficientSamples {
                needed: DEFAULT_BATCHES,
                got: means.len(),
            });
        }
        let value = self.sum() as f64 / self.count() as f64;
        Ok(Estimate {
            value: value * scale,
            se: batch_se(&means) * scale.abs(),
        })
    }
}

/// Standard error of the mean of `means` treated as independent draws.
pub(crate) fn batch_se(means: &[f64]) -> f64 {
    let n = means.len() as f64;
    let m = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Settings shared by the estimator bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Time between book snapshots.
    pub snapshot_interval: f64,
    /// MSD fit range as multiples of the snapshot interval.
    pub msd_lag_min: usize,
    pub msd_lag_max: usize,
    /// Number of impact lags, counted in market orders.
    pub l_max: usize,
    /// Highest gap index.
    pub gap_k: usize,
    pub density_ticks_per_bin: u64,
    pub density_bins: usize,
    pub batches: usize,
}

impl EstimatorConfig {
    /// Snapshots every `1/(v+μ)`, MSD fit over `[10, 100]/(v+μ)`, 20 impact
    /// lags, 30 gaps and one-tick density bins over half the window.
    pub fn for_params(params: &ModelParams) -> Self {
        Self {
            snapshot_interval: 1.0 / params.removal_rate(),
            msd_lag_min: 10,
            msd_lag_max: 100,
            l_max: 20,
            gap_k: 30,
            density_ticks_per_bin: 1,
            density_bins: (params.cutoff / 2).clamp(1, 5000) as usize,
            batches: DEFAULT_BATCHES,
        }
    }
}

/// All five estimators driven by one run.
#[derive(Debug, Clone)]
pub struct Estimators {
    pub config: EstimatorConfig,
    pub spread: SpreadEstimator,
    pub impact: ImpactEstimator,
    pub diffusion: DiffusionEstimator,
    pub density: DensityEstimator,
    pub gaps: GapEstimator,
    events: u64,
    measure_time: f64,
}

impl Estimators {
    pub fn new(config: EstimatorConfig) -> Self {
        let n = config.batches;
        Self {
            spread: SpreadEstimator::new(n),
            impact: ImpactEstimator::new(config.l_max, n),
            diffusion: DiffusionEstimator::new(
                config.snapshot_interval,
                config.msd_lag_min,
                config.msd_lag_max,
                n,
            ),
            density: DensityEstimator::new(config.density_ticks_per_bin, config.density_bins, n),
            gaps: GapEstimator::new(config.gap_k, n),
            config,
            events: 0,
            measure_time: 0.0,
        }
    }

    /// Folds in the state of an independent run with the same settings.
    pub fn merge(&mut self, other: &Self) -> Result<(), EstimatorError> {
        if self.config != other.config {
            return Err(EstimatorError::ConfigMismatch);
        }
        self.spread.merge(&other.spread);
        self.impact.merge(&other.impact)?;
        self.diffusion.merge(&other.diffusion)?;
        self.density.merge(&other.density)?;
        self.gaps.merge(&other.gaps)?;
        self.events += other.events;
        self.measure_time += other.measure_time;
        Ok(())
    }

    pub fn report(&self, params: &ModelParams) -> MetricsReport {
        MetricsReport::from_estimators(self, params)
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn measure_time(&self) -> f64 {
        self.measure_time
    }
}

impl Observer for Estimators {
    fn begin(&mut self, start: f64, duration: f64) {
        self.measure_time += duration;
        self.spread.begin(start, duration);
        self.impact.begin(start, duration);
        self.diffusion.begin(start, duration);
        self.density.begin(start, duration);
        self.gaps.begin(start, duration);
    }

    fn on_event(&mut self, record: &EventRecord, book: &BookState) {
        self.events += 1;
        self.impact.on_event(record, book);
    }

    fn on_snapshot(&mut self, time: f64, book: &BookState) {
        self.spread.on_snapshot(time, book);
        self.diffusion.on_snapshot(time, book);
        self.density.on_snapshot(time, book);
        self.gaps.on_snapshot(time, book);
    }
}
