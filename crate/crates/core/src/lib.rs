//! Simulator and mean-field toolkit for the Santa Fe zero-intelligence
//! limit-order-book model.
//!
//! * [`book`] and [`sim`]: exact event-driven dynamics on a tick grid.
//! * [`estimators`]: streaming spread, impact, diffusion, density and gap
//!   statistics with batch-means error bars.
//! * [`theory`]: closed-form mean-field results, the steady Boltzmann
//!   equation and the discrete gap recursion.

pub mod book;
pub mod estimators;
pub mod fenwick;
pub mod format;
pub mod params;
pub mod seed;
pub mod sim;
pub mod theory;

pub use book::{init_book, BookError, BookState, EventKind, EventRecord, RelativeView, Side};
pub use params::{ModelParams, ParamError, RegimeReport};
pub use seed::{derive_stream_seed, SeedSpec, StreamRng};
pub use sim::{
    apply_event, run, run_from, sample_event, step, EventDescriptor, EventLog, Observer,
    RunConfig, RunSummary, SimError,
};
pub use estimators::{
    DensityProfile, Estimate, EstimatorConfig, EstimatorError, Estimators, MetricsReport,
};
pub use theory::{TheoryError, TheoryMetrics, TheoryProfile};
