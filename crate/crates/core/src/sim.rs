//! Exact continuous-time (Gillespie) simulation of the book.

use crate::book::{init_book, BookError, BookState, EventKind, EventRecord, Side};
use crate::params::ModelParams;
use crate::seed::SeedSpec;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("a side of the book emptied at t = {time} after {events} events")]
    SideEmptied { time: f64, events: u64 },
    #[error(transparent)]
    Book(#[from] BookError),
}

/// An event drawn from the rate table, before it is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventDescriptor {
    Limit { side: Side, q: i64 },
    Cancel { side: Side, q: i64 },
    Market { side: Side },
}

impl EventDescriptor {
    /// The same event seen in the price-reflected book.
    pub fn mirrored(self) -> Self {
        match self {
            EventDescriptor::Limit { side, q } => EventDescriptor::Limit {
                side: side.opposite(),
                q: -q,
            },
            EventDescriptor::Cancel { side, q } => EventDescriptor::Cancel {
                side: side.opposite(),
                q: -q,
            },
            EventDescriptor::Market { side } => EventDescriptor::Market {
                side: side.opposite(),
            },
        }
    }
}

/// Draws the waiting time and the next event.
///
/// Channels are laid out as ask submission, bid submission, ask
/// cancellation, bid cancellation, buy market, sell market.
pub fn sample_event<R: Rng + ?Sized>(
    book: &BookState,
    params: &ModelParams,
    rng: &mut R,
) -> (f64, EventDescriptor) {
    let submit = params.level_rate() * book.cutoff() as f64;
    let n_ask = book.window_orders(Side::Ask);
    let n_bid = book.window_orders(Side::Bid);
    let cancel_ask = params.cancel_rate * n_ask as f64;
    let cancel_bid = params.cancel_rate * n_bid as f64;
    let market = params.market_rate;
    let total = 2.0 * submit + cancel_ask + cancel_bid + 2.0 * market;

    let e: f64 = Exp1.sample(rng);
    let wait = e / total;

    let mut u = rng.random::<f64>() * total;
    let rates = [submit, submit, cancel_ask, cancel_bid, market, market];
    let mut channel = rates.iter().rposition(|&r| r > 0.0).unwrap_or(0);
    for (i, &r) in rates.iter().enumerate() {
        if u < r {
            channel = i;
            break;
        }
        u -= r;
    }

    let cutoff = book.cutoff() as i64;
    let descriptor = match channel {
        0 => EventDescriptor::Limit {
            side: Side::Ask,
            q: rng.random_range(1..=cutoff),
        },
        1 => EventDescriptor::Limit {
            side: Side::Bid,
            q: -rng.random_range(1..=cutoff),
        },
        2 | 3 => {
            let (side, n) = if channel == 2 {
                (Side::Ask, n_ask)
            } else {
                (Side::Bid, n_bid)
            };
            let k = rng.random_range(0..n);
            let d = book.kth_window_order(side, k) - book.window_origin(side);
            EventDescriptor::Cancel {
                side,
                q: d * side.sign(),
            }
        }
        4 => EventDescriptor::Market { side: Side::Ask },
        _ => EventDescriptor::Market { side: Side::Bid },
    };
    (wait, descriptor)
}

/// Applies a descriptor at the current clock.
pub fn apply_event(book: &mut BookState, event: EventDescriptor) -> Result<EventRecord, BookError> {
    match event {
        EventDescriptor::Limit { side, q } => book.apply_limit_order(side, q),
        EventDescriptor::Cancel { side, q } => book.apply_removal(side, q, false),
        EventDescriptor::Market { side } => {
            let q = (book.best_key(side) - book.window_origin(side)) * side.sign();
            book.apply_removal(side, q, true)
        }
    }
}

/// Samples one event, advances the clock and applies it.
pub fn step<R: Rng + ?Sized>(
    book: &mut BookState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<EventRecord, BookError> {
    let (wait, event) = sample_event(book, params, rng);
    book.clock += wait;
    apply_event(book, event)
}

/// Receives measured events and equally spaced snapshots of a run.
pub trait Observer {
    /// Called once before the measurement window starts.
    fn begin(&mut self, _start: f64, _duration: f64) {}
    /// Called after every event applied inside the measurement window.
    fn on_event(&mut self, _record: &EventRecord, _book: &BookState) {}
    /// Called with the book as it stood at `time`.
    fn on_snapshot(&mut self, _time: f64, _book: &BookState) {}
}

impl Observer for () {}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn begin(&mut self, start: f64, duration: f64) {
        (**self).begin(start, duration)
    }
    fn on_event(&mut self, record: &EventRecord, book: &BookState) {
        (**self).on_event(record, book)
    }
    fn on_snapshot(&mut self, time: f64, book: &BookState) {
        (**self).on_snapshot(time, book)
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn begin(&mut self, start: f64, duration: f64) {
        self.0.begin(start, duration);
        self.1.begin(start, duration);
    }
    fn on_event(&mut self, record: &EventRecord, book: &BookState) {
        self.0.on_event(record, book);
        self.1.on_event(record, book);
    }
    fn on_snapshot(&mut self, time: f64, book: &BookState) {
        self.0.on_snapshot(time, book);
        self.1.on_snapshot(time, book);
    }
}

/// Timing of a run. Observers only see the interval
/// `[warmup, warmup + measure)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub warmup_time: f64,
    pub measure_time: f64,
    pub snapshot_interval: f64,
}

impl RunConfig {
    /// Warm-up of `max(50/v, 50/μ)` and snapshots every `1/(v+μ)`.
    pub fn for_params(params: &ModelParams, measure_time: f64) -> Self {
        let mut warmup = 50.0 / params.cancel_rate;
        if params.market_rate > 0.0 {
            warmup = warmup.max(50.0 / params.market_rate);
        }
        Self {
            warmup_time: warmup,
            measure_time,
            snapshot_interval: 1.0 / params.removal_rate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunSummary {
    pub events_total: u64,
    pub events_measured: u64,
    pub snapshots: u64,
    pub end_time: f64,
}

/// Runs one seeded realization from the initial book.
pub fn run<O: Observer>(
    params: &ModelParams,
    seed: SeedSpec,
    config: &RunConfig,
    observer: &mut O,
) -> Result<(RunSummary, BookState), SimError> {
    let mut rng = seed.rng();
    let mut book = init_book(params, &mut rng);
    let summary = run_from(&mut book, params, &mut rng, config, observer)?;
    Ok((summary, book))
}

/// Runs from an existing book, continuing its clock.
pub fn run_from<O: Observer, R: Rng + ?Sized>(
    book: &mut BookState,
    params: &ModelParams,
    rng: &mut R,
    config: &RunConfig,
    observer: &mut O,
) -> Result<RunSummary, SimError> {
    let start = book.clock + config.warmup_time;
    let end = start + config.measure_time;
    let interval = config.snapshot_interval;
    observer.begin(start, config.measure_time);

    let mut summary = RunSummary::default();
    let mut next_snap_index = 0u64;
    let mut next_snap = start;
    loop {
        let (wait, event) = sample_event(book, params, rng);
        let t = book.clock + wait;
        while next_snap < end && next_snap < t && interval > 0.0 {
            observer.on_snapshot(next_snap, book);
            summary.snapshots += 1;
            next_snap_index += 1;
            next_snap = start + next_snap_index as f64 * interval;
        }
        if t >= end {
            book.clock = end;
            break;
        }
        book.clock = t;
        let record = match apply_event(book, event) {
            Ok(r) => r,
            Err(BookError::SideWouldEmpty(_)) => {
                return Err(SimError::SideEmptied {
                    time: t,
                    events: summary.events_total,
                })
            }
            Err(e) => return Err(e.into()),
        };
        summary.events_total += 1;
        if t >= start {
            summary.events_measured += 1;
            observer.on_event(&record, book);
        }
    }
    summary.end_time = book.clock;
    Ok(summary)
}

pub const EVENT_LOG_HEADER: &str =
    "time,kind,level,rel_level,doubled_mid_before,doubled_mid_after";

/// Streams measured events as CSV.
pub struct EventLog<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> EventLog<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{EVENT_LOG_HEADER}")?;
        Ok(Self { out, error: None })
    }

    /// Flushes and returns the writer, or the first write error.
    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> Observer for EventLog<W> {
    fn on_event(&mut self, r: &EventRecord, _book: &BookState) {
        if self.error.is_some() {
            return;
        }
        if let Err(e) = writeln!(
            self.out,
            "{:.16e},{},{},{},{},{}",
            r.time,
            r.kind.name(),
            r.level,
            r.rel_level,
            r.doubled_mid_before,
            r.doubled_mid_after
        ) {
            self.error = Some(e);
        }
    }
}

/// One parsed event-log row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventLogRow {
    pub time: f64,
    pub kind: EventKind,
    pub level: i64,
    pub rel_level: i64,
    pub doubled_mid_before: i64,
    pub doubled_mid_after: i64,
}

pub fn parse_event_log_row(line: &str) -> Option<EventLogRow> {
    let mut f = line.split(',');
    let row = EventLogRow {
        time: f.next()?.parse().ok()?,
        kind: EventKind::parse(f.next()?)?,
        level: f.next()?.parse().ok()?,
        rel_level: f.next()?.parse().ok()?,
        doubled_mid_before: f.next()?.parse().ok()?,
        doubled_mid_after: f.next()?.parse().ok()?,
    };
    f.next().is_none().then_some(row)
}
