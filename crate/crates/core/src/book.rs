//! Order-book microstate and the transition rules for submissions,
//! cancellations and market orders.
//!
//! Both sides are stored in a *key* coordinate that increases away from the
//! spread: an ask at level `i` has key `i`, a bid at level `i` has key `-i`.
//! In key coordinates every side has the same shape: its best quote is the
//! smallest occupied key, and its active window is `(o, o + L]` where `o` is
//! the key of the opposite best quote mirrored onto this side. This keeps
//! the two sides' code paths identical and makes mirror symmetry exact.
//!
//! Midprices are tracked as `A + B` (twice the midprice, in ticks) so that
//! all state stays integral.

use crate::fenwick::Fenwick;
use crate::params::ModelParams;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Ask,
    Bid,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Ask => Side::Bid,
            Side::Bid => Side::Ask,
        }
    }

    /// Maps an absolute price level to this side's key, and back (the map is
    /// an involution).
    pub fn key(self, level: i64) -> i64 {
        match self {
            Side::Ask => level,
            Side::Bid => -level,
        }
    }

    /// +1 for asks, -1 for bids: the sign of relative levels on this side.
    pub fn sign(self) -> i64 {
        match self {
            Side::Ask => 1,
            Side::Bid => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookError {
    #[error("{0:?} side has no orders")]
    EmptySide(Side),
    #[error("book is crossed: best ask {ask} <= best bid {bid}")]
    Crossed { ask: i64, bid: i64 },
    #[error("relative level {q} outside the {side:?} window of width {cutoff}")]
    WindowViolation { side: Side, q: i64, cutoff: u64 },
    #[error("no {side:?} order at relative level {q}")]
    EmptyQueue { side: Side, q: i64 },
    #[error("market order must hit the best {side:?} at relative level {best}, got {q}")]
    NotAtBest { side: Side, q: i64, best: i64 },
    #[error("removing the last {0:?} order would empty the side")]
    SideWouldEmpty(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    AskLimit,
    BidLimit,
    AskCancel,
    BidCancel,
    BuyMarket,
    SellMarket,
}

impl EventKind {
    pub fn side(self) -> Side {
        match self {
            EventKind::AskLimit | EventKind::AskCancel | EventKind::BuyMarket => Side::Ask,
            EventKind::BidLimit | EventKind::BidCancel | EventKind::SellMarket => Side::Bid,
        }
    }

    pub fn is_market(self) -> bool {
        matches!(self, EventKind::BuyMarket | EventKind::SellMarket)
    }

    /// +1 for a buy market order, -1 for a sell market order.
    pub fn market_sign(self) -> Option<i64> {
        match self {
            EventKind::BuyMarket => Some(1),
            EventKind::SellMarket => Some(-1),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EventKind::AskLimit => "AskLimit",
            EventKind::BidLimit => "BidLimit",
            EventKind::AskCancel => "AskCancel",
            EventKind::BidCancel => "BidCancel",
            EventKind::BuyMarket => "BuyMarket",
            EventKind::SellMarket => "SellMarket",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "AskLimit" => EventKind::AskLimit,
            "BidLimit" => EventKind::BidLimit,
            "AskCancel" => EventKind::AskCancel,
            "BidCancel" => EventKind::BidCancel,
            "BuyMarket" => EventKind::BuyMarket,
            "SellMarket" => EventKind::SellMarket,
            _ => return None,
        })
    }

    fn limit(side: Side) -> Self {
        match side {
            Side::Ask => EventKind::AskLimit,
            Side::Bid => EventKind::BidLimit,
        }
    }

    fn removal(side: Side, is_market: bool) -> Self {
        match (side, is_market) {
            (Side::Ask, false) => EventKind::AskCancel,
            (Side::Bid, false) => EventKind::BidCancel,
            (Side::Ask, true) => EventKind::BuyMarket,
            (Side::Bid, true) => EventKind::SellMarket,
        }
    }
}

/// One realized event with the quotes around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    /// Absolute tick level acted on.
    pub level: i64,
    /// Level relative to the opposite best at action time (negative for bids).
    pub rel_level: i64,
    pub doubled_mid_before: i64,
    pub doubled_mid_after: i64,
    pub best_ask_before: i64,
    pub best_ask_after: i64,
    pub best_bid_before: i64,
    pub best_bid_after: i64,
}

impl EventRecord {
    /// Change of twice the midprice, in ticks.
    pub fn doubled_mid_change(&self) -> i64 {
        self.doubled_mid_after - self.doubled_mid_before
    }
}

/// Counts per relative level, measured from the opposite best.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelativeView {
    /// `ask_rel[d]` is the number of asks at relative level `d` (`d = 0..=L`).
    pub ask_rel: Vec<u32>,
    /// `bid_rel[d]` is the number of bids at relative level `-d`.
    pub bid_rel: Vec<u32>,
    pub rel_best_ask: i64,
    pub rel_best_bid: i64,
}

#[derive(Debug, Clone)]
struct SideBook {
    /// Key stored at index 0.
    base: i64,
    counts: Vec<u32>,
    index: Fenwick,
    total: u64,
    best_key: i64,
    /// Orders inside the active window.
    window_orders: u64,
}

impl SideBook {
    fn from_keys(orders: &[(i64, u32)]) -> Option<Self> {
        let lo = orders.iter().filter(|o| o.1 > 0).map(|o| o.0).min()?;
        let hi = orders.iter().filter(|o| o.1 > 0).map(|o| o.0).max()?;
        let mut counts = vec![0u32; (hi - lo + 1) as usize];
        for &(key, c) in orders {
            if c > 0 {
                counts[(key - lo) as usize] += c;
            }
        }
        let total = counts.iter().map(|&c| u64::from(c)).sum();
        Some(Self {
            base: lo,
            index: Fenwick::from_counts(&counts),
            counts,
            total,
            best_key: lo,
            window_orders: 0,
        })
    }

    fn end_key(&self) -> i64 {
        self.base + self.counts.len() as i64
    }

    fn count(&self, key: i64) -> u32 {
        if key < self.base || key >= self.end_key() {
            0
        } else {
            self.counts[(key - self.base) as usize]
        }
    }

    /// Makes sure keys `lo..=hi` are addressable, growing with `margin`
    /// spare slots on whichever end had to move.
    fn ensure_cover(&mut self, lo: i64, hi: i64, margin: i64) {
        if lo >= self.base && hi < self.end_key() {
            return;
        }
        let new_base = if lo < self.base { lo - margin } else { self.base };
        let new_end = if hi >= self.end_key() {
            hi + 1 + margin
        } else {
            self.end_key()
        };
        let mut counts = vec![0u32; (new_end - new_base) as usize];
        let offset = (self.base - new_base) as usize;
        counts[offset..offset + self.counts.len()].copy_from_slice(&self.counts);
        self.index = Fenwick::from_counts(&counts);
        self.counts = counts;
        self.base = new_base;
    }

    /// Orders with keys in `lo..=hi`.
    fn orders_between(&self, lo: i64, hi: i64) -> u64 {
        let lo_idx = (lo - self.base).clamp(0, self.counts.len() as i64) as usize;
        let hi_idx = (hi + 1 - self.base).clamp(0, self.counts.len() as i64) as usize;
        self.index.range(lo_idx, hi_idx)
    }

    /// Key of the `k`-th order (0-based) counted upward from key `lo`.
    fn kth_from(&self, lo: i64, k: u64) -> Option<i64> {
        let lo_idx = (lo - self.base).clamp(0, self.counts.len() as i64) as usize;
        let before = self.index.prefix(lo_idx);
        self.index
            .find(before + k)
            .map(|idx| self.base + idx as i64)
    }

    fn min_key(&self) -> Option<i64> {
        self.index.find(0).map(|idx| self.base + idx as i64)
    }

    fn add(&mut self, key: i64) {
        let idx = (key - self.base) as usize;
        self.counts[idx] += 1;
        self.index.increment(idx);
        self.total += 1;
    }

    fn remove(&mut self, key: i64) {
        let idx = (key - self.base) as usize;
        self.counts[idx] -= 1;
        self.index.decrement(idx);
        self.total -= 1;
    }
}

/// Full microstate of the book.
#[derive(Debug, Clone)]
pub struct BookState {
    ask: SideBook,
    bid: SideBook,
    cutoff: i64,
    /// Simulation time.
    pub clock: f64,
}

impl BookState {
    /// Builds a book from absolute `(level, count)` pairs.
    pub fn from_levels(
        cutoff: u64,
        asks: &[(i64, u32)],
        bids: &[(i64, u32)],
    ) -> Result<Self, BookError> {
        let ask_keys: Vec<_> = asks.iter().map(|&(l, c)| (Side::Ask.key(l), c)).collect();
        let bid_keys: Vec<_> = bids.iter().map(|&(l, c)| (Side::Bid.key(l), c)).collect();
        let ask = SideBook::from_keys(&ask_keys).ok_or(BookError::EmptySide(Side::Ask))?;
        let bid = SideBook::from_keys(&bid_keys).ok_or(BookError::EmptySide(Side::Bid))?;
        let (a, b) = (ask.best_key, -bid.best_key);
        if a <= b {
            return Err(BookError::Crossed { ask: a, bid: b });
        }
        let mut book = Self {
            ask,
            bid,
            cutoff: cutoff as i64,
            clock: 0.0,
        };
        book.refresh_window(Side::Ask);
        book.refresh_window(Side::Bid);
        Ok(book)
    }

    fn side(&self, side: Side) -> &SideBook {
        match side {
            Side::Ask => &self.ask,
            Side::Bid => &self.bid,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut SideBook {
        match side {
            Side::Ask => &mut self.ask,
            Side::Bid => &mut self.bid,
        }
    }

    pub fn cutoff(&self) -> u64 {
        self.cutoff as u64
    }

    pub fn best_ask_level(&self) -> i64 {
        self.ask.best_key
    }

    pub fn best_bid_level(&self) -> i64 {
        -self.bid.best_key
    }

    pub fn doubled_mid(&self) -> i64 {
        self.best_ask_level() + self.best_bid_level()
    }

    /// Spread in ticks.
    pub fn spread_ticks(&self) -> i64 {
        self.best_ask_level() - self.best_bid_level()
    }

    /// Best-quote key of `side`.
    pub fn best_key(&self, side: Side) -> i64 {
        self.side(side).best_key
    }

    /// Opposite best mirrored into `side`'s key coordinate; the active
    /// window of `side` is `(o, o + L]`.
    pub fn window_origin(&self, side: Side) -> i64 {
        -self.side(side.opposite()).best_key
    }

    /// Orders of `side` inside its active window.
    pub fn window_orders(&self, side: Side) -> u64 {
        self.side(side).window_orders
    }

    pub fn total_orders(&self, side: Side) -> u64 {
        self.side(side).total
    }

    /// Count at an absolute price level.
    pub fn count_at_level(&self, side: Side, level: i64) -> u32 {
        self.side(side).count(side.key(level))
    }

    /// Count at key distance `d >= 1` from the opposite best (relative level
    /// `d` for asks, `-d` for bids).
    pub fn count_at_distance(&self, side: Side, d: i64) -> u32 {
        self.side(side).count(self.window_origin(side) + d)
    }

    /// Calls `f(d, count)` for every distance `d` in `1..=max_d` from the
    /// opposite best with a non-empty slice of storage behind it.
    pub fn for_each_distance(&self, side: Side, max_d: i64, mut f: impl FnMut(i64, u32)) {
        let sb = self.side(side);
        let origin = self.window_origin(side);
        let lo = (origin + 1).max(sb.base);
        let hi = (origin + max_d).min(sb.end_key() - 1);
        if hi < lo {
            return;
        }
        let slice = &sb.counts[(lo - sb.base) as usize..=(hi - sb.base) as usize];
        for (j, &c) in slice.iter().enumerate() {
            f(lo - origin + j as i64, c);
        }
    }

    /// Counts at distances `1..=max_d` from the opposite best, as a
    /// contiguous slice starting at distance `first`. Distances without
    /// backing storage are absent from the slice.
    pub fn distance_slice(&self, side: Side, max_d: i64) -> (i64, &[u32]) {
        let sb = self.side(side);
        let origin = self.window_origin(side);
        let lo = (origin + 1).max(sb.base);
        let hi = (origin + max_d).min(sb.end_key() - 1);
        if hi < lo {
            return (1, &[]);
        }
        (
            lo - origin,
            &sb.counts[(lo - sb.base) as usize..=(hi - sb.base) as usize],
        )
    }

    /// Keys of the first `n` occupied levels of `side`, from the best outward.
    pub fn occupied_keys(&self, side: Side, n: usize, max_key: i64, out: &mut Vec<i64>) {
        out.clear();
        let sb = self.side(side);
        let start = (sb.best_key - sb.base) as usize;
        let stop = ((max_key + 1 - sb.base).max(0) as usize).min(sb.counts.len());
        for idx in start..stop {
            if sb.counts[idx] > 0 {
                out.push(sb.base + idx as i64);
                if out.len() == n {
                    break;
                }
            }
        }
    }

    /// Relative-coordinate view over the active windows.
    pub fn relative_view(&self) -> RelativeView {
        let l = self.cutoff as usize;
        let mut ask_rel = vec![0u32; l + 1];
        let mut bid_rel = vec![0u32; l + 1];
        self.for_each_distance(Side::Ask, l as i64, |d, c| ask_rel[d as usize] = c);
        self.for_each_distance(Side::Bid, l as i64, |d, c| bid_rel[d as usize] = c);
        RelativeView {
            ask_rel,
            bid_rel,
            rel_best_ask: self.best_ask_level() - self.best_bid_level(),
            rel_best_bid: self.best_bid_level() - self.best_ask_level(),
        }
    }

    /// `2λΔL + v(N_ask + N_bid) + 2μ`, with `N` the window order counts.
    pub fn total_intensity(&self, params: &ModelParams) -> f64 {
        2.0 * params.level_rate() * self.cutoff as f64
            + params.cancel_rate * (self.ask.window_orders + self.bid.window_orders) as f64
            + 2.0 * params.market_rate
    }

    fn refresh_window(&mut self, side: Side) {
        let origin = self.window_origin(side);
        let cutoff = self.cutoff;
        let margin = cutoff / 2 + 16;
        let sb = self.side_mut(side);
        sb.ensure_cover(origin + 1, origin + cutoff, margin);
        sb.window_orders = sb.orders_between(origin + 1, origin + cutoff);
    }

    fn check_distance(&self, side: Side, q: i64) -> Result<i64, BookError> {
        let d = q * side.sign();
        if d < 1 || d > self.cutoff {
            return Err(BookError::WindowViolation {
                side,
                q,
                cutoff: self.cutoff as u64,
            });
        }
        Ok(d)
    }

    fn quotes(&self) -> (i64, i64) {
        (self.best_ask_level(), self.best_bid_level())
    }

    fn record(&self, kind: EventKind, key: i64, q: i64, before: (i64, i64)) -> EventRecord {
        let after = self.quotes();
        EventRecord {
            time: self.clock,
            kind,
            level: kind.side().key(key),
            rel_level: q,
            doubled_mid_before: before.0 + before.1,
            doubled_mid_after: after.0 + after.1,
            best_ask_before: before.0,
            best_ask_after: after.0,
            best_bid_before: before.1,
            best_bid_after: after.1,
        }
    }

    /// Submits one limit order at relative level `q` (`1..=L` for asks,
    /// `-L..=-1` for bids), measured from the opposite best.
    pub fn apply_limit_order(&mut self, side: Side, q: i64) -> Result<EventRecord, BookError> {
        let d = self.check_distance(side, q)?;
        let before = self.quotes();
        let key = self.window_origin(side) + d;
        let sb = self.side_mut(side);
        sb.add(key);
        sb.window_orders += 1;
        if key < sb.best_key {
            sb.best_key = key;
            self.refresh_window(side.opposite());
        }
        Ok(self.record(EventKind::limit(side), key, q, before))
    }

    /// Removes one order at relative level `q`, by cancellation or (when
    /// `is_market`) by a market order hitting the best quote.
    pub fn apply_removal(
        &mut self,
        side: Side,
        q: i64,
        is_market: bool,
    ) -> Result<EventRecord, BookError> {
        let origin = self.window_origin(side);
        let best = self.side(side).best_key;
        let d = if is_market {
            let d = q * side.sign();
            if d != best - origin {
                return Err(BookError::NotAtBest {
                    side,
                    q,
                    best: (best - origin) * side.sign(),
                });
            }
            d
        } else {
            self.check_distance(side, q)?
        };
        let key = origin + d;
        if self.side(side).count(key) == 0 {
            return Err(BookError::EmptyQueue { side, q });
        }
        if self.side(side).total == 1 {
            return Err(BookError::SideWouldEmpty(side));
        }
        let before = self.quotes();
        let cutoff = self.cutoff;
        let sb = self.side_mut(side);
        sb.remove(key);
        if d <= cutoff {
            sb.window_orders -= 1;
        }
        if key == sb.best_key && sb.counts[(key - sb.base) as usize] == 0 {
            sb.best_key = sb.min_key().expect("side is non-empty");
            self.refresh_window(side.opposite());
        }
        Ok(self.record(EventKind::removal(side, is_market), key, q, before))
    }

    /// Key of the `k`-th order (0-based) inside the active window of `side`.
    pub(crate) fn kth_window_order(&self, side: Side, k: u64) -> i64 {
        let origin = self.window_origin(side);
        self.side(side)
            .kth_from(origin + 1, k)
            .expect("k is below the window order count")
    }

    /// Recomputes bests and window counts by full scan and compares them
    /// with the incrementally maintained values.
    pub fn verify(&self) -> Result<(), String> {
        for side in [Side::Ask, Side::Bid] {
            let sb = self.side(side);
            let scan_best = sb
                .counts
                .iter()
                .position(|&c| c > 0)
                .map(|i| sb.base + i as i64)
                .ok_or_else(|| format!("{side:?} side is empty"))?;
            if scan_best != sb.best_key {
                return Err(format!(
                    "{side:?} best key {} but scan finds {scan_best}",
                    sb.best_key
                ));
            }
            let total: u64 = sb.counts.iter().map(|&c| u64::from(c)).sum();
            if total != sb.total {
                return Err(format!("{side:?} total {} but scan finds {total}", sb.total));
            }
            let origin = self.window_origin(side);
            let in_window: u64 = sb
                .counts
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let k = sb.base + *i as i64;
                    k > origin && k <= origin + self.cutoff
                })
                .map(|(_, &c)| u64::from(c))
                .sum();
            if in_window != sb.window_orders {
                return Err(format!(
                    "{side:?} window count {} but scan finds {in_window}",
                    sb.window_orders
                ));
            }
        }
        if self.best_ask_level() <= self.best_bid_level() {
            return Err(format!(
                "crossed book: ask {} bid {}",
                self.best_ask_level(),
                self.best_bid_level()
            ));
        }
        Ok(())
    }
}

/// Initial book: independent Poisson(n_st) counts on every level of both
/// windows plus one forced order at relative level 1 on each side.
///
/// The best bid starts at level 0 and the best ask at level 1.
pub fn init_book<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> BookState {
    let l = params.cutoff as i64;
    let n_st = params.n_st();
    let poisson = Poisson::new(n_st).ok();
    let draw = |rng: &mut R| -> u32 {
        match &poisson {
            Some(p) => p.sample(rng) as u32,
            None => 0,
        }
    };
    // asks at levels 1..=L (distance from B = 0), bids at 1-L..=0 (from A = 1)
    let mut asks = Vec::with_capacity(l as usize);
    let mut bids = Vec::with_capacity(l as usize);
    for d in 1..=l {
        let forced = u32::from(d == 1);
        asks.push((d, draw(rng) + forced));
        bids.push((1 - d, draw(rng) + forced));
    }
    BookState::from_levels(params.cutoff, &asks, &bids).expect("forced orders keep both sides uncrossed")
}
