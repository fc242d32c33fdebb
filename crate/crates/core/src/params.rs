//! Model constants of the Santa Fe order book and the quantities derived
//! from them.

use thiserror::Error;

/// Thresholds above which the small-tick / high-liquidity asymptotics are
/// considered degraded.
pub const REGIME_WARN_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("parameter `{0}` must be positive")]
    NonPositiveParameter(&'static str),
    #[error("parameter `{0}` must be finite")]
    NonFinite(&'static str),
}

/// The five constants of the model.
///
/// Prices are measured in the same unit as `tick_size`; intensities are per
/// unit time. All orders carry unit volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Limit-order intensity per unit price per unit time (λ).
    pub limit_rate: f64,
    /// Cancellation intensity per resting order (v).
    pub cancel_rate: f64,
    /// Market-order intensity per side (μ).
    pub market_rate: f64,
    /// Tick size Δ.
    pub tick_size: f64,
    /// Width of the submission/cancellation window, in ticks (L).
    pub cutoff: u64,
}

/// Where a parameter set sits relative to the continuous asymptotic limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub n_st: f64,
    pub epsilon: f64,
    pub small_tick: bool,
    pub high_liquidity: bool,
}

impl RegimeReport {
    pub fn degraded(&self) -> bool {
        !(self.small_tick && self.high_liquidity)
    }
}

impl ModelParams {
    pub fn new(
        limit_rate: f64,
        cancel_rate: f64,
        market_rate: f64,
        tick_size: f64,
        cutoff: u64,
    ) -> Result<Self, ParamError> {
        Self {
            limit_rate,
            cancel_rate,
            market_rate,
            tick_size,
            cutoff,
        }
        .validate()
    }

    /// Checks every bound and returns the parameters unchanged.
    ///
    /// Logs a warning when the regime report flags a parameter set outside
    /// the small-tick / high-liquidity domain.
    pub fn validate(self) -> Result<Self, ParamError> {
        fn positive(name: &'static str, x: f64) -> Result<(), ParamError> {
            if x.is_nan() || x <= 0.0 {
                Err(ParamError::NonPositiveParameter(name))
            } else if !x.is_finite() {
                Err(ParamError::NonFinite(name))
            } else {
                Ok(())
            }
        }
        positive("lambda", self.limit_rate)?;
        positive("v", self.cancel_rate)?;
        if self.market_rate.is_nan() || self.market_rate < 0.0 {
            return Err(ParamError::NonPositiveParameter("mu"));
        }
        if !self.market_rate.is_finite() {
            return Err(ParamError::NonFinite("mu"));
        }
        positive("delta", self.tick_size)?;
        if self.cutoff == 0 {
            return Err(ParamError::NonPositiveParameter("cutoff"));
        }
        if !(self.n_st().is_finite() && self.n_st() > 0.0) {
            return Err(ParamError::NonFinite("n_st"));
        }
        if !(self.epsilon().is_finite() && self.epsilon() > 0.0) {
            return Err(ParamError::NonFinite("epsilon"));
        }

        let regime = self.regime();
        if regime.degraded() {
            log::warn!(
                "parameters outside the continuous asymptotic regime: n_st = {:.3e}, epsilon = {:.3e}",
                regime.n_st,
                regime.epsilon
            );
        }
        Ok(self)
    }

    /// Far-field mean occupancy per level, λΔ/v.
    pub fn n_st(&self) -> f64 {
        self.limit_rate * self.tick_size / self.cancel_rate
    }

    /// Characteristic near-best length (v+μ)/λ.
    pub fn epsilon(&self) -> f64 {
        (self.cancel_rate + self.market_rate) / self.limit_rate
    }

    /// Limit-order intensity per price level, λΔ.
    pub fn level_rate(&self) -> f64 {
        self.limit_rate * self.tick_size
    }

    /// Rate at which the best quote is removed by a cancellation or a
    /// market order when it holds a single order, v+μ.
    pub fn removal_rate(&self) -> f64 {
        self.cancel_rate + self.market_rate
    }

    pub fn regime(&self) -> RegimeReport {
        let n_st = self.n_st();
        let epsilon = self.epsilon();
        RegimeReport {
            n_st,
            epsilon,
            small_tick: n_st <= REGIME_WARN_THRESHOLD,
            high_liquidity: epsilon <= REGIME_WARN_THRESHOLD,
        }
    }

    pub fn with_market_rate(self, market_rate: f64) -> Self {
        Self {
            market_rate,
            ..self
        }
    }
}

/// Evaluates (v+μ)/λ for a validated parameter set.
pub fn epsilon(params: &ModelParams) -> f64 {
    params.epsilon()
}
