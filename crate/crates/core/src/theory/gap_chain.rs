//! Mean gap sizes on one side of the book from the closed gap recursion
//! `{μ+(k+1)v}·g_{k+1} = λΔ·g_k·Σ_{i≤k}(g_i − 1)`.

use super::TheoryError;
use crate::params::ModelParams;

/// Consecutive growing iterates above the divergence threshold needed to
/// classify a chain as diverging.
const DIVERGENCE_PERSISTENCE: usize = 3;
const MAX_BISECTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapClass {
    ConvergedToLimit,
    DivergedUp,
    Collapsed,
    /// Ran `K` steps without diverging or collapsing and ended away from the
    /// limit.
    Unresolved,
}

impl GapClass {
    pub fn name(self) -> &'static str {
        match self {
            GapClass::ConvergedToLimit => "converged",
            GapClass::DivergedUp => "diverged",
            GapClass::Collapsed => "collapsed",
            GapClass::Unresolved => "unresolved",
        }
    }
}

/// Iterated chain `g_0, g_1, …`. Iteration stops as soon as the chain is
/// classified, so a diverging or collapsing chain can be shorter than `K+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapChain {
    pub g: Vec<f64>,
    pub converged: bool,
    pub classification: GapClass,
}

/// `1 + (μ+v)/(λΔ)`: any chain starting above it grows without bound.
pub fn divergence_threshold(params: &ModelParams) -> f64 {
    1.0 + params.removal_rate() / (params.limit_rate * params.tick_size)
}

/// `1 + v/(λΔ)`, the far-from-best mean gap.
pub fn limit_gap(params: &ModelParams) -> f64 {
    1.0 + params.cancel_rate / (params.limit_rate * params.tick_size)
}

pub fn gap_chain_iterate(params: &ModelParams, g0: f64, k_max: usize) -> Result<GapChain, TheoryError> {
    if g0.is_nan() || g0 <= 1.0 {
        return Err(TheoryError::InvalidArgument("initial gap must exceed one tick"));
    }
    if k_max < 1 {
        return Err(TheoryError::InvalidArgument("chain length must be at least 1"));
    }
    let ld = params.limit_rate * params.tick_size;
    let (mu, v) = (params.market_rate, params.cancel_rate);
    let upper = divergence_threshold(params);
    let limit = limit_gap(params);

    let mut g = Vec::with_capacity(k_max + 1);
    g.push(g0);
    let mut excess_sum = g0 - 1.0;
    let mut persistence = 0;
    for k in 0..k_max {
        let gk = g[k];
        let next = ld * gk * excess_sum / (mu + (k + 1) as f64 * v);
        if k >= 1 && gk > g[k - 1] && gk > upper {
            assert!(
                next >= gk * (1.0 - 1e-12),
                "gap chain lost monotone growth at k = {k}: {gk} -> {next}"
            );
        }
        g.push(next);
        if next < 1.0 {
            return Ok(chain(g, GapClass::Collapsed));
        }
        if next > upper && next > gk {
            persistence += 1;
            if persistence >= DIVERGENCE_PERSISTENCE {
                return Ok(chain(g, GapClass::DivergedUp));
            }
        } else {
            persistence = 0;
        }
        excess_sum += next - 1.0;
    }
    let last = g[k_max];
    let class = if (last - limit).abs() < 0.01 * limit {
        GapClass::ConvergedToLimit
    } else {
        GapClass::Unresolved
    };
    Ok(chain(g, class))
}

fn chain(g: Vec<f64>, classification: GapClass) -> GapChain {
    GapChain {
        g,
        converged: classification == GapClass::ConvergedToLimit,
        classification,
    }
}

/// Bisects `g_0` on `(1, 1+(μ+v)/(λΔ)]` for the boundary between diverging
/// and non-diverging chains; returns the midpoint of the final bracket.
///
/// When the upper end itself converges to the limit (as at `μ = 0`, where
/// the chain starting there is constant) that end is the solution.
pub fn gap_chain_shoot(params: &ModelParams, k_max: usize, tol: f64) -> Result<(f64, GapChain), TheoryError> {
    if k_max < 20 {
        return Err(TheoryError::InvalidArgument("shooting needs at least 20 gaps"));
    }
    let upper = divergence_threshold(params);
    let mut lo = 1.0 + 1e-9 * (upper - 1.0);
    let mut hi = upper;
    let lo_chain = gap_chain_iterate(params, lo, k_max)?;
    let hi_chain = gap_chain_iterate(params, hi, k_max)?;
    if hi_chain.classification == GapClass::ConvergedToLimit {
        return Ok((hi, hi_chain));
    }
    let diverges = |c: &GapChain| c.classification == GapClass::DivergedUp;
    if diverges(&lo_chain) == diverges(&hi_chain) {
        return Err(TheoryError::NoBracket {
            lo: Box::new(lo_chain),
            hi: Box::new(hi_chain),
        });
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if diverges(&gap_chain_iterate(params, mid, k_max)?) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok((mid, gap_chain_iterate(params, mid, k_max)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lambda: f64, v: f64, mu: f64, tick: f64) -> ModelParams {
        ModelParams::new(lambda, v, mu, tick, 1000).unwrap()
    }

    #[test]
    fn starting_above_the_threshold_diverges() {
        for params in [p(1.0, 1.0, 10.0, 1.0), p(100.0, 0.5, 3.0, 0.01), p(0.1, 1.0, 50.0, 1.0)] {
            let u = divergence_threshold(&params);
            let c = gap_chain_iterate(&params, u + 0.1, 200).unwrap();
            assert_eq!(c.classification, GapClass::DivergedUp);
            assert!(c.g.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn first_step_matches_the_quadratic_form() {
        let params = p(2.0, 1.0, 3.0, 0.5);
        let c = gap_chain_iterate(&params, 2.5, 5).unwrap();
        // (μ+v)·g1 = λΔ(g0² − g0)
        assert!((c.g[1] - 1.0 * (2.5 * 2.5 - 2.5) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn unit_limit_rate_gives_limit_two() {
        // λΔ = v
        let params = p(4.0, 2.0, 5.0, 0.5);
        assert_eq!(limit_gap(&params), 2.0);
    }

    #[test]
    fn chain_without_market_orders_does_not_diverge() {
        let params = p(1.0, 1.0, 0.0, 1.0);
        let c = gap_chain_iterate(&params, 1.0 + 1e-3, 500).unwrap();
        assert!(matches!(
            c.classification,
            GapClass::Collapsed | GapClass::ConvergedToLimit
        ));
        // starting on the limit stays there
        let c = gap_chain_iterate(&params, 2.0, 500).unwrap();
        assert_eq!(c.classification, GapClass::ConvergedToLimit);
        assert!(c.g.iter().all(|&g| (g - 2.0).abs() < 1e-12));
    }

    #[test]
    fn shooting_respects_the_upper_bound() {
        for (l, v, mu, tick) in [(1.0, 1.0, 10.0, 1.0), (0.01, 1.0, 50.0, 1.0), (30.0, 0.2, 1.0, 0.1)] {
            let params = p(l, v, mu, tick);
            let (g0, chain) = gap_chain_shoot(&params, 200, 1e-12).unwrap();
            assert!(g0 <= divergence_threshold(&params));
            assert!(g0 > 1.0);
            assert_eq!(chain.g[0], g0);
        }
    }

    #[test]
    fn threshold_is_insensitive_to_chain_length() {
        let params = p(0.01, 1.0, 20.0, 1.0);
        let (a, _) = gap_chain_shoot(&params, 200, 1e-12).unwrap();
        let (b, _) = gap_chain_shoot(&params, 2000, 1e-12).unwrap();
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn shooting_without_market_orders_returns_the_limit() {
        let params = p(1.0, 1.0, 0.0, 1.0);
        let (g0, chain) = gap_chain_shoot(&params, 100, 1e-12).unwrap();
        assert_eq!(g0, 2.0);
        assert!(chain.converged);
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let params = p(1.0, 1.0, 1.0, 1.0);
        assert!(gap_chain_iterate(&params, 1.0, 10).is_err());
        assert!(gap_chain_iterate(&params, 2.0, 0).is_err());
        assert!(gap_chain_shoot(&params, 10, 1e-9).is_err());
    }
}
