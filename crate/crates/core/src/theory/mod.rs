//! Mean-field theory: closed forms, the jump kernel of the relative-frame
//! density, a steady-state solver for the kinetic equation, best-price
//! functionals and the gap recursion.
//!
//! Everything here is a pure function of its inputs.

mod boltzmann;
mod closed_form;
mod extreme;
mod gap_chain;
mod grid;
mod kernel;

pub use boltzmann::{solve_boltzmann_steady, BoltzmannSolution, GridSpec};
pub use closed_form::{
    image_profile, stationary_profile, theory_metrics, TheoryMetrics, TheoryProfile,
};
pub use extreme::{best_price_mass, best_price_pdf, impact_from_profile, spread_from_profile};
pub use gap_chain::{
    divergence_threshold, gap_chain_iterate, gap_chain_shoot, limit_gap, GapChain, GapClass,
};
pub use grid::{GridProfile, MAX_TAIL_SURVIVAL};
pub use kernel::{
    boltzmann_rhs, default_jump_steps, jump_kernel, kernel_grid, km_coefficient,
    km_coefficient_over, KernelGrid,
};

use crate::format::fmt_f64;
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TheoryError {
    #[error("survival {survival:e} at the end of the grid exceeds {MAX_TAIL_SURVIVAL:e}; enlarge the domain")]
    DomainTooSmall { survival: f64 },
    #[error("no convergence after {max_iter} iterations (residual {residual:e})")]
    NoConvergence {
        max_iter: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("gap shooting endpoints both classify as {:?}", lo.classification)]
    NoBracket { lo: Box<GapChain>, hi: Box<GapChain> },
}

pub const PROFILE_CSV_HEADER: &str = "r[price],rho[1/price]";
pub const GAP_CHAIN_CSV_HEADER: &str = "k,g[ticks]";
pub const THEORY_METRICS_CSV_HEADER: &str =
    "lambda[1/(price*time)],v[1/time],mu[1/time],tick[price],spread[price],impact[price],diffusion[price^2/time]";

/// Two-column dump of `(r, ρ(r))` pairs.
pub fn profile_csv(points: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = format!("{PROFILE_CSV_HEADER}\n");
    for (r, rho) in points {
        out.push_str(&format!("{},{}\n", fmt_f64(r), fmt_f64(rho)));
    }
    out
}

pub fn grid_profile_csv(profile: &GridProfile) -> String {
    profile_csv((0..=profile.n()).map(|j| (profile.r(j), profile.values[j])))
}

pub fn gap_chain_csv(chain: &GapChain) -> String {
    let mut out = format!("{GAP_CHAIN_CSV_HEADER}\n");
    for (k, g) in chain.g.iter().enumerate() {
        out.push_str(&format!("{k},{}\n", fmt_f64(*g)));
    }
    out
}

/// One data row (no header) keyed by `(λ, v, μ, Δ)`.
pub fn theory_metrics_row(params: &ModelParams, m: &TheoryMetrics) -> String {
    [
        params.limit_rate,
        params.cancel_rate,
        params.market_rate,
        params.tick_size,
        m.spread,
        m.impact,
        m.diffusion,
    ]
    .iter()
    .map(|&x| fmt_f64(x))
    .collect::<Vec<_>>()
    .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_dumps_parse_back() {
        let p = ModelParams::new(1e4, 1.0, 1.0, 1e-6, 10).unwrap();
        let row = theory_metrics_row(&p, &theory_metrics(&p));
        let fields: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields.len(), THEORY_METRICS_CSV_HEADER.split(',').count());
        assert_eq!(fields[4], p.epsilon());

        let g = GridProfile::constant(3.0, 0.5, 1.0);
        let csv = grid_profile_csv(&g);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PROFILE_CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "5.0000000000000000e-1,3.0000000000000000e0");

        let chain = gap_chain_iterate(&ModelParams::new(1.0, 1.0, 0.0, 1.0, 10).unwrap(), 2.0, 3).unwrap();
        assert_eq!(gap_chain_csv(&chain).lines().count(), 5);
    }
}
