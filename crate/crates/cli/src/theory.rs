//! Mean-field tables, the steady-state solver and the gap recursion.

use crate::sweep::theory_table;
use crate::{echo_config, write_output, CliError, ExperimentConfig};
use santafe_core::format::{fmt_f64, fmt_opt};
use santafe_core::theory::{
    boltzmann_rhs, divergence_threshold, gap_chain_csv, gap_chain_iterate, gap_chain_shoot,
    limit_gap, solve_boltzmann_steady, GapChain, GridProfile, GridSpec,
};
use santafe_core::{ModelParams, TheoryError, TheoryProfile};
use std::fmt::Write as _;
use std::path::PathBuf;

pub const PROFILES_CSV_HEADER: &str = "r[price],stationary[1/price],image[1/price]";
pub const GAP_SHOOT_CSV_HEADER: &str =
    "mu[1/time],g0[ticks],spread[price],threshold[ticks],limit[ticks],class";
pub const BOLTZMANN_CSV_HEADER: &str = "r[price],rho[1/price],rho_closed[1/price],rel_diff[1]";
pub const RESIDUALS_CSV_HEADER: &str = "iteration,residual[1]";
pub const BOLTZMANN_SUMMARY_CSV_HEADER: &str = "iterations,residual[1],closed_form_residual[1],\
max_rel_diff_3e_10e[1],grid_halving_change[1]";

/// Most rows written for a sampled profile.
const MAX_PROFILE_ROWS: usize = 20_000;

fn market_rates(config: &ExperimentConfig) -> Vec<f64> {
    match config.sweep {
        Some(g) => g.values(),
        None => vec![config.params.market_rate],
    }
}

/// Closed-form stationary and image profiles on `[0, 20·√(D/v)]`, step
/// `ε/20` or coarser when that would exceed the row limit.
pub fn profiles_csv(params: &ModelParams) -> String {
    let t = TheoryProfile::new(params);
    let r_max = 20.0 * t.decay_length();
    let h = (params.epsilon() / 20.0).max(r_max / MAX_PROFILE_ROWS as f64);
    let n = (r_max / h).ceil() as usize;
    let mut out = format!("{PROFILES_CSV_HEADER}\n");
    for j in 0..=n {
        let r = j as f64 * h;
        let _ = writeln!(out, "{},{},{}", fmt_f64(r), fmt_f64(t.density(r)), fmt_f64(t.image_density(r)));
    }
    out
}

fn gap_shoot_row(params: &ModelParams, k_max: usize, tol: f64) -> (String, Option<GapChain>) {
    let (g0, class, chain) = match gap_chain_shoot(params, k_max, tol) {
        Ok((g0, chain)) => (Some(g0), chain.classification.name(), Some(chain)),
        Err(TheoryError::NoBracket { .. }) => (None, "no_bracket", None),
        Err(_) => (None, "invalid", None),
    };
    let row = format!(
        "{},{},{},{},{},{}",
        fmt_f64(params.market_rate),
        fmt_opt(g0),
        fmt_opt(g0.map(|g| g * params.tick_size)),
        fmt_f64(divergence_threshold(params)),
        fmt_f64(limit_gap(params)),
        class
    );
    (row, chain)
}

/// Writes `theory_metrics.csv` and `gap_shoot.csv` for every μ on the grid
/// (or `sim.mu` alone without a grid), plus `profiles.csv` and
/// `gap_chain.csv` for `sim.mu`.
pub fn cmd_theory(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let params = &config.params;
    let mus = market_rates(config);
    for &mu in &mus {
        params.with_market_rate(mu).validate()?;
    }
    let t = &config.theory;
    let mut shoot = format!("{GAP_SHOOT_CSV_HEADER}\n");
    for &mu in &mus {
        shoot.push_str(&gap_shoot_row(&params.with_market_rate(mu), t.gap_k, t.gap_tol).0);
        shoot.push('\n');
    }
    let (_, chain) = gap_shoot_row(params, t.gap_k, t.gap_tol);
    let dir = &config.out_dir;
    let mut files = vec![
        echo_config(config)?,
        write_output(dir, "theory_metrics.csv", &theory_table(params, &mus))?,
        write_output(dir, "profiles.csv", &profiles_csv(params))?,
        write_output(dir, "gap_shoot.csv", &shoot)?,
    ];
    if let Some(chain) = chain {
        files.push(write_output(dir, "gap_chain.csv", &gap_chain_csv(&chain))?);
    }
    Ok(files)
}

/// Iterates the gap recursion from `g0`, or shoots for the threshold when
/// `g0` is `None`. Writes `gap_chain.csv` and a one-row `gap_shoot.csv`.
pub fn cmd_gap_chain(config: &ExperimentConfig, g0: Option<f64>) -> Result<(GapChain, Vec<PathBuf>), CliError> {
    config.validate()?;
    let params = &config.params;
    let t = &config.theory;
    let chain = match g0 {
        Some(g0) => gap_chain_iterate(params, g0, t.gap_k)?,
        None => gap_chain_shoot(params, t.gap_k, t.gap_tol)?.1,
    };
    let summary = format!(
        "{GAP_SHOOT_CSV_HEADER}\n{},{},{},{},{},{}\n",
        fmt_f64(params.market_rate),
        fmt_f64(chain.g[0]),
        fmt_f64(chain.g[0] * params.tick_size),
        fmt_f64(divergence_threshold(params)),
        fmt_f64(limit_gap(params)),
        chain.classification.name()
    );
    let dir = &config.out_dir;
    let files = vec![
        echo_config(config)?,
        write_output(dir, "gap_chain.csv", &gap_chain_csv(&chain))?,
        write_output(dir, "gap_shoot.csv", &summary)?,
    ];
    Ok((chain, files))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannReport {
    pub iterations: usize,
    /// Final `max |RHS| / λ` of the numerical profile.
    pub residual: f64,
    /// `max |RHS| / λ` of the closed-form profile over `[3ε, R/2]`.
    pub closed_form_residual: f64,
    /// Largest relative difference to the closed form on `[3ε, 10ε]`.
    pub max_rel_diff: f64,
    /// Largest relative change on `[3ε, 10ε]` when the step is halved.
    pub grid_change: Option<f64>,
}

pub fn boltzmann_grid(config: &ExperimentConfig) -> GridSpec {
    let p = &config.params;
    let t = &config.theory;
    GridSpec {
        h: p.epsilon() / t.grid_divisions,
        r_max: t.domain_lengths * TheoryProfile::new(p).decay_length(),
    }
}

fn max_rel_change(a: &GridProfile, b: &GridProfile, lo: f64, hi: f64) -> f64 {
    (0..=a.n())
        .map(|j| a.r(j))
        .filter(|&r| r >= lo && r <= hi)
        .map(|r| (b.density(r) - a.density(r)).abs() / a.density(r))
        .fold(0.0, f64::max)
}

/// Solves the steady kinetic equation on the configured grid and writes
/// `boltzmann_profile.csv`, `residuals.csv` and `boltzmann_summary.csv`.
///
/// On non-convergence the residual trace is still written before the error
/// is returned.
pub fn cmd_solve_boltzmann(
    config: &ExperimentConfig,
    grid_check: bool,
) -> Result<(BoltzmannReport, Vec<PathBuf>), CliError> {
    config.validate()?;
    let params = &config.params;
    let grid = boltzmann_grid(config);
    let t = &config.theory;
    let dir = &config.out_dir;
    let mut files = vec![echo_config(config)?];
    let residuals_csv = |history: &[f64]| {
        let mut s = format!("{RESIDUALS_CSV_HEADER}\n");
        for (i, r) in history.iter().enumerate() {
            let _ = writeln!(s, "{i},{}", fmt_f64(*r));
        }
        s
    };
    let solution = match solve_boltzmann_steady(params, grid, t.tol, t.max_iter) {
        Ok(s) => s,
        Err(e) => {
            if let TheoryError::NoConvergence { history, .. } = &e {
                write_output(dir, "residuals.csv", &residuals_csv(history))?;
            }
            return Err(e.into());
        }
    };
    files.push(write_output(dir, "residuals.csv", &residuals_csv(&solution.residual_history))?);

    let closed = TheoryProfile::new(params);
    let profile = &solution.profile;
    let mut out = format!("{BOLTZMANN_CSV_HEADER}\n");
    for j in 0..=profile.n() {
        let r = profile.r(j);
        let (rho, rc) = (profile.values[j], closed.density(r));
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(r), fmt_f64(rho), fmt_f64(rc), fmt_f64((rho - rc) / rc));
    }
    files.push(write_output(dir, "boltzmann_profile.csv", &out)?);

    let eps = params.epsilon();
    let closed_grid = GridProfile::from_fn(grid.h, grid.r_max, closed.rho_inf, |r| closed.density(r));
    let rhs = boltzmann_rhs(&closed_grid, params)?;
    let closed_form_residual = (0..=closed_grid.n())
        .filter(|&j| {
            let r = closed_grid.r(j);
            r >= 3.0 * eps && r <= 0.5 * grid.r_max
        })
        .map(|j| rhs[j].abs() / params.limit_rate)
        .fold(0.0, f64::max);
    let max_rel_diff = (0..=profile.n())
        .map(|j| profile.r(j))
        .filter(|&r| r >= 3.0 * eps && r <= 10.0 * eps)
        .map(|r| (profile.density(r) / closed.density(r) - 1.0).abs())
        .fold(0.0, f64::max);
    let grid_change = if grid_check {
        let fine = solve_boltzmann_steady(params, grid.halved(), t.tol, t.max_iter)?;
        Some(max_rel_change(profile, &fine.profile, 3.0 * eps, 10.0 * eps))
    } else {
        None
    };
    let report = BoltzmannReport {
        iterations: solution.iterations,
        residual: solution.residual_history.last().copied().unwrap_or(0.0),
        closed_form_residual,
        max_rel_diff,
        grid_change,
    };
    let summary = format!(
        "{BOLTZMANN_SUMMARY_CSV_HEADER}\n{},{},{},{},{}\n",
        report.iterations,
        fmt_f64(report.residual),
        fmt_f64(report.closed_form_residual),
        fmt_f64(report.max_rel_diff),
        fmt_opt(report.grid_change)
    );
    files.push(write_output(dir, "boltzmann_summary.csv", &summary)?);
    Ok((report, files))
}
