//! Parallel sweeps over the market-order rate.

use crate::simulate::measure;
use crate::{echo_config, parse_field, write_output, CliError, ExperimentConfig};
use rayon::prelude::*;
use santafe_core::format::{fmt_f64, fmt_opt};
use santafe_core::theory::{theory_metrics, theory_metrics_row, THEORY_METRICS_CSV_HEADER};
use santafe_core::{MetricsReport, ModelParams};
use std::path::PathBuf;

pub const SWEEP_CSV_HEADER: &str =
    "mu[1/time],metric,unit,simulated,simulated_se,theory,ratio[1],status";

/// Fraction of the density bins averaged for the far-field value.
pub const FAR_FIELD_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Spread,
    Impact,
    Diffusion,
    /// Density in the bin next to the opposite best.
    BoundaryDensity,
    /// Mean density over the outer bins.
    FarDensity,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Spread,
        Metric::Impact,
        Metric::Diffusion,
        Metric::BoundaryDensity,
        Metric::FarDensity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Spread => "spread",
            Metric::Impact => "impact",
            Metric::Diffusion => "diffusion",
            Metric::BoundaryDensity => "boundary_density",
            Metric::FarDensity => "far_density",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::Spread | Metric::Impact => "price",
            Metric::Diffusion => "price^2/time",
            Metric::BoundaryDensity | Metric::FarDensity => "1/price",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Mean-field value: `ε`, `ε/2`, `2(v+μ)³/λ²`, `λ/(v+μ)` and `λ/v`.
    pub fn theory(self, params: &ModelParams) -> f64 {
        let t = theory_metrics(params);
        match self {
            Metric::Spread => t.spread,
            Metric::Impact => t.impact,
            Metric::Diffusion => t.diffusion,
            Metric::BoundaryDensity => params.limit_rate / params.removal_rate(),
            Metric::FarDensity => params.limit_rate / params.cancel_rate,
        }
    }

    /// Simulated value and standard error, if the run produced one.
    pub fn simulated(self, report: &MetricsReport) -> Option<(f64, Option<f64>)> {
        let density = &report.density;
        match self {
            Metric::Spread => report.spread.map(|e| (e.value, Some(e.se))),
            Metric::Impact => report.impact.map(|e| (e.value, Some(e.se))),
            Metric::Diffusion => report.diffusion.map(|d| (d.d, Some(d.se))),
            Metric::BoundaryDensity => density
                .values
                .first()
                .map(|&v| (v, density.se.first().copied())),
            Metric::FarDensity => density.tail_mean(FAR_FIELD_FRACTION).map(|v| (v, None)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    pub metric: Metric,
    pub simulated: Option<f64>,
    pub simulated_se: Option<f64>,
    pub theory: f64,
    /// `ok`, `nonlinear_msd`, `not_estimated`, or `failed: <reason>`.
    pub status: String,
}

impl SweepRow {
    pub fn ratio(&self) -> Option<f64> {
        self.simulated.map(|s| s / self.theory)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_f64(self.mu),
            self.metric.name(),
            self.metric.unit(),
            fmt_opt(self.simulated),
            fmt_opt(self.simulated_se),
            fmt_f64(self.theory),
            fmt_opt(self.ratio()),
            self.status
        )
    }
}

fn rows_for_point(config: &ExperimentConfig) -> Vec<SweepRow> {
    let mu = config.params.market_rate;
    let result = measure(config);
    Metric::ALL
        .iter()
        .map(|&metric| {
            let theory = metric.theory(&config.params);
            let (simulated, simulated_se, status) = match &result {
                Err(e) => (None, None, format!("failed: {}", e.to_string().replace(',', ";"))),
                Ok((report, _)) => match metric.simulated(report) {
                    None => (None, None, "not_estimated".to_string()),
                    Some((v, se)) => {
                        let linear = report.diffusion.map_or(true, |d| d.linear);
                        let status = if metric == Metric::Diffusion && !linear {
                            "nonlinear_msd"
                        } else {
                            "ok"
                        };
                        (Some(v), se, status.to_string())
                    }
                },
            };
            SweepRow {
                mu,
                metric,
                simulated,
                simulated_se,
                theory,
                status,
            }
        })
        .collect()
}

/// Runs every grid point, point `i` with run index `i` under the master seed.
///
/// Rows come back in grid order whatever the number of threads; a failed
/// point yields rows with a `failed` status instead of aborting the sweep.
pub fn sweep_rows(config: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<SweepRow>, CliError> {
    config.validate()?;
    let grid = config
        .sweep
        .ok_or_else(|| CliError::Config("the sweep command needs sweep.mu_min, sweep.mu_max and sweep.points".into()))?;
    let points: Vec<ExperimentConfig> = grid
        .values()
        .into_iter()
        .enumerate()
        .map(|(i, mu)| {
            let mut c = config.with_market_rate(mu);
            c.seed = config.seed.with_run_index(i as u64);
            c
        })
        .collect();
    for p in &points {
        p.params.validate()?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let rows: Vec<Vec<SweepRow>> = pool.install(|| {
        points
            .par_iter()
            .map(|c| {
                log::info!("sweep point mu = {}", c.params.market_rate);
                rows_for_point(c)
            })
            .collect()
    });
    Ok(rows.into_iter().flatten().collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn parse_sweep_csv(text: &str, path: &str) -> Result<Vec<SweepRow>, CliError> {
    let err = |line: usize, message: String| CliError::Parse {
        path: path.to_string(),
        message: format!("line {line}: {message}"),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == SWEEP_CSV_HEADER => {}
        _ => return Err(err(1, format!("expected header `{SWEEP_CSV_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (line, l) in lines.filter(|(_, l)| !l.is_empty()) {
        let f: Vec<&str> = l.splitn(8, ',').collect();
        if f.len() != 8 {
            return Err(err(line, format!("expected 8 fields, got {}", f.len())));
        }
        let metric = Metric::parse(f[1]).ok_or_else(|| err(line, format!("unknown metric `{}`", f[1])))?;
        let num = |i: usize| parse_field(path, line, f[i]);
        rows.push(SweepRow {
            mu: num(0)?.ok_or_else(|| err(line, "missing mu".into()))?,
            metric,
            simulated: num(3)?,
            simulated_se: num(4)?,
            theory: num(5)?.ok_or_else(|| err(line, "missing theory value".into()))?,
            status: f[7].to_string(),
        });
    }
    Ok(rows)
}

/// Mean-field metrics table for each μ on the grid.
pub fn theory_table(params: &ModelParams, mus: &[f64]) -> String {
    let mut out = format!("{THEORY_METRICS_CSV_HEADER}\n");
    for &mu in mus {
        let p = params.with_market_rate(mu);
        out.push_str(&theory_metrics_row(&p, &theory_metrics(&p)));
        out.push('\n');
    }
    out
}

/// Writes `config.txt`, `sweep.csv` and the matching `theory_metrics.csv`.
pub fn cmd_sweep(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<(Vec<SweepRow>, Vec<PathBuf>), CliError> {
    let rows = sweep_rows(config, threads)?;
    let mus: Vec<f64> = config.sweep.map(|g| g.values()).unwrap_or_default();
    let dir = &config.out_dir;
    let files = vec![
        echo_config(config)?,
        write_output(dir, "sweep.csv", &sweep_csv(&rows))?,
        write_output(dir, "theory_metrics.csv", &theory_table(&config.params, &mus))?,
    ];
    Ok((rows, files))
}
