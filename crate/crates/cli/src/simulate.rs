use crate::{echo_config, write_output, CliError, ExperimentConfig};
use santafe_core::{run, EventLog, Estimators, MetricsReport, RunSummary};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

/// One warm-up plus measurement run, without touching the file system.
pub fn measure(config: &ExperimentConfig) -> Result<(MetricsReport, RunSummary), CliError> {
    config.validate()?;
    let mut est = Estimators::new(config.estimator_config());
    let (summary, _) = run(&config.params, config.seed, &config.run_config(), &mut est)?;
    Ok((est.report(&config.params), summary))
}

/// Runs one simulation and writes `config.txt`, `metrics.csv`,
/// `density.csv`, `gaps.csv`, `impact.csv` and optionally `events.csv` to
/// the output directory. Returns the report and the paths written.
pub fn cmd_simulate(
    config: &ExperimentConfig,
    event_log: bool,
) -> Result<(MetricsReport, Vec<PathBuf>), CliError> {
    config.validate()?;
    let dir = &config.out_dir;
    let mut files = vec![echo_config(config)?];
    let report = if event_log {
        let path = dir.join("events.csv");
        let io = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let log = EventLog::new(BufWriter::new(File::create(&path).map_err(io)?)).map_err(io)?;
        let mut observers = (Estimators::new(config.estimator_config()), log);
        let result = run(&config.params, config.seed, &config.run_config(), &mut observers);
        let (est, log) = observers;
        log.finish().map_err(io)?;
        files.push(path.clone());
        result?;
        est.report(&config.params)
    } else {
        measure(config)?.0
    };
    files.push(write_output(dir, "metrics.csv", &report.metrics_csv())?);
    files.push(write_output(dir, "density.csv", &report.density_csv())?);
    files.push(write_output(dir, "gaps.csv", &report.gaps_csv())?);
    files.push(write_output(dir, "impact.csv", &report.impact_csv())?);
    log::info!(
        "{} events, {} snapshots over {} time units",
        report.counts.events,
        report.counts.snapshots,
        report.measure_time
    );
    Ok((report, files))
}
